#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vfocus/logic.hpp"
#include "vfocus/predictor.hpp"
#include "vfocus/refine.hpp"
#include "vfocus/regions.hpp"

namespace vfocus {

// Readable gtest failure output.
inline void PrintTo(const StateVector& s, std::ostream* os) { *os << s.bits(); }
inline void PrintTo(const Label& l, std::ostream* os) { *os << '"' << l.value() << '"'; }

}  // namespace vfocus

namespace vfocus::testing {

/// Single-row partition: region i+1 covers areas[i] consecutive pixels.
RegionPartition strip_partition(std::span<const std::size_t> areas);

/// Distinct, non-gray colour per region index.
Rgb region_color(std::size_t region);

/// Image painted with region_color for each pixel's region.
RgbImage paint_regions(const RegionPartition& partition);

Scene strip_scene(std::span<const std::size_t> areas, std::string id = "strip");

/// Random monotone AND/OR formula over regions 1..m (at most depth 3).
LogicExpr random_formula(std::mt19937_64& rng, std::size_t m);

/// Formula over a small random "object" core of 2-4 regions; all others are irrelevant.
LogicExpr core_formula(std::mt19937_64& rng, std::size_t m);

/// Random pixel counts in [lo, hi].
std::vector<std::size_t> random_areas(std::mt19937_64& rng, std::size_t m, std::size_t lo = 1,
                                      std::size_t hi = 50);

/// Labels drawn independently per state: validity is not monotone.
class TablePredictor : public Predictor {
 public:
  TablePredictor(std::uint64_t seed, double keep_probability);
  Label predict(const Query& query) override;
  bool needs_pixels() const override { return false; }

 private:
  std::uint64_t seed_;
  double keep_;
};

/// Fresh empty directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "vfocus");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct FixtureImage {
  std::string name;               // file stem
  std::vector<std::size_t> focus;  // regions forming the ground-truth object
  LogicExpr formula;
};

/// Writes a corpus of 2-D fixtures (image, 16-bit labels, 8-bit gt mask, formula JSON) plus
/// `manifest.json`. Every fixture uses the same formula file so one synthetic model serves
/// the whole corpus. Returns the manifest path.
std::filesystem::path write_fixture_corpus(const std::filesystem::path& dir);

/// Writes one 8x8 fixture with four quadrant regions; returns {image, labels, gt, formula}.
struct QuadFixture {
  std::filesystem::path image;
  std::filesystem::path labels;
  std::filesystem::path gt;
  std::filesystem::path formula;
};
QuadFixture write_quad_fixture(const std::filesystem::path& dir, const LogicExpr& formula,
                               std::span<const std::size_t> gt_regions);

}  // namespace vfocus::testing
