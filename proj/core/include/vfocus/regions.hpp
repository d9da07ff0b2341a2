#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vfocus/state.hpp"

namespace vfocus {

inline constexpr double kDefaultMergeThreshold = 1e-3;
inline constexpr double kDefaultIouThreshold = 0.7;

/// Per-pixel region labelling of an image. Label 0 marks unsegmented pixels, 1..M are regions.
///
/// Immutable once built. Labels are always normalized: region ids are contiguous and numbered
/// in order of first appearance in a row-major scan.
class RegionPartition {
 public:
  RegionPartition() = default;

  /// Normalizes arbitrary label values. Throws InvalidInput when the label count mismatches.
  static RegionPartition from_labels(std::size_t width, std::size_t height,
                                     std::span<const std::uint32_t> raw_labels);

  /// Keeps the given numbering. Every id in 1..max must occur; throws InvalidInput otherwise.
  static RegionPartition from_contiguous_labels(std::size_t width, std::size_t height,
                                                std::vector<std::uint32_t> labels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return labels_.size(); }
  std::size_t region_count() const noexcept { return areas_.size(); }

  std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  std::uint32_t label(std::size_t pixel) const { return labels_[pixel]; }

  std::size_t area(std::size_t region) const { return areas_.at(region - 1); }
  double area_fraction(std::size_t region) const { return fractions_.at(region - 1); }
  std::span<const std::size_t> areas() const noexcept { return areas_; }
  std::span<const double> area_fractions() const noexcept { return fractions_; }
  std::size_t unsegmented_count() const noexcept { return unsegmented_; }

  /// Summed area fraction of the regions preserved in `state`.
  double state_area(const StateVector& state) const;

  friend bool operator==(const RegionPartition&, const RegionPartition&) = default;

 private:
  void compute_areas();

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint32_t> labels_;
  std::vector<std::size_t> areas_;
  std::vector<double> fractions_;
  std::size_t unsegmented_ = 0;
};

/// Binary masks with the partition's dimensions.
struct GroundTruthMaskSet {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::vector<bool>> masks;
};

/// Loads a single-channel 8/16-bit PNG label map.
RegionPartition load_label_map(const std::filesystem::path& path);

/// Folds every region below `min_area_fraction`, plus all unsegmented pixels, into one new
/// region with the highest index. Afterwards no pixel carries label 0.
RegionPartition merge_small_regions(const RegionPartition& partition, double min_area_fraction);

/// Reads masks from files. An 8-bit PNG is one mask (nonzero = foreground); a 16-bit PNG is a
/// label map contributing one mask per distinct nonzero value.
GroundTruthMaskSet load_ground_truth(std::span<const std::filesystem::path> paths);

double mask_iou(const std::vector<bool>& a, const std::vector<bool>& b);

/// Marks region i when its pixels reach `iou_threshold` IoU with at least one mask.
StateVector ground_truth_state(const RegionPartition& partition, const GroundTruthMaskSet& gt,
                               double iou_threshold = kDefaultIouThreshold);

}  // namespace vfocus
