#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "vfocus/image.hpp"

namespace vfocus::testing {

namespace fs = std::filesystem;

RegionPartition strip_partition(std::span<const std::size_t> areas) {
  std::vector<std::uint32_t> labels;
  for (std::size_t i = 0; i < areas.size(); ++i)
    labels.insert(labels.end(), areas[i], static_cast<std::uint32_t>(i + 1));
  const std::size_t width = labels.size();
  return RegionPartition::from_contiguous_labels(width, 1, std::move(labels));
}

Rgb region_color(std::size_t region) {
  // Spread hues; never (128,128,128) and never equal for different regions below 4096.
  return {static_cast<std::uint8_t>(17 + (region * 37) % 200),
          static_cast<std::uint8_t>((region * 91) % 251),
          static_cast<std::uint8_t>(region / 251 + 3 * (region % 7))};
}

RgbImage paint_regions(const RegionPartition& partition) {
  RgbImage image(partition.width(), partition.height());
  for (std::size_t i = 0; i < partition.pixel_count(); ++i)
    image.set(i, region_color(partition.label(i)));
  return image;
}

Scene strip_scene(std::span<const std::size_t> areas, std::string id) {
  Scene scene;
  scene.id = std::move(id);
  scene.partition = strip_partition(areas);
  scene.image = paint_regions(scene.partition);
  return scene;
}

namespace {

LogicExpr random_node(std::mt19937_64& rng, const std::vector<std::size_t>& pool, int depth) {
  std::uniform_int_distribution<int> kind(0, depth <= 0 ? 0 : 2);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const int k = kind(rng);
  if (k == 0) return LogicExpr::literal(pool[pick(rng)]);
  std::uniform_int_distribution<int> arity(2, 3);
  std::vector<LogicExpr> children;
  const int n = arity(rng);
  for (int i = 0; i < n; ++i) children.push_back(random_node(rng, pool, depth - 1));
  return k == 1 ? LogicExpr::conjunction(std::move(children))
                : LogicExpr::disjunction(std::move(children));
}

}  // namespace

LogicExpr random_formula(std::mt19937_64& rng, std::size_t m) {
  std::vector<std::size_t> pool;
  for (std::size_t r = 1; r <= m; ++r) pool.push_back(r);
  std::uniform_int_distribution<int> d(0, 9);
  if (d(rng) == 0) return LogicExpr::truth();
  return random_node(rng, pool, 3);
}

LogicExpr core_formula(std::mt19937_64& rng, std::size_t m) {
  std::vector<std::size_t> all;
  for (std::size_t r = 1; r <= m; ++r) all.push_back(r);
  std::shuffle(all.begin(), all.end(), rng);
  std::uniform_int_distribution<std::size_t> size(2, std::min<std::size_t>(4, m));
  all.resize(size(rng));
  return random_node(rng, all, 2);
}

std::vector<std::size_t> random_areas(std::mt19937_64& rng, std::size_t m, std::size_t lo,
                                      std::size_t hi) {
  std::uniform_int_distribution<std::size_t> a(lo, hi);
  std::vector<std::size_t> out(m);
  for (auto& v : out) v = a(rng);
  return out;
}

TablePredictor::TablePredictor(std::uint64_t seed, double keep_probability)
    : seed_(seed), keep_(keep_probability) {}

Label TablePredictor::predict(const Query& query) {
  const StateVector& s = *query.state;
  if (s.count() == s.size()) return Label("ref");
  std::mt19937_64 rng(seed_ ^ std::hash<StateVector>{}(s));
  return std::bernoulli_distribution(keep_)(rng) ? Label("ref") : Label("changed");
}

TempDir::TempDir(const std::string& prefix) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  for (;;) {
    path_ = fs::temp_directory_path() /
            (prefix + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    if (fs::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

using LabelFn = std::function<std::uint16_t(std::size_t x, std::size_t y)>;

GrayImage label_image(std::size_t w, std::size_t h, const LabelFn& fn) {
  GrayImage g{w, h, 16, {}};
  g.values.resize(w * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) g.values[y * w + x] = fn(x, y);
  return g;
}

void write_labels_and_image(const fs::path& dir, const std::string& stem, const GrayImage& labels) {
  write_gray_png(dir / (stem + "_labels.png"), labels);
  // Paint by the *normalized* region ids so colours follow the engine's numbering.
  std::vector<std::uint32_t> raw(labels.values.begin(), labels.values.end());
  const auto partition = RegionPartition::from_labels(labels.width, labels.height, raw);
  RgbImage image(labels.width, labels.height);
  for (std::size_t i = 0; i < partition.pixel_count(); ++i)
    image.set(i, region_color(partition.label(i) + 10));
  write_rgb_png(dir / (stem + ".png"), image);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

}  // namespace

fs::path write_fixture_corpus(const fs::path& dir) {
  fs::create_directories(dir);
  // Shared formula: region 1 plus either region 2 or 3.
  const LogicExpr formula = LogicExpr::conjunction(
      {LogicExpr::literal(1), LogicExpr::disjunction({LogicExpr::literal(2), LogicExpr::literal(3)})});
  write_text(dir / "formula.json", to_json(formula));

  nlohmann::json manifest = nlohmann::json::array();

  // quads: 8x8, four 4x4 quadrants; one 8-bit mask equal to quadrant 1.
  {
    const auto labels = label_image(8, 8, [](std::size_t x, std::size_t y) {
      return static_cast<std::uint16_t>(1 + (x >= 4) + 2 * (y >= 4));
    });
    write_labels_and_image(dir, "quads", labels);
    GrayImage gt{8, 8, 8, std::vector<std::uint16_t>(64, 0)};
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) gt.values[y * 8 + x] = 255;
    write_gray_png(dir / "quads_gt.png", gt);
    manifest.push_back({{"image", "quads.png"}, {"labels", "quads_labels.png"}, {"gt", {"quads_gt.png"}}});
  }
  // stripes: 12x6, six vertical stripes of widths 1,1,2,2,3,3 (ids 10..60); 16-bit gt map
  // naming stripes 1 and 2 separately.
  {
    const std::size_t bounds[] = {1, 2, 4, 6, 9, 12};
    auto stripe = [&](std::size_t x) {
      std::size_t s = 0;
      while (x >= bounds[s]) ++s;
      return s;
    };
    const auto labels = label_image(12, 6, [&](std::size_t x, std::size_t) {
      return static_cast<std::uint16_t>(10 * (stripe(x) + 1));
    });
    write_labels_and_image(dir, "stripes", labels);
    const auto gt = label_image(12, 6, [&](std::size_t x, std::size_t) {
      const std::size_t s = stripe(x);
      return static_cast<std::uint16_t>(s == 0 ? 7 : s == 1 ? 9 : 0);
    });
    write_gray_png(dir / "stripes_gt.png", gt);
    manifest.push_back(
        {{"image", "stripes.png"}, {"labels", "stripes_labels.png"}, {"gt", {"stripes_gt.png"}}});
  }
  // rings: 10x10 concentric squares (5 regions) plus a few unsegmented pixels in a corner.
  {
    const auto labels = label_image(10, 10, [](std::size_t x, std::size_t y) {
      if (x == 9 && y == 9) return std::uint16_t{0};
      const std::size_t d = std::min(std::min(x, y), std::min(9 - x, 9 - y));
      return static_cast<std::uint16_t>(d + 1);
    });
    write_labels_and_image(dir, "rings", labels);
    // Masks for rings 2 and 3.
    const auto gt = label_image(10, 10, [](std::size_t x, std::size_t y) {
      const std::size_t d = std::min(std::min(x, y), std::min(9 - x, 9 - y));
      return static_cast<std::uint16_t>(d == 1 ? 2 : d == 2 ? 3 : 0);
    });
    write_gray_png(dir / "rings_gt.png", gt);
    manifest.push_back({{"image", "rings.png"}, {"labels", "rings_labels.png"}, {"gt", {"rings_gt.png"}}});
  }
  write_text(dir / "manifest.json", manifest.dump(2));
  return dir / "manifest.json";
}

QuadFixture write_quad_fixture(const fs::path& dir, const LogicExpr& formula,
                               std::span<const std::size_t> gt_regions) {
  fs::create_directories(dir);
  const auto labels = label_image(8, 8, [](std::size_t x, std::size_t y) {
    return static_cast<std::uint16_t>(1 + (x >= 4) + 2 * (y >= 4));
  });
  write_labels_and_image(dir, "quad", labels);
  GrayImage gt{8, 8, 16, std::vector<std::uint16_t>(64, 0)};
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t r : gt_regions)
      if (labels.values[i] == r) gt.values[i] = static_cast<std::uint16_t>(r);
  write_gray_png(dir / "quad_gt.png", gt);
  write_text(dir / "quad_formula.json", to_json(formula));
  return {dir / "quad.png", dir / "quad_labels.png", dir / "quad_gt.png", dir / "quad_formula.json"};
}

}  // namespace vfocus::testing
