#include "vfocus/regions.hpp"

#include <algorithm>
#include <unordered_map>

#include "vfocus/errors.hpp"
#include "vfocus/image.hpp"

namespace vfocus {

RegionPartition RegionPartition::from_labels(std::size_t width, std::size_t height,
                                             std::span<const std::uint32_t> raw_labels) {
  if (raw_labels.size() != width * height)
    throw InvalidInput("label count " + std::to_string(raw_labels.size()) +
                       " does not match " + std::to_string(width) + "x" +
                       std::to_string(height));
  std::vector<std::uint32_t> labels(raw_labels.size());
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    const std::uint32_t raw = raw_labels[i];
    if (raw == 0) continue;
    auto it = remap.try_emplace(raw, static_cast<std::uint32_t>(remap.size() + 1)).first;
    labels[i] = it->second;
  }
  RegionPartition p;
  p.width_ = width;
  p.height_ = height;
  p.labels_ = std::move(labels);
  p.areas_.assign(remap.size(), 0);
  p.compute_areas();
  return p;
}

RegionPartition RegionPartition::from_contiguous_labels(std::size_t width, std::size_t height,
                                                        std::vector<std::uint32_t> labels) {
  if (labels.size() != width * height)
    throw InvalidInput("label count does not match image size");
  const std::uint32_t max = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  RegionPartition p;
  p.width_ = width;
  p.height_ = height;
  p.labels_ = std::move(labels);
  p.areas_.assign(max, 0);
  p.compute_areas();
  if (std::find(p.areas_.begin(), p.areas_.end(), 0u) != p.areas_.end())
    throw InvalidInput("region labels are not contiguous");
  return p;
}

void RegionPartition::compute_areas() {
  unsegmented_ = 0;
  std::fill(areas_.begin(), areas_.end(), 0);
  for (std::uint32_t l : labels_) {
    if (l == 0)
      ++unsegmented_;
    else
      ++areas_[l - 1];
  }
  const double total = static_cast<double>(labels_.size());
  fractions_.clear();
  fractions_.reserve(areas_.size());
  for (std::size_t a : areas_) fractions_.push_back(static_cast<double>(a) / total);
}

double RegionPartition::state_area(const StateVector& state) const {
  if (state.size() != region_count()) throw InvalidInput("state length does not match region count");
  double sum = 0.0;
  for (std::size_t i = 0; i < fractions_.size(); ++i)
    if (state.raw()[i]) sum += fractions_[i];
  return sum;
}

RegionPartition load_label_map(const std::filesystem::path& path) {
  const GrayImage gray = read_gray_png(path);
  std::vector<std::uint32_t> raw(gray.values.begin(), gray.values.end());
  RegionPartition p = RegionPartition::from_labels(gray.width, gray.height, raw);
  if (p.region_count() == 0) throw InvalidInput(path.string() + " contains no regions");
  return p;
}

RegionPartition merge_small_regions(const RegionPartition& partition, double min_area_fraction) {
  if (!(min_area_fraction >= 0.0 && min_area_fraction < 1.0))
    throw InvalidInput("merge threshold must lie in [0, 1)");

  const std::size_t m = partition.region_count();
  std::vector<bool> folded(m + 1, false);
  folded[0] = true;
  for (std::size_t r = 1; r <= m; ++r) folded[r] = partition.area_fraction(r) < min_area_fraction;

  // Kept regions retain their relative order; the merged region takes the next index.
  std::vector<std::uint32_t> target(m + 1, 0);
  std::uint32_t next = 1;
  for (std::size_t r = 1; r <= m; ++r)
    if (!folded[r]) target[r] = next++;
  const std::uint32_t merged = next;

  std::vector<std::uint32_t> out(partition.pixel_count());
  const auto labels = partition.labels();
  bool any_folded = false;
  for (std::size_t i = 0; i < out.size(); ++i) {
    any_folded = any_folded || folded[labels[i]];
    out[i] = folded[labels[i]] ? merged : target[labels[i]];
  }
  if (!any_folded) return partition;
  return RegionPartition::from_contiguous_labels(partition.width(), partition.height(),
                                                 std::move(out));
}

GroundTruthMaskSet load_ground_truth(std::span<const std::filesystem::path> paths) {
  GroundTruthMaskSet gt;
  for (const auto& path : paths) {
    const GrayImage gray = read_gray_png(path);
    if (gt.masks.empty()) {
      gt.width = gray.width;
      gt.height = gray.height;
    } else if (gray.width != gt.width || gray.height != gt.height) {
      throw InvalidInput(path.string() + " has different dimensions from earlier masks");
    }
    if (gray.bit_depth == 16) {
      std::vector<std::uint16_t> ids;
      for (std::uint16_t v : gray.values)
        if (v != 0 && std::find(ids.begin(), ids.end(), v) == ids.end()) ids.push_back(v);
      std::sort(ids.begin(), ids.end());
      for (std::uint16_t id : ids) {
        std::vector<bool> mask(gray.values.size());
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = gray.values[i] == id;
        gt.masks.push_back(std::move(mask));
      }
    } else {
      std::vector<bool> mask(gray.values.size());
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = gray.values[i] != 0;
      gt.masks.push_back(std::move(mask));
    }
  }
  return gt;
}

StateVector ground_truth_state(const RegionPartition& partition, const GroundTruthMaskSet& gt,
                               double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw InvalidInput("IoU threshold must lie in (0, 1]");
  if (gt.masks.empty()) throw InvalidInput("ground-truth mask set is empty");
  if (gt.width != partition.width() || gt.height != partition.height())
    throw InvalidInput("ground-truth masks and partition differ in size");

  const std::size_t m = partition.region_count();
  const auto labels = partition.labels();
  StateVector state(m);
  std::vector<std::size_t> intersection(m + 1);
  for (const auto& mask : gt.masks) {
    if (mask.size() != labels.size()) throw InvalidInput("ground-truth mask has wrong pixel count");
    std::fill(intersection.begin(), intersection.end(), 0);
    std::size_t mask_area = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!mask[i]) continue;
      ++mask_area;
      ++intersection[labels[i]];
    }
    for (std::size_t r = 1; r <= m; ++r) {
      const std::size_t uni = partition.area(r) + mask_area - intersection[r];
      if (uni == 0) continue;
      const double iou = static_cast<double>(intersection[r]) / static_cast<double>(uni);
      if (iou >= iou_threshold) state.set(r);
    }
  }
  return state;
}

double mask_iou(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size()) throw InvalidInput("mask size mismatch");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] && b[i];
    uni += a[i] || b[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace vfocus
