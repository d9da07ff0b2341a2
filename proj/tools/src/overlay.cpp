#include "vfocus/cli/commands.hpp"
#include "vfocus/errors.hpp"

namespace vfocus::cli {

namespace {

std::uint8_t blend(std::uint8_t base, std::uint8_t tint) {
  return static_cast<std::uint8_t>((55 * base + 45 * tint + 50) / 100);
}

std::uint8_t dim(std::uint8_t base) { return static_cast<std::uint8_t>((35 * base + 50) / 100); }

}  // namespace

RgbImage render_overlay(const RgbImage& image, const RegionPartition& partition,
                        std::span<const StateVector> states) {
  if (image.width() != partition.width() || image.height() != partition.height())
    throw InvalidInput("image and partition dimensions differ");
  const std::size_t m = partition.region_count();
  StateVector shared = StateVector::all(m);
  StateVector any(m);
  for (const auto& s : states) {
    if (s.size() != m) throw InvalidInput("state length does not match the region count");
    shared = shared.intersect(s);
    for (std::size_t r : s.regions()) any.set(r);
  }
  if (states.empty()) shared = StateVector::none(m);

  RgbImage out = image;
  const auto labels = partition.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Rgb c = image.at(i);
    const std::uint32_t l = labels[i];
    if (l != 0 && shared.preserved(l)) {
      out.set(i, {blend(c.r, 255), blend(c.g, 0), blend(c.b, 0)});
    } else if (l != 0 && any.preserved(l)) {
      out.set(i, {blend(c.r, 255), blend(c.g, 255), blend(c.b, 255)});
    } else {
      out.set(i, {dim(c.r), dim(c.g), dim(c.b)});
    }
  }
  return out;
}

}  // namespace vfocus::cli
