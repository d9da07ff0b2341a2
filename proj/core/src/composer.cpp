#include "vfocus/composer.hpp"

#include <cstdio>

#include "vfocus/errors.hpp"

namespace vfocus {

FillPolicy FillPolicy::parse(std::string_view text) {
  if (text == "gray" || text == "grey") return gray();
  if (text == "mean") return image_mean();
  if (text.size() == 7 && text[0] == '#') {
    unsigned r = 0, g = 0, b = 0;
    const std::string hex(text.substr(1));
    if (hex.find_first_not_of("0123456789abcdefABCDEF") == std::string::npos &&
        std::sscanf(hex.c_str(), "%02x%02x%02x", &r, &g, &b) == 3)
      return constant({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                       static_cast<std::uint8_t>(b)});
  }
  throw InvalidInput("fill must be gray, mean or #RRGGBB, got '" + std::string(text) + "'");
}

std::string FillPolicy::describe() const {
  if (mode == Mode::PerImageMean) return "mean";
  if (*this == gray()) return "gray";
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", color.r, color.g, color.b);
  return buf;
}

Rgb mean_color(const RgbImage& image) {
  if (image.empty()) throw InvalidInput("mean colour of an empty image");
  std::uint64_t sum[3] = {0, 0, 0};
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const Rgb c = image.at(i);
    sum[0] += c.r;
    sum[1] += c.g;
    sum[2] += c.b;
  }
  const std::uint64_t n = image.pixel_count();
  auto rounded = [n](std::uint64_t s) { return static_cast<std::uint8_t>((2 * s + n) / (2 * n)); };
  return {rounded(sum[0]), rounded(sum[1]), rounded(sum[2])};
}

Rgb resolve_fill(const RgbImage& image, const FillPolicy& fill) {
  return fill.mode == FillPolicy::Mode::PerImageMean ? mean_color(image) : fill.color;
}

RgbImage compose(const RgbImage& image, const RegionPartition& partition,
                 const StateVector& state, const FillPolicy& fill) {
  if (image.width() != partition.width() || image.height() != partition.height())
    throw InvalidInput("image and partition dimensions differ");
  if (state.size() != partition.region_count())
    throw InvalidInput("state length " + std::to_string(state.size()) + " does not match " +
                       std::to_string(partition.region_count()) + " regions");

  const Rgb fill_color = resolve_fill(image, fill);
  RgbImage out = image;
  const auto labels = partition.labels();
  const auto& bits = state.raw();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint32_t l = labels[i];
    // Unsegmented pixels belong to no region and are never touched.
    if (l != 0 && !bits[l - 1]) out.set(i, fill_color);
  }
  return out;
}

}  // namespace vfocus
