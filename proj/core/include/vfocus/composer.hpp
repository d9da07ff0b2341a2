#pragma once

#include <string>
#include <string_view>

#include "vfocus/image.hpp"
#include "vfocus/regions.hpp"
#include "vfocus/state.hpp"

namespace vfocus {

struct FillPolicy {
  enum class Mode { ConstantColor, PerImageMean };

  Mode mode = Mode::ConstantColor;
  Rgb color{128, 128, 128};

  static FillPolicy gray() { return {}; }
  static FillPolicy constant(Rgb c) { return {Mode::ConstantColor, c}; }
  static FillPolicy image_mean() { return {Mode::PerImageMean, {}}; }

  /// Accepts "gray", "mean" or "#RRGGBB".
  static FillPolicy parse(std::string_view text);
  /// Inverse of parse.
  std::string describe() const;

  friend bool operator==(const FillPolicy&, const FillPolicy&) = default;
};

/// Per-channel mean of the whole image, rounded to nearest.
Rgb mean_color(const RgbImage& image);

/// Colour written into pruned regions of `image`.
Rgb resolve_fill(const RgbImage& image, const FillPolicy& fill);

/// I[v]: pixels of pruned regions replaced by the fill colour, everything else copied.
RgbImage compose(const RgbImage& image, const RegionPartition& partition,
                 const StateVector& state, const FillPolicy& fill);

}  // namespace vfocus
