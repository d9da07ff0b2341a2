#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfocus/regions.hpp"
#include "vfocus/state.hpp"

namespace vfocus {

struct BehaviorThresholds {
  double precision_high = 0.5;
  double recall_high = 0.5;
  double divergence_high = 0.05;

  /// "p,r,d"
  static BehaviorThresholds parse(std::string_view text);
};

enum class BehaviorClass { Holistic, Compositional, Narrow, Distracted, Misled, Unclassified };

std::string_view to_string(BehaviorClass behavior) noexcept;

// Flags attached to metric reports.
inline constexpr std::string_view kFlagEmptyState = "empty_state";
inline constexpr std::string_view kFlagNoGroundTruth = "no_ground_truth_match";
inline constexpr std::string_view kFlagDistractedLowDivergence = "distracted_low_divergence";

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double divergence = 0.0;
  std::size_t state_count = 0;
  std::vector<std::string> flags;
};

/// Mean over states of area(v & gt) / area(v). Empty states contribute 0 and set
/// kFlagEmptyState in `flags` when given.
double precision(std::span<const StateVector> states, const StateVector& ground_truth,
                 std::span<const double> area_fractions,
                 std::vector<std::string>* flags = nullptr);

/// Mean over states of area(v & gt) / area(gt). Zero-area ground truth yields 0 and sets
/// kFlagNoGroundTruth.
double recall(std::span<const StateVector> states, const StateVector& ground_truth,
              std::span<const double> area_fractions, std::vector<std::string>* flags = nullptr);

/// Sum over regions of area_fraction_i * population variance of {v_i : v in V}.
double divergence(std::span<const StateVector> states, std::span<const double> area_fractions);

/// All three metrics. Throws InvalidInput when `states` is empty or lengths disagree.
MetricsReport evaluate(std::span<const StateVector> states, const StateVector& ground_truth,
                       const RegionPartition& partition);

/// High means >= the threshold, for all three axes.
BehaviorClass classify(const MetricsReport& metrics, const BehaviorThresholds& thresholds = {});

/// Arithmetic mean of per-image metrics; flags are the sorted union.
MetricsReport average(std::span<const MetricsReport> reports);

}  // namespace vfocus
