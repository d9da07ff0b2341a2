#include "vfocus/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "vfocus/errors.hpp"

namespace vfocus {

namespace {

void check_lengths(std::span<const StateVector> states, std::size_t m) {
  if (states.empty()) throw InvalidInput("metrics need at least one final state");
  for (const auto& s : states)
    if (s.size() != m) throw InvalidInput("state length does not match the region count");
}

double area_of(const StateVector& s, std::span<const double> fractions) {
  double sum = 0.0;
  for (std::size_t i = 0; i < fractions.size(); ++i)
    if (s.raw()[i]) sum += fractions[i];
  return sum;
}

void add_flag(std::vector<std::string>* flags, std::string_view flag) {
  if (!flags) return;
  if (std::find(flags->begin(), flags->end(), flag) == flags->end()) flags->emplace_back(flag);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidInput("not a number: '" + std::string(text) + "'");
  return value;
}

}  // namespace

BehaviorThresholds BehaviorThresholds::parse(std::string_view text) {
  std::vector<double> values;
  while (true) {
    const auto comma = text.find(',');
    values.push_back(parse_double(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (values.size() != 3) throw InvalidInput("thresholds must be given as p,r,d");
  for (double v : values)
    if (!(v > 0.0)) throw InvalidInput("thresholds must be positive");
  return {values[0], values[1], values[2]};
}

std::string_view to_string(BehaviorClass behavior) noexcept {
  switch (behavior) {
    case BehaviorClass::Holistic: return "Holistic";
    case BehaviorClass::Compositional: return "Compositional";
    case BehaviorClass::Narrow: return "Narrow";
    case BehaviorClass::Distracted: return "Distracted";
    case BehaviorClass::Misled: return "Misled";
    case BehaviorClass::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

double precision(std::span<const StateVector> states, const StateVector& ground_truth,
                 std::span<const double> area_fractions, std::vector<std::string>* flags) {
  check_lengths(states, area_fractions.size());
  if (ground_truth.size() != area_fractions.size()) throw InvalidInput("ground-truth length mismatch");
  double sum = 0.0;
  for (const auto& v : states) {
    const double area = area_of(v, area_fractions);
    if (area == 0.0) {
      add_flag(flags, kFlagEmptyState);
      continue;
    }
    sum += area_of(v.intersect(ground_truth), area_fractions) / area;
  }
  return sum / static_cast<double>(states.size());
}

double recall(std::span<const StateVector> states, const StateVector& ground_truth,
              std::span<const double> area_fractions, std::vector<std::string>* flags) {
  check_lengths(states, area_fractions.size());
  if (ground_truth.size() != area_fractions.size()) throw InvalidInput("ground-truth length mismatch");
  const double gt_area = area_of(ground_truth, area_fractions);
  if (gt_area == 0.0) {
    add_flag(flags, kFlagNoGroundTruth);
    return 0.0;
  }
  double sum = 0.0;
  for (const auto& v : states) sum += area_of(v.intersect(ground_truth), area_fractions) / gt_area;
  return sum / static_cast<double>(states.size());
}

double divergence(std::span<const StateVector> states, std::span<const double> area_fractions) {
  check_lengths(states, area_fractions.size());
  const double n = static_cast<double>(states.size());
  double total = 0.0;
  for (std::size_t i = 0; i < area_fractions.size(); ++i) {
    std::size_t ones = 0;
    for (const auto& v : states) ones += v.raw()[i];
    // Population variance of a 0/1 sample: p(1-p).
    const double p = static_cast<double>(ones) / n;
    total += area_fractions[i] * p * (1.0 - p);
  }
  return total;
}

MetricsReport evaluate(std::span<const StateVector> states, const StateVector& ground_truth,
                       const RegionPartition& partition) {
  MetricsReport report;
  const auto fractions = partition.area_fractions();
  report.precision = precision(states, ground_truth, fractions, &report.flags);
  report.recall = recall(states, ground_truth, fractions, &report.flags);
  report.divergence = divergence(states, fractions);
  report.state_count = states.size();
  return report;
}

BehaviorClass classify(const MetricsReport& metrics, const BehaviorThresholds& thresholds) {
  const bool p_high = metrics.precision >= thresholds.precision_high;
  const bool r_high = metrics.recall >= thresholds.recall_high;
  const bool d_high = metrics.divergence >= thresholds.divergence_high;
  if (!p_high) return r_high ? BehaviorClass::Distracted : BehaviorClass::Misled;
  if (r_high) return d_high ? BehaviorClass::Unclassified : BehaviorClass::Holistic;
  return d_high ? BehaviorClass::Compositional : BehaviorClass::Narrow;
}

MetricsReport average(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw InvalidInput("cannot average zero reports");
  MetricsReport out;
  std::set<std::string> flags;
  for (const auto& r : reports) {
    out.precision += r.precision;
    out.recall += r.recall;
    out.divergence += r.divergence;
    out.state_count += r.state_count;
    flags.insert(r.flags.begin(), r.flags.end());
  }
  const double n = static_cast<double>(reports.size());
  out.precision /= n;
  out.recall /= n;
  out.divergence /= n;
  out.flags.assign(flags.begin(), flags.end());
  return out;
}

}  // namespace vfocus
