#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vfocus/composer.hpp"
#include "vfocus/errors.hpp"
#include "vfocus/image.hpp"
#include "vfocus/predictor.hpp"
#include "vfocus/regions.hpp"
#include "vfocus/state.hpp"

namespace vfocus {

/// An image together with its region partition. `id` keys the prediction cache.
struct Scene {
  std::string id;
  RgbImage image;
  RegionPartition partition;
};

enum class BeamScope {
  PerRound,   // at most k states survive each round, across all parents
  PerParent,  // at most k children survive per parent
};

enum class CandidateOrder {
  LargestPrunedArea,  // prefer removing large regions; ties by region index
  RegionIndex,        // lowest removed region index first
};

struct RefinementConfig {
  std::optional<std::size_t> beam_size;  // nullopt = unlimited
  BeamScope beam_scope = BeamScope::PerRound;
  CandidateOrder candidate_order = CandidateOrder::LargestPrunedArea;
  std::size_t max_queries = 50'000;
  /// Candidates composed and sent per predict_batch call.
  std::size_t batch_size = 64;
};

struct FinalStateSet {
  std::vector<StateVector> states;  // deduplicated, canonical order
  Label reference_label;
  std::size_t query_count = 0;
  std::optional<std::size_t> beam_size;
  bool partial = false;
};

/// Raised when max_queries would be exceeded. Holds the finals found so far, flagged partial.
class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(FinalStateSet partial_result);
  const FinalStateSet& partial_result() const noexcept { return partial_; }

 private:
  FinalStateSet partial_;
};

/// Breadth-first region pruning from the all-preserved state.
///
/// Each round removes one preserved region from every live state, validates every new
/// candidate against f(I) in batches, and keeps the valid ones as the next frontier. A live
/// state whose single-removal children are all invalid is final. States reached along
/// different removal orders are validated once. With a bounded beam the frontier is trimmed
/// per `beam_scope` / `candidate_order`, so the result is a subset of the unlimited one.
FinalStateSet refine(const Scene& scene, Predictor& model, const FillPolicy& fill,
                     const RefinementConfig& config = {});

inline constexpr std::size_t kDefaultOracleLimit = 16;

/// Queries all 2^M states and extracts the valid, all-valid-chain reachable states that have no
/// valid single-removal child. Throws InvalidInput when M exceeds `region_limit`.
FinalStateSet brute_force_final_states(const Scene& scene, Predictor& model,
                                       const FillPolicy& fill,
                                       std::size_t region_limit = kDefaultOracleLimit);

/// Returns the composed image for `state` or nothing when the model reads states directly.
std::optional<RgbImage> render_query_image(const Scene& scene, const Predictor& model,
                                           const StateVector& state, const FillPolicy& fill);

/// {"reference_label": "...", "beam_size": k|null, "query_count": n, "states": [[1,3], ...]}
/// A "partial": true member is added only for partial results.
std::string to_json(const FinalStateSet& set);
FinalStateSet final_states_from_json(std::string_view text, std::size_t region_count);

}  // namespace vfocus
