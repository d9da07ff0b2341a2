#include "vfocus/refine.hpp"

#include <algorithm>
#include <cstdint>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace vfocus {

BudgetExceeded::BudgetExceeded(FinalStateSet partial_result)
    : Error("query budget of " + std::to_string(partial_result.query_count) +
            " exhausted before refinement finished"),
      partial_(std::move(partial_result)) {
  partial_.partial = true;
}

std::optional<RgbImage> render_query_image(const Scene& scene, const Predictor& model,
                                           const StateVector& state, const FillPolicy& fill) {
  if (!model.needs_pixels()) return std::nullopt;
  return compose(scene.image, scene.partition, state, fill);
}

namespace {

struct OutOfBudget {};

/// Sends states to the model in fixed-size batches and counts queries.
class StateEvaluator {
 public:
  StateEvaluator(const Scene& scene, Predictor& model, const FillPolicy& fill,
                 std::size_t batch_size, std::size_t max_queries)
      : scene_(scene),
        model_(model),
        fill_(fill),
        batch_size_(std::max<std::size_t>(batch_size, 1)),
        max_queries_(max_queries) {}

  std::vector<Label> labels(std::span<const StateVector> states) {
    std::vector<Label> out;
    out.reserve(states.size());
    for (std::size_t begin = 0; begin < states.size(); begin += batch_size_) {
      const std::size_t end = std::min(states.size(), begin + batch_size_);
      if (queries_ + (end - begin) > max_queries_) throw OutOfBudget{};

      std::vector<std::optional<RgbImage>> images;
      images.reserve(end - begin);
      std::vector<Query> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        images.push_back(render_query_image(scene_, model_, states[i], fill_));
        batch.push_back(Query{scene_.id, &states[i], images.back() ? &*images.back() : nullptr});
      }
      auto labels = model_.predict_batch(batch);
      queries_ += batch.size();
      for (auto& l : labels) out.push_back(std::move(l));
    }
    return out;
  }

  Label label(const StateVector& state) { return labels(std::span(&state, 1)).front(); }

  std::size_t queries() const noexcept { return queries_; }

 private:
  const Scene& scene_;
  Predictor& model_;
  const FillPolicy& fill_;
  std::size_t batch_size_;
  std::size_t max_queries_;
  std::size_t queries_ = 0;
};

void check_scene(const Scene& scene, const Predictor& model) {
  if (scene.partition.region_count() == 0) throw InvalidInput("partition has no regions");
  if (model.needs_pixels() && (scene.image.width() != scene.partition.width() ||
                               scene.image.height() != scene.partition.height()))
    throw InvalidInput("image and partition dimensions differ");
}

std::size_t preserved_pixels(const RegionPartition& p, const StateVector& s) {
  std::size_t total = 0;
  for (std::size_t r : s.regions()) total += p.area(r);
  return total;
}

std::vector<std::size_t> pruned_regions(const StateVector& s) {
  std::vector<std::size_t> out;
  for (std::size_t r = 1; r <= s.size(); ++r)
    if (!s.preserved(r)) out.push_back(r);
  return out;
}

struct Child {
  StateVector state;
  std::size_t removed = 0;
};

/// Beam ordering among one parent's valid children.
bool parent_order_less(const RegionPartition& p, CandidateOrder order, const Child& a,
                       const Child& b) {
  if (order == CandidateOrder::LargestPrunedArea && p.area(a.removed) != p.area(b.removed))
    return p.area(a.removed) > p.area(b.removed);
  return a.removed < b.removed;
}

/// Beam ordering across a whole round.
bool round_order_less(const RegionPartition& p, CandidateOrder order, const StateVector& a,
                      const StateVector& b) {
  if (order == CandidateOrder::LargestPrunedArea) {
    const std::size_t pa = preserved_pixels(p, a);
    const std::size_t pb = preserved_pixels(p, b);
    if (pa != pb) return pa < pb;
  }
  return pruned_regions(a) < pruned_regions(b);
}

void sort_canonical(std::vector<StateVector>& states) {
  std::sort(states.begin(), states.end(), canonical_less);
  states.erase(std::unique(states.begin(), states.end()), states.end());
}

}  // namespace

FinalStateSet refine(const Scene& scene, Predictor& model, const FillPolicy& fill,
                     const RefinementConfig& config) {
  check_scene(scene, model);
  if (config.beam_size && *config.beam_size == 0) throw InvalidInput("beam size must be at least 1");

  const RegionPartition& partition = scene.partition;
  const std::size_t m = partition.region_count();
  StateEvaluator evaluator(scene, model, fill, config.batch_size, config.max_queries);

  FinalStateSet result;
  result.beam_size = config.beam_size;

  std::vector<StateVector> finals;
  try {
    const StateVector full = StateVector::all(m);
    result.reference_label = evaluator.label(full);

    std::unordered_map<StateVector, bool> valid;
    valid.emplace(full, true);
    std::vector<StateVector> frontier{full};

    while (!frontier.empty()) {
      std::vector<StateVector> pending;
      std::unordered_set<StateVector> queued;
      for (const auto& parent : frontier) {
        for (std::size_t r : parent.regions()) {
          StateVector child = parent.without(r);
          if (valid.contains(child) || queued.contains(child)) continue;
          queued.insert(child);
          pending.push_back(std::move(child));
        }
      }
      if (!pending.empty()) {
        const auto labels = evaluator.labels(pending);
        for (std::size_t i = 0; i < pending.size(); ++i)
          valid.emplace(pending[i], labels[i] == result.reference_label);
      }

      std::vector<StateVector> next;
      std::unordered_set<StateVector> seen;
      auto keep = [&](StateVector s) {
        if (seen.insert(s).second) next.push_back(std::move(s));
      };

      for (const auto& parent : frontier) {
        std::vector<Child> children;
        for (std::size_t r : parent.regions()) {
          StateVector child = parent.without(r);
          if (valid.at(child)) children.push_back({std::move(child), r});
        }
        if (children.empty()) {
          finals.push_back(parent);
          continue;
        }
        if (config.beam_size && config.beam_scope == BeamScope::PerParent &&
            children.size() > *config.beam_size) {
          std::sort(children.begin(), children.end(), [&](const Child& a, const Child& b) {
            return parent_order_less(partition, config.candidate_order, a, b);
          });
          children.resize(*config.beam_size);
        }
        for (auto& c : children) keep(std::move(c.state));
      }

      if (config.beam_size && config.beam_scope == BeamScope::PerRound &&
          next.size() > *config.beam_size) {
        std::sort(next.begin(), next.end(), [&](const StateVector& a, const StateVector& b) {
          return round_order_less(partition, config.candidate_order, a, b);
        });
        next.resize(*config.beam_size);
      }
      sort_canonical(next);
      frontier = std::move(next);
    }
  } catch (const OutOfBudget&) {
    sort_canonical(finals);
    result.states = std::move(finals);
    result.query_count = evaluator.queries();
    throw BudgetExceeded(std::move(result));
  }

  sort_canonical(finals);
  result.states = std::move(finals);
  result.query_count = evaluator.queries();
  return result;
}

FinalStateSet brute_force_final_states(const Scene& scene, Predictor& model,
                                       const FillPolicy& fill, std::size_t region_limit) {
  check_scene(scene, model);
  const std::size_t m = scene.partition.region_count();
  if (m > region_limit || m >= 63)
    throw InvalidInput("brute force over " + std::to_string(m) + " regions exceeds the limit of " +
                       std::to_string(region_limit));

  const std::uint64_t count = std::uint64_t{1} << m;
  const std::uint64_t full = count - 1;
  auto to_state = [m](std::uint64_t mask) {
    StateVector s(m);
    for (std::size_t i = 0; i < m; ++i)
      if ((mask >> i) & 1u) s.set(i + 1);
    return s;
  };

  std::vector<StateVector> all;
  all.reserve(count);
  all.push_back(to_state(full));
  for (std::uint64_t mask = 0; mask < full; ++mask) all.push_back(to_state(mask));

  StateEvaluator evaluator(scene, model, fill, 256, count);
  const auto labels = evaluator.labels(all);
  const Label& reference = labels.front();

  std::vector<char> valid(count, 0);
  valid[full] = 1;
  for (std::uint64_t mask = 0; mask < full; ++mask) valid[mask] = labels[mask + 1] == reference;

  // Walk downward by popcount so every parent is settled before its children.
  std::vector<std::uint64_t> order(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) order[mask] = mask;
  std::stable_sort(order.begin(), order.end(), [](std::uint64_t a, std::uint64_t b) {
    return __builtin_popcountll(a) > __builtin_popcountll(b);
  });

  std::vector<char> reachable(count, 0);
  reachable[full] = 1;
  FinalStateSet result;
  result.reference_label = reference;
  result.query_count = evaluator.queries();
  for (std::uint64_t mask : order) {
    if (!reachable[mask]) continue;
    bool has_valid_child = false;
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      if (!(mask & bit)) continue;
      const std::uint64_t child = mask & ~bit;
      if (valid[child]) {
        has_valid_child = true;
        reachable[child] = 1;
      }
    }
    if (!has_valid_child) result.states.push_back(to_state(mask));
  }
  sort_canonical(result.states);
  return result;
}

std::string to_json(const FinalStateSet& set) {
  nlohmann::json j;
  j["reference_label"] = set.reference_label.value();
  j["beam_size"] = set.beam_size ? nlohmann::json(*set.beam_size) : nlohmann::json(nullptr);
  j["query_count"] = set.query_count;
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : set.states) states.push_back(s.regions());
  j["states"] = std::move(states);
  if (set.partial) j["partial"] = true;
  return j.dump();
}

FinalStateSet final_states_from_json(std::string_view text, std::size_t region_count) {
  try {
    const auto j = nlohmann::json::parse(text);
    FinalStateSet set;
    set.reference_label = Label(j.at("reference_label").get<std::string>());
    if (!j.at("beam_size").is_null()) set.beam_size = j["beam_size"].get<std::size_t>();
    set.query_count = j.at("query_count").get<std::size_t>();
    for (const auto& s : j.at("states"))
      set.states.push_back(
          StateVector::from_regions(region_count, s.get<std::vector<std::size_t>>()));
    set.partial = j.value("partial", false);
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad final-state JSON: ") + e.what());
  }
}

}  // namespace vfocus
