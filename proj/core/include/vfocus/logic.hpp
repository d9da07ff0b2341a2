#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfocus/state.hpp"

namespace vfocus {

/// Monotone boolean expression over region literals.
///
/// Factories keep trees canonical: nested same-operator nodes are flattened, TRUE is absorbed
/// (dropped from AND, dominates OR), single-child AND/OR collapse, duplicate children are
/// removed and children are sorted (literals ascending, then composites by smallest literal,
/// literal count and rendering).
class LogicExpr {
 public:
  enum class Op { True, Literal, And, Or };

  LogicExpr() = default;  // TRUE

  static LogicExpr truth() { return {}; }
  static LogicExpr literal(std::size_t region);
  static LogicExpr conjunction(std::vector<LogicExpr> children);
  static LogicExpr disjunction(std::vector<LogicExpr> children);

  Op op() const noexcept { return op_; }
  /// Region index of a Literal node (0 otherwise).
  std::size_t region() const noexcept { return region_; }
  const std::vector<LogicExpr>& children() const noexcept { return children_; }

  bool is_composite() const noexcept { return op_ == Op::And || op_ == Op::Or; }

  /// Number of Literal nodes in the tree.
  std::size_t literal_count() const noexcept;
  /// Smallest region index referenced, or 0 for TRUE.
  std::size_t min_region() const noexcept;
  std::size_t max_region() const noexcept;

  friend bool operator==(const LogicExpr&, const LogicExpr&) = default;

 private:
  Op op_ = Op::True;
  std::size_t region_ = 0;
  std::vector<LogicExpr> children_;
};

/// Factors a set of final states into an AND/OR expression.
///
/// Recursively picks the region shared by the most states (lowest index on ties), emits
/// `region & T(states containing it, with it cleared)` OR-ed with `T(states without it)`,
/// and stops at a single state (its conjunction, TRUE when empty). Both branches are
/// factored further, so the output satisfies s |= T(V) exactly when s is a superset of some
/// member of V. Throws InvalidInput on an empty set or mixed state lengths.
LogicExpr translate(std::span<const StateVector> states);

/// Throws InvalidInput when a literal exceeds the state length.
bool eval(const LogicExpr& expr, const StateVector& state);

inline constexpr std::size_t kMaxEquivalenceRegions = 20;

/// Exhaustive truth-table comparison over all 2^region_count states.
bool equivalent(const LogicExpr& a, const LogicExpr& b, std::size_t region_count);

/// Infix text: `I1 & (I2 | I3)`, composite children always parenthesized, TRUE as "TRUE".
std::string render(const LogicExpr& expr);

/// {"op":"and"|"or"|"lit"|"true", "children":[...], "region":k}
std::string to_json(const LogicExpr& expr);
LogicExpr logic_from_json(std::string_view text);

}  // namespace vfocus
