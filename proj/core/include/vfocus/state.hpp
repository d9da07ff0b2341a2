#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vfocus {

/// Preserved/pruned flag per region. Region indices are 1-based throughout the public API.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t region_count, bool preserved = false)
      : bits_(region_count, preserved) {}

  static StateVector all(std::size_t region_count) { return StateVector(region_count, true); }
  static StateVector none(std::size_t region_count) { return StateVector(region_count, false); }
  static StateVector from_regions(std::size_t region_count, std::span<const std::size_t> regions);
  static StateVector from_regions(std::size_t region_count,
                                  std::initializer_list<std::size_t> regions) {
    return from_regions(region_count, std::span<const std::size_t>(regions.begin(), regions.size()));
  }
  /// "1010" -> regions {1,3}.
  static StateVector from_bits(std::string_view bits);

  std::size_t size() const noexcept { return bits_.size(); }
  bool preserved(std::size_t region) const { return bits_.at(region - 1); }
  void set(std::size_t region, bool value = true) { bits_.at(region - 1) = value; }

  /// Copy with one region pruned.
  StateVector without(std::size_t region) const {
    StateVector out = *this;
    out.set(region, false);
    return out;
  }

  std::size_t count() const noexcept;
  bool is_superset_of(const StateVector& other) const;
  StateVector intersect(const StateVector& other) const;

  /// Ascending 1-based indices of preserved regions.
  std::vector<std::size_t> regions() const;
  std::string bits() const;

  const std::vector<bool>& raw() const noexcept { return bits_; }

  friend bool operator==(const StateVector&, const StateVector&) = default;
  friend auto operator<=>(const StateVector& a, const StateVector& b) { return a.bits_ <=> b.bits_; }

 private:
  std::vector<bool> bits_;
};

/// Canonical listing order: fewer preserved regions first, then lexicographic on the index lists.
bool canonical_less(const StateVector& a, const StateVector& b);

}  // namespace vfocus

template <>
struct std::hash<vfocus::StateVector> {
  std::size_t operator()(const vfocus::StateVector& s) const noexcept {
    return std::hash<std::vector<bool>>{}(s.raw());
  }
};
