#include "vfocus/state.hpp"

#include <algorithm>

#include "vfocus/errors.hpp"

namespace vfocus {

StateVector StateVector::from_regions(std::size_t region_count,
                                      std::span<const std::size_t> regions) {
  StateVector out(region_count);
  for (std::size_t r : regions) {
    if (r == 0 || r > region_count)
      throw InvalidInput("region index " + std::to_string(r) + " outside 1.." +
                         std::to_string(region_count));
    out.set(r);
  }
  return out;
}

StateVector StateVector::from_bits(std::string_view bits) {
  StateVector out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1')
      throw InvalidInput("state bit string may only contain 0 and 1");
    out.bits_[i] = bits[i] == '1';
  }
  return out;
}

std::size_t StateVector::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

bool StateVector::is_superset_of(const StateVector& other) const {
  if (other.size() != size()) throw InvalidInput("state length mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (other.bits_[i] && !bits_[i]) return false;
  return true;
}

StateVector StateVector::intersect(const StateVector& other) const {
  if (other.size() != size()) throw InvalidInput("state length mismatch");
  StateVector out(size());
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] && other.bits_[i];
  return out;
}

std::vector<std::size_t> StateVector::regions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(i + 1);
  return out;
}

std::string StateVector::bits() const {
  std::string out(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out[i] = '1';
  return out;
}

bool canonical_less(const StateVector& a, const StateVector& b) {
  const auto ca = a.count();
  const auto cb = b.count();
  if (ca != cb) return ca < cb;
  return a.regions() < b.regions();
}

}  // namespace vfocus
