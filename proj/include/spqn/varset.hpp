#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <vector>

#include "spqn/common.hpp"

namespace spqn {

/// Fixed-width bitset over the variables of one network. All set algebra is
/// exact; operands must share the same universe size.
class VarSet {
public:
  VarSet() = default;
  explicit VarSet(std::uint32_t universe)
      : n_(universe), w_((universe + 63) / 64, 0) {}

  std::uint32_t universe() const { return n_; }

  void set(std::uint32_t i) {
    assert(i < n_);
    w_[i >> 6] |= std::uint64_t{1} << (i & 63);
  }

  bool test(std::uint32_t i) const {
    assert(i < n_);
    return (w_[i >> 6] >> (i & 63)) & 1;
  }

  bool empty() const {
    for (std::uint64_t w : w_)
      if (w) return false;
    return true;
  }

  std::uint32_t count() const {
    std::uint32_t c = 0;
    for (std::uint64_t w : w_) c += static_cast<std::uint32_t>(__builtin_popcountll(w));
    return c;
  }

  VarSet& operator|=(const VarSet& o) {
    assert(n_ == o.n_);
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] |= o.w_[k];
    return *this;
  }

  VarSet& operator&=(const VarSet& o) {
    assert(n_ == o.n_);
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] &= o.w_[k];
    return *this;
  }

  /// Removes every element of `o` from this set.
  VarSet& subtract(const VarSet& o) {
    assert(n_ == o.n_);
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] &= ~o.w_[k];
    return *this;
  }

  bool intersects(const VarSet& o) const {
    assert(n_ == o.n_);
    for (std::size_t k = 0; k < w_.size(); ++k)
      if (w_[k] & o.w_[k]) return true;
    return false;
  }

  bool subset_of(const VarSet& o) const {
    assert(n_ == o.n_);
    for (std::size_t k = 0; k < w_.size(); ++k)
      if (w_[k] & ~o.w_[k]) return false;
    return true;
  }

  friend bool operator==(const VarSet& a, const VarSet& b) {
    return a.n_ == b.n_ && a.w_ == b.w_;
  }
  friend bool operator!=(const VarSet& a, const VarSet& b) { return !(a == b); }

  friend VarSet operator|(VarSet a, const VarSet& b) { return a |= b; }
  friend VarSet operator&(VarSet a, const VarSet& b) { return a &= b; }

  std::vector<std::uint32_t> vars() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < n_; ++i)
      if (test(i)) out.push_back(i);
    return out;
  }

  /// "{0,3,7}" -- used in validation report details.
  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (std::uint32_t i : vars()) {
      if (!first) s += ',';
      s += std::to_string(i);
      first = false;
    }
    s += '}';
    return s;
  }

private:
  std::uint32_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

}  // namespace spqn
