#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spqn/common.hpp"
#include "spqn/network.hpp"

namespace spqn {

struct ParamBlock {
  std::size_t offset = 0;
  std::size_t length = 0;
  bool frozen = false;  // excluded from optimizer updates
};

/// Flat vector of unconstrained logits, carved into blocks. Every sum node
/// references one block; several sums referencing the same block share
/// weights. Weights are materialized from logits through the normalized
/// exponential map at evaluation time, never cached, so they are strictly
/// positive and sum to one for any finite logits.
class ParamVector {
public:
  std::int32_t add_block(std::vector<double> logits, bool frozen = false) {
    for (double v : logits)
      if (!std::isfinite(v)) throw InputError("logit values must be finite");
    ParamBlock b;
    b.offset = logits_.size();
    b.length = logits.size();
    b.frozen = frozen;
    logits_.insert(logits_.end(), logits.begin(), logits.end());
    blocks_.push_back(b);
    return static_cast<std::int32_t>(blocks_.size() - 1);
  }

  std::size_t block_count() const { return blocks_.size(); }
  const ParamBlock& block(std::int32_t id) const { return blocks_[id]; }
  void set_frozen(std::int32_t id, bool frozen) { blocks_[id].frozen = frozen; }

  std::span<const double> block_logits(std::int32_t id) const {
    const ParamBlock& b = blocks_[id];
    return {logits_.data() + b.offset, b.length};
  }
  std::span<double> block_logits(std::int32_t id) {
    const ParamBlock& b = blocks_[id];
    return {logits_.data() + b.offset, b.length};
  }

  const std::vector<double>& logits() const { return logits_; }
  std::vector<double>& logits() { return logits_; }
  std::size_t dim() const { return logits_.size(); }

  /// True for coordinates belonging to a frozen block.
  std::vector<char> frozen_mask() const {
    std::vector<char> m(logits_.size(), 0);
    for (const ParamBlock& b : blocks_)
      if (b.frozen)
        for (std::size_t k = 0; k < b.length; ++k) m[b.offset + k] = 1;
    return m;
  }

private:
  std::vector<double> logits_;
  std::vector<ParamBlock> blocks_;
};

/// Sum arity must match its block length; call once per (network, params)
/// pairing before evaluation.
inline void check_params_match(const Network& net, const ParamVector& params) {
  for (NodeId id = 0; id < net.size(); ++id) {
    const Node& n = net.node(id);
    if (n.kind != NodeKind::sum) continue;
    if (n.block < 0 || static_cast<std::size_t>(n.block) >= params.block_count())
      throw InputError("sum node " + std::to_string(id) + " references missing block " +
                       std::to_string(n.block));
    if (params.block(n.block).length != n.children.size())
      throw InputError("sum node " + std::to_string(id) + " has " +
                       std::to_string(n.children.size()) + " children but block length " +
                       std::to_string(params.block(n.block).length));
  }
}

}  // namespace spqn
