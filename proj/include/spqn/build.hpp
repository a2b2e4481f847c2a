#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spqn/common.hpp"
#include "spqn/network.hpp"
#include "spqn/params.hpp"
#include "spqn/rng.hpp"
#include "spqn/validate.hpp"

namespace spqn {

/// A network bundled with its parameters and (when the construction
/// guarantees it) the CMO annotations that make it structurally checkable.
struct Model {
  Network net;
  ParamVector params;
  std::vector<CmoAnnotation> cmos;
};

/// Grows a network, its parameter blocks, and CMO annotations together.
/// Indicators and parameter-free products are deduplicated, so repeated
/// sub-structure (shared conditioning windows, shared indicator pairs) lands
/// on one node.
class ModelAssembler {
public:
  explicit ModelAssembler(std::uint32_t num_vars) : builder_(num_vars) {}

  NodeId indicator(std::uint32_t var, std::uint8_t value) {
    auto key = std::make_pair(var, value);
    auto it = indicators_.find(key);
    if (it != indicators_.end()) return it->second;
    NodeId id = builder_.add_indicator(var, value);
    indicators_.emplace(key, id);
    return id;
  }

  NodeId product(std::vector<NodeId> children) {
    auto it = products_.find(children);
    if (it != products_.end()) return it->second;
    NodeId id = builder_.add_product(children);
    products_.emplace(std::move(children), id);
    return id;
  }

  NodeId sum(std::vector<NodeId> children, std::int32_t block) {
    return builder_.add_sum(std::move(children), block);
  }

  NodeId quotient(NodeId numerator, NodeId denominator) {
    return builder_.add_quotient(numerator, denominator);
  }

  std::int32_t add_block(std::vector<double> logits, bool frozen = false) {
    return params_.add_block(std::move(logits), frozen);
  }

  /// Leaf mixture w1*[x=0] + w2*[x=1] over a fresh 2-logit block.
  NodeId leaf_cmo(std::uint32_t var, double logit0, double logit1, bool frozen = false,
                  bool annotate = true) {
    return leaf_cmo_shared(var, add_block({logit0, logit1}, frozen), annotate);
  }

  /// Leaf mixture over an existing block (convolutional sharing of leaf
  /// parameters across positions).
  NodeId leaf_cmo_shared(std::uint32_t var, std::int32_t block, bool annotate = true) {
    NodeId i0 = indicator(var, 0);
    NodeId i1 = indicator(var, 1);
    NodeId s = sum({i0, i1}, block);
    if (annotate) {
      CmoAnnotation a;
      a.root = s;
      a.gamma = 2;
      a.alpha = 0;
      a.beta = 1;
      a.a_children = {{}, {}};
      a.b_children = {{i0}, {i1}};
      a.block = block;
      cmos_.push_back(std::move(a));
    }
    return s;
  }

  /// General conditional mixing operator over gamma rows: numerator
  /// sum_i w_i (prod A_i)(prod B_i), denominator sum_i w_i (prod A_i), with
  /// the A products shared between the two sums and one weight block driving
  /// both. With no A columns the denominator is identically 1 and the
  /// numerator sum is returned directly, without a quotient; a single B
  /// column then feeds the sum as-is (which makes the leaf shape above a
  /// special case). Returns the CMO root.
  NodeId cmo(const std::vector<std::vector<NodeId>>& a_children,
             const std::vector<std::vector<NodeId>>& b_children, std::int32_t block,
             bool annotate = true) {
    std::size_t gamma = b_children.size();
    if (gamma == 0) throw InputError("CMO needs at least one mixture row");
    if (a_children.size() != gamma)
      throw InputError("CMO row count mismatch between A and B columns");
    std::size_t alpha = a_children[0].size();
    std::size_t beta = b_children[0].size();
    if (beta == 0) throw InputError("CMO needs at least one B column");
    for (const auto& row : a_children)
      if (row.size() != alpha) throw InputError("CMO A rows have uneven widths");
    for (const auto& row : b_children)
      if (row.size() != beta) throw InputError("CMO B rows have uneven widths");

    NodeId root;
    if (alpha == 0) {
      std::vector<NodeId> rows;
      rows.reserve(gamma);
      for (const auto& row : b_children) rows.push_back(beta == 1 ? row[0] : product(row));
      root = sum(std::move(rows), block);
    } else {
      std::vector<NodeId> joints, a_prods;
      joints.reserve(gamma);
      a_prods.reserve(gamma);
      for (std::size_t i = 0; i < gamma; ++i) {
        NodeId ap = product(a_children[i]);
        NodeId bp = product(b_children[i]);
        a_prods.push_back(ap);
        joints.push_back(product({ap, bp}));
      }
      NodeId num = sum(std::move(joints), block);
      NodeId den = sum(std::move(a_prods), block);
      root = quotient(num, den);
    }
    if (annotate) {
      CmoAnnotation a;
      a.root = root;
      a.gamma = static_cast<std::uint32_t>(gamma);
      a.alpha = static_cast<std::uint32_t>(alpha);
      a.beta = static_cast<std::uint32_t>(beta);
      a.a_children = a_children;
      a.b_children = b_children;
      a.block = block;
      cmos_.push_back(std::move(a));
    }
    return root;
  }

  std::size_t size() const { return builder_.size(); }

  Model finalize(NodeId root) && {
    return Model{std::move(builder_).finalize(root), std::move(params_), std::move(cmos_)};
  }

private:
  NetworkBuilder builder_;
  ParamVector params_;
  std::vector<CmoAnnotation> cmos_;
  std::map<std::pair<std::uint32_t, std::uint8_t>, NodeId> indicators_;
  std::map<std::vector<NodeId>, NodeId> products_;
};

// ---------------------------------------------------------------------------
// 1-D convolutional SPQN

struct ConvLayerSpec {
  std::uint32_t stride = 1;
  std::uint32_t rf = 1;  // receptive field, >= stride
  std::uint32_t channels = 1;
};

struct ConvNetSpec {
  std::uint32_t input_length = 0;
  std::uint32_t leaf_channels = 1;
  std::vector<ConvLayerSpec> layers;

  /// Spatial length after each layer; index 0 is the input length.
  std::vector<std::uint32_t> layer_lengths() const {
    std::vector<std::uint32_t> lengths{input_length};
    for (const ConvLayerSpec& l : layers) {
      if (l.stride == 0 || lengths.back() % l.stride != 0)
        throw InputError("layer input length " + std::to_string(lengths.back()) +
                         " is not divisible by stride " + std::to_string(l.stride));
      lengths.push_back(lengths.back() / l.stride);
    }
    return lengths;
  }

  void validate() const {
    if (input_length == 0) throw InputError("input length must be positive");
    if (leaf_channels == 0) throw InputError("leaf channel count must be positive");
    if (layers.empty()) throw InputError("at least one layer is required");
    for (const ConvLayerSpec& l : layers) {
      if (l.channels == 0) throw InputError("channel count must be positive");
      if (l.rf < l.stride)
        throw InputError("receptive field " + std::to_string(l.rf) +
                         " is smaller than stride " + std::to_string(l.stride));
    }
    std::vector<std::uint32_t> lengths = layer_lengths();
    if (lengths.back() != 1)
      throw InputError("network must reduce to spatial length 1, got " +
                       std::to_string(lengths.back()));
    if (layers.back().channels != 1)
      throw InputError("final layer must have a single channel to define one root");
  }
};

/// Stack of 1-D convolutional CMO layers over binary inputs. Layer 0 places
/// leaf mixtures (leaf_channels per position, logits shared across
/// positions). Each later layer d emits, per output position t and channel
/// c, a CMO with channels_d mixture rows whose B columns cover the stride
/// window and whose A columns cover the receptive-field excess to the left,
/// clipped at the input boundary. The inner channel-mixing sums are built
/// once per (row, input position) and shared across output channels and
/// overlapping windows; their weight blocks are indexed by the position's
/// phase within the stride, which keeps the parameter count equal to the
/// rf = stride baseline. Logits are i.i.d. normal with standard deviation
/// 0.5 from the seed; a near-zero spread would start every quotient on the
/// flat saddle where numerator and denominator gradients cancel. Same spec
/// and seed give an identical model.
inline Model build_conv_spqn(const ConvNetSpec& spec, std::uint64_t seed) {
  spec.validate();
  SplitMix64 rng(seed);
  ModelAssembler asmb(spec.input_length);
  auto draw = [&rng] { return 0.5 * rng.next_normal(); };

  std::vector<std::vector<NodeId>> prev(spec.input_length);
  {
    std::vector<std::int32_t> leaf_blocks;
    for (std::uint32_t k = 0; k < spec.leaf_channels; ++k) {
      double l0 = draw(), l1 = draw();
      leaf_blocks.push_back(asmb.add_block({l0, l1}));
    }
    for (std::uint32_t p = 0; p < spec.input_length; ++p)
      for (std::uint32_t k = 0; k < spec.leaf_channels; ++k)
        prev[p].push_back(asmb.leaf_cmo_shared(p, leaf_blocks[k]));
  }

  std::uint32_t c_in = spec.leaf_channels;
  for (const ConvLayerSpec& layer : spec.layers) {
    std::uint32_t in_len = static_cast<std::uint32_t>(prev.size());
    std::uint32_t s = layer.stride, r = layer.rf, c_out = layer.channels;
    std::uint32_t out_len = in_len / s;

    // Weight blocks first, in a fixed order, so node construction does not
    // perturb the random stream.
    std::vector<std::vector<std::int32_t>> win(c_out, std::vector<std::int32_t>(s));
    for (std::uint32_t i = 0; i < c_out; ++i)
      for (std::uint32_t phase = 0; phase < s; ++phase) {
        std::vector<double> logits(c_in);
        for (double& x : logits) x = draw();
        win[i][phase] = asmb.add_block(std::move(logits));
      }
    std::vector<std::int32_t> wout(c_out);
    for (std::uint32_t c = 0; c < c_out; ++c) {
      std::vector<double> logits(c_out);
      for (double& x : logits) x = draw();
      wout[c] = asmb.add_block(std::move(logits));
    }

    // Inner channel-mixing sums, one per (mixture row, input position).
    std::vector<std::vector<NodeId>> inner(c_out, std::vector<NodeId>(in_len));
    for (std::uint32_t i = 0; i < c_out; ++i)
      for (std::uint32_t q = 0; q < in_len; ++q) {
        std::vector<std::vector<NodeId>> rows(c_in);
        for (std::uint32_t k = 0; k < c_in; ++k) rows[k] = {prev[q][k]};
        inner[i][q] = asmb.cmo(std::vector<std::vector<NodeId>>(c_in), rows, win[i][q % s]);
      }

    std::vector<std::vector<NodeId>> next(out_len);
    for (std::uint32_t t = 0; t < out_len; ++t) {
      // B window: the stride block. A window: up to rf - stride positions
      // to its left, clipped at position 0.
      std::uint32_t b_lo = t * s, b_hi = t * s + s;
      std::uint32_t a_lo = b_lo >= r - s ? b_lo - (r - s) : 0;
      std::vector<std::vector<NodeId>> a_rows(c_out), b_rows(c_out);
      for (std::uint32_t i = 0; i < c_out; ++i) {
        for (std::uint32_t q = a_lo; q < b_lo; ++q) a_rows[i].push_back(inner[i][q]);
        for (std::uint32_t q = b_lo; q < b_hi; ++q) b_rows[i].push_back(inner[i][q]);
      }
      for (std::uint32_t c = 0; c < c_out; ++c)
        next[t].push_back(asmb.cmo(a_rows, b_rows, wout[c]));
    }
    prev = std::move(next);
    c_in = c_out;
  }
  return std::move(asmb).finalize(prev[0][0]);
}

/// The non-overlapping divide-and-conquer baseline: the same stack with every
/// receptive field snapped to its stride, which removes every conditioning
/// window and so every quotient node, while keeping the parameter layout of
/// the matched SPQN spec.
inline Model build_baseline_spn(ConvNetSpec spec, std::uint64_t seed) {
  for (ConvLayerSpec& l : spec.layers) l.rf = l.stride;
  return build_conv_spqn(spec, seed);
}

// ---------------------------------------------------------------------------
// Triangle-free graph distribution

/// 0-based variable index of edge (i, j), 1 <= i < j <= M, pairs ordered
/// lexicographically: (1,2), (1,3), ..., (1,M), (2,3), ...
inline std::uint32_t edge_index(std::uint32_t m, std::uint32_t i, std::uint32_t j) {
  if (!(1 <= i && i < j && j <= m)) throw InputError("edge endpoints out of range");
  return (i - 1) * m - (i - 1) * i / 2 + (j - i) - 1;
}

/// Strictly positive distribution over the triangle-free graphs on m
/// vertices, over m(m-1)/2 binary edge variables. Each edge (i2,i3) with
/// i2 > 1 carries a two-row CMO: one row pairs "no smaller vertex closes a
/// triangle through this edge" with a uniform leaf on the edge, the other
/// pairs "some smaller vertex would close a triangle" with the edge forced
/// absent. Exactly one of the two row conditions holds for any assignment,
/// so denominators never vanish and the root is positive exactly on
/// triangle-free graphs. Edges (1,i) carry plain uniform leaves. The root
/// multiplies the per-edge factors in lexicographic order, which keeps the
/// sampling dependency graph acyclic. All weights are fixed by the
/// construction, so every block is frozen. Node count grows as O(m^4).
/// No CMO annotations are emitted: the "triangle would close" rows mix
/// indicators with uniform leaves in a shape outside the annotated-CMO
/// grammar, so this model is checked by brute-force soundness instead.
inline Model build_trianglefree_spqn(std::uint32_t m) {
  if (m < 2) throw InputError("need at least two vertices");
  std::uint32_t n = m * (m - 1) / 2;
  ModelAssembler asmb(n);

  std::int32_t half = asmb.add_block({0.0, 0.0}, /*frozen=*/true);
  std::int32_t third = asmb.add_block({0.0, 0.0, 0.0}, /*frozen=*/true);
  std::map<std::uint32_t, std::int32_t> equal_blocks;  // by child count
  auto equal_block = [&](std::uint32_t len) {
    auto it = equal_blocks.find(len);
    if (it != equal_blocks.end()) return it->second;
    std::int32_t b = asmb.add_block(std::vector<double>(len, 0.0), /*frozen=*/true);
    equal_blocks.emplace(len, b);
    return b;
  };
  std::map<std::uint32_t, NodeId> uniforms;  // by variable
  auto uniform = [&](std::uint32_t var) {
    auto it = uniforms.find(var);
    if (it != uniforms.end()) return it->second;
    NodeId u = asmb.leaf_cmo_shared(var, half, /*annotate=*/false);
    uniforms.emplace(var, u);
    return u;
  };

  std::vector<NodeId> factors;
  for (std::uint32_t i2 = 1; i2 < m; ++i2)
    for (std::uint32_t i3 = i2 + 1; i3 <= m; ++i3) {
      std::uint32_t edge = edge_index(m, i2, i3);
      if (i2 == 1) {
        factors.push_back(uniform(edge));
        continue;
      }
      // "This edge closes no triangle": per smaller vertex i1, the pair
      // (E_{i1,i2}, E_{i1,i3}) takes one of its three non-(1,1) values.
      std::vector<NodeId> safe_factors;
      for (std::uint32_t i1 = 1; i1 < i2; ++i1) {
        std::uint32_t ea = edge_index(m, i1, i2), eb = edge_index(m, i1, i3);
        NodeId p10 = asmb.product({asmb.indicator(ea, 1), asmb.indicator(eb, 0)});
        NodeId p01 = asmb.product({asmb.indicator(ea, 0), asmb.indicator(eb, 1)});
        NodeId p00 = asmb.product({asmb.indicator(ea, 0), asmb.indicator(eb, 0)});
        safe_factors.push_back(asmb.sum({p10, p01, p00}, third));
      }
      NodeId phi1 = asmb.product(std::move(safe_factors));
      // "Some smaller vertex closes a triangle": mixture over the offending
      // vertex, uniform over the remaining wing edges.
      std::vector<NodeId> closing_terms;
      for (std::uint32_t i1 = 1; i1 < i2; ++i1) {
        std::vector<NodeId> parts{asmb.indicator(edge_index(m, i1, i2), 1),
                                  asmb.indicator(edge_index(m, i1, i3), 1)};
        for (std::uint32_t k = 1; k < i2; ++k) {
          if (k == i1) continue;
          parts.push_back(uniform(edge_index(m, k, i2)));
          parts.push_back(uniform(edge_index(m, k, i3)));
        }
        closing_terms.push_back(asmb.product(std::move(parts)));
      }
      NodeId phi2 = asmb.sum(std::move(closing_terms), equal_block(i2 - 1));
      factors.push_back(asmb.cmo({{phi1}, {phi2}}, {{uniform(edge)}, {asmb.indicator(edge, 0)}},
                                 half, /*annotate=*/false));
    }
  NodeId root = asmb.product(std::move(factors));
  return std::move(asmb).finalize(root);
}

}  // namespace spqn
