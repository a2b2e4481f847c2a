#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "spqn/build.hpp"
#include "spqn/common.hpp"
#include "spqn/network.hpp"
#include "spqn/params.hpp"
#include "spqn/validate.hpp"

namespace spqn {

// Model files are JSON: version 1, num_vars, root, and nodes in id order.
// Sum nodes carry their logits inline (decimal text that round-trips the
// doubles exactly) plus two extension fields: "block" groups sums that share
// one parameter block, and "frozen" marks blocks excluded from training.
// An optional top-level "cmos" array preserves CMO annotations so saved
// models stay structurally checkable. Files without the extension fields
// load fine: each sum then gets its own trainable block.

namespace detail {

inline nlohmann::ordered_json model_to_json(const Model& model) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["num_vars"] = model.net.num_vars();
  j["root"] = model.net.root();
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (NodeId id = 0; id < model.net.size(); ++id) {
    const Node& n = model.net.node(id);
    nlohmann::ordered_json e;
    e["id"] = id;
    switch (n.kind) {
      case NodeKind::indicator:
        e["kind"] = "indicator";
        e["var"] = n.var;
        e["value"] = n.value;
        break;
      case NodeKind::sum: {
        e["kind"] = "sum";
        e["children"] = n.children;
        auto logits = model.params.block_logits(n.block);
        e["logits"] = std::vector<double>(logits.begin(), logits.end());
        e["block"] = n.block;
        if (model.params.block(n.block).frozen) e["frozen"] = true;
        break;
      }
      case NodeKind::product:
        e["kind"] = "product";
        e["children"] = n.children;
        break;
      case NodeKind::quotient:
        e["kind"] = "quotient";
        e["num"] = n.numerator();
        e["den"] = n.denominator();
        break;
    }
    nodes.push_back(std::move(e));
  }
  j["nodes"] = std::move(nodes);
  if (!model.cmos.empty()) {
    nlohmann::ordered_json cmos = nlohmann::ordered_json::array();
    for (const CmoAnnotation& a : model.cmos) {
      nlohmann::ordered_json e;
      e["root"] = a.root;
      e["gamma"] = a.gamma;
      e["alpha"] = a.alpha;
      e["beta"] = a.beta;
      e["a"] = a.a_children;
      e["b"] = a.b_children;
      e["block"] = a.block;
      cmos.push_back(std::move(e));
    }
    j["cmos"] = std::move(cmos);
  }
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != 1)
    throw InputError("unsupported model file version " + j.at("version").dump());
  std::uint32_t num_vars = j.at("num_vars").get<std::uint32_t>();
  NodeId root = j.at("root").get<NodeId>();
  NetworkBuilder builder(num_vars);
  ParamVector params;
  // File block id -> (our block id, logits for the equality check).
  std::unordered_map<std::int64_t, std::int32_t> block_map;
  const nlohmann::json& nodes = j.at("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const nlohmann::json& e = nodes[i];
    if (e.at("id").get<std::size_t>() != i)
      throw InputError("node ids must be dense and in order; position " + std::to_string(i) +
                       " holds id " + e.at("id").dump());
    std::string kind = e.at("kind").get<std::string>();
    if (kind == "indicator") {
      builder.add_indicator(e.at("var").get<std::uint32_t>(), e.at("value").get<std::uint8_t>());
    } else if (kind == "sum") {
      std::vector<NodeId> children = e.at("children").get<std::vector<NodeId>>();
      std::vector<double> logits = e.at("logits").get<std::vector<double>>();
      bool frozen = e.value("frozen", false);
      std::int32_t block;
      if (e.contains("block")) {
        std::int64_t fb = e.at("block").get<std::int64_t>();
        auto it = block_map.find(fb);
        if (it == block_map.end()) {
          block = params.add_block(std::move(logits), frozen);
          block_map.emplace(fb, block);
        } else {
          block = it->second;
          auto have = params.block_logits(block);
          bool same = have.size() == logits.size() && params.block(block).frozen == frozen;
          for (std::size_t k = 0; same && k < logits.size(); ++k)
            if (have[k] != logits[k]) same = false;
          if (!same)
            throw InputError("node " + std::to_string(i) + " disagrees with block " +
                             std::to_string(fb) + " defined earlier in the file");
        }
      } else {
        block = params.add_block(std::move(logits), frozen);
      }
      builder.add_sum(std::move(children), block);
    } else if (kind == "product") {
      builder.add_product(e.at("children").get<std::vector<NodeId>>());
    } else if (kind == "quotient") {
      builder.add_quotient(e.at("num").get<NodeId>(), e.at("den").get<NodeId>());
    } else {
      throw InputError("unknown node kind \"" + kind + "\" at position " + std::to_string(i));
    }
  }
  std::vector<CmoAnnotation> cmos;
  if (j.contains("cmos")) {
    for (const nlohmann::json& e : j.at("cmos")) {
      CmoAnnotation a;
      a.root = e.at("root").get<NodeId>();
      a.gamma = e.at("gamma").get<std::uint32_t>();
      a.alpha = e.at("alpha").get<std::uint32_t>();
      a.beta = e.at("beta").get<std::uint32_t>();
      a.a_children = e.at("a").get<std::vector<std::vector<NodeId>>>();
      a.b_children = e.at("b").get<std::vector<std::vector<NodeId>>>();
      a.block = e.at("block").get<std::int32_t>();
      cmos.push_back(std::move(a));
    }
  }
  Model model{std::move(builder).finalize(root), std::move(params), std::move(cmos)};
  check_params_match(model.net, model.params);
  return model;
}

}  // namespace detail

inline void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << detail::model_to_json(model).dump(2) << "\n";
  if (!out) throw InputError("write to " + path + " failed");
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    return detail::model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Convolutional architecture specs:
// { "input_length": n, "leaf_channels": c0,
//   "layers": [{"stride": s, "rf": r, "channels": c}, ...] }

inline ConvNetSpec parse_conv_spec(const std::string& text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    ConvNetSpec spec;
    spec.input_length = j.at("input_length").get<std::uint32_t>();
    spec.leaf_channels = j.at("leaf_channels").get<std::uint32_t>();
    for (const nlohmann::json& e : j.at("layers")) {
      ConvLayerSpec l;
      l.stride = e.at("stride").get<std::uint32_t>();
      l.rf = e.at("rf").get<std::uint32_t>();
      l.channels = e.at("channels").get<std::uint32_t>();
      spec.layers.push_back(l);
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("conv spec: ") + e.what());
  }
}

inline ConvNetSpec load_conv_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_conv_spec(text);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace spqn
