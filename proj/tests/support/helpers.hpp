#pragma once

// Shared test utilities: temp files, independent reference predicates
// (triangles, grid paths), a finite-difference gradient oracle, and a
// generator of small random conditional-mixture networks. The predicates
// here are written directly against the documented conventions, not by
// calling the library helpers they are meant to cross-check.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spqn/spqn.hpp"

namespace testutil {

/// Relative difference with an absolute floor of 1, so values near zero are
/// compared absolutely.
inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "spqn-test-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Runs the CLI binary named by $SPQN_CLI with the given arguments, captures
/// combined stdout+stderr, returns the exit code. `env_prefix` is prepended
/// verbatim, e.g. "SPQN_SEED=7 ".
inline int run_cli_env(const std::string& env_prefix, const std::string& args,
                       std::string* output = nullptr) {
  const char* cli = std::getenv("SPQN_CLI");
  if (!cli || !*cli) throw std::runtime_error("SPQN_CLI is not set");
  std::string cmd = env_prefix + std::string(cli) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  int status = pclose(pipe);
  if (output) *output = std::move(out);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline int run_cli(const std::string& args, std::string* output = nullptr) {
  return run_cli_env("", args, output);
}

// ---------------------------------------------------------------------------
// Independent reference predicates

/// Triangle test over the lexicographic edge encoding: bit k of `bits` is
/// the k-th pair (i, j), i < j, enumerated with i outer and j inner.
inline bool has_triangle(std::uint32_t m, std::size_t bits) {
  std::vector<std::vector<char>> adj(m, std::vector<char>(m, 0));
  std::size_t k = 0;
  for (std::uint32_t i = 0; i < m; ++i)
    for (std::uint32_t j = i + 1; j < m; ++j, ++k)
      if ((bits >> k) & 1) adj[i][j] = adj[j][i] = 1;
  for (std::uint32_t i = 0; i < m; ++i)
    for (std::uint32_t j = i + 1; j < m; ++j)
      for (std::uint32_t l = j + 1; l < m; ++l)
        if (adj[i][j] && adj[j][l] && adj[i][l]) return true;
  return false;
}

inline std::size_t count_triangle_free(std::uint32_t m) {
  std::size_t edges = std::size_t(m) * (m - 1) / 2;
  std::size_t n = 0;
  for (std::size_t bits = 0; bits < (std::size_t{1} << edges); ++bits)
    if (!has_triangle(m, bits)) ++n;
  return n;
}

/// True when the on-pixels of a row-major w x h grid form a simple path
/// under 4-adjacency: connected, and either a single pixel or exactly two
/// pixels of degree 1 with every other pixel of degree 2.
inline bool is_simple_path(std::uint32_t w, std::uint32_t h, const spqn::Evidence& e) {
  std::vector<std::uint32_t> on;
  for (std::uint32_t i = 0; i < w * h; ++i)
    if (e[i] == spqn::Mark::one) on.push_back(i);
  if (on.empty()) return false;
  if (on.size() == 1) return true;
  auto lit = [&](std::int64_t x, std::int64_t y) {
    return x >= 0 && x < std::int64_t(w) && y >= 0 && y < std::int64_t(h) &&
           e[std::uint32_t(y * w + x)] == spqn::Mark::one;
  };
  std::size_t deg1 = 0;
  for (std::uint32_t i : on) {
    std::int64_t x = i % w, y = i / w;
    int d = lit(x - 1, y) + lit(x + 1, y) + lit(x, y - 1) + lit(x, y + 1);
    if (d == 1)
      ++deg1;
    else if (d != 2)
      return false;
  }
  if (deg1 != 2) return false;
  // connectivity by flood fill from the first on-pixel
  std::vector<char> seen(w * h, 0);
  std::vector<std::uint32_t> stack{on[0]};
  seen[on[0]] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    std::uint32_t i = stack.back();
    stack.pop_back();
    ++reached;
    std::int64_t x = i % w, y = i / w;
    const std::array<std::array<std::int64_t, 2>, 4> nb{{{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}}};
    for (const auto& [nx, ny] : nb) {
      if (!lit(nx, ny)) continue;
      std::uint32_t j = std::uint32_t(ny * w + nx);
      if (!seen[j]) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return reached == on.size();
}

// ---------------------------------------------------------------------------
// Finite differences

/// Central-difference gradient of the mean log-likelihood, h = 1e-4.
inline std::vector<double> fd_gradient(const spqn::Network& net, const spqn::ParamVector& params,
                                       const std::vector<spqn::Evidence>& batch,
                                       double h = 1e-4) {
  spqn::ParamVector p = params;
  std::vector<double> g(p.dim());
  for (std::size_t i = 0; i < p.dim(); ++i) {
    double orig = p.logits()[i];
    p.logits()[i] = orig + h;
    double up = spqn::mean_log_likelihood(net, p, batch);
    p.logits()[i] = orig - h;
    double down = spqn::mean_log_likelihood(net, p, batch);
    p.logits()[i] = orig;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Random model fixtures

/// Random small convolution-style architecture: 4 to 12 variables, at most
/// three mixture layers above the leaves.
inline spqn::ConvNetSpec random_conv_spec(spqn::SplitMix64& rng) {
  static const std::vector<std::vector<std::uint32_t>> stride_menu = {
      {2, 2}, {2, 3}, {3, 2}, {2, 2, 2}, {4, 2}, {2, 4},
      {3, 3}, {2, 5}, {5, 2}, {2, 2, 3}, {2, 3, 2},
  };
  const std::vector<std::uint32_t>& strides =
      stride_menu[rng.below(std::uint32_t(stride_menu.size()))];
  spqn::ConvNetSpec spec;
  spec.input_length = 1;
  for (std::uint32_t s : strides) spec.input_length *= s;
  spec.leaf_channels = 1 + std::uint32_t(rng.below(2));
  for (std::size_t d = 0; d < strides.size(); ++d) {
    spqn::ConvLayerSpec layer;
    layer.stride = strides[d];
    layer.rf = layer.stride + std::uint32_t(rng.below(3));
    layer.channels = d + 1 == strides.size() ? 1 : 1 + std::uint32_t(rng.below(2));
    spec.layers.push_back(layer);
  }
  return spec;
}

/// Replaces every unfrozen logit with sigma * N(0, 1), so the modeled
/// distribution has pronounced lumps. Sampling accuracy checks need the
/// mass concentrated on far fewer than 2^N assignments; near-uniform
/// distributions would drown the comparison in Monte Carlo noise.
inline void lumpify(spqn::Model& model, std::uint64_t seed, double sigma = 1.5) {
  spqn::SplitMix64 rng(seed);
  for (std::int32_t b = 0; b < std::int32_t(model.params.block_count()); ++b) {
    if (model.params.block(b).frozen) continue;
    for (double& x : model.params.block_logits(b)) x = sigma * rng.next_normal();
  }
}

/// Deterministic random network with quotients: a random conv-style
/// architecture with lumpy weights.
inline spqn::Model random_cmo_model(std::uint64_t seed, double sigma = 1.5) {
  spqn::SplitMix64 rng(seed);
  spqn::ConvNetSpec spec = random_conv_spec(rng);
  spqn::Model model = spqn::build_conv_spqn(spec, rng.next_u64());
  lumpify(model, rng.next_u64(), sigma);
  return model;
}

}  // namespace testutil
