#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "spqn/common.hpp"
#include "spqn/detail/parallel.hpp"
#include "spqn/network.hpp"
#include "spqn/rng.hpp"

namespace spqn {

/// Binary image whose on-pixels form one 4-connected simple path.
struct GridSample {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, height*width entries

  std::uint8_t at(std::uint32_t row, std::uint32_t col) const {
    return pixels[row * width + col];
  }

  Evidence to_evidence() const {
    Evidence ev(static_cast<std::uint32_t>(pixels.size()));
    for (std::uint32_t i = 0; i < pixels.size(); ++i)
      ev[i] = pixels[i] ? Mark::one : Mark::zero;
    return ev;
  }
};

namespace detail {

// Direction order is load-bearing for reproducibility: N, E, S, W.
inline constexpr int dir_row[4] = {-1, 0, 1, 0};
inline constexpr int dir_col[4] = {0, 1, 0, -1};

inline GridSample generate_one_path(std::uint32_t width, std::uint32_t height,
                                    std::uint64_t seed) {
  SplitMix64 rng(seed);
  GridSample g;
  g.width = width;
  g.height = height;
  g.pixels.assign(std::size_t{width} * height, 0);

  auto in_bounds = [&](int r, int c) {
    return r >= 0 && c >= 0 && r < static_cast<int>(height) && c < static_cast<int>(width);
  };
  auto on = [&](int r, int c) { return g.pixels[static_cast<std::uint32_t>(r) * width + c]; };
  // Legal target: free, and not 4-adjacent to the path except through the
  // current head (diagonal contact is allowed).
  auto legal = [&](int r, int c, int head_r, int head_c) {
    if (!in_bounds(r, c) || on(r, c)) return false;
    for (int d = 0; d < 4; ++d) {
      int nr = r + dir_row[d], nc = c + dir_col[d];
      if (!in_bounds(nr, nc)) continue;
      if ((nr != head_r || nc != head_c) && on(nr, nc)) return false;
    }
    return true;
  };

  std::uint64_t start = rng.below(std::uint64_t{width} * height);
  int row = static_cast<int>(start / width);
  int col = static_cast<int>(start % width);
  g.pixels[start] = 1;

  // First move: keep the sampled heading when legal, otherwise resample
  // uniformly among the legal directions; a fully blocked start (impossible
  // on grids with at least two cells per side) leaves a one-pixel path.
  int heading = static_cast<int>(rng.below(4));
  if (!legal(row + dir_row[heading], col + dir_col[heading], row, col)) {
    int options[4];
    int count = 0;
    for (int d = 0; d < 4; ++d)
      if (legal(row + dir_row[d], col + dir_col[d], row, col)) options[count++] = d;
    if (count == 0) return g;
    heading = options[rng.below(static_cast<std::uint64_t>(count))];
  }
  row += dir_row[heading];
  col += dir_col[heading];
  g.pixels[static_cast<std::uint32_t>(row) * width + col] = 1;

  // Extend forward, left, or right with equal probability among the legal
  // candidates until none is left.
  for (;;) {
    int candidates[3] = {heading, (heading + 3) % 4, (heading + 1) % 4};
    int options[3];
    int count = 0;
    for (int d : candidates)
      if (legal(row + dir_row[d], col + dir_col[d], row, col)) options[count++] = d;
    if (count == 0) break;
    heading = options[rng.below(static_cast<std::uint64_t>(count))];
    row += dir_row[heading];
    col += dir_col[heading];
    g.pixels[static_cast<std::uint32_t>(row) * width + col] = 1;
  }
  return g;
}

}  // namespace detail

/// Random simple paths on a grid: uniform start cell, uniform initial
/// heading, then steps to forward/left/right cells that are free and not
/// 4-adjacent to the existing path (other than the current head), chosen
/// uniformly, until the walk is stuck. Per-sample seeds are derived from
/// (seed, index), so a dataset is reproducible and independent of thread
/// count.
inline std::vector<GridSample> generate_path_dataset(std::uint32_t width, std::uint32_t height,
                                                     std::size_t count, std::uint64_t seed,
                                                     int threads = 1) {
  if (width < 2 || height < 2) throw InputError("grid must be at least 2x2");
  std::vector<GridSample> out(count);
  detail::parallel_chunks(count, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      out[i] = detail::generate_one_path(width, height, derive_seed(seed, i));
  });
  return out;
}

inline std::vector<Evidence> to_evidence(const std::vector<GridSample>& samples) {
  std::vector<Evidence> out;
  out.reserve(samples.size());
  for (const GridSample& g : samples) out.push_back(g.to_evidence());
  return out;
}

// ---------------------------------------------------------------------------
// Dataset files: header "SPQN-DATA 1 N=<n>", then one line of n characters
// from {0,1,*} per sample. Bit-exact round trips, Star preserved.

inline void write_dataset(const std::string& path, const std::vector<Evidence>& samples,
                          std::uint32_t num_vars) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << "SPQN-DATA 1 N=" << num_vars << "\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != num_vars)
      throw InputError("sample " + std::to_string(i) + " has " +
                       std::to_string(samples[i].size()) + " positions, expected " +
                       std::to_string(num_vars));
    out << samples[i].to_string() << "\n";
  }
  if (!out) throw InputError("write to " + path + " failed");
}

inline std::vector<Evidence> read_dataset(const std::string& path, std::uint32_t* num_vars_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": missing header line");
  const std::string magic = "SPQN-DATA 1 N=";
  if (line.rfind(magic, 0) != 0)
    throw InputError(path + ": line 1: expected header starting with \"" + magic + "\"");
  std::uint32_t n = 0;
  std::size_t pos = magic.size();
  if (pos == line.size()) throw InputError(path + ": line 1: missing variable count");
  for (; pos < line.size(); ++pos) {
    char c = line[pos];
    if (c < '0' || c > '9')
      throw InputError(path + ": line 1: malformed variable count");
    n = n * 10 + static_cast<std::uint32_t>(c - '0');
    if (n > 1u << 24) throw InputError(path + ": line 1: variable count out of range");
  }
  std::vector<Evidence> samples;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.size() != n)
      throw InputError(path + ": line " + std::to_string(lineno) + ": expected " +
                       std::to_string(n) + " characters, got " + std::to_string(line.size()));
    try {
      samples.push_back(Evidence::from_string(line));
    } catch (const InputError& e) {
      throw InputError(path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (num_vars_out) *num_vars_out = n;
  return samples;
}

}  // namespace spqn
