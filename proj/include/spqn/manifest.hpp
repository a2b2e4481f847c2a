#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "spqn/common.hpp"
#include "spqn/rng.hpp"
#include "spqn/version.hpp"

namespace spqn {

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path + " for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("cannot allocate hash context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex(static_cast<std::size_t>(len) * 2, '0');
  static const char* alphabet = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex[2 * i] = alphabet[digest[i] >> 4];
    hex[2 * i + 1] = alphabet[digest[i] & 0xf];
  }
  return hex;
}

/// Provenance record written next to every file-producing command's output:
/// the exact command line, the seed, the RNG algorithm, hashes of inputs and
/// outputs, wall-clock time, and library version. Re-running the recorded
/// command with the recorded seed reproduces the outputs bit-for-bit in
/// single-threaded mode.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256
  std::int64_t wall_ms = 0;

  void add_input(const std::string& path) { inputs.emplace_back(path, sha256_file(path)); }
  void add_output(const std::string& path) { outputs.emplace_back(path, sha256_file(path)); }

  void write(const std::string& path) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = seed;
    j["rng"] = SplitMix64::name;
    j["threads"] = threads;
    nlohmann::ordered_json in = nlohmann::ordered_json::object();
    for (const auto& [p, h] : inputs) in[p] = h;
    j["inputs"] = std::move(in);
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [p, h] : outputs) out[p] = h;
    j["outputs"] = std::move(out);
    j["wall_ms"] = wall_ms;
    j["library_version"] = library_version;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open " + path + " for writing");
    f << j.dump(2) << "\n";
    if (!f) throw InputError("write to " + path + " failed");
  }
};

}  // namespace spqn
