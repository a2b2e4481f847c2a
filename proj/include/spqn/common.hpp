#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace spqn {

// Node handles are indices into Network::node(); finalize() guarantees they
// are dense in [0, size).
using NodeId = std::uint32_t;
inline constexpr NodeId invalid_node = static_cast<NodeId>(-1);

// Log-domain value of a node. -infinity encodes probability zero; NaN never
// escapes the evaluator.
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed graph: bad child reference, cycle, unreachable node, ...
class StructuralError : public Error {
public:
  using Error::Error;
};

// Bad caller-supplied data: evidence length, file contents, spec fields, ...
class InputError : public Error {
public:
  using Error::Error;
};

// Runtime failure during evaluation (zero-probability denominator, refused
// Star pattern).
class EvalError : public Error {
public:
  using Error::Error;
};

class SampleError : public Error {
public:
  using Error::Error;
};

class TrainError : public Error {
public:
  using Error::Error;
};

}  // namespace spqn
