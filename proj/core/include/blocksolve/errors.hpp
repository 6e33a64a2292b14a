#pragma once

#include <stdexcept>
#include <string>

namespace blocksolve {

// Sizes of two objects that must agree do not (partition vs vector, block
// index vs block count, ...).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A stepsize or schedule parameter violates the condition a convergence
// result is stated under. The message names the violated condition.
class InfeasibleParameters : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A regularity certificate (Lipschitz, co-coercivity, weak-Minty, known
// solution) is required but missing or cannot be computed.
class CertificateUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The practical ARCOG state has let tau_k decay below the representable
// floor without being renormalized.
class RenormalizationNeeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed problem/config documents.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace blocksolve
