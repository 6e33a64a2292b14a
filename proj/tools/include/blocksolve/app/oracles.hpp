#pragma once

// Reference computations that share no code with the library kernels they
// are compared against: dense solves of the defining systems, plain loops
// over the update formulas.

#include <cstddef>

#include <blocksolve/block.hpp>

namespace blocksolve::app {

/// Solves the 2np-dimensional system for the resolvent of n B(x_1) plus the
/// consensus normal cone, with B(y) = Q y + b, and returns the first copy.
Vector brute_force_consensus(const Vector& u, std::size_t n, double beta, const Matrix& q, const Vector& b);

/// (I + lambda M)^{-1}(v - lambda b) by Householder QR.
Vector brute_force_affine_resolvent(const Matrix& m, const Vector& b, double lambda, const Vector& v);

}  // namespace blocksolve::app
