#pragma once

// Seeded synthetic instances with known solutions.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "blocksolve/operator.hpp"

namespace blocksolve {

enum class Spectrum {
  Uniform,   // eigenvalues uniform in [0.1, 1], largest pinned to 1
  Singular,  // eigenvalues {1, uniform(0,1)..., 0}
  Wide,      // eigenvalues log-uniform in [1e-3, 1], largest pinned to 1
};

Spectrum spectrum_from_string(const std::string& name);
std::string to_string(Spectrum s);

Vector gaussian_vector(std::mt19937_64& rng, std::size_t n);
Matrix gaussian_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols);
Matrix random_orthogonal(std::mt19937_64& rng, std::size_t n);
/// U diag(eigs) U^T for a random orthogonal U.
Matrix random_psd(std::mt19937_64& rng, std::size_t n, Spectrum spectrum);

/// n blocks of size `block_size`, Q_i = random_psd(spectrum), x* ~ N(0, I).
std::shared_ptr<SeparableQuadraticOperator> random_separable_cocoercive(
    std::size_t num_blocks, std::size_t block_size, std::uint64_t seed,
    Spectrum spectrum = Spectrum::Uniform);

/// M = S + K with S PSD and K skew-symmetric, scaled to ||M|| = 1; rho = 0.
std::shared_ptr<LinearOperator> random_monotone_linear(std::size_t num_blocks,
                                                       std::size_t block_size, std::uint64_t seed,
                                                       double skew_weight = 1.0);

/// M = U D U^T with D block-diagonal 2x2 scaled rotations whose weak-Minty
/// parameter is at most `rho`, attained by one of them. Total dimension must
/// be even.
std::shared_ptr<LinearOperator> random_weak_minty_linear(std::size_t num_blocks,
                                                         std::size_t block_size,
                                                         std::uint64_t seed, double rho);

}  // namespace blocksolve
