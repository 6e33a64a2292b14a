#pragma once

// Block-partitioned vectors, weighted norms and the categorical block
// sampler shared by every randomized solver in the library.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace blocksolve {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Partition of R^p into n contiguous blocks of sizes p_1..p_n.
class BlockPartition {
 public:
  explicit BlockPartition(std::vector<std::size_t> sizes);

  static BlockPartition uniform(std::size_t num_blocks, std::size_t block_size);

  std::size_t num_blocks() const { return sizes_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t size(std::size_t i) const { return sizes_.at(i); }
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  const std::vector<std::size_t>& offsets() const { return offsets_; }

  // Segment views of block i inside a length-p vector.
  auto block(Vector& x, std::size_t i) const {
    return x.segment(static_cast<Eigen::Index>(offsets_[i]),
                     static_cast<Eigen::Index>(sizes_[i]));
  }
  auto block(const Vector& x, std::size_t i) const {
    return x.segment(static_cast<Eigen::Index>(offsets_[i]),
                     static_cast<Eigen::Index>(sizes_[i]));
  }

  void check_index(std::size_t i) const;
  void check_vector(const Vector& x) const;

  bool operator==(const BlockPartition& other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
};

using PartitionPtr = std::shared_ptr<const BlockPartition>;

/// Dense vector together with the partition it is read through.
class BlockVector {
 public:
  BlockVector(PartitionPtr partition, Vector data);
  static BlockVector zeros(PartitionPtr partition);

  const BlockPartition& partition() const { return *partition_; }
  const PartitionPtr& partition_ptr() const { return partition_; }
  const Vector& values() const { return data_; }
  Vector& values() { return data_; }

  auto block(std::size_t i) const { return partition_->block(data_, i); }
  auto block(std::size_t i) { return partition_->block(data_, i); }

 private:
  PartitionPtr partition_;
  Vector data_;
};

/// Per-block norm weights sigma_i > 0.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> sigma);
  static WeightVector ones(std::size_t n) { return WeightVector(std::vector<double>(n, 1.0)); }

  std::size_t size() const { return sigma_.size(); }
  double operator[](std::size_t i) const { return sigma_[i]; }

 private:
  std::vector<double> sigma_;
};

/// Categorical distribution over block indices, sampled by inverse CDF.
class BlockDistribution {
 public:
  explicit BlockDistribution(std::vector<double> probs);
  static BlockDistribution uniform(std::size_t n);

  std::size_t size() const { return probs_.size(); }
  double prob(std::size_t i) const { return probs_[i]; }
  double p_min() const { return p_min_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<double>& cumulative() const { return cumulative_; }

 private:
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  double p_min_ = 0.0;
};

/// sum_i sigma_i ||x_i||^2.
double weighted_norm_sq(const BlockVector& x, const WeightVector& sigma);

/// Smallest i with cumulative[i] > u; u is clamped to [0, 1).
std::size_t sample_block(const BlockDistribution& dist, double u);

/// Copy of x with block i replaced by v.
BlockVector block_scatter(const BlockVector& x, std::size_t i, std::span<const double> v);

/// The single seedable uniform stream a run draws its block indices from.
/// Uniforms are built from the top 53 bits of mt19937_64 so the stream is
/// identical across standard library implementations.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

class IndexStream {
 public:
  IndexStream(std::uint64_t seed, BlockDistribution dist)
      : uniforms_(seed), dist_(std::move(dist)) {}
  std::size_t next() { return sample_block(dist_, uniforms_.next()); }
  const BlockDistribution& distribution() const { return dist_; }

 private:
  UniformStream uniforms_;
  BlockDistribution dist_;
};

/// The first `count` indices of the stream for `seed`.
std::vector<std::size_t> index_sequence(std::uint64_t seed, const BlockDistribution& dist,
                                        std::size_t count);

}  // namespace blocksolve
