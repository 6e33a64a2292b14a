#include "blocksolve/block.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "blocksolve/errors.hpp"

namespace blocksolve {

BlockPartition::BlockPartition(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw DimensionError("partition needs at least one block");
  offsets_.resize(sizes_.size());
  std::size_t acc = 0;
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (sizes_[i] == 0) throw DimensionError("block " + std::to_string(i) + " has size 0");
    offsets_[i] = acc;
    acc += sizes_[i];
  }
  dim_ = acc;
}

BlockPartition BlockPartition::uniform(std::size_t num_blocks, std::size_t block_size) {
  return BlockPartition(std::vector<std::size_t>(num_blocks, block_size));
}

void BlockPartition::check_index(std::size_t i) const {
  if (i >= sizes_.size()) {
    throw DimensionError("block index " + std::to_string(i) + " out of range for " +
                         std::to_string(sizes_.size()) + " blocks");
  }
}

void BlockPartition::check_vector(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) {
    throw DimensionError("vector of length " + std::to_string(x.size()) +
                         " does not match partition dimension " + std::to_string(dim_));
  }
}

BlockVector::BlockVector(PartitionPtr partition, Vector data)
    : partition_(std::move(partition)), data_(std::move(data)) {
  if (!partition_) throw DimensionError("BlockVector requires a partition");
  partition_->check_vector(data_);
}

BlockVector BlockVector::zeros(PartitionPtr partition) {
  const auto p = static_cast<Eigen::Index>(partition->dim());
  return BlockVector(std::move(partition), Vector::Zero(p));
}

WeightVector::WeightVector(std::vector<double> sigma) : sigma_(std::move(sigma)) {
  for (double s : sigma_) {
    if (!(s > 0.0)) throw std::invalid_argument("block weights must be positive");
  }
}

BlockDistribution::BlockDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw DimensionError("distribution needs at least one block");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("block probabilities must lie in (0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("block probabilities must sum to 1 (got " + std::to_string(total) + ")");
  }
  cumulative_.resize(probs_.size());
  std::partial_sum(probs_.begin(), probs_.end(), cumulative_.begin());
  // Pin the last entry so every u in [0,1) maps to a valid block.
  cumulative_.back() = 1.0;
  p_min_ = *std::min_element(probs_.begin(), probs_.end());
}

BlockDistribution BlockDistribution::uniform(std::size_t n) {
  if (n == 0) throw DimensionError("distribution needs at least one block");
  std::vector<double> probs(n, 1.0 / static_cast<double>(n));
  // 1/n summed n times can drift by a few ulps; the constructor tolerance absorbs it.
  return BlockDistribution(std::move(probs));
}

double weighted_norm_sq(const BlockVector& x, const WeightVector& sigma) {
  const auto& part = x.partition();
  if (sigma.size() != part.num_blocks()) {
    throw DimensionError("weight vector has " + std::to_string(sigma.size()) + " entries for " +
                         std::to_string(part.num_blocks()) + " blocks");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < part.num_blocks(); ++i) acc += sigma[i] * x.block(i).squaredNorm();
  return acc;
}

std::size_t sample_block(const BlockDistribution& dist, double u) {
  if (!(u >= 0.0)) u = 0.0;
  if (u >= 1.0) u = std::nextafter(1.0, 0.0);
  const auto& cum = dist.cumulative();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) return cum.size() - 1;
  return static_cast<std::size_t>(it - cum.begin());
}

BlockVector block_scatter(const BlockVector& x, std::size_t i, std::span<const double> v) {
  const auto& part = x.partition();
  part.check_index(i);
  if (v.size() != part.size(i)) {
    throw DimensionError("scatter of " + std::to_string(v.size()) + " values into block of size " +
                         std::to_string(part.size(i)));
  }
  BlockVector out = x;
  auto seg = out.block(i);
  for (std::size_t j = 0; j < v.size(); ++j) seg[static_cast<Eigen::Index>(j)] = v[j];
  return out;
}

std::vector<std::size_t> index_sequence(std::uint64_t seed, const BlockDistribution& dist,
                                        std::size_t count) {
  IndexStream stream(seed, dist);
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = stream.next();
  return out;
}

}  // namespace blocksolve
