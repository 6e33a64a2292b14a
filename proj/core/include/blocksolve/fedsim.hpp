#pragma once

// Message-passing simulations of the two federated schemes: one sampled
// user per round talks to the server, everything else stays put.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blocksolve/solvers.hpp"
#include "blocksolve/splitting.hpp"

namespace blocksolve {

enum class Direction { ServerToUser, UserToServer };

struct RoundMessage {
  Direction direction = Direction::ServerToUser;
  long round = 0;
  std::size_t user = 0;
  std::string payload;  // "u_hat_pair", "delta_u", "delta_wz"
  std::size_t doubles = 0;
  std::size_t bytes = 0;
};

/// Federated optimistic gradient: RCOG applied to S^lambda, with the
/// consensus point maintained incrementally on the server.
class FedOgSimulation {
 public:
  FedOgSimulation(SplitProblemPtr problem, double lambda, RcogParams params,
                  BlockDistribution dist, const Vector& x0);

  /// Runs round k = round_index() with sampled user i.
  std::vector<RoundMessage> round(std::size_t i);

  long round_index() const { return k_; }
  std::size_t num_users() const { return users_.size(); }
  /// Stacked x_i, the RCOG iterate on the product space.
  Vector global_iterate() const;
  const Vector& server_mean() const { return ubar_; }
  /// (1/n) sum_i u_i from the user states.
  Vector recomputed_mean() const;
  const Vector& consensus_point() const { return uhat_cur_; }
  /// sum_i ||x_i - u_hat||^2 with the server's current u_hat.
  double certificate() const;
  const FbfsOperator& fbfs() const { return op_; }
  const RcogParams& params() const { return params_; }

 private:
  struct User {
    Vector x_cur, x_prev, u;
    long last_active = -2;
  };
  FbfsOperator op_;
  RcogParams params_;
  BlockDistribution dist_;
  std::vector<User> users_;
  Vector ubar_, uhat_cur_, uhat_prev_;
  long k_ = 0;
};

/// Accelerated federated Douglas-Rachford: ARCOG on G^beta in the z/w form.
/// Representation rebases are logged on the server and applied by each
/// user the next time it is sampled.
class AcFedDrSimulation {
 public:
  AcFedDrSimulation(SplitProblemPtr problem, double beta, ArcogSchedule schedule, double omega,
                    BlockDistribution dist, const Vector& u0, double rebase_threshold = 1e-4);

  std::vector<RoundMessage> round(std::size_t i);

  long round_index() const { return k_; }
  std::size_t num_users() const { return users_.size(); }
  /// Stacked u_i = z_i + c_k w_i (pending rebases applied on a copy).
  Vector reconstructed_u() const;
  const Vector& server_z_mean() const { return zbar_; }
  const Vector& server_w_mean() const { return wbar_; }
  /// Means recomputed from user states mapped to the server's epoch.
  Vector recomputed_z_mean() const;
  Vector recomputed_w_mean() const;
  const Vector& consensus_point() const { return uhat_cur_; }
  /// sum_i ||u_hat - J_{beta A_i}(2 u_hat - u_i)||^2 with the server's u_hat.
  double certificate() const;
  double tau() const { return tau_; }
  double c() const { return c_; }
  std::size_t rebases() const { return epochs_.size(); }
  const DrsOperator& drs() const { return op_; }

 private:
  struct Map {
    double shift = 0.0;  // C
    double scale = 1.0;  // T
  };
  struct User {
    Vector z, w, z_prev, w_prev;
    long last_active = -2;
    std::size_t epoch = 0;
  };
  Map pending(std::size_t epoch) const;
  static void apply(const Map& m, Vector& z, Vector& w);

  DrsOperator op_;
  ArcogSchedule schedule_;
  double omega_;
  BlockDistribution dist_;
  double rebase_threshold_;
  std::vector<User> users_;
  std::vector<Map> epochs_;
  Vector zbar_, wbar_, uhat_cur_, uhat_prev_;
  double tau_ = 1.0;
  double c_ = 0.0;
  double c_prev_ = 0.0;
  long k_ = 0;
};

// ---------------------------------------------------------------- runs

enum class FederatedAlgorithm { FedOG, AcFedDR };

struct FederatedConfig {
  FederatedAlgorithm algorithm = FederatedAlgorithm::FedOG;
  SplitProblemPtr problem;
  std::uint64_t seed = 0;
  long rounds = 0;
  std::optional<double> lambda;  // FedOG, default midpoint of the admissible range
  std::optional<double> beta;    // AcFedDR, default 1
  std::optional<double> omega;   // FedOG default 1; AcFedDR default beta p_min
  double nu = 4.0;
  std::optional<std::vector<double>> probs;  // default uniform
  std::optional<Vector> x0;                  // common start point, default 0
  double rebase_threshold = 1e-4;
  bool keep_ledger = true;
  /// Records the solver's Lyapunov value per row (needs a known solution).
  bool lyapunov = false;
};

struct FederatedRow {
  long round = 0;
  std::optional<std::size_t> sampled_user;  // user sampled at this round
  double certificate = 0.0;
  std::optional<double> lyapunov;
  std::size_t cumulative_bytes = 0;
};

struct FederatedTrace {
  std::vector<FederatedRow> rows;
  std::vector<RoundMessage> ledger;
  double lambda = 0.0;
  double beta = 0.0;
  double omega = 0.0;
  double psi = 0.0;
  double initial_distance_sq = 0.0;  // ||x0 - x*||^2 or ||u0 - u*||^2 on the product space
};

FederatedTrace run_federated(const FederatedConfig& config);

std::string to_string(Direction d);
std::string to_string(FederatedAlgorithm a);
FederatedAlgorithm federated_algorithm_from_string(const std::string& name);

}  // namespace blocksolve
