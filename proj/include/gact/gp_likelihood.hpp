#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gact/config.hpp"
#include "gact/constraint_graph.hpp"
#include "gact/types.hpp"

namespace gact {

// Squared-exponential kernel between two frame-time lists:
//   k(t, t') = variance * exp(-(t - t')^2 / (2 * length_scale^2))
Eigen::MatrixXd se_kernel(const std::vector<double>& times_a,
                          const std::vector<double>& times_b, double variance,
                          double length_scale);

// Conditional law of a leaf's interior frames given its two endpoints:
// mean = map * [x_start; x_end], covariance = cov. Empty for duration <= 2.
struct GpBridge {
  Eigen::MatrixXd map;  // interior x 2
  Eigen::MatrixXd cov;  // interior x interior
};

GpBridge gp_bridge(const ActivityNode& leaf, const ModelConfig& config);

// The latent group-trajectory layer shared by the likelihood and the
// forward sampler: endpoint covariance plus per-leaf GP bridges, stacked
// over every (leaf, frame) pair.
struct GroupModel {
  struct Leaf {
    int id = 0;
    ActivityLabel label{};
    int start = 1, end = 1;
    std::vector<int> participants;
    GpBridge bridge;
  };

  std::vector<Leaf> leaves;
  std::vector<int> row_offset;  // leaf -> first row of its frames in X
  int total_rows = 0;

  Eigen::MatrixXd phi;  // repaired endpoint covariance, 2N x 2N
  double phi_min_eigenvalue_before_repair = 0.0;

  Eigen::MatrixXd endpoint_map;  // B: total_rows x 2N
  Eigen::MatrixXd interior_cov;  // blockdiag bridge covariances
  Eigen::MatrixXd group_cov;     // B phi B^T + interior_cov

  // Row of frame t within leaf m's block.
  int group_row(int leaf, int frame) const {
    return row_offset[leaf] + (frame - leaves[leaf].start);
  }
};

GroupModel build_group_model(const ActivityTree& tree,
                             const ModelConfig& config);

// Joint Gaussian over all observed coordinates of one axis, with group
// trajectories marginalized analytically.
struct SceneGaussian {
  int actor_count = 0;
  int horizon = 0;
  GroupModel group;
  std::vector<std::vector<int>> leaf_of;  // [actor index][frame-1] -> leaf
  Eigen::MatrixXd cov;                    // (J*F) x (J*F), shared by axes
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det = 0.0;
  double jitter_used = 0.0;

  int row(int actor_index, int frame) const {
    return actor_index * horizon + frame - 1;
  }
};

// Throws std::runtime_error when the tree shape does not match the scene
// shape or the factorization fails after jitter escalation.
SceneGaussian assemble_scene_covariance(const ActivityTree& tree,
                                        int actor_count, int horizon,
                                        const ModelConfig& config);

// Sum over the two axes of the zero-mean Gaussian log-density of the scene.
double log_marginal_likelihood(const Scene& scene, const ActivityTree& tree,
                               const ModelConfig& config);
double log_marginal_likelihood(const Scene& scene,
                               const SceneGaussian& gaussian);

// tree_log_prior + log_marginal_likelihood; -inf for invalid trees.
double log_posterior(const Scene& scene, const ActivityTree& tree,
                     const ModelConfig& config);

}  // namespace gact
