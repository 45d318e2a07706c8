#include "gact/gp_likelihood.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "gact/tree_prior.hpp"

namespace gact {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd se_kernel(const std::vector<double>& times_a,
                          const std::vector<double>& times_b, double variance,
                          double length_scale) {
  if (variance <= 0 || length_scale <= 0)
    throw std::invalid_argument("se_kernel: parameters must be positive");
  Eigen::MatrixXd k(times_a.size(), times_b.size());
  const double inv2l2 = 1.0 / (2.0 * length_scale * length_scale);
  for (size_t p = 0; p < times_a.size(); ++p)
    for (size_t q = 0; q < times_b.size(); ++q) {
      const double dt = times_a[p] - times_b[q];
      k(p, q) = variance * std::exp(-dt * dt * inv2l2);
    }
  return k;
}

GpBridge gp_bridge(const ActivityNode& leaf, const ModelConfig& config) {
  GpBridge bridge;
  const int duration = leaf.end - leaf.start + 1;
  if (duration <= 2) return bridge;  // endpoints only

  const double var = config.sigma.at(leaf.label) * config.sigma.at(leaf.label);
  std::vector<double> interior, endpoints = {double(leaf.start),
                                             double(leaf.end)};
  for (int t = leaf.start + 1; t < leaf.end; ++t) interior.push_back(t);

  Eigen::MatrixXd kee = se_kernel(endpoints, endpoints, var,
                                  config.length_scale);
  Eigen::MatrixXd kie = se_kernel(interior, endpoints, var,
                                  config.length_scale);
  Eigen::MatrixXd kii = se_kernel(interior, interior, var,
                                  config.length_scale);

  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(kee);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd sol = llt.solve(kie.transpose());  // 2 x interior
      bridge.map = sol.transpose();
      bridge.cov = kii - kie * sol;
      bridge.cov = 0.5 * (bridge.cov + bridge.cov.transpose()).eval();
      return bridge;
    }
    kee.diagonal().array() += 1e-8 * var;
  }
  throw std::runtime_error("gp_bridge: endpoint kernel not factorizable");
}

GroupModel build_group_model(const ActivityTree& tree,
                             const ModelConfig& config) {
  GroupModel gm;
  ConstraintGraph graph = build_constraint_graph(tree, config);
  Eigen::MatrixXd dist = distance_matrix(graph);
  EndpointCovariance phi = endpoint_covariance(dist, config.lambda,
                                               graph.nodes);
  gm.phi = phi.matrix;
  gm.phi_min_eigenvalue_before_repair = phi.min_eigenvalue_before_repair;

  for (const ActivityNode* leaf : physical_leaves(tree)) {
    GroupModel::Leaf l;
    l.id = leaf->id;
    l.label = leaf->label;
    l.start = leaf->start;
    l.end = leaf->end;
    l.participants = leaf->participants;
    l.bridge = gp_bridge(*leaf, config);
    gm.row_offset.push_back(gm.total_rows);
    gm.total_rows += leaf->end - leaf->start + 1;
    gm.leaves.push_back(std::move(l));
  }

  const int n_ep = static_cast<int>(graph.nodes.size());
  gm.endpoint_map = Eigen::MatrixXd::Zero(gm.total_rows, n_ep);
  gm.interior_cov = Eigen::MatrixXd::Zero(gm.total_rows, gm.total_rows);
  for (size_t m = 0; m < gm.leaves.size(); ++m) {
    const auto& l = gm.leaves[m];
    const int L = l.end - l.start + 1;
    const int r0 = gm.row_offset[m];
    const int cs = graph.endpoint_index(static_cast<int>(m),
                                        EndpointSide::START);
    const int ce = graph.endpoint_index(static_cast<int>(m),
                                        EndpointSide::END);
    if (L == 1) {
      // A single frame is both endpoints; tie it to the END node so that
      // meeting constraints (which bind ends) reach the observation.
      gm.endpoint_map(r0, ce) = 1.0;
      continue;
    }
    gm.endpoint_map(r0, cs) = 1.0;
    gm.endpoint_map(r0 + L - 1, ce) = 1.0;
    for (int i = 1; i + 1 < L; ++i) {
      gm.endpoint_map(r0 + i, cs) = l.bridge.map(i - 1, 0);
      gm.endpoint_map(r0 + i, ce) = l.bridge.map(i - 1, 1);
      for (int j = 1; j + 1 < L; ++j)
        gm.interior_cov(r0 + i, r0 + j) = l.bridge.cov(i - 1, j - 1);
    }
  }
  gm.group_cov = gm.endpoint_map * gm.phi * gm.endpoint_map.transpose() +
                 gm.interior_cov;
  gm.group_cov = 0.5 * (gm.group_cov + gm.group_cov.transpose()).eval();
  return gm;
}

SceneGaussian assemble_scene_covariance(const ActivityTree& tree,
                                        int actor_count, int horizon,
                                        const ModelConfig& config) {
  if (tree.actor_count != actor_count || tree.horizon != horizon)
    throw std::runtime_error(
        "assemble_scene_covariance: tree and scene shapes differ");

  SceneGaussian sg;
  sg.actor_count = actor_count;
  sg.horizon = horizon;
  sg.group = build_group_model(tree, config);

  // Actor ids in the tree are positions 0..J-1 of the sorted root set.
  const std::vector<int>& ids = tree.root.participants;
  std::map<int, int> actor_index;
  for (size_t i = 0; i < ids.size(); ++i)
    actor_index[ids[i]] = static_cast<int>(i);

  sg.leaf_of.assign(actor_count, std::vector<int>(horizon, -1));
  for (size_t m = 0; m < sg.group.leaves.size(); ++m) {
    const auto& l = sg.group.leaves[m];
    for (int actor : l.participants) {
      int j = actor_index.at(actor);
      for (int t = l.start; t <= l.end; ++t)
        sg.leaf_of[j][t - 1] = static_cast<int>(m);
    }
  }
  for (int j = 0; j < actor_count; ++j)
    for (int t = 1; t <= horizon; ++t)
      if (sg.leaf_of[j][t - 1] < 0)
        throw std::runtime_error(
            "assemble_scene_covariance: actor uncovered at some frame");

  const int dim = actor_count * horizon;
  sg.cov = Eigen::MatrixXd::Zero(dim, dim);

  // Shared group-trajectory covariance, selected per (actor, frame).
  for (int j = 0; j < actor_count; ++j)
    for (int t = 1; t <= horizon; ++t) {
      const int r = sg.row(j, t);
      const int gr = sg.group.group_row(sg.leaf_of[j][t - 1], t);
      for (int j2 = 0; j2 < actor_count; ++j2)
        for (int t2 = 1; t2 <= horizon; ++t2)
          sg.cov(r, sg.row(j2, t2)) =
              sg.group.group_cov(gr, sg.group.group_row(
                                         sg.leaf_of[j2][t2 - 1], t2));
    }

  // Per-actor, per-segment individual deviation kernels on the diagonal
  // blocks; segments are independent of each other.
  for (int j = 0; j < actor_count; ++j) {
    int t = 1;
    while (t <= horizon) {
      const int leaf = sg.leaf_of[j][t - 1];
      const auto& l = sg.group.leaves[leaf];
      std::vector<double> times;
      for (int u = l.start; u <= l.end; ++u) times.push_back(u);
      const double rho = config.rho.at(l.label);
      Eigen::MatrixXd k = se_kernel(times, times, rho * rho,
                                    config.length_scale);
      for (int a = 0; a < k.rows(); ++a)
        for (int b = 0; b < k.cols(); ++b)
          sg.cov(sg.row(j, l.start + a), sg.row(j, l.start + b)) += k(a, b);
      t = l.end + 1;
    }
  }
  sg.cov = 0.5 * (sg.cov + sg.cov.transpose()).eval();
  sg.cov.diagonal().array() += config.noise * config.noise;

  // Factorize with jitter escalation.
  const double scale = sg.cov.diagonal().mean();
  for (double jitter : {0.0, 1e-8, 1e-6, 1e-4}) {
    Eigen::MatrixXd c = sg.cov;
    c.diagonal().array() += jitter * scale;
    sg.llt.compute(c);
    if (sg.llt.info() == Eigen::Success) {
      sg.jitter_used = jitter * scale;
      sg.log_det = 0.0;
      for (int i = 0; i < dim; ++i)
        sg.log_det += 2.0 * std::log(sg.llt.matrixL()(i, i));
      if (std::isfinite(sg.log_det)) return sg;
    }
  }
  throw std::runtime_error(
      "assemble_scene_covariance: factorization failed after jitter "
      "escalation (tree id " +
      std::to_string(tree.root.id) + ")");
}

double log_marginal_likelihood(const Scene& scene,
                               const SceneGaussian& sg) {
  const int dim = sg.actor_count * sg.horizon;
  double total = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    Eigen::VectorXd y(dim);
    for (int j = 0; j < sg.actor_count; ++j)
      for (int t = 1; t <= sg.horizon; ++t)
        y(sg.row(j, t)) = scene.trajectories[j](axis, t - 1);
    const double quad = y.dot(sg.llt.solve(y));
    total += -0.5 * quad - 0.5 * sg.log_det -
             0.5 * dim * std::log(2.0 * M_PI);
  }
  if (!std::isfinite(total))
    throw std::runtime_error("log_marginal_likelihood: non-finite result");
  return total;
}

double log_marginal_likelihood(const Scene& scene, const ActivityTree& tree,
                               const ModelConfig& config) {
  SceneGaussian sg = assemble_scene_covariance(
      tree, static_cast<int>(scene.actor_ids.size()), scene.horizon, config);
  return log_marginal_likelihood(scene, sg);
}

double log_posterior(const Scene& scene, const ActivityTree& tree,
                     const ModelConfig& config) {
  const double prior = tree_log_prior(tree, config);
  if (prior == kNegInf) return kNegInf;
  return prior + log_marginal_likelihood(scene, tree, config);
}

}  // namespace gact
