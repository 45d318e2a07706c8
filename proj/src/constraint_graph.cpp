#include "gact/constraint_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gact {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool share_participant(const std::vector<int>& a, const std::vector<int>& b) {
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) ++i; else ++j;
  }
  return false;
}

// END endpoints of the last physical activities reached through `node`.
void last_physical_descendants(const ActivityNode& node,
                               std::vector<int>* out_ids) {
  if (is_physical(node.label)) {
    out_ids->push_back(node.id);
    return;
  }
  for (const auto& seq : node.children)
    last_physical_descendants(seq.segments.back(), out_ids);
}

}  // namespace

ConstraintGraph build_constraint_graph(const ActivityTree& tree,
                                       const ModelConfig& config) {
  ConstraintGraph g;
  std::vector<const ActivityNode*> leaves = physical_leaves(tree);
  std::map<int, int> order;  // leaf node id -> leaf order
  for (size_t m = 0; m < leaves.size(); ++m) {
    order[leaves[m]->id] = static_cast<int>(m);
    g.nodes.push_back({leaves[m]->id, EndpointSide::START});
    g.nodes.push_back({leaves[m]->id, EndpointSide::END});
  }

  // Temporal edge per leaf: w = sigma_a * duration^exponent.
  for (size_t m = 0; m < leaves.size(); ++m) {
    const ActivityNode* leaf = leaves[m];
    double duration = leaf->end - leaf->start + 1;
    double w = config.sigma.at(leaf->label) *
               std::pow(duration, config.temporal_exponent);
    g.edges.push_back({g.endpoint_index(static_cast<int>(m), EndpointSide::START),
                       g.endpoint_index(static_cast<int>(m), EndpointSide::END),
                       EdgeKind::TEMPORAL, w});
  }

  // Transitional edges: END of m' to START of m when frame-adjacent with a
  // shared participant.
  for (size_t mp = 0; mp < leaves.size(); ++mp) {
    for (size_t m = 0; m < leaves.size(); ++m) {
      if (mp == m) continue;
      if (leaves[mp]->end + 1 != leaves[m]->start) continue;
      if (!share_participant(leaves[mp]->participants, leaves[m]->participants))
        continue;
      g.edges.push_back(
          {g.endpoint_index(static_cast<int>(mp), EndpointSide::END),
           g.endpoint_index(static_cast<int>(m), EndpointSide::START),
           EdgeKind::TRANSITIONAL, 0.0});
    }
  }

  // Compositional edges: all participants of a MEET end in one location, so
  // the END endpoints of the last physical descendants of its child
  // sequences are tied pairwise.
  for_each_node(tree.root, [&](const ActivityNode& node) {
    if (node.label != ActivityLabel::MEET) return;
    std::vector<int> ends;
    for (const auto& seq : node.children)
      last_physical_descendants(seq.segments.back(), &ends);
    for (size_t i = 0; i < ends.size(); ++i)
      for (size_t j = i + 1; j < ends.size(); ++j)
        g.edges.push_back({g.endpoint_index(order.at(ends[i]), EndpointSide::END),
                           g.endpoint_index(order.at(ends[j]), EndpointSide::END),
                           EdgeKind::COMPOSITIONAL, 0.0});
  });
  return g;
}

namespace {

Eigen::MatrixXd adjacency_of(const ConstraintGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  Eigen::MatrixXd adj = Eigen::MatrixXd::Constant(n, n, kInf);
  for (int i = 0; i < n; ++i) adj(i, i) = 0.0;
  for (const auto& e : graph.edges) {
    adj(e.a, e.b) = std::min(adj(e.a, e.b), e.weight);
    adj(e.b, e.a) = std::min(adj(e.b, e.a), e.weight);
  }
  return adj;
}

}  // namespace

Eigen::MatrixXd all_pairs_shortest_paths(const Eigen::MatrixXd& adjacency,
                                         bool parallel) {
  Eigen::MatrixXd d = adjacency;
  const int n = static_cast<int>(d.rows());
  for (int k = 0; k < n; ++k) {
#ifdef _OPENMP
#pragma omp parallel for if (parallel && n >= 64) schedule(static)
#endif
    for (int i = 0; i < n; ++i) {
      const double dik = d(i, k);
      if (dik == kInf) continue;
      for (int j = 0; j < n; ++j) {
        const double via = dik + d(k, j);
        if (via < d(i, j)) d(i, j) = via;
      }
    }
  }
  return d;
}

Eigen::MatrixXd distance_matrix(const ConstraintGraph& graph) {
  return all_pairs_shortest_paths(adjacency_of(graph), true);
}

Eigen::MatrixXd distance_matrix_serial(const ConstraintGraph& graph) {
  return all_pairs_shortest_paths(adjacency_of(graph), false);
}

EndpointCovariance endpoint_covariance(const Eigen::MatrixXd& distances,
                                       double lambda,
                                       const std::vector<EndpointId>& ordering) {
  const int n = static_cast<int>(distances.rows());
  Eigen::MatrixXd phi(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = distances(i, j);
      phi(i, j) = (d == kInf) ? 0.0 : lambda * std::exp(-d * d);
    }
  phi = 0.5 * (phi + phi.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phi);
  EndpointCovariance out;
  out.ordering = ordering;
  out.min_eigenvalue_before_repair = es.eigenvalues().minCoeff();
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  out.matrix = es.eigenvectors() * ev.asDiagonal() *
               es.eigenvectors().transpose();
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  out.matrix.diagonal().array() += 1e-8 * lambda;
  return out;
}

std::string to_dot(const ConstraintGraph& graph, const ActivityTree& tree) {
  std::map<int, const ActivityNode*> by_id;
  for (const ActivityNode* leaf : physical_leaves(tree)) by_id[leaf->id] = leaf;

  std::ostringstream os;
  os << "graph constraint_graph {\n";
  for (size_t i = 0; i < graph.nodes.size(); ++i) {
    const EndpointId& ep = graph.nodes[i];
    const ActivityNode* leaf = by_id.count(ep.node_id) ? by_id.at(ep.node_id) : nullptr;
    os << "  n" << i << " [label=\"x" << ep.node_id
       << (ep.side == EndpointSide::START ? "^s" : "^e");
    if (leaf) os << "\\n" << to_string(leaf->label);
    os << "\"];\n";
  }
  for (const auto& e : graph.edges) {
    const char* style = e.kind == EdgeKind::TEMPORAL      ? "solid"
                        : e.kind == EdgeKind::TRANSITIONAL ? "dashed"
                                                           : "dotted";
    os << "  n" << e.a << " -- n" << e.b << " [style=" << style;
    if (e.kind == EdgeKind::TEMPORAL) os << ", label=\"" << e.weight << "\"";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace gact
