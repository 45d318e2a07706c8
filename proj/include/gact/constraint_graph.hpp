#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gact/config.hpp"
#include "gact/types.hpp"

namespace gact {

enum class EndpointSide { START, END };
enum class EdgeKind { TEMPORAL, TRANSITIONAL, COMPOSITIONAL };

struct EndpointId {
  int node_id = 0;  // physical leaf id
  EndpointSide side = EndpointSide::START;
};

struct ConstraintEdge {
  int a = 0;  // indices into ConstraintGraph::nodes
  int b = 0;
  EdgeKind kind = EdgeKind::TEMPORAL;
  double weight = 0.0;
};

// Weighted graph over the 2N group-trajectory endpoints of the N physical
// leaves. Shortest-path distances on it define the endpoint covariance.
struct ConstraintGraph {
  std::vector<EndpointId> nodes;  // leaf order, START then END per leaf
  std::vector<ConstraintEdge> edges;

  int endpoint_index(int leaf_order, EndpointSide side) const {
    return 2 * leaf_order + (side == EndpointSide::END ? 1 : 0);
  }
};

struct EndpointCovariance {
  Eigen::MatrixXd matrix;  // 2N x 2N, PSD after repair
  std::vector<EndpointId> ordering;
  double min_eigenvalue_before_repair = 0.0;
};

// Temporal edge per leaf (weight sigma_a * duration^exponent), zero-weight
// transitional edges between frame-adjacent leaves sharing a participant,
// and zero-weight compositional edges tying the final endpoints of every
// MEET's child sequences together.
ConstraintGraph build_constraint_graph(const ActivityTree& tree,
                                       const ModelConfig& config);

// All-pairs shortest-path distances; unreachable pairs are +inf.
// The parallel kernel is the production path; the serial variant is the
// reference used by the tests and the benchmark.
Eigen::MatrixXd distance_matrix(const ConstraintGraph& graph);
Eigen::MatrixXd distance_matrix_serial(const ConstraintGraph& graph);

// Floyd-Warshall over an explicit adjacency matrix (inf = no edge).
Eigen::MatrixXd all_pairs_shortest_paths(const Eigen::MatrixXd& adjacency,
                                         bool parallel = true);

// phi = lambda * exp(-d^2), symmetrized, eigenvalues floored at zero and a
// small diagonal jitter added.
EndpointCovariance endpoint_covariance(const Eigen::MatrixXd& distances,
                                       double lambda,
                                       const std::vector<EndpointId>& ordering = {});

// Graphviz rendering of the constraint graph for debugging.
std::string to_dot(const ConstraintGraph& graph, const ActivityTree& tree);

}  // namespace gact
