#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gact/config.hpp"
#include "gact/types.hpp"

namespace gact {

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Structural checks: spans, tiling, partitions, role/label compatibility,
// root conventions. Violations are data, not exceptions.
ValidationReport validate_tree(const ActivityTree& tree);

// Exchangeable CRP partition log-mass:
//   sum_blocks [log(alpha) + lgamma(|block|)] - sum_{i=0}^{n-1} log(alpha+i)
// Throws std::invalid_argument if the blocks are not a partition of n items.
double crp_log_prob(const std::vector<std::vector<int>>& partition, int n,
                    double alpha);

// log mass of a geometric duration (support d >= 1, mean = rate).
double geometric_duration_log_mass(int d, double rate);

// Log normalizer of the role chain conditioned on tiling `span` frames.
// `mask`, when non-empty, restricts the chain to the given label indices
// (conditioning used by the capped forward sampler).
double role_sequence_log_normalizer(const RoleDynamics& dyn, int span,
                                    const std::vector<int>& mask = {});

// log p(sequence | role dynamics, parent span), under geometric segment
// durations conditioned on the sequence tiling the span. -inf when a
// segment label is outside the role's allowed set or the tiling breaks.
double role_sequence_log_prob(const ChildSequence& seq,
                              const RoleDynamics& dyn, int span_start,
                              int span_end);

// A (label, duration) run drawn from the conditioned chain.
struct SequenceDraw {
  std::vector<ActivityLabel> labels;
  std::vector<int> durations;
};

// Exact draw from the tiling-conditioned chain via the DP in
// role_sequence_log_normalizer. Empty mask = full allowed set.
SequenceDraw sample_role_sequence(RoleLabel role, const RoleDynamics& dyn,
                                  int span, std::mt19937_64& rng,
                                  const std::vector<int>& mask = {});

// Eq-style structural prior: sum over intentional nodes of the CRP
// partition mass, role assignment mass, and role-sequence mass.
// Returns -inf for invalid trees.
double tree_log_prior(const ActivityTree& tree, const ModelConfig& config);

}  // namespace gact
