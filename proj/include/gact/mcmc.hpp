#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gact/config.hpp"
#include "gact/detectors.hpp"
#include "gact/types.hpp"

namespace gact {

enum class MoveKind { BIRTH, DEATH, MERGE, SPLIT, SEQUENCE, UNSEQUENCE, RELABEL };
inline constexpr int kNumMoveKinds = 7;

MoveKind reverse_move(MoveKind k);
std::string to_string(MoveKind k);

// log_q values are conditional on the move kind; mh_step adds the
// -log(#available kinds) terms of the kind redraw itself.
struct Proposal {
  bool ok = false;
  MoveKind move{};
  ActivityTree tree;
  double log_q_fwd = 0.0;
  double log_q_rev = 0.0;
};

// True when the kind has at least one valid site in the tree.
bool move_available(MoveKind k, const ActivityTree& tree,
                    const Detections* det, const ModelConfig& config);
int available_move_count(const ActivityTree& tree, const Detections* det,
                         const ModelConfig& config);

Proposal propose_move(MoveKind k, const ActivityTree& tree,
                      const Detections* det, const ModelConfig& config,
                      std::mt19937_64& rng);

// Paired wrappers: draw uniformly between the pair's available kinds.
Proposal propose_birth_death(const ActivityTree& tree,
                             const ModelConfig& config, std::mt19937_64& rng);
Proposal propose_merge_split(const ActivityTree& tree, const Detections& det,
                             const ModelConfig& config, std::mt19937_64& rng);
Proposal propose_sequence_unsequence(const ActivityTree& tree,
                                     const ModelConfig& config,
                                     std::mt19937_64& rng);
Proposal propose_relabel(const ActivityTree& tree, const Detections& det,
                         const ModelConfig& config, std::mt19937_64& rng);

struct TraceEntry {
  int iteration = 0;
  MoveKind move{};
  bool accepted = false;
  double log_posterior = 0.0;
};

struct SamplerTrace {
  std::vector<TraceEntry> entries;
  ActivityTree best;
  double best_log_posterior = 0.0;
  long long kind_redraws = 0;
  long long likelihood_failures = 0;
};

struct ChainState {
  ActivityTree tree;
  double log_posterior = 0.0;
};

using PosteriorFn = std::function<double(const ActivityTree&)>;

// One MH transition; proposals whose posterior evaluation throws are
// rejected and counted in the trace.
void mh_step(ChainState& state, const PosteriorFn& posterior,
             const Detections* det, const ModelConfig& config,
             std::mt19937_64& rng, SamplerTrace* trace);

struct SamplerResult {
  ActivityTree best;
  double best_log_posterior = 0.0;
  std::vector<SamplerTrace> traces;  // one per chain
  int best_chain = 0;
};

// Runs the detectors, initializes from their tree, executes
// config.sampler.iterations MH steps per chain (chains run concurrently)
// and returns the argmax-posterior tree over all chains.
SamplerResult run_sampler(const Scene& scene, const ModelConfig& config);

}  // namespace gact
