#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gact/config.hpp"
#include "gact/types.hpp"

namespace gact {

struct ScenarioSpec {
  enum class Id { SYNTH1, SYNTH2, RANDOM };
  Id id = Id::RANDOM;
  int actors = 5;
  int horizon = 20;
  std::uint64_t seed = 1;
};

bool parse_scenario_id(const std::string& s, ScenarioSpec::Id* out);
std::string to_string(ScenarioSpec::Id id);

// Draws a tree from the structural prior: CRP partitions, uniform roles,
// tiling-conditioned role chains. Recursion is capped at
// config.sampler.max_depth by forcing physical-only expansions.
ActivityTree sample_tree(int actors, int horizon, const ModelConfig& config,
                         std::mt19937_64& rng);

struct SampledScene {
  // One latent group trajectory per physical leaf (depth-first order).
  std::vector<Eigen::Matrix2Xd> group_trajectories;
  Scene scene;
};

// Endpoints from N(0, Phi), interiors from the GP bridges, individuals
// from the deviation kernels around their group segments.
SampledScene sample_scene(const ActivityTree& tree, const ModelConfig& config,
                          std::mt19937_64& rng);

// Hand-specified ground-truth trees for the two scripted scenarios:
// SYNTH1 is a pair of serial meetings with a membership change, SYNTH2 a
// meeting nested inside a larger meeting. Both use 5 actors, 20 frames.
ActivityTree synth1_tree();
ActivityTree synth2_tree();

struct ScriptedScene {
  Scene scene;
  ActivityTree ground_truth;
  std::vector<Eigen::Matrix2Xd> group_trajectories;
};

ScriptedScene scripted_scene(const ScenarioSpec& spec,
                             const ModelConfig& config, std::mt19937_64& rng);

}  // namespace gact
