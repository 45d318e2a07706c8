#pragma once

#include <vector>

#include <Eigen/Core>

#include "gact/config.hpp"
#include "gact/types.hpp"

namespace gact {

// Per-actor position and velocity at one frame. Velocities come from
// central differences of smoothed positions.
struct FrameFeatures {
  std::vector<Eigen::Vector2d> position;
  std::vector<Eigen::Vector2d> velocity;
};

// Smoothed features for every frame of a scene.
std::vector<FrameFeatures> compute_frame_features(const Scene& scene,
                                                  const DetectorConfig& cfg);

// Density clustering over the scaled 4-D (position, velocity) feature.
// Returns one cluster label per actor; noise points become singletons.
std::vector<int> dbscan_frame(const FrameFeatures& features, double eps,
                              int min_pts, double w_pos, double w_vel);

// A group with per-frame member sets over a contiguous frame interval.
struct GroupTrack {
  int id = 0;
  int start = 1;  // first active frame
  std::vector<std::vector<int>> members;  // per frame, sorted actor indices

  int end() const { return start + static_cast<int>(members.size()) - 1; }
};

// Greedy identity propagation: a cluster inherits the id of the previous
// frame's group contributing a strict majority of its members, ties broken
// by the smaller predecessor id; otherwise it starts a fresh track.
std::vector<GroupTrack> track_groups(
    const std::vector<std::vector<int>>& per_frame_clusters);

struct Detections {
  std::vector<std::vector<int>> clusters;  // [frame][actor] -> cluster label
  std::vector<GroupTrack> tracks;
  std::vector<std::vector<ActivityLabel>> labels;  // [actor][frame]
};

// Per-actor most probable physical-label path: Gamma speed emissions,
// sticky transitions, uniform initial distribution.
std::vector<std::vector<ActivityLabel>> classify_physical(
    const Scene& scene, const DetectorConfig& cfg);

Detections run_detectors(const Scene& scene, const ModelConfig& config);

// Bottom-up initial tree: top-level blocks from the transitive closure of
// ever-co-clustered actors, meetings wrapped around intervals of stable
// sub-grouping, physical segments from majority-label runs.
ActivityTree detections_to_tree(const Detections& detections,
                                const Scene& scene,
                                const ModelConfig& config);

}  // namespace gact
