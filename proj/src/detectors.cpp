#include "gact/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "gact/tree_prior.hpp"

namespace gact {

std::vector<FrameFeatures> compute_frame_features(const Scene& scene,
                                                  const DetectorConfig& cfg) {
  const int J = static_cast<int>(scene.actor_ids.size());
  const int F = scene.horizon;
  const int half = std::max(0, cfg.smooth_window / 2);

  // Moving-average smoothing, window truncated at the boundaries.
  std::vector<Eigen::Matrix2Xd> smooth(J);
  for (int j = 0; j < J; ++j) {
    smooth[j].resize(2, F);
    for (int t = 0; t < F; ++t) {
      const int lo = std::max(0, t - half);
      const int hi = std::min(F - 1, t + half);
      Eigen::Vector2d acc = Eigen::Vector2d::Zero();
      for (int u = lo; u <= hi; ++u) acc += scene.trajectories[j].col(u);
      smooth[j].col(t) = acc / double(hi - lo + 1);
    }
  }

  std::vector<FrameFeatures> out(F);
  for (int t = 0; t < F; ++t) {
    out[t].position.resize(J);
    out[t].velocity.resize(J);
    for (int j = 0; j < J; ++j) {
      out[t].position[j] = smooth[j].col(t);
      if (F == 1) {
        out[t].velocity[j].setZero();
      } else if (t == 0) {
        out[t].velocity[j] = smooth[j].col(1) - smooth[j].col(0);
      } else if (t == F - 1) {
        out[t].velocity[j] = smooth[j].col(t) - smooth[j].col(t - 1);
      } else {
        out[t].velocity[j] = 0.5 * (smooth[j].col(t + 1) - smooth[j].col(t - 1));
      }
    }
  }
  return out;
}

std::vector<int> dbscan_frame(const FrameFeatures& features, double eps,
                              int min_pts, double w_pos, double w_vel) {
  if (eps <= 0 || min_pts < 1)
    throw std::invalid_argument("dbscan_frame: eps > 0 and min_pts >= 1");
  const int n = static_cast<int>(features.position.size());
  std::vector<Eigen::Vector4d> x(n);
  for (int i = 0; i < n; ++i)
    x[i] << w_pos * features.position[i], w_vel * features.velocity[i];

  std::vector<std::vector<int>> neigh(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if ((x[i] - x[j]).norm() <= eps) neigh[i].push_back(j);

  std::vector<int> label(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (label[i] >= 0 || static_cast<int>(neigh[i].size()) < min_pts) continue;
    const int c = next++;
    std::vector<int> stack = {i};
    label[i] = c;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      if (static_cast<int>(neigh[p].size()) < min_pts) continue;  // border
      for (int q : neigh[p])
        if (label[q] < 0) {
          label[q] = c;
          stack.push_back(q);
        }
    }
  }
  for (int i = 0; i < n; ++i)
    if (label[i] < 0) label[i] = next++;  // noise: honest singleton
  return label;
}

std::vector<GroupTrack> track_groups(
    const std::vector<std::vector<int>>& per_frame_clusters) {
  const int F = static_cast<int>(per_frame_clusters.size());
  std::vector<GroupTrack> tracks;
  std::map<int, int> active;  // id -> track index, live at previous frame
  int next_id = 0;

  for (int t = 0; t < F; ++t) {
    const auto& lab = per_frame_clusters[t];
    const int J = static_cast<int>(lab.size());
    std::map<int, std::vector<int>> clusters;
    for (int j = 0; j < J; ++j) clusters[lab[j]].push_back(j);

    std::map<int, int> prev_of;  // actor -> previous-frame id
    if (t > 0)
      for (const auto& [id, idx] : active)
        for (int j : tracks[idx].members.back()) prev_of[j] = id;

    std::map<int, int> now;  // id -> track index, live at this frame
    std::set<int> claimed;
    for (const auto& [cl, members] : clusters) {
      int chosen = -1;
      if (t > 0) {
        std::map<int, int> votes;
        for (int j : members)
          if (auto it = prev_of.find(j); it != prev_of.end()) ++votes[it->second];
        int best = 0;
        for (const auto& [id, v] : votes)  // ascending id breaks ties
          if (v > best && !claimed.count(id) &&
              2 * v > static_cast<int>(members.size())) {
            best = v;
            chosen = id;
          }
      }
      if (chosen >= 0) {
        claimed.insert(chosen);
        const int idx = active.at(chosen);
        tracks[idx].members.push_back(members);
        now[chosen] = idx;
      } else {
        GroupTrack g;
        g.id = next_id++;
        g.start = t + 1;
        g.members.push_back(members);
        now[g.id] = static_cast<int>(tracks.size());
        tracks.push_back(std::move(g));
      }
    }
    active = std::move(now);
  }
  return tracks;
}

namespace {

double gamma_log_pdf(double s, double shape, double rate) {
  return shape * std::log(rate) + (shape - 1.0) * std::log(s) - rate * s -
         std::lgamma(shape);
}

}  // namespace

std::vector<std::vector<ActivityLabel>> classify_physical(
    const Scene& scene, const DetectorConfig& cfg) {
  if (cfg.p_stay <= 1.0 / 3.0 || cfg.p_stay >= 1.0)
    throw std::invalid_argument("classify_physical: p_stay must be in (1/3, 1)");
  const int J = static_cast<int>(scene.actor_ids.size());
  const int F = scene.horizon;
  const auto features = compute_frame_features(scene, cfg);
  const auto& states = physical_labels();
  const int S = static_cast<int>(states.size());

  const double log_stay = std::log(cfg.p_stay);
  const double log_move = std::log((1.0 - cfg.p_stay) / (S - 1));

  std::vector<std::vector<ActivityLabel>> out(J);
  for (int j = 0; j < J; ++j) {
    Eigen::MatrixXd emit(F, S);
    for (int t = 0; t < F; ++t) {
      const double speed =
          std::max(cfg.speed_floor, features[t].velocity[j].norm());
      for (int s = 0; s < S; ++s)
        emit(t, s) =
            gamma_log_pdf(speed, cfg.gamma_shape, cfg.gamma_rate.at(states[s]));
    }
    Eigen::MatrixXd score(F, S);
    Eigen::MatrixXi back(F, S);
    score.row(0) = emit.row(0).array() - std::log(double(S));
    for (int t = 1; t < F; ++t)
      for (int s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int p = 0; p < S; ++p) {
          const double v = score(t - 1, p) + (p == s ? log_stay : log_move);
          if (v > best) {
            best = v;
            arg = p;
          }
        }
        score(t, s) = best + emit(t, s);
        back(t, s) = arg;
      }
    int s = 0;
    score.row(F - 1).maxCoeff(&s);
    out[j].resize(F);
    for (int t = F - 1; t >= 0; --t) {
      out[j][t] = states[s];
      if (t > 0) s = back(t, s);
    }
  }
  return out;
}

Detections run_detectors(const Scene& scene, const ModelConfig& config) {
  const DetectorConfig& d = config.detector;
  const auto features = compute_frame_features(scene, d);
  Detections det;
  det.clusters.resize(scene.horizon);
  for (int t = 0; t < scene.horizon; ++t)
    det.clusters[t] =
        dbscan_frame(features[t], d.eps, d.min_pts, d.w_pos, d.w_vel);
  det.tracks = track_groups(det.clusters);
  det.labels = classify_physical(scene, d);
  return det;
}

namespace {

// Most frequent physical label among the given actors over [s, e]
// (1-based frames); ties go to the slower label.
ActivityLabel majority_label(const Detections& det,
                             const std::vector<int>& actors, int s, int e) {
  std::map<ActivityLabel, int> counts;
  for (int j : actors)
    for (int t = s; t <= e; ++t) ++counts[det.labels[j][t - 1]];
  ActivityLabel best = ActivityLabel::STAND;
  int best_count = -1;
  for (ActivityLabel a : physical_labels())
    if (counts[a] > best_count) {
      best_count = counts[a];
      best = a;
    }
  return best;
}

bool all_stand(const Detections& det, const std::vector<int>& actors, int s,
               int e) {
  for (int j : actors)
    for (int t = s; t <= e; ++t)
      if (det.labels[j][t - 1] != ActivityLabel::STAND) return false;
  return true;
}

std::vector<int> to_ids(const std::vector<int>& actors, const Scene& scene) {
  std::vector<int> ids;
  for (int j : actors) ids.push_back(scene.actor_ids[j]);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Runs of constant physical majority label -> abutting physical segments.
std::vector<ActivityNode> physical_runs(const Detections& det,
                                        const std::vector<int>& actors,
                                        const std::vector<int>& ids, int s,
                                        int e, int* next_id) {
  std::vector<ActivityNode> segments;
  int run_start = s;
  ActivityLabel run_label = majority_label(det, actors, s, s);
  for (int t = s + 1; t <= e + 1; ++t) {
    const ActivityLabel l =
        t <= e ? majority_label(det, actors, t, t) : ActivityLabel::STAND;
    if (t > e || l != run_label) {
      ActivityNode seg;
      seg.id = (*next_id)++;
      seg.label = run_label;
      seg.start = run_start;
      seg.end = t - 1;
      seg.participants = ids;
      segments.push_back(std::move(seg));
      run_start = t;
      run_label = l;
    }
  }
  return segments;
}

// Partition of `actors` induced by the frame-t clustering, blocks keyed by
// smallest member for a stable order.
std::vector<std::vector<int>> induced_partition(const Detections& det,
                                                const std::vector<int>& actors,
                                                int t) {
  std::map<int, std::vector<int>> by_cluster;
  for (int j : actors) by_cluster[det.clusters[t - 1][j]].push_back(j);
  std::map<int, std::vector<int>> by_min;
  for (auto& [cl, block] : by_cluster) by_min[block.front()] = block;
  std::vector<std::vector<int>> out;
  for (auto& [mn, block] : by_min) out.push_back(block);
  return out;
}

// Build the segment sequence for a set of actors that the top-level closure
// keeps together: runs of stable sub-grouping become MEET nodes, runs where
// the whole set is one cluster become MOVE_TO wrappers around physical runs.
// Keeping every top-level segment intentional leaves the sequence adoptable
// by later BIRTH moves (a MEET/MOVE_TO parent cannot adopt bare WALK/RUN).
std::vector<ActivityNode> build_block_sequence(
    const Detections& det, const Scene& scene,
    const std::vector<FrameFeatures>& features, double eps,
    const std::vector<int>& actors, int s, int e, int* next_id);

ActivityNode make_meet(const Detections& det, const Scene& scene,
                       const std::vector<std::vector<int>>& partition,
                       const std::vector<int>& ids, int s, int e,
                       int* next_id) {
  ActivityNode meet;
  meet.id = (*next_id)++;
  meet.label = ActivityLabel::MEET;
  meet.start = s;
  meet.end = e;
  meet.participants = ids;
  for (const auto& block : partition) {
    ChildSequence seq;
    seq.members = to_ids(block, scene);
    if (all_stand(det, block, s, e)) {
      seq.role = RoleLabel::WAITER;
      ActivityNode stand;
      stand.id = (*next_id)++;
      stand.label = ActivityLabel::STAND;
      stand.start = s;
      stand.end = e;
      stand.participants = seq.members;
      seq.segments.push_back(std::move(stand));
    } else {
      seq.role = RoleLabel::APPROACHER;
      ActivityNode move;
      move.id = (*next_id)++;
      move.label = ActivityLabel::MOVE_TO;
      move.start = s;
      move.end = e;
      move.participants = seq.members;
      ChildSequence mover;
      mover.role = RoleLabel::MOVER;
      mover.members = seq.members;
      mover.segments =
          physical_runs(det, block, seq.members, s, e, next_id);
      move.children.push_back(std::move(mover));
      seq.segments.push_back(std::move(move));
    }
    meet.children.push_back(std::move(seq));
  }
  return meet;
}

std::vector<ActivityNode> build_block_sequence(
    const Detections& det, const Scene& scene,
    const std::vector<FrameFeatures>& features, double eps,
    const std::vector<int>& actors, int s, int e, int* next_id) {
  const std::vector<int> ids = to_ids(actors, scene);

  struct Run {
    int start, end;
    std::vector<std::vector<int>> part;
  };
  std::vector<Run> runs;
  int run_start = s;
  std::vector<std::vector<int>> run_part = induced_partition(det, actors, s);
  for (int t = s + 1; t <= e + 1; ++t) {
    std::vector<std::vector<int>> part;
    if (t <= e) part = induced_partition(det, actors, t);
    if (t > e || part != run_part) {
      runs.push_back({run_start, t - 1, std::move(run_part)});
      run_start = t;
      run_part = std::move(part);
    }
  }

  // The velocity-weighted clustering keeps approaching blocks separate while
  // they decelerate, so the co-clustered run starts after the frame where
  // positions first coincide. Pull the meet boundary back to the earliest
  // frame from which all block centroids stay within merge distance, so the
  // meeting tie lands on the arrival frame rather than one frame late.
  auto coincident = [&](const std::vector<std::vector<int>>& part, int t) {
    std::vector<Eigen::Vector2d> c;
    for (const auto& block : part) {
      Eigen::Vector2d sum = Eigen::Vector2d::Zero();
      for (int j : block) sum += features[t - 1].position[j];
      c.push_back(sum / double(block.size()));
    }
    for (size_t a = 0; a < c.size(); ++a)
      for (size_t b = a + 1; b < c.size(); ++b)
        if ((c[a] - c[b]).norm() > 2.0 * eps) return false;
    return true;
  };
  for (size_t i = 0; i + 1 < runs.size(); ++i) {
    if (runs[i].part.size() <= 1 || runs[i + 1].part.size() != 1) continue;
    int tie = runs[i].end + 1;  // first merged frame if nothing coincides
    while (tie - 1 >= runs[i].start && coincident(runs[i].part, tie - 1))
      --tie;
    if (tie > runs[i].start && tie <= runs[i].end) {
      runs[i].end = tie;
      runs[i + 1].start = tie + 1;
    }
  }

  std::vector<ActivityNode> segments;
  for (const Run& run : runs) {
    if (run.part.size() <= 1) {
      ActivityNode move;
      move.id = (*next_id)++;
      move.label = ActivityLabel::MOVE_TO;
      move.start = run.start;
      move.end = run.end;
      move.participants = ids;
      ChildSequence mover;
      mover.role = RoleLabel::MOVER;
      mover.members = ids;
      mover.segments =
          physical_runs(det, actors, ids, run.start, run.end, next_id);
      move.children.push_back(std::move(mover));
      segments.push_back(std::move(move));
    } else {
      segments.push_back(make_meet(det, scene, run.part, ids, run.start,
                                   run.end, next_id));
    }
  }
  return segments;
}

}  // namespace

ActivityTree detections_to_tree(const Detections& detections,
                                const Scene& scene,
                                const ModelConfig& config) {
  const int J = static_cast<int>(scene.actor_ids.size());
  const int F = scene.horizon;

  // Union-find over actors ever co-clustered in any frame.
  std::vector<int> parent(J);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int t = 0; t < F; ++t)
    for (int a = 0; a < J; ++a)
      for (int b = a + 1; b < J; ++b)
        if (detections.clusters[t][a] == detections.clusters[t][b])
          parent[find(a)] = find(b);

  std::map<int, std::vector<int>> blocks;
  for (int j = 0; j < J; ++j) blocks[find(j)].push_back(j);

  // Meet closure: blocks whose smoothed centroids converge by the final
  // frame almost surely meet even if velocity features kept DBSCAN from
  // co-clustering them. Seeding that MEET here matters because the sampler
  // can cheaply remove a wrong wrapper (DEATH) but needs a long uphill move
  // sequence to assemble a missing one.
  std::vector<std::vector<int>> block_list;
  for (auto& [rep, actors] : blocks) block_list.push_back(actors);
  const int B = static_cast<int>(block_list.size());
  const auto features = compute_frame_features(scene, config.detector);
  std::vector<Eigen::Vector2d> centroid(B, Eigen::Vector2d::Zero());
  for (int b = 0; b < B; ++b) {
    for (int j : block_list[b]) centroid[b] += features[F - 1].position[j];
    centroid[b] /= double(block_list[b].size());
  }
  std::vector<int> comp(B);
  std::iota(comp.begin(), comp.end(), 0);
  std::function<int(int)> find_comp = [&](int x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  for (int a = 0; a < B; ++a)
    for (int b = a + 1; b < B; ++b)
      if ((centroid[a] - centroid[b]).norm() <= 2.0 * config.detector.eps)
        comp[find_comp(a)] = find_comp(b);
  std::map<int, std::vector<int>> meet_groups;
  for (int b = 0; b < B; ++b) meet_groups[find_comp(b)].push_back(b);

  ActivityTree tree;
  tree.actor_count = J;
  tree.horizon = F;
  tree.root.label = ActivityLabel::FFA;
  tree.root.start = 1;
  tree.root.end = F;
  tree.root.participants = scene.actor_ids;
  int next_id = 0;
  tree.root.id = next_id++;
  for (auto& [rep, group] : meet_groups) {
    ChildSequence seq;
    seq.role = RoleLabel::FFA_ROLE;
    if (group.size() == 1) {
      const auto& actors = block_list[group.front()];
      seq.members = to_ids(actors, scene);
      seq.segments =
          build_block_sequence(detections, scene, features,
                               config.detector.eps, actors, 1, F, &next_id);
    } else {
      ActivityNode meet;
      meet.id = next_id++;
      meet.label = ActivityLabel::MEET;
      meet.start = 1;
      meet.end = F;
      std::vector<int> all;
      for (int b : group) {
        const auto& actors = block_list[b];
        ChildSequence approach;
        approach.role = RoleLabel::APPROACHER;
        approach.members = to_ids(actors, scene);
        approach.segments =
            build_block_sequence(detections, scene, features,
                                 config.detector.eps, actors, 1, F, &next_id);
        all.insert(all.end(), actors.begin(), actors.end());
        meet.children.push_back(std::move(approach));
      }
      meet.participants = to_ids(all, scene);
      seq.members = meet.participants;
      seq.segments.push_back(std::move(meet));
    }
    tree.root.children.push_back(std::move(seq));
  }
  normalize_tree(tree);
  return tree;
}

}  // namespace gact
