#include "gact/forward_sampler.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gact/gp_likelihood.hpp"
#include "gact/tree_prior.hpp"

namespace gact {

bool parse_scenario_id(const std::string& s, ScenarioSpec::Id* out) {
  if (s == "SYNTH1") *out = ScenarioSpec::Id::SYNTH1;
  else if (s == "SYNTH2") *out = ScenarioSpec::Id::SYNTH2;
  else if (s == "RANDOM") *out = ScenarioSpec::Id::RANDOM;
  else return false;
  return true;
}

std::string to_string(ScenarioSpec::Id id) {
  switch (id) {
    case ScenarioSpec::Id::SYNTH1: return "SYNTH1";
    case ScenarioSpec::Id::SYNTH2: return "SYNTH2";
    case ScenarioSpec::Id::RANDOM: return "RANDOM";
  }
  return "?";
}

namespace {

// CRP seating over the given members, in member order.
std::vector<std::vector<int>> sample_crp_partition(
    const std::vector<int>& members, double alpha, std::mt19937_64& rng) {
  std::vector<std::vector<int>> blocks;
  for (size_t i = 0; i < members.size(); ++i) {
    std::uniform_real_distribution<double> unif(0.0, alpha + i);
    double u = unif(rng);
    bool seated = false;
    for (auto& block : blocks) {
      if (u < static_cast<double>(block.size())) {
        block.push_back(members[i]);
        seated = true;
        break;
      }
      u -= static_cast<double>(block.size());
    }
    if (!seated) blocks.push_back({members[i]});
  }
  return blocks;
}

std::vector<int> physical_mask(RoleLabel role) {
  const auto& labels = role_allowed_labels(role);
  std::vector<int> mask;
  for (size_t i = 0; i < labels.size(); ++i)
    if (is_physical(labels[i])) mask.push_back(static_cast<int>(i));
  return mask;
}

void expand_intentional(ActivityNode* node, int depth,
                        const ModelConfig& config, std::mt19937_64& rng,
                        int* next_id) {
  const double alpha = config.alpha.at(node->label);
  auto blocks = sample_crp_partition(node->participants, alpha, rng);

  const auto& support = activity_role_support(node->label);
  const bool cap = depth + 1 >= config.sampler.max_depth;

  for (auto& block : blocks) {
    std::sort(block.begin(), block.end());
    std::uniform_int_distribution<size_t> pick(0, support.size() - 1);
    RoleLabel role = support[pick(rng)];

    std::vector<int> mask;
    if (cap) {
      mask = physical_mask(role);
      if (mask.empty()) {
        // APPROACHER has no physical labels; force MOVE_TO, which bottoms
        // out through MOVER on the next level.
        const auto& allowed = role_allowed_labels(role);
        for (size_t i = 0; i < allowed.size(); ++i)
          if (allowed[i] == ActivityLabel::MOVE_TO)
            mask.push_back(static_cast<int>(i));
      }
    }

    SequenceDraw draw = sample_role_sequence(
        role, config.dynamics(role), node->end - node->start + 1, rng, mask);

    ChildSequence seq;
    seq.role = role;
    seq.members = block;
    int cursor = node->start;
    for (size_t i = 0; i < draw.labels.size(); ++i) {
      ActivityNode seg;
      seg.id = (*next_id)++;
      seg.label = draw.labels[i];
      seg.start = cursor;
      seg.end = cursor + draw.durations[i] - 1;
      seg.participants = block;
      cursor = seg.end + 1;
      seq.segments.push_back(std::move(seg));
    }
    for (auto& seg : seq.segments)
      if (is_intentional(seg.label))
        expand_intentional(&seg, depth + 1, config, rng, next_id);
    node->children.push_back(std::move(seq));
  }
}

Eigen::VectorXd standard_normal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace

ActivityTree sample_tree(int actors, int horizon, const ModelConfig& config,
                         std::mt19937_64& rng) {
  if (actors < 1 || horizon < 2)
    throw std::invalid_argument("sample_tree: need actors >= 1, horizon >= 2");
  ActivityTree tree;
  tree.actor_count = actors;
  tree.horizon = horizon;
  tree.root.label = ActivityLabel::FFA;
  tree.root.start = 1;
  tree.root.end = horizon;
  tree.root.participants.resize(actors);
  std::iota(tree.root.participants.begin(), tree.root.participants.end(), 1);
  int next_id = 1;
  tree.root.id = 0;
  expand_intentional(&tree.root, 0, config, rng, &next_id);
  normalize_tree(tree);
  return tree;
}

SampledScene sample_scene(const ActivityTree& tree, const ModelConfig& config,
                          std::mt19937_64& rng) {
  if (!validate_tree(tree).ok())
    throw std::invalid_argument("sample_scene: invalid tree");

  GroupModel gm = build_group_model(tree, config);
  const int n_leaves = static_cast<int>(gm.leaves.size());
  const int n_ep = static_cast<int>(gm.phi.rows());

  Eigen::MatrixXd phi_sqrt = psd_sqrt(gm.phi);
  std::vector<Eigen::MatrixXd> bridge_chol(n_leaves);
  for (int m = 0; m < n_leaves; ++m) {
    const auto& cov = gm.leaves[m].bridge.cov;
    if (cov.size() > 0) {
      Eigen::MatrixXd c = cov;
      c.diagonal().array() += 1e-10 * (1.0 + c.diagonal().maxCoeff());
      bridge_chol[m] = Eigen::LLT<Eigen::MatrixXd>(c).matrixL();
    }
  }

  SampledScene out;
  out.group_trajectories.assign(n_leaves, Eigen::Matrix2Xd());
  for (int m = 0; m < n_leaves; ++m)
    out.group_trajectories[m].resize(2, gm.leaves[m].end -
                                           gm.leaves[m].start + 1);

  const std::vector<int>& ids = tree.root.participants;
  out.scene.actor_ids = ids;
  out.scene.horizon = tree.horizon;
  out.scene.trajectories.assign(ids.size(),
                                Eigen::Matrix2Xd::Zero(2, tree.horizon));
  std::map<int, int> actor_index;
  for (size_t i = 0; i < ids.size(); ++i)
    actor_index[ids[i]] = static_cast<int>(i);

  for (int axis = 0; axis < 2; ++axis) {
    Eigen::VectorXd endpoints = phi_sqrt * standard_normal(n_ep, rng);
    Eigen::VectorXd x(gm.total_rows);
    // Group trajectories: endpoints, then bridge conditionals.
    x = gm.endpoint_map * endpoints;
    for (int m = 0; m < n_leaves; ++m) {
      const auto& l = gm.leaves[m];
      const int L = l.end - l.start + 1;
      if (L > 2) {
        Eigen::VectorXd noise =
            bridge_chol[m] * standard_normal(L - 2, rng);
        for (int i = 1; i + 1 < L; ++i)
          x(gm.row_offset[m] + i) += noise(i - 1);
      }
      for (int i = 0; i < L; ++i)
        out.group_trajectories[m](axis, i) = x(gm.row_offset[m] + i);
    }
    // Individual trajectories around their group segments.
    for (int m = 0; m < n_leaves; ++m) {
      const auto& l = gm.leaves[m];
      const int L = l.end - l.start + 1;
      std::vector<double> times;
      for (int t = l.start; t <= l.end; ++t) times.push_back(t);
      const double rho = config.rho.at(l.label);
      Eigen::MatrixXd k = se_kernel(times, times, rho * rho,
                                    config.length_scale);
      k.diagonal().array() += 1e-10 * rho * rho;
      Eigen::MatrixXd kchol = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
      for (int actor : l.participants) {
        Eigen::VectorXd dev = kchol * standard_normal(L, rng);
        Eigen::VectorXd eps = config.noise * standard_normal(L, rng);
        auto& traj = out.scene.trajectories[actor_index.at(actor)];
        for (int i = 0; i < L; ++i)
          traj(axis, l.start - 1 + i) =
              x(gm.row_offset[m] + i) + dev(i) + eps(i);
      }
    }
  }
  return out;
}

namespace {

ActivityNode make_node(int id, ActivityLabel label, int s, int e,
                       std::vector<int> participants) {
  ActivityNode n;
  n.id = id;
  n.label = label;
  n.start = s;
  n.end = e;
  n.participants = std::move(participants);
  return n;
}

ChildSequence make_seq(RoleLabel role, std::vector<int> members,
                       std::vector<ActivityNode> segments) {
  ChildSequence seq;
  seq.role = role;
  seq.members = std::move(members);
  seq.segments = std::move(segments);
  return seq;
}

// MOVE_TO node whose single MOVER subgroup performs one physical segment.
ActivityNode move_to_walk(int* id, int s, int e, std::vector<int> members,
                          ActivityLabel phys = ActivityLabel::WALK) {
  ActivityNode mt = make_node((*id)++, ActivityLabel::MOVE_TO, s, e, members);
  mt.children.push_back(make_seq(
      RoleLabel::MOVER, members,
      {make_node((*id)++, phys, s, e, members)}));
  return mt;
}

}  // namespace

ActivityTree synth1_tree() {
  // Two serial meetings over 20 frames; actor 3 changes sides between them.
  ActivityTree tree;
  tree.actor_count = 5;
  tree.horizon = 20;
  int id = 0;
  tree.root = make_node(id++, ActivityLabel::FFA, 1, 20, {1, 2, 3, 4, 5});

  ActivityNode meet_a =
      make_node(id++, ActivityLabel::MEET, 1, 10, {1, 2, 3, 4, 5});
  meet_a.children.push_back(make_seq(RoleLabel::APPROACHER, {1, 2, 3},
                                     {move_to_walk(&id, 1, 10, {1, 2, 3})}));
  meet_a.children.push_back(make_seq(
      RoleLabel::WAITER, {4, 5},
      {make_node(id++, ActivityLabel::STAND, 1, 10, {4, 5})}));

  ActivityNode meet_b =
      make_node(id++, ActivityLabel::MEET, 11, 20, {1, 2, 3, 4, 5});
  meet_b.children.push_back(make_seq(RoleLabel::APPROACHER, {1, 2},
                                     {move_to_walk(&id, 11, 20, {1, 2})}));
  meet_b.children.push_back(make_seq(
      RoleLabel::WAITER, {3, 4, 5},
      {make_node(id++, ActivityLabel::STAND, 11, 20, {3, 4, 5})}));

  tree.root.children.push_back(make_seq(RoleLabel::FFA_ROLE, {1, 2, 3, 4, 5},
                                        {std::move(meet_a),
                                         std::move(meet_b)}));
  normalize_tree(tree);
  return tree;
}

ActivityTree synth2_tree() {
  // A meeting of all five actors in which four hold a side meeting first.
  ActivityTree tree;
  tree.actor_count = 5;
  tree.horizon = 20;
  int id = 0;
  tree.root = make_node(id++, ActivityLabel::FFA, 1, 20, {1, 2, 3, 4, 5});

  ActivityNode meet_outer =
      make_node(id++, ActivityLabel::MEET, 1, 20, {1, 2, 3, 4, 5});

  ActivityNode meet_inner =
      make_node(id++, ActivityLabel::MEET, 1, 10, {1, 2, 3, 4});
  meet_inner.children.push_back(make_seq(
      RoleLabel::APPROACHER, {1, 2}, {move_to_walk(&id, 1, 10, {1, 2})}));
  meet_inner.children.push_back(make_seq(
      RoleLabel::WAITER, {3, 4},
      {make_node(id++, ActivityLabel::STAND, 1, 10, {3, 4})}));

  // After the side meeting the two pairs walk to the global meeting point
  // as separate groups, so both MEET levels impose informative endpoint
  // ties (a single merged group would already be tied by continuity).
  ActivityNode move_join =
      make_node(id++, ActivityLabel::MOVE_TO, 11, 20, {1, 2, 3, 4});
  move_join.children.push_back(make_seq(
      RoleLabel::MOVER, {1, 2},
      {make_node(id++, ActivityLabel::WALK, 11, 20, {1, 2})}));
  move_join.children.push_back(make_seq(
      RoleLabel::MOVER, {3, 4},
      {make_node(id++, ActivityLabel::WALK, 11, 20, {3, 4})}));

  meet_outer.children.push_back(make_seq(
      RoleLabel::APPROACHER, {1, 2, 3, 4},
      {std::move(meet_inner), std::move(move_join)}));
  meet_outer.children.push_back(
      make_seq(RoleLabel::APPROACHER, {5}, {move_to_walk(&id, 1, 20, {5})}));

  tree.root.children.push_back(make_seq(RoleLabel::FFA_ROLE, {1, 2, 3, 4, 5},
                                        {std::move(meet_outer)}));
  normalize_tree(tree);
  return tree;
}

ScriptedScene scripted_scene(const ScenarioSpec& spec,
                             const ModelConfig& config, std::mt19937_64& rng) {
  ScriptedScene out;
  switch (spec.id) {
    case ScenarioSpec::Id::SYNTH1:
      out.ground_truth = synth1_tree();
      break;
    case ScenarioSpec::Id::SYNTH2:
      out.ground_truth = synth2_tree();
      break;
    case ScenarioSpec::Id::RANDOM:
      out.ground_truth = sample_tree(spec.actors, spec.horizon, config, rng);
      break;
  }
  SampledScene sampled = sample_scene(out.ground_truth, config, rng);
  out.scene = std::move(sampled.scene);
  out.group_trajectories = std::move(sampled.group_trajectories);
  return out;
}

}  // namespace gact
