// Acceptance gate: runs every acceptance criterion end to end and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gact/constraint_graph.hpp"
#include "gact/detectors.hpp"
#include "gact/forward_sampler.hpp"
#include "gact/gp_likelihood.hpp"
#include "gact/io.hpp"
#include "gact/mcmc.hpp"
#include "gact/metrics.hpp"
#include "gact/tree_prior.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gact;
using testutil::ffa_tree;
using testutil::leaf;
using testutil::seq;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion
            << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

bool has_nested_meet(const ActivityNode& n, int depth) {
  if (n.label == ActivityLabel::MEET && depth > 1) return true;
  for (const auto& s : n.children)
    for (const auto& g : s.segments)
      if (has_nested_meet(g, depth + 1)) return true;
  return false;
}

// Small trees (<= 3 actors, <= 12 frames) exercising bridges, transitions
// and meet ties for the dense-joint comparison.
std::vector<ActivityTree> small_trees() {
  std::vector<ActivityTree> out;
  out.push_back(testutil::single_leaf_tree(ActivityLabel::WALK, 10));
  out.push_back(ffa_tree(
      2, 12,
      {seq(RoleLabel::FFA_ROLE, {1},
           {leaf(0, ActivityLabel::WALK, 1, 7, {1}),
            leaf(0, ActivityLabel::STAND, 8, 12, {1})}),
       seq(RoleLabel::FFA_ROLE, {2},
           {leaf(0, ActivityLabel::RUN, 1, 12, {2})})}));
  ActivityNode move = leaf(0, ActivityLabel::MOVE_TO, 1, 12, {1});
  move.children.push_back(seq(RoleLabel::MOVER, {1},
                              {leaf(0, ActivityLabel::WALK, 1, 8, {1}),
                               leaf(0, ActivityLabel::STAND, 9, 12, {1})}));
  ActivityNode meet = leaf(0, ActivityLabel::MEET, 1, 12, {1, 2, 3});
  meet.children.push_back(seq(RoleLabel::APPROACHER, {1}, {move}));
  meet.children.push_back(seq(RoleLabel::WAITER, {2, 3},
                              {leaf(0, ActivityLabel::STAND, 1, 12, {2, 3})}));
  out.push_back(
      ffa_tree(3, 12, {seq(RoleLabel::FFA_ROLE, {1, 2, 3}, {meet})}));
  return out;
}

// ---- criteria 1 and 2: scripted-scenario inference --------------------------

void criterion_scripted(int number, ScenarioSpec::Id id,
                        const std::vector<std::uint64_t>& seeds,
                        bool need_nested_meet) {
  ModelConfig cfg;
  cfg.sampler.iterations = 50000;
  cfg.sampler.chains = 4;
  cfg.sampler.seed = 11;
  std::vector<double> int_f1, phys_f1;
  int nested = 0;
  double worst_time = 0.0;
  for (std::uint64_t seed : seeds) {
    ScenarioSpec spec;
    spec.id = id;
    spec.seed = seed;
    std::mt19937_64 rng(seed);
    const ScriptedScene sc = scripted_scene(spec, cfg, rng);
    const auto t0 = std::chrono::steady_clock::now();
    const SamplerResult res = run_sampler(sc.scene, cfg);
    worst_time = std::max(worst_time, seconds_since(t0));
    const MetricsReport m = evaluate(sc.ground_truth, res.best);
    int_f1.push_back(m.grouping.at(GroupingLevel::INT).f1());
    phys_f1.push_back(m.grouping.at(GroupingLevel::PHYS).f1());
    nested += has_nested_meet(res.best.root, 0);
  }
  std::ostringstream d;
  d.precision(3);
  d << to_string(id) << " median INT F1 " << median5(int_f1)
    << ", median PHYS F1 " << median5(phys_f1) << ", max wall "
    << worst_time << "s";
  bool ok = median5(int_f1) >= 0.9 && worst_time <= 600.0;
  if (need_nested_meet) {
    d << ", nested MEET " << nested << "/5";
    ok = ok && nested >= 4;
  } else {
    ok = ok && median5(phys_f1) >= 0.8;
  }
  report(number, ok, d.str());
}

// ---- criterion 3: dense-joint oracle and forward-sample covariance ---------

void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig cfg;
  double max_abs = 0.0;
  std::mt19937_64 rng0(301);
  for (const ActivityTree& t : small_trees()) {
    const Scene s = sample_scene(t, cfg, rng0).scene;
    const double fast = log_marginal_likelihood(s, t, cfg);
    const double dense = oracle::dense_log_marginal(s, t, cfg);
    max_abs = std::max(max_abs, std::abs(fast - dense));
  }

  // Monte-Carlo check of the assembled covariance on the two-actor tree.
  const ActivityTree t = small_trees()[1];
  const SceneGaussian g =
      assemble_scene_covariance(t, t.actor_count, t.horizon, cfg);
  const int dim = t.actor_count * t.horizon;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
  const int n = 20000;
  std::mt19937_64 rng(17);
  for (int i = 0; i < n; ++i) {
    const SampledScene s = sample_scene(t, cfg, rng);
    for (int axis = 0; axis < 2; ++axis) {
      Eigen::VectorXd y(dim);
      for (int j = 0; j < t.actor_count; ++j)
        for (int f = 1; f <= t.horizon; ++f)
          y(g.row(j, f)) = s.scene.trajectories[j](axis, f - 1);
      acc += y * y.transpose();
    }
  }
  acc /= 2.0 * n;
  double worst_rel = 0.0;
  int compared = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (std::abs(g.cov(i, j)) > 0.05 * cfg.lambda) {
        worst_rel = std::max(
            worst_rel, std::abs(acc(i, j) - g.cov(i, j)) /
                           std::abs(g.cov(i, j)));
        ++compared;
      }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "dense-joint max |diff| " << max_abs << " on 3 trees, MC worst rel "
    << worst_rel << " over " << compared << " entries, " << secs << "s";
  report(3, max_abs <= 1e-6 && worst_rel <= 0.05 && compared > 0 &&
                secs < 120.0,
         d.str());
}

// ---- criterion 4: toy-universe posterior by enumeration --------------------

namespace toy {

std::vector<ActivityLabel> allowed(RoleLabel r) {
  switch (r) {
    case RoleLabel::FFA_ROLE:
      return {ActivityLabel::MEET, ActivityLabel::MOVE_TO,
              ActivityLabel::WALK};
    case RoleLabel::APPROACHER:
      return {ActivityLabel::MOVE_TO};
    case RoleLabel::WAITER:
      return {ActivityLabel::STAND};
    case RoleLabel::MOVER:
      // Keep WALK: dropping it isolates the flat-WALK basin (every exit
      // would pass through a zero-prior tree) and the chain cannot mix.
      return {ActivityLabel::STAND, ActivityLabel::WALK};
  }
  return {};
}

// Restrict every role chain to the labels above (zero mass elsewhere) so
// the reachable tree space is finite and enumerable.
ModelConfig toy_config() {
  ModelConfig cfg;
  for (auto r : {RoleLabel::FFA_ROLE, RoleLabel::APPROACHER,
                 RoleLabel::WAITER, RoleLabel::MOVER}) {
    RoleDynamics& dyn = cfg.roles.at(r);
    const auto& all = role_allowed_labels(r);
    const auto sub = allowed(r);
    const int n = static_cast<int>(all.size());
    dyn.initial.setZero(n);
    dyn.transition.setZero(n, n);
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
      if (std::find(sub.begin(), sub.end(), all[i]) != sub.end())
        keep.push_back(i);
    for (int i : keep) dyn.initial(i) = 1.0 / keep.size();
    for (int i = 0; i < n; ++i)
      for (int j : keep) dyn.transition(i, j) = 1.0 / keep.size();
    dyn.duration_rate = 2.0;
  }
  return cfg;
}

std::vector<ActivityNode> enum_node(ActivityLabel label, int s, int e,
                                    const std::vector<int>& members);

std::vector<ChildSequence> enum_seqs(RoleLabel role,
                                     const std::vector<int>& members, int s,
                                     int e) {
  std::vector<ChildSequence> out;
  std::vector<ActivityNode> acc;
  std::function<void(int)> rec = [&](int cur) {
    if (cur > e) {
      ChildSequence c;
      c.role = role;
      c.members = members;
      c.segments = acc;
      out.push_back(c);
      return;
    }
    for (int stop = cur; stop <= e; ++stop)
      for (ActivityLabel a : allowed(role))
        for (const ActivityNode& n : enum_node(a, cur, stop, members)) {
          acc.push_back(n);
          rec(stop + 1);
          acc.pop_back();
        }
  };
  rec(s);
  return out;
}

std::vector<ActivityNode> enum_node(ActivityLabel label, int s, int e,
                                    const std::vector<int>& members) {
  ActivityNode base = leaf(0, label, s, e, members);
  if (is_physical(label)) return {base};
  std::vector<ActivityNode> out;
  const auto& roles = activity_role_support(label);
  for (const auto& part : oracle::set_partitions(int(members.size()))) {
    std::vector<std::vector<int>> blocks;
    for (const auto& b : part) {
      std::vector<int> ids;
      for (int i : b) ids.push_back(members[i]);
      std::sort(ids.begin(), ids.end());
      blocks.push_back(ids);
    }
    const int nb = static_cast<int>(blocks.size());
    std::vector<int> role_pick(nb, 0);
    while (true) {
      // sequences per block under the picked roles
      std::vector<std::vector<ChildSequence>> options;
      bool feasible = true;
      for (int b = 0; b < nb && feasible; ++b) {
        options.push_back(enum_seqs(roles[role_pick[b]], blocks[b], s, e));
        feasible = !options.back().empty();
      }
      if (feasible) {
        std::vector<int> choice(nb, 0);
        while (true) {
          ActivityNode node = base;
          for (int b = 0; b < nb; ++b)
            node.children.push_back(options[b][choice[b]]);
          out.push_back(node);
          int b = 0;
          while (b < nb && ++choice[b] == int(options[b].size()))
            choice[b++] = 0;
          if (b == nb) break;
        }
      }
      int b = 0;
      while (b < nb && ++role_pick[b] == int(roles.size())) role_pick[b++] = 0;
      if (b == nb) break;
    }
  }
  return out;
}

// The seven moves preserve a structural invariant: every child sequence's
// segments share one physical/intentional class. BIRTH only creates
// sole-segment sequences, SEQUENCE/UNSEQUENCE preserve segment labels,
// RELABEL never crosses the physical/intentional boundary, and DEATH only
// removes sole-segment nodes. Started from a homogeneous tree the chain's
// communicating class is exactly the class-homogeneous trees, so the exact
// posterior is restricted (and renormalized) to that class.
bool class_homogeneous(const ActivityNode& n) {
  for (const auto& s : n.children) {
    for (const auto& g : s.segments) {
      if (is_physical(g.label) != is_physical(s.segments[0].label))
        return false;
      if (!class_homogeneous(g)) return false;
    }
  }
  return true;
}

}  // namespace toy

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelConfig cfg = toy::toy_config();
  // Two frames keep the enumerable universe at ~4e3 trees, small enough
  // for 1e6 steps to resolve the tail of the posterior.
  const int J = 2, F = 2;

  Scene scene;
  scene.horizon = F;
  scene.actor_ids = {1, 2};
  Eigen::Matrix2Xd a(2, F), b(2, F);
  a << 0.0, 0.5, 0.0, 0.0;
  b << 2.0, 2.0, 0.0, 0.0;
  scene.trajectories = {a, b};

  // Exact posterior over the enumerated universe.
  std::map<std::string, double> exact;
  double lse = -std::numeric_limits<double>::infinity();
  long long n_valid = 0;
  std::vector<int> everyone = {1, 2};
  for (ActivityNode root : toy::enum_node(ActivityLabel::FFA, 1, F, everyone)) {
    if (!toy::class_homogeneous(root)) continue;
    ActivityTree t;
    t.root = root;
    t.actor_count = J;
    t.horizon = F;
    normalize_tree(t);
    if (!validate_tree(t).ok()) continue;
    double lp;
    try {
      lp = log_posterior(scene, t, cfg);
    } catch (const std::exception&) {
      continue;
    }
    if (!std::isfinite(lp)) continue;
    exact[canonical_string(t)] = lp;
    lse = lse == -std::numeric_limits<double>::infinity()
              ? lp
              : std::max(lse, lp) +
                    std::log1p(std::exp(-std::abs(lse - lp)));
    ++n_valid;
  }
  for (auto& [key, lp] : exact) lp = std::exp(lp - lse);

  // Long Metropolis-Hastings run from the flat both-walk tree.
  ActivityTree init = ffa_tree(
      J, F,
      {seq(RoleLabel::FFA_ROLE, {1, 2},
           {leaf(0, ActivityLabel::WALK, 1, F, {1, 2})})});
  std::map<std::string, double> cache;
  PosteriorFn posterior = [&](const ActivityTree& t) {
    ActivityTree c = t;
    normalize_tree(c);
    const std::string key = canonical_string(c);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double lp = log_posterior(scene, t, cfg);
    cache[key] = lp;
    return lp;
  };
  ChainState state{init, posterior(init)};
  std::mt19937_64 rng(123);
  const int burn = 100000, steps = 1000000;
  std::map<std::string, long long> hits;
  bool all_known = true;
  for (int i = 0; i < steps; ++i) {
    mh_step(state, posterior, nullptr, cfg, rng, nullptr);
    if (i < burn) continue;
    ActivityTree c = state.tree;
    normalize_tree(c);
    const std::string key = canonical_string(c);
    if (!exact.count(key)) all_known = false;
    hits[key]++;
  }
  const double total = steps - burn;
  double tv = 0.0;
  std::set<std::string> keys;
  for (const auto& [k, p] : exact)
    if (p > 1e-12) keys.insert(k);
  for (const auto& [k, c] : hits) keys.insert(k);
  for (const auto& k : keys) {
    const double p = exact.count(k) ? exact.at(k) : 0.0;
    const double q = hits.count(k) ? hits.at(k) / total : 0.0;
    tv += std::abs(p - q);
  }
  tv *= 0.5;
  const double secs = seconds_since(t0);
  if (tv >= 0.05) {
    std::vector<std::pair<double, std::string>> top;
    for (const auto& [k, p] : exact) top.push_back({p, k});
    std::sort(top.rbegin(), top.rend());
    double head_tv = 0.0;
    for (int i = 0; i < 15 && i < int(top.size()); ++i) {
      const double q =
          hits.count(top[i].second) ? hits.at(top[i].second) / total : 0.0;
      std::cout << "  exact " << top[i].first << " vs chain " << q << "  "
                << top[i].second.substr(0, 100) << std::endl;
      head_tv += std::abs(top[i].first - q);
    }
    std::cout << "  top-15 TV contribution " << 0.5 * head_tv
              << ", distinct states visited " << hits.size() << std::endl;
  }
  std::ostringstream d;
  d << "toy universe " << n_valid << " trees, TV " << tv << " after 1e6 steps"
    << (all_known ? "" : " (chain left the enumerated set!)") << ", " << secs
    << "s";
  report(4, tv < 0.05 && all_known && secs < 300.0, d.str());
}

// ---- criterion 5: prior normalization --------------------------------------

void sum_numerators(const RoleDynamics& dyn, int n, int remaining, int prev,
                    double lw, double* total) {
  if (remaining == 0) {
    *total += std::exp(lw);
    return;
  }
  for (int d = 1; d <= remaining; ++d) {
    const double gd = geometric_duration_log_mass(d, dyn.duration_rate);
    for (int a = 0; a < n; ++a) {
      const double step = (prev < 0 ? std::log(dyn.initial(a))
                                    : std::log(dyn.transition(prev, a))) +
                          gd;
      sum_numerators(dyn, n, remaining - d, a, lw + step, total);
    }
  }
}

void criterion5() {
  double worst_crp = 0.0;
  for (int n = 1; n <= 6; ++n) {
    const auto parts = oracle::set_partitions(n);
    for (double alpha : {0.5, 1.0, 2.0}) {
      double total = 0.0;
      for (const auto& p : parts) {
        std::vector<std::vector<int>> blocks;
        for (const auto& b : p) {
          std::vector<int> ids;
          for (int x : b) ids.push_back(x + 1);
          blocks.push_back(ids);
        }
        total += std::exp(crp_log_prob(blocks, n, alpha));
      }
      worst_crp = std::max(worst_crp, std::abs(total - 1.0));
    }
  }
  const ModelConfig cfg;
  double worst_seq = 0.0;
  for (RoleLabel role : {RoleLabel::FFA_ROLE, RoleLabel::APPROACHER,
                         RoleLabel::WAITER, RoleLabel::MOVER}) {
    const RoleDynamics& dyn = cfg.dynamics(role);
    const int n = static_cast<int>(role_allowed_labels(role).size());
    double total = 0.0;
    sum_numerators(dyn, n, 10, -1, 0.0, &total);
    worst_seq = std::max(
        worst_seq,
        std::abs(std::log(total) - role_sequence_log_normalizer(dyn, 10)));
  }
  std::ostringstream d;
  d << "CRP sum error " << worst_crp << " (n<=6), role-chain log-normalizer "
       "error " << worst_seq << " (10-frame tilings)";
  report(5, worst_crp <= 1e-9 && worst_seq <= 1e-8, d.str());
}

// ---- criterion 6: constraint graph -----------------------------------------

void criterion6() {
  const double inf = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool apsp_exact = true;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 9);
    Eigen::MatrixXd adj = Eigen::MatrixXd::Constant(n, n, inf);
    for (int i = 0; i < n; ++i) adj(i, i) = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (u(rng) < 0.45)
          adj(i, j) = adj(j, i) = 0.25 * static_cast<double>(1 + rng() % 32);
    const Eigen::MatrixXd ref = oracle::apsp(adj);
    const Eigen::MatrixXd par = all_pairs_shortest_paths(adj, true);
    const Eigen::MatrixXd ser = all_pairs_shortest_paths(adj, false);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (par(i, j) != ref(i, j) || ser(i, j) != ref(i, j))
          apsp_exact = false;
  }

  // exp(-d^2) on a shortest-path metric is not PSD for arbitrary trees
  // (hence the repair step); the tight pre-repair bound is pinned on the
  // fixed scenario/test suite only.
  ModelConfig cfg;
  double worst_eig = 0.0, worst_tie = 0.0;
  std::vector<ActivityTree> suite = {synth1_tree(), synth2_tree()};
  for (const ActivityTree& t : small_trees()) suite.push_back(t);
  for (const ActivityTree& t : suite) {
    const ConstraintGraph g = build_constraint_graph(t, cfg);
    const Eigen::MatrixXd d = distance_matrix(g);
    const EndpointCovariance ec = endpoint_covariance(d, cfg.lambda, g.nodes);
    worst_eig = std::min(worst_eig, ec.min_eigenvalue_before_repair);
    for (int i = 0; i < d.rows(); ++i)
      for (int j = 0; j < d.cols(); ++j)
        if (i != j && d(i, j) == 0.0) {
          // ignore the two diagonal entries: they carry the deliberate
          // 1e-8*lambda jitter
          Eigen::VectorXd diff = ec.matrix.row(i) - ec.matrix.row(j);
          diff(i) = diff(j) = 0.0;
          worst_tie = std::max(worst_tie, diff.cwiseAbs().maxCoeff());
        }
  }
  std::ostringstream d;
  d << "APSP " << (apsp_exact ? "exact on 100 graphs" : "MISMATCH")
    << ", min pre-repair eigenvalue " << worst_eig
    << ", zero-distance row gap " << worst_tie;
  report(6, apsp_exact && worst_eig >= -1e-6 * cfg.lambda &&
                worst_tie <= 1e-8,
         d.str());
}

// ---- criterion 7: detectors ------------------------------------------------

Scene straight_scene(const std::vector<std::vector<double>>& speeds) {
  Scene s;
  s.horizon = static_cast<int>(speeds[0].size()) + 1;
  for (size_t a = 0; a < speeds.size(); ++a) {
    s.actor_ids.push_back(static_cast<int>(a) + 1);
    Eigen::Matrix2Xd x(2, s.horizon);
    x.col(0) << 0.0, 10.0 * double(a);
    for (int t = 1; t < s.horizon; ++t)
      x.col(t) = x.col(t - 1) + Eigen::Vector2d(speeds[a][t - 1], 0.0);
    s.trajectories.push_back(x);
  }
  return s;
}

void criterion7() {
  DetectorConfig cfg;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& phys = physical_labels();

  bool viterbi_ok = true;
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> sp(11);
    for (auto& v : sp) {
      const double pick = u(rng);
      v = (pick < 0.3 ? 0.05 : pick < 0.7 ? 0.5 : 1.5) * (0.5 + u(rng));
    }
    const Scene s = straight_scene({sp});
    const auto got = classify_physical(s, cfg)[0];
    const auto feats = compute_frame_features(s, cfg);
    Eigen::MatrixXd log_emit(s.horizon, 3);
    for (int t = 0; t < s.horizon; ++t) {
      const double speed =
          std::max(feats[t].velocity[0].norm(), cfg.speed_floor);
      for (int k = 0; k < 3; ++k)
        log_emit(t, k) = oracle::gamma_lpdf(speed, cfg.gamma_shape,
                                            cfg.gamma_rate.at(phys[k]));
    }
    const auto best = oracle::brute_viterbi(log_emit, cfg.p_stay);
    for (int t = 0; t < s.horizon; ++t)
      if (got[t] != phys[best[t]]) viterbi_ok = false;
  }

  std::vector<double> sp;
  for (int i = 0; i < 25; ++i) sp.push_back(0.05);
  for (int i = 0; i < 25; ++i) sp.push_back(0.5);
  for (int i = 0; i < 25; ++i) sp.push_back(1.5);
  const Scene s = straight_scene({sp, sp});
  const auto labels = classify_physical(s, cfg);
  std::vector<ActivityLabel> want;
  for (int i = 0; i < 26; ++i) want.push_back(ActivityLabel::STAND);
  for (int i = 0; i < 25; ++i) want.push_back(ActivityLabel::WALK);
  for (int i = 0; i < 25; ++i) want.push_back(ActivityLabel::RUN);
  double acc = 1.0;
  for (const auto& got : labels) {
    int hits = 0;
    for (int t = 0; t < s.horizon; ++t) hits += got[t] == want[t];
    acc = std::min(acc, double(hits) / s.horizon);
  }

  bool dbscan_ok = true;
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int actors = 2 + static_cast<int>(rng() % 7);
    const double eps = 0.5 + u(rng);
    const int min_pts = 1 + static_cast<int>(rng() % 3);
    FrameFeatures f;
    std::vector<Eigen::Vector4d> scaled;
    for (int a = 0; a < actors; ++a) {
      const Eigen::Vector2d p(2.0 * nd(rng), 2.0 * nd(rng));
      const Eigen::Vector2d v(0.5 * nd(rng), 0.5 * nd(rng));
      f.position.push_back(p);
      f.velocity.push_back(v);
      Eigen::Vector4d x;
      x << cfg.w_pos * p, cfg.w_vel * v;
      scaled.push_back(x);
    }
    const auto labels2 = dbscan_frame(f, eps, min_pts, cfg.w_pos, cfg.w_vel);
    std::map<int, std::set<int>> blocks;
    for (size_t i = 0; i < labels2.size(); ++i)
      blocks[labels2[i]].insert(static_cast<int>(i));
    std::set<std::set<int>> got;
    for (auto& [l, bset] : blocks) got.insert(bset);
    const auto want2 = oracle::dbscan_partition(scaled, eps, min_pts);
    if (got != std::set<std::set<int>>(want2.begin(), want2.end()))
      dbscan_ok = false;
  }

  std::ostringstream d;
  d << "viterbi " << (viterbi_ok ? "= brute force" : "MISMATCH")
    << ", scripted accuracy " << acc << ", dbscan "
    << (dbscan_ok ? "= oracle on 50 frames" : "MISMATCH");
  report(7, viterbi_ok && acc >= 0.9 && dbscan_ok, d.str());
}

// ---- criterion 8: metrics --------------------------------------------------

void criterion8() {
  bool ok = true;
  const ActivityTree t = synth2_tree();
  const MetricsReport self = evaluate(t, t);
  for (const auto& [label, prf] : self.activity)
    ok = ok && prf.fp == 0 && prf.fn == 0;
  ok = ok && self.grouping.at(GroupingLevel::PHYS).f1() == 1.0;

  const MetricsReport ab = evaluate(synth1_tree(), synth2_tree());
  const MetricsReport ba = evaluate(synth2_tree(), synth1_tree());
  for (const auto& [label, prf] : ab.activity)
    ok = ok &&
         std::abs(prf.precision() - ba.activity.at(label).recall()) < 1e-12;

  const ActivityTree gt = ffa_tree(
      3, 1,
      {seq(RoleLabel::FFA_ROLE, {1, 2},
           {leaf(0, ActivityLabel::STAND, 1, 1, {1, 2})}),
       seq(RoleLabel::FFA_ROLE, {3},
           {leaf(0, ActivityLabel::STAND, 1, 1, {3})})});
  const ActivityTree inf = ffa_tree(
      3, 1,
      {seq(RoleLabel::FFA_ROLE, {1, 2, 3},
           {leaf(0, ActivityLabel::STAND, 1, 1, {1, 2, 3})})});
  const Prf& phys = grouping_scores(gt, inf).at(GroupingLevel::PHYS);
  ok = ok && phys.tp == 5 && phys.fp == 4 &&
       std::abs(phys.precision() - 5.0 / 9.0) < 1e-12;

  ModelConfig cfg;
  std::mt19937_64 rng(13);
  bool oracle_ok = true;
  for (int rep = 0; rep < 50; ++rep) {
    const int actors = 2 + static_cast<int>(rng() % 4);
    const int horizon = 6 + static_cast<int>(rng() % 8);
    const ActivityTree a = sample_tree(actors, horizon, cfg, rng);
    const ActivityTree b = sample_tree(actors, horizon, cfg, rng);
    const auto act = activity_labeling_scores(a, b);
    const auto oact = oracle::activity_counts(a, b);
    for (const auto& [label, prf] : act)
      if (!oact.count(label) || prf.tp != oact.at(label).tp ||
          prf.fp != oact.at(label).fp || prf.fn != oact.at(label).fn)
        oracle_ok = false;
    const auto grp = grouping_scores(a, b);
    for (bool phys_lvl : {true, false}) {
      const auto oc = oracle::grouping_counts(a, b, phys_lvl);
      const Prf& prf =
          grp.at(phys_lvl ? GroupingLevel::PHYS : GroupingLevel::INT);
      if (prf.tp != oc.tp || prf.fp != oc.fp || prf.fn != oc.fn)
        oracle_ok = false;
    }
  }
  std::ostringstream d;
  d << "identity/duality/worked example " << (ok ? "hold" : "BROKEN")
    << ", counts " << (oracle_ok ? "= oracle on 50 pairs" : "MISMATCH");
  report(8, ok && oracle_ok, d.str());
}

// ---- criterion 9: byte-identical CLI reruns --------------------------------

bool run_cli(const std::string& args) {
  const std::string cmd = std::string(GACT_CLI_PATH) + " " + args;
  return std::system(cmd.c_str()) == 0;
}

bool same_bytes(const std::string& a, const std::string& b) {
  return read_file(a) == read_file(b);
}

void criterion9() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::current_path() / "acceptance_tmp";
  fs::remove_all(dir);
  fs::create_directories(dir / "g1");
  fs::create_directories(dir / "g2");
  const std::string d = dir.string();
  bool ok = true;
  auto step = [&](bool v, const char* what) {
    if (!v) {
      std::cout << "  criterion 9: " << what << " differs or failed"
                << std::endl;
      ok = false;
    }
  };

  step(run_cli("generate --scenario SYNTH2 --seed 7 --out-dir " + d + "/g1") &&
           run_cli("generate --scenario SYNTH2 --seed 7 --out-dir " + d +
                   "/g2"),
       "generate");
  for (const char* f : {"scene.csv", "truth.json", "scene.svg"})
    step(same_bytes(d + "/g1/" + f, d + "/g2/" + f), f);

  const std::string scene = d + "/g1/scene.csv";
  for (int r = 1; r <= 2; ++r) {
    const std::string p = d + "/det" + std::to_string(r);
    step(run_cli("detect --scene " + scene + " --groups-out " + p +
                 ".groups.csv --labels-out " + p + ".labels.csv --tree-out " +
                 p + ".json"),
         "detect");
  }
  for (const char* ext : {".groups.csv", ".labels.csv", ".json"})
    step(same_bytes(d + "/det1" + ext, d + "/det2" + ext), "detect output");

  for (int r = 1; r <= 2; ++r) {
    const std::string p = d + "/inf" + std::to_string(r);
    step(run_cli("infer --scene " + scene +
                 " --iterations 500 --chains 2 --seed 5 --out " + p +
                 ".json --trace " + p + ".trace.csv > " + p + ".log"),
         "infer");
  }
  step(same_bytes(d + "/inf1.json", d + "/inf2.json"), "infer tree");
  step(same_bytes(d + "/inf1.trace.csv", d + "/inf2.trace.csv"),
       "infer trace");

  for (int r = 1; r <= 2; ++r)
    step(run_cli("evaluate --gt " + d + "/g1/truth.json --pred " + d +
                 "/inf1.json > " + d + "/eval" + std::to_string(r) + ".txt"),
         "evaluate");
  step(same_bytes(d + "/eval1.txt", d + "/eval2.txt"), "evaluate output");

  for (int r = 1; r <= 2; ++r)
    step(run_cli("render --scene " + scene + " --tree " + d +
                 "/det1.json --out " + d + "/r" + std::to_string(r) + ".svg"),
         "render");
  step(same_bytes(d + "/r1.svg", d + "/r2.svg"), "render output");

  report(9, ok, ok ? "all subcommand outputs byte-identical across reruns"
                   : "see lines above");
  if (ok) fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select individual criteria (debugging aid).
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  auto want = [&](int c) { return pick.empty() || pick.count(c); };

  if (want(1))
    criterion_scripted(1, ScenarioSpec::Id::SYNTH2,
                       {101, 102, 103, 104, 105}, true);
  if (want(2))
    criterion_scripted(2, ScenarioSpec::Id::SYNTH1,
                       {201, 202, 203, 204, 205}, false);
  if (want(3)) criterion3();
  if (want(4)) criterion4();
  if (want(5)) criterion5();
  if (want(6)) criterion6();
  if (want(7)) criterion7();
  if (want(8)) criterion8();
  if (want(9)) criterion9();
  std::cout << (failures == 0 ? "ACCEPTANCE PASSED"
                              : "ACCEPTANCE FAILED") << " (" << failures
            << " failing criteria)" << std::endl;
  return failures;
}
