#include "gact/tree_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gact {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double safe_log(double x) { return x > 0 ? std::log(x) : kNegInf; }

void validate_node(const ActivityNode& node, const ActivityTree& tree,
                   bool is_root, ValidationReport* report) {
  auto flag = [&](const std::string& msg) {
    std::ostringstream os;
    os << "node " << node.id << " (" << to_string(node.label) << " ["
       << node.start << "," << node.end << "]): " << msg;
    report->violations.push_back(os.str());
  };

  if (node.start > node.end) flag("start exceeds end");
  if (node.participants.empty()) flag("empty participant set");
  if (!std::is_sorted(node.participants.begin(), node.participants.end()))
    flag("participants not sorted");
  if (node.label == ActivityLabel::FFA && !is_root)
    flag("FFA below the root");
  if (is_root) {
    if (node.label != ActivityLabel::FFA) flag("root is not FFA");
    if (node.start != 1 || node.end != tree.horizon)
      flag("root does not span the full horizon");
    if (static_cast<int>(node.participants.size()) != tree.actor_count)
      flag("root does not contain all actors");
  }

  if (is_physical(node.label)) {
    if (!node.children.empty()) flag("physical node has children");
    return;
  }
  if (node.children.empty()) {
    flag("intentional node has no child sequences");
    return;
  }

  // Child member sets must partition the participants.
  std::vector<int> merged;
  for (const auto& seq : node.children)
    merged.insert(merged.end(), seq.members.begin(), seq.members.end());
  std::sort(merged.begin(), merged.end());
  if (std::adjacent_find(merged.begin(), merged.end()) != merged.end())
    flag("child member sets overlap");
  if (merged != node.participants)
    flag("child member sets do not cover the participants");

  for (const auto& seq : node.children) {
    if (seq.members.empty()) flag("child sequence with empty member set");
    if (seq.segments.empty()) {
      flag("child sequence with no segments");
      continue;
    }
    const auto& allowed = role_allowed_labels(seq.role);
    if (seq.segments.front().start != node.start)
      flag("sequence does not start at parent start");
    if (seq.segments.back().end != node.end)
      flag("sequence does not end at parent end");
    for (size_t i = 0; i < seq.segments.size(); ++i) {
      const ActivityNode& seg = seq.segments[i];
      if (i > 0 && seg.start != seq.segments[i - 1].end + 1)
        flag("segments do not abut");
      if (seg.participants != seq.members)
        flag("segment participants differ from sequence members");
      if (std::find(allowed.begin(), allowed.end(), seg.label) ==
          allowed.end())
        flag("label " + to_string(seg.label) + " not allowed for role " +
             to_string(seq.role));
      validate_node(seg, tree, false, report);
    }
  }
}

}  // namespace

ValidationReport validate_tree(const ActivityTree& tree) {
  ValidationReport report;
  if (tree.horizon < 1) report.violations.push_back("tree: horizon < 1");
  if (tree.actor_count < 1) report.violations.push_back("tree: no actors");
  validate_node(tree.root, tree, true, &report);

  std::set<int> ids;
  bool dup = false;
  for_each_node(tree.root, [&](const ActivityNode& n) {
    if (!ids.insert(n.id).second) dup = true;
  });
  if (dup) report.violations.push_back("tree: duplicate node ids");

  // Each actor must sit in exactly one physical leaf at each frame.
  if (report.ok()) {
    std::map<int, std::vector<int>> cover;  // actor -> per-frame count
    for (int a : tree.root.participants) cover[a].assign(tree.horizon, 0);
    for (const ActivityNode* leaf : physical_leaves(tree))
      for (int a : leaf->participants)
        for (int t = leaf->start; t <= leaf->end; ++t)
          if (t >= 1 && t <= tree.horizon) ++cover[a][t - 1];
    for (const auto& [a, counts] : cover)
      for (int t = 0; t < tree.horizon; ++t)
        if (counts[t] != 1) {
          std::ostringstream os;
          os << "actor " << a << " lies in " << counts[t]
             << " physical leaves at frame " << (t + 1);
          report.violations.push_back(os.str());
          t = tree.horizon;  // one message per actor is enough
        }
  }
  return report;
}

double crp_log_prob(const std::vector<std::vector<int>>& partition, int n,
                    double alpha) {
  if (alpha <= 0) throw std::invalid_argument("crp_log_prob: alpha <= 0");
  std::vector<int> merged;
  for (const auto& block : partition) {
    if (block.empty())
      throw std::invalid_argument("crp_log_prob: empty block");
    merged.insert(merged.end(), block.begin(), block.end());
  }
  std::sort(merged.begin(), merged.end());
  if (static_cast<int>(merged.size()) != n ||
      std::adjacent_find(merged.begin(), merged.end()) != merged.end())
    throw std::invalid_argument(
        "crp_log_prob: blocks are not a partition of the n items");

  double lp = 0.0;
  for (const auto& block : partition)
    lp += std::log(alpha) + std::lgamma(static_cast<double>(block.size()));
  for (int i = 0; i < n; ++i) lp -= std::log(alpha + i);
  return lp;
}

double geometric_duration_log_mass(int d, double rate) {
  if (d < 1) return kNegInf;
  const double p = 1.0 / rate;
  if (p >= 1.0) return d == 1 ? 0.0 : kNegInf;
  return (d - 1) * std::log1p(-p) + std::log(p);
}

namespace {

// logf(t, a): log mass of chains tiling t frames whose last segment has
// label index a, labels restricted to `mask`.
Eigen::MatrixXd sequence_dp(const RoleDynamics& dyn, int span,
                            const std::vector<int>& mask) {
  const int n = static_cast<int>(dyn.initial.size());
  std::vector<int> idx = mask;
  if (idx.empty())
    for (int i = 0; i < n; ++i) idx.push_back(i);

  Eigen::MatrixXd logf =
      Eigen::MatrixXd::Constant(span + 1, n, kNegInf);
  for (int t = 1; t <= span; ++t) {
    for (int a : idx) {
      double v = safe_log(dyn.initial(a)) +
                 geometric_duration_log_mass(t, dyn.duration_rate);
      for (int d = 1; d < t; ++d) {
        const double gd = geometric_duration_log_mass(d, dyn.duration_rate);
        if (gd == kNegInf) continue;
        for (int ap : idx) {
          double w = logf(t - d, ap) + safe_log(dyn.transition(ap, a)) + gd;
          v = logsumexp2(v, w);
        }
      }
      logf(t, a) = v;
    }
  }
  return logf;
}

}  // namespace

double role_sequence_log_normalizer(const RoleDynamics& dyn, int span,
                                    const std::vector<int>& mask) {
  if (span < 1) return kNegInf;
  Eigen::MatrixXd logf = sequence_dp(dyn, span, mask);
  double z = kNegInf;
  for (int a = 0; a < logf.cols(); ++a) z = logsumexp2(z, logf(span, a));
  return z;
}

double role_sequence_log_prob(const ChildSequence& seq,
                              const RoleDynamics& dyn, int span_start,
                              int span_end) {
  const int span = span_end - span_start + 1;
  if (span < 1 || seq.segments.empty()) return kNegInf;
  if (seq.segments.front().start != span_start ||
      seq.segments.back().end != span_end)
    return kNegInf;

  const auto& labels = role_allowed_labels(seq.role);
  double lu = 0.0;
  int prev = -1;
  int cursor = span_start;
  for (const ActivityNode& seg : seq.segments) {
    if (seg.start != cursor || seg.end < seg.start) return kNegInf;
    cursor = seg.end + 1;
    int a = -1;
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == seg.label) a = static_cast<int>(i);
    if (a < 0) return kNegInf;
    lu += (prev < 0) ? safe_log(dyn.initial(a))
                     : safe_log(dyn.transition(prev, a));
    lu += geometric_duration_log_mass(seg.end - seg.start + 1,
                                      dyn.duration_rate);
    prev = a;
  }
  if (lu == kNegInf) return kNegInf;
  return lu - role_sequence_log_normalizer(dyn, span);
}

SequenceDraw sample_role_sequence(RoleLabel role, const RoleDynamics& dyn,
                                  int span, std::mt19937_64& rng,
                                  const std::vector<int>& mask) {
  const auto& labels = role_allowed_labels(role);
  const int n = static_cast<int>(labels.size());
  std::vector<int> idx = mask;
  if (idx.empty())
    for (int i = 0; i < n; ++i) idx.push_back(i);
  Eigen::MatrixXd logf = sequence_dp(dyn, span, idx);

  auto categorical = [&](const std::vector<double>& logw) {
    double m = kNegInf;
    for (double w : logw) m = std::max(m, w);
    if (m == kNegInf)
      throw std::runtime_error("sample_role_sequence: no mass to draw from");
    std::vector<double> w(logw.size());
    double total = 0;
    for (size_t i = 0; i < logw.size(); ++i) {
      w[i] = std::exp(logw[i] - m);
      total += w[i];
    }
    std::uniform_real_distribution<double> unif(0.0, total);
    double u = unif(rng);
    for (size_t i = 0; i + 1 < w.size(); ++i) {
      if (u < w[i]) return i;
      u -= w[i];
    }
    return w.size() - 1;
  };

  // Last label.
  std::vector<double> lw;
  for (int a : idx) lw.push_back(logf(span, a));
  int a = idx[categorical(lw)];

  std::vector<std::pair<ActivityLabel, int>> rev;  // (label, duration), last first
  int t = span;
  while (true) {
    // Options: single opening segment of duration t, or a last segment of
    // duration d preceded by a chain of t-d frames ending at a'.
    std::vector<double> opts;
    std::vector<std::pair<int, int>> meta;  // (d, a'), a' = -1 for opening
    opts.push_back(safe_log(dyn.initial(a)) +
                   geometric_duration_log_mass(t, dyn.duration_rate));
    meta.push_back({t, -1});
    for (int d = 1; d < t; ++d) {
      const double gd = geometric_duration_log_mass(d, dyn.duration_rate);
      for (int ap : idx) {
        opts.push_back(logf(t - d, ap) + safe_log(dyn.transition(ap, a)) + gd);
        meta.push_back({d, ap});
      }
    }
    size_t pick = categorical(opts);
    rev.push_back({labels[a], meta[pick].first});
    if (meta[pick].second < 0) break;
    t -= meta[pick].first;
    a = meta[pick].second;
  }

  SequenceDraw draw;
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
    draw.labels.push_back(it->first);
    draw.durations.push_back(it->second);
  }
  return draw;
}

double tree_log_prior(const ActivityTree& tree, const ModelConfig& config) {
  if (!validate_tree(tree).ok()) return kNegInf;

  double lp = 0.0;
  bool bad = false;
  for_each_node(tree.root, [&](const ActivityNode& node) {
    if (is_physical(node.label) || bad) return;
    std::vector<std::vector<int>> partition;
    for (const auto& seq : node.children) partition.push_back(seq.members);
    lp += crp_log_prob(partition,
                       static_cast<int>(node.participants.size()),
                       config.alpha.at(node.label));
    for (const auto& seq : node.children) {
      lp += config.role_log_prob(node.label, seq.role);
      lp += role_sequence_log_prob(seq, config.dynamics(seq.role), node.start,
                                   node.end);
      if (lp == kNegInf) {
        bad = true;
        return;
      }
    }
  });
  return bad ? kNegInf : lp;
}

}  // namespace gact
