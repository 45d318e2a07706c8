#include "gact/metrics.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace gact {

namespace {

void check_universe(const ActivityTree& gt, const ActivityTree& inferred) {
  if (gt.actor_count != inferred.actor_count ||
      gt.horizon != inferred.horizon ||
      gt.root.participants != inferred.root.participants)
    throw std::invalid_argument("metrics: trees compare different universes");
}

int actor_pos(const ActivityTree& tree, int actor_id) {
  const auto& ids = tree.root.participants;
  const auto it = std::lower_bound(ids.begin(), ids.end(), actor_id);
  return static_cast<int>(it - ids.begin());
}

}  // namespace

LabelMatrix label_matrix(const ActivityTree& tree) {
  LabelMatrix m;
  m.labels.assign(tree.actor_count,
                  std::vector<std::set<ActivityLabel>>(tree.horizon));
  std::function<void(const ActivityNode&)> walk = [&](const ActivityNode& n) {
    for (int actor : n.participants) {
      const int j = actor_pos(tree, actor);
      for (int t = n.start; t <= n.end; ++t) m.labels[j][t - 1].insert(n.label);
    }
    for (const auto& seq : n.children)
      for (const auto& seg : seq.segments) walk(seg);
  };
  walk(tree.root);
  return m;
}

std::map<ActivityLabel, Prf> activity_labeling_scores(
    const ActivityTree& gt, const ActivityTree& inferred) {
  check_universe(gt, inferred);
  const LabelMatrix lg = label_matrix(gt);
  const LabelMatrix li = label_matrix(inferred);
  const int J = gt.actor_count;
  const int F = gt.horizon;

  std::map<ActivityLabel, Prf> out;
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < F; ++t) {
      std::set<ActivityLabel> acts = lg.labels[j][t];
      acts.insert(li.labels[j][t].begin(), li.labels[j][t].end());
      for (ActivityLabel a : acts) {
        // Individuals sharing label a with actor j (empty when j itself
        // does not perform a).
        std::set<int> lam, lam_gt;
        if (li.labels[j][t].count(a))
          for (int k = 0; k < J; ++k)
            if (li.labels[k][t].count(a)) lam.insert(k);
        if (lg.labels[j][t].count(a))
          for (int k = 0; k < J; ++k)
            if (lg.labels[k][t].count(a)) lam_gt.insert(k);
        Prf& p = out[a];
        for (int k : lam) {
          if (lam_gt.count(k))
            ++p.tp;
          else
            ++p.fp;
        }
        for (int k : lam_gt)
          if (!lam.count(k)) ++p.fn;
      }
    }
  return out;
}

namespace {

// groups[j][t-1] = member set defining actor j's group at frame t.
using GroupMap = std::vector<std::vector<std::set<int>>>;

GroupMap physical_groups(const ActivityTree& tree) {
  GroupMap g(tree.actor_count,
             std::vector<std::set<int>>(tree.horizon));
  for (const ActivityNode* leaf : physical_leaves(tree)) {
    std::set<int> members(leaf->participants.begin(),
                          leaf->participants.end());
    for (int actor : leaf->participants) {
      const int j = actor_pos(tree, actor);
      for (int t = leaf->start; t <= leaf->end; ++t) g[j][t - 1] = members;
    }
  }
  return g;
}

GroupMap intentional_groups(const ActivityTree& tree) {
  GroupMap g(tree.actor_count, std::vector<std::set<int>>(tree.horizon));
  std::set<int> everyone(tree.root.participants.begin(),
                         tree.root.participants.end());
  for (auto& row : g)
    for (auto& cell : row) cell = everyone;  // fallback: root membership
  for (const auto& seq : tree.root.children) {
    std::set<int> members(seq.members.begin(), seq.members.end());
    for (const auto& seg : seq.segments)
      for (int actor : seg.participants) {
        const int j = actor_pos(tree, actor);
        for (int t = seg.start; t <= seg.end; ++t) g[j][t - 1] = members;
      }
  }
  return g;
}

Prf compare_groups(const GroupMap& gt, const GroupMap& inferred) {
  Prf p;
  for (size_t j = 0; j < gt.size(); ++j)
    for (size_t t = 0; t < gt[j].size(); ++t) {
      const auto& a = inferred[j][t];
      const auto& b = gt[j][t];
      for (int k : a) {
        if (b.count(k))
          ++p.tp;
        else
          ++p.fp;
      }
      for (int k : b)
        if (!a.count(k)) ++p.fn;
    }
  return p;
}

}  // namespace

std::map<GroupingLevel, Prf> grouping_scores(const ActivityTree& gt,
                                             const ActivityTree& inferred) {
  check_universe(gt, inferred);
  std::map<GroupingLevel, Prf> out;
  out[GroupingLevel::PHYS] =
      compare_groups(physical_groups(gt), physical_groups(inferred));
  out[GroupingLevel::INT] =
      compare_groups(intentional_groups(gt), intentional_groups(inferred));
  return out;
}

MetricsReport evaluate(const ActivityTree& gt, const ActivityTree& inferred) {
  MetricsReport r;
  r.activity = activity_labeling_scores(gt, inferred);
  r.grouping = grouping_scores(gt, inferred);
  return r;
}

namespace {
const char* level_name(GroupingLevel l) {
  return l == GroupingLevel::PHYS ? "PHYS" : "INT";
}
}  // namespace

std::string format_report(const MetricsReport& report) {
  std::ostringstream os;
  os << "activity labeling\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "  %-8s %9s %9s %9s\n", "activity",
                "precision", "recall", "F1");
  os << buf;
  for (const auto& [a, p] : report.activity) {
    std::snprintf(buf, sizeof buf, "  %-8s %9.3f %9.3f %9.3f\n",
                  to_string(a).c_str(), p.precision(), p.recall(), p.f1());
    os << buf;
  }
  os << "grouping\n";
  for (const auto& [l, p] : report.grouping) {
    std::snprintf(buf, sizeof buf, "  %-8s %9.3f %9.3f %9.3f\n",
                  level_name(l), p.precision(), p.recall(), p.f1());
    os << buf;
  }
  return os.str();
}

std::string report_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << "kind,name,precision,recall,f1\n";
  for (const auto& [a, p] : report.activity)
    os << "activity," << to_string(a) << ',' << p.precision() << ','
       << p.recall() << ',' << p.f1() << '\n';
  for (const auto& [l, p] : report.grouping)
    os << "grouping," << level_name(l) << ',' << p.precision() << ','
       << p.recall() << ',' << p.f1() << '\n';
  return os.str();
}

}  // namespace gact
