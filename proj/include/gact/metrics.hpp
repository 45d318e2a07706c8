#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "gact/types.hpp"

namespace gact {

// labels[j][t-1] = set of activity labels on actor j's ancestry path at
// frame t (root included, so FFA is always present).
struct LabelMatrix {
  std::vector<std::vector<std::set<ActivityLabel>>> labels;
};

LabelMatrix label_matrix(const ActivityTree& tree);

struct Prf {
  long long tp = 0, fp = 0, fn = 0;
  double precision() const { return tp + fp ? double(tp) / (tp + fp) : 0.0; }
  double recall() const { return tp + fn ? double(tp) / (tp + fn) : 0.0; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
};

enum class GroupingLevel { PHYS, INT };

struct MetricsReport {
  std::map<ActivityLabel, Prf> activity;  // activities present in either tree
  std::map<GroupingLevel, Prf> grouping;
};

// Per-(actor, frame, activity) set differences between the groups of
// individuals sharing a label, aggregated per activity.
std::map<ActivityLabel, Prf> activity_labeling_scores(
    const ActivityTree& gt, const ActivityTree& inferred);

// PHYS compares physical-leaf member sets; INT compares the member set of
// the actor's child-of-root node at each frame.
std::map<GroupingLevel, Prf> grouping_scores(const ActivityTree& gt,
                                             const ActivityTree& inferred);

MetricsReport evaluate(const ActivityTree& gt, const ActivityTree& inferred);

std::string format_report(const MetricsReport& report);
std::string report_csv(const MetricsReport& report);

}  // namespace gact
