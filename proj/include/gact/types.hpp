#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gact {

// Six activity labels. FFA, MEET and MOVE_TO are intentional (they expand
// into child sequences); STAND, WALK and RUN are physical leaves.
enum class ActivityLabel { FFA, MEET, MOVE_TO, STAND, WALK, RUN };

enum class RoleLabel { FFA_ROLE, APPROACHER, WAITER, MOVER };

inline constexpr int kNumActivityLabels = 6;
inline constexpr int kNumRoleLabels = 4;

bool is_physical(ActivityLabel a);
bool is_intentional(ActivityLabel a);

const std::vector<ActivityLabel>& all_labels();
const std::vector<ActivityLabel>& physical_labels();
const std::vector<ActivityLabel>& intentional_labels();

// Labels a role may place in its activity sequence.
// FFA_ROLE: all five non-root labels; APPROACHER: {MEET, MOVE_TO};
// WAITER: {STAND}; MOVER: {STAND, WALK, RUN}.
const std::vector<ActivityLabel>& role_allowed_labels(RoleLabel r);

// Support of the role distribution p(r | a) for an intentional activity.
const std::vector<RoleLabel>& activity_role_support(ActivityLabel a);

std::string to_string(ActivityLabel a);
std::string to_string(RoleLabel r);
bool parse_activity_label(const std::string& s, ActivityLabel* out);
bool parse_role_label(const std::string& s, RoleLabel* out);

struct ActivityNode;

// One subgroup's run of activities fulfilling a role. Segments abut and
// tile the parent node's frame interval.
struct ChildSequence {
  RoleLabel role{};
  std::vector<int> members;  // sorted actor ids
  std::vector<ActivityNode> segments;
};

// An activity over the inclusive frame interval [start, end].
struct ActivityNode {
  int id = 0;
  ActivityLabel label = ActivityLabel::STAND;
  int start = 1;
  int end = 1;
  std::vector<int> participants;  // sorted actor ids
  std::vector<ChildSequence> children;  // empty iff label is physical
};

struct ActivityTree {
  ActivityNode root;   // label FFA, spans 1..horizon, all actors
  int actor_count = 0;
  int horizon = 0;
};

// Observed 2-D ground-plane trajectories, one per actor, frames 1..horizon.
struct Scene {
  std::vector<int> actor_ids;               // sorted
  int horizon = 0;
  std::vector<Eigen::Matrix2Xd> trajectories;  // [actor index] -> 2 x horizon

  int actor_index(int actor_id) const;
};

// ---- tree traversal and canonicalization helpers ----

// Depth-first visit of every node (root first).
void for_each_node(const ActivityNode& node,
                   const std::function<void(const ActivityNode&)>& fn);
void for_each_node(ActivityNode& node,
                   const std::function<void(ActivityNode&)>& fn);

// Pointers to all physical leaves in depth-first order.
std::vector<const ActivityNode*> physical_leaves(const ActivityTree& tree);

// Sorts members, orders child sequences by smallest member and renumbers
// node ids in depth-first order. Equal trees normalize identically.
void normalize_tree(ActivityTree& tree);

// Canonical serialization of the structure; equal iff trees are equal
// after normalization.
std::string canonical_string(const ActivityTree& tree);

int count_nodes(const ActivityTree& tree);

}  // namespace gact
