#include "gact/types.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace gact {

bool is_physical(ActivityLabel a) {
  return a == ActivityLabel::STAND || a == ActivityLabel::WALK ||
         a == ActivityLabel::RUN;
}

bool is_intentional(ActivityLabel a) { return !is_physical(a); }

const std::vector<ActivityLabel>& all_labels() {
  static const std::vector<ActivityLabel> v = {
      ActivityLabel::FFA,   ActivityLabel::MEET, ActivityLabel::MOVE_TO,
      ActivityLabel::STAND, ActivityLabel::WALK, ActivityLabel::RUN};
  return v;
}

const std::vector<ActivityLabel>& physical_labels() {
  static const std::vector<ActivityLabel> v = {
      ActivityLabel::STAND, ActivityLabel::WALK, ActivityLabel::RUN};
  return v;
}

const std::vector<ActivityLabel>& intentional_labels() {
  static const std::vector<ActivityLabel> v = {
      ActivityLabel::FFA, ActivityLabel::MEET, ActivityLabel::MOVE_TO};
  return v;
}

const std::vector<ActivityLabel>& role_allowed_labels(RoleLabel r) {
  static const std::vector<ActivityLabel> ffa = {
      ActivityLabel::MEET, ActivityLabel::MOVE_TO, ActivityLabel::STAND,
      ActivityLabel::WALK, ActivityLabel::RUN};
  static const std::vector<ActivityLabel> approacher = {ActivityLabel::MEET,
                                                        ActivityLabel::MOVE_TO};
  static const std::vector<ActivityLabel> waiter = {ActivityLabel::STAND};
  static const std::vector<ActivityLabel> mover = {
      ActivityLabel::STAND, ActivityLabel::WALK, ActivityLabel::RUN};
  switch (r) {
    case RoleLabel::FFA_ROLE: return ffa;
    case RoleLabel::APPROACHER: return approacher;
    case RoleLabel::WAITER: return waiter;
    case RoleLabel::MOVER: return mover;
  }
  throw std::logic_error("unknown role");
}

const std::vector<RoleLabel>& activity_role_support(ActivityLabel a) {
  static const std::vector<RoleLabel> ffa = {RoleLabel::FFA_ROLE};
  static const std::vector<RoleLabel> meet = {RoleLabel::APPROACHER,
                                              RoleLabel::WAITER};
  static const std::vector<RoleLabel> move_to = {RoleLabel::MOVER};
  static const std::vector<RoleLabel> none = {};
  switch (a) {
    case ActivityLabel::FFA: return ffa;
    case ActivityLabel::MEET: return meet;
    case ActivityLabel::MOVE_TO: return move_to;
    default: return none;
  }
}

std::string to_string(ActivityLabel a) {
  switch (a) {
    case ActivityLabel::FFA: return "FFA";
    case ActivityLabel::MEET: return "MEET";
    case ActivityLabel::MOVE_TO: return "MOVE_TO";
    case ActivityLabel::STAND: return "STAND";
    case ActivityLabel::WALK: return "WALK";
    case ActivityLabel::RUN: return "RUN";
  }
  return "?";
}

std::string to_string(RoleLabel r) {
  switch (r) {
    case RoleLabel::FFA_ROLE: return "FFA_ROLE";
    case RoleLabel::APPROACHER: return "APPROACHER";
    case RoleLabel::WAITER: return "WAITER";
    case RoleLabel::MOVER: return "MOVER";
  }
  return "?";
}

bool parse_activity_label(const std::string& s, ActivityLabel* out) {
  for (ActivityLabel a : all_labels()) {
    if (to_string(a) == s) {
      *out = a;
      return true;
    }
  }
  return false;
}

bool parse_role_label(const std::string& s, RoleLabel* out) {
  static const RoleLabel roles[] = {RoleLabel::FFA_ROLE, RoleLabel::APPROACHER,
                                    RoleLabel::WAITER, RoleLabel::MOVER};
  for (RoleLabel r : roles) {
    if (to_string(r) == s) {
      *out = r;
      return true;
    }
  }
  return false;
}

int Scene::actor_index(int actor_id) const {
  auto it = std::lower_bound(actor_ids.begin(), actor_ids.end(), actor_id);
  if (it == actor_ids.end() || *it != actor_id) return -1;
  return static_cast<int>(it - actor_ids.begin());
}

void for_each_node(const ActivityNode& node,
                   const std::function<void(const ActivityNode&)>& fn) {
  fn(node);
  for (const auto& seq : node.children)
    for (const auto& seg : seq.segments) for_each_node(seg, fn);
}

void for_each_node(ActivityNode& node,
                   const std::function<void(ActivityNode&)>& fn) {
  fn(node);
  for (auto& seq : node.children)
    for (auto& seg : seq.segments) for_each_node(seg, fn);
}

std::vector<const ActivityNode*> physical_leaves(const ActivityTree& tree) {
  std::vector<const ActivityNode*> out;
  for_each_node(tree.root, [&](const ActivityNode& n) {
    if (is_physical(n.label)) out.push_back(&n);
  });
  return out;
}

namespace {

void normalize_node(ActivityNode& node) {
  std::sort(node.participants.begin(), node.participants.end());
  for (auto& seq : node.children) {
    std::sort(seq.members.begin(), seq.members.end());
    for (auto& seg : seq.segments) normalize_node(seg);
  }
  std::stable_sort(node.children.begin(), node.children.end(),
                   [](const ChildSequence& a, const ChildSequence& b) {
                     int ma = a.members.empty() ? -1 : a.members.front();
                     int mb = b.members.empty() ? -1 : b.members.front();
                     return ma < mb;
                   });
}

void renumber(ActivityNode& node, int* next) {
  node.id = (*next)++;
  for (auto& seq : node.children)
    for (auto& seg : seq.segments) renumber(seg, next);
}

void canonical_node(const ActivityNode& n, std::ostream& os) {
  os << to_string(n.label) << '[' << n.start << ',' << n.end << "](";
  for (size_t i = 0; i < n.participants.size(); ++i) {
    if (i) os << ',';
    os << n.participants[i];
  }
  os << ')';
  if (!n.children.empty()) {
    os << '{';
    for (const auto& seq : n.children) {
      os << to_string(seq.role) << '<';
      for (size_t i = 0; i < seq.members.size(); ++i) {
        if (i) os << ',';
        os << seq.members[i];
      }
      os << ">:";
      for (const auto& seg : seq.segments) canonical_node(seg, os);
      os << ';';
    }
    os << '}';
  }
}

}  // namespace

void normalize_tree(ActivityTree& tree) {
  normalize_node(tree.root);
  int next = 0;
  renumber(tree.root, &next);
}

std::string canonical_string(const ActivityTree& tree) {
  std::ostringstream os;
  ActivityTree t = tree;
  normalize_tree(t);
  canonical_node(t.root, os);
  return os.str();
}

int count_nodes(const ActivityTree& tree) {
  int n = 0;
  for_each_node(tree.root, [&](const ActivityNode&) { ++n; });
  return n;
}

}  // namespace gact
