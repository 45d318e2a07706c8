#pragma once

// Small tree builders shared by the test suites.

#include <vector>

#include "gact/types.hpp"

namespace testutil {

inline gact::ActivityNode leaf(int id, gact::ActivityLabel a, int s, int e,
                               std::vector<int> who) {
  gact::ActivityNode n;
  n.id = id;
  n.label = a;
  n.start = s;
  n.end = e;
  n.participants = std::move(who);
  return n;
}

inline gact::ChildSequence seq(gact::RoleLabel role, std::vector<int> members,
                               std::vector<gact::ActivityNode> segments) {
  gact::ChildSequence c;
  c.role = role;
  c.members = std::move(members);
  c.segments = std::move(segments);
  return c;
}

// FFA root over the given horizon with one FFA_ROLE sequence per entry.
inline gact::ActivityTree ffa_tree(int actors, int horizon,
                                   std::vector<gact::ChildSequence> seqs) {
  gact::ActivityTree t;
  t.actor_count = actors;
  t.horizon = horizon;
  t.root.id = 0;
  t.root.label = gact::ActivityLabel::FFA;
  t.root.start = 1;
  t.root.end = horizon;
  for (int a = 1; a <= actors; ++a) t.root.participants.push_back(a);
  t.root.children = std::move(seqs);
  int next = 1;
  gact::for_each_node(t.root, [&](gact::ActivityNode& n) {
    if (&n != &t.root) n.id = next++;
  });
  return t;
}

// One actor, one physical leaf spanning the horizon.
inline gact::ActivityTree single_leaf_tree(gact::ActivityLabel a, int horizon) {
  return ffa_tree(1, horizon,
                  {seq(gact::RoleLabel::FFA_ROLE, {1},
                       {leaf(1, a, 1, horizon, {1})})});
}

}  // namespace testutil
