#include "gact/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "gact/gp_likelihood.hpp"
#include "gact/tree_prior.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gact {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

MoveKind reverse_move(MoveKind k) {
  switch (k) {
    case MoveKind::BIRTH: return MoveKind::DEATH;
    case MoveKind::DEATH: return MoveKind::BIRTH;
    case MoveKind::MERGE: return MoveKind::SPLIT;
    case MoveKind::SPLIT: return MoveKind::MERGE;
    case MoveKind::SEQUENCE: return MoveKind::UNSEQUENCE;
    case MoveKind::UNSEQUENCE: return MoveKind::SEQUENCE;
    case MoveKind::RELABEL: return MoveKind::RELABEL;
  }
  throw std::logic_error("reverse_move: bad kind");
}

std::string to_string(MoveKind k) {
  switch (k) {
    case MoveKind::BIRTH: return "BIRTH";
    case MoveKind::DEATH: return "DEATH";
    case MoveKind::MERGE: return "MERGE";
    case MoveKind::SPLIT: return "SPLIT";
    case MoveKind::SEQUENCE: return "SEQUENCE";
    case MoveKind::UNSEQUENCE: return "UNSEQUENCE";
    case MoveKind::RELABEL: return "RELABEL";
  }
  throw std::logic_error("to_string: bad move kind");
}

namespace {

std::set<ActivityLabel> labels_of(const ChildSequence& seq) {
  std::set<ActivityLabel> out;
  for (const auto& seg : seq.segments) out.insert(seg.label);
  return out;
}

// Roles valid for a sequence with the given label set under a parent label.
std::vector<RoleLabel> valid_roles(ActivityLabel parent,
                                   const std::set<ActivityLabel>& labels) {
  std::vector<RoleLabel> out;
  for (RoleLabel r : activity_role_support(parent)) {
    const auto& allowed = role_allowed_labels(r);
    bool ok = true;
    for (ActivityLabel a : labels)
      if (std::find(allowed.begin(), allowed.end(), a) == allowed.end()) {
        ok = false;
        break;
      }
    if (ok) out.push_back(r);
  }
  return out;
}

int uniform_index(std::mt19937_64& rng, int n) {
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

std::vector<int> union_members(const std::vector<const ChildSequence*>& seqs) {
  std::vector<int> out;
  for (const auto* s : seqs)
    out.insert(out.end(), s->members.begin(), s->members.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Visits every segment as (owner node, sequence index, segment index).
void walk_segments(ActivityNode& node,
                   const std::function<void(ActivityNode&, int, int)>& fn) {
  for (int s = 0; s < static_cast<int>(node.children.size()); ++s)
    for (int g = 0; g < static_cast<int>(node.children[s].segments.size());
         ++g) {
      fn(node, s, g);
      walk_segments(node.children[s].segments[g], fn);
    }
}

void walk_nodes(ActivityNode& node,
                const std::function<void(ActivityNode&)>& fn) {
  fn(node);
  for (auto& seq : node.children)
    for (auto& seg : seq.segments) walk_nodes(seg, fn);
}

struct SegSite {
  ActivityNode* parent = nullptr;
  int seq = 0;
  int seg = 0;

  ChildSequence& sequence() const { return parent->children[seq]; }
  ActivityNode& node() const { return parent->children[seq].segments[seg]; }
};

// ---------------------------------------------------------------- BIRTH

struct BirthOption {
  ActivityLabel label{};
  RoleLabel new_role{};
  std::vector<int> compat;  // child sequence indices adoptable under label
  unsigned long long subsets() const {
    return (1ull << compat.size()) - 1ull;
  }
};

std::vector<BirthOption> birth_options(const ActivityNode& node) {
  std::vector<BirthOption> out;
  if (is_physical(node.label)) return out;
  for (ActivityLabel a : {ActivityLabel::MEET, ActivityLabel::MOVE_TO}) {
    for (RoleLabel r : activity_role_support(node.label)) {
      const auto& allowed = role_allowed_labels(r);
      if (std::find(allowed.begin(), allowed.end(), a) == allowed.end())
        continue;
      BirthOption opt{a, r, {}};
      for (int i = 0; i < static_cast<int>(node.children.size()); ++i)
        if (!valid_roles(a, labels_of(node.children[i])).empty())
          opt.compat.push_back(i);
      if (!opt.compat.empty()) out.push_back(std::move(opt));
    }
  }
  return out;
}

unsigned long long birth_weight(const ActivityNode& node) {
  unsigned long long total = 0;
  for (const auto& opt : birth_options(node)) total += opt.subsets();
  return total;
}

std::vector<ActivityNode*> birth_sites(ActivityTree& tree) {
  std::vector<ActivityNode*> out;
  walk_nodes(tree.root, [&](ActivityNode& n) {
    if (birth_weight(n) > 0) out.push_back(&n);
  });
  return out;
}

// ---------------------------------------------------------------- DEATH

bool death_site_ok(const ActivityNode& parent, const ChildSequence& seq) {
  if (seq.segments.size() != 1) return false;
  const ActivityNode& node = seq.segments.front();
  if (!is_intentional(node.label)) return false;
  for (const auto& child : node.children)
    if (valid_roles(parent.label, labels_of(child)).empty()) return false;
  return true;
}

std::vector<SegSite> death_sites(ActivityTree& tree) {
  std::vector<SegSite> out;
  walk_segments(tree.root, [&](ActivityNode& p, int s, int g) {
    if (g == 0 && death_site_ok(p, p.children[s]))
      out.push_back({&p, s, g});
  });
  return out;
}

// ---------------------------------------------------------------- MERGE

struct MergeSite {
  ActivityNode* parent = nullptr;
  int a = 0, b = 0;  // child sequence indices, a < b
};

bool sole_segment(const ChildSequence& seq) {
  return seq.segments.size() == 1;
}

std::vector<MergeSite> merge_sites(ActivityTree& tree) {
  std::vector<MergeSite> out;
  walk_nodes(tree.root, [&](ActivityNode& n) {
    for (int i = 0; i < static_cast<int>(n.children.size()); ++i) {
      if (!sole_segment(n.children[i])) continue;
      for (int j = i + 1; j < static_cast<int>(n.children.size()); ++j) {
        if (!sole_segment(n.children[j])) continue;
        if (n.children[i].segments[0].label == n.children[j].segments[0].label)
          out.push_back({&n, i, j});
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------- SPLIT

bool split_site_ok(const ChildSequence& seq) {
  if (seq.segments.size() != 1) return false;
  const ActivityNode& node = seq.segments.front();
  if (is_physical(node.label))
    return node.participants.size() >= 2;
  return node.children.size() >= 2;
}

std::vector<SegSite> split_sites(ActivityTree& tree) {
  std::vector<SegSite> out;
  walk_segments(tree.root, [&](ActivityNode& p, int s, int g) {
    if (g == 0 && split_site_ok(p.children[s])) out.push_back({&p, s, g});
  });
  return out;
}

// Detector-suggested bipartitions of a node's members: cluster blocks at
// any frame in the node's interval, canonicalized to the side containing
// the smallest member. For intentional nodes only sides that are unions
// of child member sets survive.
std::vector<std::vector<int>> detector_bipartitions(
    const ActivityNode& node, const std::vector<int>& all_actors,
    const Detections* det) {
  std::set<std::vector<int>> sides;
  if (!det) return {};
  std::map<int, int> index;  // actor id -> detector column
  for (size_t i = 0; i < all_actors.size(); ++i) index[all_actors[i]] = int(i);
  const int lo = node.start;
  const int hi = node.end;
  for (int t = lo; t <= hi; ++t) {
    std::map<int, std::vector<int>> blocks;
    for (int actor : node.participants)
      blocks[det->clusters[t - 1][index.at(actor)]].push_back(actor);
    if (blocks.size() < 2) continue;
    for (auto& [cl, block] : blocks) {
      std::vector<int> side = block;
      if (std::find(side.begin(), side.end(), node.participants.front()) ==
          side.end()) {
        side.clear();
        for (int actor : node.participants)
          if (std::find(block.begin(), block.end(), actor) == block.end())
            side.push_back(actor);
      }
      std::sort(side.begin(), side.end());
      if (side.size() < node.participants.size()) sides.insert(side);
    }
  }

  std::vector<std::vector<int>> out;
  for (const auto& side : sides) {
    if (is_intentional(node.label)) {
      // Side must be a union of whole child sequences.
      bool ok = true;
      size_t covered = 0;
      for (const auto& child : node.children) {
        bool in = true, disjoint = true;
        for (int m : child.members) {
          if (std::binary_search(side.begin(), side.end(), m))
            disjoint = false;
          else
            in = false;
        }
        if (in) covered += child.members.size();
        if (!in && !disjoint) {
          ok = false;
          break;
        }
      }
      if (!ok || covered != side.size()) continue;
    }
    out.push_back(side);
  }
  return out;
}

// Probability of proposing the given canonical member side when splitting
// `node` (uniform over bipartitions mixed with the detector suggestions).
double bipartition_log_pmf(const ActivityNode& node,
                           const std::vector<int>& side,
                           const std::vector<int>& all_actors,
                           const Detections* det, double bias) {
  const int m = is_physical(node.label)
                    ? static_cast<int>(node.participants.size())
                    : static_cast<int>(node.children.size());
  const double n_uniform = std::pow(2.0, m - 1) - 1.0;
  const auto suggestions = detector_bipartitions(node, all_actors, det);
  const double beta = suggestions.empty() ? 0.0 : bias;
  double p = (1.0 - beta) / n_uniform;
  if (std::find(suggestions.begin(), suggestions.end(), side) !=
      suggestions.end())
    p += beta / suggestions.size();
  return std::log(p);
}

// -------------------------------------------------- SEQUENCE / UNSEQUENCE

struct JoinSite {
  ActivityNode* parent = nullptr;
  int seq = 0;
  int idx = 0;  // join segments idx and idx+1
};

bool join_site_ok(const ChildSequence& seq, int i) {
  const ActivityNode& a = seq.segments[i];
  const ActivityNode& b = seq.segments[i + 1];
  if (a.label != b.label) return false;
  if (is_physical(a.label)) return true;
  if (a.children.size() != b.children.size()) return false;
  std::map<std::vector<int>, const ChildSequence*> blocks;
  for (const auto& child : b.children) blocks[child.members] = &child;
  for (const auto& child : a.children) {
    auto it = blocks.find(child.members);
    if (it == blocks.end()) return false;
    std::set<ActivityLabel> combined = labels_of(child);
    const auto other = labels_of(*it->second);
    combined.insert(other.begin(), other.end());
    if (valid_roles(a.label, combined).empty()) return false;
  }
  return true;
}

std::vector<JoinSite> join_sites(ActivityTree& tree) {
  std::vector<JoinSite> out;
  walk_segments(tree.root, [&](ActivityNode& p, int s, int g) {
    if (g + 1 < static_cast<int>(p.children[s].segments.size()) &&
        join_site_ok(p.children[s], g))
      out.push_back({&p, s, g});
  });
  return out;
}

struct CutSite {
  ActivityNode* parent = nullptr;
  int seq = 0;
  int seg = 0;
  int t = 0;  // split into [start, t], [t+1, end]
};

std::vector<CutSite> cut_sites(ActivityTree& tree) {
  std::vector<CutSite> out;
  walk_segments(tree.root, [&](ActivityNode& p, int s, int g) {
    const ActivityNode& node = p.children[s].segments[g];
    for (int t = node.start; t < node.end; ++t) {
      bool ok = true;
      for (const auto& child : node.children) {
        bool boundary = false;
        for (const auto& seg : child.segments)
          if (seg.end == t) boundary = true;
        if (!boundary) {
          ok = false;
          break;
        }
      }
      if (ok) out.push_back({&p, s, g, t});
    }
  });
  return out;
}

// ---------------------------------------------------------------- RELABEL

std::vector<ActivityLabel> relabel_candidates(const ChildSequence& seq,
                                              const ActivityNode& node) {
  std::vector<ActivityLabel> out;
  for (ActivityLabel a : role_allowed_labels(seq.role)) {
    if (is_physical(node.label) != is_physical(a)) continue;
    if (is_intentional(a)) {
      bool ok = true;
      for (const auto& child : node.children)
        if (valid_roles(a, labels_of(child)).empty()) {
          ok = false;
          break;
        }
      if (!ok) continue;
    }
    out.push_back(a);
  }
  return out;
}

std::vector<SegSite> relabel_sites(ActivityTree& tree) {
  std::vector<SegSite> out;
  walk_segments(tree.root, [&](ActivityNode& p, int s, int g) {
    if (relabel_candidates(p.children[s], p.children[s].segments[g]).size() >=
        2)
      out.push_back({&p, s, g});
  });
  return out;
}

// Majority HMM label among the node's members over its interval.
ActivityLabel detector_label(const ActivityNode& node,
                             const std::vector<int>& all_actors,
                             const Detections& det) {
  std::map<int, int> index;
  for (size_t i = 0; i < all_actors.size(); ++i) index[all_actors[i]] = int(i);
  std::map<ActivityLabel, int> counts;
  for (int actor : node.participants)
    for (int t = node.start; t <= node.end; ++t)
      ++counts[det.labels[index.at(actor)][t - 1]];
  ActivityLabel best = ActivityLabel::STAND;
  int most = -1;
  for (ActivityLabel a : physical_labels())
    if (counts[a] > most) {
      most = counts[a];
      best = a;
    }
  return best;
}

double relabel_log_pmf(const std::vector<ActivityLabel>& candidates,
                       ActivityLabel chosen, bool physical,
                       const ActivityLabel* det_label, double bias) {
  const double k = static_cast<double>(candidates.size());
  double beta = 0.0;
  if (physical && det_label &&
      std::find(candidates.begin(), candidates.end(), *det_label) !=
          candidates.end())
    beta = bias;
  double p = (1.0 - beta) / k;
  if (beta > 0 && chosen == *det_label) p += beta;
  return std::log(p);
}

// ---------------------------------------------------------------- driver

ActivityNode make_node(ActivityLabel label, int start, int end,
                       std::vector<int> participants) {
  ActivityNode n;
  n.id = -1;  // placeholder; normalize_tree renumbers
  n.label = label;
  n.start = start;
  n.end = end;
  n.participants = std::move(participants);
  return n;
}

RoleLabel draw_role(const std::vector<RoleLabel>& roles,
                    std::mt19937_64& rng) {
  return roles[uniform_index(rng, static_cast<int>(roles.size()))];
}

Proposal propose_birth(ActivityTree work, const ModelConfig& config,
                       std::mt19937_64& rng) {
  (void)config;
  Proposal prop;
  prop.move = MoveKind::BIRTH;
  auto sites = birth_sites(work);
  if (sites.empty()) return prop;
  ActivityNode* parent = sites[uniform_index(rng, int(sites.size()))];
  const auto options = birth_options(*parent);
  unsigned long long total = 0;
  for (const auto& o : options) total += o.subsets();

  std::uniform_int_distribution<unsigned long long> pick(0, total - 1);
  unsigned long long r = pick(rng);
  const BirthOption* opt = nullptr;
  for (const auto& o : options) {
    if (r < o.subsets()) {
      opt = &o;
      break;
    }
    r -= o.subsets();
  }
  const unsigned long long subset = r + 1;  // nonempty bitmask over compat

  std::vector<int> chosen;
  for (size_t b = 0; b < opt->compat.size(); ++b)
    if (subset & (1ull << b)) chosen.push_back(opt->compat[b]);

  double log_fwd = -std::log(double(sites.size())) - std::log(double(total));
  double log_rev_roles = 0.0;
  std::vector<ChildSequence> adopted;
  for (int i : chosen) {
    ChildSequence seq = parent->children[i];
    const auto labels = labels_of(seq);
    const auto roles_new = valid_roles(opt->label, labels);
    const auto roles_old = valid_roles(parent->label, labels);
    seq.role = draw_role(roles_new, rng);
    log_fwd -= std::log(double(roles_new.size()));
    log_rev_roles -= std::log(double(roles_old.size()));
    adopted.push_back(std::move(seq));
  }
  for (auto it = chosen.rbegin(); it != chosen.rend(); ++it)
    parent->children.erase(parent->children.begin() + *it);

  std::vector<const ChildSequence*> ptrs;
  for (const auto& s : adopted) ptrs.push_back(&s);
  std::vector<int> members = union_members(ptrs);
  ActivityNode fresh =
      make_node(opt->label, parent->start, parent->end, members);
  fresh.children = std::move(adopted);
  ChildSequence wrapper;
  wrapper.role = opt->new_role;
  wrapper.members = members;
  wrapper.segments.push_back(std::move(fresh));
  parent->children.push_back(std::move(wrapper));

  prop.log_q_fwd = log_fwd;
  prop.log_q_rev =
      -std::log(double(death_sites(work).size())) + log_rev_roles;
  normalize_tree(work);
  prop.tree = std::move(work);
  prop.ok = true;
  return prop;
}

Proposal propose_death(ActivityTree work, const ModelConfig& config,
                       std::mt19937_64& rng) {
  (void)config;
  Proposal prop;
  prop.move = MoveKind::DEATH;
  auto sites = death_sites(work);
  if (sites.empty()) return prop;
  const SegSite site = sites[uniform_index(rng, int(sites.size()))];
  ActivityNode* parent = site.parent;
  ActivityNode node = std::move(site.node());
  const RoleLabel old_role = site.sequence().role;
  parent->children.erase(parent->children.begin() + site.seq);

  double log_fwd = -std::log(double(sites.size()));
  double log_rev_roles = 0.0;
  std::vector<std::vector<int>> spliced_members;
  for (auto& child : node.children) {
    const auto labels = labels_of(child);
    const auto roles_new = valid_roles(parent->label, labels);
    const auto roles_old = valid_roles(node.label, labels);
    child.role = draw_role(roles_new, rng);
    log_fwd -= std::log(double(roles_new.size()));
    log_rev_roles -= std::log(double(roles_old.size()));
    spliced_members.push_back(child.members);
    parent->children.push_back(std::move(child));
  }

  // Reverse BIRTH: same parent, subset = the spliced sequences, label and
  // wrapper role as the dead node had them.
  const unsigned long long weight = birth_weight(*parent);
  (void)old_role;
  prop.log_q_fwd = log_fwd;
  prop.log_q_rev = -std::log(double(birth_sites(work).size())) -
                   std::log(double(weight)) + log_rev_roles;
  normalize_tree(work);
  prop.tree = std::move(work);
  prop.ok = true;
  return prop;
}

Proposal propose_merge(ActivityTree work, const Detections* det,
                       const ModelConfig& config, std::mt19937_64& rng) {
  Proposal prop;
  prop.move = MoveKind::MERGE;
  auto sites = merge_sites(work);
  if (sites.empty()) return prop;
  const MergeSite site = sites[uniform_index(rng, int(sites.size()))];
  ActivityNode* parent = site.parent;
  ChildSequence seq_a = std::move(parent->children[site.a]);
  ChildSequence seq_b = std::move(parent->children[site.b]);
  parent->children.erase(parent->children.begin() + site.b);
  parent->children.erase(parent->children.begin() + site.a);
  ActivityNode& na = seq_a.segments[0];
  ActivityNode& nb = seq_b.segments[0];
  const ActivityLabel label = na.label;

  std::vector<int> members;
  members.reserve(seq_a.members.size() + seq_b.members.size());
  std::merge(seq_a.members.begin(), seq_a.members.end(), seq_b.members.begin(),
             seq_b.members.end(), std::back_inserter(members));
  // Canonical side of the reverse bipartition: the half holding the
  // smallest merged member.
  std::vector<int> side =
      seq_a.members.front() < seq_b.members.front() ? seq_a.members
                                                    : seq_b.members;

  ActivityNode merged = make_node(label, na.start, na.end, members);
  for (auto& child : na.children) merged.children.push_back(std::move(child));
  for (auto& child : nb.children) merged.children.push_back(std::move(child));

  const auto roles = valid_roles(parent->label, {label});
  ChildSequence wrapper;
  wrapper.role = draw_role(roles, rng);
  wrapper.members = members;
  wrapper.segments.push_back(std::move(merged));
  parent->children.push_back(std::move(wrapper));
  ActivityNode& placed = parent->children.back().segments.back();

  prop.log_q_fwd = -std::log(double(sites.size())) -
                   std::log(double(roles.size()));
  prop.log_q_rev =
      -std::log(double(split_sites(work).size())) +
      bipartition_log_pmf(placed, side, work.root.participants, det,
                          config.sampler.detector_bias) -
      2.0 * std::log(double(roles.size()));
  normalize_tree(work);
  prop.tree = std::move(work);
  prop.ok = true;
  return prop;
}

Proposal propose_split(ActivityTree work, const Detections* det,
                       const ModelConfig& config, std::mt19937_64& rng) {
  Proposal prop;
  prop.move = MoveKind::SPLIT;
  auto sites = split_sites(work);
  if (sites.empty()) return prop;
  const SegSite site = sites[uniform_index(rng, int(sites.size()))];
  ActivityNode* parent = site.parent;
  ChildSequence seq = std::move(site.sequence());
  parent->children.erase(parent->children.begin() + site.seq);
  ActivityNode node = std::move(seq.segments[0]);
  const ActivityLabel label = node.label;
  const bool physical = is_physical(label);

  // Elements being bipartitioned: members (physical) or child sequences.
  const int m = physical ? static_cast<int>(node.participants.size())
                         : static_cast<int>(node.children.size());
  const auto suggestions =
      detector_bipartitions(node, work.root.participants, det);
  const double beta = suggestions.empty() ? 0.0 : config.sampler.detector_bias;

  std::vector<int> side;  // canonical: contains the smallest member
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (beta > 0 && unif(rng) < beta) {
    side = suggestions[uniform_index(rng, int(suggestions.size()))];
  } else {
    std::uniform_int_distribution<unsigned long long> pick(
        0, (1ull << (m - 1)) - 2);
    const unsigned long long bits = pick(rng);
    if (physical) {
      side.push_back(node.participants[0]);
      for (int b = 1; b < m; ++b)
        if (bits & (1ull << (b - 1))) side.push_back(node.participants[b]);
    } else {
      // Element 0 is the child holding the smallest member.
      int c0 = 0;
      for (int i = 1; i < m; ++i)
        if (node.children[i].members.front() <
            node.children[c0].members.front())
          c0 = i;
      std::vector<int> others;
      for (int i = 0; i < m; ++i)
        if (i != c0) others.push_back(i);
      side.insert(side.end(), node.children[c0].members.begin(),
                  node.children[c0].members.end());
      for (int b = 0; b < m - 1; ++b)
        if (bits & (1ull << b))
          side.insert(side.end(), node.children[others[b]].members.begin(),
                      node.children[others[b]].members.end());
      std::sort(side.begin(), side.end());
    }
  }

  const double log_pmf_side = bipartition_log_pmf(
      node, side, work.root.participants, det, config.sampler.detector_bias);

  std::vector<int> other;
  for (int a : node.participants)
    if (!std::binary_search(side.begin(), side.end(), a)) other.push_back(a);

  ActivityNode half_a = make_node(label, node.start, node.end, side);
  ActivityNode half_b = make_node(label, node.start, node.end, other);
  if (!physical)
    for (auto& child : node.children) {
      const bool in_side =
          std::binary_search(side.begin(), side.end(), child.members.front());
      (in_side ? half_a : half_b).children.push_back(std::move(child));
    }

  const auto roles = valid_roles(parent->label, {label});
  for (ActivityNode* half : {&half_a, &half_b}) {
    ChildSequence ws;
    ws.role = draw_role(roles, rng);
    ws.members = half->participants;
    ws.segments.push_back(std::move(*half));
    parent->children.push_back(std::move(ws));
  }

  prop.log_q_fwd = -std::log(double(sites.size())) + log_pmf_side -
                   2.0 * std::log(double(roles.size()));
  prop.log_q_rev = -std::log(double(merge_sites(work).size())) -
                   std::log(double(roles.size()));
  normalize_tree(work);
  prop.tree = std::move(work);
  prop.ok = true;
  return prop;
}

Proposal propose_sequence(ActivityTree work, const ModelConfig& config,
                          std::mt19937_64& rng) {
  (void)config;
  Proposal prop;
  prop.move = MoveKind::SEQUENCE;
  auto sites = join_sites(work);
  if (sites.empty()) return prop;
  const JoinSite site = sites[uniform_index(rng, int(sites.size()))];
  ChildSequence& seq = site.parent->children[site.seq];
  ActivityNode first = std::move(seq.segments[site.idx]);
  ActivityNode second = std::move(seq.segments[site.idx + 1]);
  const ActivityLabel label = first.label;

  double log_fwd = -std::log(double(sites.size()));
  double log_rev_roles = 0.0;

  ActivityNode joined =
      make_node(label, first.start, second.end, seq.members);
  if (is_intentional(label)) {
    std::map<std::vector<int>, ChildSequence*> blocks;
    for (auto& child : second.children) blocks[child.members] = &child;
    for (auto& child : first.children) {
      ChildSequence* tail = blocks.at(child.members);
      const auto labels_a = labels_of(child);
      const auto labels_b = labels_of(*tail);
      std::set<ActivityLabel> combined = labels_a;
      combined.insert(labels_b.begin(), labels_b.end());
      const auto roles = valid_roles(label, combined);
      log_fwd -= std::log(double(roles.size()));
      log_rev_roles -= std::log(double(valid_roles(label, labels_a).size()));
      log_rev_roles -= std::log(double(valid_roles(label, labels_b).size()));
      ChildSequence merged;
      merged.role = draw_role(roles, rng);
      merged.members = child.members;
      merged.segments = std::move(child.segments);
      for (auto& seg : tail->segments)
        merged.segments.push_back(std::move(seg));
      joined.children.push_back(std::move(merged));
    }
  }
  seq.segments[site.idx] = std::move(joined);
  seq.segments.erase(seq.segments.begin() + site.idx + 1);

  prop.log_q_fwd = log_fwd;
  prop.log_q_rev =
      -std::log(double(cut_sites(work).size())) + log_rev_roles;
  normalize_tree(work);
  prop.tree = std::move(work);
  prop.ok = true;
  return prop;
}

Proposal propose_unsequence(ActivityTree work, const ModelConfig& config,
                            std::mt19937_64& rng) {
  (void)config;
  Proposal prop;
  prop.move = MoveKind::UNSEQUENCE;
  auto sites = cut_sites(work);
  if (sites.empty()) return prop;
  const CutSite site = sites[uniform_index(rng, int(sites.size()))];
  ChildSequence& seq = site.parent->children[site.seq];
  ActivityNode node = std::move(seq.segments[site.seg]);
  const ActivityLabel label = node.label;
  const int t = site.t;

  double log_fwd = -std::log(double(sites.size()));
  double log_rev_roles = 0.0;

  ActivityNode half_a = make_node(label, node.start, t, node.participants);
  ActivityNode half_b = make_node(label, t + 1, node.end, node.participants);
  if (is_intentional(label)) {
    for (auto& child : node.children) {
      const std::set<ActivityLabel> combined = labels_of(child);
      log_rev_roles -=
          std::log(double(valid_roles(label, combined).size()));
      ChildSequence ca, cb;
      ca.members = cb.members = child.members;
      for (auto& seg : child.segments)
        (seg.end <= t ? ca : cb).segments.push_back(std::move(seg));
      for (ChildSequence* half : {&ca, &cb}) {
        const auto roles = valid_roles(label, labels_of(*half));
        half->role = draw_role(roles, rng);
        log_fwd -= std::log(double(roles.size()));
      }
      half_a.children.push_back(std::move(ca));
      half_b.children.push_back(std::move(cb));
    }
  }
  seq.segments[site.seg] = std::move(half_a);
  seq.segments.insert(seq.segments.begin() + site.seg + 1, std::move(half_b));

  prop.log_q_fwd = log_fwd;
  prop.log_q_rev =
      -std::log(double(join_sites(work).size())) + log_rev_roles;
  normalize_tree(work);
  prop.tree = std::move(work);
  prop.ok = true;
  return prop;
}

Proposal propose_relabel_impl(ActivityTree work, const Detections* det,
                              const ModelConfig& config,
                              std::mt19937_64& rng) {
  Proposal prop;
  prop.move = MoveKind::RELABEL;
  auto sites = relabel_sites(work);
  if (sites.empty()) return prop;
  const SegSite site = sites[uniform_index(rng, int(sites.size()))];
  ActivityNode& node = site.node();
  const ActivityLabel old_label = node.label;
  const bool physical = is_physical(old_label);
  const auto candidates = relabel_candidates(site.sequence(), node);

  ActivityLabel det_lab{};
  const ActivityLabel* det_ptr = nullptr;
  if (physical && det) {
    det_lab = detector_label(node, work.root.participants, *det);
    det_ptr = &det_lab;
  }
  const double bias = config.sampler.detector_bias;

  ActivityLabel chosen;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (det_ptr &&
      std::find(candidates.begin(), candidates.end(), det_lab) !=
          candidates.end() &&
      unif(rng) < bias)
    chosen = det_lab;
  else
    chosen = candidates[uniform_index(rng, int(candidates.size()))];

  double log_fwd = relabel_log_pmf(candidates, chosen, physical, det_ptr, bias);
  double log_rev = relabel_log_pmf(candidates, old_label, physical, det_ptr,
                                   bias);
  node.label = chosen;
  if (is_intentional(chosen))
    for (auto& child : node.children) {
      const auto labels = labels_of(child);
      const auto roles_new = valid_roles(chosen, labels);
      const auto roles_old = valid_roles(old_label, labels);
      child.role = draw_role(roles_new, rng);
      log_fwd -= std::log(double(roles_new.size()));
      log_rev -= std::log(double(roles_old.size()));
    }

  prop.log_q_fwd = -std::log(double(sites.size())) + log_fwd;
  prop.log_q_rev =
      -std::log(double(relabel_sites(work).size())) + log_rev;
  normalize_tree(work);
  prop.tree = std::move(work);
  prop.ok = true;
  return prop;
}

}  // namespace

bool move_available(MoveKind k, const ActivityTree& tree,
                    const Detections* det, const ModelConfig& config) {
  (void)det;
  (void)config;
  ActivityTree& t = const_cast<ActivityTree&>(tree);  // sites are read-only
  switch (k) {
    case MoveKind::BIRTH: return !birth_sites(t).empty();
    case MoveKind::DEATH: return !death_sites(t).empty();
    case MoveKind::MERGE: return !merge_sites(t).empty();
    case MoveKind::SPLIT: return !split_sites(t).empty();
    case MoveKind::SEQUENCE: return !join_sites(t).empty();
    case MoveKind::UNSEQUENCE: return !cut_sites(t).empty();
    case MoveKind::RELABEL: return !relabel_sites(t).empty();
  }
  return false;
}

int available_move_count(const ActivityTree& tree, const Detections* det,
                         const ModelConfig& config) {
  int n = 0;
  for (int k = 0; k < kNumMoveKinds; ++k)
    if (move_available(static_cast<MoveKind>(k), tree, det, config)) ++n;
  return n;
}

Proposal propose_move(MoveKind k, const ActivityTree& tree,
                      const Detections* det, const ModelConfig& config,
                      std::mt19937_64& rng) {
  switch (k) {
    case MoveKind::BIRTH: return propose_birth(tree, config, rng);
    case MoveKind::DEATH: return propose_death(tree, config, rng);
    case MoveKind::MERGE: return propose_merge(tree, det, config, rng);
    case MoveKind::SPLIT: return propose_split(tree, det, config, rng);
    case MoveKind::SEQUENCE: return propose_sequence(tree, config, rng);
    case MoveKind::UNSEQUENCE: return propose_unsequence(tree, config, rng);
    case MoveKind::RELABEL: return propose_relabel_impl(tree, det, config, rng);
  }
  throw std::logic_error("propose_move: bad kind");
}

namespace {

Proposal propose_pair(MoveKind first, MoveKind second,
                      const ActivityTree& tree, const Detections* det,
                      const ModelConfig& config, std::mt19937_64& rng) {
  std::vector<MoveKind> avail;
  for (MoveKind k : {first, second})
    if (move_available(k, tree, det, config)) avail.push_back(k);
  if (avail.empty()) return Proposal{};
  return propose_move(avail[uniform_index(rng, int(avail.size()))], tree, det,
                      config, rng);
}

}  // namespace

Proposal propose_birth_death(const ActivityTree& tree,
                             const ModelConfig& config, std::mt19937_64& rng) {
  return propose_pair(MoveKind::BIRTH, MoveKind::DEATH, tree, nullptr, config,
                      rng);
}

Proposal propose_merge_split(const ActivityTree& tree, const Detections& det,
                             const ModelConfig& config, std::mt19937_64& rng) {
  return propose_pair(MoveKind::MERGE, MoveKind::SPLIT, tree, &det, config,
                      rng);
}

Proposal propose_sequence_unsequence(const ActivityTree& tree,
                                     const ModelConfig& config,
                                     std::mt19937_64& rng) {
  return propose_pair(MoveKind::SEQUENCE, MoveKind::UNSEQUENCE, tree, nullptr,
                      config, rng);
}

Proposal propose_relabel(const ActivityTree& tree, const Detections& det,
                         const ModelConfig& config, std::mt19937_64& rng) {
  return propose_move(MoveKind::RELABEL, tree, &det, config, rng);
}

void mh_step(ChainState& state, const PosteriorFn& posterior,
             const Detections* det, const ModelConfig& config,
             std::mt19937_64& rng, SamplerTrace* trace) {
  const int avail = available_move_count(state.tree, det, config);
  if (avail == 0)
    throw std::runtime_error("mh_step: no move kind is available");

  MoveKind kind;
  while (true) {
    kind = static_cast<MoveKind>(uniform_index(rng, kNumMoveKinds));
    if (move_available(kind, state.tree, det, config)) break;
    if (trace) ++trace->kind_redraws;
  }
  Proposal prop = propose_move(kind, state.tree, det, config, rng);

  bool accepted = false;
  if (prop.ok) {
    double lp_new = kNegInf;
    bool failed = false;
    try {
      lp_new = posterior(prop.tree);
    } catch (const std::exception&) {
      failed = true;
      if (trace) ++trace->likelihood_failures;
    }
    if (!failed && lp_new > kNegInf) {
      const int avail_new = available_move_count(prop.tree, det, config);
      const double log_alpha =
          (lp_new - std::log(double(avail_new)) + prop.log_q_rev) -
          (state.log_posterior - std::log(double(avail)) + prop.log_q_fwd);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      if (log_alpha >= 0 || std::log(unif(rng)) < log_alpha) {
        state.tree = std::move(prop.tree);
        state.log_posterior = lp_new;
        accepted = true;
      }
    }
  }

  if (trace) {
    TraceEntry e;
    e.iteration = static_cast<int>(trace->entries.size());
    e.move = kind;
    e.accepted = accepted;
    e.log_posterior = state.log_posterior;
    trace->entries.push_back(e);
    if (state.log_posterior > trace->best_log_posterior) {
      trace->best_log_posterior = state.log_posterior;
      trace->best = state.tree;
    }
  }
}

namespace {

// Greedy coordinate ascent over the physical leaf labels of the detector
// tree. The speed HMM is calibrated for scripted constant-speed motion and
// routinely mislabels sampled scenes; starting the chains from its raw
// labels wastes most of the budget on relabel repairs.
double polish_leaf_labels(ActivityTree& tree, const PosteriorFn& posterior,
                          double lp) {
  struct Site {
    ActivityNode* leaf;
    RoleLabel role;
  };
  std::vector<Site> sites;
  std::function<void(ActivityNode&)> walk = [&](ActivityNode& node) {
    for (auto& seq : node.children)
      for (auto& seg : seq.segments) {
        if (is_physical(seg.label))
          sites.push_back({&seg, seq.role});
        else
          walk(seg);
      }
  };
  walk(tree.root);

  for (int sweep = 0; sweep < 3; ++sweep) {
    bool changed = false;
    for (auto& site : sites) {
      ActivityLabel best = site.leaf->label;
      for (ActivityLabel a : role_allowed_labels(site.role)) {
        if (!is_physical(a) || a == best) continue;
        site.leaf->label = a;
        double cand;
        try {
          cand = posterior(tree);
        } catch (const std::exception&) {
          cand = -std::numeric_limits<double>::infinity();
        }
        if (cand > lp) {
          lp = cand;
          best = a;
          changed = true;
        }
      }
      site.leaf->label = best;
    }
    if (!changed) break;
  }
  return lp;
}

// Clamp a node (and everything nested in it) onto a shrunk or stretched
// interval by trimming whole out-of-range segments and resizing the
// outermost survivors. Returns false when a sequence would become empty.
bool set_node_end(ActivityNode& node, int e) {
  if (node.start > e) return false;
  node.end = e;
  if (is_physical(node.label)) return true;
  for (auto& seq : node.children) {
    while (!seq.segments.empty() && seq.segments.back().start > e)
      seq.segments.pop_back();
    if (seq.segments.empty() || !set_node_end(seq.segments.back(), e))
      return false;
  }
  return true;
}

bool set_node_start(ActivityNode& node, int s) {
  if (node.end < s) return false;
  node.start = s;
  if (is_physical(node.label)) return true;
  for (auto& seq : node.children) {
    while (!seq.segments.empty() && seq.segments.front().end < s)
      seq.segments.erase(seq.segments.begin());
    if (seq.segments.empty() || !set_node_start(seq.segments.front(), s))
      return false;
  }
  return true;
}

// All boundaries between adjacent segments, in a stable walk order so the
// same index addresses the same boundary in a copied tree.
struct BoundarySite {
  ActivityNode* parent;
  int seq, idx;
};

std::vector<BoundarySite> boundary_sites(ActivityTree& tree) {
  std::vector<BoundarySite> out;
  std::function<void(ActivityNode&)> walk = [&](ActivityNode& node) {
    for (int s = 0; s < static_cast<int>(node.children.size()); ++s) {
      auto& seq = node.children[s];
      // Only boundaries touching an intentional segment: those spans are
      // frozen under the move set, while physical label boundaries can be
      // moved by the chains themselves (cut/join/relabel).
      for (int g = 0; g + 1 < static_cast<int>(seq.segments.size()); ++g)
        if (is_intentional(seq.segments[g].label) ||
            is_intentional(seq.segments[g + 1].label))
          out.push_back({&node, s, g});
      for (auto& seg : seq.segments) walk(seg);
    }
  };
  walk(tree.root);
  return out;
}

// Greedy hill-climb over segment boundaries. The clustering places a
// meeting's arrival frame only to within a few frames, and the move set
// cannot shift an intentional node's span (spans are implied by the
// tiling), yet a misplaced boundary conflicts with the smooth bridge
// interpolants and costs hundreds of nats. Fixing it here keeps the chains
// working on structure instead.
double polish_boundaries(ActivityTree& tree, const PosteriorFn& posterior,
                         double lp) {
  for (int sweep = 0; sweep < 6; ++sweep) {
    bool changed = false;
    const int n_sites = static_cast<int>(boundary_sites(tree).size());
    for (int k = 0; k < n_sites && !changed; ++k) {
      for (int delta : {-3, -2, -1, 1, 2, 3}) {
        ActivityTree cand = tree;
        const BoundarySite site = boundary_sites(cand)[k];
        auto& segs = site.parent->children[site.seq].segments;
        const int b = segs[site.idx].end + delta;
        if (!set_node_end(segs[site.idx], b) ||
            !set_node_start(segs[site.idx + 1], b + 1))
          continue;
        double cand_lp;
        try {
          cand_lp = posterior(cand);
        } catch (const std::exception&) {
          continue;
        }
        if (cand_lp > lp) {
          lp = cand_lp;
          tree = std::move(cand);
          changed = true;  // spans moved; re-enumerate sites
          break;
        }
      }
    }
    if (!changed) break;
  }
  return lp;
}

// One pass of each is deliberate: alternating until convergence lets the
// labels drift toward the loose high-sigma classes once boundaries move,
// which flattens the likelihood and buries the meeting structure the
// chains need to find.
double polish_init(ActivityTree& tree, const PosteriorFn& posterior,
                   double lp) {
  lp = polish_leaf_labels(tree, posterior, lp);
  lp = polish_boundaries(tree, posterior, lp);
  return lp;
}

}  // namespace

SamplerResult run_sampler(const Scene& scene, const ModelConfig& config) {
  const Detections det = run_detectors(scene, config);
  ActivityTree init = detections_to_tree(det, scene, config);

  const int chains = std::max(1, config.sampler.chains);
  SamplerResult result;
  result.traces.resize(chains);

  const PosteriorFn posterior = [&](const ActivityTree& t) {
    return log_posterior(scene, t, config);
  };
  double lp0 = posterior(init);
  lp0 = polish_init(init, posterior, lp0);

#pragma omp parallel for schedule(static) if (chains > 1)
  for (int c = 0; c < chains; ++c) {
    std::mt19937_64 rng(config.sampler.seed + static_cast<std::uint64_t>(c));
    ChainState state{init, lp0};
    SamplerTrace& trace = result.traces[c];
    trace.best = init;
    trace.best_log_posterior = lp0;
    for (int i = 0; i < config.sampler.iterations; ++i)
      mh_step(state, posterior, &det, config, rng, &trace);
  }

  result.best_chain = 0;
  for (int c = 1; c < chains; ++c)
    if (result.traces[c].best_log_posterior >
        result.traces[result.best_chain].best_log_posterior)
      result.best_chain = c;
  result.best = result.traces[result.best_chain].best;
  result.best_log_posterior = result.traces[result.best_chain].best_log_posterior;
  return result;
}

}  // namespace gact
