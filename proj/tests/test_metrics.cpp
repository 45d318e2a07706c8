#include <random>

#include <doctest.h>

#include "gact/forward_sampler.hpp"
#include "gact/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gact;
using testutil::ffa_tree;
using testutil::leaf;
using testutil::seq;

TEST_CASE("evaluating a tree against itself is perfect") {
  const ActivityTree t = synth2_tree();
  const MetricsReport r = evaluate(t, t);
  for (const auto& [label, prf] : r.activity) {
    CHECK(prf.precision() == 1.0);
    CHECK(prf.recall() == 1.0);
    CHECK(prf.fp == 0);
    CHECK(prf.fn == 0);
  }
  CHECK(r.grouping.at(GroupingLevel::PHYS).f1() == 1.0);
  CHECK(r.grouping.at(GroupingLevel::INT).f1() == 1.0);
}

TEST_CASE("swapping arguments swaps precision and recall") {
  const ActivityTree a = synth1_tree();
  const ActivityTree b = synth2_tree();
  const MetricsReport ab = evaluate(a, b);
  const MetricsReport ba = evaluate(b, a);
  for (const auto& [label, prf] : ab.activity) {
    CHECK(prf.precision() ==
          doctest::Approx(ba.activity.at(label).recall()));
    CHECK(prf.recall() ==
          doctest::Approx(ba.activity.at(label).precision()));
  }
  for (auto lvl : {GroupingLevel::PHYS, GroupingLevel::INT}) {
    CHECK(ab.grouping.at(lvl).precision() ==
          doctest::Approx(ba.grouping.at(lvl).recall()));
  }
}

TEST_CASE("worked grouping example: {1,2},{3} vs {1,2,3} gives P = 5/9") {
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
  const auto g = grouping_scores(gt, inf);
  const Prf& phys = g.at(GroupingLevel::PHYS);
  CHECK(phys.tp == 5);
  CHECK(phys.fp == 4);
  CHECK(phys.fn == 0);
  CHECK(phys.precision() == doctest::Approx(5.0 / 9.0));
  CHECK(phys.recall() == 1.0);
}

TEST_CASE("scores match the oracle on 50 random tree pairs") {
  ModelConfig cfg;
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    const int actors = 2 + static_cast<int>(rng() % 4);
    const int horizon = 6 + static_cast<int>(rng() % 8);
    const ActivityTree a = sample_tree(actors, horizon, cfg, rng);
    const ActivityTree b = sample_tree(actors, horizon, cfg, rng);
    const auto act = activity_labeling_scores(a, b);
    const auto oact = oracle::activity_counts(a, b);
    CHECK(act.size() == oact.size());
    for (const auto& [label, prf] : act) {
      REQUIRE(oact.count(label));
      CHECK(prf.tp == oact.at(label).tp);
      CHECK(prf.fp == oact.at(label).fp);
      CHECK(prf.fn == oact.at(label).fn);
    }
    const auto grp = grouping_scores(a, b);
    for (bool phys : {true, false}) {
      const auto oc = oracle::grouping_counts(a, b, phys);
      const Prf& prf =
          grp.at(phys ? GroupingLevel::PHYS : GroupingLevel::INT);
      CHECK(prf.tp == oc.tp);
      CHECK(prf.fp == oc.fp);
      CHECK(prf.fn == oc.fn);
    }
  }
}
