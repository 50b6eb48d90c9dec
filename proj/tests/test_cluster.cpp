// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gffwalk/cluster.hpp"
#include "gffwalk/stats.hpp"
#include "oracles.hpp"

using namespace gffwalk;

TEST_CASE("closed root: empty cluster, extinct at 0") {
  GffArena a(3, TreeMode::plus, -1.0, 7);
  ClusterView cl{&a, 0.0};
  CHECK_FALSE(cl.root_open());
  auto t = grow_generations(cl, 5);
  CHECK(t.extinct_at == 0);
  for (const auto& r : t.rows) CHECK(r.size == 0);
}

TEST_CASE("deep level: all 2^5 vertices of generation 5 open with prob >= 0.99") {
  // P(any of the 62 ball vertices < -10) <= 62 Q(10/sqrt(2)) ~ 5e-11.
  const int reps = 300;
  int exact = 0;
  for (int r = 0; r < reps; ++r) {
    GffArena a(3, TreeMode::plus, {}, 60000 + r);
    ClusterView cl{&a, -10.0};
    auto t = grow_generations(cl, 5);
    exact += (t.rows.back().size == 32);
  }
  CHECK(exact >= static_cast<int>(0.99 * reps));
}

TEST_CASE("level-set nesting: higher level opens a subset, exhaustively") {
  GffArena a(3, TreeMode::plus, {}, 123);
  ClusterView lo{&a, -0.7};
  ClusterView hi{&a, 0.4};
  std::vector<std::uint32_t> frontier{GffArena::root()};
  for (int depth = 0; depth < 7; ++depth) {
    std::vector<std::uint32_t> next;
    for (auto v : frontier) {
      if (hi.open(v)) CHECK(lo.open(v));
      const auto f = a.expand_children(v);
      for (int c = 0; c < a.child_count(v); ++c) next.push_back(f + c);
    }
    frontier = std::move(next);
  }
}

TEST_CASE("generation bookkeeping: degree bounds and extinction consistency") {
  for (int r = 0; r < 200; ++r) {
    GffArena a(3, TreeMode::full, {}, 880000 + r, 1u << 22);
    ClusterView cl{&a, 0.0};
    auto t = grow_generations(cl, 12);
    REQUIRE(!t.rows.empty());
    CHECK(t.rows[0].size <= 1);
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
      const auto cap = (i == 1) ? 3ull : 2ull * t.rows[i - 1].size;  // d then d-1
      CHECK(t.rows[i].size <= cap);
    }
    if (t.extinct_at && *t.extinct_at > 0) {
      const auto k = static_cast<std::size_t>(*t.extinct_at);
      REQUIRE(k < t.rows.size());
      CHECK(t.rows[k].size == 0);
      CHECK(t.rows[k - 1].size > 0);
    }
  }
}

TEST_CASE("survival frequency is non-decreasing in the root condition") {
  // Conditional monotonicity: root condition a raises the whole field.
  const std::vector<double> as{-1.0, 0.0, 1.0, 2.0};
  const int reps = 2000;
  std::vector<double> freq;
  for (double aval : as) {
    int good = 0;
    for (int r = 0; r < reps; ++r) {
      GffArena a(3, TreeMode::plus, aval, 7000000 + r, 1u << 22);
      ClusterView cl{&a, 0.0};
      auto t = grow_generations(cl, 15, {2000});
      good += t.alive_at_end();
    }
    freq.push_back(good / double(reps));
  }
  const double se3 = 3.0 * std::sqrt(0.25 / reps);
  for (std::size_t i = 1; i < freq.size(); ++i)
    CHECK(freq[i] >= freq[i - 1] - 2.0 * se3);
}

TEST_CASE("survival_sample: accepted clusters are alive, rejections counted") {
  SurvivalOptions opt;
  opt.size_threshold = 1000;
  auto s = survival_sample(3, 0.0, TreeMode::plus, 20, 424242, opt);
  REQUIRE(s.accepted);
  CHECK(s.growth.alive_at_end());
  CHECK(s.rejections >= 0);

  // Subcritical level: acceptance fails within the retry budget.
  SurvivalOptions tight;
  tight.max_rejections = 60;
  auto s2 = survival_sample(3, 1.6, TreeMode::plus, 40, 5, tight);
  CHECK_FALSE(s2.accepted);
  CHECK(s2.rejections == 61);
}

TEST_CASE("subcritical acceptance frequency drops as the horizon grows") {
  // At lambda_h < 1, P(Z_G nonempty) decays exponentially in G.
  const double h = 1.6;  // above h_star(3) ~ 1.02
  const int reps = 3000;
  int alive10 = 0, alive30 = 0;
  for (int r = 0; r < reps; ++r) {
    GffArena a(3, TreeMode::plus, {}, 31000000 + r, 1u << 22);
    ClusterView cl{&a, h};
    auto t = grow_generations(cl, 30);
    const auto upto = [&](int k) {
      return static_cast<std::size_t>(k) < t.rows.size() && t.rows[static_cast<std::size_t>(k)].size > 0;
    };
    alive10 += upto(10);
    alive30 += upto(30);
  }
  CHECK(alive10 > alive30);
  CHECK(alive30 <= reps / 100);
}

TEST_CASE("skeleton labels on a hand-verified path cluster") {
  // Find a seed whose cluster is exactly a path of D+1 = 3 edges:
  // root -> a -> b -> c with one open child at each of root, a, b and none
  // at c. Shape is verified here, independent of the labelling code.
  const double h = 0.0;
  const int D = 2;
  for (std::uint64_t seed = 1;; ++seed) {
    REQUIRE(seed < 2000000);
    GffArena a(3, TreeMode::plus, 0.1, seed, 1u << 20);
    ClusterView cl{&a, h};
    std::vector<std::uint32_t> path{GffArena::root()};
    bool is_path = true;
    for (int depth = 0; depth < 3 && is_path; ++depth) {
      const auto f = a.expand_children(path.back());
      std::vector<std::uint32_t> open;
      for (int c = 0; c < a.child_count(path.back()); ++c)
        if (cl.open(f + c)) open.push_back(f + c);
      if (open.size() != 1) is_path = false;
      else path.push_back(open[0]);
    }
    if (!is_path) continue;
    {
      const auto f = a.expand_children(path.back());
      bool none = true;
      for (int c = 0; c < a.child_count(path.back()); ++c)
        none = none && !cl.open(f + c);
      if (!none) continue;
    }
    auto lab = skeleton_label(cl, D, D + 2);
    CHECK(lab.tag.at(path[0]) == SkeletonTag::skeleton);
    CHECK(lab.tag.at(path[1]) == SkeletonTag::skeleton);
    CHECK(lab.tag.at(path[2]) == SkeletonTag::bush);
    CHECK(lab.tag.at(path[3]) == SkeletonTag::bush);
    CHECK(lab.bush_sizes == std::vector<std::uint64_t>{2});
    break;
  }
}

TEST_CASE("near-full tree: bush fraction at most 1%") {
  // h = -10: almost every vertex is open and has open offspring.
  std::size_t bush = 0, total = 0;
  for (int r = 0; r < 10; ++r) {
    GffArena a(3, TreeMode::plus, {}, 91000 + r, 1u << 22);
    ClusterView cl{&a, -10.0};
    auto lab = skeleton_label(cl, 8, 12);
    bush += lab.count(SkeletonTag::bush);
    total += lab.tag.size();
  }
  REQUIRE(total > 1000);
  CHECK(bush <= total / 100);
}

TEST_CASE("bush sizes at h = 0 decay at least exponentially") {
  std::vector<double> sizes;
  for (int r = 0; r < 60; ++r) {
    auto s = survival_sample(3, 0.0, TreeMode::plus, 18, 140000 + r, {});
    if (!s.accepted) continue;
    ClusterView cl{&*s.arena, 0.0};
    auto lab = skeleton_label(cl, 10, 16);
    for (auto b : lab.bush_sizes) sizes.push_back(static_cast<double>(b));
  }
  REQUIRE(sizes.size() > 500);
  // log-survival of the size distribution: decreasing, with a clear
  // exponential envelope on s <= 30
  std::vector<double> xs, ys;
  const double n = static_cast<double>(sizes.size());
  for (int s = 1; s <= 30; ++s) {
    const double surv =
        std::count_if(sizes.begin(), sizes.end(), [&](double v) { return v >= s; }) / n;
    if (surv <= 0.0) break;
    xs.push_back(s);
    ys.push_back(std::log(surv));
  }
  REQUIRE(xs.size() >= 5);
  for (std::size_t i = 1; i < ys.size(); ++i) CHECK(ys[i] <= ys[i - 1] + 1e-12);
  const auto fit = ols_slope(xs, ys);
  CHECK(fit.slope < -0.1);
}

TEST_CASE("find_vertex_at_depth: cheap on full trees, empty when extinct") {
  GffArena a(3, TreeMode::plus, {}, 77, 1u << 20);
  ClusterView cl{&a, -10.0};
  const auto v = find_vertex_at_depth(cl, 25);
  REQUIRE(v);
  CHECK(a.depth(*v) == 25);
  CHECK(a.size() < 200);  // depth-first, no exponential frontier

  int missing = 0;
  for (int r = 0; r < 50; ++r) {
    GffArena b(3, TreeMode::plus, {}, 9090 + r, 1u << 20);
    ClusterView clb{&b, 1.6};  // subcritical: deep vertices usually absent
    missing += !find_vertex_at_depth(clb, 30).has_value();
  }
  CHECK(missing >= 45);
}

TEST_CASE("escape probability: trapped vertex and regular-tree oracle") {
  // Single open vertex: the walk cannot leave, escape probability 0.
  for (std::uint64_t seed = 1;; ++seed) {
    REQUIRE(seed < 200000);
    GffArena a(3, TreeMode::plus, 0.1, seed);
    ClusterView cl{&a, 0.0};
    const auto f = a.expand_children(a.root());
    bool closed = true;
    for (int c = 0; c < 2; ++c) closed = closed && !cl.open(f + c);
    if (!closed) continue;
    auto est = estimate_delta_transient(cl, a.root(), 200, 500, 11);
    CHECK(est.p_hat == 0.0);
    break;
  }

  // Fully open subtree at h = -10: binary-tree escape probability 1/2 from
  // the gambler's-ruin closed form.
  GffArena a(3, TreeMode::plus, {}, 5150, 1u << 22);
  ClusterView cl{&a, -10.0};
  auto est = estimate_delta_transient(cl, a.root(), 4000, 2000, 99);
  const double want = oracle::escape_probability_regular(2);
  CHECK(want == doctest::Approx(0.5));
  CHECK(std::abs(est.p_hat - want) < 0.05);
  CHECK(est.ci.lo < est.p_hat);
  CHECK(est.ci.hi > est.p_hat);
}

TEST_CASE("surviving clusters at h = 0 offer uniformly positive escape") {
  std::vector<double> estimates;
  for (int r = 0; r < 30; ++r) {
    auto s = survival_sample(3, 0.0, TreeMode::plus, 20, 820000 + r, {});
    REQUIRE(s.accepted);
    ClusterView cl{&*s.arena, 0.0};
    estimates.push_back(
        estimate_delta_transient(cl, GffArena::root(), 400, 1500, 3 + r).p_hat);
  }
  const int above = static_cast<int>(
      std::count_if(estimates.begin(), estimates.end(), [](double p) { return p >= 0.05; }));
  CHECK(above >= 6);  // mass above a positive delta_0
}

TEST_CASE("delta-exits: ray-length bound and the almost-full regime") {
  // z at height 1: the only strict ancestor is the root, so E is 0 or 1.
  {
    GffArena a(3, TreeMode::plus, {}, 31, 1u << 20);
    ClusterView cl{&a, -10.0};
    const auto z = a.child(a.root(), 0);
    const int e = count_delta_exits(cl, z, 0.2, 50, 400, 5);
    CHECK(e >= 0);
    CHECK(e <= 1);
  }
  // h = -10, z at height 20: nearly every ancestor offers an escape subtree
  // with escape probability ~1/2 >= 0.2, so E(z, 0.2) >= 10 essentially
  // always.
  int good = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    GffArena a(3, TreeMode::plus, {}, 52000 + r, 1u << 22);
    ClusterView cl{&a, -10.0};
    VertexId deep;
    deep.path.assign(20, 0);
    const auto z = a.resolve(deep);
    const int e = count_delta_exits(cl, z, 0.2, 60, 500, 77 + r);
    good += (e >= 10);
  }
  CHECK(good >= reps - 1);
}
