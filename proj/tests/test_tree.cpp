// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gffwalk/stats.hpp"
#include "gffwalk/tree.hpp"

using namespace gffwalk;

TEST_CASE("arena rejects degree below 3") {
  CHECK_THROWS_AS(GffArena(2, TreeMode::full, {}, 1), std::invalid_argument);
}

TEST_CASE("root conditioning pins the root value exactly") {
  GffArena a(3, TreeMode::plus, 1.5, 99);
  CHECK(a.value(a.root()) == 1.5);
  GffArena b(4, TreeMode::full, -2.25, 99);
  CHECK(b.value(b.root()) == -2.25);
}

TEST_CASE("unconditioned root variance matches (d-1)/(d-2)") {
  for (int d : {3, 4}) {
    const int n = 200000;
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i)
      vals[i] = GffArena(d, TreeMode::plus, {}, 1000 + i).value(0);
    const double want = double(d - 1) / (d - 2);  // 2 for d=3, 1.5 for d=4
    const double se = std::sqrt(2.0 / n) * want;
    CHECK(std::abs(mean(vals)) < 5 * std::sqrt(want / n));
    CHECK(std::abs(variance(vals) - want) < 5 * se);
  }
}

TEST_CASE("child counts: d for full-mode root, d-1 elsewhere") {
  GffArena full(3, TreeMode::full, {}, 5);
  CHECK(full.child_count(full.root()) == 3);
  const auto c0 = full.child(full.root(), 0);
  CHECK(full.child_count(c0) == 2);

  GffArena plus(3, TreeMode::plus, {}, 5);
  CHECK(plus.child_count(plus.root()) == 2);
}

TEST_CASE("expansion is idempotent") {
  GffArena a(3, TreeMode::plus, {}, 12);
  const auto f1 = a.expand_children(a.root());
  const auto size1 = a.size();
  const auto v1 = a.value(f1);
  const auto f2 = a.expand_children(a.root());
  CHECK(f1 == f2);
  CHECK(a.size() == size1);
  CHECK(a.value(f2) == v1);
}

TEST_CASE("children of a conditioned vertex: mean 0, variance d/(d-1)") {
  // Root pinned to 0, so each child value is sqrt(d/(d-1)) * zeta.
  const int d = 3;
  const int n = 100000;
  std::vector<double> vals;
  vals.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    GffArena a(d, TreeMode::plus, 0.0, 7000 + i);
    const auto first = a.expand_children(a.root());
    for (int c = 0; c < a.child_count(a.root()); ++c)
      vals.push_back(a.value(first + c));
  }
  CHECK(std::abs(mean(vals)) < 0.02);
  CHECK(std::abs(variance(vals) - 1.5) < 0.03);
}

TEST_CASE("parent-child covariance matches Var(parent)/(d-1)") {
  // Unconditioned root, d=3: Var(root) = 2, so Cov(root, child) = 1.
  const int n = 150000;
  std::vector<double> prod(n), ps(n), cs(n);
  for (int i = 0; i < n; ++i) {
    GffArena a(3, TreeMode::plus, {}, 40000 + i);
    const double p = a.value(a.root());
    const double c = a.value(a.child(a.root(), 0));
    ps[i] = p;
    cs[i] = c;
    prod[i] = p * c;
  }
  const double cov = mean(prod) - mean(ps) * mean(cs);
  CHECK(std::abs(cov - 1.0) < 0.05);
}

TEST_CASE("covariance decays geometrically with distance") {
  // Cov(x, y) = (d-1)/(d-2) (d-1)^{-dist}; checked for dist = 1, 2, 3 along
  // a ray and for siblings (dist 2 through the parent).
  const int n = 150000;
  std::vector<double> ray1(n), ray2(n), ray3(n), sib(n);
  for (int i = 0; i < n; ++i) {
    GffArena a(3, TreeMode::plus, {}, 90000 + i);
    const double r = a.value(a.root());
    const auto c0 = a.child(a.root(), 0);
    const auto c1 = a.child(a.root(), 1);
    const auto g0 = a.child(c0, 0);
    const auto h0 = a.child(g0, 1);
    ray1[i] = r * a.value(c0);
    ray2[i] = r * a.value(g0);
    ray3[i] = r * a.value(h0);
    sib[i] = a.value(c0) * a.value(c1);
  }
  CHECK(std::abs(mean(ray1) - 1.0) < 0.05);    // 2/2
  CHECK(std::abs(mean(ray2) - 0.5) < 0.05);    // 2/4
  CHECK(std::abs(mean(ray3) - 0.25) < 0.05);   // 2/8
  CHECK(std::abs(mean(sib) - 0.5) < 0.05);     // dist 2
}

TEST_CASE("two arenas with equal parameters are bit-identical") {
  GffArena a(3, TreeMode::full, {}, 777);
  GffArena b(3, TreeMode::full, {}, 777);
  // Expand in different orders; values must agree everywhere.
  const auto af = a.expand_children(a.root());
  a.expand_children(af + 1);
  const auto bf = b.expand_children(b.root());
  b.expand_children(bf);
  b.expand_children(bf + 1);
  a.expand_children(af);
  for (int i = 0; i < 3; ++i) CHECK(a.value(af + i) == b.value(bf + i));
  const auto ag = a.expand_children(af + 1);
  const auto bg = b.expand_children(bf + 1);
  for (int i = 0; i < 2; ++i) CHECK(a.value(ag + i) == b.value(bg + i));
}

TEST_CASE("value is a pure function of (d, mode, root_condition, seed, path)") {
  GffArena a(3, TreeMode::plus, 0.7, 31337);
  GffArena b(3, TreeMode::plus, 0.7, 31337);
  const VertexId id{{1, 0, 1, 1, 0}};
  CHECK(a.value(a.resolve(id)) == b.value(b.resolve(id)));
  CHECK(a.id_of(a.resolve(id)).path == id.path);
}

TEST_CASE("monotone coupling: raising the root condition raises every value") {
  // Shared noise (same master seed), pointwise comparison, zero tolerance.
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    GffArena lo(3, TreeMode::plus, -0.5, seed);
    GffArena hi(3, TreeMode::plus, 0.8, seed);
    std::vector<std::uint32_t> frontier{0};
    for (int depth = 0; depth < 6; ++depth) {
      std::vector<std::uint32_t> next;
      for (auto v : frontier) {
        CHECK(hi.value(v) >= lo.value(v));
        const auto lf = lo.expand_children(v);
        const auto hf = hi.expand_children(v);
        CHECK(lf == hf);
        for (int c = 0; c < lo.child_count(v); ++c) next.push_back(lf + c);
      }
      frontier = std::move(next);
    }
  }
}

TEST_CASE("arena capacity guard throws") {
  GffArena a(3, TreeMode::plus, {}, 5, /*node_cap=*/10);
  const auto f = a.expand_children(a.root());
  a.expand_children(f);      // 1 + 2 + 2 = 5 nodes
  a.expand_children(f + 1);  // 7 nodes
  const auto g = a.expand_children(f);
  a.expand_children(g);      // 9 nodes
  CHECK_THROWS_AS(a.expand_children(g + 1), ArenaCapacityError);
}
