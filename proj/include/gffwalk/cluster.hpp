// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gffwalk/stats.hpp"
#include "gffwalk/tree.hpp"

namespace gffwalk {

// Level-set view of an arena: a vertex is open iff its field value is >= h.
// The root component of the open set is the cluster under study.
struct ClusterView {
  GffArena* arena = nullptr;
  double level = 0.0;

  bool open(std::uint32_t v) const { return arena->value(v) >= level; }
  bool root_open() const { return open(GffArena::root()); }
};

struct GenerationRecord {
  int k = 0;
  std::uint64_t size = 0;
};

struct GrowthTable {
  std::vector<GenerationRecord> rows;
  std::optional<int> extinct_at;  // first k with |Z_k| = 0 and |Z_{k-1}| > 0
  bool truncated = false;         // stopped early on the size threshold
  std::uint64_t explored_vertices = 0;

  bool alive_at_end() const { return !rows.empty() && rows.back().size > 0; }
};

struct GrowthOptions {
  // Early survival declaration: once a generation reaches this size the
  // cluster is declared surviving and growth stops (0 disables). The
  // misclassification probability is at most q_h(h)^threshold.
  std::uint64_t size_threshold = 0;
};

// Breadth-first growth of the root cluster to generation k_max, or to
// extinction, recording exact generation sizes. Supercritical clusters grow
// exponentially; the arena vertex cap acts as the memory guard.
inline GrowthTable grow_generations(ClusterView& cl, int k_max,
                                    const GrowthOptions& opt = {}) {
  if (k_max < 1) throw std::invalid_argument("grow_generations: k_max must be >= 1");
  GffArena& a = *cl.arena;
  GrowthTable t;
  std::vector<std::uint32_t> frontier;
  if (cl.root_open()) frontier.push_back(GffArena::root());
  t.rows.push_back({0, frontier.size() ? 1u : 0u});
  t.explored_vertices = 1;
  if (frontier.empty()) {
    t.extinct_at = 0;
    return t;
  }
  for (int k = 1; k <= k_max; ++k) {
    std::vector<std::uint32_t> next;
    next.reserve(frontier.size() * static_cast<std::size_t>(a.degree() - 1));
    for (std::uint32_t v : frontier) {
      const std::uint32_t first = a.expand_children(v);
      const int nc = a.child_count(v);
      t.explored_vertices += static_cast<std::uint64_t>(nc);
      for (int i = 0; i < nc; ++i) {
        const std::uint32_t c = first + static_cast<std::uint32_t>(i);
        if (cl.open(c)) next.push_back(c);
      }
    }
    t.rows.push_back({k, static_cast<std::uint64_t>(next.size())});
    if (next.empty()) {
      t.extinct_at = k;
      return t;
    }
    if (opt.size_threshold > 0 && next.size() >= opt.size_threshold) {
      t.truncated = true;
      return t;
    }
    frontier = std::move(next);
  }
  return t;
}

struct SurvivalOptions {
  int max_rejections = 100000;
  std::uint64_t size_threshold = 10000;
  std::size_t vertex_cap = 10'000'000;
  std::optional<double> root_condition;
};

struct SurvivalSample {
  std::optional<GffArena> arena;
  GrowthTable growth;
  int rejections = 0;
  bool accepted = false;
};

// Rejection sampling of (arena, cluster) conditioned on Z_G being non-empty.
// Exact conditioning on {|cluster| = infinity} is impossible; survival to a
// finite horizon G approximates it with bias exp(-c G), and early acceptance
// at the size threshold keeps supercritical growth affordable.
inline SurvivalSample survival_sample(int d, double h, TreeMode mode, int G,
                                      std::uint64_t seed,
                                      const SurvivalOptions& opt = {}) {
  if (G < 1) throw std::invalid_argument("survival_sample: G must be >= 1");
  SurvivalSample out;
  for (int attempt = 0; attempt <= opt.max_rejections; ++attempt) {
    const std::uint64_t s = derive_seed(derive_seed(seed, seed_tag::attempt),
                                        static_cast<std::uint64_t>(attempt));
    GffArena arena(d, mode, opt.root_condition, s, opt.vertex_cap);
    ClusterView cl{&arena, h};
    GrowthTable t = grow_generations(cl, G, {opt.size_threshold});
    if (t.alive_at_end()) {
      out.arena.emplace(std::move(arena));
      out.growth = std::move(t);
      out.rejections = attempt;
      out.accepted = true;
      return out;
    }
  }
  out.rejections = opt.max_rejections + 1;
  return out;
}

// Leftmost open cluster vertex at the given depth (depth-first with
// backtracking, so supercritical clusters cost O(depth), not O((d-1)^depth)).
inline std::optional<std::uint32_t> find_vertex_at_depth(ClusterView& cl, int depth) {
  if (!cl.root_open()) return {};
  GffArena& a = *cl.arena;
  struct Frame {
    std::uint32_t v;
    int next = 0;
  };
  std::vector<Frame> stack{{GffArena::root(), 0}};
  while (!stack.empty()) {
    if (static_cast<int>(stack.size()) - 1 == depth) return stack.back().v;
    Frame& f = stack.back();
    const std::uint32_t first = a.expand_children(f.v);
    const int nc = a.child_count(f.v);
    bool descended = false;
    while (f.next < nc) {
      const std::uint32_t c = first + static_cast<std::uint32_t>(f.next++);
      if (cl.open(c)) {
        stack.push_back({c, 0});
        descended = true;
        break;
      }
    }
    if (!descended) stack.pop_back();
  }
  return {};
}

// ---------------------------------------------------------------------------
// Skeleton / bush decomposition.
//
// The skeleton is the set of cluster vertices with infinite offspring; the
// finite subtrees hanging off it are bushes. At a finite horizon, "infinite
// offspring" is approximated by "offspring reaches depth D below the vertex";
// vertices whose subtree touches the exploration frontier without reaching
// relative depth D cannot be classified and are tagged unknown.

enum class SkeletonTag : std::uint8_t { skeleton, bush, unknown };

struct SkeletonLabel {
  int horizon = 0;         // D
  int explored_depth = 0;  // ball radius actually expanded
  std::vector<std::uint32_t> vertices;  // explored open cluster vertices
  std::unordered_map<std::uint32_t, SkeletonTag> tag;
  std::vector<std::uint64_t> bush_sizes;  // one entry per maximal bush

  std::size_t count(SkeletonTag t) const {
    std::size_t n = 0;
    for (const auto& [v, tg] : tag) n += (tg == t);
    return n;
  }
};

inline SkeletonLabel skeleton_label(ClusterView& cl, int D, int explore_depth = 0) {
  if (explore_depth < D) explore_depth = D + 2;
  GffArena& a = *cl.arena;
  SkeletonLabel out;
  out.horizon = D;
  out.explored_depth = explore_depth;
  if (!cl.root_open()) return out;

  // Expand the open ball; vertices at the frontier depth stay unexpanded.
  std::vector<std::vector<std::uint32_t>> levels(1, {GffArena::root()});
  for (int k = 0; k < explore_depth; ++k) {
    std::vector<std::uint32_t> next;
    for (std::uint32_t v : levels.back()) {
      const std::uint32_t first = a.expand_children(v);
      for (int i = 0; i < a.child_count(v); ++i) {
        const std::uint32_t c = first + static_cast<std::uint32_t>(i);
        if (cl.open(c)) next.push_back(c);
      }
    }
    if (next.empty()) break;
    levels.push_back(std::move(next));
  }

  // Bottom-up: deepest open descendant (relative) and frontier censoring.
  std::unordered_map<std::uint32_t, int> reach;
  std::unordered_map<std::uint32_t, bool> censored;
  for (int k = static_cast<int>(levels.size()) - 1; k >= 0; --k) {
    for (std::uint32_t v : levels[static_cast<std::size_t>(k)]) {
      out.vertices.push_back(v);
      int r = 0;
      bool cen = false;
      if (k == explore_depth || !a.expanded(v)) {
        cen = true;  // children unseen
      } else {
        const std::uint32_t first = a.expand_children(v);
        for (int i = 0; i < a.child_count(v); ++i) {
          const std::uint32_t c = first + static_cast<std::uint32_t>(i);
          if (!cl.open(c)) continue;
          r = std::max(r, 1 + reach[c]);
          cen = cen || censored[c];
        }
      }
      reach[v] = r;
      censored[v] = cen;
      if (r >= D)
        out.tag[v] = SkeletonTag::skeleton;
      else if (!cen)
        out.tag[v] = SkeletonTag::bush;
      else
        out.tag[v] = SkeletonTag::unknown;
    }
  }

  // Maximal bushes: bush-tagged vertices whose parent is not bush-tagged
  // (skeleton-attached, or the root itself when the whole cluster is finite).
  std::unordered_map<std::uint32_t, std::uint64_t> subtree_size;
  for (int k = static_cast<int>(levels.size()) - 1; k >= 0; --k) {
    for (std::uint32_t v : levels[static_cast<std::size_t>(k)]) {
      std::uint64_t sz = 1;
      if (a.expanded(v) && k < explore_depth) {
        const std::uint32_t first = a.expand_children(v);
        for (int i = 0; i < a.child_count(v); ++i) {
          const std::uint32_t c = first + static_cast<std::uint32_t>(i);
          if (cl.open(c)) sz += subtree_size[c];
        }
      }
      subtree_size[v] = sz;
    }
  }
  for (std::uint32_t v : out.vertices) {
    if (out.tag[v] != SkeletonTag::bush) continue;
    const std::uint32_t p = a.parent(v);
    const bool is_bush_root =
        (p == GffArena::npos) || out.tag.find(p) == out.tag.end() ||
        out.tag[p] != SkeletonTag::bush;
    if (is_bush_root) out.bush_sizes.push_back(subtree_size[v]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transience diagnostics.

struct EscapeEstimate {
  double p_hat = 0.0;
  Interval ci{0.0, 1.0};
  int trials = 0;
  int horizon = 0;
};

// Monte Carlo estimate of the probability that the SRW on the subtree from v
// (within the cluster) never returns to v. A walk still out at the horizon
// counts as escaped, so the estimate carries a documented upward bias.
inline EscapeEstimate estimate_delta_transient(ClusterView& cl, std::uint32_t v,
                                               int trials, int horizon,
                                               std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("estimate_delta_transient: trials >= 1");
  GffArena& a = *cl.arena;
  EscapeEstimate out;
  out.trials = trials;
  out.horizon = horizon;

  // Open children of v: the only exits from the starting vertex.
  std::vector<std::uint32_t> start_children;
  const std::uint32_t vf = a.expand_children(v);
  for (int i = 0; i < a.child_count(v); ++i) {
    const std::uint32_t c = vf + static_cast<std::uint32_t>(i);
    if (cl.open(c)) start_children.push_back(c);
  }
  if (start_children.empty()) {
    out.ci = wilson_interval(0, static_cast<std::uint64_t>(trials));
    return out;  // walk trapped at v: escape probability 0
  }

  const std::uint64_t base = derive_seed(seed, seed_tag::trial);
  int escapes = 0;
  std::vector<std::uint32_t> nbrs;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(base, static_cast<std::uint64_t>(t)));
    std::uint32_t cur = start_children[rng.next_below(
        static_cast<std::uint32_t>(start_children.size()))];
    bool returned = false;
    for (int step = 1; step < horizon; ++step) {
      nbrs.clear();
      nbrs.push_back(a.parent(cur));
      const std::uint32_t first = a.expand_children(cur);
      for (int i = 0; i < a.child_count(cur); ++i) {
        const std::uint32_t c = first + static_cast<std::uint32_t>(i);
        if (cl.open(c)) nbrs.push_back(c);
      }
      cur = nbrs[rng.next_below(static_cast<std::uint32_t>(nbrs.size()))];
      if (cur == v) {
        returned = true;
        break;
      }
    }
    if (!returned) ++escapes;
  }
  out.p_hat = static_cast<double>(escapes) / trials;
  out.ci = wilson_interval(static_cast<std::uint64_t>(escapes),
                           static_cast<std::uint64_t>(trials));
  return out;
}

// Count of delta-exits on the ray of z: strict ancestors of z offering an
// off-ray child whose subtree has estimated escape probability >= delta.
inline int count_delta_exits(ClusterView& cl, std::uint32_t z, double delta,
                             int trials, int horizon, std::uint64_t seed) {
  GffArena& a = *cl.arena;
  std::vector<std::uint32_t> ray;  // z up to root
  for (std::uint32_t v = z;; v = a.parent(v)) {
    ray.push_back(v);
    if (v == GffArena::root()) break;
  }
  int exits = 0;
  for (std::size_t i = 1; i < ray.size(); ++i) {  // strict ancestors
    const std::uint32_t w = ray[i];
    const std::uint32_t on_ray_child = ray[i - 1];
    const std::uint32_t first = a.expand_children(w);
    bool found = false;
    for (int c = 0; c < a.child_count(w) && !found; ++c) {
      const std::uint32_t ch = first + static_cast<std::uint32_t>(c);
      if (ch == on_ray_child || !cl.open(ch)) continue;
      const auto est = estimate_delta_transient(
          cl, ch, trials, horizon, derive_seed(seed, (static_cast<std::uint64_t>(i) << 8) + c));
      found = est.p_hat >= delta;
    }
    exits += found;
  }
  return exits;
}

}  // namespace gffwalk
