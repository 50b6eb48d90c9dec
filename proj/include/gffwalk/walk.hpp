// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "gffwalk/cluster.hpp"
#include "gffwalk/tree.hpp"

namespace gffwalk {

// Sentinel for the reserved neighbour of the root in plus mode. The walk on
// the plus cluster lives on C+ union {obar}; the edge (root, obar) stays open
// regardless of field values and obar has no other neighbour.
inline constexpr std::uint32_t kObar = UINT32_MAX - 1;

struct Trajectory {
  std::vector<std::uint32_t> nodes;  // arena indices; kObar allowed in plus mode
  std::vector<std::int32_t> heights;
  bool stuck = false;

  std::size_t steps() const { return heights.empty() ? 0 : heights.size() - 1; }
};

// Simple random walk on the cluster from the root: at each step a uniformly
// random open neighbour, children expanded lazily on first visit. Quenched:
// revisits see identical values. In full mode a root with no open neighbour
// leaves the walk stuck (degenerate trajectory, not an error).
inline Trajectory run_walk(ClusterView& cl, TreeMode mode, std::int64_t n_steps,
                           std::uint64_t seed) {
  GffArena& a = *cl.arena;
  if (!cl.root_open())
    throw std::invalid_argument("run_walk: root is not open at this level");
  Trajectory tr;
  tr.nodes.reserve(static_cast<std::size_t>(n_steps) + 1);
  tr.heights.reserve(static_cast<std::size_t>(n_steps) + 1);
  tr.nodes.push_back(GffArena::root());
  tr.heights.push_back(0);

  Rng rng(derive_seed(seed, seed_tag::walk));
  std::vector<std::uint32_t> nbrs;
  std::uint32_t cur = GffArena::root();
  for (std::int64_t k = 0; k < n_steps; ++k) {
    nbrs.clear();
    if (cur == kObar) {
      nbrs.push_back(GffArena::root());
    } else {
      if (cur == GffArena::root()) {
        if (mode == TreeMode::plus) nbrs.push_back(kObar);
      } else {
        nbrs.push_back(a.parent(cur));
      }
      const std::uint32_t first = a.expand_children(cur);
      for (int i = 0; i < a.child_count(cur); ++i) {
        const std::uint32_t c = first + static_cast<std::uint32_t>(i);
        if (cl.open(c)) nbrs.push_back(c);
      }
    }
    if (nbrs.empty()) {
      tr.stuck = true;
      break;
    }
    cur = nbrs[rng.next_below(static_cast<std::uint32_t>(nbrs.size()))];
    tr.nodes.push_back(cur);
    tr.heights.push_back(cur == kObar ? 1
                                      : static_cast<std::int32_t>(a.depth(cur)));
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Renewal structure. R >= 1 is a renewal time when every height before R is
// strictly below every height from R on. Near the end of a finite record the
// predicate cannot be confirmed, so records with fewer than W subsequent
// steps, and the last record (whose interval is incomplete), are censored.

struct RenewalRecord {
  int index = 0;                 // i, 1-based
  std::int64_t tau = 0;          // step time of the renewal
  std::int32_t height = 0;       // |X_tau|
  double gff_at_entry = 0.0;     // field value at X_tau
  std::uint32_t node = 0;        // arena index of X_tau
  std::optional<std::int64_t> duration;       // tau_{i+1} - tau_i
  std::optional<std::int32_t> height_gain;    // |X_{tau_{i+1}}| - |X_tau|
  std::optional<std::int32_t> interval_height;  // max height in the interval, relative
  bool censored = true;
  bool m2 = false;  // interval of height 2 spanning exactly two edges
};

inline std::vector<std::int64_t> renewal_times(const Trajectory& tr) {
  const std::size_t n1 = tr.heights.size();
  if (n1 < 2) return {};
  std::vector<std::int32_t> suffix_min(n1);
  suffix_min[n1 - 1] = tr.heights[n1 - 1];
  for (std::size_t k = n1 - 1; k-- > 0;)
    suffix_min[k] = std::min(tr.heights[k], suffix_min[k + 1]);
  std::vector<std::int64_t> times;
  std::int32_t prefix_max = tr.heights[0];
  for (std::size_t r = 1; r < n1; ++r) {
    if (prefix_max < suffix_min[r]) times.push_back(static_cast<std::int64_t>(r));
    prefix_max = std::max(prefix_max, tr.heights[r]);
  }
  return times;
}

inline std::vector<RenewalRecord> detect_renewals(const ClusterView& cl,
                                                  const Trajectory& tr,
                                                  int confirm_margin) {
  const auto times = renewal_times(tr);
  const std::int64_t n = static_cast<std::int64_t>(tr.steps());
  std::vector<RenewalRecord> recs;
  recs.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    RenewalRecord r;
    r.index = static_cast<int>(i) + 1;
    r.tau = times[i];
    r.height = tr.heights[static_cast<std::size_t>(r.tau)];
    r.node = tr.nodes[static_cast<std::size_t>(r.tau)];
    r.gff_at_entry = (r.node == kObar)
                         ? std::numeric_limits<double>::quiet_NaN()
                         : cl.arena->value(r.node);
    const bool has_next = i + 1 < times.size();
    if (has_next) {
      const std::int64_t next = times[i + 1];
      r.duration = next - r.tau;
      r.height_gain = tr.heights[static_cast<std::size_t>(next)] - r.height;
      std::int32_t hmax = r.height;
      std::unordered_map<std::uint64_t, int> visited;
      for (std::int64_t k = r.tau; k <= next; ++k) {
        hmax = std::max(hmax, tr.heights[static_cast<std::size_t>(k)]);
        ++visited[tr.nodes[static_cast<std::size_t>(k)]];
      }
      r.interval_height = hmax - r.height;
      r.m2 = (*r.height_gain == 2) && visited.size() == 3;
    }
    r.censored = !has_next || (r.tau + confirm_margin > n);
    recs.push_back(std::move(r));
  }
  return recs;
}

// Post-hoc verification of emitted records: the renewal predicate itself and
// the single-crossing property of the entry edge, each in O(n).
inline bool verify_renewal_records(const Trajectory& tr,
                                   const std::vector<RenewalRecord>& recs) {
  const std::size_t n1 = tr.heights.size();
  std::vector<std::int32_t> suffix_min(n1);
  std::vector<std::int32_t> prefix_max(n1);
  suffix_min[n1 - 1] = tr.heights[n1 - 1];
  for (std::size_t k = n1 - 1; k-- > 0;)
    suffix_min[k] = std::min(tr.heights[k], suffix_min[k + 1]);
  prefix_max[0] = tr.heights[0];
  for (std::size_t k = 1; k < n1; ++k)
    prefix_max[k] = std::max(prefix_max[k - 1], tr.heights[k]);

  std::unordered_map<std::uint64_t, int> edge_count;
  auto edge_key = [](std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
  };
  for (std::size_t k = 1; k < tr.nodes.size(); ++k)
    ++edge_count[edge_key(tr.nodes[k - 1], tr.nodes[k])];

  std::int64_t prev_tau = 0;
  for (const auto& r : recs) {
    const auto t = static_cast<std::size_t>(r.tau);
    if (r.tau < 1 || t >= n1) return false;
    if (prefix_max[t - 1] >= suffix_min[t]) return false;
    if (r.index > 1 && r.tau <= prev_tau) return false;
    prev_tau = r.tau;
    if (!r.censored) {
      if (!r.duration || *r.duration < 1) return false;
      if (!r.height_gain || *r.height_gain < 1) return false;
      if (edge_count[edge_key(tr.nodes[t - 1], tr.nodes[t])] != 1) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Excursion decomposition of the pre-renewal trajectory: r_i is the return
// time ending excursion i, m_i its height, s_i the first time the running
// height record is beaten afterwards. tau_1 = s_{i0} for the first i0 whose
// excursion never returns.

struct ExcursionRecord {
  int index = 0;
  std::int64_t r = 0;  // return time
  std::int32_t m = 0;  // excursion height
  std::int64_t s = 0;  // next record time
};

struct ExcursionDecomposition {
  std::vector<ExcursionRecord> excursions;  // completed excursions only
  std::optional<std::int64_t> tau1;
  std::optional<int> i0;
  bool censored = false;  // ran out of recorded steps before resolving tau_1
};

inline ExcursionDecomposition decompose_excursions(const Trajectory& tr) {
  ExcursionDecomposition out;
  const std::size_t n1 = tr.heights.size();
  if (n1 < 2) {
    out.censored = true;
    return out;
  }
  // First return to the root, if any.
  std::size_t k = 1;
  while (k < n1 && tr.heights[k] != 0) ++k;
  if (k == n1) {
    out.tau1 = 1;  // no recorded return: tau_1 = 1
    out.i0 = 0;    // zero completed excursions
    return out;
  }
  std::int64_t r_i = static_cast<std::int64_t>(k);
  std::int32_t record = 0;  // |X_{s_{i-1}}| once the first record exists
  std::int32_t hmax = 0;    // running prefix max of the heights
  std::size_t scanned = 0;  // hmax covers heights[0..scanned]
  int idx = 0;
  for (;;) {
    while (scanned < static_cast<std::size_t>(r_i))
      hmax = std::max(hmax, tr.heights[++scanned]);
    // m_1 is the absolute excursion height; later excursions are measured
    // from one below the standing record, hence the +1. Either way the next
    // record target is hmax + 1.
    const std::int32_t m_i = (idx == 0) ? hmax : hmax - record + 1;
    const std::int32_t target = hmax + 1;
    std::size_t s = static_cast<std::size_t>(r_i);
    while (s < n1 && tr.heights[s] != target) ++s;
    if (s == n1) {
      out.censored = true;  // record never beaten within the horizon
      return out;
    }
    ++idx;
    out.excursions.push_back({idx, r_i, m_i, static_cast<std::int64_t>(s)});
    while (scanned < s) hmax = std::max(hmax, tr.heights[++scanned]);
    // Next return strictly below the new record, if any.
    record = target;
    std::size_t rn = s;
    while (rn < n1 && tr.heights[rn] != record - 1) ++rn;
    if (rn == n1) {
      out.tau1 = static_cast<std::int64_t>(s);
      out.i0 = idx;
      return out;
    }
    r_i = static_cast<std::int64_t>(rn);
  }
}

// ---------------------------------------------------------------------------
// Renewal Markov chain summaries. Entry i describes the interval between
// consecutive renewals tau_i and tau_{i+1}: phi is the field value at the
// interval's exit vertex X_{tau_{i+1}}, and the potential is
// V = phi + height^2 + duration^2.

struct ChainEntry {
  double phi = 0.0;
  std::int32_t interval_height = 0;
  std::int64_t duration = 0;
  double V = 0.0;
  bool m2 = false;
};

inline double chain_potential(double phi, std::int32_t height, std::int64_t duration) {
  return phi + static_cast<double>(height) * height +
         static_cast<double>(duration) * duration;
}

inline std::vector<ChainEntry> renewal_chain(const std::vector<RenewalRecord>& recs) {
  std::vector<ChainEntry> chain;
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    const auto& r = recs[i];
    if (r.censored || !r.duration) continue;
    ChainEntry e;
    e.phi = recs[i + 1].gff_at_entry;
    e.interval_height = *r.height_gain;
    e.duration = *r.duration;
    e.V = chain_potential(e.phi, e.interval_height, e.duration);
    e.m2 = r.m2;
    chain.push_back(e);
  }
  return chain;
}

}  // namespace gffwalk
