// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gffwalk/cluster.hpp"
#include "gffwalk/csv.hpp"
#include "gffwalk/estimators.hpp"
#include "gffwalk/spectral.hpp"
#include "gffwalk/tree.hpp"
#include "gffwalk/walk.hpp"

namespace gffwalk {

inline constexpr const char* kVersion = "0.1.0";

// Fully serializable experiment description. A hash of the canonical JSON
// form is embedded in every output file; identical configs must produce
// byte-identical outputs, parallelism included.
struct RunConfig {
  std::string command;
  int d = 3;
  double h = 0.0;
  std::string mode = "plus";
  std::uint64_t seed = 1;
  int replicas = 0;
  std::int64_t steps = 0;
  int kmax = 0;                      // generations to record (0 = none)
  int grid_m = 400;                  // quadrature nodes
  double trunc = 0.0;                // grid truncation T (0 = auto)
  double tol = 1e-8;                 // solver / fixed-point tolerance
  int max_iter = 10000;
  int confirm_margin = 500;          // renewal confirmation margin W
  int horizon_g = 0;                 // survival-conditioning horizon (0 = off)
  std::uint64_t size_threshold = 10000;
  std::uint64_t vertex_cap = 10'000'000;
  int max_rejections = 100000;
  std::optional<double> root_condition;
  int threads = 0;                   // 0 = hardware concurrency
  std::string out_dir = ".";
  // diagnostics knobs
  double delta = 0.2;
  int trials = 200;
  int mc_horizon = 2000;
  int depth = 20;                    // skeleton D / delta-exit ray height
  double zmax = 10.0;
  std::optional<double> phi_threshold;
  std::optional<double> s_hat;       // external speed for clt
};

inline void to_json(nlohmann::ordered_json& j, const RunConfig& c) {
  j = nlohmann::ordered_json{
      {"command", c.command},
      {"d", c.d},
      {"h", c.h},
      {"mode", c.mode},
      {"seed", c.seed},
      {"replicas", c.replicas},
      {"steps", c.steps},
      {"kmax", c.kmax},
      {"grid_m", c.grid_m},
      {"trunc", c.trunc},
      {"tol", c.tol},
      {"max_iter", c.max_iter},
      {"confirm_margin", c.confirm_margin},
      {"horizon_g", c.horizon_g},
      {"size_threshold", c.size_threshold},
      {"vertex_cap", c.vertex_cap},
      {"max_rejections", c.max_rejections},
      {"root_condition",
       c.root_condition ? nlohmann::ordered_json(*c.root_condition)
                        : nlohmann::ordered_json(nullptr)},
      {"threads", c.threads},
      {"out_dir", c.out_dir},
      {"delta", c.delta},
      {"trials", c.trials},
      {"mc_horizon", c.mc_horizon},
      {"depth", c.depth},
      {"zmax", c.zmax},
      {"phi_threshold",
       c.phi_threshold ? nlohmann::ordered_json(*c.phi_threshold)
                       : nlohmann::ordered_json(nullptr)},
      {"s_hat", c.s_hat ? nlohmann::ordered_json(*c.s_hat)
                        : nlohmann::ordered_json(nullptr)},
  };
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  const auto get = [&](const char* k, auto& field) {
    if (j.contains(k) && !j.at(k).is_null()) j.at(k).get_to(field);
  };
  get("command", c.command);
  get("d", c.d);
  get("h", c.h);
  get("mode", c.mode);
  get("seed", c.seed);
  get("replicas", c.replicas);
  get("steps", c.steps);
  get("kmax", c.kmax);
  get("grid_m", c.grid_m);
  get("trunc", c.trunc);
  get("tol", c.tol);
  get("max_iter", c.max_iter);
  get("confirm_margin", c.confirm_margin);
  get("horizon_g", c.horizon_g);
  get("size_threshold", c.size_threshold);
  get("vertex_cap", c.vertex_cap);
  get("max_rejections", c.max_rejections);
  if (j.contains("root_condition") && !j.at("root_condition").is_null())
    c.root_condition = j.at("root_condition").get<double>();
  get("threads", c.threads);
  get("out_dir", c.out_dir);
  get("delta", c.delta);
  get("trials", c.trials);
  get("mc_horizon", c.mc_horizon);
  get("depth", c.depth);
  get("zmax", c.zmax);
  if (j.contains("phi_threshold") && !j.at("phi_threshold").is_null())
    c.phi_threshold = j.at("phi_threshold").get<double>();
  if (j.contains("s_hat") && !j.at("s_hat").is_null())
    c.s_hat = j.at("s_hat").get<double>();
}

// FNV-1a over the canonical (sorted-key) JSON dump. The `threads` and
// `out_dir` fields are excluded: parallelism degree and output location must
// not change what is computed.
inline std::string config_hash(const RunConfig& c) {
  nlohmann::ordered_json oj;
  to_json(oj, c);
  nlohmann::json sorted = nlohmann::json::parse(oj.dump());
  sorted.erase("threads");
  sorted.erase("out_dir");
  const std::string s = sorted.dump();
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char ch : s) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

inline std::string provenance_line(const RunConfig& c) {
  return "# gffwalk " + std::string(kVersion) + " config=" + config_hash(c) +
         " seed=" + std::to_string(c.seed);
}

// Deterministic parallel map over replica indices: work distribution does not
// affect results because every replica derives its own seed and results land
// in preallocated slots, reduced in index order by the caller.
template <typename Fn>
inline void run_parallel(int n_items, int threads, Fn&& fn) {
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 1 || n_items <= 1) {
    for (int i = 0; i < n_items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int n_workers = std::min(threads, n_items);
  for (int t = 0; t < n_workers; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_items; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Simulation driver: one arena per replica, seeds derived as seed XOR index,
// optional survival conditioning, walk, renewal detection.

struct ReplicaResult {
  int replica = 0;
  std::uint64_t arena_seed = 0;
  bool accepted = false;
  int rejections = 0;
  std::optional<int> extinct_at;
  std::vector<GenerationRecord> generations;
  TrajectorySummary summary;
  std::vector<RenewalRecord> records;
  std::vector<ChainEntry> chain;  // all complete intervals, in order
  std::string error;
};

struct SimulateOutput {
  RunConfig cfg;
  std::vector<ReplicaResult> reps;
};

inline SimulateOutput run_simulate(const RunConfig& cfg) {
  if (cfg.d < 3) throw std::invalid_argument("simulate: d must be >= 3");
  const TreeMode mode = tree_mode_from_string(cfg.mode);
  SimulateOutput out;
  out.cfg = cfg;
  out.reps.resize(static_cast<std::size_t>(std::max(0, cfg.replicas)));
  run_parallel(cfg.replicas, cfg.threads, [&](int r) {
    ReplicaResult& rr = out.reps[static_cast<std::size_t>(r)];
    rr.replica = r;
    rr.arena_seed = cfg.seed ^ static_cast<std::uint64_t>(r);
    try {
      std::optional<GffArena> arena;
      if (cfg.horizon_g > 0) {
        SurvivalOptions so;
        so.max_rejections = cfg.max_rejections;
        so.size_threshold = cfg.size_threshold;
        so.vertex_cap = cfg.vertex_cap;
        so.root_condition = cfg.root_condition;
        auto s = survival_sample(cfg.d, cfg.h, mode, cfg.horizon_g,
                                 rr.arena_seed, so);
        rr.rejections = s.rejections;
        rr.accepted = s.accepted;
        if (!s.accepted) return;
        rr.generations = s.growth.rows;
        rr.extinct_at = s.growth.extinct_at;
        arena = std::move(s.arena);
      } else {
        arena.emplace(cfg.d, mode, cfg.root_condition, rr.arena_seed,
                      cfg.vertex_cap);
        rr.accepted = true;
        if (cfg.kmax > 0) {
          ClusterView cl{&*arena, cfg.h};
          auto t = grow_generations(cl, cfg.kmax);
          rr.generations = t.rows;
          rr.extinct_at = t.extinct_at;
        }
      }
      if (cfg.steps > 0) {
        ClusterView cl{&*arena, cfg.h};
        if (cl.root_open()) {
          auto tr = run_walk(cl, mode, cfg.steps, rr.arena_seed);
          rr.summary = summarize_trajectory(tr);
          rr.records = detect_renewals(cl, tr, cfg.confirm_margin);
          rr.chain = renewal_chain(rr.records);
          rr.summary.n_renewals = static_cast<int>(rr.records.size());
          for (const auto& rec : rr.records)
            rr.summary.n_uncensored += !rec.censored;
        }
      }
    } catch (const std::exception& e) {
      rr.error = e.what();
      rr.accepted = false;
    }
  });
  return out;
}

// The first complete renewal interval of each replica has a different law and
// is excluded from stationary estimators; pooling stays in replica order.
inline std::vector<ChainEntry> pooled_intervals(const SimulateOutput& out) {
  std::vector<ChainEntry> pooled;
  for (const auto& r : out.reps)
    for (std::size_t i = 1; i < r.chain.size(); ++i) pooled.push_back(r.chain[i]);
  return pooled;
}

inline std::vector<std::vector<ChainEntry>> per_replica_chains(
    const SimulateOutput& out) {
  std::vector<std::vector<ChainEntry>> chains;
  for (const auto& r : out.reps) {
    if (r.chain.size() <= 1) continue;
    chains.emplace_back(r.chain.begin() + 1, r.chain.end());
  }
  return chains;
}

inline std::vector<TrajectorySummary> walk_summaries(const SimulateOutput& out) {
  std::vector<TrajectorySummary> s;
  for (const auto& r : out.reps)
    if (r.accepted && r.error.empty() && r.summary.steps > 0)
      s.push_back(r.summary);
  return s;
}

inline std::vector<std::vector<std::uint64_t>> generation_tables(
    const SimulateOutput& out) {
  std::vector<std::vector<std::uint64_t>> t;
  for (const auto& r : out.reps) {
    if (r.generations.empty()) continue;
    std::vector<std::uint64_t> sizes;
    for (const auto& g : r.generations) sizes.push_back(g.size);
    t.push_back(std::move(sizes));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Writers. Every file gets the provenance line (version, config hash, seed).

inline void write_trajectories_csv(const SimulateOutput& out, std::ostream& f) {
  f << provenance_line(out.cfg) << "\n";
  f << "replica,steps,stuck,h_quarter,h_half,h_full,n_renewals,n_uncensored\n";
  for (const auto& r : out.reps) {
    if (!r.accepted || !r.error.empty() || r.summary.steps == 0) continue;
    f << r.replica << ',' << r.summary.steps << ',' << (r.summary.stuck ? 1 : 0)
      << ',' << r.summary.height_quarter << ',' << r.summary.height_half << ','
      << r.summary.height_full << ',' << r.summary.n_renewals << ','
      << r.summary.n_uncensored << "\n";
  }
}

inline void write_generations_csv(const SimulateOutput& out, std::ostream& f) {
  f << provenance_line(out.cfg) << "\n";
  f << "replica,k,size,extinct_at\n";
  for (const auto& r : out.reps) {
    const std::string ext =
        r.extinct_at ? std::to_string(*r.extinct_at) : std::string();
    for (const auto& g : r.generations)
      f << r.replica << ',' << g.k << ',' << g.size << ',' << ext << "\n";
  }
}

inline void write_renewals_csv(const SimulateOutput& out, std::ostream& f) {
  f << provenance_line(out.cfg) << "\n";
  f << "replica,i,tau,height,phi_entry,duration,height_gain,interval_height,V,"
       "censored\n";
  for (const auto& r : out.reps) {
    for (const auto& rec : r.records) {
      f << r.replica << ',' << rec.index << ',' << rec.tau << ',' << rec.height
        << ',' << fmt_double(rec.gff_at_entry) << ',';
      if (rec.duration) f << *rec.duration;
      f << ',';
      if (rec.height_gain) f << *rec.height_gain;
      f << ',';
      if (rec.interval_height) f << *rec.interval_height;
      f << ',';
      if (rec.duration)
        f << fmt_double(chain_potential(rec.gff_at_entry, *rec.height_gain,
                                        *rec.duration));
      f << ',' << (rec.censored ? 1 : 0) << "\n";
    }
  }
}

inline void write_run_json(const SimulateOutput& out, std::ostream& f) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["config_hash"] = config_hash(out.cfg);
  nlohmann::ordered_json cj;
  to_json(cj, out.cfg);
  // execution details, not physics: must not leak into reproducible outputs
  cj.erase("threads");
  cj.erase("out_dir");
  j["config"] = cj;
  int accepted = 0, failed = 0;
  std::int64_t rejections = 0;
  for (const auto& r : out.reps) {
    accepted += r.accepted;
    failed += !r.error.empty();
    rejections += r.rejections;
  }
  j["summary"] = {{"replicas", out.reps.size()},
                  {"accepted", accepted},
                  {"failed", failed},
                  {"total_rejections", rejections}};
  f << j.dump(2) << "\n";
}

namespace detail {
template <typename Writer>
inline void to_file(const std::string& path, Writer&& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  w(f);
}
}  // namespace detail

inline void write_simulate_outputs(const SimulateOutput& out,
                                   const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto p = [&](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };
  detail::to_file(p("run.json"), [&](std::ostream& f) { write_run_json(out, f); });
  if (out.cfg.steps > 0) {
    detail::to_file(p("trajectories.csv"),
                    [&](std::ostream& f) { write_trajectories_csv(out, f); });
    detail::to_file(p("renewals.csv"),
                    [&](std::ostream& f) { write_renewals_csv(out, f); });
  }
  detail::to_file(p("generations.csv"),
                  [&](std::ostream& f) { write_generations_csv(out, f); });
}

// ---------------------------------------------------------------------------
// Readers (for the report command and round-trip tests).

struct RenewalRow {
  int replica = 0;
  RenewalRecord rec;
};

inline std::vector<RenewalRow> read_renewals_csv(const std::string& path) {
  const auto t = read_csv(path);
  const int c_rep = t.column("replica", path);
  const int c_i = t.column("i", path);
  const int c_tau = t.column("tau", path);
  const int c_h = t.column("height", path);
  const int c_phi = t.column("phi_entry", path);
  const int c_dur = t.column("duration", path);
  const int c_gain = t.column("height_gain", path);
  const int c_ih = t.column("interval_height", path);
  t.column("V", path);
  const int c_cen = t.column("censored", path);
  std::vector<RenewalRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    RenewalRow row;
    row.replica = std::stoi(r[static_cast<std::size_t>(c_rep)]);
    row.rec.index = std::stoi(r[static_cast<std::size_t>(c_i)]);
    row.rec.tau = std::stoll(r[static_cast<std::size_t>(c_tau)]);
    row.rec.height = std::stoi(r[static_cast<std::size_t>(c_h)]);
    row.rec.gff_at_entry = std::stod(r[static_cast<std::size_t>(c_phi)]);
    if (!r[static_cast<std::size_t>(c_dur)].empty())
      row.rec.duration = std::stoll(r[static_cast<std::size_t>(c_dur)]);
    if (!r[static_cast<std::size_t>(c_gain)].empty())
      row.rec.height_gain = std::stoi(r[static_cast<std::size_t>(c_gain)]);
    if (!r[static_cast<std::size_t>(c_ih)].empty())
      row.rec.interval_height = std::stoi(r[static_cast<std::size_t>(c_ih)]);
    row.rec.censored = r[static_cast<std::size_t>(c_cen)] == "1";
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<TrajectorySummary> read_trajectories_csv(
    const std::string& path) {
  const auto t = read_csv(path);
  const int c_steps = t.column("steps", path);
  const int c_stuck = t.column("stuck", path);
  const int c_q = t.column("h_quarter", path);
  const int c_h = t.column("h_half", path);
  const int c_f = t.column("h_full", path);
  const int c_nr = t.column("n_renewals", path);
  const int c_nu = t.column("n_uncensored", path);
  std::vector<TrajectorySummary> rows;
  for (const auto& r : t.rows) {
    TrajectorySummary s;
    s.steps = std::stoll(r[static_cast<std::size_t>(c_steps)]);
    s.stuck = r[static_cast<std::size_t>(c_stuck)] == "1";
    s.height_quarter = std::stoi(r[static_cast<std::size_t>(c_q)]);
    s.height_half = std::stoi(r[static_cast<std::size_t>(c_h)]);
    s.height_full = std::stoi(r[static_cast<std::size_t>(c_f)]);
    s.n_renewals = std::stoi(r[static_cast<std::size_t>(c_nr)]);
    s.n_uncensored = std::stoi(r[static_cast<std::size_t>(c_nu)]);
    rows.push_back(s);
  }
  return rows;
}

// Per-replica chains reconstructed from a renewal CSV, first complete
// interval of each replica dropped (stationary-estimator convention).
inline std::vector<std::vector<ChainEntry>> chains_from_rows(
    const std::vector<RenewalRow>& rows) {
  std::vector<std::vector<ChainEntry>> chains;
  std::vector<RenewalRecord> cur;
  int cur_rep = -1;
  const auto flush = [&] {
    if (cur.empty()) return;
    auto ch = renewal_chain(cur);
    if (ch.size() > 1) chains.emplace_back(ch.begin() + 1, ch.end());
    cur.clear();
  };
  for (const auto& r : rows) {
    if (r.replica != cur_rep) {
      flush();
      cur_rep = r.replica;
    }
    cur.push_back(r.rec);
  }
  flush();
  return chains;
}

inline std::vector<ChainEntry> pool_chains(
    const std::vector<std::vector<ChainEntry>>& chains) {
  std::vector<ChainEntry> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  return pooled;
}

struct GenerationsFile {
  // replica -> generation sizes (index k), plus extinct_at when present
  std::vector<std::vector<std::uint64_t>> tables;
  std::vector<std::optional<int>> extinct_at;
};

inline GenerationsFile read_generations_csv(const std::string& path) {
  const auto t = read_csv(path);
  const int c_rep = t.column("replica", path);
  const int c_k = t.column("k", path);
  const int c_size = t.column("size", path);
  const int c_ext = t.column("extinct_at", path);
  GenerationsFile out;
  int cur_rep = -1;
  for (const auto& r : t.rows) {
    const int rep = std::stoi(r[static_cast<std::size_t>(c_rep)]);
    if (rep != cur_rep) {
      out.tables.emplace_back();
      const auto& e = r[static_cast<std::size_t>(c_ext)];
      out.extinct_at.push_back(e.empty() ? std::optional<int>{} : std::stoi(e));
      cur_rep = rep;
    }
    const int k = std::stoi(r[static_cast<std::size_t>(c_k)]);
    auto& sizes = out.tables.back();
    if (static_cast<std::size_t>(k) != sizes.size())
      throw SchemaError(path + ": non-contiguous k for replica " +
                        std::to_string(rep));
    sizes.push_back(std::stoull(r[static_cast<std::size_t>(c_size)]));
  }
  return out;
}

}  // namespace gffwalk
