// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
//
// gffwalk: level-set percolation of the Gaussian free field on regular trees,
// random walks on the resulting clusters, and the spectral quantities they
// are cross-validated against. Exit codes: 0 success, 1 usage, 2 runtime,
// 3 verdict failure (report --strict).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "gffwalk/experiment.hpp"
#include "gffwalk/report.hpp"

namespace fs = std::filesystem;
using namespace gffwalk;

namespace {

void to_file(const std::string& dir, const char* name,
             const nlohmann::ordered_json& j) {
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / name, std::ios::binary);
  if (!f) throw std::runtime_error(std::string("cannot write ") + name);
  f << j.dump(2) << "\n";
}

nlohmann::ordered_json base_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  return j;
}

int cmd_spectral(RunConfig cfg) {
  const auto grid = QuadratureGrid::make(cfg.d, cfg.h, cfg.grid_m, cfg.trunc);
  if (grid.tail_bound > 1e-6)
    std::cerr << "warning: quadrature tail bound " << grid.tail_bound
              << " exceeds 1e-6; increase --trunc\n";
  const auto res = top_eigen(grid);
  auto j = base_json(cfg);
  j["d"] = cfg.d;
  j["h"] = cfg.h;
  j["lambda"] = res.lambda;
  j["residual"] = res.residual;
  j["iterations"] = res.iterations;
  j["grid"] = {{"m", grid.size()},
               {"truncation", grid.truncation},
               {"tail_bound", grid.tail_bound},
               {"nu_tail_mass", grid.nu_tail_mass}};
  to_file(cfg.out_dir, "spectral.json", j);
  {
    std::ofstream f(fs::path(cfg.out_dir) / "chi.csv", std::ios::binary);
    f << provenance_line(cfg) << "\na,chi\n";
    for (int i = 0; i < grid.size(); ++i)
      f << fmt_double(grid.nodes[static_cast<std::size_t>(i)]) << ','
        << fmt_double(res.chi[static_cast<std::size_t>(i)]) << "\n";
  }
  std::cout << "lambda_h(d=" << cfg.d << ", h=" << cfg.h << ") = " << res.lambda
            << "  residual " << res.residual << "\n";
  return 0;
}

int cmd_hstar(RunConfig cfg) {
  const double tol = cfg.tol > 0 ? cfg.tol : 1e-4;
  const double hs = solve_hstar(cfg.d, tol, cfg.grid_m);
  auto j = base_json(cfg);
  j["d"] = cfg.d;
  j["tol"] = tol;
  j["h_star"] = hs;
  j["lambda_at_h_star"] = lambda_of(cfg.d, hs, cfg.grid_m);
  to_file(cfg.out_dir, "hstar.json", j);
  {
    std::ofstream f(fs::path(cfg.out_dir) / "hstar.csv", std::ios::binary);
    f << provenance_line(cfg) << "\nd,h_star\n"
      << cfg.d << ',' << fmt_double(hs) << "\n";
  }
  std::cout << "h_star(" << cfg.d << ") = " << hs << "\n";
  return 0;
}

int cmd_qh(RunConfig cfg) {
  const auto grid = QuadratureGrid::make(cfg.d, cfg.h, cfg.grid_m, cfg.trunc);
  const auto q = iterate_Rh(grid, cfg.tol, cfg.max_iter);
  auto j = base_json(cfg);
  j["d"] = cfg.d;
  j["h"] = cfg.h;
  j["iterations"] = q.iterations;
  j["residual"] = q.residual;
  j["converged"] = q.converged;
  to_file(cfg.out_dir, "qh.json", j);
  {
    std::ofstream f(fs::path(cfg.out_dir) / "qh.csv", std::ios::binary);
    f << provenance_line(cfg) << "\na,q\n";
    for (int i = 0; i < grid.size(); ++i)
      f << fmt_double(grid.nodes[static_cast<std::size_t>(i)]) << ','
        << fmt_double(q.values[static_cast<std::size_t>(i)]) << "\n";
  }
  std::cout << "q_h converged=" << (q.converged ? "yes" : "no")
            << " iterations=" << q.iterations << " residual=" << q.residual
            << "\n";
  if (!q.converged) {
    std::cerr << "error: fixed-point iteration did not converge\n";
    return 2;
  }
  return 0;
}

int cmd_eta(RunConfig cfg) {
  const auto grid = QuadratureGrid::make(cfg.d, cfg.h, cfg.grid_m, cfg.trunc);
  const auto q = iterate_Rh(grid, cfg.tol, cfg.max_iter);
  const bool plus = cfg.mode == "plus";
  const double eta = eta_survival(grid, q, plus);
  auto j = base_json(cfg);
  j["d"] = cfg.d;
  j["h"] = cfg.h;
  j["mode"] = cfg.mode;
  j["eta"] = eta;
  j["q_iterations"] = q.iterations;
  to_file(cfg.out_dir, "eta.json", j);
  {
    std::ofstream f(fs::path(cfg.out_dir) / "eta.csv", std::ios::binary);
    f << provenance_line(cfg) << "\nd,h,mode,eta\n"
      << cfg.d << ',' << fmt_double(cfg.h) << ',' << cfg.mode << ','
      << fmt_double(eta) << "\n";
  }
  std::cout << "eta(" << cfg.mode << ", h=" << cfg.h << ") = " << eta << "\n";
  return 0;
}

int cmd_simulate(RunConfig cfg) {
  if (cfg.horizon_g > 0) {
    const double lam = lambda_of(cfg.d, cfg.h, 200);
    if (lam <= 1.0)
      std::cerr << "warning: lambda_h = " << lam
                << " <= 1 (subcritical level); survival conditioning will "
                   "reject heavily\n";
  }
  const auto out = run_simulate(cfg);
  write_simulate_outputs(out, cfg.out_dir);
  int accepted = 0, failed = 0;
  for (const auto& r : out.reps) {
    accepted += r.accepted;
    failed += !r.error.empty();
  }
  if (out.reps.empty()) std::cerr << "warning: 0 replicas requested\n";
  std::cout << "replicas=" << out.reps.size() << " accepted=" << accepted
            << " failed=" << failed << " -> " << cfg.out_dir << "\n";
  return 0;
}

int cmd_renewal_stats(RunConfig cfg, const std::string& in) {
  const auto rows = read_renewals_csv(in);
  const auto chains = chains_from_rows(rows);
  const auto pooled = pool_chains(chains);
  auto j = base_json(cfg);
  j["input"] = in;
  j["n_intervals"] = pooled.size();
  if (pooled.size() >= 100) {
    const auto sp = speed_renewal(pooled);
    const auto sig = sigma_from_renewals(pooled);
    j["s_hat"] = sp.s_hat;
    j["ci"] = {sp.ci.lo, sp.ci.hi};
    j["s_hx"] = sp.s_hx;
    j["s_htau"] = sp.s_htau;
    j["sigma_w"] = sig.sigma_w;
    j["sigma_formula"] = sig.formula;
    j["sigma_formula_literal"] = sig.formula_literal;
  }
  std::vector<double> durs;
  for (const auto& e : pooled) durs.push_back(static_cast<double>(e.duration));
  if (durs.size() >= 1000) {
    const auto f = tail_fit(durs);
    j["tail"] = {{"rel_change_mean", f.rel_change_mean},
                 {"rel_change_m2", f.rel_change_m2},
                 {"stable", f.stable},
                 {"monotone_decay", f.monotone_decay}};
  }
  to_file(cfg.out_dir, "renewal_stats.json", j);
  std::cout << "intervals=" << pooled.size() << " -> " << cfg.out_dir
            << "/renewal_stats.json\n";
  return 0;
}

int cmd_speed(RunConfig cfg, const std::string& in) {
  const auto traj =
      read_trajectories_csv((fs::path(in) / "trajectories.csv").string());
  const auto chains =
      chains_from_rows(read_renewals_csv((fs::path(in) / "renewals.csv").string()));
  const auto pooled = pool_chains(chains);
  const auto d1 = speed_direct(traj);
  const auto d2 = speed_renewal(pooled);
  auto j = base_json(cfg);
  j["direct"] = {{"s_hat", d1.s_hat},
                 {"ci", {d1.ci.lo, d1.ci.hi}},
                 {"n", d1.n_effective}};
  j["renewal_ratio"] = {{"s_hat", d2.s_hat},
                        {"ci", {d2.ci.lo, d2.ci.hi}},
                        {"n", d2.n_effective},
                        {"s_hx", d2.s_hx},
                        {"s_htau", d2.s_htau}};
  j["agree"] = speeds_agree(d1, d2);
  to_file(cfg.out_dir, "speed.json", j);
  std::cout << "direct=" << d1.s_hat << " renewal=" << d2.s_hat
            << " agree=" << (speeds_agree(d1, d2) ? "yes" : "no") << "\n";
  return 0;
}

int cmd_clt(RunConfig cfg, const std::string& in) {
  auto traj = read_trajectories_csv((fs::path(in) / "trajectories.csv").string());
  double s_hat = 0.0;
  std::string route;
  std::vector<TrajectorySummary> test = traj;
  if (cfg.s_hat) {
    s_hat = *cfg.s_hat;
    route = "external";
  } else if (fs::exists(fs::path(in) / "renewals.csv")) {
    const auto pooled = pool_chains(chains_from_rows(
        read_renewals_csv((fs::path(in) / "renewals.csv").string())));
    s_hat = speed_renewal(pooled).s_hat;
    route = "renewal_ratio";
  } else {
    std::vector<TrajectorySummary> train;
    test.clear();
    for (std::size_t i = 0; i < traj.size(); ++i)
      (i % 2 ? train : test).push_back(traj[i]);
    s_hat = speed_direct(train).s_hat;
    route = "odd_even_split";
  }
  const auto c = clt_check(test, s_hat);
  auto j = base_json(cfg);
  j["s_hat"] = s_hat;
  j["s_hat_route"] = route;
  j["sigma_hat"] = c.sigma_hat;
  j["ks_statistic"] = c.ks_statistic;
  j["ks_critical"] = c.ks_critical;
  j["ks_pass"] = c.ks_pass;
  j["variance_ratio"] = c.variance_ratio;
  j["n"] = test.size();
  to_file(cfg.out_dir, "clt.json", j);
  std::cout << "sigma_hat=" << c.sigma_hat << " ks=" << c.ks_statistic << "/"
            << c.ks_critical << (c.ks_pass ? " pass" : " FAIL")
            << " var_ratio=" << c.variance_ratio << "\n";
  return 0;
}

int cmd_diag_delta_exits(RunConfig cfg) {
  const TreeMode mode = tree_mode_from_string(cfg.mode);
  std::vector<std::optional<int>> exits(static_cast<std::size_t>(cfg.replicas));
  run_parallel(cfg.replicas, cfg.threads, [&](int r) {
    const std::uint64_t seed = cfg.seed ^ static_cast<std::uint64_t>(r);
    std::optional<GffArena> arena;
    if (cfg.horizon_g > 0) {
      SurvivalOptions so;
      so.size_threshold = cfg.size_threshold;
      so.vertex_cap = cfg.vertex_cap;
      so.root_condition = cfg.root_condition;
      auto s = survival_sample(cfg.d, cfg.h, mode, cfg.horizon_g, seed, so);
      if (!s.accepted) return;
      arena = std::move(s.arena);
    } else {
      arena.emplace(cfg.d, mode, cfg.root_condition, seed, cfg.vertex_cap);
    }
    ClusterView cl{&*arena, cfg.h};
    const auto z = find_vertex_at_depth(cl, cfg.depth);
    if (!z) return;
    exits[static_cast<std::size_t>(r)] =
        count_delta_exits(cl, *z, cfg.delta, cfg.trials, cfg.mc_horizon,
                          derive_seed(seed, seed_tag::trial));
  });
  fs::create_directories(cfg.out_dir);
  std::ofstream f(fs::path(cfg.out_dir) / "delta_exits.csv", std::ios::binary);
  f << provenance_line(cfg) << "\nreplica,exits\n";
  std::vector<double> vals;
  for (int r = 0; r < cfg.replicas; ++r) {
    if (!exits[static_cast<std::size_t>(r)]) continue;
    f << r << ',' << *exits[static_cast<std::size_t>(r)] << "\n";
    vals.push_back(static_cast<double>(*exits[static_cast<std::size_t>(r)]));
  }
  auto j = base_json(cfg);
  j["delta"] = cfg.delta;
  j["depth"] = cfg.depth;
  j["evaluated"] = vals.size();
  if (!vals.empty()) {
    j["mean"] = mean(vals);
    j["min"] = *std::min_element(vals.begin(), vals.end());
    j["q10"] = quantile(vals, 0.1);
    j["median"] = quantile(vals, 0.5);
  }
  to_file(cfg.out_dir, "delta_exits.json", j);
  std::cout << "delta-exits evaluated on " << vals.size() << " replicas -> "
            << cfg.out_dir << "\n";
  return 0;
}

int cmd_diag_skeleton(RunConfig cfg) {
  const TreeMode mode = tree_mode_from_string(cfg.mode);
  const int explore = cfg.kmax > 0 ? cfg.kmax : cfg.depth + 4;
  std::vector<SkeletonLabel> labels(static_cast<std::size_t>(cfg.replicas));
  run_parallel(cfg.replicas, cfg.threads, [&](int r) {
    const std::uint64_t seed = cfg.seed ^ static_cast<std::uint64_t>(r);
    std::optional<GffArena> arena;
    if (cfg.horizon_g > 0) {
      SurvivalOptions so;
      so.size_threshold = cfg.size_threshold;
      so.vertex_cap = cfg.vertex_cap;
      so.root_condition = cfg.root_condition;
      auto s = survival_sample(cfg.d, cfg.h, mode, cfg.horizon_g, seed, so);
      if (!s.accepted) return;
      arena = std::move(s.arena);
    } else {
      arena.emplace(cfg.d, mode, cfg.root_condition, seed, cfg.vertex_cap);
    }
    ClusterView cl{&*arena, cfg.h};
    labels[static_cast<std::size_t>(r)] = skeleton_label(cl, cfg.depth, explore);
  });
  std::size_t skel = 0, bush = 0, unknown = 0;
  std::map<std::uint64_t, std::uint64_t> hist;
  for (const auto& lab : labels) {
    skel += lab.count(SkeletonTag::skeleton);
    bush += lab.count(SkeletonTag::bush);
    unknown += lab.count(SkeletonTag::unknown);
    for (auto b : lab.bush_sizes) ++hist[b];
  }
  fs::create_directories(cfg.out_dir);
  std::ofstream f(fs::path(cfg.out_dir) / "bush_sizes.csv", std::ios::binary);
  f << provenance_line(cfg) << "\nsize,count\n";
  for (const auto& [size, count] : hist) f << size << ',' << count << "\n";
  auto j = base_json(cfg);
  j["horizon_D"] = cfg.depth;
  j["explored_depth"] = explore;
  j["skeleton"] = skel;
  j["bush"] = bush;
  j["unknown"] = unknown;
  const double tot = static_cast<double>(skel + bush + unknown);
  if (tot > 0) j["bush_fraction"] = static_cast<double>(bush) / tot;
  to_file(cfg.out_dir, "skeleton.json", j);
  std::cout << "skeleton=" << skel << " bush=" << bush << " unknown=" << unknown
            << " -> " << cfg.out_dir << "\n";
  return 0;
}

int cmd_diag_drift(RunConfig cfg, const std::string& in) {
  const auto chains = chains_from_rows(read_renewals_csv(in));
  const auto rep = drift_check(chains, cfg.phi_threshold);
  auto j = base_json(cfg);
  j["pairs"] = rep.pairs;
  j["phi_threshold"] = rep.phi_threshold;
  j["phi_increment_mean"] = rep.phi_increment_mean;
  j["phi_increment_se"] = rep.phi_increment_se;
  j["phi_n"] = rep.phi_n;
  j["phi_drift_negative"] = rep.phi_drift_negative;
  j["fitted_c"] = rep.fitted_c;
  j["v_contraction_pass"] = rep.v_contraction_pass;
  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  for (const auto& b : rep.v_bins)
    bins.push_back(
        {{"center", b.center}, {"next_mean", b.next_mean},
         {"next_se", b.next_se}, {"count", b.count}});
  j["v_bins"] = bins;
  to_file(cfg.out_dir, "drift.json", j);
  std::cout << "phi drift "
            << (rep.phi_drift_negative ? "negative" : "NOT negative")
            << ", V contraction " << (rep.v_contraction_pass ? "pass" : "FAIL")
            << "\n";
  return 0;
}

int cmd_diag_obstruction(RunConfig cfg) {
  std::vector<std::pair<double, double>> vals;
  for (double z = cfg.h; z <= cfg.h + cfg.zmax + 1e-12; z += 0.5)
    vals.emplace_back(z, obstruction_integral(cfg.d, cfg.h, z));
  fs::create_directories(cfg.out_dir);
  std::ofstream f(fs::path(cfg.out_dir) / "obstruction.csv", std::ios::binary);
  f << provenance_line(cfg) << "\nz,I\n";
  for (const auto& [z, I] : vals) f << fmt_double(z) << ',' << fmt_double(I) << "\n";
  bool mono_all = true, mono_after_peak = true;
  std::size_t peak = 0;
  for (std::size_t i = 1; i < vals.size(); ++i) {
    if (vals[i].second >= vals[i - 1].second) mono_all = false;
    if (vals[i].second > vals[peak].second) peak = i;
  }
  for (std::size_t i = peak + 1; i < vals.size(); ++i)
    if (vals[i].second >= vals[i - 1].second) mono_after_peak = false;
  auto j = base_json(cfg);
  j["d"] = cfg.d;
  j["h"] = cfg.h;
  j["monotone_decreasing"] = mono_all;
  j["monotone_after_peak"] = mono_after_peak;
  j["ratio_last_to_first"] = vals.back().second / vals.front().second;
  to_file(cfg.out_dir, "obstruction.json", j);
  std::cout << "I decreases monotonically: " << (mono_all ? "yes" : "no")
            << " (after peak: " << (mono_after_peak ? "yes" : "no")
            << "), I_last/I_first = "
            << vals.back().second / vals.front().second << "\n";
  return 0;
}

int cmd_report(RunConfig cfg, const std::string& in, bool strict) {
  const auto data = load_report_data(in);
  const auto vs = evaluate_verdicts(data);
  write_report(data, vs, cfg.out_dir);
  for (const auto& x : vs)
    std::cout << "[" << x.status << "] " << x.id << ". " << x.name
              << (x.note.empty() ? "" : "  -- " + x.note) << "\n";
  if (strict && any_failed(vs)) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  if (const char* env = std::getenv("GFFWALK_OUT")) cfg.out_dir = env;

  // --config file.json provides defaults; explicit flags override them.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream f(argv[i + 1]);
      if (!f) {
        std::cerr << "error: cannot open config file " << argv[i + 1] << "\n";
        return 1;
      }
      try {
        nlohmann::json j;
        f >> j;
        from_json(j, cfg);
      } catch (const std::exception& e) {
        std::cerr << "error: bad config file: " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{
      "Level-set percolation of the Gaussian free field on d-regular trees:\n"
      "cluster/walk simulation, renewal analysis and spectral cross-checks."};
  app.require_subcommand(1);
  // --h is a domain option here; keep only the long help flag everywhere
  app.set_help_flag("--help", "print help and exit");
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with default options")
      ->expected(1);
  const auto sub_of = [](CLI::App* parent, const char* name, const char* desc) {
    auto* s = parent->add_subcommand(name, desc);
    s->set_help_flag("--help", "print help and exit");
    s->fallthrough();  // lets --config (a parent option) follow the subcommand
    return s;
  };

  double root_a = 0.0;
  std::string in_path;
  bool strict = false;
  double s_hat_in = 0.0;
  double phi_thr_in = 0.0;

  const auto add_domain = [&](CLI::App* sub, bool with_mode = true) {
    sub->add_option("--d", cfg.d, "tree degree (>= 3)")->check(CLI::Range(3, 64));
    sub->add_option("--h", cfg.h, "level-set height");
    if (with_mode)
      sub->add_option("--mode", cfg.mode, "full|plus")
          ->check(CLI::IsMember({"full", "plus"}));
    sub->add_option("--out", cfg.out_dir, "output directory");
  };
  const auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--grid", cfg.grid_m, "quadrature nodes");
    sub->add_option("--trunc", cfg.trunc, "grid truncation T (0 = auto)");
    sub->add_option("--tol", cfg.tol, "solver tolerance");
    sub->add_option("--max-iter", cfg.max_iter, "fixed-point iteration cap");
  };
  const auto add_mc = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--replicas", cfg.replicas, "number of replicas");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    sub->add_option("--condition-g", cfg.horizon_g,
                    "survival-conditioning horizon (0 = off)");
    sub->add_option("--size-threshold", cfg.size_threshold,
                    "generation size that declares survival early");
    sub->add_option("--vertex-cap", cfg.vertex_cap, "per-replica memory guard");
    sub->add_option("--max-rejections", cfg.max_rejections,
                    "conditioning retry budget");
    sub->add_option("--root-a", root_a, "condition the root value to a");
  };

  auto* sp = sub_of(&app, "spectral", "dominant eigenpair of L_h");
  add_domain(sp, false);
  add_grid(sp);

  auto* hs = sub_of(&app, "hstar", "critical level: lambda_{h*} = 1");
  add_domain(hs, false);
  add_grid(hs);

  auto* qh = sub_of(&app, "qh", "extinction function q_h by fixed point");
  add_domain(qh, false);
  add_grid(qh);

  auto* eta = sub_of(&app, "eta", "cluster survival probability");
  add_domain(eta);
  add_grid(eta);

  auto* sim =
      sub_of(&app, "simulate", "sample clusters and walks, write CSV suites");
  add_domain(sim);
  add_mc(sim);
  sim->add_option("--steps", cfg.steps, "walk steps per replica");
  sim->add_option("--kmax", cfg.kmax, "generations to record (no conditioning)");
  sim->add_option("--confirm-w", cfg.confirm_margin,
                  "renewal confirmation margin W");

  auto* rs = sub_of(&app, "renewal-stats", "summaries of a renewal CSV");
  rs->add_option("--in", in_path, "renewals.csv path")->required();
  rs->add_option("--out", cfg.out_dir, "output directory");

  auto* speed = sub_of(&app, "speed", "direct and renewal-ratio speeds");
  speed->add_option("--in", in_path, "directory with trajectories/renewals CSVs")
      ->required();
  speed->add_option("--out", cfg.out_dir, "output directory");

  auto* clt = sub_of(&app, "clt", "CLT diagnostics on a walk suite");
  clt->add_option("--in", in_path, "directory with trajectories.csv")->required();
  auto* shopt =
      clt->add_option("--s-hat", s_hat_in, "speed from an independent batch");
  clt->add_option("--out", cfg.out_dir, "output directory");

  auto* diag = sub_of(&app, "diagnostics", "transience and drift checks");
  diag->require_subcommand(1);
  auto* dex =
      sub_of(diag, "delta-exits", "count escape offers along deep rays");
  add_domain(dex);
  add_mc(dex);
  dex->add_option("--depth", cfg.depth, "ray height k");
  dex->add_option("--delta", cfg.delta, "escape-probability threshold");
  dex->add_option("--trials", cfg.trials, "nested MC trials per subtree");
  dex->add_option("--horizon", cfg.mc_horizon, "nested MC step horizon");

  auto* skel = sub_of(diag, "skeleton", "skeleton/bush decomposition");
  add_domain(skel);
  add_mc(skel);
  skel->add_option("--depth", cfg.depth, "offspring horizon D");
  skel->add_option("--explore", cfg.kmax, "ball radius to explore");

  auto* drift = sub_of(diag, "drift", "renewal-chain drift checks");
  drift->add_option("--in", in_path, "renewals.csv path")->required();
  auto* phiopt = drift->add_option("--phi-threshold", phi_thr_in,
                                   "fixed phi cut (default: top decile)");
  drift->add_option("--out", cfg.out_dir, "output directory");

  auto* obs = sub_of(diag, "obstruction",
                                   "invariant-measure obstruction integral");
  add_domain(obs, false);
  obs->add_option("--zmax", cfg.zmax, "evaluate I_z for z in [h, h+zmax]");

  auto* rep = sub_of(&app, "report", "verdict table over an output dir");
  rep->add_option("--in", in_path, "input directory")->required();
  rep->add_option("--out", cfg.out_dir, "output directory");
  rep->add_flag("--strict", strict, "exit 3 if any evaluated verdict fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->count("--root-a") || dex->count("--root-a") ||
        skel->count("--root-a"))
      cfg.root_condition = root_a;
    if (*shopt) cfg.s_hat = s_hat_in;
    if (*phiopt) cfg.phi_threshold = phi_thr_in;

    if (*sp) return cfg.command = "spectral", cmd_spectral(cfg);
    if (*hs) return cfg.command = "hstar", cmd_hstar(cfg);
    if (*qh) return cfg.command = "qh", cmd_qh(cfg);
    if (*eta) return cfg.command = "eta", cmd_eta(cfg);
    if (*sim) return cfg.command = "simulate", cmd_simulate(cfg);
    if (*rs) return cfg.command = "renewal-stats", cmd_renewal_stats(cfg, in_path);
    if (*speed) return cfg.command = "speed", cmd_speed(cfg, in_path);
    if (*clt) return cfg.command = "clt", cmd_clt(cfg, in_path);
    if (*dex) return cfg.command = "delta-exits", cmd_diag_delta_exits(cfg);
    if (*skel) return cfg.command = "skeleton", cmd_diag_skeleton(cfg);
    if (*drift) return cfg.command = "drift", cmd_diag_drift(cfg, in_path);
    if (*obs) return cfg.command = "obstruction", cmd_diag_obstruction(cfg);
    if (*rep) return cfg.command = "report", cmd_report(cfg, in_path, strict);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
