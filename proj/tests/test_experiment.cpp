// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gffwalk/experiment.hpp"

using namespace gffwalk;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_sim_config() {
  RunConfig cfg;
  cfg.command = "simulate";
  cfg.d = 3;
  cfg.h = 0.0;
  cfg.mode = "plus";
  cfg.seed = 42;
  cfg.replicas = 8;
  cfg.steps = 4000;
  cfg.kmax = 10;
  cfg.horizon_g = 12;
  cfg.size_threshold = 500;
  cfg.confirm_margin = 200;
  return cfg;
}

}  // namespace

TEST_CASE("config hash: sensitive to physics, blind to threads and paths") {
  RunConfig a = small_sim_config();
  RunConfig b = a;
  b.threads = 7;
  b.out_dir = "/elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.h = 0.5;
  CHECK(config_hash(a) != config_hash(b));
  RunConfig c = a;
  c.seed = 43;
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("config JSON round trip") {
  RunConfig a = small_sim_config();
  a.root_condition = 1.25;
  nlohmann::ordered_json j;
  to_json(j, a);
  RunConfig b;
  from_json(nlohmann::json::parse(j.dump()), b);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(b.root_condition == 1.25);
}

TEST_CASE("simulate outputs are byte-identical across runs and thread counts") {
  const auto base = fs::temp_directory_path() / "gffwalk_det";
  fs::remove_all(base);
  RunConfig cfg = small_sim_config();

  cfg.threads = 1;
  cfg.out_dir = (base / "a").string();
  write_simulate_outputs(run_simulate(cfg), cfg.out_dir);

  cfg.threads = 1;
  cfg.out_dir = (base / "b").string();
  write_simulate_outputs(run_simulate(cfg), cfg.out_dir);

  cfg.threads = 4;
  cfg.out_dir = (base / "c").string();
  write_simulate_outputs(run_simulate(cfg), cfg.out_dir);

  for (const char* name :
       {"run.json", "trajectories.csv", "generations.csv", "renewals.csv"}) {
    const auto ref = slurp(base / "a" / name);
    CHECK(ref == slurp(base / "b" / name));
    CHECK(ref == slurp(base / "c" / name));
    CHECK(!ref.empty());
  }
  fs::remove_all(base);
}

TEST_CASE("zero replicas: empty outputs, no error") {
  RunConfig cfg = small_sim_config();
  cfg.replicas = 0;
  auto out = run_simulate(cfg);
  CHECK(out.reps.empty());
  const auto dir = fs::temp_directory_path() / "gffwalk_empty";
  fs::remove_all(dir);
  write_simulate_outputs(out, dir.string());
  CHECK(fs::exists(dir / "run.json"));
  fs::remove_all(dir);
}

TEST_CASE("renewal CSV round trip preserves the estimator inputs") {
  RunConfig cfg = small_sim_config();
  const auto dir = fs::temp_directory_path() / "gffwalk_rt";
  fs::remove_all(dir);
  auto out = run_simulate(cfg);
  write_simulate_outputs(out, dir.string());

  const auto rows = read_renewals_csv((dir / "renewals.csv").string());
  REQUIRE(!rows.empty());
  const auto chains_file = chains_from_rows(rows);
  const auto chains_mem = per_replica_chains(out);
  REQUIRE(chains_file.size() == chains_mem.size());
  for (std::size_t c = 0; c < chains_mem.size(); ++c) {
    REQUIRE(chains_file[c].size() == chains_mem[c].size());
    for (std::size_t i = 0; i < chains_mem[c].size(); ++i) {
      CHECK(chains_file[c][i].phi == chains_mem[c][i].phi);
      CHECK(chains_file[c][i].duration == chains_mem[c][i].duration);
      CHECK(chains_file[c][i].interval_height == chains_mem[c][i].interval_height);
      CHECK(chains_file[c][i].V == chains_mem[c][i].V);
    }
  }

  const auto summaries = read_trajectories_csv((dir / "trajectories.csv").string());
  CHECK(summaries.size() == walk_summaries(out).size());

  const auto gens = read_generations_csv((dir / "generations.csv").string());
  CHECK(gens.tables.size() == generation_tables(out).size());
  fs::remove_all(dir);
}

TEST_CASE("schema mismatch names the offending column") {
  const auto dir = fs::temp_directory_path() / "gffwalk_schema";
  fs::create_directories(dir);
  const auto path = dir / "bad.csv";
  {
    std::ofstream f(path);
    f << "# gffwalk test\n";
    f << "replica,i,tau,height,phi_entry,height_gain,interval_height,V,censored\n";
    f << "0,1,5,3,0.5,1,1,2.25,0\n";  // no duration column
  }
  try {
    read_renewals_csv(path.string());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("duration") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("pooled intervals drop the first complete interval per replica") {
  RunConfig cfg = small_sim_config();
  auto out = run_simulate(cfg);
  std::size_t total = 0, kept = 0;
  for (const auto& r : out.reps) {
    total += r.chain.size();
    kept += r.chain.size() > 1 ? r.chain.size() - 1 : 0;
  }
  CHECK(pooled_intervals(out).size() == kept);
  CHECK(kept < total);
}

TEST_CASE("per-replica failure is recorded, run continues") {
  RunConfig cfg = small_sim_config();
  cfg.vertex_cap = 40;  // tiny arena cap: growth trips the memory guard
  cfg.horizon_g = 0;
  cfg.kmax = 30;
  cfg.steps = 0;
  cfg.replicas = 6;
  auto out = run_simulate(cfg);
  int failed = 0;
  for (const auto& r : out.reps) failed += !r.error.empty();
  CHECK(failed > 0);
  CHECK(out.reps.size() == 6);
}
