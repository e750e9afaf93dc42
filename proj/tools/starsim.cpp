// Experiment front-end: runs plan files, summarizes result directories, and
// exposes a quick self-check of the core invariants.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "starsim/channel.hpp"
#include "starsim/experiment.hpp"
#include "starsim/marl.hpp"
#include "starsim/scenario.hpp"

namespace {

using namespace starsim;

void apply_config_overrides(scenario::ScenarioConfig& config, const CLI::App& app) {
  // CLI flags carry the same names as the JSON config keys.
  auto get_int = [&](const char* name, int& field) {
    if (app.count(name) > 0) field = app.get_option(name)->as<int>();
  };
  auto get_double = [&](const char* name, double& field) {
    if (app.count(name) > 0) field = app.get_option(name)->as<double>();
  };
  get_int("--m_antennas", config.m_antennas);
  get_int("--n_elements", config.n_elements);
  if (app.count("--v_surfaces") > 0) {
    config.v_surfaces = app.get_option("--v_surfaces")->as<int>();
    config.i_regions = config.v_surfaces + 1;
    const int total = config.total_users();
    config.users_per_region.assign(config.i_regions, total / config.i_regions);
    for (int i = 0; i < total % config.i_regions; ++i) config.users_per_region[i] += 1;
  }
  get_int("--i_regions", config.i_regions);
  get_double("--bandwidth_hz", config.bandwidth_hz);
  get_double("--carrier_ghz", config.carrier_ghz);
  get_double("--bs_power_budget_dbm", config.bs_power_budget_dbm);
  get_double("--element_power_dbm", config.element_power_dbm);
  get_double("--rician_factor", config.rician_factor);
  get_double("--surface_spacing_m", config.surface_spacing_m);
  if (app.count("--users_per_region") > 0) {
    config.users_per_region = app.get_option("--users_per_region")->as<std::vector<int>>();
  }
  if (app.count("--master_seed") > 0) {
    config.master_seed = app.get_option("--master_seed")->as<std::uint64_t>();
  }
}

void add_config_flags(CLI::App* cmd) {
  cmd->add_option("--m_antennas", "BS antenna count");
  cmd->add_option("--n_elements", "elements per surface");
  cmd->add_option("--v_surfaces", "surface count (re-spreads users over V+1 regions)");
  cmd->add_option("--i_regions", "region count (must equal v_surfaces + 1)");
  cmd->add_option("--users_per_region", "per-region user counts")->delimiter(',');
  cmd->add_option("--bandwidth_hz", "bandwidth in Hz");
  cmd->add_option("--carrier_ghz", "carrier frequency in GHz");
  cmd->add_option("--bs_power_budget_dbm", "BS power budget in dBm");
  cmd->add_option("--element_power_dbm", "per-element power in dBm");
  cmd->add_option("--rician_factor", "Rician K factor (linear)");
  cmd->add_option("--surface_spacing_m", "inter-surface spacing in meters");
  cmd->add_option("--master_seed", "master RNG seed");
}

int run_selftest() {
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << what << "\n";
    if (!ok) ++failures;
  };

  for (int v = 1; v <= 6; ++v) {
    const auto table = channel::enumerate_paths(v);
    check(table.size() == (1u << v) - 1,
          "path count 2^V-1 for V=" + std::to_string(v));
  }
  check(std::abs(channel::pathloss_db(28.0, 10.0) - 82.3432) < 1e-3, "pathloss(28 GHz, 10 m)");
  check(std::abs(scenario::dbm_to_watt(33.0) - 1.99526) < 1e-5 * 1.99526, "33 dBm in watts");
  check(std::abs((-174.0 + 10.0 * std::log10(1e8)) - (-94.0)) < 1e-9, "noise floor at 100 MHz");

  scenario::ScenarioConfig config;
  config.v_surfaces = 1;
  config.i_regions = 2;
  config.n_elements = 4;
  config.m_antennas = 2;
  config.users_per_region = {1, 1};
  marl::Hyperparams hyper;
  hyper.episodes = 1;
  hyper.slots_per_episode = 30;
  hyper.hidden_sizes = {16};
  hyper.batch_size = 8;
  const auto a = marl::train(config, hyper, marl::Algorithm::MAGAR);
  const auto b = marl::train(config, hyper, marl::Algorithm::MAGAR);
  bool identical = a.records.size() == b.records.size();
  for (std::size_t i = 0; identical && i < a.records.size(); ++i) {
    identical = a.records[i].global_reward == b.records[i].global_reward &&
                a.records[i].agent_actions == b.records[i].agent_actions;
  }
  check(identical, "training determinism under a fixed seed");

  bool constraints_ok = true;
  for (const auto& rec : a.records) {
    constraints_ok &= rec.total_power_watt > 0.0 && std::isfinite(rec.energy_efficiency);
  }
  check(constraints_ok, "finite metrics over a smoke run");

  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hop STAR-RIS downlink simulator and multi-agent RL trainer"};
  app.require_subcommand(1);

  std::string plan_path, out_dir, in_dir;
  int jobs = 0;
  bool traces = false;

  CLI::App* run = app.add_subcommand("run", "run an experiment plan");
  run->add_option("--plan", plan_path, "plan JSON file")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--jobs", jobs, "worker threads (0 = all cores)");
  run->add_flag("--traces", traces, "write per-run training traces");
  add_config_flags(run);

  CLI::App* summ = app.add_subcommand("summarize", "summarize an output directory");
  summ->add_option("--in", in_dir, "directory produced by run")->required();

  CLI::App* self = app.add_subcommand("selftest", "run the built-in invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto plan = experiment::ExperimentPlan::from_json_file(plan_path);
      apply_config_overrides(plan.base, *run);
      if (traces) plan.save_traces = true;
      plan.validate();
      const auto table = experiment::run_plan(plan, jobs, out_dir);
      const auto summary = experiment::summarize(plan, table);
      experiment::write_outputs(out_dir, plan, table, summary);
      std::cout << summary.to_text();
      return summary.all_assertions_pass ? 0 : 1;
    }
    if (summ->parsed()) {
      const auto dir = std::filesystem::path(in_dir);
      std::ifstream mf(dir / "manifest.json");
      if (!mf) throw std::runtime_error("summarize: missing manifest.json in '" + in_dir + "'");
      nlohmann::json manifest;
      mf >> manifest;
      const auto plan = experiment::ExperimentPlan::from_json(manifest.at("plan"));
      std::ifstream rf(dir / "results.csv");
      if (!rf) throw std::runtime_error("summarize: missing results.csv in '" + in_dir + "'");
      std::stringstream buf;
      buf << rf.rdbuf();
      const auto table = experiment::ResultTable::from_csv(buf.str());
      const auto summary = experiment::summarize(plan, table);
      {
        std::ofstream out(dir / "summary.json");
        out << summary.to_json().dump(2) << "\n";
      }
      std::cout << summary.to_text();
      return summary.all_assertions_pass ? 0 : 1;
    }
    if (self->parsed()) {
      return run_selftest();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
