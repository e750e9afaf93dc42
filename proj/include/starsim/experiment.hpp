#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "starsim/marl.hpp"
#include "starsim/scenario.hpp"

namespace starsim::experiment {

// A declarative check evaluated over the result table. Kinds:
//   order_mean      seed-averaged metric is non-increasing along `order` over
//                   `dimension` (algorithm | baseline | policy); strict=true
//                   demands strict decrease for every adjacent pair
//   greater_mean    seed-averaged metric of dimension==left exceeds (or ties,
//                   unless strict) dimension==right
//   interior_argmax argmax of the seed-averaged metric over the axis is not
//                   the last axis value (and not the first if not_first)
//   axis_ge_mean    seed-averaged metric at axis==left_axis >= at right_axis
//   axis_ge_per_seed  metric at axis==left >= at axis==right, per seed, in at
//                   least min_seeds seeds
//   improves        final-window reward exceeds the first-window reward, per
//                   seed, in at least min_seeds seeds
struct Assertion {
  std::string name;
  std::string kind;
  std::string metric = "final_ee";  // final_ee | final_window_reward | mean_rate | mean_power
  std::string dimension;            // for order_mean / greater_mean
  std::vector<std::string> order;   // for order_mean
  std::string left, right;          // for greater_mean
  double left_axis = 0.0, right_axis = 0.0;  // for axis_ge_per_seed
  std::optional<double> axis_value;          // restrict to one axis point
  std::map<std::string, std::string> filter; // algorithm / baseline / policy
  int min_seeds = 0;
  bool strict = false;
  bool not_first = false;           // for interior_argmax

  static Assertion from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ExperimentPlan {
  scenario::ScenarioConfig base;
  marl::Hyperparams hyper;
  std::string sweep_axis = "none";  // none | users | elements | surfaces | antennas | spacing
  std::vector<double> axis_values = {0.0};
  std::vector<marl::Algorithm> algorithms = {marl::Algorithm::MAGAR};
  std::vector<marl::Baseline> baselines = {marl::Baseline::ES};
  std::vector<marl::OnOffPolicy> policies = {marl::OnOffPolicy::OPTIMIZED};
  std::vector<std::uint64_t> seeds = {1};
  std::vector<Assertion> assertions;
  bool save_traces = false;

  void validate() const;
  static ExperimentPlan from_json(const nlohmann::json& j);
  static ExperimentPlan from_json_file(const std::string& path);
  nlohmann::json to_json() const;
};

// Base config with one sweep-axis value applied. Sweeping users or surfaces
// re-spreads the total user count as evenly as possible across regions.
scenario::ScenarioConfig apply_axis(const scenario::ScenarioConfig& base,
                                    const std::string& axis, double value);

struct ResultRow {
  double axis_value = 0.0;
  marl::Algorithm algorithm = marl::Algorithm::MAGAR;
  marl::Baseline baseline = marl::Baseline::ES;
  marl::OnOffPolicy policy = marl::OnOffPolicy::OPTIMIZED;
  std::uint64_t seed = 0;
  bool ok = true;                    // false when the run diverged
  double final_ee = 0.0;             // final-window means (last 10% of slots)
  double mean_rate_bps = 0.0;
  double mean_power_watt = 0.0;
  double first_window_reward = 0.0;  // first 10% of slots
  double final_window_reward = 0.0;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  void sort_canonical();
  std::string to_csv() const;
  static ResultTable from_csv(const std::string& text);
};

// Executes every (axis, algorithm, baseline, policy, seed) tuple. jobs <= 0
// means one worker per hardware thread. out_dir, when given, receives per-run
// trace CSVs if the plan asks for them.
ResultTable run_plan(const ExperimentPlan& plan, int jobs = 0,
                     const std::string& out_dir = "");

struct AssertionResult {
  std::string name;
  bool pass = false;
  std::string details;
};

struct Summary {
  struct Group {
    double axis_value;
    std::string algorithm, baseline, policy;
    int n_seeds;
    double mean_ee, std_ee, mean_rate, mean_power;
  };
  std::vector<Group> groups;
  std::vector<AssertionResult> assertions;
  bool all_assertions_pass = true;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

Summary summarize(const ExperimentPlan& plan, const ResultTable& table);

// File layout used by the CLI: results.csv, manifest.json, summary.json.
void write_outputs(const std::string& out_dir, const ExperimentPlan& plan,
                   const ResultTable& table, const Summary& summary);

}  // namespace starsim::experiment
