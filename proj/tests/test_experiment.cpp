#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "starsim/experiment.hpp"

using namespace starsim;

namespace {

experiment::ExperimentPlan tiny_plan() {
  experiment::ExperimentPlan plan;
  plan.base.v_surfaces = 1;
  plan.base.i_regions = 2;
  plan.base.m_antennas = 2;
  plan.base.n_elements = 4;
  plan.base.users_per_region = {1, 1};
  plan.hyper.episodes = 1;
  plan.hyper.slots_per_episode = 20;
  plan.hyper.hidden_sizes = {8};
  plan.hyper.batch_size = 8;
  plan.hyper.replay_capacity = 64;
  return plan;
}

experiment::ResultRow row(double axis, marl::Algorithm alg, marl::Baseline base,
                          marl::OnOffPolicy pol, std::uint64_t seed, double ee) {
  experiment::ResultRow r;
  r.axis_value = axis;
  r.algorithm = alg;
  r.baseline = base;
  r.policy = pol;
  r.seed = seed;
  r.final_ee = ee;
  r.mean_rate_bps = ee * 2.0;
  r.mean_power_watt = 2.0;
  r.first_window_reward = ee * 0.5;
  r.final_window_reward = ee;
  return r;
}

}  // namespace

TEST_CASE("plan row counts") {
  auto plan = tiny_plan();
  auto table = experiment::run_plan(plan, 1);
  CHECK(table.rows.size() == 1);

  // a five-point axis with three policies gives 15 rows per seed
  plan.sweep_axis = "elements";
  plan.axis_values = {4, 8, 16, 32, 64};
  plan.policies = {marl::OnOffPolicy::OPTIMIZED, marl::OnOffPolicy::HALF_ON,
                   marl::OnOffPolicy::ALL_ON};
  plan.hyper.slots_per_episode = 5;
  table = experiment::run_plan(plan, 2);
  CHECK(table.rows.size() == 15);
  for (const auto& r : table.rows) CHECK(r.ok);
}

TEST_CASE("apply_axis") {
  scenario::ScenarioConfig base;
  const auto users = experiment::apply_axis(base, "users", 7);
  CHECK(users.total_users() == 7);
  CHECK(users.users_per_region.size() == 4);
  CHECK(users.users_per_region[0] == 2);
  CHECK(users.users_per_region[3] == 1);

  const auto surf = experiment::apply_axis(base, "surfaces", 2);
  CHECK(surf.v_surfaces == 2);
  CHECK(surf.i_regions == 3);
  CHECK(surf.total_users() == base.total_users());

  const auto sp = experiment::apply_axis(base, "spacing", 50.0);
  CHECK(sp.surface_spacing_m == 50.0);
  CHECK_THROWS_AS(experiment::apply_axis(base, "bogus", 1.0), std::invalid_argument);
}

TEST_CASE("plan json validation") {
  nlohmann::json j{{"unknown_field", 1}};
  CHECK_THROWS_AS(experiment::ExperimentPlan::from_json(j), std::invalid_argument);

  nlohmann::json bad{{"baselines", {"NONE"}}, {"policies", {"ALL_ON"}}};
  CHECK_THROWS_AS(experiment::ExperimentPlan::from_json(bad), std::invalid_argument);

  nlohmann::json ok{{"algorithms", {"MAGAR", "QLEARNING"}},
                    {"baselines", {"ES", "NONE"}},
                    {"seeds", {1, 2}}};
  const auto plan = experiment::ExperimentPlan::from_json(ok);
  CHECK(plan.algorithms.size() == 2);
  CHECK(plan.baselines.size() == 2);
  const auto round = experiment::ExperimentPlan::from_json(plan.to_json());
  CHECK(round.seeds == plan.seeds);
}

TEST_CASE("results csv round trip") {
  experiment::ResultTable table;
  table.rows.push_back(row(16, marl::Algorithm::MAGAR, marl::Baseline::ES,
                           marl::OnOffPolicy::OPTIMIZED, 3, 1.25e8));
  table.rows.push_back(row(16, marl::Algorithm::QLEARNING, marl::Baseline::MS,
                           marl::OnOffPolicy::ALL_ON, 4, 0.5e8));
  table.rows[1].ok = false;
  const auto text = table.to_csv();
  const auto back = experiment::ResultTable::from_csv(text);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].final_ee == table.rows[0].final_ee);
  CHECK(back.rows[0].seed == 3);
  CHECK(back.rows[1].ok == false);
  CHECK(back.to_csv() == text);
}

TEST_CASE("summary means and sample std") {
  experiment::ExperimentPlan plan = tiny_plan();
  experiment::ResultTable table;
  table.rows.push_back(row(0, marl::Algorithm::MAGAR, marl::Baseline::ES,
                           marl::OnOffPolicy::OPTIMIZED, 1, 1.0));
  auto s1 = experiment::summarize(plan, table);
  REQUIRE(s1.groups.size() == 1);
  CHECK(s1.groups[0].std_ee == 0.0);  // single seed

  table.rows.push_back(row(0, marl::Algorithm::MAGAR, marl::Baseline::ES,
                           marl::OnOffPolicy::OPTIMIZED, 2, 3.0));
  auto s2 = experiment::summarize(plan, table);
  REQUIRE(s2.groups.size() == 1);
  CHECK(s2.groups[0].mean_ee == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s2.groups[0].std_ee == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  // failed rows never contribute
  auto failed = row(0, marl::Algorithm::MAGAR, marl::Baseline::ES,
                    marl::OnOffPolicy::OPTIMIZED, 5, 100.0);
  failed.ok = false;
  table.rows.push_back(failed);
  CHECK(experiment::summarize(plan, table).groups[0].mean_ee == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("assertion kinds over a synthetic table") {
  experiment::ExperimentPlan plan = tiny_plan();
  experiment::ResultTable table;
  using A = marl::Algorithm;
  using B = marl::Baseline;
  using P = marl::OnOffPolicy;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    table.rows.push_back(row(16, A::MAGAR, B::ES, P::OPTIMIZED, seed, 10.0 + seed));
    table.rows.push_back(row(16, A::MADQN, B::ES, P::OPTIMIZED, seed, 8.0 + seed));
    table.rows.push_back(row(16, A::MAGAR, B::ES, P::HALF_ON, seed, 9.0 + seed));
    table.rows.push_back(row(16, A::MAGAR, B::ES, P::ALL_ON, seed, 7.0 + seed));
    // an axis bump so interior/per-seed kinds have something to chew on
    table.rows.push_back(row(8, A::MAGAR, B::ES, P::OPTIMIZED, seed, 9.0 + seed));
    table.rows.push_back(row(32, A::MAGAR, B::ES, P::OPTIMIZED, seed, 6.0 + seed));
  }

  experiment::Assertion order;
  order.name = "policy order";
  order.kind = "order_mean";
  order.dimension = "policy";
  order.order = {"OPTIMIZED", "HALF_ON", "ALL_ON"};
  order.axis_value = 16;
  order.filter = {{"algorithm", "MAGAR"}};
  plan.assertions.push_back(order);

  experiment::Assertion greater;
  greater.name = "magar beats madqn";
  greater.kind = "greater_mean";
  greater.dimension = "algorithm";
  greater.left = "MAGAR";
  greater.right = "MADQN";
  greater.strict = true;
  greater.axis_value = 16;
  greater.filter = {{"policy", "OPTIMIZED"}};
  plan.assertions.push_back(greater);

  experiment::Assertion interior;
  interior.name = "interior argmax";
  interior.kind = "interior_argmax";
  interior.filter = {{"algorithm", "MAGAR"}, {"policy", "OPTIMIZED"}};
  plan.assertions.push_back(interior);

  experiment::Assertion per_seed;
  per_seed.name = "16 beats 8 per seed";
  per_seed.kind = "axis_ge_per_seed";
  per_seed.left_axis = 16;
  per_seed.right_axis = 8;
  per_seed.min_seeds = 3;
  per_seed.filter = {{"algorithm", "MAGAR"}, {"policy", "OPTIMIZED"}};
  plan.assertions.push_back(per_seed);

  experiment::Assertion improves;
  improves.name = "it improves";
  improves.kind = "improves";
  improves.min_seeds = 3;
  improves.filter = {{"algorithm", "MAGAR"}, {"policy", "OPTIMIZED"}};
  improves.axis_value = 16;
  plan.assertions.push_back(improves);

  experiment::Assertion failing;
  failing.name = "all_on cannot beat optimized";
  failing.kind = "greater_mean";
  failing.dimension = "policy";
  failing.left = "ALL_ON";
  failing.right = "OPTIMIZED";
  failing.strict = true;
  failing.axis_value = 16;
  plan.assertions.push_back(failing);

  const auto summary = experiment::summarize(plan, table);
  REQUIRE(summary.assertions.size() == 6);
  CHECK(summary.assertions[0].pass);
  CHECK(summary.assertions[1].pass);
  CHECK(summary.assertions[2].pass);  // argmax at axis 16, interior
  CHECK(summary.assertions[3].pass);
  CHECK(summary.assertions[4].pass);
  CHECK_FALSE(summary.assertions[5].pass);
  CHECK_FALSE(summary.all_assertions_pass);

  const auto j = summary.to_json();
  CHECK(j.at("assertions").size() == 6);
  CHECK_FALSE(j.at("all_assertions_pass").get<bool>());
  CHECK(summary.to_text().find("[FAIL] all_on cannot beat optimized") != std::string::npos);
}

TEST_CASE("rerunning a plan reproduces the table byte for byte") {
  auto plan = tiny_plan();
  plan.seeds = {1, 2};
  plan.algorithms = {marl::Algorithm::QLEARNING};
  const auto t1 = experiment::run_plan(plan, 2);
  const auto t2 = experiment::run_plan(plan, 1);  // different worker count, same bytes
  CHECK(t1.to_csv() == t2.to_csv());
}

TEST_CASE("no-surface rows carry only the BS power") {
  auto plan = tiny_plan();
  plan.baselines = {marl::Baseline::NONE};
  plan.hyper.slots_per_episode = 10;
  const auto table = experiment::run_plan(plan, 1);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].ok);
  // every element is pinned off, so total power is exactly the BS budget
  CHECK(table.rows[0].mean_power_watt ==
        doctest::Approx(plan.base.bs_power_budget_watt()).epsilon(1e-12));
}

TEST_CASE("write_outputs produces the three files") {
  auto plan = tiny_plan();
  plan.hyper.slots_per_episode = 5;
  const auto table = experiment::run_plan(plan, 1);
  const auto summary = experiment::summarize(plan, table);
  const auto dir = std::filesystem::temp_directory_path() / "starsim_outputs_test";
  std::filesystem::remove_all(dir);
  experiment::write_outputs(dir.string(), plan, table, summary);
  CHECK(std::filesystem::exists(dir / "results.csv"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "summary.json"));

  std::ifstream mf(dir / "manifest.json");
  nlohmann::json manifest;
  mf >> manifest;
  const auto back = experiment::ExperimentPlan::from_json(manifest.at("plan"));
  CHECK(back.seeds == plan.seeds);
  std::filesystem::remove_all(dir);
}
