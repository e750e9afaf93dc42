#include "starsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace starsim::experiment {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* kAssertionKeys[] = {
    "name", "kind", "metric", "dimension", "order", "left", "right",
    "left_axis", "right_axis", "axis_value", "filter", "min_seeds", "strict", "not_first",
};

const char* kPlanKeys[] = {
    "base_config", "hyper", "sweep_axis", "axis_values", "algorithms",
    "baselines", "policies", "seeds", "assertions", "save_traces",
};

void reject_unknown_keys(const nlohmann::json& j, const char* const* keys, std::size_t n,
                         const std::string& what) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (item.key() == keys[i]) { known = true; break; }
    }
    if (!known) throw std::invalid_argument(what + ": unknown key '" + item.key() + "'");
  }
}

}  // namespace

Assertion Assertion::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, kAssertionKeys, std::size(kAssertionKeys), "assertion");
  Assertion a;
  a.name = j.at("name").get<std::string>();
  a.kind = j.at("kind").get<std::string>();
  if (j.contains("metric")) a.metric = j.at("metric").get<std::string>();
  if (j.contains("dimension")) a.dimension = j.at("dimension").get<std::string>();
  if (j.contains("order")) a.order = j.at("order").get<std::vector<std::string>>();
  if (j.contains("left")) a.left = j.at("left").get<std::string>();
  if (j.contains("right")) a.right = j.at("right").get<std::string>();
  if (j.contains("left_axis")) a.left_axis = j.at("left_axis").get<double>();
  if (j.contains("right_axis")) a.right_axis = j.at("right_axis").get<double>();
  if (j.contains("axis_value")) a.axis_value = j.at("axis_value").get<double>();
  if (j.contains("filter")) a.filter = j.at("filter").get<std::map<std::string, std::string>>();
  if (j.contains("min_seeds")) a.min_seeds = j.at("min_seeds").get<int>();
  if (j.contains("strict")) a.strict = j.at("strict").get<bool>();
  if (j.contains("not_first")) a.not_first = j.at("not_first").get<bool>();
  return a;
}

nlohmann::json Assertion::to_json() const {
  nlohmann::json j{{"name", name}, {"kind", kind}, {"metric", metric}};
  if (!dimension.empty()) j["dimension"] = dimension;
  if (!order.empty()) j["order"] = order;
  if (!left.empty()) j["left"] = left;
  if (!right.empty()) j["right"] = right;
  if (kind == "axis_ge_per_seed") {
    j["left_axis"] = left_axis;
    j["right_axis"] = right_axis;
  }
  if (axis_value) j["axis_value"] = *axis_value;
  if (!filter.empty()) j["filter"] = filter;
  if (min_seeds > 0) j["min_seeds"] = min_seeds;
  if (strict) j["strict"] = strict;
  if (not_first) j["not_first"] = not_first;
  return j;
}

void ExperimentPlan::validate() const {
  base.validate();
  hyper.validate();
  static const char* axes[] = {"none", "users", "elements", "surfaces", "antennas", "spacing"};
  if (std::find_if(std::begin(axes), std::end(axes),
                   [&](const char* a) { return sweep_axis == a; }) == std::end(axes)) {
    throw std::invalid_argument("plan: unknown sweep axis '" + sweep_axis + "'");
  }
  if (axis_values.empty()) throw std::invalid_argument("plan: axis_values must be nonempty");
  if (algorithms.empty()) throw std::invalid_argument("plan: algorithms must be nonempty");
  if (baselines.empty()) throw std::invalid_argument("plan: baselines must be nonempty");
  if (policies.empty()) throw std::invalid_argument("plan: policies must be nonempty");
  if (seeds.empty()) throw std::invalid_argument("plan: seeds must be nonempty");
  for (marl::Baseline b : baselines) {
    if (b == marl::Baseline::NONE) {
      for (marl::OnOffPolicy p : policies) {
        if (p != marl::OnOffPolicy::OPTIMIZED) {
          throw std::invalid_argument("plan: the NONE baseline pins every element off; "
                                      "on-off policies cannot be combined with it");
        }
      }
    }
  }
  for (double v : axis_values) {
    apply_axis(base, sweep_axis, v).validate();
  }
}

ExperimentPlan ExperimentPlan::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, kPlanKeys, std::size(kPlanKeys), "plan");
  ExperimentPlan p;
  if (j.contains("base_config")) p.base = scenario::ScenarioConfig::from_json(j.at("base_config"));
  if (j.contains("hyper")) p.hyper = marl::Hyperparams::from_json(j.at("hyper"));
  if (j.contains("sweep_axis")) p.sweep_axis = j.at("sweep_axis").get<std::string>();
  if (j.contains("axis_values")) p.axis_values = j.at("axis_values").get<std::vector<double>>();
  if (j.contains("algorithms")) {
    p.algorithms.clear();
    for (const auto& s : j.at("algorithms")) p.algorithms.push_back(marl::algorithm_from_string(s.get<std::string>()));
  }
  if (j.contains("baselines")) {
    p.baselines.clear();
    for (const auto& s : j.at("baselines")) p.baselines.push_back(marl::baseline_from_string(s.get<std::string>()));
  }
  if (j.contains("policies")) {
    p.policies.clear();
    for (const auto& s : j.at("policies")) p.policies.push_back(marl::policy_from_string(s.get<std::string>()));
  }
  if (j.contains("seeds")) p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("assertions")) {
    for (const auto& a : j.at("assertions")) p.assertions.push_back(Assertion::from_json(a));
  }
  if (j.contains("save_traces")) p.save_traces = j.at("save_traces").get<bool>();
  p.validate();
  return p;
}

ExperimentPlan ExperimentPlan::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("plan: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

nlohmann::json ExperimentPlan::to_json() const {
  nlohmann::json algs = nlohmann::json::array();
  for (auto a : algorithms) algs.push_back(marl::to_string(a));
  nlohmann::json bases = nlohmann::json::array();
  for (auto b : baselines) bases.push_back(marl::to_string(b));
  nlohmann::json pols = nlohmann::json::array();
  for (auto p : policies) pols.push_back(marl::to_string(p));
  nlohmann::json asrt = nlohmann::json::array();
  for (const auto& a : assertions) asrt.push_back(a.to_json());
  return nlohmann::json{
      {"base_config", base.to_json()},
      {"hyper", hyper.to_json()},
      {"sweep_axis", sweep_axis},
      {"axis_values", axis_values},
      {"algorithms", algs},
      {"baselines", bases},
      {"policies", pols},
      {"seeds", seeds},
      {"assertions", asrt},
      {"save_traces", save_traces},
  };
}

namespace {

std::vector<int> spread_users(int total, int regions) {
  std::vector<int> out(regions, total / regions);
  for (int i = 0; i < total % regions; ++i) out[i] += 1;
  return out;
}

}  // namespace

scenario::ScenarioConfig apply_axis(const scenario::ScenarioConfig& base,
                                    const std::string& axis, double value) {
  scenario::ScenarioConfig c = base;
  if (axis == "none") return c;
  if (axis == "users") {
    c.users_per_region = spread_users(static_cast<int>(value), c.i_regions);
  } else if (axis == "elements") {
    c.n_elements = static_cast<int>(value);
  } else if (axis == "surfaces") {
    c.v_surfaces = static_cast<int>(value);
    c.i_regions = c.v_surfaces + 1;
    c.users_per_region = spread_users(base.total_users(), c.i_regions);
  } else if (axis == "antennas") {
    c.m_antennas = static_cast<int>(value);
  } else if (axis == "spacing") {
    c.surface_spacing_m = value;
  } else {
    throw std::invalid_argument("apply_axis: unknown axis '" + axis + "'");
  }
  return c;
}

void ResultTable::sort_canonical() {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.axis_value != b.axis_value) return a.axis_value < b.axis_value;
    if (a.algorithm != b.algorithm) return static_cast<int>(a.algorithm) < static_cast<int>(b.algorithm);
    if (a.baseline != b.baseline) return static_cast<int>(a.baseline) < static_cast<int>(b.baseline);
    if (a.policy != b.policy) return static_cast<int>(a.policy) < static_cast<int>(b.policy);
    return a.seed < b.seed;
  });
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  out << "axis_value,algorithm,baseline,policy,seed,status,final_ee_bits_per_joule,"
         "mean_rate_bps,mean_power_watt,first_window_reward,final_window_reward\n";
  for (const auto& r : rows) {
    out << fmt_double(r.axis_value) << ',' << marl::to_string(r.algorithm) << ','
        << marl::to_string(r.baseline) << ',' << marl::to_string(r.policy) << ',' << r.seed << ','
        << (r.ok ? "ok" : "failed") << ',' << fmt_double(r.final_ee) << ','
        << fmt_double(r.mean_rate_bps) << ',' << fmt_double(r.mean_power_watt) << ','
        << fmt_double(r.first_window_reward) << ',' << fmt_double(r.final_window_reward) << "\n";
  }
  return out.str();
}

ResultTable ResultTable::from_csv(const std::string& text) {
  ResultTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("results csv: empty");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 11) throw std::invalid_argument("results csv: bad row '" + line + "'");
    ResultRow r;
    r.axis_value = std::stod(fields[0]);
    r.algorithm = marl::algorithm_from_string(fields[1]);
    r.baseline = marl::baseline_from_string(fields[2]);
    r.policy = marl::policy_from_string(fields[3]);
    r.seed = std::stoull(fields[4]);
    r.ok = fields[5] == "ok";
    r.final_ee = std::stod(fields[6]);
    r.mean_rate_bps = std::stod(fields[7]);
    r.mean_power_watt = std::stod(fields[8]);
    r.first_window_reward = std::stod(fields[9]);
    r.final_window_reward = std::stod(fields[10]);
    table.rows.push_back(r);
  }
  return table;
}

namespace {

struct RunSpec {
  double axis_value;
  marl::Algorithm algorithm;
  marl::Baseline baseline;
  marl::OnOffPolicy policy;
  std::uint64_t seed;
};

ResultRow execute_run(const ExperimentPlan& plan, const RunSpec& spec,
                      const std::string& out_dir) {
  ResultRow row;
  row.axis_value = spec.axis_value;
  row.algorithm = spec.algorithm;
  row.baseline = spec.baseline;
  row.policy = spec.policy;
  row.seed = spec.seed;

  scenario::ScenarioConfig config = apply_axis(plan.base, plan.sweep_axis, spec.axis_value);
  config.master_seed = spec.seed;

  marl::TrainResult result;
  try {
    result = marl::train(config, plan.hyper, spec.algorithm, spec.baseline, spec.policy);
  } catch (const std::exception&) {
    row.ok = false;
    return row;
  }
  row.ok = !result.diverged;
  if (result.records.empty()) {
    row.ok = false;
    return row;
  }

  const std::size_t n = result.records.size();
  const std::size_t w = std::max<std::size_t>(1, n / 10);  // final window = last 10% of slots
  double ee = 0.0, rate = 0.0, power = 0.0;
  for (std::size_t i = n - w; i < n; ++i) {
    ee += result.records[i].energy_efficiency;
    rate += result.records[i].sum_rate_bps;
    power += result.records[i].total_power_watt;
  }
  row.final_ee = ee / w;
  row.mean_rate_bps = rate / w;
  row.mean_power_watt = power / w;
  row.first_window_reward = result.mean_reward_first_fraction(0.1);
  row.final_window_reward = result.mean_reward_final_fraction(0.1);

  if (plan.save_traces && !out_dir.empty()) {
    std::ostringstream name;
    name << "axis" << spec.axis_value << "_" << marl::to_string(spec.algorithm) << "_"
         << marl::to_string(spec.baseline) << "_" << marl::to_string(spec.policy) << "_seed"
         << spec.seed;
    const auto dir = std::filesystem::path(out_dir) / "traces";
    std::filesystem::create_directories(dir);
    const int n_agents = spec.baseline == marl::Baseline::NONE ? 1 : config.v_surfaces + 1;
    marl::write_records_csv((dir / (name.str() + ".csv")).string(), result.records,
                            spec.algorithm, n_agents);
    nlohmann::json manifest{{"config", config.to_json()},
                            {"hyper", plan.hyper.to_json()},
                            {"algorithm", marl::to_string(spec.algorithm)},
                            {"baseline", marl::to_string(spec.baseline)},
                            {"policy", marl::to_string(spec.policy)},
                            {"seed", spec.seed},
                            {"code_version", "starsim 0.1.0"}};
    std::ofstream mf(dir / (name.str() + ".manifest.json"));
    mf << manifest.dump(2) << "\n";
  }
  return row;
}

}  // namespace

ResultTable run_plan(const ExperimentPlan& plan, int jobs, const std::string& out_dir) {
  plan.validate();
  std::vector<RunSpec> specs;
  for (double axis : plan.axis_values) {
    for (auto alg : plan.algorithms) {
      for (auto base : plan.baselines) {
        for (auto pol : plan.policies) {
          for (auto seed : plan.seeds) {
            specs.push_back({axis, alg, base, pol, seed});
          }
        }
      }
    }
  }

  ResultTable table;
  table.rows.resize(specs.size());
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) break;
      table.rows[i] = execute_run(plan, specs[i], out_dir);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  table.sort_canonical();
  return table;
}

namespace {

struct GroupKey {
  double axis;
  std::string algorithm, baseline, policy;
  bool operator<(const GroupKey& o) const {
    return std::tie(axis, algorithm, baseline, policy) <
           std::tie(o.axis, o.algorithm, o.baseline, o.policy);
  }
};

double row_metric(const ResultRow& r, const std::string& metric) {
  if (metric == "final_ee") return r.final_ee;
  if (metric == "final_window_reward") return r.final_window_reward;
  if (metric == "first_window_reward") return r.first_window_reward;
  if (metric == "mean_rate") return r.mean_rate_bps;
  if (metric == "mean_power") return r.mean_power_watt;
  throw std::invalid_argument("unknown metric '" + metric + "'");
}

std::string row_dimension(const ResultRow& r, const std::string& dim) {
  if (dim == "algorithm") return marl::to_string(r.algorithm);
  if (dim == "baseline") return marl::to_string(r.baseline);
  if (dim == "policy") return marl::to_string(r.policy);
  throw std::invalid_argument("unknown dimension '" + dim + "'");
}

bool row_matches(const ResultRow& r, const Assertion& a) {
  if (!r.ok) return false;
  if (a.axis_value && r.axis_value != *a.axis_value) return false;
  for (const auto& [dim, want] : a.filter) {
    if (row_dimension(r, dim) != want) return false;
  }
  return true;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

AssertionResult evaluate_assertion(const Assertion& a, const ResultTable& table) {
  AssertionResult res;
  res.name = a.name;
  std::ostringstream details;

  auto group_mean = [&](const std::string& dim, const std::string& value) {
    std::vector<double> vals;
    for (const auto& r : table.rows) {
      if (!row_matches(r, a)) continue;
      if (row_dimension(r, dim) != value) continue;
      vals.push_back(row_metric(r, a.metric));
    }
    return std::make_pair(mean_of(vals), vals.size());
  };

  if (a.kind == "order_mean") {
    res.pass = true;
    std::vector<double> means;
    for (const auto& value : a.order) {
      auto [m, n] = group_mean(a.dimension, value);
      if (n == 0) { res.pass = false; details << value << ": no rows; "; continue; }
      means.push_back(m);
      details << value << "=" << m << " ";
    }
    if (means.size() == a.order.size()) {
      for (std::size_t i = 0; i + 1 < means.size(); ++i) {
        const bool ok = a.strict ? means[i] > means[i + 1] : means[i] >= means[i + 1];
        if (!ok) res.pass = false;
      }
    }
  } else if (a.kind == "greater_mean") {
    auto [ml, nl] = group_mean(a.dimension, a.left);
    auto [mr, nr] = group_mean(a.dimension, a.right);
    details << a.left << "=" << ml << " vs " << a.right << "=" << mr;
    res.pass = nl > 0 && nr > 0 && (a.strict ? ml > mr : ml >= mr);
  } else if (a.kind == "interior_argmax") {
    std::map<double, std::vector<double>> by_axis;
    for (const auto& r : table.rows) {
      if (!r.ok) continue;
      Assertion relaxed = a;
      relaxed.axis_value.reset();
      if (!row_matches(r, relaxed)) continue;
      by_axis[r.axis_value].push_back(row_metric(r, a.metric));
    }
    if (by_axis.size() < 2) {
      res.pass = false;
      details << "need at least two axis points";
    } else {
      double best_axis = by_axis.begin()->first;
      double best = -1e300;
      for (const auto& [axis, vals] : by_axis) {
        const double m = mean_of(vals);
        details << axis << "=" << m << " ";
        if (m > best) { best = m; best_axis = axis; }
      }
      const double first = by_axis.begin()->first;
      const double last = by_axis.rbegin()->first;
      res.pass = best_axis != last && (!a.not_first || best_axis != first);
      details << "argmax=" << best_axis;
    }
  } else if (a.kind == "axis_ge_mean") {
    std::vector<double> lhs, rhs;
    for (const auto& r : table.rows) {
      Assertion relaxed = a;
      relaxed.axis_value.reset();
      if (!row_matches(r, relaxed)) continue;
      if (r.axis_value == a.left_axis) lhs.push_back(row_metric(r, a.metric));
      if (r.axis_value == a.right_axis) rhs.push_back(row_metric(r, a.metric));
    }
    details << "axis " << a.left_axis << " mean " << mean_of(lhs) << " vs axis " << a.right_axis
            << " mean " << mean_of(rhs);
    res.pass = !lhs.empty() && !rhs.empty() &&
               (a.strict ? mean_of(lhs) > mean_of(rhs) : mean_of(lhs) >= mean_of(rhs));
  } else if (a.kind == "axis_ge_per_seed") {
    std::map<std::uint64_t, std::pair<std::vector<double>, std::vector<double>>> by_seed;
    for (const auto& r : table.rows) {
      Assertion relaxed = a;
      relaxed.axis_value.reset();
      if (!row_matches(r, relaxed)) continue;
      if (r.axis_value == a.left_axis) by_seed[r.seed].first.push_back(row_metric(r, a.metric));
      if (r.axis_value == a.right_axis) by_seed[r.seed].second.push_back(row_metric(r, a.metric));
    }
    int good = 0, total = 0;
    for (const auto& [seed, lr] : by_seed) {
      if (lr.first.empty() || lr.second.empty()) continue;
      ++total;
      if (mean_of(lr.first) >= mean_of(lr.second)) ++good;
    }
    details << good << "/" << total << " seeds satisfy axis " << a.left_axis
            << " >= axis " << a.right_axis;
    res.pass = total > 0 && good >= a.min_seeds;
  } else if (a.kind == "improves") {
    int good = 0, total = 0;
    for (const auto& r : table.rows) {
      if (!row_matches(r, a)) continue;
      ++total;
      if (r.final_window_reward > r.first_window_reward) ++good;
    }
    details << good << "/" << total << " seeds improve over training";
    res.pass = total > 0 && good >= a.min_seeds;
  } else {
    res.pass = false;
    details << "unknown assertion kind '" << a.kind << "'";
  }
  res.details = details.str();
  return res;
}

}  // namespace

Summary summarize(const ExperimentPlan& plan, const ResultTable& table) {
  Summary summary;
  std::map<GroupKey, std::vector<const ResultRow*>> groups;
  for (const auto& r : table.rows) {
    if (!r.ok) continue;
    groups[{r.axis_value, marl::to_string(r.algorithm), marl::to_string(r.baseline),
            marl::to_string(r.policy)}]
        .push_back(&r);
  }
  for (const auto& [key, rows] : groups) {
    Summary::Group g;
    g.axis_value = key.axis;
    g.algorithm = key.algorithm;
    g.baseline = key.baseline;
    g.policy = key.policy;
    g.n_seeds = static_cast<int>(rows.size());
    double se = 0.0, sr = 0.0, sp = 0.0;
    for (const auto* r : rows) {
      se += r->final_ee;
      sr += r->mean_rate_bps;
      sp += r->mean_power_watt;
    }
    g.mean_ee = se / rows.size();
    g.mean_rate = sr / rows.size();
    g.mean_power = sp / rows.size();
    double var = 0.0;
    for (const auto* r : rows) var += (r->final_ee - g.mean_ee) * (r->final_ee - g.mean_ee);
    g.std_ee = rows.size() > 1 ? std::sqrt(var / (rows.size() - 1)) : 0.0;
    summary.groups.push_back(g);
  }
  for (const auto& a : plan.assertions) {
    summary.assertions.push_back(evaluate_assertion(a, table));
    if (!summary.assertions.back().pass) summary.all_assertions_pass = false;
  }
  return summary;
}

nlohmann::json Summary::to_json() const {
  nlohmann::json groups_json = nlohmann::json::array();
  for (const auto& g : groups) {
    groups_json.push_back({{"axis_value", g.axis_value},
                           {"algorithm", g.algorithm},
                           {"baseline", g.baseline},
                           {"policy", g.policy},
                           {"n_seeds", g.n_seeds},
                           {"mean_ee_bits_per_joule", g.mean_ee},
                           {"std_ee_bits_per_joule", g.std_ee},
                           {"mean_rate_bps", g.mean_rate},
                           {"mean_power_watt", g.mean_power}});
  }
  nlohmann::json asrt = nlohmann::json::array();
  for (const auto& a : assertions) {
    asrt.push_back({{"name", a.name}, {"pass", a.pass}, {"details", a.details}});
  }
  return nlohmann::json{{"groups", groups_json},
                        {"assertions", asrt},
                        {"all_assertions_pass", all_assertions_pass},
                        {"note", "reward axis is the instantaneous energy efficiency (bits/joule)"}};
}

std::string Summary::to_text() const {
  std::ostringstream out;
  out << "axis | algorithm | baseline | policy | seeds | EE mean +/- std (bits/J) | rate (bps) | power (W)\n";
  for (const auto& g : groups) {
    out << g.axis_value << " | " << g.algorithm << " | " << g.baseline << " | " << g.policy
        << " | " << g.n_seeds << " | " << g.mean_ee << " +/- " << g.std_ee << " | " << g.mean_rate
        << " | " << g.mean_power << "\n";
  }
  for (const auto& a : assertions) {
    out << (a.pass ? "[PASS] " : "[FAIL] ") << a.name << ": " << a.details << "\n";
  }
  return out.str();
}

void write_outputs(const std::string& out_dir, const ExperimentPlan& plan,
                   const ResultTable& table, const Summary& summary) {
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  {
    std::ofstream out(dir / "results.csv", std::ios::binary);
    out << table.to_csv();
    if (!out) throw std::runtime_error("write_outputs: results.csv write failed");
  }
  {
    nlohmann::json manifest{{"plan", plan.to_json()}, {"code_version", "starsim 0.1.0"}};
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "summary.json");
    out << summary.to_json().dump(2) << "\n";
  }
}

}  // namespace starsim::experiment
