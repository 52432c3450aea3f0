#pragma once

// Monte Carlo sweeps over one model parameter, running solvers on random
// instances and fair-scheduling episodes, and CSV/JSON result output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidelink/model.hpp"
#include "sidelink/rng.hpp"
#include "sidelink/sched.hpp"
#include "sidelink/solvers.hpp"
#include "sidelink/stats.hpp"

namespace sidelink {

// Thrown for malformed experiment specifications; always raised before any
// computation starts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SweepVariable { NOuter, Alpha, RMax, Policy };

inline constexpr std::string_view to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::NOuter: return "n_o";
    case SweepVariable::Alpha: return "alpha";
    case SweepVariable::RMax: return "r_max";
    case SweepVariable::Policy: return "policy";
  }
  return "?";
}

inline SweepVariable parse_sweep_variable(std::string_view s) {
  for (SweepVariable v : {SweepVariable::NOuter, SweepVariable::Alpha, SweepVariable::RMax,
                          SweepVariable::Policy}) {
    if (s == to_string(v)) return v;
  }
  throw ConfigError("unknown sweep variable '" + std::string(s) + "'");
}

struct ExperimentSpec {
  SweepVariable sweep_variable = SweepVariable::NOuter;
  // Numeric sweep values, or policy names when sweeping over policies.
  std::vector<std::string> values;
  std::size_t trials = 1000;
  std::size_t slots = 500;
  std::size_t cap = 50000;
  ModelConfig base;
  bool inner_follows_outer = true;  // n_i = n_o when sweeping n_o
  std::vector<std::string> solvers;
  std::vector<std::string> policies;
  double total_arrival_rate = 0.5;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency

  // Resolves names and values, throwing ConfigError on anything unknown.
  void validate() const;
};

struct ResultRow {
  std::string sweep_var;
  std::string sweep_value;
  std::string method;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across trials
  std::size_t trials = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

// Per-trial samples of one (sweep value, method, metric) cell. NaN marks a
// trial where the metric is undefined (e.g. max wait with no activations).
struct SampleSeries {
  std::string sweep_value;
  std::string method;
  std::string metric;
  std::vector<double> values;
};

struct SweepSamples {
  std::string sweep_var;
  std::vector<SampleSeries> series;

  const SampleSeries& find(std::string_view value, std::string_view method,
                           std::string_view metric) const {
    for (const SampleSeries& s : series) {
      if (s.sweep_value == value && s.method == method && s.metric == metric) return s;
    }
    throw std::out_of_range("no samples for " + std::string(value) + "/" + std::string(method) +
                            "/" + std::string(metric));
  }
};

namespace detail {

inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("sweep value '" + s + "' is not a number");
  }
  if (used != s.size()) throw ConfigError("sweep value '" + s + "' is not a number");
  return v;
}

// Method counters for per-method rng streams.
inline constexpr std::uint64_t kInstanceStream = 0;
inline constexpr std::uint64_t kSolverStream = 100;
inline constexpr std::uint64_t kPolicyStream = 200;

struct Plan {
  std::vector<SolverKind> solvers;
  std::vector<PolicyKind> policies;
  std::vector<ModelConfig> configs;       // one per sweep value
  std::vector<std::string> value_labels;  // one per sweep value
  std::vector<std::vector<PolicyKind>> value_policies;
};

inline Plan make_plan(const ExperimentSpec& spec) {
  if (spec.values.empty()) throw ConfigError("sweep needs at least one value");
  if (spec.trials == 0) throw ConfigError("trials must be >= 1");
  if (spec.slots == 0) throw ConfigError("slots must be >= 1");
  if (spec.cap == 0) throw ConfigError("cap must be >= 1");
  if (!(spec.total_arrival_rate >= 0.0)) throw ConfigError("arrival rate must be >= 0");
  try {
    spec.base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Plan plan;
  for (const std::string& s : spec.solvers) {
    const auto k = parse_solver(s);
    if (!k) throw ConfigError("unknown solver '" + s + "'");
    plan.solvers.push_back(*k);
  }
  for (const std::string& p : spec.policies) {
    const auto k = parse_policy(p);
    if (!k) throw ConfigError("unknown policy '" + p + "'");
    plan.policies.push_back(*k);
  }
  for (const std::string& v : spec.values) {
    ModelConfig cfg = spec.base;
    std::vector<PolicyKind> policies = plan.policies;
    switch (spec.sweep_variable) {
      case SweepVariable::NOuter: {
        const double n = parse_number(v);
        if (!(n >= 0.0) || n != std::floor(n)) throw ConfigError("n_o values must be integers >= 0");
        cfg.n_outer = static_cast<std::size_t>(n);
        if (spec.inner_follows_outer) cfg.n_inner = cfg.n_outer;
        break;
      }
      case SweepVariable::Alpha:
        cfg.alpha = parse_number(v);
        break;
      case SweepVariable::RMax:
        cfg.r_max = parse_number(v);
        break;
      case SweepVariable::Policy: {
        const auto k = parse_policy(v);
        if (!k) throw ConfigError("unknown policy '" + v + "'");
        policies = {*k};
        break;
      }
    }
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    plan.configs.push_back(cfg);
    plan.value_labels.push_back(spec.sweep_variable == SweepVariable::Policy
                                    ? v
                                    : format_value(parse_number(v)));
    plan.value_policies.push_back(std::move(policies));
  }
  if (plan.solvers.empty() && std::all_of(plan.value_policies.begin(), plan.value_policies.end(),
                                          [](const auto& p) { return p.empty(); })) {
    throw ConfigError("nothing to run: no solvers or policies requested");
  }
  return plan;
}

// Runs fn(t) for t in [0, n) on `threads` workers.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t t = 0; t < n; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < n; t = next++) fn(t);
    });
  }
}

}  // namespace detail

inline void ExperimentSpec::validate() const { (void)detail::make_plan(*this); }

inline std::vector<std::string_view> solver_metrics() { return {"sum_rate", "active_links"}; }

inline std::vector<std::string_view> policy_metrics(PolicyKind k) {
  std::vector<std::string_view> m = {"mean_admission", "var_admission", "sum_rate", "max_wait"};
  if (k == PolicyKind::Queue) m.push_back("avg_delay");
  return m;
}

// Collects per-trial samples. Trial t of every sweep value draws its instance
// from the stream (seed, t), so sweep values see paired instances and adding
// values never changes existing ones.
inline SweepSamples collect_samples(const ExperimentSpec& spec) {
  const detail::Plan plan = detail::make_plan(spec);
  SweepSamples out;
  out.sweep_var = std::string(to_string(spec.sweep_variable));
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t v = 0; v < plan.configs.size(); ++v) {
    const ModelConfig& cfg = plan.configs[v];
    const std::string& label = plan.value_labels[v];
    const std::size_t first = out.series.size();
    for (SolverKind s : plan.solvers) {
      for (std::string_view m : solver_metrics()) {
        out.series.push_back({label, std::string(to_string(s)), std::string(m),
                              std::vector<double>(spec.trials, nan)});
      }
    }
    for (PolicyKind p : plan.value_policies[v]) {
      for (std::string_view m : policy_metrics(p)) {
        out.series.push_back({label, std::string(to_string(p)), std::string(m),
                              std::vector<double>(spec.trials, nan)});
      }
    }

    detail::parallel_for(spec.trials, spec.threads, [&](std::size_t t) {
      Rng inst_rng = make_rng(spec.seed, {detail::kInstanceStream, t});
      const ProblemInstance inst = gen_instance(cfg, inst_rng);
      std::size_t at = first;
      for (SolverKind s : plan.solvers) {
        Rng rng = make_rng(spec.seed, {detail::kSolverStream + static_cast<std::uint64_t>(s), t});
        const SolveResult r = solve(s, inst, spec.cap, rng);
        out.series[at++].values[t] = r.report.weighted_sum;
        out.series[at++].values[t] = static_cast<double>(r.schedule.active_count());
      }
      for (PolicyKind p : plan.value_policies[v]) {
        Rng rng = make_rng(spec.seed, {detail::kPolicyStream + static_cast<std::uint64_t>(p), t});
        FairPolicy policy{p, {}};
        if (p == PolicyKind::Queue) {
          policy.arrival_rates = draw_arrival_rates(inst.n_outer(), spec.total_arrival_rate, rng);
        }
        const EpisodeMetrics m = run_episode(inst, policy, spec.slots, rng);
        out.series[at++].values[t] = m.mean_admission;
        out.series[at++].values[t] = m.var_admission;
        out.series[at++].values[t] = m.sum_rate_time_avg;
        out.series[at++].values[t] = m.max_wait ? static_cast<double>(*m.max_wait) : nan;
        if (p == PolicyKind::Queue) out.series[at++].values[t] = m.avg_delay.value_or(nan);
      }
    });
  }
  return out;
}

// Reduces samples in trial order. `trials` counts the trials where the metric
// was defined.
inline std::vector<ResultRow> aggregate(const SweepSamples& samples) {
  std::vector<ResultRow> rows;
  rows.reserve(samples.series.size());
  for (const SampleSeries& s : samples.series) {
    const stats::Summary sum = stats::summarize(s.values);
    rows.push_back({samples.sweep_var, s.sweep_value, s.method, s.metric, sum.mean,
                    sum.count > 0 ? sum.stddev() : std::numeric_limits<double>::quiet_NaN(),
                    sum.count});
  }
  return rows;
}

inline std::vector<ResultRow> run_sweep(const ExperimentSpec& spec) {
  return aggregate(collect_samples(spec));
}

// ---------------------------------------------------------------------------
// Output

enum class OutputFormat { Csv, Json };

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "sweep_var,sweep_value,method,metric,mean,std,trials\n";
  for (const ResultRow& r : rows) {
    os << r.sweep_var << ',' << r.sweep_value << ',' << r.method << ',' << r.metric << ','
       << detail::format_value(r.mean) << ',' << detail::format_value(r.std) << ',' << r.trials
       << '\n';
  }
}

inline nlohmann::json rows_to_json(const std::vector<ResultRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  for (const ResultRow& r : rows) {
    out.push_back({{"sweep_var", r.sweep_var},
                   {"sweep_value", r.sweep_value},
                   {"method", r.method},
                   {"metric", r.metric},
                   {"mean", num(r.mean)},
                   {"std", num(r.std)},
                   {"trials", r.trials}});
  }
  return out;
}

inline std::vector<ResultRow> rows_from_json(const nlohmann::json& j) {
  std::vector<ResultRow> rows;
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  for (const auto& r : j) {
    rows.push_back({r.at("sweep_var").get<std::string>(), r.at("sweep_value").get<std::string>(),
                    r.at("method").get<std::string>(), r.at("metric").get<std::string>(),
                    num(r.at("mean")), num(r.at("std")), r.at("trials").get<std::size_t>()});
  }
  return rows;
}

inline void emit(const std::vector<ResultRow>& rows, OutputFormat format, std::ostream& os) {
  if (rows.empty()) throw std::invalid_argument("no result rows to emit");
  if (format == OutputFormat::Csv) {
    write_csv(os, rows);
  } else {
    os << rows_to_json(rows).dump(2) << '\n';
  }
}

inline void emit(const std::vector<ResultRow>& rows, OutputFormat format, const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("no result rows to emit");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit(rows, format, os);
  if (!os.flush()) throw std::runtime_error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Config files

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? s.size() : comma;
    std::string item(s.substr(start, end - start));
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Applies "--sweep var=v1,v2,..." to a spec.
inline void apply_sweep_arg(ExperimentSpec& spec, std::string_view arg) {
  const std::size_t eq = arg.find('=');
  if (eq == std::string_view::npos) throw ConfigError("--sweep expects <var>=<v1,v2,...>");
  spec.sweep_variable = parse_sweep_variable(arg.substr(0, eq));
  spec.values = split_list(arg.substr(eq + 1));
  if (spec.values.empty()) throw ConfigError("--sweep needs at least one value");
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j, ExperimentSpec spec = {}) {
  try {
    if (j.contains("sweep_variable")) {
      spec.sweep_variable = parse_sweep_variable(j.at("sweep_variable").get<std::string>());
    }
    if (j.contains("values")) {
      spec.values.clear();
      for (const auto& v : j.at("values")) {
        spec.values.push_back(v.is_string() ? v.get<std::string>()
                                            : detail::format_value(v.get<double>()));
      }
    }
    spec.trials = j.value("trials", spec.trials);
    spec.slots = j.value("slots", spec.slots);
    spec.cap = j.value("cap", spec.cap);
    if (j.contains("base")) {
      spec.base = model_config_from_json(j.at("base"), spec.base);
      if (j.at("base").contains("n_i")) spec.inner_follows_outer = false;
    }
    spec.inner_follows_outer = j.value("inner_follows_outer", spec.inner_follows_outer);
    if (j.contains("solvers")) spec.solvers = j.at("solvers").get<std::vector<std::string>>();
    if (j.contains("policies")) spec.policies = j.at("policies").get<std::vector<std::string>>();
    spec.total_arrival_rate = j.value("total_arrival_rate", spec.total_arrival_rate);
    spec.seed = j.value("seed", spec.seed);
    spec.threads = j.value("threads", spec.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

inline nlohmann::json to_json(const ExperimentSpec& spec) {
  return {{"sweep_variable", std::string(to_string(spec.sweep_variable))},
          {"values", spec.values},
          {"trials", spec.trials},
          {"slots", spec.slots},
          {"cap", spec.cap},
          {"base", to_json(spec.base)},
          {"inner_follows_outer", spec.inner_follows_outer},
          {"solvers", spec.solvers},
          {"policies", spec.policies},
          {"total_arrival_rate", spec.total_arrival_rate},
          {"seed", spec.seed},
          {"threads", spec.threads}};
}

}  // namespace sidelink
