// sidelink: command-line front end for the relay-assignment library.
//
//   sidelink solve     one instance, every requested solver, JSON report
//   sidelink sweep     Monte Carlo sweep over n_o, alpha, r_max or policy
//   sidelink simulate  fair-scheduling episodes (sweep with policies only)
//   sidelink protocol  discovery/assignment message exchange on one instance

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sidelink/sidelink.hpp"

using namespace sidelink;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials, slots, cap;
  std::optional<std::size_t> n_outer, n_inner;
  std::optional<double> alpha, r_max, power;
  std::optional<unsigned> threads;
  std::string out;
  std::string format = "csv";
  std::string solvers, policies, sweep;
  std::string instance;
  std::string collision = "none";
  std::string trace;
};

ExperimentSpec build_spec(const Options& o) {
  ExperimentSpec spec;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("cannot read config '" + o.config + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + o.config + "' is not valid JSON: " + e.what());
    }
    spec = spec_from_json(j);
  }
  if (o.seed) spec.seed = *o.seed;
  if (o.trials) spec.trials = *o.trials;
  if (o.slots) spec.slots = *o.slots;
  if (o.cap) spec.cap = *o.cap;
  if (o.threads) spec.threads = *o.threads;
  if (o.n_outer) {
    spec.base.n_outer = *o.n_outer;
    if (!o.n_inner && spec.inner_follows_outer) spec.base.n_inner = *o.n_outer;
  }
  if (o.n_inner) {
    spec.base.n_inner = *o.n_inner;
    spec.inner_follows_outer = false;
  }
  if (o.alpha) spec.base.alpha = *o.alpha;
  if (o.r_max) spec.base.r_max = *o.r_max;
  if (o.power) spec.base.power = *o.power;
  if (!o.solvers.empty()) spec.solvers = split_list(o.solvers);
  if (!o.policies.empty()) spec.policies = split_list(o.policies);
  if (!o.sweep.empty()) apply_sweep_arg(spec, o.sweep);
  if (spec.values.empty()) {
    spec.sweep_variable = SweepVariable::NOuter;
    spec.values = {std::to_string(spec.base.n_outer)};
  }
  return spec;
}

OutputFormat parse_format(const std::string& f) {
  if (f == "csv") return OutputFormat::Csv;
  if (f == "json") return OutputFormat::Json;
  throw ConfigError("unknown format '" + f + "' (expected csv or json)");
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path);
  if (!os || !(os << text) || !os.flush()) throw std::runtime_error("cannot write '" + path + "'");
}

ProblemInstance load_or_generate(const Options& o, const ExperimentSpec& spec) {
  if (!o.instance.empty()) {
    std::ifstream in(o.instance);
    if (!in) throw ConfigError("cannot read instance '" + o.instance + "'");
    try {
      return instance_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("instance '" + o.instance + "' is malformed: " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("instance '" + o.instance + "' is invalid: " + e.what());
    }
  }
  try {
    spec.base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Rng rng = make_rng(spec.seed, {0});
  return gen_instance(spec.base, rng);
}

int cmd_solve(const Options& o) {
  ExperimentSpec spec = build_spec(o);
  if (spec.solvers.empty()) spec.solvers = {"greedy"};
  const ProblemInstance inst = load_or_generate(o, spec);
  nlohmann::json out = {{"instance", to_json(inst)}, {"results", nlohmann::json::object()}};
  for (const std::string& name : spec.solvers) {
    const auto kind = parse_solver(name);
    if (!kind) throw ConfigError("unknown solver '" + name + "'");
    Rng rng = make_rng(spec.seed, {100 + static_cast<std::uint64_t>(*kind)});
    out["results"][name] = to_json(solve(*kind, inst, spec.cap, rng));
  }
  write_out(o.out, out.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const Options& o, bool policies_only) {
  ExperimentSpec spec = build_spec(o);
  const OutputFormat format = parse_format(o.format);
  if (policies_only) {
    spec.solvers.clear();
    if (spec.policies.empty() && spec.sweep_variable != SweepVariable::Policy) {
      spec.policies = {"GREEDY_STATIC", "WAIT_TIME", "QUEUE"};
    }
  } else if (spec.solvers.empty() && spec.policies.empty() &&
             spec.sweep_variable != SweepVariable::Policy) {
    spec.solvers = {"greedy"};
  }
  spec.validate();

  if (policies_only && !o.trace.empty()) {
    // Per-slot trace of one episode on the seed's first instance.
    const ProblemInstance inst = load_or_generate(o, spec);
    const std::string name = spec.sweep_variable == SweepVariable::Policy ? spec.values.front()
                                                                          : spec.policies.front();
    FairPolicy policy{*parse_policy(name), {}};
    Rng rng = make_rng(spec.seed, {200 + static_cast<std::uint64_t>(policy.kind), 0});
    if (policy.kind == PolicyKind::Queue) {
      policy.arrival_rates = draw_arrival_rates(inst.n_outer(), spec.total_arrival_rate, rng);
    }
    std::vector<TraceRow> rows;
    run_episode_full(inst, policy, spec.slots, rng, &rows);
    std::ofstream os(o.trace);
    if (!os) throw std::runtime_error("cannot write '" + o.trace + "'");
    write_trace_csv(os, rows);
  }

  const auto rows = run_sweep(spec);
  if (o.out.empty() || o.out == "-") {
    emit(rows, format, std::cout);
  } else {
    emit(rows, format, o.out);
  }
  return 0;
}

CollisionModel parse_collision(const std::string& s) {
  if (s == "none") return CollisionModel::none();
  const std::string prefix = "backoff";
  if (s.rfind(prefix, 0) == 0) {
    std::size_t window = 2;
    if (s.size() > prefix.size()) {
      if (s[prefix.size()] != ':') throw ConfigError("collision model is none or backoff[:window]");
      try {
        window = std::stoul(s.substr(prefix.size() + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad backoff window in '" + s + "'");
      }
    }
    if (window == 0) throw ConfigError("backoff window must be >= 1");
    return CollisionModel::slotted_backoff(window);
  }
  throw ConfigError("collision model is none or backoff[:window]");
}

int cmd_protocol(const Options& o) {
  const ExperimentSpec spec = build_spec(o);
  const CollisionModel model = parse_collision(o.collision);
  const ProblemInstance inst = load_or_generate(o, spec);
  Rng rng = make_rng(spec.seed, {300});
  const ProtocolTrace t = run_discovery(inst, model, rng);
  if (!o.trace.empty()) {
    std::ofstream os(o.trace);
    if (!os) throw std::runtime_error("cannot write '" + o.trace + "'");
    write_trace_jsonl(os, t);
  }
  const nlohmann::json out = {{"n_o", inst.n_outer()},
                              {"n_i", inst.n_inner()},
                              {"total_messages", t.total_messages},
                              {"message_bound", message_bound(inst.n_outer())},
                              {"rounds", t.rounds},
                              {"collisions", t.collisions},
                              {"schedule", to_json(t.final_schedule)},
                              {"verified", verify_trace(t, inst)}};
  write_out(o.out, out.dump(2) + "\n");
  return 0;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "JSON experiment file");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--cap", o.cap, "exhaustive-search cap");
  app->add_option("--out", o.out, "output path (default stdout)");
  app->add_option("--solvers", o.solvers, "comma-separated solver names");
  app->add_option("--n-outer,--n_o", o.n_outer, "outer UEs");
  app->add_option("--n-inner,--n_i", o.n_inner, "inner UEs");
  app->add_option("--alpha", o.alpha, "path-loss exponent");
  app->add_option("--r-max,--r_max", o.r_max, "relay traffic cap");
  app->add_option("--power", o.power, "transmit power");
  app->add_option("--instance", o.instance, "instance JSON instead of a generated one");
}

void add_sweep_flags(CLI::App* app, Options& o) {
  app->add_option("--trials", o.trials, "instances or episodes per sweep value");
  app->add_option("--slots", o.slots, "slots per episode");
  app->add_option("--format", o.format, "csv or json");
  app->add_option("--policies", o.policies, "comma-separated policy names");
  app->add_option("--sweep", o.sweep, "<var>=<v1,v2,...> with var in n_o, alpha, r_max, policy");
  app->add_option("--threads", o.threads, "worker threads (0: all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-hop sidelink relay assignment: solvers, fair scheduling, sweeps"};
  app.require_subcommand(1);
  Options o;

  auto* solve_cmd = app.add_subcommand("solve", "solve one instance and print the rate report");
  add_common(solve_cmd, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep over one parameter");
  add_common(sweep_cmd, o);
  add_sweep_flags(sweep_cmd, o);

  auto* sim_cmd = app.add_subcommand("simulate", "fair-scheduling episodes");
  add_common(sim_cmd, o);
  add_sweep_flags(sim_cmd, o);
  sim_cmd->add_option("--trace", o.trace, "per-slot CSV trace of one episode");

  auto* proto_cmd = app.add_subcommand("protocol", "emulate the discovery and assignment exchange");
  add_common(proto_cmd, o);
  proto_cmd->add_option("--collision", o.collision, "none or backoff[:window]");
  proto_cmd->add_option("--trace", o.trace, "JSONL message trace");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return cmd_solve(o);
    if (sweep_cmd->parsed()) return cmd_sweep(o, false);
    if (sim_cmd->parsed()) return cmd_sweep(o, true);
    if (proto_cmd->parsed()) return cmd_protocol(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "sidelink: config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sidelink: %s\n", e.what());
    return 1;
  }
  return 0;
}
