// Copyright 2026 The sfl-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "app.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "experiment.h"
#include "policies.h"
#include "sfl/bcd.h"
#include "sfl/oracle.h"
#include "sfl/profiles.h"
#include "sfl/split_point.h"

namespace sfl::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct GenSpec {
  std::uint64_t seed = 0;
  int devices = kDefaultNumDevices;
};

struct SweepSpec {
  std::string axis;
  double lo = 0.0;
  double hi = 0.0;
  int steps = 1;
};

struct RunConfig {
  std::string command;
  std::string scenario_path;
  std::string gen_text;
  std::string out_dir;
  std::uint64_t seed = 0;
  long rounds = 0;
  std::string policy = "hasfl";
  std::vector<std::string> compare;
  std::string sweep_text;
  double tol_bcd = 1e-6;
  double tol_dinkelbach = 1e-9;
  int bmax = 64;
  std::optional<double> lr;
  std::optional<double> eps;
  bool calibrate = false;
  std::string partition = "noniid";
  int plateau_window = 10;
  bool stop_at_plateau = false;
  int cases = 20;
  int layers = 4;
  bool corrupt = false;
};

[[noreturn]] void usage_error(const std::string& message) {
  throw Error(ErrorKind::kInvalidArgument, message);
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  usage_error("cannot parse " + what + " from \"" + text + "\"");
}

// "seed=7,n=20"; either key may be omitted.
GenSpec parse_gen(const std::string& text, int default_devices) {
  GenSpec g;
  g.devices = default_devices;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) usage_error("--gen expects key=value pairs, got \"" + item + "\"");
    const std::string key = item.substr(0, eq);
    const double v = parse_number(item.substr(eq + 1), "--gen " + key);
    if (v < 0 || v != std::floor(v)) usage_error("--gen " + key + " must be a non-negative integer");
    if (key == "seed") {
      g.seed = static_cast<std::uint64_t>(v);
    } else if (key == "n") {
      if (v < 1 || v > 1e6) usage_error("--gen n must be between 1 and 1e6");
      g.devices = static_cast<int>(v);
    } else {
      usage_error("--gen: unknown key \"" + key + "\" (expected seed, n)");
    }
  }
  return g;
}

constexpr const char* kSweepAxes[] = {"device-compute", "server-compute", "uplink",
                                      "inter-server", "n"};

// "axis=lo:hi:steps"
SweepSpec parse_sweep(const std::string& text) {
  SweepSpec s;
  const auto eq = text.find('=');
  if (eq == std::string::npos) usage_error("--sweep expects axis=lo:hi:steps");
  s.axis = text.substr(0, eq);
  if (std::find(std::begin(kSweepAxes), std::end(kSweepAxes), s.axis) == std::end(kSweepAxes)) {
    usage_error("unknown sweep axis \"" + s.axis +
                "\" (expected device-compute, server-compute, uplink, inter-server, n)");
  }
  std::vector<std::string> parts;
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) usage_error("--sweep expects axis=lo:hi:steps");
  s.lo = parse_number(parts[0], "sweep lower end");
  s.hi = parse_number(parts[1], "sweep upper end");
  const double steps = parse_number(parts[2], "sweep steps");
  if (steps < 1 || steps != std::floor(steps) || steps > 1000) {
    usage_error("sweep steps must be an integer in 1..1000");
  }
  s.steps = static_cast<int>(steps);
  if (!(s.lo > 0.0) || !(s.hi >= s.lo) || !std::isfinite(s.hi)) {
    usage_error("sweep range must satisfy 0 < lo <= hi");
  }
  return s;
}

std::vector<double> sweep_values(const SweepSpec& s) {
  std::vector<double> v;
  for (int k = 0; k < s.steps; ++k) {
    const double t = s.steps == 1 ? 0.0 : static_cast<double>(k) / (s.steps - 1);
    double x = s.lo + t * (s.hi - s.lo);
    if (s.axis == "n") x = std::max(1.0, std::round(x));
    v.push_back(x);
  }
  return v;
}

Scenario apply_axis(const Scenario& base, const std::string& axis, double value) {
  Scenario s = base;
  if (axis == "device-compute") {
    for (DeviceProfile& d : s.devices) d.compute_flops = value;
  } else if (axis == "server-compute") {
    s.server.compute_flops = value;
  } else if (axis == "uplink") {
    for (DeviceProfile& d : s.devices) d.up_rate_edge = value;
  } else if (axis == "inter-server") {
    s.server.up_rate_fed = value;
    s.server.down_rate_fed = value;
  } else if (axis == "n") {
    // Devices are recycled from the base list in order.
    const int n = static_cast<int>(value);
    s.devices.clear();
    for (int i = 0; i < n; ++i) s.devices.push_back(base.devices[i % base.num_devices()]);
  }
  validate(s);
  return s;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

Json json_num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ';';
    s += std::to_string(v[k]);
  }
  return s;
}

std::string output_dir(const RunConfig& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "sfl-out";
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path dir = output_dir(c);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::kIo, "cannot create output directory " + dir.string());
  }
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

BcdOptions bcd_options(const RunConfig& c) {
  if (c.bmax < 1) usage_error("--bmax must be >= 1");
  if (!(c.tol_bcd >= 0.0)) usage_error("--tol-bcd must be >= 0");
  if (!(c.tol_dinkelbach > 0.0)) usage_error("--tol-dinkelbach must be > 0");
  BcdOptions o;
  o.max_batch = c.bmax;
  o.tol = c.tol_bcd;
  o.dinkelbach.tol = c.tol_dinkelbach;
  return o;
}

SimSettings sim_settings(const RunConfig& c) {
  SimSettings s;
  s.partition = sim::parse_partition_mode(c.partition);
  return s;
}

sim::TrainConfig train_config(const RunConfig& c, long rounds) {
  if (c.plateau_window < 1) usage_error("--plateau-window must be >= 1");
  sim::TrainConfig t;
  t.max_rounds = rounds;
  t.seed = c.seed;
  t.plateau_window = c.plateau_window;
  t.stop_at_plateau = c.stop_at_plateau;
  return t;
}

struct Resolved {
  Scenario scenario;
  Json source;
};

// Exactly one of --scenario / --gen, then --lr / --eps overrides and the
// optional calibration against the toy model.
Resolved resolve_scenario(const RunConfig& c) {
  const bool has_path = !c.scenario_path.empty();
  const bool has_gen = !c.gen_text.empty();
  if (has_path == has_gen) usage_error("give exactly one of --scenario or --gen");
  Resolved r;
  if (has_path) {
    r.scenario = load_scenario(c.scenario_path);
    r.source = {{"scenario", c.scenario_path}};
  } else {
    const GenSpec g = parse_gen(c.gen_text, kDefaultNumDevices);
    r.scenario = generate_scenario(g.seed, g.devices);
    r.source = {{"gen_seed", g.seed}, {"gen_devices", g.devices}};
  }
  if (c.lr) r.scenario.training.lr = *c.lr;
  if (c.eps) {
    if (!(*c.eps > 0.0)) {
      throw Error(ErrorKind::kInfeasible,
                  "target accuracy eps = " + num(*c.eps) +
                      " leaves no positive bound denominator for any decision");
    }
    r.scenario.training.target_eps = *c.eps;
  }
  if (c.calibrate) {
    const SimWorld world = make_world(r.scenario, sim_settings(c), c.seed);
    calibrate(r.scenario, world, c.seed);
  }
  validate(r.scenario);
  return r;
}

Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["scenario"] = c.scenario_path;
  j["gen"] = c.gen_text;
  j["seed"] = c.seed;
  j["rounds"] = c.rounds;
  j["policy"] = c.policy;
  j["compare"] = c.compare;
  j["sweep"] = c.sweep_text;
  j["tol_bcd"] = c.tol_bcd;
  j["tol_dinkelbach"] = c.tol_dinkelbach;
  j["bmax"] = c.bmax;
  j["lr"] = c.lr ? Json(*c.lr) : Json(nullptr);
  j["eps"] = c.eps ? Json(*c.eps) : Json(nullptr);
  j["calibrate"] = c.calibrate;
  j["partition"] = c.partition;
  j["plateau_window"] = c.plateau_window;
  j["stop_at_plateau"] = c.stop_at_plateau;
  if (c.command == "oracle") {
    j["cases"] = c.cases;
    j["layers"] = c.layers;
    j["corrupt"] = c.corrupt;
  }
  return j;
}

// The hash covers the options and, when there is one, the resolved scenario.
Json report_head(const RunConfig& c, const Scenario* scenario) {
  const Json cfg = config_json(c);
  std::string canonical = cfg.dump();
  if (scenario) canonical += serialize_scenario(*scenario);
  Json j;
  j["tool"] = "sfl-lab";
  j["command"] = c.command;
  j["config_hash"] = config_hash(canonical);
  j["config"] = cfg;
  return j;
}

Json decision_json(const Decision& d) { return {{"batch", d.batch}, {"cuts", d.cut}}; }

Json latency_json(const LatencyBreakdown& lat) {
  Json devices = Json::array();
  for (const DeviceLatency& d : lat.devices) {
    devices.push_back({{"fp_s", d.fp},
                       {"act_up_s", d.act_up},
                       {"grad_down_s", d.grad_down},
                       {"bp_s", d.bp},
                       {"sub_up_s", d.sub_up},
                       {"sub_down_s", d.sub_down}});
  }
  return {{"split_training_s", lat.split_training},
          {"aggregation_s", lat.aggregation},
          {"server_fp_s", lat.server_fp},
          {"server_bp_s", lat.server_bp},
          {"server_noncommon_bits", lat.server_noncommon_bits},
          {"server_sub_up_s", lat.server_sub_up},
          {"server_sub_down_s", lat.server_sub_down},
          {"devices", devices}};
}

Json evaluation_json(const Evaluation& ev) {
  Json j;
  j["theta_s"] = json_num(ev.theta);
  j["rounds_bound"] = json_num(ev.rounds);
  j["rounds_ceil"] = ev.rounds_ceil;
  j["total_time_s"] = json_num(ev.total_time);
  j["ill_conditioned"] = ev.ill_conditioned;
  if (!ev.infeasible.empty()) j["infeasible"] = ev.infeasible;
  return j;
}

Json trace_json(const BcdResult& r) {
  const BcdRun& best = r.runs[r.best_run];
  Json trace = Json::array();
  for (const BcdIteration& it : best.trace) {
    trace.push_back({{"iteration", it.iteration},
                     {"objective_after_batch_s", it.objective_after_bs},
                     {"objective_s", it.objective},
                     {"dinkelbach_iters", it.dinkelbach_iters},
                     {"batch", it.decision.batch},
                     {"cuts", it.decision.cut}});
  }
  return {{"starts", r.runs.size()},
          {"best_start", r.best_run},
          {"start_decision", decision_json(best.start)},
          {"converged", best.converged},
          {"trace", trace}};
}

PolicyOptions policy_options(const RunConfig& c, std::uint64_t draw) {
  PolicyOptions p;
  p.bcd = bcd_options(c);
  p.seed = c.seed;
  p.draw = draw;
  return p;
}

int cmd_generate(const RunConfig& c, std::ostream& out) {
  const Resolved r = resolve_scenario(c);
  const fs::path dir = prepare_out(c);
  const fs::path path = dir / "scenario.json";
  save_scenario(r.scenario, path);
  out << "scenario with " << r.scenario.num_devices() << " devices and "
      << r.scenario.num_layers() << " layers written to " << path.string() << "\n";
  return kExitOk;
}

int cmd_optimize(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve_scenario(c);
  const Policy policy = parse_policy(c.policy);
  const PolicyOutcome po = decide(policy, r.scenario, policy_options(c, 0));
  const Evaluation ev = evaluate_decision(r.scenario, po.decision);

  Json j = report_head(c, &r.scenario);
  j["source"] = r.source;
  j["policy"] = c.policy;
  j["decision"] = decision_json(po.decision);
  j.update(evaluation_json(ev));
  j["latency"] = latency_json(ev.latency);
  if (po.bcd) j["bcd"] = trace_json(*po.bcd);
  if (!po.note.empty()) j["note"] = po.note;
  const fs::path dir = prepare_out(c);
  write_file(dir / "optimize.json", j.dump(2) + "\n");

  out << "policy " << c.policy << ": theta " << num(ev.theta) << " s, rounds "
      << num(ev.rounds) << ", total time " << num(ev.total_time) << " s\n"
      << "batch " << join(po.decision.batch) << "\ncuts  " << join(po.decision.cut) << "\n"
      << "report " << (dir / "optimize.json").string() << " (config "
      << j["config_hash"].get<std::string>() << ")\n";
  if (!ev.infeasible.empty()) {
    err << "error: infeasible: " << ev.infeasible << "\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

void append_series(std::string& csv, const std::string& run, const Decision& d,
                   const sim::RunReport& rep) {
  const std::string b = join(d.batch), cu = join(d.cut);
  for (const sim::RoundRecord& rec : rep.series) {
    csv += run + "," + std::to_string(rec.round) + "," + num(rec.sim_time) + "," +
           num(rec.loss) + "," + num(rec.eval_loss) + "," + num(rec.accuracy) + "," + b +
           "," + cu + "\n";
  }
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const Resolved r = resolve_scenario(c);
  if (c.rounds < 1) usage_error("--rounds must be >= 1 for simulate");
  std::vector<std::string> runs{c.policy};
  for (const std::string& p : c.compare) {
    if (std::find(runs.begin(), runs.end(), p) == runs.end()) runs.push_back(p);
  }
  const SimWorld world = make_world(r.scenario, sim_settings(c), c.seed);
  const sim::TrainConfig tc = train_config(c, c.rounds);

  Json j = report_head(c, &r.scenario);
  j["source"] = r.source;
  j["runs"] = Json::array();
  std::string csv = std::string(kSimulateCsvHeader) + "\n";
  for (const std::string& name : runs) {
    const PolicyOutcome po = decide(parse_policy(name), r.scenario, policy_options(c, 0));
    const Evaluation ev = evaluate_decision(r.scenario, po.decision);
    const sim::RunReport rep = simulate(r.scenario, po.decision, world, tc);
    append_series(csv, name, po.decision, rep);
    const sim::RoundRecord& last = rep.series.back();
    Json run;
    run["policy"] = name;
    run["decision"] = decision_json(po.decision);
    run.update(evaluation_json(ev));
    run["rounds_run"] = rep.rounds_run;
    run["plateau_round"] = rep.plateau_round;
    run["plateau_time_s"] = rep.plateau_round >= 0 ? Json(rep.plateau_time) : Json(nullptr);
    run["final_sim_time_s"] = last.sim_time;
    run["final_loss"] = last.loss;
    run["final_eval_loss"] = last.eval_loss;
    run["final_accuracy"] = last.accuracy;
    run["drift_checks"] = rep.drift.size();
    run["drift_violations"] = rep.drift_violations;
    if (!po.note.empty()) run["note"] = po.note;
    j["runs"].push_back(run);
    out << name << ": " << rep.rounds_run << " rounds, eval loss " << num(last.eval_loss)
        << ", accuracy " << num(last.accuracy) << ", plateau "
        << (rep.plateau_round >= 0 ? "round " + std::to_string(rep.plateau_round) + " at " +
                                         num(rep.plateau_time) + " s"
                                   : std::string("not reached"))
        << "\n";
  }
  const fs::path dir = prepare_out(c);
  write_file(dir / "simulate.json", j.dump(2) + "\n");
  write_file(dir / "simulate.csv", csv);
  out << "series " << (dir / "simulate.csv").string() << " (config "
      << j["config_hash"].get<std::string>() << ")\n";
  return kExitOk;
}

// Halves every activation size the solver sees; the tripwire must then catch
// a solver objective below the true grid optimum.
Scenario corrupted(const Scenario& s) {
  Scenario out = s;
  for (double& a : out.layers.act_bits) a *= 0.5;
  return out;
}

int cmd_oracle(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.cases < 1) usage_error("oracle suite is empty (--cases must be >= 1)");
  if (c.layers < 1) usage_error("--layers must be >= 1");
  const GenSpec g = parse_gen(c.gen_text, 2);
  const BcdOptions opts = bcd_options(c);

  Json j = report_head(c, nullptr);
  std::string csv = std::string(kOracleCsvHeader) + "\n";
  int within = 0, compared = 0, violations = 0;
  char line[160];
  std::snprintf(line, sizeof line, "%5s %6s %14s %14s %10s %6s %5s\n", "case", "seed",
                "brute_theta", "bcd_theta", "gap", "cuts", "ok");
  out << line;
  for (int k = 0; k < c.cases; ++k) {
    const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(k);
    const Scenario truth = generate_small_instance(seed, g.devices, c.layers);
    const Scenario solver_view = c.corrupt ? corrupted(truth) : truth;

    std::optional<JointOptimum> brute;
    try {
      brute = brute_force_joint(truth, c.bmax);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kInfeasible) throw;
    }
    std::optional<BcdResult> bcd;
    try {
      bcd = bcd_optimize(solver_view, opts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kInfeasible) throw;
    }
    if (!brute || !bcd) {
      // Both must agree that nothing is feasible.
      const bool ok = !brute && !bcd;
      violations += !ok;
      csv += std::to_string(k) + "," + std::to_string(seed) + ",inf,inf,nan," +
             (ok ? "1" : "0") + ",0,0\n";
      std::snprintf(line, sizeof line, "%5d %6llu %14s %14s %10s %6s %5s\n", k,
                    static_cast<unsigned long long>(seed), brute ? "" : "infeasible",
                    bcd ? "" : "infeasible", "", "", ok ? "yes" : "NO");
      out << line;
      continue;
    }
    ++compared;
    const double gap = bcd->theta / brute->theta - 1.0;
    const bool never_below = gap >= -1e-9;
    const bool close = gap <= 0.05;
    within += close;

    const std::vector<int>& b = brute->decision.batch;
    const CutOptimum enumerated = enumerate_cuts(truth, b);
    bool cut_match = false;
    try {
      const MsSolution ms = solve_ms_dinkelbach(solver_view, b, opts.dinkelbach);
      const double value = objective_theta_prime(solver_view, Decision{b, ms.cuts});
      cut_match = ms.cuts == enumerated.cuts &&
                  std::abs(value - enumerated.objective) <= 1e-9 * std::abs(enumerated.objective);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kInfeasible) throw;
    }
    const bool ok = never_below && cut_match;
    violations += !ok;
    csv += std::to_string(k) + "," + std::to_string(seed) + "," + num(brute->theta) + "," +
           num(bcd->theta) + "," + num(gap) + "," + (never_below ? "1" : "0") + "," +
           (close ? "1" : "0") + "," + (cut_match ? "1" : "0") + "\n";
    std::snprintf(line, sizeof line, "%5d %6llu %14.6g %14.6g %9.3f%% %6s %5s\n", k,
                  static_cast<unsigned long long>(seed), brute->theta, bcd->theta,
                  100.0 * gap, cut_match ? "same" : "DIFF", ok ? "yes" : "NO");
    out << line;
  }
  const double share = compared ? static_cast<double>(within) / compared : 1.0;
  const bool pass = violations == 0 && share >= 0.9;
  j["cases"] = c.cases;
  j["compared"] = compared;
  j["within_5pct"] = within;
  j["violations"] = violations;
  j["pass"] = pass;
  const fs::path dir = prepare_out(c);
  write_file(dir / "oracle.json", j.dump(2) + "\n");
  write_file(dir / "oracle.csv", csv);
  out << within << "/" << compared << " within 5%, " << violations << " violation(s): "
      << (pass ? "PASS" : "FAIL") << "\n";
  if (!pass) {
    err << "error: oracle suite failed (" << violations << " invariant violation(s), "
        << within << "/" << compared << " within 5%)\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  if (c.sweep_text.empty()) usage_error("sweep needs --sweep axis=lo:hi:steps");
  const SweepSpec spec = parse_sweep(c.sweep_text);
  if (c.rounds < 0) usage_error("--rounds must be >= 0 (0 skips simulation)");
  const Resolved r = resolve_scenario(c);
  const SimSettings settings = sim_settings(c);
  sim::TrainConfig tc = train_config(c, std::max(1L, c.rounds));
  tc.stop_at_plateau = true;

  Json j = report_head(c, &r.scenario);
  j["source"] = r.source;
  std::string csv = std::string(kSweepCsvHeader) + "\n";
  const std::vector<double> values = sweep_values(spec);
  for (std::size_t row = 0; row < values.size(); ++row) {
    const Scenario s = apply_axis(r.scenario, spec.axis, values[row]);
    std::unique_ptr<SimWorld> world;
    if (c.rounds > 0) world = std::make_unique<SimWorld>(make_world(s, settings, c.seed));
    for (Policy p : kAllPolicies) {
      std::optional<PolicyOutcome> po;
      try {
        po = decide(p, s, policy_options(c, row));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInfeasible) throw;
      }
      std::string line = spec.axis + "," + num(values[row]) + "," + policy_name(p) + ",";
      if (!po) {
        line += "inf,inf,inf,,,,\n";
        csv += line;
        continue;
      }
      const Evaluation ev = evaluate_decision(s, po->decision);
      line += num(ev.theta) + "," + num(ev.rounds) + "," + num(ev.total_time) + ",";
      if (world) {
        const sim::RunReport rep = simulate(s, po->decision, *world, tc);
        if (rep.plateau_round >= 0) {
          line += std::to_string(rep.plateau_round) + "," + num(rep.plateau_time);
        } else {
          line += ",";
        }
      } else {
        line += ",";
      }
      line += "," + join(po->decision.batch) + "," + join(po->decision.cut) + "\n";
      csv += line;
    }
    out << spec.axis << " = " << num(values[row]) << " done\n";
  }
  const fs::path dir = prepare_out(c);
  j["axis"] = spec.axis;
  j["values"] = values;
  j["rows"] = values.size() * std::size(kAllPolicies);
  write_file(dir / "sweep.json", j.dump(2) + "\n");
  write_file(dir / "sweep.csv", csv);
  out << "sweep " << (dir / "sweep.csv").string() << " (config "
      << j["config_hash"].get<std::string>() << ")\n";
  return kExitOk;
}

void add_input(CLI::App* sub, RunConfig& c) {
  sub->add_option("--scenario", c.scenario_path, "Scenario file (JSON)");
  sub->add_option("--gen", c.gen_text, "Generate a scenario: seed=S,n=N");
  sub->add_option("--lr", c.lr, "Override the step size");
  sub->add_option("--eps", c.eps, "Override the target accuracy");
  sub->add_flag("--calibrate", c.calibrate,
                "Replace smoothness and layer statistics with toy-model estimates");
}

void add_out(CLI::App* sub, RunConfig& c) {
  sub->add_option("--out", c.out_dir,
                  std::string("Output directory (default $") + kOutDirEnv + " or ./sfl-out)");
}

void add_solver(CLI::App* sub, RunConfig& c) {
  sub->add_option("--bmax", c.bmax, "Largest batch size considered");
  sub->add_option("--tol-bcd", c.tol_bcd, "Alternation stopping tolerance (seconds)");
  sub->add_option("--tol-dinkelbach", c.tol_dinkelbach, "Relative Dinkelbach tolerance");
  sub->add_option("--seed", c.seed, "Seed for random policies and simulation");
}

void add_sim(CLI::App* sub, RunConfig& c) {
  sub->add_option("--partition", c.partition, "iid or noniid");
  sub->add_option("--plateau-window", c.plateau_window, "Plateau window (rounds)");
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
    case ErrorKind::kValidation:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kIo:
      return kExitUsage;
    case ErrorKind::kInfeasible:
      return kExitInfeasible;
    case ErrorKind::kDivergence:
      return kExitDivergence;
    case ErrorKind::kGridTooLarge:
      return kExitGridTooLarge;
    case ErrorKind::kNonConvergence:
      return kExitNoConvergence;
  }
  return kExitUsage;
}

std::string config_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"sfl-lab: latency, convergence-bound and batch/cut optimization for split federated learning"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a generated or normalized scenario file");
  add_input(gen, c);
  add_out(gen, c);

  auto* opt = app.add_subcommand("optimize", "Choose batch sizes and cuts for one policy");
  add_input(opt, c);
  add_out(opt, c);
  add_solver(opt, c);
  opt->add_option("--policy", c.policy, "hasfl, rbs-rms, rbs-hams or habs-rms");

  auto* simc = app.add_subcommand("simulate", "Train the toy model under a policy's decision");
  add_input(simc, c);
  add_out(simc, c);
  add_solver(simc, c);
  add_sim(simc, c);
  c.rounds = 300;
  simc->add_option("--rounds", c.rounds, "Rounds to simulate");
  simc->add_option("--policy", c.policy, "hasfl, rbs-rms, rbs-hams or habs-rms");
  simc->add_option("--compare", c.compare, "Extra policies to run on the same data");
  simc->add_flag("--stop-at-plateau", c.stop_at_plateau, "Stop at the loss plateau");

  auto* orc = app.add_subcommand("oracle", "Cross-check the solvers against exhaustive search");
  orc->add_option("--gen", c.gen_text, "Base seed and device count: seed=S,n=N (default n=2)");
  add_out(orc, c);
  add_solver(orc, c);
  orc->add_option("--cases", c.cases, "Number of seeded instances");
  orc->add_option("--layers", c.layers, "Layers per instance");
  orc->add_flag("--corrupt", c.corrupt, "Tripwire: corrupt a latency constant on the solver side");

  auto* sw = app.add_subcommand("sweep", "Sweep one scenario dimension across all policies");
  add_input(sw, c);
  add_out(sw, c);
  add_solver(sw, c);
  add_sim(sw, c);
  sw->add_option("--sweep", c.sweep_text, "axis=lo:hi:steps; axis in device-compute, "
                                          "server-compute, uplink, inter-server, n");
  sw->add_option("--rounds", c.rounds, "Simulation rounds per row, 0 skips simulation");

  std::vector<const char*> argv{"sfl-lab"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (orc->parsed() && orc->count("--bmax") == 0) c.bmax = 16;

  try {
    if (gen->parsed()) {
      c.command = "generate";
      return cmd_generate(c, out);
    }
    if (opt->parsed()) {
      c.command = "optimize";
      return cmd_optimize(c, out, err);
    }
    if (simc->parsed()) {
      c.command = "simulate";
      return cmd_simulate(c, out);
    }
    if (orc->parsed()) {
      c.command = "oracle";
      return cmd_oracle(c, out, err);
    }
    c.command = "sweep";
    return cmd_sweep(c, out);
  } catch (const Error& e) {
    err << "error: " << error_kind_name(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  }
}

}  // namespace sfl::cli
