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

#include "sfl/profiles.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "sfl/error.h"
#include "sfl/random.h"

namespace sfl {
namespace {

using nlohmann::json;

[[noreturn]] void fail_validation(const std::string& field,
                                  const std::string& what) {
  throw Error(ErrorKind::kValidation, field + ": " + what);
}

void require_positive(double value, const std::string& field) {
  // +inf is accepted: an infinitely fast resource simply contributes 0 s.
  if (!(value > 0.0)) fail_validation(field, "must be strictly positive");
}

void require_non_negative(const std::vector<double>& values,
                          const std::string& field) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!(values[j] >= 0.0) || !std::isfinite(values[j])) {
      fail_validation(field + "[" + std::to_string(j) + "]",
                      "must be finite and non-negative");
    }
  }
}

void require_monotone(const std::vector<double>& values,
                      const std::string& field) {
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] < values[j - 1]) {
      fail_validation(field + "[" + std::to_string(j) + "]",
                      "cumulative values must be non-decreasing");
    }
  }
}

std::vector<double> prefix_sum(const std::vector<double>& values) {
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    acc += values[j];
    out[j] = acc;
  }
  return out;
}

std::vector<double> differences(const std::vector<double>& cum) {
  std::vector<double> out(cum.size());
  for (std::size_t j = 0; j < cum.size(); ++j) {
    out[j] = j == 0 ? cum[0] : cum[j] - cum[j - 1];
  }
  return out;
}

// --- JSON mapping -----------------------------------------------------------

template <typename T>
T read_field(const json& object, std::string_view key, const std::string& ctx) {
  const auto it = object.find(key);
  if (it == object.end()) {
    throw Error(ErrorKind::kParse,
                ctx + ": missing field \"" + std::string(key) + "\"");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, ctx + "." + std::string(key) +
                                       ": wrong type (" + e.what() + ")");
  }
}

constexpr const char* kLayerKeys[] = {
    "fp_flops_cum", "bp_flops_cum", "act_bits",  "grad_bits",
    "param_bits",   "opt_state_bits_cum", "grad_var", "grad_moment"};

std::vector<double>* layer_field(LayerProfile& p, std::string_view key) {
  if (key == "fp_flops_cum") return &p.fp_flops_cum;
  if (key == "bp_flops_cum") return &p.bp_flops_cum;
  if (key == "act_bits") return &p.act_bits;
  if (key == "grad_bits") return &p.grad_bits;
  if (key == "param_bits") return &p.param_bits;
  if (key == "opt_state_bits_cum") return &p.opt_state_bits_cum;
  if (key == "grad_var") return &p.grad_var;
  return &p.grad_moment;
}

LayerProfile layers_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kParse, "layers: expected object");
  LayerProfile p;
  for (const char* key : kLayerKeys) {
    *layer_field(p, key) = read_field<std::vector<double>>(j, key, "layers");
  }
  return p;
}

json layers_to_json(const LayerProfile& p) {
  json j = json::object();
  LayerProfile copy = p;
  for (const char* key : kLayerKeys) j[key] = *layer_field(copy, key);
  return j;
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, what + ": " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::vector<double> LayerProfile::fp_flops_per_layer() const {
  return differences(fp_flops_cum);
}

std::vector<double> LayerProfile::bp_flops_per_layer() const {
  return differences(bp_flops_cum);
}

CumulativeStats cumulative_stats(const LayerProfile& layers) {
  return {prefix_sum(layers.grad_moment), prefix_sum(layers.act_bits),
          prefix_sum(layers.grad_bits)};
}

void validate(const LayerProfile& layers) {
  const std::size_t num = layers.fp_flops_cum.size();
  if (num == 0) fail_validation("layers", "need at least one layer");
  LayerProfile copy = layers;
  for (const char* key : kLayerKeys) {
    const std::vector<double>& field = *layer_field(copy, key);
    if (field.size() != num) {
      fail_validation(std::string("layers.") + key,
                      "length " + std::to_string(field.size()) +
                          " differs from fp_flops_cum length " +
                          std::to_string(num));
    }
    require_non_negative(field, std::string("layers.") + key);
  }
  require_monotone(layers.fp_flops_cum, "layers.fp_flops_cum");
  require_monotone(layers.bp_flops_cum, "layers.bp_flops_cum");
  require_monotone(layers.param_bits, "layers.param_bits");
  require_monotone(layers.opt_state_bits_cum, "layers.opt_state_bits_cum");
  if (!(layers.fp_total() > 0.0)) {
    fail_validation("layers.fp_flops_cum", "total forward FLOPs must be > 0");
  }
  if (!(layers.bp_total() > 0.0)) {
    fail_validation("layers.bp_flops_cum", "total backward FLOPs must be > 0");
  }
}

void validate(const DeviceProfile& device, int index) {
  const std::string prefix = "devices[" + std::to_string(index) + "].";
  require_positive(device.compute_flops, prefix + "compute_flops");
  require_positive(device.up_rate_edge, prefix + "up_rate_edge");
  require_positive(device.down_rate_edge, prefix + "down_rate_edge");
  require_positive(device.up_rate_fed, prefix + "up_rate_fed");
  require_positive(device.down_rate_fed, prefix + "down_rate_fed");
  require_positive(device.memory_bits, prefix + "memory_bits");
}

void validate(const ServerProfile& server) {
  require_positive(server.compute_flops, "server.compute_flops");
  require_positive(server.up_rate_fed, "server.up_rate_fed");
  require_positive(server.down_rate_fed, "server.down_rate_fed");
}

void validate(const Scenario& scenario) {
  validate(scenario.layers);
  if (scenario.devices.empty()) {
    fail_validation("devices", "need at least one device");
  }
  for (int i = 0; i < scenario.num_devices(); ++i) {
    validate(scenario.devices[i], i);
  }
  validate(scenario.server);
  const TrainingParams& t = scenario.training;
  if (!(t.smoothness > 0.0) || !std::isfinite(t.smoothness)) {
    fail_validation("training.smoothness", "must be finite and > 0");
  }
  if (!(t.lr > 0.0) || t.lr * t.smoothness > 1.0) {
    fail_validation("training.lr",
                    "convergence-bound precondition 0 < lr <= 1/smoothness "
                    "violated (lr=" + std::to_string(t.lr) + ", 1/smoothness=" +
                        std::to_string(1.0 / t.smoothness) + ")");
  }
  if (t.agg_interval < 1) {
    fail_validation("training.agg_interval", "must be >= 1");
  }
  if (!(t.target_eps > 0.0)) {
    fail_validation("training.target_eps", "must be > 0");
  }
  if (!(t.loss_gap >= 0.0) || !std::isfinite(t.loss_gap)) {
    fail_validation("training.loss_gap", "must be finite and >= 0");
  }
}

Scenario parse_scenario(const std::string& text,
                        const std::filesystem::path& base_dir) {
  const json root = parse_json_text(text, "scenario");
  if (!root.is_object()) throw Error(ErrorKind::kParse, "scenario: expected object");
  Scenario s;

  const auto layers = root.find("layers");
  if (layers == root.end()) throw Error(ErrorKind::kParse, "scenario: missing \"layers\"");
  if (layers->is_string()) {
    const std::filesystem::path ref = layers->get<std::string>();
    const std::filesystem::path resolved = ref.is_absolute() ? ref : base_dir / ref;
    s.layers = layers_from_json(
        parse_json_text(read_text_file(resolved), resolved.string()));
  } else {
    s.layers = layers_from_json(*layers);
  }

  const auto devices = root.find("devices");
  if (devices == root.end() || !devices->is_array()) {
    throw Error(ErrorKind::kParse, "scenario: \"devices\" must be an array");
  }
  for (std::size_t i = 0; i < devices->size(); ++i) {
    const json& d = (*devices)[i];
    const std::string ctx = "devices[" + std::to_string(i) + "]";
    DeviceProfile dev;
    dev.compute_flops = read_field<double>(d, "compute_flops", ctx);
    dev.up_rate_edge = read_field<double>(d, "up_rate_edge", ctx);
    dev.down_rate_edge = read_field<double>(d, "down_rate_edge", ctx);
    dev.up_rate_fed = read_field<double>(d, "up_rate_fed", ctx);
    dev.down_rate_fed = read_field<double>(d, "down_rate_fed", ctx);
    dev.memory_bits = read_field<double>(d, "memory_bits", ctx);
    s.devices.push_back(dev);
  }

  const json server = read_field<json>(root, "server", "scenario");
  s.server.compute_flops = read_field<double>(server, "compute_flops", "server");
  s.server.up_rate_fed = read_field<double>(server, "up_rate_fed", "server");
  s.server.down_rate_fed = read_field<double>(server, "down_rate_fed", "server");

  const json training = read_field<json>(root, "training", "scenario");
  s.training.lr = read_field<double>(training, "lr", "training");
  s.training.agg_interval = read_field<int>(training, "agg_interval", "training");
  s.training.target_eps = read_field<double>(training, "target_eps", "training");
  s.training.smoothness = read_field<double>(training, "smoothness", "training");
  s.training.loss_gap = read_field<double>(training, "loss_gap", "training");

  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_text_file(path), path.parent_path());
}

std::string serialize_scenario(const Scenario& scenario) {
  json root;
  root["layers"] = layers_to_json(scenario.layers);
  root["devices"] = json::array();
  for (const DeviceProfile& d : scenario.devices) {
    root["devices"].push_back({{"compute_flops", d.compute_flops},
                               {"up_rate_edge", d.up_rate_edge},
                               {"down_rate_edge", d.down_rate_edge},
                               {"up_rate_fed", d.up_rate_fed},
                               {"down_rate_fed", d.down_rate_fed},
                               {"memory_bits", d.memory_bits}});
  }
  root["server"] = {{"compute_flops", scenario.server.compute_flops},
                    {"up_rate_fed", scenario.server.up_rate_fed},
                    {"down_rate_fed", scenario.server.down_rate_fed}};
  const TrainingParams& t = scenario.training;
  root["training"] = {{"lr", t.lr},
                      {"agg_interval", t.agg_interval},
                      {"target_eps", t.target_eps},
                      {"smoothness", t.smoothness},
                      {"loss_gap", t.loss_gap}};
  return root.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << serialize_scenario(scenario);
}

void validate(const ScenarioRanges& ranges) {
  const std::pair<const char*, const Range*> all[] = {
      {"device_compute", &ranges.device_compute},
      {"uplink", &ranges.uplink},
      {"downlink", &ranges.downlink},
      {"server_link", &ranges.server_link},
      {"server_compute", &ranges.server_compute},
      {"memory", &ranges.memory}};
  for (const auto& [name, r] : all) {
    if (!(r->lo > 0.0) || !(r->hi >= r->lo) || !std::isfinite(r->hi)) {
      throw Error(ErrorKind::kInvalidArgument,
                  std::string("ranges.") + name +
                      ": need 0 < lo <= hi < inf");
    }
  }
}

Scenario generate_scenario(std::uint64_t seed, int num_devices,
                           const ScenarioRanges& ranges) {
  if (num_devices < 1) {
    throw Error(ErrorKind::kInvalidArgument, "generate_scenario: n_devices must be >= 1");
  }
  validate(ranges);
  Rng rng = make_rng({seed, 0x5CE9A210ULL});
  Scenario s;
  s.layers = ranges.layers.fp_flops_cum.empty() ? default_layer_profile()
                                                : ranges.layers;
  s.devices.reserve(num_devices);
  for (int i = 0; i < num_devices; ++i) {
    DeviceProfile d;
    d.compute_flops = uniform_real(rng, ranges.device_compute.lo, ranges.device_compute.hi);
    d.up_rate_edge = uniform_real(rng, ranges.uplink.lo, ranges.uplink.hi);
    d.down_rate_edge = uniform_real(rng, ranges.downlink.lo, ranges.downlink.hi);
    d.up_rate_fed = uniform_real(rng, ranges.uplink.lo, ranges.uplink.hi);
    d.down_rate_fed = uniform_real(rng, ranges.downlink.lo, ranges.downlink.hi);
    d.memory_bits = uniform_real(rng, ranges.memory.lo, ranges.memory.hi);
    s.devices.push_back(d);
  }
  s.server.compute_flops = uniform_real(rng, ranges.server_compute.lo, ranges.server_compute.hi);
  s.server.up_rate_fed = uniform_real(rng, ranges.server_link.lo, ranges.server_link.hi);
  s.server.down_rate_fed = uniform_real(rng, ranges.server_link.lo, ranges.server_link.hi);
  s.training = ranges.training;
  validate(s);
  return s;
}

LayerProfile default_layer_profile() {
  LayerProfile p;
  p.fp_flops_cum = {4.0e7, 1.2e8, 2.0e8, 2.6e8, 2.9e8, 3.0e8};
  p.bp_flops_cum = {8.0e7, 2.4e8, 4.0e8, 5.2e8, 5.8e8, 6.0e8};
  p.act_bits = {2.1e6, 1.05e6, 5.2e5, 2.6e5, 1.3e5, 3.2e2};
  p.grad_bits = p.act_bits;
  p.param_bits = {5.5e4, 1.2e6, 9.6e6, 3.8e7, 1.5e8, 1.6e8};
  p.opt_state_bits_cum = p.param_bits;
  p.grad_var = {300.0, 250.0, 200.0, 150.0, 100.0, 50.0};
  p.grad_moment = {2.0, 2.0, 1.5, 1.5, 1.0, 1.0};
  return p;
}

LayerProfile random_layer_profile(std::uint64_t seed, int num_layers) {
  if (num_layers < 1) {
    throw Error(ErrorKind::kInvalidArgument, "random_layer_profile: need >= 1 layer");
  }
  Rng rng = make_rng({seed, 0x1A7E5ULL, static_cast<std::uint64_t>(num_layers)});
  LayerProfile p;
  double fp = 0.0, bp = 0.0, params = 0.0, opt = 0.0;
  double act = uniform_real(rng, 1.0e6, 3.0e6);
  for (int j = 0; j < num_layers; ++j) {
    const double layer_fp = uniform_real(rng, 0.5e8, 1.5e8);
    fp += layer_fp;
    bp += layer_fp * uniform_real(rng, 1.6, 2.4);
    params += uniform_real(rng, 1.0e6, 4.0e6);
    opt = std::max(opt, params * uniform_real(rng, 1.0, 2.0));
    p.fp_flops_cum.push_back(fp);
    p.bp_flops_cum.push_back(bp);
    act *= j == 0 ? 1.0 : uniform_real(rng, 0.3, 0.6);
    p.act_bits.push_back(act);
    p.grad_bits.push_back(act * uniform_real(rng, 0.9, 1.1));
    p.param_bits.push_back(params);
    p.opt_state_bits_cum.push_back(opt);
    p.grad_var.push_back(uniform_real(rng, 0.5, 1.5) / num_layers);
    p.grad_moment.push_back(uniform_real(rng, 0.5, 1.5) / num_layers);
  }
  return p;
}

Scenario generate_small_instance(std::uint64_t seed, int num_devices,
                                 int num_layers) {
  if (num_devices < 1) {
    throw Error(ErrorKind::kInvalidArgument, "generate_small_instance: need >= 1 device");
  }
  Rng rng = make_rng({seed, 0x0AC1EULL, static_cast<std::uint64_t>(num_devices),
                      static_cast<std::uint64_t>(num_layers)});
  Scenario s;
  s.layers = random_layer_profile(seed, num_layers);
  for (int i = 0; i < num_devices; ++i) {
    DeviceProfile d;
    d.compute_flops = uniform_real(rng, 0.5e10, 2.0e10);
    d.up_rate_edge = uniform_real(rng, 2e7, 8e7);
    d.down_rate_edge = uniform_real(rng, 5e7, 1e8);
    d.up_rate_fed = uniform_real(rng, 1e7, 5e7);
    d.down_rate_fed = uniform_real(rng, 2e7, 8e7);
    d.memory_bits = uniform_real(rng, 0.5e8, 2e8);
    s.devices.push_back(d);
  }
  s.server.compute_flops = uniform_real(rng, 1e10, 4e10);
  s.server.up_rate_fed = uniform_real(rng, 5e7, 1e8);
  s.server.down_rate_fed = uniform_real(rng, 5e7, 1e8);

  // Variance with every b_i = 1 is one to four times the target, so small
  // batches are infeasible and the batch-size trade-off is active.
  s.training.lr = 0.01;
  s.training.smoothness = 10.0;
  s.training.agg_interval = static_cast<int>(uniform_int(rng, 1, 3));
  s.training.target_eps = 1.0;
  s.training.loss_gap = 1.0;
  const double variance_share = uniform_real(rng, 1.0, 4.0);
  double var_sum = 0.0;
  for (double v : s.layers.grad_var) var_sum += v;
  const double wanted = variance_share * num_devices /
                        (s.training.smoothness * s.training.lr);
  for (double& v : s.layers.grad_var) v *= wanted / var_sum;
  // Full-depth drift takes 10% to 40% of the target when I > 1.
  const double i2 = static_cast<double>(s.training.agg_interval) *
                    s.training.agg_interval;
  const double drift_coef = 4.0 * s.training.smoothness * s.training.smoothness *
                            s.training.lr * s.training.lr * i2;
  double moment_sum = 0.0;
  for (double g : s.layers.grad_moment) moment_sum += g;
  const double drift_share = uniform_real(rng, 0.1, 0.4);
  for (double& g : s.layers.grad_moment) {
    g *= drift_share * s.training.target_eps / (drift_coef * moment_sum);
  }
  validate(s);
  return s;
}

}  // namespace sfl
