// Copyright 2026 The rtnmpc Authors
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

// Command-line front end over the rtnmpc shared library (C API only).

#include <sys/utsname.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "rtnmpc.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerification = 3;

struct ConfigDeleter {
  void operator()(rtn_config* c) const { rtn_config_free(c); }
};
struct LogDeleter {
  void operator()(rtn_log* l) const { rtn_log_free(l); }
};
using ConfigPtr = std::unique_ptr<rtn_config, ConfigDeleter>;
using LogPtr = std::unique_ptr<rtn_log, LogDeleter>;

int fail(int code, const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return code;
}

std::string last_error() { return rtn_last_error(); }

std::vector<std::string> config_key_list(const rtn_config* config) {
  std::vector<char> buffer(16384);
  if (rtn_config_keys(config, buffer.data(), buffer.size()) != RTN_OK) {
    return {};
  }
  std::vector<std::string> keys;
  std::istringstream in(buffer.data());
  std::string key;
  while (std::getline(in, key)) {
    if (!key.empty()) keys.push_back(key);
  }
  return keys;
}

std::string host_descriptor() {
  std::string cpu = "unknown cpu";
  std::ifstream info("/proc/cpuinfo");
  std::string line;
  while (std::getline(info, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        cpu = line.substr(colon + 2);
      }
      break;
    }
  }
  utsname uts{};
  if (uname(&uts) == 0) {
    return cpu + " / " + uts.sysname + " " + uts.release + " " + uts.machine;
  }
  return cpu;
}

// Shared flags: config file, per-key overrides, seed, output directory.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> key_flags;
  long seed = -1;
  std::string out_dir = "out";
  bool no_timing = false;
};

void add_common(CLI::App* cmd, CommonOptions* opts,
                const std::vector<std::string>& keys) {
  cmd->add_option("--config", opts->config_path,
                  "Configuration file (defaults apply when omitted)");
  cmd->add_option("--set", opts->sets,
                  "Override a key, e.g. --set vehicle.mass=210")
      ->expected(-1);
  cmd->add_option("--seed", opts->seed, "Override scenario.seed");
  cmd->add_option("--out", opts->out_dir, "Output directory");
  cmd->add_flag("--no-timing", opts->no_timing,
                "Suppress the wall-time column in CSV output");
  // Every config key doubles as a flag of the same name.
  for (const std::string& key : keys) {
    cmd->add_option_function<std::string>(
           "--" + key,
           [opts, key](const std::string& value) {
             opts->key_flags[key] = value;
           },
           "Override " + key)
        ->group("Configuration keys");
  }
}

ConfigPtr build_config(const CommonOptions& opts, int* exit_code) {
  ConfigPtr config(opts.config_path.empty()
                       ? rtn_config_default()
                       : rtn_config_load(opts.config_path.c_str()));
  if (!config) {
    *exit_code = fail(kExitValidation, last_error());
    return nullptr;
  }
  for (const std::string& assignment : opts.sets) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
      *exit_code =
          fail(kExitValidation, "--set expects key=value: " + assignment);
      return nullptr;
    }
    if (rtn_config_set(config.get(), assignment.substr(0, eq).c_str(),
                       assignment.substr(eq + 1).c_str()) != RTN_OK) {
      *exit_code = fail(kExitValidation, last_error());
      return nullptr;
    }
  }
  for (const auto& [key, value] : opts.key_flags) {
    if (rtn_config_set(config.get(), key.c_str(), value.c_str()) != RTN_OK) {
      *exit_code = fail(kExitValidation, last_error());
      return nullptr;
    }
  }
  if (opts.seed >= 0) {
    rtn_config_set(config.get(), "scenario.seed",
                   std::to_string(opts.seed).c_str());
  }
  if (rtn_config_validate(config.get()) != RTN_OK) {
    *exit_code = fail(kExitValidation,
                      "invalid configuration:\n" + last_error());
    return nullptr;
  }
  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) {
    *exit_code = fail(kExitRuntime,
                      "cannot create output directory " + opts.out_dir);
    return nullptr;
  }
  return config;
}

int write_outputs(const rtn_log* log, const std::string& out_dir,
                  const std::string& mode, bool no_timing) {
  const std::string csv = out_dir + "/log_" + mode + ".csv";
  const std::string summary = out_dir + "/summary_" + mode + ".txt";
  if (rtn_log_write_csv(log, csv.c_str(), no_timing ? 0 : 1) != RTN_OK) {
    return fail(kExitRuntime, last_error());
  }
  if (rtn_log_write_summary(log, summary.c_str()) != RTN_OK) {
    return fail(kExitRuntime, last_error());
  }
  std::cout << "wrote " << csv << " and " << summary << "\n";
  return kExitOk;
}

std::vector<double> column(const rtn_log* log, const char* name) {
  const size_t steps = static_cast<size_t>(rtn_log_steps(log));
  std::vector<double> out(steps);
  size_t len = 0;
  if (rtn_log_column(log, name, out.data(), out.size(), &len) != RTN_OK) {
    return {};
  }
  out.resize(len);
  return out;
}

double summary_value(const rtn_log* log, const char* key) {
  double value = 0.0;
  rtn_log_summary_value(log, key, &value);
  return value;
}

double config_number(const rtn_config* config, const char* key,
                     double fallback) {
  char buffer[64];
  if (rtn_config_get(config, key, buffer, sizeof(buffer)) != RTN_OK) {
    return fallback;
  }
  try {
    return std::stod(buffer);
  } catch (...) {
    return fallback;
  }
}

int run_simulate(const CommonOptions& opts, const std::string& mode) {
  int code = kExitOk;
  ConfigPtr config = build_config(opts, &code);
  if (!config) return code;

  rtn_log* raw = nullptr;
  const int rc = rtn_run_closed_loop(config.get(), mode.c_str(), &raw);
  LogPtr log(raw);
  if (rc != RTN_OK && !log) {
    return fail(kExitRuntime, last_error());
  }
  const int write_rc =
      write_outputs(log.get(), opts.out_dir, mode, opts.no_timing);
  if (write_rc != kExitOk) return write_rc;
  if (rc != RTN_OK) {
    return fail(kExitRuntime, last_error());
  }
  std::printf("steps = %d, rms tracking error = %.4f m\n",
              rtn_log_steps(log.get()),
              summary_value(log.get(), "rms_tracking_error"));
  return kExitOk;
}

int run_compare(const CommonOptions& opts, int reps) {
  int code = kExitOk;
  ConfigPtr config = build_config(opts, &code);
  if (!config) return code;

  std::vector<double> rti_times;
  std::vector<double> sqp_times;
  LogPtr first_rti;
  LogPtr first_sqp;
  for (int rep = 0; rep < std::max(1, reps); ++rep) {
    for (const char* mode : {"rti", "sqp"}) {
      rtn_log* raw = nullptr;
      if (rtn_run_closed_loop(config.get(), mode, &raw) != RTN_OK) {
        rtn_log_free(raw);
        return fail(kExitRuntime, last_error());
      }
      LogPtr log(raw);
      auto times = column(log.get(), "step_time");
      auto& pool = std::string(mode) == "rti" ? rti_times : sqp_times;
      // Warm-up step excluded: the first solve pays one-off setup costs.
      pool.insert(pool.end(), times.begin() + (times.empty() ? 0 : 1),
                  times.end());
      if (rep == 0) {
        (std::string(mode) == "rti" ? first_rti : first_sqp) =
            std::move(log);
      }
    }
  }

  const int rc_a = write_outputs(first_rti.get(), opts.out_dir, "rti",
                                 opts.no_timing);
  if (rc_a != kExitOk) return rc_a;
  const int rc_b = write_outputs(first_sqp.get(), opts.out_dir, "sqp",
                                 opts.no_timing);
  if (rc_b != kExitOk) return rc_b;

  auto stats = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double mean =
        std::accumulate(v.begin(), v.end(), 0.0) / std::max<size_t>(1, v.size());
    const double p95 = v.empty() ? 0.0
                                 : v[static_cast<size_t>(
                                       std::min<double>(v.size() - 1.0,
                                                        std::ceil(0.95 * v.size()) - 1.0))];
    const double max = v.empty() ? 0.0 : v.back();
    return std::array<double, 3>{mean, p95, max};
  };
  const auto rti_stat = stats(rti_times);
  const auto sqp_stat = stats(sqp_times);

  // Input-sequence RMS difference, absolute and relative to the
  // configured increment normalization ranges.
  const auto rti_torque = column(first_rti.get(), "input_torque");
  const auto sqp_torque = column(first_sqp.get(), "input_torque");
  const auto rti_steer = column(first_rti.get(), "input_steer_rate");
  const auto sqp_steer = column(first_sqp.get(), "input_steer_rate");
  const size_t n = std::min(rti_torque.size(), sqp_torque.size());
  double torque_sq = 0.0;
  double steer_sq = 0.0;
  for (size_t k = 0; k < n; ++k) {
    torque_sq += std::pow(rti_torque[k] - sqp_torque[k], 2);
    steer_sq += std::pow(rti_steer[k] - sqp_steer[k], 2);
  }
  const double torque_rms = n > 0 ? std::sqrt(torque_sq / n) : 0.0;
  const double steer_rms = n > 0 ? std::sqrt(steer_sq / n) : 0.0;
  const double torque_range =
      config_number(config.get(), "cost.range_dtorque", 100.0);
  const double steer_range =
      config_number(config.get(), "cost.range_dsteer", 1.0);

  const double speedup =
      rti_stat[0] > 0.0 ? sqp_stat[0] / rti_stat[0] : 0.0;

  std::ostringstream report;
  report.precision(6);
  report << "host = " << host_descriptor() << "\n"
         << "reps = " << std::max(1, reps) << "\n"
         << "steps_per_run = " << rtn_log_steps(first_rti.get()) << "\n"
         << "rti.mean_step_time = " << rti_stat[0] << "\n"
         << "rti.p95_step_time = " << rti_stat[1] << "\n"
         << "rti.max_step_time = " << rti_stat[2] << "\n"
         << "rti.rms_tracking_error = "
         << summary_value(first_rti.get(), "rms_tracking_error") << "\n"
         << "sqp.mean_step_time = " << sqp_stat[0] << "\n"
         << "sqp.p95_step_time = " << sqp_stat[1] << "\n"
         << "sqp.max_step_time = " << sqp_stat[2] << "\n"
         << "sqp.rms_tracking_error = "
         << summary_value(first_sqp.get(), "rms_tracking_error") << "\n"
         << "input_rms_diff_torque = " << torque_rms << "\n"
         << "input_rms_diff_torque_fraction = " << torque_rms / torque_range
         << "\n"
         << "input_rms_diff_steer_rate = " << steer_rms << "\n"
         << "input_rms_diff_steer_rate_fraction = " << steer_rms / steer_range
         << "\n"
         << "speedup_ratio = " << speedup << "\n";

  const std::string path = opts.out_dir + "/compare_report.txt";
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    return fail(kExitRuntime, "cannot open " + path);
  }
  out << report.str();
  std::cout << report.str() << "wrote " << path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-tracking NMPC: real-time iteration controller, "
               "converged-SQP baseline, and closed-loop vehicle simulator"};
  app.require_subcommand(1);

  // Key flags come from the library so the CLI never hardcodes the schema.
  ConfigPtr probe(rtn_config_default());
  const std::vector<std::string> keys =
      probe ? config_key_list(probe.get()) : std::vector<std::string>{};

  CommonOptions sim_opts;
  std::string mode = "rti";
  CLI::App* simulate =
      app.add_subcommand("simulate", "Run one closed-loop scenario");
  add_common(simulate, &sim_opts, keys);
  simulate->add_option("--mode", mode, "Controller mode: rti or sqp")
      ->check(CLI::IsMember({"rti", "sqp"}));

  CommonOptions cmp_opts;
  int reps = 1;
  CLI::App* compare = app.add_subcommand(
      "compare", "Run both controller modes on the identical scenario");
  add_common(compare, &cmp_opts, keys);
  compare->add_option("--reps", reps,
                      "Repetitions pooled into the timing statistics");

  std::string suite = "all";
  bool inject_bug = false;
  std::string verify_out;
  CLI::App* verify =
      app.add_subcommand("verify", "Run the numerical verification suites");
  verify->add_option("--suite", suite,
                     "all, jacobian, euler, qp or dynamics");
  verify->add_flag("--inject-jacobian-bug", inject_bug,
                   "Prove the jacobian suite detects a seeded defect");
  verify->add_option("--out", verify_out,
                     "Write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    return run_simulate(sim_opts, mode);
  }
  if (compare->parsed()) {
    return run_compare(cmp_opts, reps);
  }
  if (verify->parsed()) {
    const int rc = rtn_verify(suite.c_str(), inject_bug ? 1 : 0,
                              verify_out.empty() ? nullptr
                                                 : verify_out.c_str());
    if (rc == RTN_OK) {
      if (!verify_out.empty()) std::cout << "wrote " << verify_out << "\n";
      return kExitOk;
    }
    if (rc == RTN_ERR_VERIFICATION) {
      std::cerr << rtn_last_error() << "\n";
      return kExitVerification;
    }
    return fail(kExitRuntime, last_error());
  }
  return kExitOk;
}
