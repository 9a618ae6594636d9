// Copyright 2026 The SDMF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: experiment runs, budget calibration, and the
// average-attack report.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sdmf/sdmf.hpp"

namespace {

int RunCommand(const std::string& path) {
  const sdmf::ExperimentConfig cfg = sdmf::load_config(path);
  const std::size_t failed = sdmf::run_experiments(cfg);
  std::cout << "wrote " << cfg.output << " and " << sdmf::summary_path(cfg)
            << "\n";
  if (failed > 0) {
    std::cerr << failed << " cell(s) failed\n";
    return 1;
  }
  return 0;
}

int CalibrateCommand(double eps_i, std::optional<double> eps_p, std::size_t h,
                     std::size_t items, double z) {
  const double permanent = eps_p.value_or(2.0 * eps_i);
  try {
    const sdmf::RRParams rr = sdmf::calibrate(eps_i, permanent, h, items, z);
    std::printf("f       %.17g\n", rr.f);
    std::printf("p       %.17g\n", rr.p);
    std::printf("q       %.17g\n", rr.q);
    std::printf("p_star  %.17g\n", rr.p_star);
    std::printf("q_star  %.17g\n", rr.q_star);
    std::printf("h       %zu\n", rr.h);
    std::printf("z       %.17g\n", rr.z);
    std::printf("eps_P   %.17g\n", sdmf::epsilon_P_of(rr.f, h));
    std::printf("eps_I   %.17g\n",
                sdmf::epsilon_I_of(rr.p_star, rr.q_star, h));
  } catch (const sdmf::InfeasibleCalibration& e) {
    std::cerr << "infeasible: " << e.what() << " (violated: " << e.bound()
              << ")\n";
    return 2;
  }
  return 0;
}

int AttackCommand(const std::string& path) {
  const sdmf::ExperimentConfig cfg = sdmf::load_config(path);
  const sdmf::AttackReport r = sdmf::average_attack_report(cfg);
  std::printf("clients                  %zu\n", r.clients);
  std::printf("rounds                   %zu\n", r.rounds);
  std::printf("accuracy vs B            %.6f\n", r.accuracy_vs_b);
  std::printf("rated bits recovered     %.6f\n", r.rated_agreement_b);
  std::printf("agreement with B'        %.6f\n", r.agreement_vs_permanent);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private distributed matrix factorization experiments"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run a learning-curve experiment");
  run->add_option("--config", run_config, "Config file")
      ->required()
      ->check(CLI::ExistingFile);

  double eps_i = 0.0;
  std::optional<double> eps_p;
  std::size_t h = 0;
  std::size_t items = 0;
  double z = 0.0;
  auto* cal = app.add_subcommand("calibrate",
                                 "Solve (f, p, q) for a client's budget");
  cal->set_help_flag("--help", "Print this help message and exit");
  cal->add_option("--eps-i", eps_i, "Instantaneous budget")->required();
  cal->add_option("--eps-p", eps_p, "Permanent budget (default 2 * eps-i)");
  cal->add_option("--h", h, "Number of rated items")->required();
  cal->add_option("--items", items, "Item universe size")->required();
  cal->add_option("--z", z, "Expected gradients per round")->required();

  std::string attack_config;
  auto* attack =
      app.add_subcommand("attack", "Average-attack report for a config");
  attack->add_option("--config", attack_config, "Config file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return RunCommand(run_config);
    if (*cal) return CalibrateCommand(eps_i, eps_p, h, items, z);
    if (*attack) return AttackCommand(attack_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
