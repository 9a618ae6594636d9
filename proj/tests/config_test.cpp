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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "sdmf/config.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/experiment.hpp"

namespace sdmf {
namespace {

TEST(ParseConfigTest, ReadsKeysListsAndComments) {
  ExperimentConfig c = parse_config(R"(# Task 1
task = numerical
k = 10          # latent size
eta0 = 0.5
eps_I = 4, 1
eps_g = 0.25
alpha_inf = true
isgld_eps = 4,2
averaging = per-item
repetitions = 3
seed = 42
output = out/curves.csv
)");
  EXPECT_EQ(c.task, Task::kNumerical);
  EXPECT_EQ(c.k, 10u);
  EXPECT_EQ(c.eta0, 0.5);
  EXPECT_EQ(c.eps_I, (std::vector<double>{4, 1}));
  EXPECT_EQ(c.eps_g, (std::vector<double>{0.25}));
  EXPECT_TRUE(c.alpha_inf);
  EXPECT_EQ(c.isgld_eps, (std::vector<double>{4, 2}));
  EXPECT_EQ(c.averaging, ItemAveraging::kPerItem);
  EXPECT_EQ(c.repetitions, 3u);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(summary_path(c), "out/curves_summary.csv");
}

TEST(ParseConfigTest, Randomizer) {
  ExperimentConfig c = parse_config("randomizer_f = 0.5\nrandomizer_p = 0.1\n"
                                    "randomizer_q = 0.9\n");
  ASSERT_TRUE(c.randomizer.has_value());
  EXPECT_EQ(c.randomizer->f, 0.5);
  EXPECT_EQ(c.randomizer->q, 0.9);
}

TEST(ParseConfigTest, ErrorsCarryLineNumbers) {
  try {
    parse_config("k = 5\nbogus = 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_config("k = five\n"), ParseError);
  EXPECT_THROW(parse_config("k\n"), ParseError);
  EXPECT_THROW(parse_config("repetitions = -1\n"), ParseError);
  EXPECT_THROW(parse_config("repetitions = 0\n"), InvalidArgument);
  EXPECT_THROW(parse_config("task = one-class\nisgld_eps = 2\n"),
               InvalidArgument);
  EXPECT_THROW(parse_config("noise = maybe\n"), ParseError);
}

TEST(ExperimentCellsTest, TaskOneGrid) {
  ExperimentConfig c = parse_config(
      "eps_I = 4, 1, 0.25, 0.0625\neps_g = 4, 1, 0.25, 0.0625\n"
      "alpha_inf = true\nisgld_eps = 4, 2\nrepetitions = 2\n");
  auto cells = experiment_cells(c);
  std::size_t sdmf = 0, inf = 0, base = 0;
  for (const Cell& cell : cells) {
    if (cell.variant == Variant::kSdmf) ++sdmf;
    if (cell.variant == Variant::kSdmfAlphaInf) {
      ++inf;
      EXPECT_EQ(cell.eps_g, 0.0);
    }
    if (cell.variant == Variant::kNonPrivate || cell.variant == Variant::kIsgld) {
      ++base;
    }
  }
  EXPECT_EQ(sdmf, 2u * 16u);
  EXPECT_EQ(inf, 2u * 4u);
  EXPECT_EQ(base, 2u * 3u);
}

TEST(RunExperimentsTest, WritesDeterministicCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "sdmf_config_test";
  std::filesystem::create_directories(dir);
  std::ostringstream text;
  text << "synthetic_users = 40\nsynthetic_items = 60\nsynthetic_ratings = 900\n"
       << "k = 3\neta0 = 0.3\neps_I = 1\neps_g = 1\nalpha_inf = true\n"
       << "isgld_eps = 2\niterations = 3\nrepetitions = 2\nthreads = 2\n"
       << "output = " << (dir / "a.csv").string() << "\n";
  ExperimentConfig c = parse_config(text.str());
  EXPECT_EQ(run_experiments(c), 0u);
  c.output = (dir / "b.csv").string();
  c.threads = 1;
  EXPECT_EQ(run_experiments(c), 0u);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string a = slurp(dir / "a.csv");
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "rep,budget_eps_I,budget_eps_g,variant,t,metric,value,messages");
  // 2 reps x (nonprivate, isgld, sdmf, alpha-inf) x 3 rounds + header.
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 2 * 4 * 3);
  const std::string s = slurp(dir / "a_summary.csv");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 4 * 3);
  std::filesystem::remove_all(dir);
}

TEST(RunExperimentsTest, MissingDatasetFailsUnlessFallback) {
  ExperimentConfig c = parse_config("dataset = /nonexistent/u.data\n");
  EXPECT_THROW(prepare_dataset(c), Error);
  c.synthetic_fallback = true;
  c.synthetic.n_users = 30;
  c.synthetic.n_items = 40;
  c.synthetic.n_ratings = 600;
  auto prev = set_warning_sink([](std::string_view) {});
  EXPECT_EQ(prepare_dataset(c).size(), 600u);
  set_warning_sink(prev);
}

}  // namespace
}  // namespace sdmf
