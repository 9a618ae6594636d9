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

#ifndef SDMF_CONFIG_HPP_
#define SDMF_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sdmf/client.hpp"
#include "sdmf/data.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/mf.hpp"

namespace sdmf {

enum class TransportKind { kSimulated, kSocket };

struct ExperimentConfig {
  // Data. An empty path or "synthetic" uses the generator; a missing file
  // falls back to it when synthetic_fallback is set.
  std::string dataset;
  Delimiter delimiter = Delimiter::kAuto;
  bool synthetic_fallback = false;
  SyntheticSpec synthetic;
  std::size_t subsample_users = 0;  // 0 keeps everything
  std::size_t subsample_items = 0;
  std::size_t subsample_min_ratings = 2;
  double split_fraction = 0.2;
  bool validation = false;  // evaluate on 20% of train instead of test

  Task task = Task::kNumerical;
  std::size_t k = 50;
  double eta0 = 5e-6;
  double gamma = 0.6;
  double lambda_shape = 1.0;
  double lambda_rate = 100.0;
  std::optional<double> lambda;  // fixed prior precision, skips the draw
  bool noise = true;
  double init_sd = 0.0;
  ItemAveraging averaging = ItemAveraging::kGlobalCount;

  std::vector<double> eps_I{4.0, 1.0, 0.25, 0.0625};
  std::vector<double> eps_g{4.0, 1.0, 0.25, 0.0625};
  std::optional<double> eps_P;
  std::optional<double> z_target;
  std::optional<FixedRandomizer> randomizer;
  bool sdmf = true;
  bool alpha_inf = false;
  bool nonprivate = true;
  std::vector<double> isgld_eps;

  std::size_t iterations = 100;
  std::size_t repetitions = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0 = hardware concurrency
  TransportKind transport = TransportKind::kSimulated;
  std::size_t attack_rounds = 1000;

  std::string output = "curves.csv";
  std::string summary;  // empty: <output stem>_summary.csv

  void validate() const {
    if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
    if (iterations < 1) throw InvalidArgument("iterations must be >= 1");
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (!(eta0 > 0.0)) throw InvalidArgument("eta0 must be positive");
    if (sdmf && eps_I.empty() && !randomizer) {
      throw InvalidArgument("eps_I list is empty");
    }
    for (double e : eps_I) {
      if (!(e > 0.0)) throw InvalidArgument("eps_I values must be positive");
    }
    for (double e : eps_g) {
      if (!(e > 0.0)) throw InvalidArgument("eps_g values must be positive");
    }
    for (double e : isgld_eps) {
      if (!(e > 0.0)) throw InvalidArgument("isgld_eps values must be positive");
    }
    if (task == Task::kOneClass && !isgld_eps.empty()) {
      throw InvalidArgument("isgld baseline applies to the numerical task");
    }
  }
};

namespace internal {

inline std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    auto comma = v.find(',');
    std::string_view item = trim(v.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

class ConfigReader {
 public:
  ConfigReader(std::string_view key, std::string_view value, std::size_t line)
      : key_(key), value_(value), line_(line) {}

  double real() const {
    std::string s(value_);
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      fail("expected a number");
    }
    if (used != s.size()) fail("expected a number");
    return x;
  }

  std::uint64_t integer() const {
    std::string s(value_);
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
      if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
      x = std::stoull(s, &used);
    } catch (const std::exception&) {
      fail("expected a non-negative integer");
    }
    if (used != s.size()) fail("expected a non-negative integer");
    return x;
  }

  bool boolean() const {
    if (value_ == "true" || value_ == "1" || value_ == "yes") return true;
    if (value_ == "false" || value_ == "0" || value_ == "no") return false;
    fail("expected true or false");
    return false;
  }

  std::vector<double> reals() const {
    std::vector<double> out;
    for (auto item : split_list(value_)) {
      out.push_back(ConfigReader(key_, item, line_).real());
    }
    return out;
  }

  std::string text() const { return std::string(value_); }

  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(line_, "config key '" + std::string(key_) + "': " + why +
                                ", got '" + std::string(value_) + "'");
  }

 private:
  std::string_view key_;
  std::string_view value_;
  std::size_t line_;
};

}  // namespace internal

// Parses `key = value` lines. '#' starts a comment; lists are comma
// separated. Unknown keys are errors.
inline ExperimentConfig parse_config(std::string_view text,
                                     ExperimentConfig cfg = {}) {
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::optional<double> rf, rp, rq;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = internal::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, "expected 'key = value'");
    }
    const std::string key(internal::trim(line.substr(0, eq)));
    const internal::ConfigReader v(key, internal::trim(line.substr(eq + 1)), line_no);

    if (key == "dataset") {
      cfg.dataset = v.text();
    } else if (key == "format") {
      const std::string f = v.text();
      if (f == "auto") {
        cfg.delimiter = Delimiter::kAuto;
      } else if (f == "tab") {
        cfg.delimiter = Delimiter::kTab;
      } else if (f == "comma" || f == "csv") {
        cfg.delimiter = Delimiter::kComma;
      } else {
        v.fail("expected auto, tab or comma");
      }
    } else if (key == "synthetic_fallback") {
      cfg.synthetic_fallback = v.boolean();
    } else if (key == "synthetic_users") {
      cfg.synthetic.n_users = v.integer();
    } else if (key == "synthetic_items") {
      cfg.synthetic.n_items = v.integer();
    } else if (key == "synthetic_ratings") {
      cfg.synthetic.n_ratings = v.integer();
    } else if (key == "subsample_users") {
      cfg.subsample_users = v.integer();
    } else if (key == "subsample_items") {
      cfg.subsample_items = v.integer();
    } else if (key == "subsample_min_ratings") {
      cfg.subsample_min_ratings = v.integer();
    } else if (key == "split_fraction") {
      cfg.split_fraction = v.real();
    } else if (key == "validation") {
      cfg.validation = v.boolean();
    } else if (key == "task") {
      const std::string t = v.text();
      if (t == "numerical" || t == "rating") {
        cfg.task = Task::kNumerical;
      } else if (t == "one-class" || t == "one_class" || t == "ranking") {
        cfg.task = Task::kOneClass;
      } else {
        v.fail("expected numerical or one-class");
      }
    } else if (key == "k") {
      cfg.k = v.integer();
    } else if (key == "eta0") {
      cfg.eta0 = v.real();
    } else if (key == "gamma") {
      cfg.gamma = v.real();
    } else if (key == "lambda_shape") {
      cfg.lambda_shape = v.real();
    } else if (key == "lambda_rate") {
      cfg.lambda_rate = v.real();
    } else if (key == "lambda") {
      cfg.lambda = v.real();
    } else if (key == "noise") {
      cfg.noise = v.boolean();
    } else if (key == "init_sd") {
      cfg.init_sd = v.real();
    } else if (key == "averaging") {
      const std::string a = v.text();
      if (a == "global") {
        cfg.averaging = ItemAveraging::kGlobalCount;
      } else if (a == "per-item" || a == "per_item") {
        cfg.averaging = ItemAveraging::kPerItem;
      } else {
        v.fail("expected global or per-item");
      }
    } else if (key == "eps_I") {
      cfg.eps_I = v.reals();
    } else if (key == "eps_g") {
      cfg.eps_g = v.reals();
    } else if (key == "eps_P") {
      cfg.eps_P = v.real();
    } else if (key == "z_target") {
      cfg.z_target = v.real();
    } else if (key == "randomizer_f") {
      rf = v.real();
    } else if (key == "randomizer_p") {
      rp = v.real();
    } else if (key == "randomizer_q") {
      rq = v.real();
    } else if (key == "sdmf") {
      cfg.sdmf = v.boolean();
    } else if (key == "alpha_inf") {
      cfg.alpha_inf = v.boolean();
    } else if (key == "nonprivate") {
      cfg.nonprivate = v.boolean();
    } else if (key == "isgld_eps") {
      cfg.isgld_eps = v.reals();
    } else if (key == "iterations") {
      cfg.iterations = v.integer();
    } else if (key == "repetitions") {
      cfg.repetitions = v.integer();
    } else if (key == "seed") {
      cfg.seed = v.integer();
    } else if (key == "threads") {
      cfg.threads = v.integer();
    } else if (key == "transport") {
      const std::string t = v.text();
      if (t == "simulated") {
        cfg.transport = TransportKind::kSimulated;
      } else if (t == "socket") {
        cfg.transport = TransportKind::kSocket;
      } else {
        v.fail("expected simulated or socket");
      }
    } else if (key == "attack_rounds") {
      cfg.attack_rounds = v.integer();
    } else if (key == "output") {
      cfg.output = v.text();
    } else if (key == "summary") {
      cfg.summary = v.text();
    } else {
      throw ParseError(line_no, "unknown config key '" + key + "'");
    }
  }
  if (rf || rp || rq) {
    FixedRandomizer r;
    r.f = rf.value_or(r.f);
    r.p = rp.value_or(r.p);
    r.q = rq.value_or(r.q);
    cfg.randomizer = r;
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig cfg = parse_config(text.str());
  // A relative dataset path is taken relative to the config file.
  if (!cfg.dataset.empty() && cfg.dataset != "synthetic") {
    std::filesystem::path data(cfg.dataset);
    if (data.is_relative()) {
      cfg.dataset = (std::filesystem::path(path).parent_path() / data).string();
    }
  }
  return cfg;
}

}  // namespace sdmf

#endif  // SDMF_CONFIG_HPP_
