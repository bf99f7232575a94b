// Copyright 2026 The cstl Authors.
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

#include "cstl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "cstl/error.hpp"
#include "cstl/keyed_text.hpp"

namespace cstl {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::kConfig, "config", "key '" + key + "': " + what);
}

double to_real(const std::string& key, std::string_view v) {
  double x;
  if (!try_parse_double(v, x)) bad(key, "expected a real number, got '" + std::string(v) + "'");
  return x;
}

long long to_int(const std::string& key, std::string_view v) {
  long long x;
  if (!try_parse_int(v, x)) bad(key, "expected an integer, got '" + std::string(v) + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, std::string_view v) {
  std::uint64_t x;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, "expected a non-negative integer");
  return x;
}

bool to_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, "expected true or false");
}

std::vector<std::string> to_list(std::string_view v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  for (auto item : split(v, ',')) out.emplace_back(trim(item));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
  return s;
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

using Setter = std::function<void(PipelineConfig&, const std::string& key, std::string_view value)>;
using Getter = std::function<std::string(const PipelineConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    auto real = [&](const char* key, auto member) {
      t[key] = {[member](PipelineConfig& c, const std::string& k, std::string_view v) { member(c) = to_real(k, v); },
                [member](const PipelineConfig& c) { return format_double(member(const_cast<PipelineConfig&>(c))); }};
    };
    auto integer = [&](const char* key, auto member) {
      t[key] = {[member](PipelineConfig& c, const std::string& k, std::string_view v) {
                  member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_int(k, v));
                },
                [member](const PipelineConfig& c) { return std::to_string(member(const_cast<PipelineConfig&>(c))); }};
    };

    integer("k", [](PipelineConfig& c) -> int& { return c.k; });
    real("eps", [](PipelineConfig& c) -> double& { return c.eps; });
    integer("gmm_components", [](PipelineConfig& c) -> int& { return c.gmm.components; });
    integer("gmm_max_iter", [](PipelineConfig& c) -> int& { return c.gmm.max_iter; });
    real("gmm_tol", [](PipelineConfig& c) -> double& { return c.gmm.tol; });
    real("gmm_var_floor", [](PipelineConfig& c) -> double& { return c.gmm.var_floor; });

    t["psi"] = {[](PipelineConfig& c, const std::string& k, std::string_view v) {
                  try {
                    c.transfer.psi = parse_psi(v);
                  } catch (const Error&) {
                    bad(k, "expected exp or identity_plus_one");
                  }
                },
                [](const PipelineConfig& c) { return std::string(to_string(c.transfer.psi)); }};
    t["tau"] = {[](PipelineConfig& c, const std::string& k, std::string_view v) {
                  c.transfer.tau = v == "centroid_match" ? TauMode::centroid() : TauMode::constant(to_real(k, v));
                },
                [](const PipelineConfig& c) {
                  return c.transfer.tau.centroid_match ? std::string("centroid_match")
                                                       : format_double(c.transfer.tau.fixed);
                }};
    real("norm_power", [](PipelineConfig& c) -> double& { return c.transfer.norm_power; });
    integer("simplex_max_eval_factor", [](PipelineConfig& c) -> int& { return c.transfer.max_eval_factor; });
    real("simplex_spread_tol", [](PipelineConfig& c) -> double& { return c.transfer.spread_tol; });
    real("simplex_init_step_frac", [](PipelineConfig& c) -> double& { return c.transfer.init_step_frac; });
    t["transfer_costs"] = {[](PipelineConfig& c, const std::string&, std::string_view v) { c.transfer_costs = v; },
                           [](const PipelineConfig& c) { return c.transfer_costs; }};

    auto real_list = [&](const char* key, auto member) {
      t[key] = {[member](PipelineConfig& c, const std::string& k, std::string_view v) {
                  auto& out = member(c);
                  out.clear();
                  for (const auto& item : to_list(v)) out.push_back(to_real(k, item));
                },
                [member](const PipelineConfig& c) { return join_reals(member(const_cast<PipelineConfig&>(c))); }};
    };
    real_list("grid_gamma", [](PipelineConfig& c) -> std::vector<double>& { return c.grid.gamma; });
    real_list("grid_c", [](PipelineConfig& c) -> std::vector<double>& { return c.grid.c; });
    integer("folds", [](PipelineConfig& c) -> int& { return c.folds; });

    t["task"] = {[](PipelineConfig& c, const std::string& k, std::string_view v) {
                   try {
                     c.task = parse_task(v);
                   } catch (const Error&) {
                     bad(k, "expected unweighted, detection, childlock or airbag");
                   }
                 },
                 [](const PipelineConfig& c) { return std::string(to_string(c.task)); }};
    t["collapse_unweighted"] = {
        [](PipelineConfig& c, const std::string& k, std::string_view v) { c.collapse_unweighted = to_bool(k, v); },
        [](const PipelineConfig& c) { return std::string(c.collapse_unweighted ? "true" : "false"); }};
    integer("runs", [](PipelineConfig& c) -> int& { return c.runs; });
    t["seed"] = {[](PipelineConfig& c, const std::string& k, std::string_view v) { c.seed = to_u64(k, v); },
                 [](const PipelineConfig& c) { return std::to_string(c.seed); }};
    real("test_fraction", [](PipelineConfig& c) -> double& { return c.test_fraction; });
    integer("target", [](PipelineConfig& c) -> int& { return c.target; });
    t["sources"] = {[](PipelineConfig& c, const std::string& k, std::string_view v) {
                      c.sources.clear();
                      if (trim(v) == "all") return;
                      for (const auto& item : to_list(v)) c.sources.push_back(static_cast<int>(to_int(k, item)));
                    },
                    [](const PipelineConfig& c) {
                      if (c.sources.empty()) return std::string("all");
                      std::string s;
                      for (std::size_t i = 0; i < c.sources.size(); ++i) s += (i ? "," : "") + std::to_string(c.sources[i]);
                      return s;
                    }};
    t["threads"] = {[](PipelineConfig& c, const std::string& k, std::string_view v) {
                      c.threads = static_cast<unsigned>(to_u64(k, v));
                    },
                    [](const PipelineConfig& c) { return std::to_string(c.threads); }};
    t["data"] = {[](PipelineConfig& c, const std::string&, std::string_view v) { c.data = to_list(v); },
                 [](const PipelineConfig& c) { return join(c.data); }};
    t["out_dir"] = {[](PipelineConfig& c, const std::string&, std::string_view v) { c.out_dir = v; },
                    [](const PipelineConfig& c) { return c.out_dir; }};

    integer("synth_classes", [](PipelineConfig& c) -> int& { return c.synth.n_classes; });
    integer("synth_dims", [](PipelineConfig& c) -> int& { return c.synth.dims; });
    integer("synth_domains", [](PipelineConfig& c) -> int& { return c.synth.n_domains; });
    integer("synth_modes", [](PipelineConfig& c) -> int& { return c.synth.per_class_modes; });
    real("synth_rotation", [](PipelineConfig& c) -> double& { return c.synth.shift.rotation; });
    real("synth_scale", [](PipelineConfig& c) -> double& { return c.synth.shift.scale; });
    real("synth_translation", [](PipelineConfig& c) -> double& { return c.synth.shift.translation; });
    real("synth_noise", [](PipelineConfig& c) -> double& { return c.synth.noise_sigma; });
    integer("synth_samples", [](PipelineConfig& c) -> int& { return c.synth.samples_per_class_per_domain; });
    integer("synth_group_size", [](PipelineConfig& c) -> int& { return c.synth.group_size; });
    real("synth_class_separation", [](PipelineConfig& c) -> double& { return c.synth.class_separation; });
    real("synth_mode_spread", [](PipelineConfig& c) -> double& { return c.synth.mode_spread; });
    t["synth_seed"] = {[](PipelineConfig& c, const std::string& k, std::string_view v) { c.synth.seed = to_u64(k, v); },
                       [](const PipelineConfig& c) { return std::to_string(c.synth.seed); }};
    return t;
  }();
  return table;
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kUnweighted: return "unweighted";
    case Task::kDetection: return "detection";
    case Task::kChildlock: return "childlock";
    case Task::kAirbag: return "airbag";
  }
  return "unweighted";
}

Task parse_task(std::string_view s) {
  if (s == "unweighted") return Task::kUnweighted;
  if (s == "detection") return Task::kDetection;
  if (s == "childlock") return Task::kChildlock;
  if (s == "airbag") return Task::kAirbag;
  throw Error(ErrorKind::kConfig, "config", "unknown task '" + std::string(s) + "'");
}

bool is_weighted(Task task) { return task != Task::kUnweighted; }

void PipelineConfig::validate() const {
  if (k < 1) bad("k", "must be >= 1");
  if (!(eps > 0.0)) bad("eps", "must be > 0");
  if (gmm.components < 1) bad("gmm_components", "must be >= 1");
  if (gmm.max_iter < 1) bad("gmm_max_iter", "must be >= 1");
  if (!(gmm.tol > 0.0)) bad("gmm_tol", "must be > 0");
  if (!(gmm.var_floor > 0.0)) bad("gmm_var_floor", "must be > 0");
  if (!(transfer.norm_power >= 1.0)) bad("norm_power", "must be >= 1");
  if (transfer.max_eval_factor < 1) bad("simplex_max_eval_factor", "must be >= 1");
  if (!(transfer.spread_tol > 0.0)) bad("simplex_spread_tol", "must be > 0");
  if (!(transfer.init_step_frac > 0.0)) bad("simplex_init_step_frac", "must be > 0");
  if (grid.gamma.empty()) bad("grid_gamma", "must list at least one value");
  if (grid.c.empty()) bad("grid_c", "must list at least one value");
  for (double g : grid.gamma) {
    if (!(g > 0.0)) bad("grid_gamma", "values must be > 0");
  }
  for (double c : grid.c) {
    if (!(c > 0.0)) bad("grid_c", "values must be > 0");
  }
  if (folds < 2) bad("folds", "must be >= 2");
  if (runs < 1) bad("runs", "must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) bad("test_fraction", "must lie in (0, 1)");
  if (target < 0) bad("target", "must be >= 0");
  try {
    synth.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, "config", std::string("synthetic settings: ") + e.what());
  }
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    std::string_view body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kConfig, "config", "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(body.substr(0, eq)));
    const auto value = trim(body.substr(eq + 1));
    auto it = fields().find(key);
    if (it == fields().end()) bad(key, "unknown key");
    if (!seen.insert(key).second) bad(key, "given more than once");
    it->second.set(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "config", "cannot open " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const PipelineConfig& cfg) {
  for (const auto& [key, field] : fields()) out << key << " = " << field.get(cfg) << '\n';
}

}  // namespace cstl
