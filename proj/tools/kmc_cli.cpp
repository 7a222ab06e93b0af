/*
 * Copyright 2026 The kmc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

// kmc: train, compress, evaluate and audit kernel mean classifiers.
//
// Exit codes: 0 success, 1 assertion failure (including a herd that stopped
// before reaching its tolerance), 2 usage or input error, 3 I/O or parse error.
//
// Option precedence: command-line flags, then the --config JSON file, then
// built-in defaults. Config keys are flag names without the leading dashes;
// top-level keys apply to any subcommand, keys under an object named after
// the subcommand apply to that subcommand only.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kmc/kmc.hpp"

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kAssertion = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

const std::vector<std::string> kSubcommands = {"train", "herd", "eval", "check", "bounds", "mmd", "noise"};

// Thrown for problems that should exit with a specific code and message.
struct Exit {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kmc::IoError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw kmc::ParseError(path + ": " + e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kmc::IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw kmc::IoError("write failed for '" + path + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

bool is_sparse_path(const std::string& path) {
  for (const char* ext : {".svm", ".libsvm", ".sparse"})
    if (path.size() >= std::string(ext).size() &&
        path.compare(path.size() - std::string(ext).size(), std::string::npos, ext) == 0)
      return true;
  return false;
}

kmc::LabeledSample load_sample(const std::string& path, int label_column) {
  if (path.empty()) throw Exit{kUsage, "--data is required"};
  try {
    return is_sparse_path(path) ? kmc::load_sparse(path) : kmc::load_csv(path, label_column);
  } catch (const kmc::ParseError& e) {
    throw kmc::ParseError(path + ": " + e.what());
  } catch (const kmc::InputError& e) {
    throw kmc::InputError(path + ": " + e.what());
  }
}

kmc::MeanClassifier load_model(const std::string& path) {
  try {
    return kmc::model_from_json(read_json(path));
  } catch (const kmc::ParseError& e) {
    throw kmc::ParseError(path + ": " + e.what());
  }
}

kmc::DiscreteDistribution load_distribution(const std::string& path) {
  try {
    return read_json(path).get<kmc::DiscreteDistribution>();
  } catch (const kmc::ParseError& e) {
    throw kmc::ParseError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw kmc::ParseError(path + ": " + e.what());
  }
}

std::string scalar_token(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object()) return v.dump();
  return v.dump();
}

// Appends config-file values for flags absent from argv.
std::vector<std::string> inject_config(std::vector<std::string> args) {
  std::optional<std::string> config_path;
  std::string subcommand;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    if (subcommand.empty() &&
        std::find(kSubcommands.begin(), kSubcommands.end(), args[i]) != kSubcommands.end())
      subcommand = args[i];
  }
  if (!config_path) return args;
  const json cfg = read_json(*config_path);
  if (!cfg.is_object()) throw kmc::ParseError(*config_path + ": config must be a JSON object");

  auto present = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  auto apply = [&](const json& obj) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object() && std::find(kSubcommands.begin(), kSubcommands.end(), key) != kSubcommands.end())
        continue;
      if (key == "config") continue;
      const std::string flag = "--" + key;
      if (present(flag)) continue;
      if (std::find(extra.begin(), extra.end(), flag) != extra.end()) continue;
      if (value.is_boolean()) {
        if (value.get<bool>()) extra.push_back(flag);
      } else if (value.is_array()) {
        for (const auto& v : value) {
          extra.push_back(flag);
          extra.push_back(scalar_token(v));
        }
      } else if (!value.is_null()) {
        extra.push_back(flag);
        extra.push_back(scalar_token(value));
      }
    }
  };
  if (!subcommand.empty() && cfg.contains(subcommand) && cfg[subcommand].is_object()) apply(cfg[subcommand]);
  apply(cfg);
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

json option_value(const CLI::Option* opt) {
  auto results = opt->results();
  if (results.empty()) {
    if (opt->get_expected_min() == 0) return false;
    const auto d = opt->get_default_str();
    if (d.empty()) return nullptr;
    results = {d};
  } else if (opt->get_expected_min() == 0) {
    return true;
  }
  auto convert = [](const std::string& s) -> json {
    if (s.empty()) return s;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end && *end == '\0') {
      if (s.find_first_of(".eE") == std::string::npos && s.find_first_not_of("-0123456789") == std::string::npos)
        return std::stoll(s);
      return v;
    }
    return s;
  };
  if (opt->get_expected_max() > 1 || results.size() > 1) {
    json arr = json::array();
    for (const auto& r : results) arr.push_back(convert(r));
    return arr;
  }
  return convert(results.front());
}

// Flags as resolved after defaults, config file and command line.
json resolved_config(const CLI::App& app, const CLI::App& sub) {
  json out = {{"subcommand", sub.get_name()}};
  for (const CLI::App* a : {&app, &sub})
    for (const CLI::Option* opt : a->get_options()) {
      const auto name = opt->get_single_name();
      if (name == "help" || name == "config") continue;
      out[name] = option_value(opt);
    }
  return out;
}

struct Globals {
  unsigned workers = 1;
  std::uint64_t seed = 0;
  std::string config;
};

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data, out, kernel = "linear";
  int label_column = -1;
};

int cmd_train(const TrainArgs& a, const Globals& g, const json& config) {
  const auto kernel = kmc::parse_kernel(a.kernel);
  const auto s = load_sample(a.data, a.label_column);
  const auto clf = kmc::fit(s, kernel);
  const auto geo = kmc::mean_norm(s, kernel, g.workers);
  json meta = {{"n_source", s.size()},
               {"dim", s.dim()},
               {"norm", geo.norm},
               {"min_linear_loss", geo.min_linear_loss},
               {"config", config}};
  write_output(a.out, dump(kmc::model_to_json(clf, meta)));
  std::cerr << "train: n=" << s.size() << " norm=" << geo.norm << "\n";
  return kOk;
}

struct HerdArgs {
  std::string data, model, out, trace, kernel = "linear", step = "line-search", cache = "dense";
  int label_column = -1;
  double epsilon = 0.01;
  std::size_t max_iter = 100000;
  std::size_t parallel = 0, group_size = 0, min_size = 1;
  bool combine_only = false, reherd = false, recursive = false;
};

int cmd_herd(const HerdArgs& a, const Globals& g, const json& config) {
  if (a.data.empty() == a.model.empty()) throw Exit{kUsage, "exactly one of --data or --model is required"};
  if (a.combine_only && a.reherd) throw Exit{kUsage, "--combine-only and --reherd are exclusive"};
  if (a.parallel && a.group_size) throw Exit{kUsage, "--parallel and --group-size are exclusive"};

  kmc::HerdingConfig cfg;
  cfg.tolerance = a.epsilon;
  cfg.max_iterations = a.max_iter;
  cfg.workers = g.workers;
  if (a.step == "line-search") cfg.step_rule = kmc::StepRule::line_search;
  else if (a.step == "uniform") cfg.step_rule = kmc::StepRule::uniform;
  else throw Exit{kUsage, "--step must be line-search or uniform"};
  if (a.cache == "dense") cfg.cache = kmc::KernelCache::dense;
  else if (a.cache == "lazy") cfg.cache = kmc::KernelCache::lazy;
  else throw Exit{kUsage, "--cache must be dense or lazy"};
  cfg.validate();

  std::vector<kmc::Vector> xs;
  std::vector<int> ys;
  std::vector<double> w;
  kmc::KernelSpec kernel;
  if (!a.data.empty()) {
    const auto s = load_sample(a.data, a.label_column);
    kernel = kmc::parse_kernel(a.kernel);
    xs = s.instances();
    ys = s.labels();
    w.assign(s.size(), 1.0 / static_cast<double>(s.size()));
  } else {
    const auto clf = load_model(a.model);
    kernel = clf.kernel();
    for (const auto& p : clf.support()) {
      xs.push_back(p.x);
      ys.push_back(p.y);
      w.push_back(p.alpha);
    }
  }

  kmc::Herd herd;
  json summary = {{"n", xs.size()}};
  std::size_t groups = a.parallel;
  if (a.group_size && !a.recursive) groups = (xs.size() + a.group_size - 1) / a.group_size;
  if (a.recursive) {
    kmc::RecursiveOptions ro;
    ro.min_size = a.min_size;
    if (a.group_size) ro.max_group_size = a.group_size;
    const auto rec = kmc::recursive_herd_weighted(xs, ys, w, kernel, cfg, ro);
    herd = rec.herd;
    json stages = json::array();
    for (const auto& st : rec.stages) {
      stages.push_back({{"size", st.size}, {"stage_error", st.stage_error}, {"cumulative_error", st.cumulative_error}});
      std::cerr << "herd: stage size=" << st.size << " error=" << st.cumulative_error << "\n";
    }
    summary["mode"] = "recursive";
    summary["stages"] = stages;
  } else if (groups > 1) {
    kmc::ParallelOptions po;
    po.groups = groups;
    po.reherd_combined = a.reherd;
    const auto ph = kmc::parallel_herd_weighted(xs, ys, w, kernel, cfg, po);
    herd = ph.reherded ? *ph.reherded : ph.herd;
    json gs = json::array();
    double worst = 0.0;
    for (const auto& gr : ph.groups) {
      gs.push_back({{"begin", gr.begin},
                    {"count", gr.count},
                    {"mass", gr.mass},
                    {"herd_size", gr.herd_size},
                    {"error", gr.error},
                    {"stop_reason", kmc::to_string(gr.stop)}});
      worst = std::max(worst, gr.error);
    }
    summary["mode"] = a.reherd ? "parallel-reherd" : "parallel";
    summary["groups"] = gs;
    summary["combined_error"] = ph.herd.error;
    summary["max_group_error"] = worst;
  } else {
    herd = kmc::herd_weighted(xs, ys, w, kernel, cfg);
    summary["mode"] = "single";
  }
  const bool reached = herd.error <= a.epsilon &&
                       (a.recursive || groups > 1 || herd.stop == kmc::StopReason::tolerance);
  summary["herd_size"] = herd.size();
  summary["error"] = herd.error;
  summary["iterations"] = herd.iterations;
  summary["stop_reason"] = kmc::to_string(herd.stop);
  summary["tolerance_reached"] = reached;
  summary["config"] = config;

  if (!a.out.empty()) {
    auto j = kmc::herd_to_json(herd, kernel);
    j["config"] = config;
    j["summary"] = summary;
    write_output(a.out, dump(j));
  }
  if (!a.trace.empty()) write_output(a.trace, kmc::trace_csv(herd));
  std::cout << dump(summary);
  return reached ? kOk : kAssertion;
}

struct EvalArgs {
  std::string model, data, loss = "zero-one";
  int label_column = -1;
};

int cmd_eval(const EvalArgs& a, const Globals& g, const json& config) {
  if (a.model.empty()) throw Exit{kUsage, "--model is required"};
  const auto clf = load_model(a.model);
  const auto s = load_sample(a.data, a.label_column);
  if (s.dim() != clf.dim())
    throw kmc::InputError("dimension mismatch: model has " + std::to_string(clf.dim()) + ", data has " +
                          std::to_string(s.dim()));
  const auto loss = kmc::parse_loss(a.loss);
  std::vector<double> scores(s.size());
  kmc::parallel_for(s.size(), g.workers, [&](std::size_t i) { scores[i] = clf.score(s.x(i)); });
  std::size_t correct = 0, abstain = 0;
  double total = 0.0;
  double margin = 0.0;
  bool have_margin = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = scores[i];
    if (v == 0.0) ++abstain;
    if ((v > 0.0 && s.y(i) == 1) || (v < 0.0 && s.y(i) == -1)) ++correct;
    total += loss(s.y(i), v);
    const double m = s.y(i) * v;
    if (m > 0.0 && (!have_margin || m < margin)) {
      margin = m;
      have_margin = true;
    }
  }
  const double n = static_cast<double>(s.size());
  json out = {{"n", s.size()},
              {"accuracy", static_cast<double>(correct) / n},
              {"loss", loss.name()},
              {"risk", total / n},
              {"margin", margin},
              {"abstentions", abstain},
              {"config", config}};
  std::cout << dump(out);
  return kOk;
}

json strip_runtime(json j) {
  if (j.is_object()) {
    j.erase("runtime_seconds");
    for (auto& [k, v] : j.items()) v = strip_runtime(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_runtime(v);
  }
  return j;
}

struct CheckArgs {
  std::string suite, out;
};

int cmd_check(const CheckArgs& a, const Globals& g, const json& config) {
  const auto names = kmc::lab::suite_names();
  std::vector<std::string> run;
  if (a.suite == "all") {
    run = names;
  } else if (std::find(names.begin(), names.end(), a.suite) != names.end()) {
    run = {a.suite};
  } else {
    std::string list = "all";
    for (const auto& n : names) list += ", " + n;
    throw Exit{kUsage, "unknown suite '" + a.suite + "'; known suites: " + list};
  }
  kmc::lab::SuiteOptions opts{g.seed, g.workers};
  json reports = json::array();
  bool passed = true;
  for (const auto& name : run) {
    const auto rep = kmc::lab::run_suite(name, opts);
    std::cerr << "check: " << name << (rep.passed() ? " pass" : " FAIL") << " (" << rep.runtime_seconds
              << " s)\n";
    passed = passed && rep.passed();
    reports.push_back(strip_runtime(json(rep)));
  }
  json out = {{"suite", a.suite}, {"seed", g.seed}, {"passed", passed}, {"reports", reports}, {"config", config}};
  write_output(a.out, dump(out));
  return passed ? kOk : kAssertion;
}

struct BoundsArgs {
  std::string kind;
  double n = 0, delta = 0.05, emp = 0.0, k = 1, kl = 0.0;
  std::optional<double> beta;
};

int cmd_bounds(const BoundsArgs& a, const Globals&, const json& config) {
  json inputs = {{"n", a.n}, {"delta", a.delta}};
  double value = 0.0;
  if (a.kind == "pac-bayes") {
    inputs["emp"] = a.emp;
    value = kmc::bounds::pac_bayes(a.emp, a.n, a.delta);
  } else if (a.kind == "pac-bayes-multi") {
    inputs["emp"] = a.emp;
    inputs["k"] = a.k;
    value = kmc::bounds::pac_bayes_multi(a.emp, a.n, a.k, a.delta);
  } else if (a.kind == "mean-estimation") {
    value = kmc::bounds::mean_estimation(a.n, a.delta);
  } else if (a.kind == "generic") {
    inputs["emp"] = a.emp;
    inputs["kl"] = a.kl;
    const double beta = a.beta ? *a.beta : kmc::bounds::optimal_beta(a.kl, a.n, a.delta);
    inputs["beta"] = beta;
    value = kmc::bounds::generic_pac_bayes(a.emp, a.kl, a.n, a.delta, beta);
  } else {
    throw Exit{kUsage, "--kind must be one of pac-bayes, pac-bayes-multi, mean-estimation, generic"};
  }
  std::cout << dump({{"kind", a.kind}, {"inputs", inputs}, {"bound", value}, {"config", config}});
  return kOk;
}

struct MmdArgs {
  std::string data, kernel = "linear";
  int label_column = -1;
};

int cmd_mmd(const MmdArgs& a, const Globals& g, const json& config) {
  const auto s = load_sample(a.data, a.label_column);
  const auto kernel = kmc::parse_kernel(a.kernel);
  std::vector<kmc::Vector> pos, neg;
  for (std::size_t i = 0; i < s.size(); ++i) (s.y(i) == 1 ? pos : neg).push_back(s.x(i));
  const double value = kmc::mmd(pos, neg, kernel, g.workers);
  std::cout << dump({{"mmd", value}, {"n_pos", pos.size()}, {"n_neg", neg.size()}, {"config", config}});
  return kOk;
}

struct NoiseArgs {
  std::string dist, kind = "symmetric", other, rates, out;
  double sigma = 0.0, sigma_neg = 0.0, sigma_pos = 0.0;
  std::size_t sample = 0;
};

int cmd_noise(const NoiseArgs& a, const Globals& g, const json& config) {
  if (a.dist.empty()) throw Exit{kUsage, "--dist is required"};
  const auto p = load_distribution(a.dist);
  kmc::DiscreteDistribution out;
  if (a.kind == "symmetric") {
    out = kmc::flip_symmetric(p, a.sigma);
  } else if (a.kind == "class-conditional") {
    out = kmc::flip_class_conditional(p, a.sigma_neg, a.sigma_pos);
  } else if (a.kind == "instance-dependent") {
    if (a.rates.empty()) throw Exit{kUsage, "--rates is required for instance-dependent noise"};
    const auto r = read_json(a.rates);
    std::map<std::size_t, double> m;
    try {
      for (std::size_t i = 0; i < r.size(); ++i) m[i] = r.at(i).get<double>();
    } catch (const json::exception& e) {
      throw kmc::ParseError(a.rates + ": " + e.what());
    }
    out = kmc::flip_instance_dependent(p, kmc::NoiseFunctionTable(std::move(m)));
  } else if (a.kind == "contaminate") {
    if (a.other.empty()) throw Exit{kUsage, "--other is required for contamination"};
    out = kmc::contaminate(p, load_distribution(a.other), a.sigma);
  } else {
    throw Exit{kUsage, "--kind must be one of symmetric, class-conditional, instance-dependent, contaminate"};
  }
  if (a.sample > 0) {
    const auto s = kmc::sample_from(out, a.sample, g.seed);
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (Eigen::Index d = 0; d < s.dim(); ++d) os << s.x(i)[d] << ',';
      os << s.y(i) << '\n';
    }
    write_output(a.out, os.str());
  } else {
    json j = out;
    j["config"] = config;
    write_output(a.out, dump(j));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = inject_config(std::move(args));
  } catch (const kmc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const kmc::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }

  CLI::App app{"Kernel mean classifiers, herding and label-noise audits"};
  app.name("kmc");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.workers = kmc::default_workers();
  app.add_option("--config", g.config, "JSON file with default option values");
  app.add_option("--workers", g.workers, "Worker threads (default: KMC_WORKERS or hardware threads)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Fit a mean classifier");
  train->add_option("--data", ta.data, "CSV or sparse data file");
  train->add_option("--label-column", ta.label_column, "CSV label column (-1: last)")->capture_default_str();
  train->add_option("--kernel", ta.kernel, "Kernel: JSON or linear | gaussian:<h> | polynomial:<d>[:<c>] [:normalized]")
      ->capture_default_str();
  train->add_option("--out", ta.out, "Model output path (default stdout)");

  HerdArgs ha;
  auto* herd = app.add_subcommand("herd", "Compress a sample or model by kernel herding");
  herd->add_option("--data", ha.data, "CSV or sparse data file");
  herd->add_option("--model", ha.model, "Model JSON to compress");
  herd->add_option("--label-column", ha.label_column, "CSV label column (-1: last)")->capture_default_str();
  herd->add_option("--kernel", ha.kernel, "Kernel for --data")->capture_default_str();
  herd->add_option("--epsilon,--eps", ha.epsilon, "Error tolerance")->capture_default_str();
  herd->add_option("--max-iter", ha.max_iter, "Iteration cap")->capture_default_str();
  herd->add_option("--step", ha.step, "line-search or uniform")->capture_default_str();
  herd->add_option("--cache", ha.cache, "dense or lazy kernel rows")->capture_default_str();
  herd->add_option("--parallel", ha.parallel, "Number of groups for parallel herding");
  herd->add_option("--group-size", ha.group_size, "Maximum group size (parallel or recursive stages)");
  herd->add_flag("--combine-only", ha.combine_only, "Combine group herds without re-herding (default)");
  herd->add_flag("--reherd", ha.reherd, "Herd the combined group herds again");
  herd->add_flag("--recursive", ha.recursive, "Herd the herd until --min-size is reached");
  herd->add_option("--min-size", ha.min_size, "Target size for --recursive")->capture_default_str();
  herd->add_option("--out", ha.out, "Herd JSON output path");
  herd->add_option("--trace", ha.trace, "Trace CSV output path");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a model on labelled data");
  eval->add_option("--model", ea.model, "Model JSON");
  eval->add_option("--data", ea.data, "CSV or sparse data file");
  eval->add_option("--label-column", ea.label_column, "CSV label column (-1: last)")->capture_default_str();
  eval->add_option("--loss", ea.loss, "Loss name")->capture_default_str();

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Run an audit suite");
  check->add_option("suite,--suite", ca.suite, "Suite name or 'all'")->required();
  check->add_option("--out", ca.out, "Report output path (default stdout)");

  BoundsArgs ba;
  auto* bounds = app.add_subcommand("bounds", "Evaluate a generalization bound");
  bounds->add_option("--kind", ba.kind, "pac-bayes | pac-bayes-multi | mean-estimation | generic")->required();
  bounds->add_option("--n", ba.n, "Sample size")->required();
  bounds->add_option("--delta", ba.delta, "Confidence parameter")->capture_default_str();
  bounds->add_option("--emp", ba.emp, "Empirical loss")->capture_default_str();
  bounds->add_option("--k", ba.k, "Number of kernels")->capture_default_str();
  bounds->add_option("--kl", ba.kl, "KL divergence term")->capture_default_str();
  bounds->add_option("--beta", ba.beta, "Temperature (default: optimal)");

  MmdArgs ma;
  auto* mmd = app.add_subcommand("mmd", "Maximum mean discrepancy between the classes");
  mmd->add_option("--data", ma.data, "CSV or sparse data file");
  mmd->add_option("--label-column", ma.label_column, "CSV label column (-1: last)")->capture_default_str();
  mmd->add_option("--kernel", ma.kernel, "Kernel")->capture_default_str();

  NoiseArgs na;
  auto* noise = app.add_subcommand("noise", "Corrupt a distribution file");
  noise->add_option("--dist", na.dist, "Distribution JSON");
  noise->add_option("--kind", na.kind, "symmetric | class-conditional | instance-dependent | contaminate")
      ->capture_default_str();
  noise->add_option("--sigma", na.sigma, "Noise or contamination rate")->capture_default_str();
  noise->add_option("--sigma-neg", na.sigma_neg, "Flip rate for y = -1")->capture_default_str();
  noise->add_option("--sigma-pos", na.sigma_pos, "Flip rate for y = +1")->capture_default_str();
  noise->add_option("--rates", na.rates, "JSON array of per-atom flip rates");
  noise->add_option("--other", na.other, "Contaminating distribution JSON");
  noise->add_option("--sample", na.sample, "Emit an n-point CSV sample instead of the distribution");
  noise->add_option("--out", na.out, "Output path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const json config = resolved_config(app, *sub);
    const auto& name = sub->get_name();
    if (name == "train") return cmd_train(ta, g, config);
    if (name == "herd") return cmd_herd(ha, g, config);
    if (name == "eval") return cmd_eval(ea, g, config);
    if (name == "check") return cmd_check(ca, g, config);
    if (name == "bounds") return cmd_bounds(ba, g, config);
    if (name == "mmd") return cmd_mmd(ma, g, config);
    if (name == "noise") return cmd_noise(na, g, config);
    return kUsage;
  } catch (const Exit& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const kmc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const kmc::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const kmc::ConsistencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAssertion;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const kmc::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
