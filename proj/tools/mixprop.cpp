// Copyright 2026 The mixprop Authors
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

// Command-line front end: data generation, proportion estimation,
// weakly-supervised independence tests and the table experiments.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mixprop/error.hpp"
#include "mixprop/harness.hpp"
#include "mixprop/mixture.hpp"
#include "mixprop/mpe.hpp"
#include "mixprop/plugin.hpp"

using nlohmann::json;
using namespace mixprop;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Interval parse_range(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ParseError("range '" + s + "': expected LO,HI");
  Interval r;
  try {
    std::size_t used = 0;
    const std::string lo = trim(s.substr(0, comma)), hi = trim(s.substr(comma + 1));
    r.lo = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    r.hi = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
  } catch (const std::logic_error&) {
    throw ParseError("range '" + s + "': expected LO,HI");
  }
  r.validate();
  return r;
}

std::string join_roles(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ";") + p;
  return out;
}

bool has_flag(const std::vector<std::string>& args, const std::string& name) {
  for (const auto& a : args)
    if (a == name || a.rfind(name + "=", 0) == 0) return true;
  return false;
}

// Pulls --config FILE out of args and appends its key=value pairs as
// --key=value for every key the command line does not already set.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ParseError("--config needs a file");
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  std::vector<std::string> extra;
  std::string line;
  for (int lineNo = 1; std::getline(in, line); ++lineNo) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
      throw ParseError(path + " line " + std::to_string(lineNo) + ": expected key=value");
    }
    const std::string flag = "--" + key;
    if (!has_flag(args, flag)) extra.push_back(flag + "=" + trim(line.substr(eq + 1)));
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

void emit(const json& j, const std::string& report) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (report.empty()) return;
  std::ofstream f(report, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write report '" + report + "'");
  f << text;
}

struct GenArgs {
  std::string model = "gauss";
  int n = 0, nprime = 0;
  double theta = 1.0, thetaPrime = 0.0, sigma12 = 0.0;
  bool withXs = false;
  std::uint64_t seed = 1;
  std::string out;
};

struct MpeArgs {
  std::string method, u, uprime, report, range, range2, roles2;
  std::vector<std::string> roles;
  bool pu = false;
  MciConfig mci;
};

struct TestArgs {
  std::string method, u, uprime, report, range;
  std::vector<std::string> roles;
  double alpha = 0.0;
  bool plugin = false, strict = false;
  TestConfig cfg;
};

struct ExpArgs {
  std::string id, out, from;
  bool full = false;
  std::uint64_t seed = 1;
  int trials = 0, threads = 0;
};

int run_gen(const GenArgs& a) {
  if (a.model != "gauss") throw InvalidArgument("unknown model '" + a.model + "'");
  const TwoSampleData d = gen_gaussian({a.n, a.nprime, {a.theta, a.thetaPrime}, a.sigma12, a.withXs}, a.seed);
  save_csv(d, a.out);
  emit({{"u", a.out + ".u.csv"}, {"uprime", a.out + ".uprime.csv"}, {"n", d.n()},
        {"nprime", d.nprime()}, {"columns", d.featureNames}, {"seed", a.seed}},
       "");
  return 0;
}

int run_mpe(const MpeArgs& a) {
  const TwoSampleData data = load_csv_pair(a.u, a.uprime);
  const MpeMethod m = a.method == "ci" ? MpeMethod::CI : MpeMethod::MCI;
  const FeatureRoles roles = FeatureRoles::parse(join_roles(a.roles));
  const SideConfig side{m, roles, parse_range(a.range), 0.0, a.mci};
  json j;
  j["method"] = a.method;
  j["roles"] = roles.to_string();
  j["n"] = data.n();
  j["nprime"] = data.nprime();
  auto put_priors = [&](const PriorsResult& pr) {
    j["alpha_plus"] = to_json(pr.plus);
    j["alpha_minus"] = to_json(pr.minus);
    j["theta"] = pr.priors.theta;
    j["theta_prime"] = pr.priors.thetaPrime;
    j["flags"] = pr.flags;
  };
  if (a.pu) {
    const SideConfig plus{MpeMethod::Fixed, roles, {1.0, 1.0}, 1.0, a.mci};
    put_priors(estimate_class_priors(data, plus, side));
  } else if (!a.range2.empty()) {
    const FeatureRoles roles2 = a.roles2.empty() ? roles : FeatureRoles::parse(a.roles2);
    const SideConfig minus{m, roles2, parse_range(a.range2), 0.0, a.mci};
    put_priors(estimate_class_priors(data, side, minus));
  } else {
    j["estimate"] = to_json(estimate_side(data, side));
  }
  emit(j, a.report);
  return 0;
}

int run_test(TestArgs a) {
  const TwoSampleData data = load_csv_pair(a.u, a.uprime);
  const FeatureRoles roles = FeatureRoles::parse(join_roles(a.roles));
  const TestKind kind = a.method == "ci" ? TestKind::CI : TestKind::MCI;
  if (!a.range.empty()) {
    (kind == TestKind::CI ? a.cfg.ciRange : a.cfg.mciRange) = parse_range(a.range);
  }
  const TestReport r = a.plugin ? run_test_plugin(data, roles, kind, a.cfg)
                                : run_test_known(data, roles, a.alpha, kind, a.cfg);
  emit(to_json(r), a.report);
  for (const auto& f : r.flags) std::cerr << "warning: " << f << "\n";
  if (a.strict) {
    for (const auto& f : r.flags) {
      if (f == "gamma-degenerate" || f.rfind("failed", 0) == 0) {
        throw NumericalError("strict mode: " + f);
      }
    }
  }
  return 0;
}

int run_exp(const ExpArgs& a) {
  ExperimentConfig cfg;
  if (!a.from.empty()) {
    std::ifstream in(a.from);
    if (!in) throw ParseError("cannot open '" + a.from + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError(a.from + ": " + e.what());
    }
    cfg = experiment_from_json(j.contains("config") ? j.at("config") : j);
  } else {
    if (a.id.empty()) throw InvalidArgument("experiment id or --from is required");
    cfg = default_experiment(a.id, a.full);
    cfg.seed = a.seed;
    if (a.trials > 0) {
      cfg.trials = a.trials;
      cfg.mciTrials = a.trials;
    }
  }
  if (a.threads > 0) cfg.threads = a.threads;
  const ResultsTable t = run_experiment(cfg);
  write_results(t, a.out);
  std::cout << t.to_csv();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture proportion estimation and weakly-supervised kernel tests"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenArgs g;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic two-sample data set");
  gen->add_option("--model", g.model)->check(CLI::IsMember({"gauss"}));
  gen->add_option("--n", g.n)->required()->check(CLI::NonNegativeNumber);
  gen->add_option("--nprime", g.nprime)->required()->check(CLI::NonNegativeNumber);
  gen->add_option("--theta", g.theta)->required();
  gen->add_option("--theta-prime", g.thetaPrime)->required();
  gen->add_option("--sigma12", g.sigma12);
  gen->add_flag("--with-xs", g.withXs);
  gen->add_option("--seed", g.seed);
  gen->add_option("--out", g.out, "Output stem")->required();

  MpeArgs m;
  auto* mpe = app.add_subcommand("mpe", "Estimate mixture proportions");
  mpe->add_option("method", m.method)->required()->check(CLI::IsMember({"ci", "mci"}));
  mpe->add_option("--u", m.u)->required();
  mpe->add_option("--uprime", m.uprime)->required();
  mpe->add_option("--roles", m.roles, "e.g. x1=0;x2=1;xs=2")->required()->expected(1, 4);
  mpe->add_option("--range", m.range, "LO,HI")->required();
  mpe->add_option("--range2", m.range2, "Second-side range LO,HI");
  mpe->add_option("--roles2", m.roles2, "Second-side roles");
  mpe->add_flag("--pu", m.pu, "First sample is purely positive");
  mpe->add_option("--lambda", m.mci.lambda);
  mpe->add_option("--ks-sigma", m.mci.kS.bandwidth);
  mpe->add_option("--tol", m.mci.tol);
  mpe->add_option("--grid-points", m.mci.gridPoints);
  mpe->add_option("--report", m.report);
  mpe->get_option("--range2")->excludes("--pu");

  TestArgs t;
  auto* test = app.add_subcommand("test", "Weakly-supervised conditional independence test");
  test->add_option("method", t.method)->required()->check(CLI::IsMember({"ci", "mci"}));
  test->add_option("--u", t.u)->required();
  test->add_option("--uprime", t.uprime)->required();
  test->add_option("--roles", t.roles)->required()->expected(1, 4);
  auto* alphaOpt = test->add_option("--alpha", t.alpha, "Known mixture proportion");
  auto* pluginOpt = test->add_flag("--plugin", t.plugin, "Estimate the proportion first");
  alphaOpt->excludes(pluginOpt);
  test->add_option("--level", t.cfg.level);
  test->add_flag("--strict", t.strict, "Exit 3 on degenerate null fits");
  test->add_option("--range", t.range, "Plug-in search range LO,HI");
  test->add_option("--ci-sigma", t.cfg.ciKernel.bandwidth);
  test->add_option("--mci-sigma", t.cfg.mciKernel.bandwidth);
  test->add_option("--mci-lambda", t.cfg.mciLambda);
  test->add_option("--k-top", t.cfg.kTop);
  test->add_option("--plugin-mci-sigma", t.cfg.pluginMciKernel.bandwidth);
  test->add_option("--plugin-mci-lambda", t.cfg.pluginMciLambda);
  test->add_option("--mpe-sigma", t.cfg.pluginMpe.kS.bandwidth);
  test->add_option("--mpe-lambda", t.cfg.pluginMpe.lambda);
  test->add_option("--report", t.report);

  ExpArgs e;
  auto* exp = app.add_subcommand("experiment", "Run a table experiment");
  exp->add_option("id", e.id)->check(
      CLI::IsMember({"table1", "table3", "table4", "table5", "bias8", "bias9", "power10"}));
  exp->add_flag("--full", e.full, "Full-scale trial counts and sizes");
  exp->add_option("--seed", e.seed);
  exp->add_option("--out", e.out)->required();
  exp->add_option("--trials", e.trials)->check(CLI::PositiveNumber);
  exp->add_option("--threads", e.threads)->check(CLI::PositiveNumber);
  exp->add_option("--from", e.from, "Re-run from a provenance JSON");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }

  try {
    if (*gen) return run_gen(g);
    if (*mpe) return run_mpe(m);
    if (*test) {
      if (!*alphaOpt && !t.plugin) throw InvalidArgument("test needs --alpha or --plugin");
      return run_test(t);
    }
    if (*exp) return run_exp(e);
  } catch (const NumericalError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return 3;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
