#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rotape/experiments.hpp"

using namespace rotape;

namespace {

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& o, bool need_config) {
  auto* c = cmd->add_option("--config", o.config, "JSON run configuration");
  if (need_config) c->required();
  c->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides output.dir)");
  cmd->add_option("--seed", o.seed, "initial-data seed (overrides init.seed)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& o, const RunConfig& fallback) {
  RunConfig c = o.config.empty() ? fallback : load_config(o.config);
  if (!o.out.empty()) c.output.dir = o.out;
  if (o.seed >= 0) c.init.seed = static_cast<std::uint64_t>(o.seed);
  c.validate();
  return c;
}

void print_list() {
  for (const auto& s : scenarios()) std::printf("%-26s %s\n", s.name.c_str(), s.description.c_str());
}

int report(const ScenarioReport& rep, const std::string& dir) {
  std::printf("scenario %s -> %s\n%s", rep.scenario.c_str(), dir.c_str(), format_checks(rep).c_str());
  return rep.passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotating primitive-equations experiment driver"};
  bool list_flag = false;
  app.add_flag("--list", list_flag, "print the scenario list and exit");

  Common run_o, sweep_o, verify_o, lemma_o;
  auto* run_cmd = app.add_subcommand("run", "run the scenario named in the config");
  add_common(run_cmd, run_o, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "run one member per scenario.sweep value");
  add_common(sweep_cmd, sweep_o, true);
  auto* verify_cmd = app.add_subcommand("verify", "projection algebra and theory evaluator checks");
  add_common(verify_cmd, verify_o, false);
  auto* lemma_cmd = app.add_subcommand("lemmas", "product-estimate ratio ensembles");
  add_common(lemma_cmd, lemma_o, false);
  app.add_subcommand("list", "print the scenario list");
  app.require_subcommand(0, 1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_flag || app.got_subcommand("list")) {
      print_list();
      return 0;
    }
    if (*run_cmd) {
      const RunConfig c = resolve(run_o, RunConfig{});
      return report(run(c, {c.output.dir, run_o.threads}), c.output.dir);
    }
    if (*sweep_cmd) {
      const RunConfig c = resolve(sweep_o, RunConfig{});
      int code = 0;
      for (const auto& m : run_sweep(c, {c.output.dir, sweep_o.threads})) {
        std::printf("%s=%g\n", c.scenario.sweep_param.c_str(), m.value);
        code = std::max(code, report(m.report, c.output.dir));
      }
      return code;
    }
    if (*verify_cmd) {
      RunConfig base;
      base.output.dir = "out/verify";
      const RunConfig c = resolve(verify_o, base);
      int code = 0;
      for (const char* name : {"verify_projections", "theory_checks"}) {
        RunConfig m = c;
        m.scenario.name = name;
        const std::string dir = c.output.dir + "/" + name;
        code = std::max(code, report(run(m, {dir, verify_o.threads}), dir));
      }
      return code;
    }
    if (*lemma_cmd) {
      RunConfig base;
      base.output.dir = "out/lemmas";
      RunConfig c = resolve(lemma_o, base);
      c.scenario.name = "lemma_ratios";
      return report(run(c, {c.output.dir, lemma_o.threads}), c.output.dir);
    }
    std::cout << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
