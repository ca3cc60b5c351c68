#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "capstate/core/error.hpp"
#include "capstate/pipeline/commands.hpp"

using namespace capstate;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
  case ErrorKind::Config: return 2;
  case ErrorKind::Data: return 3;
  case ErrorKind::Numerical: return 4;
  }
  return 1;
}

struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallel_folds;

  void attach(CLI::App *app) {
    app->add_option("--config", config, "JSON pipeline config");
    app->add_option("--set", sets, "dotted-key override, e.g. train.lr=1e-3");
    app->add_option("--seed", seed, "top-level seed");
    app->add_option("--parallel-folds", parallel_folds, "folds run concurrently");
  }

  pipeline::PipelineConfig resolve() const {
    auto cfg = config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(config);
    auto all = sets;
    if (seed) all.push_back("train.seed=" + std::to_string(*seed));
    if (parallel_folds) all.push_back("parallel_folds=" + std::to_string(*parallel_folds));
    return pipeline::with_overrides(cfg, all);
  }
};

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"capstate: effort/stress state estimation from ECG and EDA"};
  app.require_subcommand(1);

  CommonFlags pre_flags, eval_flags;
  auto *pre = app.add_subcommand("preprocess", "raw recordings -> windows_<subject>.csv");
  pre_flags.attach(pre);
  auto *ev = app.add_subcommand("evaluate", "leave-one-subject-out evaluation");
  eval_flags.attach(ev);

  auto *rep = app.add_subcommand("report", "tables and trajectory summary from fold results");
  std::string results;
  rep->add_option("results_dir", results, "directory with fold_<subject>.csv")->required();

  auto *syn = app.add_subcommand("synth", "write a synthetic canonical dataset");
  std::string synth_out;
  pipeline::SynthStudySpec spec;
  syn->add_option("--out", synth_out, "output data root")->required();
  syn->add_option("--subjects", spec.subjects, "number of subjects")->check(CLI::PositiveNumber);
  syn->add_option("--duration", spec.duration_s, "seconds per condition")->check(CLI::PositiveNumber);
  syn->add_option("--seed", spec.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*pre) {
      const auto files = pipeline::cmd_preprocess(pre_flags.resolve());
      std::cout << "wrote " << files.size() << " window file(s)\n";
    } else if (*ev) {
      const auto cfg = eval_flags.resolve();
      const auto out = pipeline::cmd_evaluate(cfg);
      std::cout << eval::render_report(out.run.folds);
      std::cout << "results in " << pipeline::results_dir(cfg).string() << '\n';
    } else if (*rep) {
      std::cout << pipeline::cmd_report(results);
    } else if (*syn) {
      const auto files = pipeline::cmd_synth(synth_out, spec);
      std::cout << "wrote " << files.size() << " file(s) under " << synth_out << '\n';
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
