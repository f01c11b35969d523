#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fxlab/config.hpp"
#include "fxlab/pipeline.hpp"
#include "fxlab/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

void note(const std::string& step, bool did_work) {
  std::printf("%s: %s\n", step.c_str(), did_work ? "done" : "up to date");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(fxlab::kToolName) + " " + fxlab::kToolVersion +
               " - daily direction research workbench"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(fxlab::kToolVersion));

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> jobs_override;
  std::optional<std::string> out_override;
  bool force = false;
  app.add_option("--config", config_path, "experiment config JSON")
      ->envname("FXLAB_CONFIG")
      ->required();
  app.add_option("--seed", seed_override, "master seed override")->envname("FXLAB_SEED");
  app.add_option("--jobs", jobs_override, "worker threads for fold evaluation")
      ->envname("FXLAB_JOBS");
  app.add_option("--out", out_override, "run directory override")->envname("FXLAB_OUT");
  app.add_flag("--force", force, "redo steps whose outputs are already up to date");

  app.add_subcommand("synth", "generate a synthetic data directory");
  app.add_subcommand("ingest", "load raw series and build the aligned panel");
  app.add_subcommand("build", "construct feature datasets from the panel");
  app.add_subcommand("tune", "tiered hyperparameter and feature search");
  app.add_subcommand("train", "fit the final estimator on the training span");
  app.add_subcommand("backtest", "walk-forward evaluation on the test year");
  app.add_subcommand("report", "aggregate backtests into tables and plots");
  app.add_subcommand("run", "all steps in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    fxlab::ExperimentConfig config = fxlab::load_config(config_path);
    if (seed_override) config.seed = *seed_override;
    if (jobs_override) {
      if (*jobs_override < 1) throw fxlab::ConfigError("--jobs must be >= 1");
      config.jobs = *jobs_override;
    }
    if (out_override) config.out_dir = *out_override;

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth") {
      note("synth", fxlab::pipeline::run_synth(config, force));
    } else if (cmd == "ingest") {
      note("ingest", fxlab::pipeline::run_ingest(config, force));
    } else if (cmd == "build") {
      note("build", fxlab::pipeline::run_build(config, force));
    } else if (cmd == "tune") {
      note("tune", fxlab::pipeline::run_tune(config, force));
    } else if (cmd == "train") {
      note("train", fxlab::pipeline::run_train(config, force));
    } else if (cmd == "backtest") {
      const auto records = fxlab::pipeline::run_backtest(config, force);
      std::printf("backtest: %zu evaluation(s) under results/%s\n", records.size(),
                  config.fingerprint().c_str());
    } else if (cmd == "report") {
      note("report", fxlab::pipeline::run_report(config, force));
    } else if (cmd == "run") {
      fxlab::pipeline::run_full(config, force);
      std::printf("run: results/%s complete\n", config.fingerprint().c_str());
    }
    return kExitOk;
  } catch (const fxlab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const fxlab::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const fxlab::IoError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
