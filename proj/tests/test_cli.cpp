#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fxlab/config.hpp"
#include "fxlab/pipeline.hpp"

using namespace fxlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  TempDir() {
    path = fs::temp_directory_path() /
           ("fxlab_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }

  fs::path file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream(p) << content;
    return p;
  }
};

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::vector<std::string>& args, const TempDir& dir) {
  const fs::path out = dir.path / "cli_stdout.txt";
  const fs::path err = dir.path / "cli_stderr.txt";
  std::string cmd = std::string("'") + FXLAB_CLI_PATH + "'";
  for (const std::string& a : args) cmd += " '" + a + "'";
  cmd += " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

// Sized so the whole pipeline finishes in seconds: two instruments, two
// untransformed calendars, one representation, a two-fold plan and a
// single-digit trial budget.
nlohmann::json tiny_config(const TempDir& dir) {
  nlohmann::json j;
  j["data_dir"] = (dir.path / "data").string();
  j["instruments"] = {"EURUSD", "DAX"};
  j["indicators"] = {"USA_PMI", "EA_CAB"};
  j["target"] = "EURUSD";
  j["representations"] = {"D1"};
  j["model"] = {{"family", "TREE"}, {"hyper", {{"max_depth", std::int64_t{4}}}}};
  j["fold"] = {{"train_start", "2019-02-01"},
               {"train_end", "2019-12-31"},
               {"first_validation", "2020-01-01"},
               {"n_folds", 2}};
  j["budgets"] = {{"tier1", 4}, {"tier2", 3}, {"tier3", 2}};
  j["max_tier"] = 2;
  j["protocols"] = {"annual"};
  j["test_year"] = 2021;
  j["seed"] = 11;
  j["jobs"] = 1;
  j["out_dir"] = (dir.path / "run").string();
  j["synth"] = {{"start", "2019-01-01"},
                {"end", "2021-04-30"},
                {"instruments", {"EURUSD", "DAX"}},
                {"indicators", {"USA_PMI", "EA_CAB"}}};
  return j;
}

}  // namespace

TEST_CASE("config loading and overrides") {
  TempDir dir;
  const nlohmann::json j = tiny_config(dir);
  const fs::path p = dir.file("config.json", j.dump(2));

  const ExperimentConfig config = load_config(p);
  CHECK(config.target == "EURUSD");
  CHECK(config.instruments == std::vector<std::string>{"EURUSD", "DAX"});
  CHECK(config.representations == std::vector<Representation>{Representation::D1});
  CHECK_FALSE(config.is_stack);
  CHECK(config.model.family == ModelFamily::TREE);
  CHECK(config.fold.n_folds == 2);
  CHECK(config.fold.train_start == Date(2019, 2, 1));
  CHECK(config.fold.last_validation_end() == Date(2020, 6, 30));
  CHECK(config.budgets.tier1 == 4);
  CHECK(config.max_tier == 2);
  CHECK(config.protocols == std::vector<Protocol>{Protocol::ANNUAL});
  CHECK(config.test_year == 2021);
  CHECK(config.seed == 11);
  CHECK(config.synth.start == Date(2019, 1, 1));
  CHECK(config.synth.instruments.size() == 2);

  // The canonical form round trips.
  const ExperimentConfig back = ExperimentConfig::from_json(config.to_json());
  CHECK(back.to_json() == config.to_json());
  CHECK(back.fingerprint() == config.fingerprint());

  // Any semantic change moves the fingerprint.
  ExperimentConfig reseeded = config;
  reseeded.seed = 12;
  CHECK(reseeded.fingerprint() != config.fingerprint());
}

TEST_CASE("config rejections") {
  TempDir dir;
  CHECK_THROWS_AS(load_config(dir.path / "absent.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir.file("broken.json", "{ not json")), ConfigError);

  nlohmann::json j = tiny_config(dir);
  j.erase("model");
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

  j = tiny_config(dir);
  j["max_tier"] = 5;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

  j = tiny_config(dir);
  j["protocols"] = nlohmann::json::array();
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

  j = tiny_config(dir);
  j["jobs"] = 0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

  j = tiny_config(dir);
  j["representations"] = nlohmann::json::array();
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

  j = tiny_config(dir);
  j["representations"] = {"D9"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

  // A stack block flips the estimator mode.
  j = tiny_config(dir);
  j["stack"] = {{"bases", {{{"spec", {{"family", "KNN"}}}, {"repr", "D1"}}}},
                {"meta", {{"family", "TREE"}}},
                {"meta_repr", "D1"}};
  const ExperimentConfig stacked = ExperimentConfig::from_json(j);
  CHECK(stacked.is_stack);
  CHECK(stacked.stack.bases.size() == 1);
}

TEST_CASE("help, version and usage errors") {
  TempDir dir;
  const CliResult help = run_cli({"--help"}, dir);
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("workbench") != std::string::npos);
  for (const char* sub : {"synth", "ingest", "build", "tune", "train", "backtest", "report",
                          "run"}) {
    CHECK(help.out.find(sub) != std::string::npos);
  }

  const CliResult version = run_cli({"--version"}, dir);
  CHECK(version.exit_code == 0);
  CHECK(version.out.find(kToolVersion) != std::string::npos);

  // Missing required --config (and no FXLAB_CONFIG in the environment).
  const CliResult bare = run_cli({"synth"}, dir);
  CHECK(bare.exit_code == 2);

  // Unknown subcommand.
  const fs::path cfg = dir.file("config.json", tiny_config(dir).dump());
  const CliResult unknown = run_cli({"--config", cfg.string(), "frobnicate"}, dir);
  CHECK(unknown.exit_code == 2);

  // Unreadable config.
  const CliResult absent = run_cli({"--config", (dir.path / "nope.json").string(), "synth"}, dir);
  CHECK(absent.exit_code == 2);
  CHECK(absent.err.find("config error") != std::string::npos);

  const fs::path broken = dir.file("broken.json", "{ definitely not json");
  const CliResult bad = run_cli({"--config", broken.string(), "synth"}, dir);
  CHECK(bad.exit_code == 2);
}

TEST_CASE("ingest without data is a data error") {
  TempDir dir;
  const fs::path cfg = dir.file("config.json", tiny_config(dir).dump());
  const CliResult res = run_cli({"--config", cfg.string(), "ingest"}, dir);
  CHECK(res.exit_code == 3);
  CHECK(res.err.find("data error") != std::string::npos);
}

TEST_CASE("full pipeline run produces every artifact") {
  TempDir dir;
  const nlohmann::json j = tiny_config(dir);
  const fs::path cfg = dir.file("config.json", j.dump(2));

  const CliResult res = run_cli({"--config", cfg.string(), "run"}, dir);
  INFO(res.err);
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.find("run: results/") != std::string::npos);

  const fs::path data = dir.path / "data";
  CHECK(fs::exists(data / "ohlcv" / "EURUSD.csv"));
  CHECK(fs::exists(data / "ohlcv" / "DAX.csv"));
  CHECK(fs::exists(data / "calendar" / "USA_PMI.csv"));
  CHECK(fs::exists(data / "calendar" / "EA_CAB.csv"));

  const fs::path run = dir.path / "run";
  CHECK(fs::exists(run / "panel" / "panel.csv"));
  CHECK(fs::exists(run / "panel" / "panel_meta.json"));
  CHECK(fs::exists(run / "datasets" / "D1_tree.csv"));
  CHECK(fs::exists(run / "datasets" / "D1_tree_meta.json"));
  CHECK(fs::exists(run / "tune" / "trials_D1.csv"));
  CHECK(fs::exists(run / "tune" / "best_D1.json"));
  CHECK(fs::exists(run / "model" / "model_D1.json"));

  const ExperimentConfig config = load_config(cfg);
  const fs::path results = run / "results" / config.fingerprint();
  CHECK(fs::exists(results / "eval_tree__D1__nopca__annually.json"));
  CHECK(fs::exists(results / "table.csv"));
  CHECK(fs::exists(results / "distributions.csv"));
  CHECK(fs::exists(results / "profit_tree__D1__nopca__annually.csv"));
  CHECK(fs::exists(results / "plots" / "accuracy.svg"));

  // The trial log is a well-formed audit trail for the configured budgets.
  std::istringstream trials(slurp(run / "tune" / "trials_D1.csv"));
  std::string line;
  std::getline(trials, line);
  CHECK(line == "trial_id,tier,objective,status,config_json");
  std::size_t evaluated = 0, transferred = 0;
  while (std::getline(trials, line)) {
    if (line.find(",transferred,") != std::string::npos) {
      ++transferred;
    } else {
      ++evaluated;
    }
  }
  CHECK(evaluated == 4 + 3);  // tier-1 plus tier-2 budgets
  CHECK(transferred > 0);

  // The tuned winner is replayable from its artifact.
  const auto best = nlohmann::json::parse(slurp(run / "tune" / "best_D1.json"));
  CHECK(best.at("tier").get<int>() >= 1);
  CHECK(best.at("objective").get<double>() >= 0.0);
  CHECK(best.at("objective").get<double>() <= 1.0);

  // The table has one row per model x dataset x protocol plus a header.
  const std::string table = slurp(results / "table.csv");
  CHECK(table.find("tree") != std::string::npos);
  CHECK(table.find("D1") != std::string::npos);

  // A second run is a manifest-armored no-op that still exits cleanly.
  const CliResult again = run_cli({"--config", cfg.string(), "synth"}, dir);
  CHECK(again.exit_code == 0);
  CHECK(again.out.find("up to date") != std::string::npos);
  const CliResult build_again = run_cli({"--config", cfg.string(), "build"}, dir);
  CHECK(build_again.exit_code == 0);
  CHECK(build_again.out.find("up to date") != std::string::npos);

  // Changing the seed from the command line changes the run fingerprint.
  ExperimentConfig reseeded = config;
  reseeded.seed = 99;
  CHECK(reseeded.fingerprint() != config.fingerprint());
}
