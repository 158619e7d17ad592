// End-to-end checks of the CLI binary: flag handling, exit codes, and file
// outputs. The binary path comes from the build system (HDTE_TOOL_PATH).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "hdte/model.hpp"
#include "hdte/sampling.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_tool(const std::string& args) {
  const fs::path out_path = fs::temp_directory_path() / "hdte_cli_out.txt";
  const std::string command =
      std::string(HDTE_TOOL_PATH) + " " + args + " > " + out_path.string() + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream input(out_path);
  std::stringstream buffer;
  buffer << input.rdbuf();
  result.output = buffer.str();
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream input(path);
  std::stringstream buffer;
  buffer << input.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "hdte_cli_fixtures") {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("estimate on the hand example") {
  TempDir tmp;
  const fs::path data = tmp.path / "d1.csv";
  {
    std::ofstream out(data);
    out << "x,a,y\n1,1,1\n1,0,0\n2,1,0\n2,0,1\n";
  }
  const auto plugin = run_tool("estimate --data " + data.string() + " --estimator plugin");
  CHECK(plugin.exit_code == 0);
  CHECK(plugin.output.find("value=0\n") != std::string::npos);

  const auto ipw =
      run_tool("estimate --data " + data.string() + " --estimator ipw --nuisance empirical");
  CHECK(ipw.exit_code == 0);
  CHECK(ipw.output.find("value=0\n") != std::string::npos);

  const auto dr_ci =
      run_tool("estimate --data " + data.string() + " --estimator dr --level 0.9");
  CHECK(dr_ci.exit_code == 0);
  CHECK(dr_ci.output.find("ci_lower=") != std::string::npos);
  CHECK(dr_ci.output.find("ci_level=0.9") != std::string::npos);
}

TEST_CASE("estimate exit codes") {
  CHECK(run_tool("estimate --data /nonexistent.csv --estimator plugin").exit_code == 2);
  CHECK(run_tool("estimate --bogus-flag x").exit_code == 1);
  CHECK(run_tool("nosuchcommand").exit_code == 1);

  TempDir tmp;
  const fs::path data = tmp.path / "d.csv";
  {
    std::ofstream out(data);
    out << "x,a,y\n1,1,1\n1,0,0\n";
  }
  // plugin accepts only same-sample empirical nuisances.
  CHECK(run_tool("estimate --data " + data.string() + " --estimator plugin --nuisance zero")
            .exit_code == 1);
  // second-order estimators refuse same-sample empirical nuisances.
  CHECK(run_tool("estimate --data " + data.string() + " --estimator eta2").exit_code == 1);
  // --level is dr-only.
  CHECK(run_tool("estimate --data " + data.string() + " --estimator plugin --level 0.9")
            .exit_code == 1);
  // malformed records are a data error.
  const fs::path bad = tmp.path / "bad.csv";
  {
    std::ofstream out(bad);
    out << "x,a,y\n1,7,1\n";
  }
  CHECK(run_tool("estimate --data " + bad.string() + " --estimator plugin").exit_code == 2);
}

TEST_CASE("estimate with zeroed nuisances and a model file") {
  TempDir tmp;
  const fs::path model_path = tmp.path / "model.json";
  hdte::save_model(hdte::uniform_sim_model(6), model_path);
  const fs::path data = tmp.path / "data.csv";
  hdte::save_dataset_csv(hdte::draw_dataset(hdte::uniform_sim_model(6), 80, {3, 3}), data);

  const auto result = run_tool("estimate --data " + data.string() +
                               " --estimator eta2 --nuisance zero --model " +
                               model_path.string());
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("estimator=eta2") != std::string::npos);

  // zero mode without a model is a usage error.
  CHECK(run_tool("estimate --data " + data.string() + " --estimator eta2 --nuisance zero")
            .exit_code == 1);
}

TEST_CASE("simulate is deterministic and feeds estimate") {
  TempDir tmp;
  const fs::path a = tmp.path / "a.csv";
  const fs::path b = tmp.path / "b.csv";
  CHECK(run_tool("simulate --uniform-d 5 --n 50 --seed 42 --out " + a.string()).exit_code == 0);
  CHECK(run_tool("simulate --uniform-d 5 --n 50 --seed 42 --out " + b.string()).exit_code == 0);
  CHECK(slurp(a) == slurp(b));

  CHECK(run_tool("estimate --data " + a.string() + " --estimator homog").exit_code == 0);

  // Exactly one model source.
  CHECK(run_tool("simulate --n 10 --out " + a.string()).exit_code == 1);
}

TEST_CASE("phase runs a config end to end") {
  TempDir tmp;
  const fs::path config = tmp.path / "config.json";
  {
    std::ofstream out(config);
    out << R"({"estimator_id":"plugin","n_list":[150],"gamma_list":[0.5,1.0],)"
        << R"("M":25,"master_seed":77})";
  }
  const fs::path table_a = tmp.path / "a.csv";
  const fs::path table_b = tmp.path / "b.csv";
  CHECK(run_tool("phase --config " + config.string() + " --out " + table_a.string())
            .exit_code == 0);
  CHECK(run_tool("phase --config " + config.string() + " --out " + table_b.string() +
                 " --workers 4")
            .exit_code == 0);
  CHECK(slurp(table_a) == slurp(table_b));

  const fs::path overlay_table = tmp.path / "c.csv";
  const fs::path plot_prefix = tmp.path / "series";
  CHECK(run_tool("phase --config " + config.string() + " --out " + overlay_table.string() +
                 " --overlay 1.5 --plotdata " + plot_prefix.string())
            .exit_code == 0);
  CHECK(slurp(overlay_table).find("bound,ratio") != std::string::npos);
  CHECK(fs::exists(tmp.path / "series_n150.csv"));

  // Malformed config: usage error, no partial output.
  const fs::path bad_config = tmp.path / "bad.json";
  {
    std::ofstream out(bad_config);
    out << R"({"estimator_id":"plugin","n_list":[150],"gamma_list":[1.0],)"
        << R"("M":0,"master_seed":77})";
  }
  const fs::path never = tmp.path / "never.csv";
  CHECK(run_tool("phase --config " + bad_config.string() + " --out " + never.string())
            .exit_code == 1);
  CHECK_FALSE(fs::exists(never));
}

TEST_CASE("bounds prints a table") {
  const auto result = run_tool("bounds --epsilon 0.25 --n 100 --d 1000 --sigma-n 0.5");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("name,value") != std::string::npos);
  CHECK(result.output.find("no_collision_bound") != std::string::npos);
  CHECK(result.output.find("homogeneity_bias_bound") != std::string::npos);
}

TEST_CASE("verify subcommand exit codes") {
  CHECK(run_tool("verify --cases 5").exit_code == 0);
  const auto negative = run_tool("verify --cases 60 --debug-truncate 0.2");
  CHECK(negative.exit_code == 3);
  CHECK(negative.output.find("FAIL") != std::string::npos);
  CHECK(negative.output.find("stream") != std::string::npos);
  CHECK(run_tool("verify --cases 1").exit_code == 0);
}
