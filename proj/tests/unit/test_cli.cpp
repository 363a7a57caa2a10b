#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "vrg/profiler.hpp"
#include "vrg/sampler.hpp"
#include "vrg/trajectory.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kCli = VRG_CLI_PATH;
const fs::path kConfigs = VRG_CONFIG_DIR;

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("vrg_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

// Runs the CLI from cwd; returns the exit status and leaves stderr in err.
int run_cli(const std::string& args, const fs::path& cwd, std::string* err = nullptr,
        const std::string& env = "") {
  const fs::path err_file = cwd / "stderr.txt";
  const std::string cmd = "cd '" + cwd.string() + "' && " + env + " '" + kCli.string() + "' " + args +
                          " > /dev/null 2> '" + err_file.string() + "'";
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream in(err_file);
    std::stringstream ss;
    ss << in.rdbuf();
    *err = ss.str();
  }
  fs::remove(err_file);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = slurp(e.path());
  return files;
}


const std::string gmm = (kConfigs / "gmm2d.json").string();

}  // namespace

TEST_CASE("optimize with zero learning portion reproduces its input") {
  Scratch s("identity");
  REQUIRE(run_cli("make-traj --kind quadratic -K 10 --out base.json", s.dir) == 0);
  REQUIRE(run_cli("profile --denoiser " + gmm + " --data " + gmm + " --n-data 500 --grid 16 --draws 2 --out p.csv", s.dir) == 0);
  REQUIRE(run_cli("optimize --traj base.json --profile p.csv --gamma 0 --out same.json --trace trace.csv", s.dir) == 0);
  CHECK(slurp(s.dir / "base.json") == slurp(s.dir / "same.json"));
  CHECK(fs::exists(s.dir / "same.json.manifest.json"));
  CHECK(slurp(s.dir / "trace.csv").rfind("iter,cpe,reg,total\n", 0) == 0);

  REQUIRE(run_cli("optimize --traj base.json --profile p.csv --out opt.json", s.dir) == 0);
  const auto opt = vrg::load_trajectory(s.dir / "opt.json");
  CHECK(opt.size() == 10);
  CHECK_FALSE(opt == vrg::load_trajectory(s.dir / "base.json"));
}

TEST_CASE("bundled pipeline config is reproducible") {
  Scratch s("pipeline");
  const std::string args = "pipeline --config pipeline.json --out-dir '" + (s.dir / "a").string() + "'";
  REQUIRE(run_cli(args, kConfigs) == 0);
  const fs::path a = s.dir / "a";
  for (const char* name : {"manifest.json", "profile.csv", "optimized.json", "samples.bin", "simulate.json", "eval.json"}) {
    CHECK_MESSAGE(fs::exists(a / name), name);
  }

  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest.at("subcommand") == "pipeline");
  CHECK(manifest.at("version").is_string());
  CHECK(manifest.at("options").at("seed") == "2024");
  CHECK(manifest.at("resolved").at("config").at("gamma") == 0.1);

  // every artifact loads back
  CHECK(vrg::load_trajectory(a / "optimized.json").size() == 10);
  CHECK(vrg::load_profile(a / "profile.csv").knots().size() == 64);
  const auto batch = vrg::load_batch(a / "samples.bin");
  CHECK(batch.samples.d == 2);
  CHECK(nlohmann::json::parse(slurp(a / "eval.json")).at("swd").get<double>() > 0.0);

  const auto first = snapshot(a);
  REQUIRE(run_cli(args, kConfigs) == 0);
  CHECK(snapshot(a) == first);
}

TEST_CASE("sweep row counts") {
  Scratch s("sweep");
  REQUIRE(run_cli("sweep --data " + gmm + " --denoiser " + gmm +
                  " --lambdas 0.5,1 --kinds quadratic,uniform -K 10 --n-data 500 --grid 16 --draws 2"
                  " --n-samples 500 --projections 16 --iters 200 --out sweep.csv",
              s.dir) == 0);
  std::ifstream in(s.dir / "sweep.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "gamma,lambda,kind,K,cpe_base,cpe_opt,swd_base,swd_opt");
  std::map<std::string, int> per_combo;
  for (std::string line; std::getline(in, line);) {
    std::stringstream ss(line);
    std::string gamma, lambda, kind;
    std::getline(ss, gamma, ',');
    std::getline(ss, lambda, ',');
    std::getline(ss, kind, ',');
    ++per_combo[lambda + "/" + kind];
  }
  CHECK(per_combo.size() == 4);
  for (const auto& [key, rows] : per_combo) CHECK_MESSAGE(rows == 4, key);
}

TEST_CASE("config file values yield to explicit flags") {
  Scratch s("config");
  {
    std::ofstream cfg(s.dir / "cfg.json");
    cfg << R"({"kind": "uniform", "steps": 5, "out": "from_config.json"})";
  }
  REQUIRE(run_cli("make-traj --config cfg.json", s.dir) == 0);
  CHECK(vrg::load_trajectory(s.dir / "from_config.json").size() == 5);
  REQUIRE(run_cli("make-traj --config cfg.json --steps 7", s.dir) == 0);
  const auto t = vrg::load_trajectory(s.dir / "from_config.json");
  CHECK(t.size() == 7);
  CHECK(t.kind == vrg::ScheduleKind::uniform);
}

TEST_CASE("output directory from the environment") {
  Scratch s("env");
  REQUIRE(run_cli("make-traj -K 3", s.dir, nullptr, "VRG_OUT_DIR=out") == 0);
  CHECK(fs::exists(s.dir / "out" / "trajectory.json"));
  CHECK(fs::exists(s.dir / "out" / "trajectory.json.manifest.json"));
  REQUIRE(run_cli("make-traj -K 3 --out-dir flag", s.dir, nullptr, "VRG_OUT_DIR=out") == 0);
  CHECK(fs::exists(s.dir / "flag" / "trajectory.json"));
}

TEST_CASE("failures map to distinct exit codes with a JSON error") {
  Scratch s("errors");
  REQUIRE(run_cli("make-traj -K 4 --out base.json", s.dir) == 0);
  REQUIRE(run_cli("profile --denoiser " + gmm + " --data " + gmm + " --n-data 200 --grid 8 --draws 1 --out p.csv", s.dir) == 0);
  {
    std::ofstream(s.dir / "increasing.json") << R"({"label": "x", "kind": "custom", "alpha_bar": [0.2, 0.5]})";
    std::ofstream(s.dir / "partial.json") << R"({"label": "x"})";
    std::ofstream(s.dir / "extra.json") << R"({"no-such-option": 1})";
  }
  struct Case {
    std::string args;
    int code;
    std::string kind;
  };
  const Case cases[] = {
      {"optimize --traj base.json --profile p.csv --gamma -1", 2, "invalid_argument"},
      {"optimize --traj base.json", 2, "invalid_argument"},
      {"eval --batch b.bin --ref " + gmm + " --against b.bin --n-ref 3", 2, "invalid_argument"},
      {"make-traj --kind nonsense", 2, "invalid_argument"},
      {"optimize --traj increasing.json --profile p.csv", 4, "invalid_trajectory"},
      {"optimize --traj partial.json --profile p.csv", 5, "schema_error"},
      {"optimize --config extra.json --traj base.json --profile p.csv", 5, "schema_error"},
      {"optimize --traj missing.json --profile p.csv", 7, "io_error"},
  };
  for (const auto& c : cases) {
    std::string err;
    CHECK_MESSAGE(run_cli(c.args, s.dir, &err) == c.code, c.args);
    const auto j = nlohmann::json::parse(err, nullptr, false);
    REQUIRE_MESSAGE(!j.is_discarded(), err);
    CHECK(j.at("error").at("kind") == c.kind);
    CHECK(j.at("error").at("exit_code") == c.code);
  }
  CHECK(run_cli("--help", s.dir) == 0);
}
