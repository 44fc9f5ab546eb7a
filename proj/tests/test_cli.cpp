#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "plurikit/cli.hpp"
#include "plurikit/errors.hpp"
#include "plurikit/parallel.hpp"

using namespace plurikit;
namespace fs = std::filesystem;

namespace {

const char* fs_segment_json = R"({
  "weight": {"kind": "toric", "polytope": {"segment": [0, 1]}},
  "grid": {"envelope": {"lo": -14, "hi": 14, "n": 2801}, "eval": {"lo": -10, "hi": 10, "n": 2001}},
  "k_list": [2, 4, 8, 16, 32, 64]
})";

const char* simplex_json = R"({
  "weight": {"kind": "toric", "polytope": {"vertices": [[0, 0], [1, 0], [0, 1]]}},
  "k_list": [2, 4, 8]
})";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("plurikit_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch("configs") / (name + ".json");
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string config_error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

}  // namespace

TEST_CASE("config errors name the offending key") {
  CHECK(config_error_key(R"({"weight": {"kind": "toric", "polytope": {"segment": [0, 1]}, "colour": 1}})") ==
        "weight.colour");
  CHECK(config_error_key(R"({"weight": {"kind": "toric", "polytope": {"segment": [0, 1]}}, "k_list": [4, -8]})") ==
        "k");
  CHECK(config_error_key(R"({"weight": {"kind": "toric", "polytope": {"segment": [0, 1]}}, "k_list": [8, 4]})") ==
        "k_list");
  CHECK(config_error_key(R"({"weight": {"kind": "cubic"}})") == "weight.kind");
  CHECK(config_error_key(R"({"weight": {"kind": "toric"}})") == "weight.polytope");
  CHECK(config_error_key("{not json") == "<root>");
  CHECK(config_error_key(R"({"weight": {"kind": "perturbed_toric", "polytope": {"segment": [-1, 1]},
    "bumps": [{"center": [0], "radius": 1, "amplitude": 0.4, "smoothness": 2}]}})") == "weight.bumps[0].smoothness");
}

TEST_CASE("validate echoes every default") {
  const RunConfig c = parse_config(R"({"weight": {"kind": "toric", "polytope": {"segment": [0, 1]}}})");
  const auto echo = nlohmann::json::parse(echo_config(c));
  CHECK(echo["config"]["tolerances"]["tol_sor"].get<double>() == 1e-10);
  CHECK(echo["config"]["tolerances"]["quad_tol"].get<double>() == 1e-10);
  CHECK(echo["config"]["tolerances"]["eps_D"] == "auto");
  CHECK(echo["config"]["k_list"].size() == 4);
  CHECK(echo["derived"]["eps_D_rule"].get<std::string>().find("residual") != std::string::npos);
  // V = V0 + ln(k dim / tol) with V0 = 1 + ln 2 for [0, 1] at k = 8, dim = 9.
  const double v = 1.0 + std::log(2.0) + std::log(8.0 * 9.0 / 1e-10);
  CHECK(echo["derived"]["quadrature_boxes"][0]["box_half_width"].get<double>() == doctest::Approx(v).epsilon(1e-12));
  CHECK(echo["warnings"].empty());
}

TEST_CASE("bump reaching the v-box edge is warned about") {
  const RunConfig c = parse_config(R"({
    "weight": {"kind": "perturbed_toric", "polytope": {"segment": [-1, 1]},
               "bumps": [{"center": [9.5], "radius": 1.0, "amplitude": 0.2}]},
    "grid": {"envelope": {"lo": -10, "hi": 10, "n": 201}, "eval": {"lo": -8, "hi": 8, "n": 161}}
  })");
  REQUIRE(c.warnings.size() == 2);
  CHECK(c.warnings[0].find("weight.bumps[0]") != std::string::npos);
  const auto echo = nlohmann::json::parse(echo_config(c));
  CHECK(echo["warnings"].size() == 2);
}

TEST_CASE("converge on Fubini-Study reproduces the closed forms") {
  const RunResult r = execute("converge", parse_config(fs_segment_json));
  REQUIRE(r.tables.size() == 2);
  CHECK(r.tables[0].str().rfind("# schema=plurikit.convergence.v1\n", 0) == 0);
  const auto rows = csv_rows(r.tables[0].str());
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"k", "l1_error", "sup_ratio", "normalized_dim", "target_mass"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double k = std::stod(rows[i][0]);
    // Tail nodes the computed envelope leaves off contact carry 1 - target_mass.
    const double missing = 1.0 - std::stod(rows[i][4]);
    CHECK(missing <= 2e-5);
    CHECK(std::abs(std::stod(rows[i][1]) - 1.0 / k) <= 2.0 * missing);
    CHECK(std::stod(rows[i][2]) == doctest::Approx((k + 1.0) / k).epsilon(1e-9));
  }
  for (const auto& g : r.gates) CHECK_MESSAGE(g.pass, format_gate(g));
}

TEST_CASE("volume on the unit simplex") {
  const RunResult r = execute("volume", parse_config(simplex_json));
  const auto rows = csv_rows(r.tables[0].str());
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double k = std::stod(rows[i][0]);
    CHECK(std::stol(rows[i][1]) == (static_cast<long>(k) + 1) * (static_cast<long>(k) + 2) / 2);
    CHECK(std::stod(rows[i][4]) == 0.5);
    CHECK(std::stod(rows[i][3]) == doctest::Approx(0.5).epsilon(0.01));
    // normalized_dim - 1/2 = (3k + 2) / 2k^2; the gap column subtracts the grid mass.
    CHECK(std::stod(rows[i][2]) - 0.5 == doctest::Approx((3 * k + 2) / (2 * k * k)).epsilon(1e-12));
  }
  REQUIRE(r.gates.size() == 2);
  CHECK(r.gates[0].pass);
  CHECK(r.gates[1].pass);
}

TEST_CASE("commands reject weights they do not apply to") {
  CHECK_THROWS_AS(execute("offdiag", parse_config(fs_segment_json)), ConfigError);
  CHECK_THROWS_AS(execute("converge", parse_config(R"({"weight": {"kind": "fs_chart"}})")), ConfigError);
  CHECK_THROWS_AS(execute("frobnicate", parse_config(fs_segment_json)), std::invalid_argument);
  const auto bad_window = parse_config(R"({
    "weight": {"kind": "perturbed_toric", "polytope": {"segment": [-1, 1]},
               "bumps": [{"center": [0], "radius": 1.0, "amplitude": 0.4}]},
    "k_list": [16, 32], "tzc": {"window": [-0.2, 0.2], "nodes": 3}
  })");
  try {
    execute("expansion", bad_window);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "tzc.window");
  }
}

TEST_CASE("run writes artifacts and maps outcomes to exit codes") {
  const fs::path cfg = write_config("fs", fs_segment_json);
  const fs::path out = scratch("fs_run");
  std::ostringstream log;
  CHECK(run("bergman", cfg, out, 0, log) == 0);
  CHECK(fs::exists(out / "bergman.csv"));
  CHECK(fs::exists(out / "bergman_mass.csv"));
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["version"] == std::string(tool_version));
  CHECK(manifest["command"] == "bergman");
  CHECK(manifest["resolved"]["config"]["tolerances"]["quad_tol"].get<double>() == 1e-10);
  CHECK(manifest["gates"][0]["pass"] == true);
  CHECK(slurp(out / "summary.txt").rfind("PASS mass_identity_rel ", 0) == 0);

  // Tchebishev at k = 64 on FS is 65^(1/64) - 1 = 6.7%: a gate failure.
  const fs::path cap = scratch("fs_capacity");
  CHECK(run("capacity", cfg, cap, 0, log) == 1);
  CHECK(slurp(cap / "summary.txt").find("FAIL tchebishev_rel ") != std::string::npos);

  const fs::path bad = write_config("bad", R"({"weight": {"kind": "toric", "polytope": {"segment": [0, 1]}}, "k": 3})");
  std::ostringstream err;
  CHECK(run("bergman", bad, scratch("bad"), 0, err) == 2);
  CHECK(err.str().find("k: unknown key") != std::string::npos);

  // A box too narrow for the quadrature tolerance is a numerical failure.
  const fs::path tight = write_config("tight", R"({"weight": {"kind": "toric", "polytope": {"segment": [0, 1]}},
    "k_list": [8], "tolerances": {"quad_tol": 1e-16, "max_doublings": 1}})");
  std::ostringstream num;
  CHECK(run("bergman", tight, scratch("tight"), 0, num) == 3);
  CHECK(num.str().find("gram_matrix") != std::string::npos);
}

#ifdef PLURIKIT_TOOL
TEST_CASE("tool usage errors exit with 2") {
  const std::string tool = PLURIKIT_TOOL;
  const auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  const fs::path cfg = write_config("tool", fs_segment_json);
  CHECK(status(tool + " frobnicate --config " + cfg.string() + " --out /tmp") == 2);
  CHECK(status(tool + " bergman --config " + cfg.string()) == 2);
  CHECK(status(tool + " validate --config " + cfg.string()) == 0);
  CHECK(status(tool + " --help") == 0);
}
#endif

TEST_CASE("CSV output is byte-identical across runs and worker counts") {
  const RunConfig base = parse_config(R"({
    "weight": {"kind": "perturbed_toric", "polytope": {"segment": [-1, 1]},
               "bumps": [{"center": [0], "radius": 1.0, "amplitude": 0.4}]},
    "grid": {"envelope": {"lo": -14, "hi": 14, "n": 2801}, "eval": {"lo": -12, "hi": 12, "n": 481}},
    "k_list": [16, 32]
  })");
  for (const std::string command : {"envelope", "converge", "capacity"}) {
    std::vector<std::string> outputs;
    for (int w : {1, 1, 4}) {
      set_workers(w);
      std::string all;
      for (const auto& t : execute(command, base).tables) all += t.str();
      outputs.push_back(all);
    }
    set_workers(1);
    CHECK(outputs[0] == outputs[1]);
    CHECK(outputs[0] == outputs[2]);
  }
}
