#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fracred/experiment.hpp"
#include "fracred/io.hpp"
#include "json.hpp"

using namespace fracred;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kSmall = R"({
  "mesh": {"dim": 1, "box": [-2.0, 2.0], "cells": 40},
  "regions": {"omega": [-1.0, 1.0], "w": [1.25, 1.75], "wtilde": [-1.75, -1.25], "e": [1.8, 2.0]},
  "operators": [{"A": "identity"}, {"c": 5.0}],
  "a": [0.5],
  "quad": {"s_max": 4.0, "n": 200},
  "diffeo": {"type": "radial_shrink", "rho": 0.9, "factor": 0.8},
  "seed": 7
})";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("fracred_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const std::string& name, const json& j) {
  const fs::path p = dir / name;
  write_text_file(p, j.dump(2));
  return p;
}

json small() { return json::parse(kSmall); }

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = std::string(FRACRED_CLI) + " " + args + " > cli_out.txt 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) *output = read_text_file("cli_out.txt");
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run(const fs::path& config, const fs::path& out, std::optional<std::vector<std::string>> suites = {}) {
  std::ostringstream log;
  RunOptions o;
  o.out = out;
  o.suites = std::move(suites);
  return run_experiment(config, o, log);
}

json read_json(const fs::path& p) { return json::parse(read_text_file(p)); }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read_text_file(e.path());
  return out;
}

}  // namespace

TEST_CASE("parse a full configuration") {
  const ExperimentConfig c = parse_config(kSmall, "/base");
  CHECK(c.dim == 1);
  CHECK(c.nx == 40);
  CHECK(c.operators.size() == 2);
  CHECK(c.operators[1].c == 5.0);
  CHECK_FALSE(c.operators[0].A.has_value());
  REQUIRE(c.e.has_value());
  CHECK(c.e->xmin == 1.8);
  REQUIRE(c.diffeo.has_value());
  CHECK(c.diffeo->factor == 0.8);
  CHECK(c.seed == 7);
  CHECK(c.suites.empty());

  json j = small();
  j["operators"][0] = {{"A", {{"type", "diag"}, {"values", {2.0}}}},
                       {"b", {{"type", "constant"}, {"value", {0.5}}}},
                       {"c", {{"type", "per_element_file"}, {"path", "c.csv"}}},
                       {"ellipticity", 2.0}};
  j["diffeo"] = {{"type", "nodal_file"}, {"path", "d.csv"}};
  const ExperimentConfig d = parse_config(j.dump(), "/base");
  CHECK((*d.operators[0].A)(0, 0) == 2.0);
  CHECK((*d.operators[0].b)(0) == 0.5);
  CHECK(*d.operators[0].c_file == fs::path("/base/c.csv"));
  CHECK(d.diffeo->path == fs::path("/base/d.csv"));
}

TEST_CASE("schema violations") {
  auto bad = [](const std::function<void(json&)>& edit) {
    json j = small();
    edit(j);
    CHECK_THROWS_AS(parse_config(j.dump(), "."), SchemaError);
  };
  bad([](json& j) { j["extra"] = 1; });
  bad([](json& j) { j["mesh"]["typo"] = 1; });
  bad([](json& j) { j["mesh"].erase("cells"); });
  bad([](json& j) { j["mesh"]["dim"] = 3; });
  bad([](json& j) { j["mesh"]["box"] = {2.0, -2.0}; });
  bad([](json& j) { j["regions"]["omega"] = {0.0, 1.0, 0.0, 1.0}; });
  bad([](json& j) { j["operators"] = json::array(); });
  bad([](json& j) { j["operators"] = {json::object(), json::object(), json::object()}; });
  bad([](json& j) { j["operators"][0]["A"] = {{"type", "tensor"}}; });
  bad([](json& j) { j["operators"][0]["A"] = {{"type", "diag"}, {"values", {1.0, 2.0}}}; });
  bad([](json& j) { j["operators"][0]["b"] = {{"type", "constant"}, {"value", 1.0}}; });
  bad([](json& j) { j["operators"][0]["ellipticity"] = 0.5; });
  bad([](json& j) { j["a"] = {1.0}; });
  bad([](json& j) { j["a"] = json::array(); });
  bad([](json& j) { j["quad"]["n"] = 1; });
  bad([](json& j) { j["diffeo"]["factor"] = 2.0; });
  bad([](json& j) { j["diffeo"]["type"] = "twist"; });
  bad([](json& j) { j["seed"] = -1; });
  bad([](json& j) { j["diagnostics"] = {{"heat_t", 0.0}}; });
  CHECK_THROWS_AS(parse_config("{not json", "."), SchemaError);
}

TEST_CASE("suite listing") {
  const auto& s = list_suites();
  REQUIRE(s.size() == 6);
  CHECK(std::string(s.front().name) == "calibrate");
  CHECK(std::string(s.back().name) == "diagnostics");
  const std::string text = list_suites_text();
  CHECK(text.find("gauge") != std::string::npos);
  CHECK(text.find("reduce") != std::string::npos);
  CHECK(text == list_suites_text());
  CHECK(text.find("calibrate") < text.find("reduce"));

  std::string out;
  CHECK(run_cli("list-suites", &out) == 0);
  CHECK(out == text);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == kExitSchema);
  CHECK(run_cli("bogus") == kExitSchema);
}

TEST_CASE("full run writes every artefact and is deterministic") {
  TempDir t("run");
  const fs::path cfg = write_config(t.path, "small.json", small());
  REQUIRE(run(cfg, t.path / "one") == kExitOk);
  REQUIRE(run_cli("run " + cfg.string() + " --out " + (t.path / "two").string()) == kExitOk);
  for (const char* f : {"summary.json", "calibration.csv", "calibrate.json", "mesh.json", "assemble.json",
                        "spectrum_op0.csv", "spectrum_op1.csv", "direct.json", "reduce.json", "cauchy_gap.json",
                        "gauge_check.json", "diagnostics.json", "svals_ucp_a0.5_sigma1.csv",
                        "svals_runge_a0.5.csv"}) {
    CHECK_MESSAGE(fs::exists(t.path / "one" / f), f);
  }
  CHECK_FALSE(fs::exists(t.path / "one" / "failure.json"));
  const json s = read_json(t.path / "one" / "summary.json");
  CHECK(s["status"] == "passed");
  CHECK(s["seed"] == 7);
  CHECK(s["suites"].size() == 6);
  for (const auto& c : s["contracts"]) CHECK_MESSAGE(c["pass"].get<bool>(), c.dump());
  CHECK(snapshot(t.path / "one") == snapshot(t.path / "two"));

  // A different seed changes the randomized checks only.
  std::ostringstream log;
  RunOptions o;
  o.out = t.path / "three";
  o.seed = 8;
  REQUIRE(run_experiment(cfg, o, log) == kExitOk);
  const auto a = snapshot(t.path / "one");
  const auto b = snapshot(t.path / "three");
  CHECK(a.at("direct.json") != b.at("direct.json"));
  CHECK(a.at("mesh.json") == b.at("mesh.json"));
  CHECK(a.at("gauge_check.json") == b.at("gauge_check.json"));
}

TEST_CASE("suite selection") {
  TempDir t("select");
  json j = small();
  j.erase("diffeo");
  const fs::path cfg = write_config(t.path, "c.json", j);
  REQUIRE(run(cfg, t.path / "out") == kExitOk);
  CHECK(read_json(t.path / "out" / "summary.json")["suites"].size() == 5);
  CHECK_FALSE(fs::exists(t.path / "out" / "gauge_check.json"));

  REQUIRE(run(cfg, t.path / "sel", std::vector<std::string>{"assemble"}) == kExitOk);
  CHECK(fs::exists(t.path / "sel" / "assemble.json"));
  CHECK_FALSE(fs::exists(t.path / "sel" / "direct.json"));

  CHECK(run(cfg, t.path / "g", std::vector<std::string>{"gauge"}) == kExitSchema);
  CHECK(read_json(t.path / "g" / "failure.json")["kind"] == "schema");
  CHECK(run_cli("run " + cfg.string() + " --out " + (t.path / "u").string() + " --suites assemble,nope") ==
        kExitSchema);
}

TEST_CASE("exit codes and failure manifests") {
  TempDir t("fail");
  CHECK(run(t.path / "missing.json", t.path / "m") == kExitIo);
  CHECK(read_json(t.path / "m" / "failure.json")["kind"] == "io");

  json j = small();
  j["unknown"] = true;
  CHECK(run(write_config(t.path, "u.json", j), t.path / "u") == kExitSchema);

  j = small();
  j["operators"][1]["c"] = -1e6;
  CHECK(run(write_config(t.path, "p.json", j), t.path / "p") == kExitContract);
  const json p = read_json(t.path / "p" / "failure.json");
  CHECK(p["kind"] == "positivity");
  CHECK(p["lambda_min"].get<double>() < 0.0);
  CHECK(p["exit_code"] == 1);

  j = small();
  j["quad"] = {{"s_max", 2.0}, {"n", 20}};
  CHECK(run(write_config(t.path, "q.json", j), t.path / "q") == kExitContract);
  CHECK(read_json(t.path / "q" / "failure.json")["kind"] == "quadrature");

  // Regions violating the labeling preconditions.
  j = small();
  j["regions"]["w"] = {0.5, 1.75};
  CHECK(run(write_config(t.path, "r.json", j), t.path / "r") == kExitSchema);

  // Output path blocked by a regular file.
  write_text_file(t.path / "blocker", "x");
  CHECK(run(write_config(t.path, "ok.json", small()), t.path / "blocker" / "sub") == kExitIo);

  // A stale manifest is removed by a successful run.
  fs::create_directories(t.path / "stale");
  write_text_file(t.path / "stale" / "failure.json", "{}");
  CHECK(run(t.path / "ok.json", t.path / "stale", std::vector<std::string>{"assemble"}) == kExitOk);
  CHECK_FALSE(fs::exists(t.path / "stale" / "failure.json"));
}

TEST_CASE("per-element coefficient files") {
  TempDir t("coeff");
  // Omega elements of the 40-cell mesh on (-2,2) are 10..29.
  {
    std::ofstream c(t.path / "c.csv");
    for (int e = 10; e < 30; ++e) c << e << ",5.0\n";
  }
  json j = small();
  j["operators"][1] = {{"c", {{"type", "per_element_file"}, {"path", "c.csv"}}}};
  REQUIRE(run(write_config(t.path, "file.json", j), t.path / "file", std::vector<std::string>{"assemble"}) ==
          kExitOk);
  REQUIRE(run(write_config(t.path, "const.json", small()), t.path / "const",
              std::vector<std::string>{"assemble"}) == kExitOk);
  CHECK(read_text_file(t.path / "file" / "spectrum_op1.csv") ==
        read_text_file(t.path / "const" / "spectrum_op1.csv"));

  {
    std::ofstream c(t.path / "c.csv");
    c << "2,5.0\n";
  }
  CHECK(run(t.path / "file.json", t.path / "outside") == kExitSchema);
  {
    std::ofstream c(t.path / "c.csv");
    c << "12,5.0,1.0\n";
  }
  CHECK(run(t.path / "file.json", t.path / "width") == kExitSchema);
  {
    std::ofstream A(t.path / "A.csv");
    A << "15,2.0\n";
  }
  j["operators"][1] = {{"A", {{"type", "per_element_file"}, {"path", "A.csv"}}}, {"ellipticity", 2.0}};
  CHECK(run(write_config(t.path, "A.json", j), t.path / "A", std::vector<std::string>{"assemble"}) == kExitOk);
}
