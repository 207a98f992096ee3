#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "catch_amalgamated.hpp"

#include "semidyn/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
  fs::path const root = fs::temp_directory_path() / "semidyn_test_cli";

  std::string slurp(fs::path const& p) {
    std::ifstream      is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  struct Run {
    int         code = -1;
    std::string out;
    std::string err;
  };

  // Runs the CLI with `args`; `env` is prepended to the shell command.
  Run cli(std::string const& args, std::string const& env = {}) {
    fs::create_directories(root);
    auto const so  = root / "stdout.txt";
    auto const se  = root / "stderr.txt";
    std::string const cmd = env + (env.empty() ? "" : " ") + "\"" SEMIDYN_CLI_PATH "\" " + args
                            + " >\"" + so.string() + "\" 2>\"" + se.string() + "\"";
    int const status = std::system(cmd.c_str());
    Run       r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out  = slurp(so);
    r.err  = slurp(se);
    return r;
  }

  std::string out_dir(char const* name) {
    auto const d = root / name;
    fs::remove_all(d);
    return "--out \"" + d.string() + "\"";
  }

  json result(char const* dir, char const* file) {
    return semidyn::io::read_json(root / dir / file);
  }
}  // namespace

TEST_CASE("usage errors", "[cli]") {
  CHECK(cli("").code == 64);
  CHECK(cli("frobnicate").code == 64);
  CHECK(cli("render --no-such-flag").code == 64);
  CHECK(cli("--help").code == 0);
  CHECK(cli("render --cells 1 " + out_dir("u1")).code == 64);
  CHECK(cli("commutator --fixture nowhere " + out_dir("u2")).code == 64);
  CHECK(cli("commutator --gen \"exp(\" " + out_dir("u3")).code == 64);
  CHECK(cli("render --cells 8 " + out_dir("u4"), "SEMIDYN_THREADS=many").code == 64);

  auto const cfg = root / "bad_key.json";
  semidyn::io::write_json(cfg, {{"cellz", 4}});
  CHECK(cli("render --config \"" + cfg.string() + "\" " + out_dir("u5")).code == 64);
}

TEST_CASE("commutator command", "[cli][commutator]") {
  auto r = cli("commutator --fixture example-2.1-exp " + out_dir("c1"));
  REQUIRE(r.code == 0);
  auto const doc = result("c1", "commutator.json");
  CHECK(doc["complete"] == true);
  CHECK(doc["table"].size() == 4);
  CHECK(doc["table"][1]["a"] == "-1,0");
  CHECK(doc["table"][1]["b"] == "0,0");
  CHECK(doc["table"][2]["a"] == "-1,0");
  CHECK(doc.contains("config_hash"));
  CHECK(doc["seed"] == 1);
  CHECK(json::parse(r.out) == doc);

  r = cli("commutator --gen \"cos(z)\" " + out_dir("c2"));
  REQUIRE(r.code == 0);
  CHECK(result("c2", "commutator.json")["table"].size() == 1);

  r = cli("commutator --gen \"exp(z)\" --gen \"pow(z,2)\" " + out_dir("c3"));
  CHECK(r.code == 2);
  CHECK(r.err.find("(1,2)") != std::string::npos);
  CHECK(result("c3", "commutator.json")["failures"][0] == json::array({1, 2}));
}

TEST_CASE("verify command", "[cli][verify]") {
  auto r = cli("verify --fixture example-3.1-cos " + out_dir("v1"));
  CHECK(r.code == 0);
  auto const doc = result("v1", "verify.json");
  CHECK(doc["passed"] == true);
  std::size_t left = 0;
  for (auto const& c : doc["checks"]) {
    if (c["check"] == "left_resolve_exists") {
      ++left;
      CHECK(c["value"]["exists"] == false);
    }
    if (c["check"] == "resolve_xi") {
      CHECK(c["xi"]["a"] == "1,0");
    }
  }
  CHECK(left == 2);

  CHECK(cli("verify --gen \"add(exp(pow(z,2)), const(0.2+0i))\" " + out_dir("v2")).code == 0);

  // Perturb one table entry by 1e-3.
  REQUIRE(cli("commutator " + out_dir("v3")).code == 0);
  auto table = result("v3", "commutator.json");
  table["table"][1]["a"] = "-0.999,0";
  auto const bad = root / "corrupted.json";
  semidyn::io::write_json(bad, table);
  CHECK(cli("verify --table \"" + bad.string() + "\" " + out_dir("v4")).code == 3);
}

TEST_CASE("render command", "[cli][render]") {
  auto r = cli("render --map \"exp(z)\" --window -4,4,-4,4 --cells 512 " + out_dir("r1"));
  REQUIRE(r.code == 0);
  auto const doc = result("r1", "render.json");
  CHECK(doc["summary"]["counts"]["escaping"] == 512 * 512);
  auto const pgm = semidyn::io::read_pgm(root / "r1" / "classification.pgm");
  CHECK(pgm.cols == 512);
  CHECK(pgm.rows == 512);
  CHECK(slurp(root / "r1" / "heatmap.pgm").find("# config_hash") != std::string::npos);

  REQUIRE(cli("render --fixture example-2.1-cos --cells 128 " + out_dir("r2")).code == 0);
  CHECK(result("r2", "render.json")["julia_cells"].get<std::size_t>() > 0);

  // A one-generator semigroup at depth 1 is the map itself.
  REQUIRE(cli("render --gen \"cos(z)\" --word-depth 1 --cells 64 " + out_dir("r3")).code == 0);
  REQUIRE(cli("render --map \"cos(z)\" --cells 64 " + out_dir("r4")).code == 0);
  CHECK(semidyn::io::read_pgm(root / "r3" / "classification.pgm").bytes
        == semidyn::io::read_pgm(root / "r4" / "classification.pgm").bytes);

  auto const t0 = std::chrono::steady_clock::now();
  REQUIRE(cli("render --cells 16 --csv " + out_dir("r5")).code == 0);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(1));
  auto const csv = slurp(root / "r5" / "cells.csv");
  CHECK(csv.find("row,col,re,im,status,first_escape_iteration\n") != std::string::npos);
  CHECK(csv.rfind("# config_hash ", 0) == 0);

  CHECK(cli("render --cells 8 --word-depth 13 " + out_dir("r6")).code == 4);
}

TEST_CASE("artifacts are byte-reproducible", "[cli][determinism]") {
  std::string const args = "render --fixture example-2.1-exp --cells 96 --csv ";
  REQUIRE(cli(args + out_dir("d1"), "SEMIDYN_THREADS=1").code == 0);
  REQUIRE(cli(args + out_dir("d2"), "SEMIDYN_THREADS=3").code == 0);
  for (auto const* f : {"classification.pgm", "heatmap.pgm", "julia.pgm", "render.json", "cells.csv"}) {
    INFO(f);
    CHECK(slurp(root / "d1" / f) == slurp(root / "d2" / f));
  }
  REQUIRE(cli("normal-form --random 20 " + out_dir("d3")).code == 0);
  REQUIRE(cli("normal-form --random 20 " + out_dir("d4")).code == 0);
  CHECK(slurp(root / "d3" / "normal_form.json") == slurp(root / "d4" / "normal_form.json"));

  // A different seed changes the recorded hash.
  REQUIRE(cli("normal-form --random 20 --seed 9 " + out_dir("d5")).code == 0);
  CHECK(result("d5", "normal_form.json")["config_hash"] != result("d3", "normal_form.json")["config_hash"]);
  CHECK(result("d5", "normal_form.json")["seed"] == 9);
}

TEST_CASE("flags override the configuration file", "[cli][config]") {
  auto const cfg = root / "render.json";
  semidyn::io::write_json(cfg, {{"fixture", "example-2.1-cos"}, {"cells", 32}, {"max_iter", 50}});
  REQUIRE(cli("render --config \"" + cfg.string() + "\" --cells 16 " + out_dir("f1")).code == 0);
  auto const doc = result("f1", "render.json");
  CHECK(doc["config"]["grid"]["cols"] == 16);
  CHECK(doc["config"]["grid"]["max_iter"] == 50);
  CHECK(doc["config"]["fixture"] == "example-2.1-cos");

  REQUIRE(cli("render --config \"" + cfg.string() + "\" --fixture example-2.1-exp " + out_dir("f2")).code == 0);
  CHECK(result("f2", "render.json")["config"]["fixture"] == "example-2.1-exp");
}

TEST_CASE("transport command", "[cli][transport]") {
  auto r = cli("transport --fixture example-2.1-exp --cells 128 " + out_dir("t1"));
  REQUIRE(r.code == 0);
  auto const doc = result("t1", "transport.json");
  for (auto const* k : {"escaping", "julia", "fatou"}) {
    CHECK(doc[k]["ratio"].get<double>() >= 0.99);
  }
  CHECK(doc["config"]["phi"]["a"] == "-1,0");
  CHECK(semidyn::io::read_pgm(root / "t1" / "transport_diff.pgm").bytes.size() == 128 * 128);

  REQUIRE(cli("transport --phi \"affine(1+0i, 0+0i)\" --cells 64 " + out_dir("t2")).code == 0);
  auto const same = result("t2", "transport.json");
  for (auto const* k : {"escaping", "julia", "fatou"}) {
    CHECK(same[k]["ratio"] == 1.0);
  }

  CHECK(cli("transport --cells 64 --target-window -3,3,-3,3 " + out_dir("t3")).code == 64);
  CHECK(cli("transport --cells 64 --threshold 1.5 " + out_dir("t4")).code == 5);
}

TEST_CASE("normal-form command", "[cli][normal-form]") {
  REQUIRE(cli("normal-form --word 2,1 --word 1 " + out_dir("n1")).code == 0);
  auto const doc = result("n1", "normal_form.json");
  CHECK(doc["results"][0]["word"] == json::array({2, 1}));
  CHECK(doc["results"][0]["prefix"]["a"] == "-1,0");
  CHECK(doc["results"][0]["exponents"] == json::array({1, 1}));
  CHECK(doc["results"][1]["prefix"]["a"] == "1,0");
  CHECK(doc["results"][1]["prefix"]["b"] == "0,0");

  REQUIRE(cli("normal-form --random 100 --max-length 6 " + out_dir("n2")).code == 0);
  auto const batch = result("n2", "normal_form.json");
  CHECK(batch["results"].size() == 100);
  for (auto const& r : batch["results"]) {
    CHECK(r["residual"].get<double>() < 1e-9);
  }

  CHECK(cli("normal-form " + out_dir("n3")).code == 64);
  CHECK(cli("normal-form --word 3 " + out_dir("n4")).code == 64);
  CHECK(cli("normal-form --fixture derived-exp-shift --word 2,1 " + out_dir("n5")).code == 6);
  CHECK(cli("normal-form --fixture derived-non-pair --word 2,1 " + out_dir("n6")).code == 2);
}
