#include <filesystem>
#include <fstream>

#include "catch_amalgamated.hpp"

#include "semidyn/fixtures.hpp"
#include "semidyn/io.hpp"

using namespace semidyn;
using io::json;

namespace {
  std::filesystem::path scratch(char const* name) {
    auto dir = std::filesystem::temp_directory_path() / "semidyn_test_io";
    std::filesystem::create_directories(dir);
    return dir / name;
  }
}  // namespace

TEST_CASE("FNV-1a reference values", "[io]") {
  CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(io::fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("complex number text forms", "[io]") {
  CHECK(format_pair({-1, 0}) == "-1,0");
  CHECK(parse_pair("2.5,-0.125") == Complex(2.5, -0.125));
  CHECK(format_complex({0.2, 0}) == "0.2+0i");
  CHECK(format_complex({1e-5, -2.5}) == "1e-05-2.5i");
  CHECK(parse_complex("1e-05-2.5i") == Complex(1e-5, -2.5));
  CHECK(parse_complex("-3+4i") == Complex(-3, 4));
  CHECK(std::signbit(parse_complex("0-0i").im));
  CHECK_THROWS_AS(parse_pair("1;2"), ParseError);
  CHECK_THROWS_AS(parse_complex("1+i"), ParseError);
  for (double x : {0.1, 1.0 / 3.0, -2.718281828459045, 5e-324, 1.7976931348623157e308}) {
    CHECK(parse_double(format_double(x)) == x);
  }
}

TEST_CASE("commutator tables round-trip through JSON", "[io][table]") {
  auto const s = find_fixture("derived-exp-shift").presentation();
  auto const t = build_commutator_table(s, SamplePlan{});
  auto const j = io::table_to_json(t);
  REQUIRE(j.size() == 4);
  CHECK(j[1]["i"] == 1);
  CHECK(j[1]["j"] == 2);
  CHECK(j[1].contains("residual"));
  CHECK(j[1]["a"].get<std::string>().find(',') != std::string::npos);

  auto const back = io::table_from_json(json::parse(j.dump()), 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(back.entry(i, k) == t.entry(i, k));
    }
  }
  json partial = j;
  partial.erase(partial.begin());
  CHECK_THROWS_AS(io::table_from_json(partial, 2), InvalidArgument);
  json outside = j;
  outside[0]["i"] = 3;
  CHECK_THROWS_AS(io::table_from_json(outside, 2), InvalidArgument);
}

TEST_CASE("presentations round-trip through JSON", "[io]") {
  auto const s    = find_fixture("example-2.1-cos").presentation();
  auto const j    = io::presentation_to_json(s);
  CHECK(j["composition_order"] == "rightmost-applied-first");
  auto const back = io::presentation_from_json(j);
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(structurally_equal(back[i], s[i]));
  }
  json refs = {{"generators", {"cos(z)", "neg(f1)"}}};
  CHECK(structurally_equal(io::presentation_from_json(refs)[1], fn::neg(fn::cos())));
  json bad = {{"generators", {"neg(f2)", "cos(z)"}}};
  CHECK_THROWS_AS(io::presentation_from_json(bad), ParseError);
}

TEST_CASE("normal form reports", "[io]") {
  auto const s   = find_fixture("example-2.1-exp").presentation();
  auto const ctx = RewriteContext::build(s, SamplePlan{});
  auto const w   = Word::from_one_based({2, 1, 2});
  auto const j   = io::normal_form_to_json(w, normal_form(w, s, ctx.table, ctx.group, SamplePlan{}));
  CHECK(j["word"] == json::array({2, 1, 2}));
  CHECK(j["prefix"]["a"] == "-1,0");
  CHECK(j["prefix"]["b"] == "0,0");
  CHECK(j["exponents"] == json::array({1, 2}));
}

TEST_CASE("grid specs round-trip through JSON", "[io]") {
  auto spec       = GridSpec::window(-2, 1, -0.5, 1.5, 30, 20);
  spec.max_iter   = 77;
  spec.word_depth = 3;
  auto const back = io::spec_from_json(json::parse(io::spec_to_json(spec).dump()));
  CHECK(back.same_geometry(spec));
  CHECK(back.max_iter == 77);
  CHECK(back.word_depth == 3);
  CHECK(back.escape_radius == spec.escape_radius);
}

TEST_CASE("PGM rasters", "[io][pgm]") {
  ClassificationGrid g;
  g.spec = GridSpec::window(-1, 1, -1, 1, 3, 2);
  g.spec.max_iter = 100;
  g.cells = {CellStatus::escaping(0), CellStatus::escaping(50), CellStatus::escaping(100),
             CellStatus::bounded(), CellStatus::undecided(), CellStatus::bounded()};
  CHECK(io::classification_bytes(g) == std::vector<std::uint8_t>{255, 255, 255, 0, 128, 0});
  CHECK(io::heatmap_bytes(g) == std::vector<std::uint8_t>{0, 127, 254, 255, 255, 255});

  auto const data = io::pgm_data(3, 2, io::classification_bytes(g), {"seed 1", "config_hash abc"});
  CHECK(data.rfind("P5\n# seed 1\n# config_hash abc\n3 2\n255\n", 0) == 0);

  auto const path = scratch("roundtrip.pgm");
  io::write_pgm(path, 3, 2, io::classification_bytes(g), {"x"});
  auto const p = io::read_pgm(path);
  CHECK(p.cols == 3);
  CHECK(p.rows == 2);
  CHECK(p.bytes == io::classification_bytes(g));

  CHECK_THROWS_AS(io::pgm_data(2, 2, {1, 2, 3}), InvalidArgument);
  {
    std::ofstream os(scratch("short.pgm"), std::ios::binary);
    os << "P5\n4 4\n255\nab";
  }
  CHECK_THROWS_AS(io::read_pgm(scratch("short.pgm")), Error);
}

TEST_CASE("CSV cell dumps", "[io][csv]") {
  ClassificationGrid g;
  g.spec  = GridSpec::window(-1, 1, -1, 1, 2, 2);
  g.cells = {CellStatus::escaping(4), CellStatus::bounded(), CellStatus::undecided(),
             CellStatus::escaping(0)};
  auto const csv = io::csv_data(g);
  CHECK(csv
        == "row,col,re,im,status,first_escape_iteration\n"
           "0,0,-0.5,0.5,escaping,4\n"
           "0,1,0.5,0.5,bounded,-1\n"
           "1,0,-0.5,-0.5,undecided,-1\n"
           "1,1,0.5,-0.5,escaping,0\n");
}
