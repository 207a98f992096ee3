#ifndef SEMIDYN_IO_HPP_
#define SEMIDYN_IO_HPP_

// File formats: JSON documents for presentations, tables, normal forms and
// grid metadata; binary PGM (P5) rasters; CSV cell dumps.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "semidyn/affine.hpp"
#include "semidyn/commutator.hpp"
#include "semidyn/complex.hpp"
#include "semidyn/error.hpp"
#include "semidyn/expr.hpp"
#include "semidyn/grid.hpp"
#include "semidyn/word.hpp"

namespace semidyn::io {

  using json = nlohmann::json;

  inline constexpr char const* composition_order = "rightmost-applied-first";

  // 64-bit FNV-1a, printed as 16 hex digits.
  inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  ////////////////////////////////////////////////////////////////////////
  // Presentations and commutator tables
  ////////////////////////////////////////////////////////////////////////

  inline json affine_to_json(AffineMap const& m) {
    return {{"a", format_pair(m.a())}, {"b", format_pair(m.b())}};
  }

  inline AffineMap affine_from_json(json const& j) {
    return {parse_pair(j.at("a").get<std::string>()),
            parse_pair(j.at("b").get<std::string>())};
  }

  inline json presentation_to_json(SemigroupPresentation const& s) {
    json gens = json::array();
    for (auto const& f : s.generators()) {
      gens.push_back(to_prefix(f));
    }
    return {{"label", s.label()},
            {"composition_order", composition_order},
            {"generators", gens}};
  }

  // Generators may refer to earlier ones as f1, f2, ...
  inline std::vector<FunctionExpr> parse_generators(
      std::vector<std::string> const& texts) {
    std::vector<FunctionExpr> gens;
    for (auto const& t : texts) {
      gens.push_back(parse_prefix(t, gens));
    }
    return gens;
  }

  inline SemigroupPresentation presentation_from_json(json const& j) {
    return {parse_generators(j.at("generators").get<std::vector<std::string>>()),
            j.value("label", std::string{})};
  }

  inline json table_to_json(CommutatorTable const& t) {
    json entries = json::array();
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t j = 0; j < t.size(); ++j) {
        auto const& m = t.entry(i, j);
        entries.push_back({{"i", i + 1},
                           {"j", j + 1},
                           {"a", format_pair(m.a())},
                           {"b", format_pair(m.b())},
                           {"residual", t.residual(i, j)}});
      }
    }
    return entries;
  }

  inline CommutatorTable table_from_json(json const& entries, std::size_t n) {
    CommutatorTable         t(n);
    std::vector<bool>       seen(n * n, false);
    for (auto const& e : entries) {
      auto const i = e.at("i").get<std::size_t>();
      auto const j = e.at("j").get<std::size_t>();
      if (i < 1 || j < 1 || i > n || j > n) {
        throw InvalidArgument("table entry index out of range");
      }
      AffineMap m(parse_pair(e.at("a").get<std::string>()),
                  parse_pair(e.at("b").get<std::string>()));
      t.set(i - 1, j - 1, m, e.value("residual", 0.0));
      seen[(i - 1) * n + (j - 1)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw InvalidArgument("commutator table is incomplete");
    }
    return t;
  }

  inline json pairs_to_json(std::vector<GeneratorPair> const& pairs) {
    json out = json::array();
    for (auto const& [i, j] : pairs) {
      out.push_back(json::array({i + 1, j + 1}));
    }
    return out;
  }

  ////////////////////////////////////////////////////////////////////////
  // Normal forms
  ////////////////////////////////////////////////////////////////////////

  inline json normal_form_to_json(Word const& w, NormalForm const& nf) {
    return {{"word", w.one_based()},
            {"prefix", affine_to_json(nf.prefix)},
            {"exponents", nf.exponents},
            {"residual", nf.residual},
            {"prefix_in_group", true},
            {"prefix_in_table", nf.prefix_in_table},
            {"swaps", nf.swaps},
            {"migrations", nf.migrations},
            {"xi_origin",
             {{"table_entry", nf.xi_table_entry},
              {"product_of_two_entries", nf.xi_product_of_two},
              {"group_only", nf.xi_group_only}}}};
  }

  ////////////////////////////////////////////////////////////////////////
  // Grids
  ////////////////////////////////////////////////////////////////////////

  inline json spec_to_json(GridSpec const& s) {
    return {{"center", format_pair(s.center)},
            {"width", s.width},
            {"height", s.height},
            {"cols", s.cols},
            {"rows", s.rows},
            {"max_iter", s.max_iter},
            {"escape_radius", s.escape_radius},
            {"word_depth", s.word_depth}};
  }

  inline GridSpec spec_from_json(json const& j) {
    GridSpec s;
    s.center        = parse_pair(j.at("center").get<std::string>());
    s.width         = j.at("width").get<double>();
    s.height        = j.at("height").get<double>();
    s.cols          = j.at("cols").get<std::size_t>();
    s.rows          = j.at("rows").get<std::size_t>();
    s.max_iter      = j.at("max_iter").get<unsigned>();
    s.escape_radius = j.at("escape_radius").get<double>();
    s.word_depth    = j.at("word_depth").get<unsigned>();
    s.validate();
    return s;
  }

  inline json subject_to_json(SubjectDescriptor const& d) {
    return {{"kind", d.kind},
            {"expressions", d.expressions},
            {"words", d.words},
            {"note", d.note},
            {"composition_order", composition_order}};
  }

  inline json grid_summary(ClassificationGrid const& g) {
    return {{"spec", spec_to_json(g.spec)},
            {"subject", subject_to_json(g.subject)},
            {"counts",
             {{"escaping", g.count(CellStatus::Kind::escaping)},
              {"bounded", g.count(CellStatus::Kind::bounded)},
              {"undecided", g.count(CellStatus::Kind::undecided)}}}};
  }

  inline json comparison_to_json(ComparisonReport const& r) {
    return {{"ratio", r.ratio},
            {"compared", r.compared},
            {"agreeing", r.agreeing},
            {"indeterminate", r.indeterminate}};
  }

  // 255 escaping, 0 bounded, 128 undecided.
  inline std::vector<std::uint8_t> classification_bytes(ClassificationGrid const& g) {
    std::vector<std::uint8_t> out(g.cells.size());
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
      switch (g.cells[k].kind) {
        case CellStatus::Kind::escaping:
          out[k] = 255;
          break;
        case CellStatus::Kind::bounded:
          out[k] = 0;
          break;
        case CellStatus::Kind::undecided:
          out[k] = 128;
          break;
      }
    }
    return out;
  }

  // First escape iteration scaled to 0..254; 255 marks non-escaping cells.
  inline std::vector<std::uint8_t> heatmap_bytes(ClassificationGrid const& g) {
    std::vector<std::uint8_t> out(g.cells.size(), 255);
    auto const                top = static_cast<std::uint64_t>(g.spec.max_iter);
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
      if (g.cells[k].is_escaping()) {
        out[k] = static_cast<std::uint8_t>(
            (254 * static_cast<std::uint64_t>(g.cells[k].iteration)) / top);
      }
    }
    return out;
  }

  inline std::vector<std::uint8_t> mask_bytes(CellMask const& m) {
    std::vector<std::uint8_t> out(m.bits.size());
    for (std::size_t k = 0; k < m.bits.size(); ++k) {
      out[k] = m.bits[k] ? 255 : 0;
    }
    return out;
  }

  inline std::string pgm_data(std::size_t                     cols,
                              std::size_t                     rows,
                              std::vector<std::uint8_t> const& bytes,
                              std::vector<std::string> const& comments = {}) {
    if (bytes.size() != cols * rows) {
      throw InvalidArgument("PGM payload does not match its dimensions");
    }
    std::string out = "P5\n";
    for (auto const& c : comments) {
      out += "# " + c + "\n";
    }
    out += std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
    out.append(reinterpret_cast<char const*>(bytes.data()), bytes.size());
    return out;
  }

  inline void write_file(std::filesystem::path const& path, std::string const& data) {
    if (path.has_parent_path()) {
      std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
      throw Error("cannot open " + path.string() + " for writing");
    }
    os.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!os) {
      throw Error("failed writing " + path.string());
    }
  }

  inline void write_pgm(std::filesystem::path const&     path,
                        std::size_t                      cols,
                        std::size_t                      rows,
                        std::vector<std::uint8_t> const& bytes,
                        std::vector<std::string> const&  comments = {}) {
    write_file(path, pgm_data(cols, rows, bytes, comments));
  }

  struct Pgm {
    std::size_t               cols = 0;
    std::size_t               rows = 0;
    std::vector<std::uint8_t> bytes;
  };

  inline Pgm read_pgm(std::filesystem::path const& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
      throw Error("cannot open " + path.string());
    }
    std::string magic;
    is >> magic;
    if (magic != "P5") {
      throw Error(path.string() + " is not a binary PGM");
    }
    auto skip = [&is] {
      while (true) {
        is >> std::ws;
        if (is.peek() != '#') {
          return;
        }
        std::string line;
        std::getline(is, line);
      }
    };
    Pgm         p;
    std::size_t maxval = 0;
    skip();
    is >> p.cols;
    skip();
    is >> p.rows;
    skip();
    is >> maxval;
    is.get();
    if (!is || maxval != 255) {
      throw Error(path.string() + " has an unsupported PGM header");
    }
    p.bytes.resize(p.cols * p.rows);
    is.read(reinterpret_cast<char*>(p.bytes.data()),
            static_cast<std::streamsize>(p.bytes.size()));
    if (!is) {
      throw Error(path.string() + " is truncated");
    }
    return p;
  }

  // row,col,re,im,status,first_escape_iteration (-1 when not escaping).
  inline std::string csv_data(ClassificationGrid const& g) {
    std::string out = "row,col,re,im,status,first_escape_iteration\n";
    for (std::size_t r = 0; r < g.spec.rows; ++r) {
      for (std::size_t c = 0; c < g.spec.cols; ++c) {
        auto const& st = g.at(r, c);
        auto const  z  = g.spec.cell_center(r, c);
        out += std::to_string(r) + "," + std::to_string(c) + ","
               + format_double(z.re) + "," + format_double(z.im) + ","
               + to_string(st.kind) + ","
               + (st.is_escaping() ? std::to_string(st.iteration) : "-1")
               + "\n";
      }
    }
    return out;
  }

  inline json read_json(std::filesystem::path const& path) {
    std::ifstream is(path);
    if (!is) {
      throw Error("cannot open " + path.string());
    }
    try {
      return json::parse(is);
    } catch (json::exception const& e) {
      throw Error(path.string() + ": " + e.what());
    }
  }

  inline void write_json(std::filesystem::path const& path, json const& j) {
    write_file(path, j.dump(2) + "\n");
  }

}  // namespace semidyn::io

#endif  // SEMIDYN_IO_HPP_
