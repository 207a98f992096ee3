#ifndef SEMIDYN_CLI_HPP_
#define SEMIDYN_CLI_HPP_

// The semidyn command line: subcommands, configuration resolution and the
// artifacts each command writes. Kept in a header so tests can run commands
// in-process.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "semidyn/semidyn.hpp"

namespace semidyn::cli {

  using json = nlohmann::json;
  namespace fs = std::filesystem;

  namespace exit_code {
    inline constexpr int ok                    = 0;
    inline constexpr int failure               = 1;
    inline constexpr int not_representable     = 2;
    inline constexpr int verify_failed         = 3;
    inline constexpr int word_budget           = 4;
    inline constexpr int transport_below       = 5;
    inline constexpr int normal_form_failed    = 6;
    inline constexpr int usage                 = 64;
  }  // namespace exit_code

  class UsageError : public Error {
   public:
    using Error::Error;
  };

  inline constexpr char const* default_fixture   = "example-2.1-exp";
  inline constexpr double      default_threshold = 0.99;

  // Everything a command needs besides its configuration.
  struct Context {
    fs::path         out = "semidyn-out";
    ExecutionOptions exec;
    std::ostream*    report = &std::cout;
    std::ostream*    log    = &std::cerr;
  };

  ////////////////////////////////////////////////////////////////////////
  // Configuration
  ////////////////////////////////////////////////////////////////////////

  inline std::set<std::string> const& config_keys() {
    static std::set<std::string> const keys = {
        "fixture",   "lambda",     "generators", "seed",          "samples",
        "sample_radius", "tolerance", "out",     "window",        "cells",
        "cols",      "rows",       "max_iter",   "radius",        "word_depth",
        "map",       "csv",        "phi",        "target_window", "threshold",
        "table",     "words",      "random",     "max_length"};
    return keys;
  }

  inline void check_keys(json const& cfg) {
    if (!cfg.is_object()) {
      throw UsageError("configuration must be a JSON object");
    }
    for (auto const& [k, v] : cfg.items()) {
      if (!config_keys().contains(k)) {
        throw UsageError("unknown configuration key '" + k + "'");
      }
    }
  }

  inline std::vector<double> parse_number_list(std::string const& text) {
    std::vector<double> out;
    std::size_t         start = 0;
    while (true) {
      auto const comma = text.find(',', start);
      out.push_back(parse_double(text.substr(start, comma - start)));
      if (comma == std::string::npos) {
        return out;
      }
      start = comma + 1;
    }
  }

  inline Complex parse_lambda(json const& v) {
    if (v.is_number()) {
      return {v.get<double>(), 0.0};
    }
    auto const text = v.get<std::string>();
    if (text.find(',') != std::string::npos) {
      return parse_pair(text);
    }
    if (text.find('i') != std::string::npos) {
      return parse_complex(text);
    }
    return {parse_double(text), 0.0};
  }

  inline AffineMap parse_phi(json const& v) {
    if (v.is_object()) {
      return io::affine_from_json(v);
    }
    auto const e = parse_prefix(v.get<std::string>());
    if (e.kind() == NodeKind::identity) {
      return AffineMap::identity();
    }
    if (e.kind() != NodeKind::affine) {
      throw UsageError("phi must be written affine(a, b)");
    }
    return {e.node().c0, e.node().c1};
  }

  inline std::uint64_t parse_u64(std::string const& text) {
    std::uint64_t v   = 0;
    auto const [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) {
      throw UsageError("expected a non-negative integer but got '" + text + "'");
    }
    return v;
  }

  // SEMIDYN_THREADS caps the worker count; unset or 0 means automatic.
  inline ExecutionOptions execution_from_env() {
    ExecutionOptions opts;
    if (char const* env = std::getenv("SEMIDYN_THREADS"); env && *env) {
      opts.threads = static_cast<unsigned>(parse_u64(env));
    }
    return opts;
  }

  struct Subject {
    std::vector<std::string>  texts;
    std::vector<FunctionExpr> maps;
    std::string               label;
    std::optional<AffineMap>  phi;  // the fixture's commutator, if any

    [[nodiscard]] SemigroupPresentation presentation() const {
      return {maps, label};
    }
  };

  inline Subject resolve_subject(json const& cfg, json& eff) {
    Subject s;
    if (cfg.contains("generators")) {
      s.texts = cfg.at("generators").get<std::vector<std::string>>();
      s.label = "custom";
    } else {
      auto const& fx = find_fixture(cfg.value("fixture", std::string(default_fixture)));
      std::optional<Complex> lambda;
      if (cfg.contains("lambda")) {
        lambda = parse_lambda(cfg.at("lambda"));
      }
      s.texts         = fx.generator_texts(lambda);
      s.label         = fx.name;
      s.phi           = fx.phi;
      eff["fixture"]  = fx.name;
      eff["lambda"]   = format_pair(lambda.value_or(fx.lambda));
    }
    if (s.texts.empty()) {
      throw UsageError("no generators given");
    }
    s.maps            = io::parse_generators(s.texts);
    eff["generators"] = s.texts;
    return s;
  }

  inline SamplePlan resolve_plan(json const& cfg, json& eff) {
    SamplePlan p;
    p.seed      = cfg.value("seed", p.seed);
    p.count     = cfg.value("samples", p.count);
    p.radius    = cfg.value("sample_radius", p.radius);
    p.tolerance = cfg.value("tolerance", p.tolerance);
    p.validate();
    eff["seed"]          = p.seed;
    eff["samples"]       = p.count;
    eff["sample_radius"] = p.radius;
    eff["tolerance"]     = p.tolerance;
    return p;
  }

  inline GridSpec window_spec(json const& w, std::size_t cols, std::size_t rows) {
    std::vector<double> v = w.is_string() ? parse_number_list(w.get<std::string>())
                                          : w.get<std::vector<double>>();
    if (v.size() != 4) {
      throw UsageError("a window is re_min,re_max,im_min,im_max");
    }
    return GridSpec::window(v[0], v[1], v[2], v[3], cols, rows);
  }

  inline GridSpec resolve_grid(json const& cfg, json& eff) {
    GridSpec    def  = Fixture::standard_window();
    std::size_t cols = cfg.value("cells", def.cols);
    std::size_t rows = cols;
    cols             = cfg.value("cols", cols);
    rows             = cfg.value("rows", rows);
    GridSpec s = cfg.contains("window") ? window_spec(cfg.at("window"), cols, rows)
                                        : GridSpec::window(-4, 4, -4, 4, cols, rows);
    s.max_iter      = cfg.value("max_iter", def.max_iter);
    s.escape_radius = cfg.value("radius", def.escape_radius);
    s.word_depth    = cfg.value("word_depth", def.word_depth);
    s.validate();
    eff["grid"] = io::spec_to_json(s);
    return s;
  }

  // Hash of the resolved configuration. The output directory and worker
  // count do not affect results and are left out.
  inline std::string config_hash(json const& eff) {
    return io::fnv1a_hex(eff.dump());
  }

  struct Provenance {
    std::string   hash;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<std::string> pgm_comments(std::string const& what) const {
      return {"semidyn " + what, "config_hash " + hash, "seed " + std::to_string(seed)};
    }
  };

  inline json document(std::string const& command, json const& eff, Provenance const& p) {
    return {{"tool", "semidyn"},
            {"command", command},
            {"config_hash", p.hash},
            {"seed", p.seed},
            {"config", eff}};
  }

  inline void emit(Context const& ctx, std::string const& file, json const& doc) {
    io::write_json(ctx.out / file, doc);
    *ctx.report << doc.dump(2) << "\n";
  }

  ////////////////////////////////////////////////////////////////////////
  // commutator
  ////////////////////////////////////////////////////////////////////////

  inline int cmd_commutator(json const& cfg, Context const& ctx) {
    json       eff     = {{"command", "commutator"}};
    auto const subject = resolve_subject(cfg, eff);
    auto const plan    = resolve_plan(cfg, eff);
    Provenance prov{config_hash(eff), plan.seed};

    json tef = json::array();
    for (auto const& m : subject.maps) {
      tef.push_back(is_transcendental(m));
    }
    auto const build = try_build_commutator_table(std::span(subject.maps), plan);
    json       doc   = document("commutator", eff, prov);
    doc["composition_order"] = io::composition_order;
    doc["transcendental"]    = tef;
    doc["complete"]          = build.complete();
    doc["failures"]          = io::pairs_to_json(build.failures);
    json entries             = json::array();
    for (auto const& e : io::table_to_json(build.table)) {
      auto const i = e.at("i").get<std::size_t>() - 1;
      auto const j = e.at("j").get<std::size_t>() - 1;
      if (std::find(build.failures.begin(), build.failures.end(), GeneratorPair{i, j})
          == build.failures.end()) {
        entries.push_back(e);
      }
    }
    doc["table"] = entries;
    emit(ctx, "commutator.json", doc);
    if (!build.complete()) {
      *ctx.log << "no affine commutator for pairs";
      for (auto const& [i, j] : build.failures) {
        *ctx.log << " (" << i + 1 << "," << j + 1 << ")";
      }
      *ctx.log << "\n";
      return exit_code::not_representable;
    }
    return exit_code::ok;
  }

  ////////////////////////////////////////////////////////////////////////
  // verify
  ////////////////////////////////////////////////////////////////////////

  namespace detail {
    struct CheckLog {
      json checks = json::array();
      bool failed = false;

      void add(std::string name, bool holds, double residual, json extra = {}) {
        json c = {{"check", std::move(name)}, {"holds", holds}, {"residual", residual}};
        if (extra.is_object()) {
          c.update(extra);
        }
        checks.push_back(std::move(c));
        failed = failed || !holds;
      }

      void info(std::string name, json value) {
        checks.push_back({{"check", std::move(name)}, {"informational", true}, {"value", std::move(value)}});
      }
    };

    inline char const* identity_name(CommutatorIdentity w) {
      switch (w) {
        case CommutatorIdentity::absorb_right:
          return "absorb_right";
        case CommutatorIdentity::shift_power:
          return "shift_power";
        case CommutatorIdentity::swap_products:
          return "swap_products";
        case CommutatorIdentity::inverse:
          return "inverse";
        case CommutatorIdentity::diagonal:
        default:
          return "diagonal";
      }
    }

    inline CommutatorTable load_table(json const& cfg, std::size_t n, json& eff) {
      auto doc = io::read_json(cfg.at("table").get<std::string>());
      json entries = doc.is_object() ? doc.at("table") : doc;
      eff["table"] = entries;
      return io::table_from_json(entries, n);
    }
  }  // namespace detail

  inline int cmd_verify(json const& cfg, Context const& ctx) {
    json       eff     = {{"command", "verify"}};
    auto const subject = resolve_subject(cfg, eff);
    auto const plan    = resolve_plan(cfg, eff);
    auto const s       = subject.presentation();

    std::optional<CommutatorTable> table;
    std::vector<GeneratorPair>     failures;
    if (cfg.contains("table")) {
      table = detail::load_table(cfg, s.size(), eff);
    } else {
      auto build = try_build_commutator_table(s, plan);
      failures   = build.failures;
      if (build.complete()) {
        table = std::move(build.table);
      }
    }
    std::optional<AffineMap> phi;
    if (cfg.contains("phi")) {
      phi = parse_phi(cfg.at("phi"));
      eff["phi"] = io::affine_to_json(*phi);
    }
    Provenance prov{config_hash(eff), plan.seed};
    json       doc = document("verify", eff, prov);
    if (!table) {
      doc["failures"] = io::pairs_to_json(failures);
      emit(ctx, "verify.json", doc);
      *ctx.log << "presentation is not nearly representable\n";
      return exit_code::not_representable;
    }

    detail::CheckLog log;
    auto const       n = s.size();
    double           diag = 0.0, inv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag = std::max(diag, affine_distance(table->entry(i, i), AffineMap::identity()));
      for (std::size_t j = 0; j < n; ++j) {
        inv = std::max(inv, affine_distance(affine_compose(table->entry(i, j), table->entry(j, i)),
                                            AffineMap::identity()));
      }
    }
    log.add("table_diagonal", diag <= plan.tolerance, diag);
    log.add("table_inverse", inv <= plan.tolerance, inv);

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        json const pair = {{"pair", json::array({i + 1, j + 1})}};
        if (i != j) {
          double const r = commutator_residual(s[i], s[j], table->entry(i, j), plan);
          log.add("table_entry", r <= plan.tolerance, r, pair);
        }
        auto check = [&](CommutatorIdentity which, FunctionExpr const& g, unsigned k, json x) {
          try {
            auto const r = verify_identity(which, s[i], g, k, plan);
            log.add(detail::identity_name(which), r.holds, r.residual, x);
          } catch (MissingCommutator const& e) {
            x["error"] = e.what();
            log.add(detail::identity_name(which), false, 0.0, x);
          }
        };
        for (auto which : {CommutatorIdentity::absorb_right, CommutatorIdentity::shift_power}) {
          for (unsigned k = 1; k <= 3; ++k) {
            json x = pair;
            x["n"] = k;
            check(which, s[j], k, x);
          }
        }
        check(CommutatorIdentity::swap_products, s[j], 1, pair);
        check(CommutatorIdentity::inverse, s[j], 1, pair);
        check(CommutatorIdentity::diagonal, s[i], 1, pair);
      }
    }

    // Conjugation preserves the verdict, and undoing it recovers S.
    AffineMap const conj_by = phi.value_or(subject.phi.value_or(
        n >= 2 ? table->entry(0, 1) : AffineMap::identity()));
    auto const conj      = conjugate_semigroup(s, conj_by);
    bool const preserved = is_nearly_abelian(conj, plan).algebraic;
    log.add("conjugation_verdict", preserved, 0.0, {{"phi", io::affine_to_json(conj_by)}});
    auto const back  = conjugate_semigroup(conj, affine_inverse(conj_by));
    double     worst = 0.0;
    bool       equal = true;
    for (std::size_t i = 0; i < n; ++i) {
      auto const rep = numerically_equal(back[i], s[i], plan);
      equal          = equal && rep.equal();
      worst          = std::max(worst, rep.max_error);
    }
    log.add("double_conjugation", equal, worst);

    // xi resolution inside G.
    try {
      auto const group = group_closure(table->distinct_entries());
      for (std::size_t i = 0; i < n; ++i) {
        json const at = {{"generator", i + 1}, {"phi", io::affine_to_json(conj_by)}};
        if (!group.contains(conj_by)) {
          log.info("resolve_xi", {{"skipped", "phi is not an element of G"}});
          break;
        }
        try {
          auto const xi = resolve_xi(s[i], conj_by, group, plan);
          json       x  = at;
          x["xi"]       = io::affine_to_json(xi);
          log.add("resolve_xi", true, 0.0, x);
        } catch (Error const& e) {
          json x   = at;
          x["error"] = e.what();
          log.add("resolve_xi", false, 0.0, x);
        }
        json v = at;
        v["exists"] = left_resolve_exists(s[i], conj_by, group, plan);
        log.info("left_resolve_exists", v);
      }
    } catch (ClosureOverflow const& e) {
      log.info("resolve_xi", {{"skipped", e.what()}});
    }

    doc["checks"] = log.checks;
    doc["passed"] = !log.failed;
    emit(ctx, "verify.json", doc);
    return log.failed ? exit_code::verify_failed : exit_code::ok;
  }

  ////////////////////////////////////////////////////////////////////////
  // render
  ////////////////////////////////////////////////////////////////////////

  inline int cmd_render(json const& cfg, Context const& ctx) {
    json       eff  = {{"command", "render"}};
    auto const spec = resolve_grid(cfg, eff);
    std::optional<Subject> subject;
    FunctionExpr           single;
    bool const             is_map = cfg.contains("map");
    if (is_map) {
      single     = parse_prefix(cfg.at("map").get<std::string>());
      eff["map"] = to_prefix(single);
    } else {
      subject = resolve_subject(cfg, eff);
    }
    std::uint64_t const seed = cfg.value("seed", SamplePlan{}.seed);
    eff["seed"]              = seed;
    bool const csv           = cfg.value("csv", false);
    Provenance prov{config_hash(eff), seed};

    auto const grid = is_map ? classify_map(single, spec, ctx.exec)
                             : classify_semigroup(subject->presentation(), spec, ctx.exec);
    auto const mask = extract_julia_boundary(grid);

    io::write_pgm(ctx.out / "classification.pgm", spec.cols, spec.rows,
                  io::classification_bytes(grid), prov.pgm_comments("classification"));
    io::write_pgm(ctx.out / "heatmap.pgm", spec.cols, spec.rows, io::heatmap_bytes(grid),
                  prov.pgm_comments("heatmap"));
    io::write_pgm(ctx.out / "julia.pgm", spec.cols, spec.rows, io::mask_bytes(mask),
                  prov.pgm_comments("julia boundary"));
    json files = {"classification.pgm", "heatmap.pgm", "julia.pgm"};
    if (csv) {
      io::write_file(ctx.out / "cells.csv", "# config_hash " + prov.hash + "\n# seed "
                                                + std::to_string(seed) + "\n"
                                                + io::csv_data(grid));
      files.push_back("cells.csv");
    }
    json doc             = document("render", eff, prov);
    doc["summary"]       = io::grid_summary(grid);
    doc["julia_cells"]   = mask.count();
    doc["files"]         = files;
    emit(ctx, "render.json", doc);
    return exit_code::ok;
  }

  ////////////////////////////////////////////////////////////////////////
  // transport
  ////////////////////////////////////////////////////////////////////////

  inline int cmd_transport(json const& cfg, Context const& ctx) {
    json       eff     = {{"command", "transport"}};
    auto const subject = resolve_subject(cfg, eff);
    auto const plan    = resolve_plan(cfg, eff);
    auto const spec    = resolve_grid(cfg, eff);
    auto const s       = subject.presentation();
    GridSpec   target  = spec;
    if (cfg.contains("target_window")) {
      auto const w        = window_spec(cfg.at("target_window"), spec.cols, spec.rows);
      target.center       = w.center;
      target.width        = w.width;
      target.height       = w.height;
      eff["target_grid"]  = io::spec_to_json(target);
    }
    double const threshold = cfg.value("threshold", default_threshold);
    eff["threshold"]       = threshold;

    AffineMap phi = AffineMap::identity();
    if (cfg.contains("phi")) {
      phi = parse_phi(cfg.at("phi"));
    } else if (subject.phi) {
      phi = *subject.phi;
    } else if (s.size() >= 2) {
      phi = find_affine_commutator(s[0], s[1], plan);
    }
    eff["phi"] = io::affine_to_json(phi);
    Provenance prov{config_hash(eff), plan.seed};

    auto const rep = transport_check(s, phi, spec, target, ctx.exec);
    io::write_pgm(ctx.out / "transport_diff.pgm", target.cols, target.rows,
                  io::mask_bytes(rep.escaping.disagreement), prov.pgm_comments("escaping disagreement"));
    io::write_pgm(ctx.out / "transport_direct.pgm", target.cols, target.rows,
                  io::classification_bytes(rep.direct), prov.pgm_comments("conjugate classification"));
    io::write_pgm(ctx.out / "transport_mapped.pgm", target.cols, target.rows,
                  io::classification_bytes(rep.mapped), prov.pgm_comments("transported classification"));

    json doc        = document("transport", eff, prov);
    doc["escaping"] = io::comparison_to_json(rep.escaping);
    doc["julia"]    = io::comparison_to_json(rep.julia);
    doc["fatou"]    = io::comparison_to_json(rep.fatou);
    doc["min_ratio"] = rep.min_ratio();
    bool const pass = rep.min_ratio() >= threshold;
    doc["passed"]   = pass;
    doc["files"]    = {"transport_diff.pgm", "transport_direct.pgm", "transport_mapped.pgm"};
    emit(ctx, "transport.json", doc);
    return pass ? exit_code::ok : exit_code::transport_below;
  }

  ////////////////////////////////////////////////////////////////////////
  // normal-form
  ////////////////////////////////////////////////////////////////////////

  inline int cmd_normal_form(json const& cfg, Context const& ctx) {
    json       eff     = {{"command", "normal-form"}};
    auto const subject = resolve_subject(cfg, eff);
    auto const plan    = resolve_plan(cfg, eff);
    auto const s       = subject.presentation();

    std::vector<Word> words;
    for (auto const& w : cfg.value("words", json::array())) {
      words.push_back(Word::from_one_based(w.get<std::vector<std::size_t>>()));
    }
    if (cfg.contains("random")) {
      auto const count   = cfg.at("random").get<std::size_t>();
      auto const max_len = cfg.value("max_length", std::size_t{6});
      std::mt19937_64 gen(plan.seed);
      for (std::size_t k = 0; k < count; ++k) {
        words.push_back(random_word(gen, s.size(), max_len));
      }
      eff["random"]     = count;
      eff["max_length"] = max_len;
    }
    if (words.empty()) {
      throw UsageError("normal-form needs --word or --random");
    }
    json listed = json::array();
    for (auto const& w : words) {
      w.check_against(s);
      listed.push_back(w.one_based());
    }
    eff["words"] = listed;
    Provenance prov{config_hash(eff), plan.seed};
    json       doc = document("normal-form", eff, prov);

    auto const ctx_rw = RewriteContext::build(s, plan);
    json       out    = json::array();
    bool       failed = false;
    double     worst  = 0.0;
    for (auto const& w : words) {
      try {
        auto const nf = normal_form(w, s, ctx_rw.table, ctx_rw.group, plan);
        worst         = std::max(worst, nf.residual);
        out.push_back(io::normal_form_to_json(w, nf));
      } catch (VerificationFailed const& e) {
        failed = true;
        out.push_back({{"word", w.one_based()}, {"error", e.what()}, {"residual", e.residual()}});
      } catch (NoXi const& e) {
        failed = true;
        out.push_back({{"word", w.one_based()}, {"error", e.what()}});
      } catch (AmbiguousXi const& e) {
        failed = true;
        out.push_back({{"word", w.one_based()}, {"error", e.what()}});
      }
    }
    doc["group_size"]   = ctx_rw.group.size();
    doc["results"]      = out;
    doc["max_residual"] = worst;
    doc["passed"]       = !failed;
    emit(ctx, "normal_form.json", doc);
    return failed ? exit_code::normal_form_failed : exit_code::ok;
  }

  ////////////////////////////////////////////////////////////////////////
  // Argument parsing
  ////////////////////////////////////////////////////////////////////////

  namespace detail {
    enum class Kind { text, integer, real, flag, list, words, lambda };

    struct Flag {
      char const* name;
      char const* key;
      Kind        kind;
      char const* help;
    };

    struct Bound {
      Flag                     flag{};
      CLI::Option*             option = nullptr;
      std::string              text;
      std::vector<std::string> list;
      bool                     set = false;
    };

    inline std::vector<std::size_t> parse_word(std::string const& text) {
      std::vector<std::size_t> letters;
      for (double v : parse_number_list(text)) {
        if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) {
          throw UsageError("word letters are positive integers: '" + text + "'");
        }
        letters.push_back(static_cast<std::size_t>(v));
      }
      return letters;
    }

    inline void apply(Bound const& b, json& cfg) {
      if (b.flag.kind == Kind::flag) {
        if (b.set) {
          cfg[b.flag.key] = true;
        }
        return;
      }
      if (b.option->count() == 0) {
        return;
      }
      switch (b.flag.kind) {
        case Kind::text:
        case Kind::lambda:
          cfg[b.flag.key] = b.text;
          break;
        case Kind::integer:
          cfg[b.flag.key] = parse_u64(b.text);
          break;
        case Kind::real:
          cfg[b.flag.key] = parse_double(b.text);
          break;
        case Kind::list:
          cfg[b.flag.key] = b.list;
          break;
        case Kind::words: {
          json w = json::array();
          for (auto const& t : b.list) {
            w.push_back(parse_word(t));
          }
          cfg[b.flag.key] = w;
          break;
        }
        case Kind::flag:
          break;
      }
    }

    inline std::vector<Flag> const& common_flags() {
      static std::vector<Flag> const f = {
          {"--seed", "seed", Kind::integer, "sample and random word seed"},
          {"--out", "out", Kind::text, "output directory"},
          {"--tolerance", "tolerance", Kind::real, "relative equality tolerance"},
          {"--samples", "samples", Kind::integer, "number of sample points"},
          {"--sample-radius", "sample_radius", Kind::real, "radius of the sample disk"},
          {"--fixture", "fixture", Kind::text, "built-in presentation"},
          {"--lambda", "lambda", Kind::lambda, "fixture constant (x, re,im or re+imi)"},
          {"--gen", "generators", Kind::list, "generator in prefix notation (repeatable)"},
      };
      return f;
    }

    inline std::vector<Flag> const& grid_flags() {
      static std::vector<Flag> const f = {
          {"--window", "window", Kind::text, "re_min,re_max,im_min,im_max"},
          {"--cells", "cells", Kind::integer, "cells per side"},
          {"--cols", "cols", Kind::integer, "grid columns"},
          {"--rows", "rows", Kind::integer, "grid rows"},
          {"--max-iter", "max_iter", Kind::integer, "iteration cap"},
          {"--radius", "radius", Kind::real, "escape radius"},
          {"--word-depth", "word_depth", Kind::integer, "longest word iterated"},
      };
      return f;
    }

    inline std::vector<Flag> command_flags(std::string const& cmd) {
      std::vector<Flag> f = common_flags();
      auto add = [&f](std::vector<Flag> const& more) { f.insert(f.end(), more.begin(), more.end()); };
      if (cmd == "verify") {
        add({{"--table", "table", Kind::text, "commutator table JSON to check"},
             {"--phi", "phi", Kind::text, "conjugating map, affine(a, b)"}});
      } else if (cmd == "render") {
        add(grid_flags());
        add({{"--map", "map", Kind::text, "render a single map instead of the semigroup"},
             {"--csv", "csv", Kind::flag, "also write cells.csv"}});
      } else if (cmd == "transport") {
        add(grid_flags());
        add({{"--phi", "phi", Kind::text, "conjugating map, affine(a, b)"},
             {"--target-window", "target_window", Kind::text, "window of the comparison grid"},
             {"--threshold", "threshold", Kind::real, "required agreement ratio"}});
      } else if (cmd == "normal-form") {
        add({{"--word", "words", Kind::words, "word as 1-based letters, e.g. 2,1,2 (repeatable)"},
             {"--random", "random", Kind::integer, "number of random words"},
             {"--max-length", "max_length", Kind::integer, "longest random word"}});
      }
      return f;
    }
  }  // namespace detail

  inline int run_command(std::string const& cmd, json const& cfg, Context const& ctx) {
    if (cmd == "commutator") {
      return cmd_commutator(cfg, ctx);
    }
    if (cmd == "verify") {
      return cmd_verify(cfg, ctx);
    }
    if (cmd == "render") {
      return cmd_render(cfg, ctx);
    }
    if (cmd == "transport") {
      return cmd_transport(cfg, ctx);
    }
    if (cmd == "normal-form") {
      return cmd_normal_form(cfg, ctx);
    }
    throw UsageError("unknown command '" + cmd + "'");
  }

  // Runs a command on an already merged configuration, mapping library
  // errors to exit codes.
  inline int execute(std::string const& cmd, json cfg, Context ctx) {
    try {
      check_keys(cfg);
      if (cfg.contains("out")) {
        ctx.out = cfg.at("out").get<std::string>();
        cfg.erase("out");
      }
      return run_command(cmd, cfg, ctx);
    } catch (NotNearlyRepresentable const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::not_representable;
    } catch (WordBudgetExceeded const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::word_budget;
    } catch (ClosureOverflow const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::normal_form_failed;
    } catch (VerificationFailed const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::normal_form_failed;
    } catch (NoXi const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::normal_form_failed;
    } catch (SpecMismatch const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::usage;
    } catch (UsageError const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::usage;
    } catch (InvalidArgument const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::usage;
    } catch (ParseError const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::usage;
    } catch (DegenerateAffine const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::usage;
    } catch (json::exception const& e) {
      *ctx.log << "semidyn: bad configuration value: " << e.what() << "\n";
      return exit_code::usage;
    } catch (std::exception const& e) {
      *ctx.log << "semidyn: " << e.what() << "\n";
      return exit_code::failure;
    }
  }

  inline int run(int argc, char const* const* argv,
                 std::ostream& report = std::cout,
                 std::ostream& log    = std::cerr) {
    CLI::App app{"Affine commutators, normal forms and escape-time grids of "
                 "transcendental semigroups"};
    app.require_subcommand(1);

    std::map<std::string, std::vector<detail::Bound>> bound;
    std::map<std::string, std::string>                config_path, presentation_path;
    std::map<std::string, CLI::App*>                  subs;
    for (auto const* cmd : {"commutator", "verify", "render", "transport", "normal-form"}) {
      auto* sc = app.add_subcommand(cmd);
      subs[cmd] = sc;
      sc->add_option("--config", config_path[cmd], "JSON configuration file");
      sc->add_option("--presentation", presentation_path[cmd], "JSON file with \"generators\"");
      auto& list = bound[cmd];
      for (auto const& f : detail::command_flags(cmd)) {
        detail::Bound b;
        b.flag = f;
        list.push_back(std::move(b));
      }
      for (auto& b : list) {
        if (b.flag.kind == detail::Kind::flag) {
          b.option = sc->add_flag(b.flag.name, b.set, b.flag.help);
        } else if (b.flag.kind == detail::Kind::list || b.flag.kind == detail::Kind::words) {
          b.option = sc->add_option(b.flag.name, b.list, b.flag.help);
        } else {
          b.option = sc->add_option(b.flag.name, b.text, b.flag.help);
        }
      }
    }

    try {
      app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
      int const rc = app.exit(e, report, log);
      return rc == 0 ? exit_code::ok : exit_code::usage;
    }

    std::string cmd;
    for (auto const& [name, sc] : subs) {
      if (sc->parsed()) {
        cmd = name;
      }
    }

    Context ctx;
    ctx.report = &report;
    ctx.log    = &log;
    json cfg   = json::object();
    try {
      ctx.exec = execution_from_env();
      if (!config_path[cmd].empty()) {
        cfg = io::read_json(config_path[cmd]);
        check_keys(cfg);
      }
      if (!presentation_path[cmd].empty()) {
        auto const p      = io::read_json(presentation_path[cmd]);
        cfg["generators"] = p.at("generators");
      }
      for (auto const& b : bound[cmd]) {
        detail::apply(b, cfg);
        // A subject named on the command line replaces the other kind.
        if (b.option && b.option->count() > 0) {
          if (std::string_view(b.flag.key) == "fixture" && !presentation_path[cmd].size()) {
            bool const gens_flag = std::any_of(bound[cmd].begin(), bound[cmd].end(), [](auto const& x) {
              return std::string_view(x.flag.key) == "generators" && x.option->count() > 0;
            });
            if (!gens_flag) {
              cfg.erase("generators");
            }
          }
        }
      }
    } catch (std::exception const& e) {
      log << "semidyn: " << e.what() << "\n";
      return exit_code::usage;
    }
    return execute(cmd, std::move(cfg), ctx);
  }

}  // namespace semidyn::cli

#endif  // SEMIDYN_CLI_HPP_
