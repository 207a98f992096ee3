#ifndef SEMIDYN_GRID_HPP_
#define SEMIDYN_GRID_HPP_

// Escape-time classification of complex-plane rasters.
//
// A cell is Escaping(k) when its orbit first leaves the escape disk (or
// overflows) at step k, Bounded when the orbit provably recurs (returns
// within cycle_tolerance of one of the last cycle_window iterates) and
// Undecided otherwise. The Julia set is approximated by the boundary of the
// escaping cells and the Fatou set by the complement of that boundary.
//
// Rows are split into bands handed to worker threads; every cell is computed
// independently and written to its own slot, so the output does not depend
// on the number of workers or the order bands are picked up in.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "semidyn/affine.hpp"
#include "semidyn/commutator.hpp"
#include "semidyn/complex.hpp"
#include "semidyn/error.hpp"
#include "semidyn/expr.hpp"
#include "semidyn/word.hpp"

namespace semidyn {

  inline constexpr std::size_t cycle_window    = 16;
  inline constexpr double      cycle_tolerance = 1e-6;
  inline constexpr std::size_t default_word_budget = 4096;

  struct GridSpec {
    Complex     center        = {0.0, 0.0};
    double      width         = 4.0;
    double      height        = 4.0;
    std::size_t cols          = 512;
    std::size_t rows          = 512;
    unsigned    max_iter      = 100;
    double      escape_radius = 50.0;
    unsigned    word_depth    = 2;

    // [re_min, re_max] x [im_min, im_max].
    static GridSpec window(double re_min,
                           double re_max,
                           double im_min,
                           double im_max,
                           std::size_t cols,
                           std::size_t rows) {
      GridSpec s;
      s.center = {(re_min + re_max) / 2.0, (im_min + im_max) / 2.0};
      s.width  = re_max - re_min;
      s.height = im_max - im_min;
      s.cols   = cols;
      s.rows   = rows;
      return s;
    }

    void validate() const {
      if (cols < 2 || rows < 2) {
        throw InvalidArgument("grid needs at least 2 rows and 2 columns");
      }
      if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width)
          || !std::isfinite(height) || !is_finite(center)) {
        throw InvalidArgument("grid extent must be positive and finite");
      }
      if (!(escape_radius > 1.0)) {
        throw InvalidArgument("escape radius must exceed 1");
      }
      if (max_iter < 1) {
        throw InvalidArgument("max_iter must be at least 1");
      }
      if (word_depth < 1) {
        throw InvalidArgument("word depth must be at least 1");
      }
    }

    [[nodiscard]] std::size_t cell_count() const noexcept {
      return cols * rows;
    }

    // Row 0 is the top (largest imaginary part). The offsets are formed from
    // odd integers so mirrored cells of a window centred at 0 have exactly
    // negated coordinates.
    [[nodiscard]] Complex cell_center(std::size_t row, std::size_t col) const {
      double const dx
          = static_cast<double>(2 * static_cast<std::int64_t>(col) + 1
                                - static_cast<std::int64_t>(cols))
            / static_cast<double>(2 * cols);
      double const dy
          = static_cast<double>(static_cast<std::int64_t>(rows) - 1
                                - 2 * static_cast<std::int64_t>(row))
            / static_cast<double>(2 * rows);
      return {center.re + width * dx, center.im + height * dy};
    }

    // The cell containing w, if w lies in the window.
    [[nodiscard]] std::optional<std::pair<std::size_t, std::size_t>>
    locate(Complex w) const {
      double const fx = ((w.re - center.re) / width + 0.5)
                        * static_cast<double>(cols);
      double const fy = (0.5 - (w.im - center.im) / height)
                        * static_cast<double>(rows);
      if (!(fx >= 0.0) || !(fy >= 0.0) || fx >= static_cast<double>(cols)
          || fy >= static_cast<double>(rows)) {
        return std::nullopt;
      }
      return std::make_pair(static_cast<std::size_t>(fy),
                            static_cast<std::size_t>(fx));
    }

    [[nodiscard]] bool same_geometry(GridSpec const& o) const noexcept {
      return center == o.center && width == o.width && height == o.height
             && cols == o.cols && rows == o.rows;
    }
  };

  struct CellStatus {
    enum class Kind : std::uint8_t { escaping, bounded, undecided };

    Kind          kind      = Kind::undecided;
    std::uint32_t iteration = 0;  // first escape step, escaping only

    static constexpr CellStatus escaping(std::uint32_t k) {
      return {Kind::escaping, k};
    }
    static constexpr CellStatus bounded() {
      return {Kind::bounded, 0};
    }
    static constexpr CellStatus undecided() {
      return {Kind::undecided, 0};
    }

    [[nodiscard]] constexpr bool is_escaping() const noexcept {
      return kind == Kind::escaping;
    }
    [[nodiscard]] constexpr bool is_decided() const noexcept {
      return kind != Kind::undecided;
    }

    friend constexpr bool operator==(CellStatus const&,
                                     CellStatus const&) = default;
  };

  inline char const* to_string(CellStatus::Kind k) {
    switch (k) {
      case CellStatus::Kind::escaping:
        return "escaping";
      case CellStatus::Kind::bounded:
        return "bounded";
      case CellStatus::Kind::undecided:
      default:
        return "undecided";
    }
  }

  struct SubjectDescriptor {
    std::string              kind;         // "map", "semigroup", "transported"
    std::vector<std::string> expressions;  // prefix notation
    std::vector<std::string> words;        // e.g. "[2,1]"
    std::string              note;
  };

  struct ClassificationGrid {
    GridSpec                spec;
    std::vector<CellStatus> cells;  // row-major
    SubjectDescriptor       subject;

    [[nodiscard]] CellStatus const& at(std::size_t row, std::size_t col) const {
      return cells[row * spec.cols + col];
    }
    [[nodiscard]] std::size_t count(CellStatus::Kind k) const {
      return static_cast<std::size_t>(
          std::count_if(cells.begin(), cells.end(), [k](CellStatus const& c) {
            return c.kind == k;
          }));
    }
  };

  struct CellMask {
    std::size_t               cols = 0;
    std::size_t               rows = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1, row-major

    CellMask() = default;
    CellMask(std::size_t c, std::size_t r, std::uint8_t fill = 0)
        : cols(c), rows(r), bits(c * r, fill) {}

    [[nodiscard]] bool at(std::size_t row, std::size_t col) const {
      return bits[row * cols + col] != 0;
    }
    void set(std::size_t row, std::size_t col, bool v) {
      bits[row * cols + col] = v ? 1 : 0;
    }
    [[nodiscard]] std::size_t count() const {
      return static_cast<std::size_t>(
          std::count(bits.begin(), bits.end(), std::uint8_t{1}));
    }
    [[nodiscard]] CellMask complement() const {
      CellMask out = *this;
      for (auto& b : out.bits) {
        b = b ? 0 : 1;
      }
      return out;
    }

    friend bool operator==(CellMask const&, CellMask const&) = default;
  };

  class SpecMismatch : public Error {
   public:
    SpecMismatch() : Error("grids do not share the same raster geometry") {}
  };

  class WordBudgetExceeded : public Error {
   public:
    WordBudgetExceeded(std::size_t generators, unsigned depth, std::size_t budget)
        : Error(std::to_string(generators) + "^" + std::to_string(depth)
                + " words exceed the budget of " + std::to_string(budget)) {}
  };

  ////////////////////////////////////////////////////////////////////////
  // Execution
  ////////////////////////////////////////////////////////////////////////

  struct ExecutionOptions {
    unsigned    threads   = 0;  // 0 = hardware concurrency
    std::size_t band_rows = 4;
  };

  inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) {
      return requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
  }

  // Calls body(row) for every row; bands of rows are pulled from a shared
  // counter by the workers.
  template <typename Body>
  void for_each_row(std::size_t             rows,
                    ExecutionOptions const& opts,
                    Body const&             body) {
    std::size_t const band    = std::max<std::size_t>(1, opts.band_rows);
    std::size_t const bands   = (rows + band - 1) / band;
    unsigned const    workers = static_cast<unsigned>(
        std::min<std::size_t>(resolve_threads(opts.threads), bands));
    std::atomic<std::size_t> next{0};
    auto                     run = [&] {
      for (std::size_t b; (b = next.fetch_add(1)) < bands;) {
        std::size_t const end = std::min(rows, (b + 1) * band);
        for (std::size_t r = b * band; r < end; ++r) {
          body(r);
        }
      }
    };
    if (workers <= 1) {
      run();
      return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) {
      pool.emplace_back(run);
    }
    run();
  }

  ////////////////////////////////////////////////////////////////////////
  // Classification
  ////////////////////////////////////////////////////////////////////////

  namespace detail {

    // Orbit of z0 under repeated application of map.
    template <typename Map>
    CellStatus iterate_point(Map const& map, Complex z0, GridSpec const& spec) {
      double const r2 = spec.escape_radius * spec.escape_radius;
      if (norm(z0) > r2) {
        return CellStatus::escaping(0);
      }
      std::array<Complex, cycle_window> recent;
      std::size_t                       filled = 0, head = 0;
      recent[head++] = z0;
      filled         = 1;
      double const tol2 = cycle_tolerance * cycle_tolerance;
      Complex      z    = z0;
      for (unsigned k = 1; k <= spec.max_iter; ++k) {
        auto const next = map(z);
        if (!next) {
          return CellStatus::escaping(k);
        }
        z = *next;
        if (norm(z) > r2) {
          return CellStatus::escaping(k);
        }
        for (std::size_t m = 0; m < filled; ++m) {
          if (norm(z - recent[m]) < tol2) {
            return CellStatus::bounded();
          }
        }
        recent[head] = z;
        head         = (head + 1) % cycle_window;
        filled       = std::min(filled + 1, cycle_window);
      }
      return CellStatus::undecided();
    }

    // Escaping only if every word escapes; bounded if any word is.
    inline CellStatus classify_point(std::span<CompiledExpr const> words,
                                     Complex                       z0,
                                     GridSpec const&               spec) {
      std::uint32_t slowest    = 0;
      bool          all_escape = true;
      for (auto const& w : words) {
        CellStatus const st = iterate_point(w, z0, spec);
        if (st.kind == CellStatus::Kind::bounded) {
          return st;
        }
        if (st.is_escaping()) {
          slowest = std::max(slowest, st.iteration);
        } else {
          all_escape = false;
        }
      }
      return all_escape ? CellStatus::escaping(slowest)
                        : CellStatus::undecided();
    }

    inline std::string word_label(Word const& w) {
      std::string s = "[";
      for (std::size_t k = 0; k < w.size(); ++k) {
        s += (k ? "," : "") + std::to_string(w.letters()[k] + 1);
      }
      return s + "]";
    }

    inline ClassificationGrid classify_words(std::vector<CompiledExpr> const& words,
                                             GridSpec const&         spec,
                                             ExecutionOptions const& opts) {
      spec.validate();
      ClassificationGrid g;
      g.spec = spec;
      g.cells.resize(spec.cell_count());
      for_each_row(spec.rows, opts, [&](std::size_t r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
          g.cells[r * spec.cols + c]
              = classify_point(words, spec.cell_center(r, c), spec);
        }
      });
      return g;
    }

  }  // namespace detail

  inline ClassificationGrid classify_map(FunctionExpr const&     f,
                                         GridSpec const&         spec,
                                         ExecutionOptions const& opts = {}) {
    std::vector<CompiledExpr> words{CompiledExpr(f)};
    auto g    = detail::classify_words(words, spec, opts);
    g.subject = {"map", {to_prefix(f)}, {}, {}};
    return g;
  }

  // All words of length 1..depth, shortest first, lexicographic within a
  // length.
  inline std::vector<Word> enumerate_words(std::size_t generators,
                                           unsigned    depth,
                                           std::size_t budget
                                           = default_word_budget) {
    double const n_pow = std::pow(static_cast<double>(generators), depth);
    if (n_pow > static_cast<double>(budget)) {
      throw WordBudgetExceeded(generators, depth, budget);
    }
    std::vector<Word> out;
    for (unsigned len = 1; len <= depth; ++len) {
      std::vector<std::size_t> letters(len, 0);
      while (true) {
        out.emplace_back(letters);
        std::size_t k = len;
        while (k > 0 && ++letters[k - 1] == generators) {
          letters[k - 1] = 0;
          --k;
        }
        if (k == 0) {
          break;
        }
      }
    }
    return out;
  }

  inline ClassificationGrid classify_semigroup(SemigroupPresentation const& s,
                                               GridSpec const&         spec,
                                               ExecutionOptions const& opts = {},
                                               std::size_t budget
                                               = default_word_budget) {
    spec.validate();
    auto const                words = enumerate_words(s.size(), spec.word_depth, budget);
    std::vector<CompiledExpr> compiled;
    compiled.reserve(words.size());
    for (auto const& w : words) {
      compiled.emplace_back(word_expr(w, s));
    }
    auto g = detail::classify_words(compiled, spec, opts);
    g.subject.kind = "semigroup";
    for (auto const& f : s.generators()) {
      g.subject.expressions.push_back(to_prefix(f));
    }
    for (auto const& w : words) {
      g.subject.words.push_back(detail::word_label(w));
    }
    g.subject.note = "words truncated at length " + std::to_string(spec.word_depth);
    return g;
  }

  ////////////////////////////////////////////////////////////////////////
  // Boundary, transport, comparison
  ////////////////////////////////////////////////////////////////////////

  // Cells whose closed 4-neighbourhood holds both escaping and non-escaping
  // cells.
  inline CellMask extract_julia_boundary(ClassificationGrid const& g) {
    auto const& s = g.spec;
    CellMask    m(s.cols, s.rows);
    for (std::size_t r = 0; r < s.rows; ++r) {
      for (std::size_t c = 0; c < s.cols; ++c) {
        bool const self = g.at(r, c).is_escaping();
        bool       mixed = false;
        auto       probe = [&](std::size_t rr, std::size_t cc) {
          mixed = mixed || g.at(rr, cc).is_escaping() != self;
        };
        if (r > 0) probe(r - 1, c);
        if (r + 1 < s.rows) probe(r + 1, c);
        if (c > 0) probe(r, c - 1);
        if (c + 1 < s.cols) probe(r, c + 1);
        m.set(r, c, mixed);
      }
    }
    return m;
  }

  // Status at target cell w is the source status at phi^-1(w).
  inline ClassificationGrid map_classification(ClassificationGrid const& src,
                                               AffineMap const&          phi,
                                               GridSpec const&           target) {
    target.validate();
    AffineMap const    inv = affine_inverse(phi);
    ClassificationGrid out;
    out.spec = target;
    out.cells.assign(target.cell_count(), CellStatus::undecided());
    for (std::size_t r = 0; r < target.rows; ++r) {
      for (std::size_t c = 0; c < target.cols; ++c) {
        if (auto cell = src.spec.locate(inv(target.cell_center(r, c)))) {
          out.cells[r * target.cols + c] = src.at(cell->first, cell->second);
        }
      }
    }
    out.subject      = src.subject;
    out.subject.kind = "transported";
    out.subject.note = "image under " + to_string(phi) + " of " + src.subject.kind;
    return out;
  }

  struct MappedMask {
    CellMask values;
    CellMask valid;  // target cells whose preimage lies in the source window
  };

  inline MappedMask map_mask(CellMask const&  src,
                             GridSpec const&  src_spec,
                             AffineMap const& phi,
                             GridSpec const&  target) {
    AffineMap const inv = affine_inverse(phi);
    MappedMask      out{CellMask(target.cols, target.rows),
                   CellMask(target.cols, target.rows)};
    for (std::size_t r = 0; r < target.rows; ++r) {
      for (std::size_t c = 0; c < target.cols; ++c) {
        if (auto cell = src_spec.locate(inv(target.cell_center(r, c)))) {
          out.valid.set(r, c, true);
          out.values.set(r, c, src.at(cell->first, cell->second));
        }
      }
    }
    return out;
  }

  // Cells within Chebyshev distance `radius` of a set cell.
  inline CellMask dilate(CellMask const& m, std::size_t radius) {
    if (radius == 0) {
      return m;
    }
    CellMask out(m.cols, m.rows);
    auto const rad = static_cast<std::ptrdiff_t>(radius);
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) {
        if (!m.at(r, c)) {
          continue;
        }
        for (std::ptrdiff_t dr = -rad; dr <= rad; ++dr) {
          for (std::ptrdiff_t dc = -rad; dc <= rad; ++dc) {
            auto const rr = static_cast<std::ptrdiff_t>(r) + dr;
            auto const cc = static_cast<std::ptrdiff_t>(c) + dc;
            if (rr >= 0 && cc >= 0 && rr < static_cast<std::ptrdiff_t>(m.rows)
                && cc < static_cast<std::ptrdiff_t>(m.cols)) {
              out.set(static_cast<std::size_t>(rr),
                      static_cast<std::size_t>(cc),
                      true);
            }
          }
        }
      }
    }
    return out;
  }

  struct ComparisonOptions {
    bool ignore_undecided = true;
    // Width of the boundary band excluded from (or, for masks, tolerated in)
    // the comparison. 1 excludes the boundary cells themselves, which already
    // straddle the escaping edge on both sides.
    std::size_t band = 1;
  };

  struct ComparisonReport {
    double      ratio     = 0.0;
    std::size_t compared  = 0;
    std::size_t agreeing  = 0;
    bool        indeterminate = true;  // nothing was comparable
    CellMask    disagreement;
  };

  namespace detail {
    inline void finish(ComparisonReport& rep) {
      rep.indeterminate = rep.compared == 0;
      rep.ratio         = rep.compared == 0
                              ? 0.0
                              : static_cast<double>(rep.agreeing)
                                    / static_cast<double>(rep.compared);
    }
  }  // namespace detail

  inline ComparisonReport compare_classifications(ClassificationGrid const& ga,
                                                  ClassificationGrid const& gb,
                                                  ComparisonOptions const& opts
                                                  = {}) {
    if (!ga.spec.same_geometry(gb.spec) || ga.cells.size() != gb.cells.size()) {
      throw SpecMismatch();
    }
    auto const& s = ga.spec;
    CellMask    ignore(s.cols, s.rows);
    if (opts.band > 0) {
      CellMask edges = extract_julia_boundary(ga);
      auto     eb    = extract_julia_boundary(gb);
      for (std::size_t k = 0; k < edges.bits.size(); ++k) {
        edges.bits[k] |= eb.bits[k];
      }
      ignore = dilate(edges, opts.band - 1);
    }
    ComparisonReport rep;
    rep.disagreement = CellMask(s.cols, s.rows);
    for (std::size_t k = 0; k < ga.cells.size(); ++k) {
      auto const& a = ga.cells[k];
      auto const& b = gb.cells[k];
      if (ignore.bits[k]
          || (opts.ignore_undecided && (!a.is_decided() || !b.is_decided()))) {
        continue;
      }
      ++rep.compared;
      if (a.kind == b.kind) {
        ++rep.agreeing;
      } else {
        rep.disagreement.bits[k] = 1;
      }
    }
    detail::finish(rep);
    return rep;
  }

  // Compares two masks over the valid cells. A cell whose value differs is
  // still counted as agreeing when the other mask shows the same value within
  // `band` cells.
  inline ComparisonReport compare_masks(CellMask const& a,
                                        CellMask const& b,
                                        CellMask const& valid,
                                        std::size_t     band = 1) {
    if (a.cols != b.cols || a.rows != b.rows || a.cols != valid.cols
        || a.rows != valid.rows) {
      throw SpecMismatch();
    }
    auto const near_value
        = [&](CellMask const& m, std::size_t r, std::size_t c, bool v) {
            auto const rad = static_cast<std::ptrdiff_t>(band);
            for (std::ptrdiff_t dr = -rad; dr <= rad; ++dr) {
              for (std::ptrdiff_t dc = -rad; dc <= rad; ++dc) {
                auto const rr = static_cast<std::ptrdiff_t>(r) + dr;
                auto const cc = static_cast<std::ptrdiff_t>(c) + dc;
                if (rr >= 0 && cc >= 0
                    && rr < static_cast<std::ptrdiff_t>(m.rows)
                    && cc < static_cast<std::ptrdiff_t>(m.cols)
                    && valid.at(static_cast<std::size_t>(rr),
                                static_cast<std::size_t>(cc))
                    && m.at(static_cast<std::size_t>(rr),
                            static_cast<std::size_t>(cc))
                           == v) {
                  return true;
                }
              }
            }
            return false;
          };
    ComparisonReport rep;
    rep.disagreement = CellMask(a.cols, a.rows);
    for (std::size_t r = 0; r < a.rows; ++r) {
      for (std::size_t c = 0; c < a.cols; ++c) {
        if (!valid.at(r, c)) {
          continue;
        }
        ++rep.compared;
        bool const va = a.at(r, c), vb = b.at(r, c);
        if (va == vb || (band > 0 && near_value(b, r, c, va)
                         && near_value(a, r, c, vb))) {
          ++rep.agreeing;
        } else {
          rep.disagreement.set(r, c, true);
        }
      }
    }
    detail::finish(rep);
    return rep;
  }

  struct FatouInvarianceReport {
    ComparisonReport comparison;
    std::size_t      fatou_cells = 0;
  };

  // phi(F(S)) = F(S) at grid level: the Fatou approximation (complement of
  // the boundary mask) transported by phi against itself.
  inline FatouInvarianceReport check_fatou_invariance(
      SemigroupPresentation const& s,
      AffineMap const&             phi,
      GridSpec const&              spec,
      ExecutionOptions const&      exec = {},
      std::size_t                  band = 1) {
    auto const grid   = classify_semigroup(s, spec, exec);
    auto const fatou  = extract_julia_boundary(grid).complement();
    auto const mapped = map_mask(fatou, spec, phi, spec);
    FatouInvarianceReport rep;
    rep.fatou_cells = fatou.count();
    rep.comparison  = compare_masks(mapped.values, fatou, mapped.valid, band);
    return rep;
  }

  ////////////////////////////////////////////////////////////////////////
  // Transport of I, J and F under conjugation
  ////////////////////////////////////////////////////////////////////////

  struct TransportReport {
    ComparisonReport   escaping;  // phi(I(S)) vs I(S')
    ComparisonReport   julia;     // phi(J(S)) vs J(S')
    ComparisonReport   fatou;     // phi(F(S)) vs F(S')
    ClassificationGrid source;
    ClassificationGrid mapped;
    ClassificationGrid direct;

    [[nodiscard]] double min_ratio() const noexcept {
      return std::min({escaping.ratio, julia.ratio, fatou.ratio});
    }
  };

  // Computes the grids of S and of S' = phi S phi^-1 on `spec`, transports
  // the former by phi onto `target` and compares with the latter.
  inline TransportReport transport_check(SemigroupPresentation const& s,
                                         AffineMap const&             phi,
                                         GridSpec const&              spec,
                                         GridSpec const&              target,
                                         ExecutionOptions const&      exec = {},
                                         ComparisonOptions const& cmp = {}) {
    TransportReport rep;
    auto const      conj = conjugate_semigroup(s, phi);
    rep.source           = classify_semigroup(s, spec, exec);
    rep.direct           = classify_semigroup(conj, spec, exec);
    rep.mapped           = map_classification(rep.source, phi, target);
    rep.escaping         = compare_classifications(rep.mapped, rep.direct, cmp);

    auto const src_julia = extract_julia_boundary(rep.source);
    auto const moved     = map_mask(src_julia, spec, phi, target);
    auto const direct_j  = extract_julia_boundary(rep.direct);
    rep.julia = compare_masks(moved.values, direct_j, moved.valid, cmp.band);
    rep.fatou = compare_masks(moved.values.complement(),
                              direct_j.complement(),
                              moved.valid,
                              cmp.band);
    return rep;
  }

  inline TransportReport transport_check(SemigroupPresentation const& s,
                                         AffineMap const&             phi,
                                         GridSpec const&              spec,
                                         ExecutionOptions const&      exec = {},
                                         ComparisonOptions const& cmp = {}) {
    return transport_check(s, phi, spec, spec, exec, cmp);
  }

}  // namespace semidyn

#endif  // SEMIDYN_GRID_HPP_
