#ifndef SEMIDYN_COMMUTATOR_HPP_
#define SEMIDYN_COMMUTATOR_HPP_

// Affine commutators of entire maps.
//
// For maps f, g the commutator [f, g] is the map phi with
//
//     f o g = phi o g o f.
//
// Only affine phi(z) = a z + b are searched for. Given u = f o g and
// w = g o f, two well separated samples fix (a, b) through a 2x2 linear
// system and every other sample must then satisfy a w + b = u.

#include <algorithm>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semidyn/affine.hpp"
#include "semidyn/error.hpp"
#include "semidyn/expr.hpp"
#include "semidyn/sampling.hpp"

namespace semidyn {

  ////////////////////////////////////////////////////////////////////////
  // Presentations
  ////////////////////////////////////////////////////////////////////////

  // S = <f_1, ..., f_n>, finitely generated by transcendental entire maps.
  class SemigroupPresentation {
   public:
    SemigroupPresentation(std::vector<FunctionExpr> generators,
                          std::string               label = {})
        : _generators(std::move(generators)), _label(std::move(label)) {
      if (_generators.empty()) {
        throw InvalidArgument("a presentation needs at least one generator");
      }
      for (std::size_t k = 0; k < _generators.size(); ++k) {
        if (!is_transcendental(_generators[k])) {
          throw InvalidArgument("generator f" + std::to_string(k + 1) + " = "
                                + to_prefix(_generators[k])
                                + " is not transcendental");
        }
      }
    }

    [[nodiscard]] std::size_t size() const noexcept {
      return _generators.size();
    }
    [[nodiscard]] FunctionExpr const& operator[](std::size_t i) const {
      return _generators.at(i);
    }
    [[nodiscard]] std::span<FunctionExpr const> generators() const noexcept {
      return _generators;
    }
    [[nodiscard]] std::string const& label() const noexcept {
      return _label;
    }

   private:
    std::vector<FunctionExpr> _generators;
    std::string               _label;
  };

  ////////////////////////////////////////////////////////////////////////
  // Solving for a single commutator
  ////////////////////////////////////////////////////////////////////////

  inline constexpr std::size_t max_resample_attempts = 8;
  inline constexpr double      min_sample_separation = 1e-6;

  enum class SolveStatus { found, no_affine_commutator, degenerate_samples };

  struct CommutatorSolve {
    SolveStatus              status   = SolveStatus::degenerate_samples;
    std::optional<AffineMap> map      = std::nullopt;
    double                   residual = 0.0;  // max scaled error on samples

    [[nodiscard]] bool found() const noexcept {
      return status == SolveStatus::found;
    }
  };

  class NoAffineCommutator : public Error {
   public:
    explicit NoAffineCommutator(double residual)
        : Error("no affine commutator (residual "
                + format_double(residual) + ")"),
          _residual(residual) {}

    [[nodiscard]] double residual() const noexcept {
      return _residual;
    }

   private:
    double _residual;
  };

  class DegenerateSamples : public Error {
   public:
    DegenerateSamples()
        : Error("no well separated sample pair after resampling") {}
  };

  inline CommutatorSolve try_find_affine_commutator(FunctionExpr const& f,
                                                    FunctionExpr const& g,
                                                    SamplePlan const& plan) {
    struct Sample {
      Complex u, w;
    };
    for (std::size_t attempt = 0; attempt < max_resample_attempts; ++attempt) {
      auto const          pts = sample_points(plan.reseeded(attempt));
      std::vector<Sample> s;
      for (auto const& z : pts) {
        auto gz = eval(g, z);
        auto fz = eval(f, z);
        if (!gz || !fz) {
          continue;
        }
        auto u = eval(f, *gz);
        auto w = eval(g, *fz);
        if (u && w) {
          s.push_back({*u, *w});
        }
      }
      if (2 * s.size() < pts.size()) {
        continue;
      }
      // Best conditioned pair: largest separation relative to magnitude.
      std::size_t bi = 0, bj = 0;
      double      best = -1.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = i + 1; j < s.size(); ++j) {
          double const sep = abs(s[i].w - s[j].w);
          if (sep <= min_sample_separation) {
            continue;
          }
          double const score
              = sep / (1.0 + std::max(abs(s[i].w), abs(s[j].w)));
          if (score > best) {
            best = score;
            bi   = i;
            bj   = j;
          }
        }
      }
      if (best < 0.0) {
        continue;
      }
      Complex const a = (s[bi].u - s[bj].u) / (s[bi].w - s[bj].w);
      Complex const b = s[bi].u - a * s[bi].w;
      CommutatorSolve out;
      if ((a.re == 0.0 && a.im == 0.0) || !is_finite(a) || !is_finite(b)) {
        out.status   = SolveStatus::no_affine_commutator;
        out.residual = std::numeric_limits<double>::infinity();
        return out;
      }
      for (auto const& smp : s) {
        out.residual = std::max(
            out.residual, scaled_error(a * smp.w + b, smp.u, plan.tolerance));
      }
      if (out.residual <= plan.tolerance) {
        out.status = SolveStatus::found;
        out.map    = AffineMap(a, b);
      } else {
        out.status = SolveStatus::no_affine_commutator;
      }
      return out;
    }
    return {};
  }

  inline AffineMap find_affine_commutator(FunctionExpr const& f,
                                          FunctionExpr const& g,
                                          SamplePlan const&   plan) {
    auto const r = try_find_affine_commutator(f, g, plan);
    switch (r.status) {
      case SolveStatus::found:
        return *r.map;
      case SolveStatus::no_affine_commutator:
        throw NoAffineCommutator(r.residual);
      case SolveStatus::degenerate_samples:
      default:
        throw DegenerateSamples();
    }
  }

  // Maximum scaled error of f o g = phi o g o f over the plan, for checking
  // a table entry that was not produced by the solver (e.g. read from disk).
  inline double commutator_residual(FunctionExpr const& f,
                                    FunctionExpr const& g,
                                    AffineMap const&    phi,
                                    SamplePlan const&   plan) {
    auto rep = numerically_equal(
        fn::compose(f, g), fn::compose(as_expr(phi), fn::compose(g, f)), plan);
    if (rep.verdict == Verdict::indeterminate) {
      return std::numeric_limits<double>::infinity();
    }
    return rep.max_error;
  }

  ////////////////////////////////////////////////////////////////////////
  // Commutator tables
  ////////////////////////////////////////////////////////////////////////

  using GeneratorPair = std::pair<std::size_t, std::size_t>;  // 0-based

  // Phi(S) restricted to generator pairs: entry(i, j) = [f_i, f_j].
  class CommutatorTable {
   public:
    explicit CommutatorTable(std::size_t n = 1)
        : _n(n), _entries(n * n), _residuals(n * n, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept {
      return _n;
    }

    [[nodiscard]] AffineMap const& entry(std::size_t i, std::size_t j) const {
      return _entries.at(index(i, j));
    }
    [[nodiscard]] double residual(std::size_t i, std::size_t j) const {
      return _residuals.at(index(i, j));
    }

    void set(std::size_t i, std::size_t j, AffineMap m, double residual) {
      _entries.at(index(i, j))   = m;
      _residuals.at(index(i, j)) = residual;
    }

    // Distinct entries in (i, j) order, identity included.
    [[nodiscard]] std::vector<AffineMap> distinct_entries() const {
      std::vector<AffineMap> out;
      for (auto const& m : _entries) {
        if (std::none_of(out.begin(), out.end(), [&m](AffineMap const& x) {
              return approx_equal(x, m);
            })) {
          out.push_back(m);
        }
      }
      return out;
    }

    [[nodiscard]] bool contains(AffineMap const& m) const {
      return std::any_of(_entries.begin(),
                         _entries.end(),
                         [&m](AffineMap const& x) { return approx_equal(x, m); });
    }

   private:
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const {
      if (i >= _n || j >= _n) {
        throw InvalidArgument("commutator table index out of range");
      }
      return i * _n + j;
    }

    std::size_t            _n;
    std::vector<AffineMap> _entries;
    std::vector<double>    _residuals;
  };

  class NotNearlyRepresentable : public Error {
   public:
    explicit NotNearlyRepresentable(std::vector<GeneratorPair> pairs)
        : Error(describe(pairs)), _pairs(std::move(pairs)) {}

    [[nodiscard]] std::vector<GeneratorPair> const& pairs() const noexcept {
      return _pairs;
    }

   private:
    static std::string describe(std::vector<GeneratorPair> const& pairs) {
      std::string s = "no affine commutator for generator pair(s)";
      for (auto const& [i, j] : pairs) {
        s += " (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
      }
      return s;
    }

    std::vector<GeneratorPair> _pairs;
  };

  struct TableBuild {
    CommutatorTable            table;
    std::vector<GeneratorPair> failures;  // ordered pairs, (i, j) order

    [[nodiscard]] bool complete() const noexcept {
      return failures.empty();
    }
  };

  // Works on any maps; the presentation overload adds the TEF requirement.
  inline TableBuild try_build_commutator_table(std::span<FunctionExpr const> s,
                                               SamplePlan const& plan) {
    if (s.empty()) {
      throw InvalidArgument("a commutator table needs at least one map");
    }
    TableBuild out{CommutatorTable(s.size()), {}};
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (i == j) {
          // [f, f] is the identity.
          out.table.set(i, j, AffineMap::identity(), 0.0);
          continue;
        }
        auto const r = try_find_affine_commutator(s[i], s[j], plan);
        if (r.found()) {
          out.table.set(i, j, *r.map, r.residual);
        } else {
          out.failures.emplace_back(i, j);
        }
      }
    }
    return out;
  }

  inline TableBuild try_build_commutator_table(SemigroupPresentation const& s,
                                               SamplePlan const& plan) {
    return try_build_commutator_table(s.generators(), plan);
  }

  inline CommutatorTable build_commutator_table(SemigroupPresentation const& s,
                                                SamplePlan const& plan) {
    auto r = try_build_commutator_table(s, plan);
    if (!r.complete()) {
      throw NotNearlyRepresentable(std::move(r.failures));
    }
    return std::move(r.table);
  }

  struct NearlyAbelianReport {
    // Every generator pair has an affine commutator. Fatou invariance of the
    // commutators is a separate, grid level check.
    bool                           algebraic = false;
    std::optional<CommutatorTable> table;
    std::vector<GeneratorPair>     failures;
    // Pre-compactness of Phi(S) is assumed, never verified.
    bool precompact_assumed = true;
  };

  inline NearlyAbelianReport is_nearly_abelian(SemigroupPresentation const& s,
                                               SamplePlan const& plan) {
    auto                r = try_build_commutator_table(s, plan);
    NearlyAbelianReport rep;
    rep.algebraic = r.complete();
    rep.failures  = std::move(r.failures);
    if (rep.algebraic) {
      rep.table = std::move(r.table);
    }
    return rep;
  }

  ////////////////////////////////////////////////////////////////////////
  // G = <Phi(S)>
  ////////////////////////////////////////////////////////////////////////

  class AffineGroup {
   public:
    AffineGroup() : _elements{AffineMap::identity()} {}

    [[nodiscard]] std::span<AffineMap const> elements() const noexcept {
      return _elements;
    }
    [[nodiscard]] std::size_t size() const noexcept {
      return _elements.size();
    }
    [[nodiscard]] bool closed() const noexcept {
      return _closed;
    }
    [[nodiscard]] AffineMap const& operator[](std::size_t k) const {
      return _elements.at(k);
    }

    [[nodiscard]] std::optional<std::size_t>
    find(AffineMap const& m, double tol = affine_dedup_tolerance) const {
      for (std::size_t k = 0; k < _elements.size(); ++k) {
        if (approx_equal(_elements[k], m, tol)) {
          return k;
        }
      }
      return std::nullopt;
    }

    [[nodiscard]] bool contains(AffineMap const& m) const {
      return find(m).has_value();
    }

   private:
    friend AffineGroup group_closure(std::span<AffineMap const>,
                                     std::size_t,
                                     double);

    std::vector<AffineMap> _elements;
    bool                   _closed = false;
  };

  class ClosureOverflow : public Error {
   public:
    explicit ClosureOverflow(AffineGroup partial)
        : Error("group closure exceeded its element cap ("
                + std::to_string(partial.size()) + " elements)"),
          _partial(std::move(partial)) {}

    [[nodiscard]] AffineGroup const& partial() const noexcept {
      return _partial;
    }

   private:
    AffineGroup _partial;
  };

  // Breadth-first closure of the seeds under composition and inversion.
  // Elements are identified when |da| + |db| < tol.
  inline AffineGroup group_closure(std::span<AffineMap const> seeds,
                                   std::size_t                cap = 64,
                                   double tol = affine_dedup_tolerance) {
    if (cap < 1) {
      throw InvalidArgument("group closure cap must be at least 1");
    }
    std::vector<AffineMap> gens;
    auto add_gen = [&gens, tol](AffineMap const& m) {
      if (std::none_of(gens.begin(), gens.end(), [&](AffineMap const& x) {
            return approx_equal(x, m, tol);
          })) {
        gens.push_back(m);
      }
    };
    for (auto const& s : seeds) {
      add_gen(s);
      add_gen(affine_inverse(s));
    }

    AffineGroup             group;
    std::deque<std::size_t> frontier{0};
    while (!frontier.empty()) {
      std::size_t const k = frontier.front();
      frontier.pop_front();
      for (auto const& s : gens) {
        AffineMap const next = affine_compose(group._elements[k], s);
        if (group.find(next, tol)) {
          continue;
        }
        if (group._elements.size() == cap) {
          throw ClosureOverflow(std::move(group));
        }
        group._elements.push_back(next);
        frontier.push_back(group._elements.size() - 1);
      }
    }
    group._closed = true;
    return group;
  }

  ////////////////////////////////////////////////////////////////////////
  // Commutator identities
  ////////////////////////////////////////////////////////////////////////

  enum class CommutatorIdentity {
    // [f, g o f^n] = [f, g]
    absorb_right,
    // [f, f^n o g] o f^n = f^n o [f, g]
    shift_power,
    // [f o g, g o f] o g o f = f o g o [g, f]
    swap_products,
    // [f, g] o [g, f] = identity
    inverse,
    // [f, f] = identity
    diagonal
  };

  class MissingCommutator : public Error {
   public:
    explicit MissingCommutator(std::string const& bracket)
        : Error("could not solve commutator " + bracket) {}
  };

  struct IdentityCheck {
    bool    holds    = false;
    double  residual = 0.0;
    Verdict verdict  = Verdict::indeterminate;
  };

  namespace detail {
    inline AffineMap solve_bracket(FunctionExpr const& f,
                                   FunctionExpr const& g,
                                   SamplePlan const&   plan,
                                   char const*         name) {
      auto const r = try_find_affine_commutator(f, g, plan);
      if (!r.found()) {
        throw MissingCommutator(name);
      }
      return *r.map;
    }

    inline IdentityCheck from_report(EqualityReport const& rep) {
      return {rep.equal(), rep.max_error, rep.verdict};
    }

    inline IdentityCheck from_distance(double d) {
      bool const ok = d < affine_dedup_tolerance;
      return {ok, d, ok ? Verdict::equal : Verdict::not_equal};
    }
  }  // namespace detail

  inline IdentityCheck verify_identity(CommutatorIdentity  which,
                                       FunctionExpr const& f,
                                       FunctionExpr const& g,
                                       unsigned            n,
                                       SamplePlan const&   plan) {
    using detail::solve_bracket;
    if ((which == CommutatorIdentity::absorb_right
         || which == CommutatorIdentity::shift_power)
        && (n < 1 || n > 3)) {
      throw InvalidArgument("identity power n must be in 1..3");
    }
    FunctionExpr const fn_pow = fn::iterate(f, n);
    switch (which) {
      case CommutatorIdentity::absorb_right: {
        auto lhs = solve_bracket(f, fn::compose(g, fn_pow), plan, "[f, g o f^n]");
        auto rhs = solve_bracket(f, g, plan, "[f, g]");
        return detail::from_report(
            numerically_equal(as_expr(lhs), as_expr(rhs), plan));
      }
      case CommutatorIdentity::shift_power: {
        auto left  = solve_bracket(f, fn::compose(fn_pow, g), plan, "[f, f^n o g]");
        auto right = solve_bracket(f, g, plan, "[f, g]");
        return detail::from_report(
            numerically_equal(fn::compose(as_expr(left), fn_pow),
                              fn::compose(fn_pow, as_expr(right)),
                              plan));
      }
      case CommutatorIdentity::swap_products: {
        auto const fg    = fn::compose(f, g);
        auto const gf    = fn::compose(g, f);
        auto       left  = solve_bracket(fg, gf, plan, "[f o g, g o f]");
        auto       right = solve_bracket(g, f, plan, "[g, f]");
        return detail::from_report(
            numerically_equal(fn::compose(as_expr(left), gf),
                              fn::compose(fg, as_expr(right)),
                              plan));
      }
      case CommutatorIdentity::inverse: {
        auto fg = solve_bracket(f, g, plan, "[f, g]");
        auto gf = solve_bracket(g, f, plan, "[g, f]");
        return detail::from_distance(
            affine_distance(affine_compose(fg, gf), AffineMap::identity()));
      }
      case CommutatorIdentity::diagonal:
      default: {
        auto ff = solve_bracket(f, f, plan, "[f, f]");
        return detail::from_distance(
            affine_distance(ff, AffineMap::identity()));
      }
    }
  }

  ////////////////////////////////////////////////////////////////////////
  // Conjugate semigroups
  ////////////////////////////////////////////////////////////////////////

  // phi o f o phi^-1 as an expression.
  inline FunctionExpr conjugate(FunctionExpr const& f, AffineMap const& phi) {
    return fn::compose(as_expr(phi),
                       fn::compose(f, as_expr(affine_inverse(phi))));
  }

  // S' = <phi o f_1 o phi^-1, ..., phi o f_n o phi^-1>.
  inline SemigroupPresentation conjugate_semigroup(SemigroupPresentation const& s,
                                                   AffineMap const& phi) {
    std::vector<FunctionExpr> gens;
    gens.reserve(s.size());
    for (auto const& f : s.generators()) {
      gens.push_back(conjugate(f, phi));
    }
    return {std::move(gens),
            "conjugate of " + (s.label().empty() ? "S" : s.label()) + " by "
                + to_string(phi)};
  }

}  // namespace semidyn

#endif  // SEMIDYN_COMMUTATOR_HPP_
