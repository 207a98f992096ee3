#ifndef SEMIDYN_SAMPLING_HPP_
#define SEMIDYN_SAMPLING_HPP_

// Sampled numeric equality of entire functions. Two entire functions that
// agree on a set with a limit point agree everywhere, so agreement at a
// handful of seeded random points in a disk is the working definition of
// "equal" throughout the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "semidyn/complex.hpp"
#include "semidyn/error.hpp"
#include "semidyn/expr.hpp"

namespace semidyn {

  inline constexpr double absolute_error_floor = 1e-12;

  struct SamplePlan {
    std::uint64_t seed      = 1;
    std::size_t   count     = 32;
    double        radius    = 2.0;
    double        tolerance = 1e-9;

    void validate() const {
      if (count < 8) {
        throw InvalidArgument("sample count must be at least 8");
      }
      if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw InvalidArgument("sample radius must be positive");
      }
      if (!(tolerance > 0.0)) {
        throw InvalidArgument("sample tolerance must be positive");
      }
    }

    // The same plan with an independent point set, for resampling.
    [[nodiscard]] SamplePlan reseeded(std::uint64_t attempt) const {
      SamplePlan p = *this;
      p.seed       = seed + attempt * 0x9E3779B97F4A7C15ULL;
      return p;
    }
  };

  // Uniform points in the disk |z| <= radius. The conversion from raw
  // generator output is spelled out so the points do not depend on the
  // standard library's distribution implementations.
  inline std::vector<Complex> sample_points(SamplePlan const& plan) {
    plan.validate();
    std::mt19937_64      gen(plan.seed);
    auto                 unit = [&gen] {
      return static_cast<double>(gen() >> 11) * 0x1.0p-53;
    };
    std::vector<Complex> pts;
    pts.reserve(plan.count);
    for (std::size_t k = 0; k < plan.count; ++k) {
      double const r     = plan.radius * std::sqrt(unit());
      double const theta = 2.0 * std::numbers::pi * unit();
      pts.emplace_back(r * std::cos(theta), r * std::sin(theta));
    }
    return pts;
  }

  // |x - y| scaled so that "<= tol" means relative error <= tol with an
  // absolute floor of absolute_error_floor.
  inline double scaled_error(Complex x, Complex y, double tol) {
    double const scale
        = std::max({abs(x), abs(y), absolute_error_floor / tol});
    return abs(x - y) / scale;
  }

  enum class Verdict { equal, not_equal, indeterminate };

  struct EqualityReport {
    Verdict     verdict   = Verdict::indeterminate;
    double      max_error = 0.0;
    std::size_t clean     = 0;
    std::size_t total     = 0;

    [[nodiscard]] bool equal() const noexcept {
      return verdict == Verdict::equal;
    }
  };

  // Compares two callables Complex -> optional<Complex> on the plan's points.
  // Points where either side overflows are skipped; fewer than half clean
  // points makes the comparison indeterminate.
  template <typename F, typename G>
  EqualityReport numerically_equal_fn(F&& f, G&& g, SamplePlan const& plan) {
    EqualityReport rep;
    auto const     pts = sample_points(plan);
    rep.total          = pts.size();
    for (auto const& z : pts) {
      std::optional<Complex> const fz = f(z);
      if (!fz) {
        continue;
      }
      std::optional<Complex> const gz = g(z);
      if (!gz) {
        continue;
      }
      ++rep.clean;
      rep.max_error
          = std::max(rep.max_error, scaled_error(*fz, *gz, plan.tolerance));
    }
    if (2 * rep.clean < rep.total) {
      rep.verdict = Verdict::indeterminate;
    } else {
      rep.verdict = rep.max_error <= plan.tolerance ? Verdict::equal
                                                    : Verdict::not_equal;
    }
    return rep;
  }

  inline EqualityReport numerically_equal(FunctionExpr const& f,
                                          FunctionExpr const& g,
                                          SamplePlan const&   plan) {
    return numerically_equal_fn(
        [&f](Complex z) { return eval(f, z); },
        [&g](Complex z) { return eval(g, z); },
        plan);
  }

}  // namespace semidyn

#endif  // SEMIDYN_SAMPLING_HPP_
