#ifndef SEMIDYN_AFFINE_HPP_
#define SEMIDYN_AFFINE_HPP_

#include <cmath>
#include <string>

#include "semidyn/complex.hpp"
#include "semidyn/error.hpp"
#include "semidyn/expr.hpp"

namespace semidyn {

  // z -> a z + b with a != 0.
  class AffineMap {
   public:
    constexpr AffineMap() = default;

    AffineMap(Complex a, Complex b) : _a(a), _b(b) {
      if (a.re == 0.0 && a.im == 0.0) {
        throw DegenerateAffine();
      }
      if (!is_finite(a) || !is_finite(b)) {
        throw InvalidArgument("affine coefficients must be finite");
      }
    }

    static AffineMap identity() {
      return {};
    }

    [[nodiscard]] constexpr Complex a() const noexcept {
      return _a;
    }
    [[nodiscard]] constexpr Complex b() const noexcept {
      return _b;
    }

    [[nodiscard]] Complex operator()(Complex z) const noexcept {
      return _a * z + _b;
    }

    [[nodiscard]] bool is_identity() const noexcept {
      return _a == Complex(1.0) && _b == Complex(0.0);
    }

    friend bool operator==(AffineMap const&, AffineMap const&) = default;

   private:
    Complex _a{1.0, 0.0};
    Complex _b{0.0, 0.0};
  };

  inline Complex affine_apply(AffineMap const& m, Complex z) noexcept {
    return m(z);
  }

  // (outer o inner)(z) = outer(inner(z)).
  inline AffineMap affine_compose(AffineMap const& outer,
                                  AffineMap const& inner) {
    return {outer.a() * inner.a(), outer.a() * inner.b() + outer.b()};
  }

  inline AffineMap affine_inverse(AffineMap const& m) {
    Complex const inv_a = Complex(1.0) / m.a();
    return {inv_a, -(m.b() * inv_a)};
  }

  // |da| + |db|, the distance used to identify affine maps.
  inline double affine_distance(AffineMap const& x, AffineMap const& y) {
    return abs(x.a() - y.a()) + abs(x.b() - y.b());
  }

  inline constexpr double affine_dedup_tolerance = 1e-9;

  inline bool approx_equal(AffineMap const& x,
                           AffineMap const& y,
                           double tol = affine_dedup_tolerance) {
    return affine_distance(x, y) < tol;
  }

  inline FunctionExpr as_expr(AffineMap const& m) {
    if (m.is_identity()) {
      return fn::z();
    }
    return fn::affine(m.a(), m.b());
  }

  inline std::string to_string(AffineMap const& m) {
    return "(" + format_complex(m.a()) + ", " + format_complex(m.b()) + ")";
  }

}  // namespace semidyn

#endif  // SEMIDYN_AFFINE_HPP_
