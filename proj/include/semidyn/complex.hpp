#ifndef SEMIDYN_COMPLEX_HPP_
#define SEMIDYN_COMPLEX_HPP_

// Plain complex arithmetic with a fixed operation order.
//
// std::complex multiplication goes through __muldc3 and its NaN recovery
// path, which is both slow in the escape-time kernel and harder to reason
// about bit-for-bit. Everything here is the textbook formula, evaluated in
// the order written, so identical inputs always give identical bits.

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

#include "semidyn/error.hpp"

namespace semidyn {

  struct Complex {
    double re = 0.0;
    double im = 0.0;

    constexpr Complex() = default;
    constexpr Complex(double r, double i = 0.0) : re(r), im(i) {}  // NOLINT

    friend constexpr bool operator==(Complex const&, Complex const&) = default;
  };

  constexpr Complex operator+(Complex x, Complex y) noexcept {
    return {x.re + y.re, x.im + y.im};
  }
  constexpr Complex operator-(Complex x, Complex y) noexcept {
    return {x.re - y.re, x.im - y.im};
  }
  constexpr Complex operator-(Complex x) noexcept {
    return {-x.re, -x.im};
  }
  constexpr Complex operator*(Complex x, Complex y) noexcept {
    return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
  }
  constexpr Complex operator*(double s, Complex x) noexcept {
    return {s * x.re, s * x.im};
  }

  // x / y by multiplication with the conjugate. Callers guarantee y != 0.
  constexpr Complex operator/(Complex x, Complex y) noexcept {
    double const d = y.re * y.re + y.im * y.im;
    return {(x.re * y.re + x.im * y.im) / d, (x.im * y.re - x.re * y.im) / d};
  }

  constexpr double norm(Complex x) noexcept {
    return x.re * x.re + x.im * x.im;
  }

  inline double abs(Complex x) noexcept {
    return std::hypot(x.re, x.im);
  }

  inline bool is_finite(Complex x) noexcept {
    return std::isfinite(x.re) && std::isfinite(x.im);
  }

  // Kept out of line so every caller runs the same machine code; inlined
  // copies may pick different libm entry points and differ in the last bit.
  [[gnu::noinline]] inline Complex exp(Complex x) noexcept {
    double const m = std::exp(x.re);
    return {m * std::cos(x.im), m * std::sin(x.im)};
  }

  [[gnu::noinline]] inline Complex cos(Complex x) noexcept {
    return {std::cos(x.re) * std::cosh(x.im),
            -(std::sin(x.re) * std::sinh(x.im))};
  }

  [[gnu::noinline]] inline Complex sin(Complex x) noexcept {
    return {std::sin(x.re) * std::cosh(x.im),
            std::cos(x.re) * std::sinh(x.im)};
  }

  // Shortest round-trip decimal form of a double.
  inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
  }

  inline double parse_double(std::string_view text) {
    double v = 0.0;
    auto const* first = text.data();
    auto const* last  = text.data() + text.size();
    if (!text.empty() && *first == '+') {
      ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      throw ParseError("invalid real number '" + std::string(text) + "'", 0);
    }
    return v;
  }

  // "re+imi" / "re-imi", e.g. "0.2+0i", "-1-2.5i". The sign of a zero
  // imaginary part is preserved so formatting round-trips bitwise.
  inline std::string format_complex(Complex x) {
    std::string out = format_double(x.re);
    out += std::signbit(x.im) ? '-' : '+';
    out += format_double(std::fabs(x.im));
    out += 'i';
    return out;
  }

  inline Complex parse_complex(std::string_view text) {
    if (text.size() < 4 || text.back() != 'i') {
      throw ParseError("invalid complex literal '" + std::string(text) + "'",
                       0);
    }
    std::string_view body = text.substr(0, text.size() - 1);
    // The split is the last sign that does not open the literal and does not
    // belong to an exponent.
    std::size_t split = std::string_view::npos;
    for (std::size_t k = body.size(); k-- > 1;) {
      if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e'
          && body[k - 1] != 'E') {
        split = k;
        break;
      }
    }
    if (split == std::string_view::npos) {
      throw ParseError("complex literal needs an imaginary part '"
                           + std::string(text) + "'",
                       0);
    }
    double const re = parse_double(body.substr(0, split));
    double const im = parse_double(body.substr(split + 1));
    return {re, body[split] == '-' ? -im : im};
  }

  // "re,im" as used in JSON reports.
  inline std::string format_pair(Complex x) {
    return format_double(x.re) + "," + format_double(x.im);
  }

  inline Complex parse_pair(std::string_view text) {
    auto const comma = text.find(',');
    if (comma == std::string_view::npos) {
      throw ParseError("expected 're,im' but got '" + std::string(text) + "'",
                       0);
    }
    return {parse_double(text.substr(0, comma)),
            parse_double(text.substr(comma + 1))};
  }

}  // namespace semidyn

#endif  // SEMIDYN_COMPLEX_HPP_
