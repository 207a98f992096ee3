#include <bit>
#include <complex>
#include <numbers>
#include <random>

#include "catch_amalgamated.hpp"

#include "semidyn/affine.hpp"
#include "semidyn/expr.hpp"
#include "semidyn/sampling.hpp"

#include "generators.hpp"

using namespace semidyn;
using Catch::Matchers::WithinAbs;

namespace {
  bool same_bits(std::optional<Complex> const& x,
                 std::optional<Complex> const& y) {
    if (!x || !y) {
      return !x && !y;
    }
    return std::bit_cast<std::uint64_t>(x->re) == std::bit_cast<std::uint64_t>(y->re)
           && std::bit_cast<std::uint64_t>(x->im)
                  == std::bit_cast<std::uint64_t>(y->im);
  }

  FunctionExpr exp_fixture(double lambda) {
    return fn::add(fn::exp(fn::pow(fn::z(), 2)), fn::constant(lambda));
  }
}  // namespace

TEST_CASE("eval of elementary trees", "[expr][eval]") {
  auto v = eval(fn::cos(), 0.0);
  REQUIRE(v);
  CHECK(v->re == 1.0);
  CHECK(v->im == 0.0);

  v = eval(exp_fixture(0.2), 0.0);
  REQUIRE(v);
  CHECK_THAT(v->re, WithinAbs(1.2, 1e-15));
  CHECK(v->im == 0.0);

  // cos(-x) against the scalar library.
  v = eval(fn::compose(fn::cos(), fn::neg(fn::z())), 0.5403);
  REQUIRE(v);
  CHECK_THAT(v->re, WithinAbs(std::cos(-0.5403), 1e-15));
  CHECK_THAT(v->re, WithinAbs(0.8576, 1e-4));
  CHECK(v->im == 0.0);
}

TEST_CASE("eval agrees with std::complex on random points", "[expr][eval]") {
  std::mt19937_64 gen(11);
  for (int k = 0; k < 200; ++k) {
    Complex const             z = test::random_complex(gen, 2.0);
    std::complex<double> const zc(z.re, z.im);
    auto e = eval(fn::add(fn::exp(fn::pow(fn::z(), 2)),
                          fn::mul(fn::sin(), fn::cos(fn::affine({2, 1}, {0, -1})))),
                  z);
    auto const oracle = std::exp(zc * zc)
                        + std::sin(zc) * std::cos(std::complex<double>(2, 1) * zc
                                                  + std::complex<double>(0, -1));
    REQUIRE(e);
    CHECK(abs(*e - Complex(oracle.real(), oracle.imag()))
          <= 1e-12 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("overflow is reported, not propagated", "[expr][eval]") {
  CHECK(eval(fn::exp(), 300.0));   // e^300 ~ 1.9e130
  CHECK(!eval(fn::exp(), 400.0));  // e^400 ~ 5.2e173 > 1e150
  CHECK(!eval(fn::pow(fn::z(), 3), 1e60));
  CHECK(!eval(fn::exp(fn::exp()), 6.0));
  // A later subtraction can not mask an intermediate overflow.
  CHECK(!eval(fn::add(fn::exp(), fn::neg(fn::exp())), 400.0));
}

TEST_CASE("compose", "[expr][compose]") {
  auto const f = exp_fixture(0.2);
  CHECK(fn::compose(fn::z(), f).same_node(f));
  CHECK(fn::compose(f, fn::z()).same_node(f));

  auto const flip = fn::affine({-1, 0}, {0, 0});
  auto const rep  = numerically_equal(fn::compose(flip, flip), fn::z(), SamplePlan{});
  CHECK(rep.equal());
  CHECK(rep.max_error == 0.0);

  auto v = eval(fn::compose(fn::exp(), fn::affine({1, 0}, {1, 0})), 0.0);
  REQUIRE(v);
  CHECK_THAT(v->re, WithinAbs(std::numbers::e, 1e-15));
}

TEST_CASE("composition is evaluation of the inner value, bitwise",
          "[expr][compose][property]") {
  std::mt19937_64 gen(2024);
  for (int k = 0; k < 300; ++k) {
    auto const    f = test::random_expr(gen, 3);
    auto const    g = test::random_expr(gen, 3);
    Complex const z = test::random_complex(gen, 2.0);
    auto const    inner = eval(g, z);
    if (!inner) {
      continue;
    }
    auto const rhs = eval(f, *inner);
    if (!rhs) {
      continue;
    }
    CHECK(same_bits(eval(fn::compose(f, g), z), rhs));
  }
}

TEST_CASE("composition is associative at sample points", "[expr][property]") {
  std::mt19937_64 gen(7);
  SamplePlan      plan;
  for (int k = 0; k < 100; ++k) {
    auto const f = test::random_expr(gen, 2);
    auto const g = test::random_expr(gen, 2);
    auto const h = test::random_expr(gen, 2);
    auto const rep
        = numerically_equal(fn::compose(fn::compose(f, g), h),
                            fn::compose(f, fn::compose(g, h)),
                            plan);
    CHECK(rep.verdict != Verdict::not_equal);
  }
}

TEST_CASE("compiled evaluation matches the tree walk bitwise",
          "[expr][compiled][property]") {
  std::mt19937_64 gen(99);
  for (int k = 0; k < 400; ++k) {
    auto const         e = test::random_expr(gen, 4);
    CompiledExpr const c(e);
    for (int j = 0; j < 5; ++j) {
      Complex const z = test::random_complex(gen, 3.0);
      CHECK(same_bits(c(z), eval(e, z)));
    }
  }
  // Deep nesting exceeds the inline stack.
  FunctionExpr deep = fn::z();
  for (int k = 0; k < 40; ++k) {
    deep = fn::add(fn::constant(0.01), fn::compose(fn::sin(), deep));
  }
  CHECK(same_bits(CompiledExpr(deep)(0.3), eval(deep, 0.3)));
}

TEST_CASE("numerically_equal", "[expr][equality]") {
  SamplePlan const plan;
  auto const       f = exp_fixture(0.2);

  auto self = numerically_equal(f, f, plan);
  CHECK(self.equal());
  CHECK(self.max_error == 0.0);
  CHECK(self.clean == plan.count);

  // f is even.
  CHECK(numerically_equal(fn::compose(f, fn::affine({-1, 0}, {0, 0})), f, plan)
            .equal());

  auto differ = numerically_equal(fn::exp(), fn::cos(), plan);
  CHECK(differ.verdict == Verdict::not_equal);
  CHECK(std::exp(1.0) != std::cos(1.0));

  // Every sample overflows.
  auto const huge = fn::exp(fn::add(fn::z(), fn::constant(400.0)));
  CHECK(numerically_equal(huge, huge, plan).verdict == Verdict::indeterminate);
}

TEST_CASE("sample points are reproducible and inside the disk",
          "[expr][sampling]") {
  SamplePlan plan{.seed = 5, .count = 64, .radius = 1.5};
  auto const a = sample_points(plan);
  auto const b = sample_points(plan);
  REQUIRE(a.size() == 64);
  CHECK(a == b);
  for (auto const& z : a) {
    CHECK(abs(z) <= 1.5);
  }
  CHECK(sample_points(plan.reseeded(1)) != a);

  CHECK_THROWS_AS(sample_points(SamplePlan{.count = 7}), InvalidArgument);
  CHECK_THROWS_AS(sample_points(SamplePlan{.radius = 0.0}), InvalidArgument);
  CHECK_THROWS_AS(sample_points(SamplePlan{.tolerance = 0.0}), InvalidArgument);
}

TEST_CASE("affine maps", "[affine]") {
  AffineMap const flip({-1, 0}, {0, 0});
  CHECK(affine_inverse(flip) == flip);

  AffineMap const m({2, 0}, {4, 0});
  CHECK(affine_compose(AffineMap::identity(), m) == m);
  CHECK(affine_compose(m, AffineMap::identity()) == m);
  auto const inv = affine_inverse(m);
  CHECK(inv.a() == Complex(0.5));
  CHECK(inv.b() == Complex(-2.0));
  CHECK(affine_apply(inv, m(Complex(3, -1))) == Complex(3, -1));

  // (a1, b1) o (a2, b2) = (a1 a2, a1 b2 + b1).
  AffineMap const p({1, 1}, {0, 2});
  AffineMap const q({3, 0}, {1, -1});
  auto const      pq = affine_compose(p, q);
  CHECK(pq.a() == Complex(3, 3));
  CHECK(pq.b() == Complex(1 * 1 - 1 * -1, 1 * -1 + 1 * 1) + Complex(0, 2));

  CHECK_THROWS_AS(AffineMap({0, 0}, {1, 0}), DegenerateAffine);
}

TEST_CASE("m o m^-1 is the identity for random maps", "[affine][property]") {
  std::mt19937_64 gen(1000);
  for (int k = 0; k < 1000; ++k) {
    auto const m = test::random_affine(gen);
    CHECK(affine_distance(affine_compose(m, affine_inverse(m)),
                          AffineMap::identity())
          < 1e-12);
    CHECK(affine_distance(affine_compose(affine_inverse(m), m),
                          AffineMap::identity())
          < 1e-12);
  }
}

TEST_CASE("prefix notation", "[expr][serialization]") {
  for (std::string const text : {
           "add(exp(pow(z,2)), const(0.2+0i))",
           "affine(-1+0i, 0+0i)",
           "mul(const(1e-05-2.5i), cos(z), sin(neg(z)))",
           "compose(exp(z), affine(1+0i, 1+0i))",
           "z",
       }) {
    CHECK(to_prefix(parse_prefix(text)) == text);
  }

  // Whitespace and explicit plus signs are accepted on input.
  CHECK(to_prefix(parse_prefix(" add( z ,const(+1+2i) ) "))
        == "add(z, const(1+2i))");

  // Generator references.
  std::vector<FunctionExpr> refs{parse_prefix("cos(z)")};
  auto const                g = parse_prefix("neg(f1)", refs);
  CHECK(to_prefix(g) == "neg(cos(z))");

  CHECK_THROWS_AS(parse_prefix("tan(z)"), ParseError);
  CHECK_THROWS_AS(parse_prefix("exp(z"), ParseError);
  CHECK_THROWS_AS(parse_prefix("exp(z))"), ParseError);
  CHECK_THROWS_AS(parse_prefix("const(1+i)"), ParseError);
  CHECK_THROWS_AS(parse_prefix("pow(z,0)"), ParseError);
  CHECK_THROWS_AS(parse_prefix("neg(f2)", refs), ParseError);
  CHECK_THROWS_AS(parse_prefix("exp(z, z)"), ParseError);
}

TEST_CASE("prefix notation round-trips random trees bit-stably",
          "[expr][serialization][property]") {
  std::mt19937_64 gen(31337);
  for (int k = 0; k < 300; ++k) {
    auto const        e    = test::random_expr(gen, 4);
    std::string const text = to_prefix(e);
    auto const        back = parse_prefix(text);
    CHECK(structurally_equal(back, e));
    CHECK(to_prefix(back) == text);
  }
  // Signed zero and extreme exponents survive.
  auto const c = fn::constant({-0.0, -0.0});
  auto const d = parse_prefix(to_prefix(c));
  CHECK(std::signbit(d.node().c0.re));
  CHECK(std::signbit(d.node().c0.im));
  CHECK(parse_complex(format_complex({1e-300, 5e300})) == Complex(1e-300, 5e300));
}

TEST_CASE("transcendental flag", "[expr]") {
  CHECK(is_transcendental(fn::exp()));
  CHECK(is_transcendental(exp_fixture(0.2)));
  CHECK(is_transcendental(fn::neg(fn::cos())));
  CHECK(is_transcendental(fn::compose(fn::pow(fn::z(), 2), fn::sin())));
  CHECK_FALSE(is_transcendental(fn::pow(fn::z(), 2)));
  CHECK_FALSE(is_transcendental(fn::add(fn::z(), fn::cos(fn::constant(1.0)))));
  CHECK_FALSE(is_transcendental(fn::compose(fn::exp(), fn::constant(2.0))));
}
