#include <complex>
#include <random>

#include "catch_amalgamated.hpp"

#include "semidyn/fixtures.hpp"
#include "semidyn/word.hpp"

using namespace semidyn;

namespace {
  AffineMap const minus_z({-1, 0}, {0, 0});

  SemigroupPresentation fixture(char const* name) {
    return find_fixture(name).presentation();
  }

  // prefix o f_1^{t_1} o ... o f_n^{t_n} built as an expression tree.
  FunctionExpr normal_form_expr(NormalForm const& nf, SemigroupPresentation const& s) {
    FunctionExpr e = fn::z();
    for (std::size_t i = 0; i < s.size(); ++i) {
      e = fn::compose(e, fn::iterate(s[i], static_cast<unsigned>(nf.exponents[i])));
    }
    return fn::compose(as_expr(nf.prefix), e);
  }
}  // namespace

TEST_CASE("words", "[word]") {
  CHECK_THROWS_AS(Word(std::vector<std::size_t>{}), InvalidArgument);
  CHECK_THROWS_AS(Word::from_one_based({1, 0}), InvalidArgument);
  CHECK_THROWS_AS(Word(std::vector<std::size_t>(max_word_length + 1, 0)),
                  InvalidArgument);
  auto const w = Word::from_one_based({2, 1, 2});
  CHECK(w.letters() == std::vector<std::size_t>{1, 0, 1});
  CHECK(w.one_based() == std::vector<std::size_t>{2, 1, 2});
  auto const s = fixture("example-2.1-exp");
  CHECK_NOTHROW(w.check_against(s));
  CHECK_THROWS_AS(Word::from_one_based({3}).check_against(s), InvalidArgument);
}

TEST_CASE("words apply their rightmost letter first", "[word]") {
  SemigroupPresentation const s({fn::exp(), fn::cos()});
  Complex const               z(0.3, -0.2);
  auto const                  w = Word::from_one_based({1, 2});
  std::complex<double> const  expected = std::exp(std::cos(std::complex<double>(0.3, -0.2)));
  auto const                  v = word_eval(w, s, z);
  REQUIRE(v);
  CHECK(std::abs(std::complex<double>(v->re, v->im) - expected) < 1e-14);
  CHECK(eval(word_expr(w, s), z) == v);
}

TEST_CASE("random words are seeded and bounded", "[word]") {
  std::mt19937_64 a(5), b(5);
  for (int k = 0; k < 200; ++k) {
    auto const x = random_word(a, 3, 6);
    CHECK(x.letters() == random_word(b, 3, 6).letters());
    CHECK(x.size() >= 1);
    CHECK(x.size() <= 6);
    for (auto l : x.letters()) {
      CHECK(l < 3);
    }
  }
  CHECK_THROWS_AS(random_word(a, 2, 0), InvalidArgument);
}

TEST_CASE("resolving xi", "[word][xi]") {
  SamplePlan const plan;
  auto const       g = group_closure(std::vector<AffineMap>{minus_z});

  // Even generators absorb the flip.
  for (auto const* name : {"example-2.1-exp", "example-2.1-cos"}) {
    auto const s = fixture(name);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(resolve_xi(s[i], minus_z, g, plan) == AffineMap::identity());
      CHECK_FALSE(left_resolve_exists(s[i], minus_z, g, plan));
    }
  }
  // An odd function passes it through.
  CHECK(approx_equal(resolve_xi(fn::sin(), minus_z, g, plan), minus_z));
  CHECK(left_resolve_exists(fn::sin(), minus_z, g, plan));
  CHECK_THROWS_AS(resolve_xi(fn::exp(), minus_z, g, plan), NoXi);
  CHECK_THROWS_AS(resolve_xi(fn::constant(0.0), minus_z, g, plan), AmbiguousXi);

  // Iterating the pair (2, 0), (1/2, 0) never closes.
  try {
    group_closure(std::vector<AffineMap>{AffineMap({2, 0}, {0, 0})}, 8);
    FAIL("expected ClosureOverflow");
  } catch (ClosureOverflow const& e) {
    CHECK_THROWS_AS(resolve_xi(fn::exp(), minus_z, e.partial(), plan), InvalidArgument);
  }
}

TEST_CASE("classifying where xi lives", "[word][xi]") {
  auto const t = build_commutator_table(fixture("derived-exp-shift"), SamplePlan{});
  auto const x = t.entry(0, 1);
  CHECK(classify_origin(x, t) == XiOrigin::table_entry);
  CHECK(classify_origin(affine_compose(x, x), t) == XiOrigin::product_of_two_entries);
  CHECK(classify_origin(affine_compose(x, affine_compose(x, x)), t)
        == XiOrigin::group_only);
}

TEST_CASE("normal forms of small words", "[word][normal-form]") {
  SamplePlan const plan;
  auto const       s   = fixture("example-2.1-exp");
  auto const       ctx = RewriteContext::build(s, plan);
  REQUIRE(ctx.group.size() == 2);

  auto nf = normal_form(Word::from_one_based({2, 1, 2}), s, ctx.table, ctx.group, plan);
  CHECK(approx_equal(nf.prefix, minus_z));
  CHECK(nf.exponents == std::vector<std::size_t>{1, 2});
  CHECK(nf.swaps == 1);
  CHECK(nf.prefix_in_table);
  CHECK(nf.residual < 1e-9);

  nf = normal_form(Word::from_one_based({1, 2}), s, ctx.table, ctx.group, plan);
  CHECK(nf.prefix == AffineMap::identity());
  CHECK(nf.exponents == std::vector<std::size_t>{1, 1});
  CHECK(nf.swaps == 0);

  // f2 f2 f1 = -f(f(f)); the inner flip is absorbed by the even f2.
  nf = normal_form(Word::from_one_based({2, 2, 1}), s, ctx.table, ctx.group, plan);
  CHECK(approx_equal(nf.prefix, minus_z));
  CHECK(nf.swaps == 2);
  CHECK(nf.migrations == 1);
  CHECK(nf.xi_table_entry == 1);
}

TEST_CASE("normal forms agree with the words they rewrite",
          "[word][normal-form][property]") {
  SamplePlan const plan;
  SamplePlan       oracle_plan = plan;
  oracle_plan.seed             = 2024;
  for (auto const* name : {"example-2.1-exp", "example-2.1-cos"}) {
    auto const      s   = fixture(name);
    auto const      ctx = RewriteContext::build(s, plan);
    std::mt19937_64 gen(11);
    for (int k = 0; k < 60; ++k) {
      auto const w  = random_word(gen, s.size(), 5);
      auto const nf = normal_form(w, s, ctx.table, ctx.group, plan);
      INFO(name << " word of length " << w.size());
      std::vector<std::size_t> counts(s.size(), 0);
      for (auto l : w.letters()) {
        ++counts[l];
      }
      CHECK(nf.exponents == counts);
      CHECK(ctx.group.contains(nf.prefix));
      auto const rep = numerically_equal(normal_form_expr(nf, s), word_expr(w, s), oracle_plan);
      CHECK(rep.verdict != Verdict::not_equal);
    }
  }
}

TEST_CASE("normal form rejects a wrong table", "[word][normal-form]") {
  SamplePlan const plan;
  auto const       s = fixture("example-2.1-exp");
  CommutatorTable  wrong(2);
  auto const       g = group_closure(std::vector<AffineMap>{minus_z});
  CHECK_THROWS_AS(normal_form(Word::from_one_based({2, 1}), s, wrong, g, plan),
                  VerificationFailed);
  CHECK_THROWS_AS(normal_form(Word::from_one_based({1}), s, CommutatorTable(3), g, plan),
                  InvalidArgument);
}

TEST_CASE("an infinite commutator group cannot be rewritten", "[word][normal-form]") {
  CHECK_THROWS_AS(RewriteContext::build(fixture("derived-exp-shift"), SamplePlan{}),
                  ClosureOverflow);
}
