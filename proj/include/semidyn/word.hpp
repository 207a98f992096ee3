#ifndef SEMIDYN_WORD_HPP_
#define SEMIDYN_WORD_HPP_

// Words over the generators of a presentation and their normal form
//
//     w = prefix o f_1^{t_1} o f_2^{t_2} o ... o f_n^{t_n},
//
// obtained by bubble sorting the letters. Each transposition of adjacent
// letters introduces the commutator from the table, and that affine map is
// pushed to the left end of the word one generator at a time using
// f o phi = xi o f with xi found in the group generated by the table.

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "semidyn/affine.hpp"
#include "semidyn/commutator.hpp"
#include "semidyn/error.hpp"
#include "semidyn/expr.hpp"
#include "semidyn/sampling.hpp"

namespace semidyn {

  inline constexpr std::size_t max_word_length = 32;

  // letters = {i_k, ..., i_1} denotes f_{i_k} o ... o f_{i_1}: the rightmost
  // letter is applied first. Letters are 0-based; reports use 1-based.
  class Word {
   public:
    Word() = default;

    explicit Word(std::vector<std::size_t> letters)
        : _letters(std::move(letters)) {
      if (_letters.empty()) {
        throw InvalidArgument("a word needs at least one letter");
      }
      if (_letters.size() > max_word_length) {
        throw InvalidArgument("words are capped at "
                              + std::to_string(max_word_length) + " letters");
      }
    }

    // From 1-based generator numbers, as written in reports.
    static Word from_one_based(std::vector<std::size_t> const& numbers) {
      std::vector<std::size_t> letters;
      letters.reserve(numbers.size());
      for (auto k : numbers) {
        if (k < 1) {
          throw InvalidArgument("generator numbers start at 1");
        }
        letters.push_back(k - 1);
      }
      return Word(std::move(letters));
    }

    [[nodiscard]] std::vector<std::size_t> one_based() const {
      std::vector<std::size_t> out;
      out.reserve(_letters.size());
      for (auto k : _letters) {
        out.push_back(k + 1);
      }
      return out;
    }

    [[nodiscard]] std::vector<std::size_t> const& letters() const noexcept {
      return _letters;
    }
    [[nodiscard]] std::size_t size() const noexcept {
      return _letters.size();
    }

    void check_against(SemigroupPresentation const& s) const {
      if (_letters.empty()) {
        throw InvalidArgument("empty word");
      }
      for (auto k : _letters) {
        if (k >= s.size()) {
          throw InvalidArgument("word letter " + std::to_string(k + 1)
                                + " exceeds the generator count");
        }
      }
    }

   private:
    std::vector<std::size_t> _letters;
  };

  inline std::optional<Complex> word_eval(Word const&                  w,
                                          SemigroupPresentation const& s,
                                          Complex                      z) {
    w.check_against(s);
    std::optional<Complex> v = z;
    for (auto it = w.letters().rbegin(); it != w.letters().rend(); ++it) {
      v = eval(s[*it], *v);
      if (!v) {
        return std::nullopt;
      }
    }
    return v;
  }

  inline FunctionExpr word_expr(Word const& w, SemigroupPresentation const& s) {
    w.check_against(s);
    FunctionExpr e = s[w.letters().back()];
    for (std::size_t k = w.size() - 1; k-- > 0;) {
      e = fn::compose(s[w.letters()[k]], e);
    }
    return e;
  }

  // Uniformly random letters, uniformly random length in [1, max_length].
  inline Word random_word(std::mt19937_64& gen,
                          std::size_t      generators,
                          std::size_t      max_length) {
    if (max_length < 1 || max_length > max_word_length || generators < 1) {
      throw InvalidArgument("invalid random word parameters");
    }
    std::size_t const len = 1 + static_cast<std::size_t>(gen() % max_length);
    std::vector<std::size_t> letters(len);
    for (auto& l : letters) {
      l = static_cast<std::size_t>(gen() % generators);
    }
    return Word(std::move(letters));
  }

  ////////////////////////////////////////////////////////////////////////
  // xi resolution
  ////////////////////////////////////////////////////////////////////////

  class NoXi : public Error {
   public:
    NoXi() : Error("no element xi of G satisfies f o phi = xi o f") {}
  };

  class AmbiguousXi : public Error {
   public:
    AmbiguousXi()
        : Error("two elements of G satisfy f o phi = xi o f; "
                "the tolerance is too loose") {}
  };

  // Where a resolved xi sits relative to the raw commutator table.
  enum class XiOrigin { table_entry, product_of_two_entries, group_only };

  inline XiOrigin classify_origin(AffineMap const&       xi,
                                  CommutatorTable const& table) {
    if (table.contains(xi)) {
      return XiOrigin::table_entry;
    }
    auto const entries = table.distinct_entries();
    for (auto const& x : entries) {
      for (auto const& y : entries) {
        if (approx_equal(affine_compose(x, y), xi)) {
          return XiOrigin::product_of_two_entries;
        }
      }
    }
    return XiOrigin::group_only;
  }

  namespace detail {
    inline void require_closed(AffineGroup const& g) {
      if (!g.closed()) {
        throw InvalidArgument("xi resolution needs a closed group");
      }
    }
  }  // namespace detail

  // Index in G of the unique xi with f o phi = xi o f.
  inline std::size_t resolve_xi_index(FunctionExpr const& f,
                                      AffineMap const&    phi,
                                      AffineGroup const&  group,
                                      SamplePlan const&   plan) {
    detail::require_closed(group);
    std::optional<std::size_t> found;
    for (std::size_t k = 0; k < group.size(); ++k) {
      AffineMap const& xi  = group[k];
      auto const       rep = numerically_equal_fn(
          [&](Complex z) { return eval(f, phi(z)); },
          [&](Complex z) -> std::optional<Complex> {
            auto v = eval(f, z);
            if (!v) {
              return std::nullopt;
            }
            return xi(*v);
          },
          plan);
      if (rep.equal()) {
        if (found) {
          throw AmbiguousXi();
        }
        found = k;
      }
    }
    if (!found) {
      throw NoXi();
    }
    return *found;
  }

  inline AffineMap resolve_xi(FunctionExpr const& f,
                              AffineMap const&    phi,
                              AffineGroup const&  group,
                              SamplePlan const&   plan) {
    return group[resolve_xi_index(f, phi, group, plan)];
  }

  // Whether some xi in G satisfies phi o f = f o xi. Unlike the right-hand
  // version this can fail even for nearly abelian semigroups.
  inline bool left_resolve_exists(FunctionExpr const& f,
                                  AffineMap const&    phi,
                                  AffineGroup const&  group,
                                  SamplePlan const&   plan) {
    detail::require_closed(group);
    for (auto const& xi : group.elements()) {
      auto const rep = numerically_equal_fn(
          [&](Complex z) -> std::optional<Complex> {
            auto v = eval(f, z);
            if (!v) {
              return std::nullopt;
            }
            return phi(*v);
          },
          [&](Complex z) { return eval(f, xi(z)); },
          plan);
      if (rep.equal()) {
        return true;
      }
    }
    return false;
  }

  ////////////////////////////////////////////////////////////////////////
  // Normal form
  ////////////////////////////////////////////////////////////////////////

  struct NormalForm {
    AffineMap                prefix;
    std::size_t              prefix_index = 0;  // position in G
    std::vector<std::size_t> exponents;         // t_1, ..., t_n
    double                   residual = 0.0;    // oracle comparison
    bool                     prefix_in_table = false;
    std::size_t              swaps           = 0;
    std::size_t              migrations      = 0;
    // How each migrated xi relates to the table, counted by XiOrigin.
    std::size_t xi_table_entry    = 0;
    std::size_t xi_product_of_two = 0;
    std::size_t xi_group_only     = 0;
  };

  class VerificationFailed : public Error {
   public:
    explicit VerificationFailed(double residual)
        : Error("normal form does not evaluate to the original word "
                "(residual "
                + format_double(residual) + ")"),
          _residual(residual) {}

    [[nodiscard]] double residual() const noexcept {
      return _residual;
    }

   private:
    double _residual;
  };

  inline std::optional<Complex> eval_normal_form(NormalForm const& nf,
                                                 SemigroupPresentation const& s,
                                                 Complex z) {
    std::optional<Complex> v = z;
    for (std::size_t i = s.size(); i-- > 0;) {
      for (std::size_t t = 0; t < nf.exponents[i]; ++t) {
        v = eval(s[i], *v);
        if (!v) {
          return std::nullopt;
        }
      }
    }
    return nf.prefix(*v);
  }

  inline NormalForm normal_form(Word const&                  w,
                                SemigroupPresentation const& s,
                                CommutatorTable const&       table,
                                AffineGroup const&           group,
                                SamplePlan const&            plan) {
    w.check_against(s);
    detail::require_closed(group);
    if (table.size() != s.size()) {
      throw InvalidArgument("commutator table does not match the presentation");
    }

    // Table entries as indices into G.
    std::vector<std::size_t> entry_index(s.size() * s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        auto k = group.find(table.entry(i, j));
        if (!k) {
          throw InvalidArgument("table entry is not an element of G");
        }
        entry_index[i * s.size() + j] = *k;
      }
    }

    // (generator, G index) -> G index of xi with f o g_k = xi o f.
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> xi_cache;
    NormalForm                                                 nf;
    auto move_left = [&](std::size_t gen, std::size_t phi) {
      auto key = std::make_pair(gen, phi);
      auto it  = xi_cache.find(key);
      if (it == xi_cache.end()) {
        std::size_t xi = resolve_xi_index(s[gen], group[phi], group, plan);
        it             = xi_cache.emplace(key, xi).first;
        switch (classify_origin(group[xi], table)) {
          case XiOrigin::table_entry:
            ++nf.xi_table_entry;
            break;
          case XiOrigin::product_of_two_entries:
            ++nf.xi_product_of_two;
            break;
          case XiOrigin::group_only:
            ++nf.xi_group_only;
            break;
        }
      }
      ++nf.migrations;
      return it->second;
    };

    std::vector<std::size_t> letters = w.letters();
    std::size_t              prefix  = 0;  // identity is element 0 of G
    bool                     sorted  = false;
    while (!sorted) {
      sorted = true;
      for (std::size_t p = 0; p + 1 < letters.size(); ++p) {
        std::size_t const i = letters[p], j = letters[p + 1];
        if (i <= j) {
          continue;
        }
        sorted = false;
        ++nf.swaps;
        // ... o f_i o f_j o ...  =  ... o [f_i, f_j] o f_j o f_i o ...
        std::size_t phi = entry_index[i * s.size() + j];
        std::swap(letters[p], letters[p + 1]);
        // Carry the commutator past letters[p-1], ..., letters[0].
        for (std::size_t k = p; k-- > 0;) {
          if (phi == 0) {
            break;
          }
          phi = move_left(letters[k], phi);
        }
        auto next = group.find(affine_compose(group[prefix], group[phi]));
        if (!next) {
          throw InvalidArgument("G is not closed under composition");
        }
        prefix = *next;
      }
    }

    nf.prefix_index = prefix;
    nf.prefix       = group[prefix];
    nf.exponents.assign(s.size(), 0);
    for (auto l : letters) {
      ++nf.exponents[l];
    }
    nf.prefix_in_table = table.contains(nf.prefix);

    auto const rep = numerically_equal_fn(
        [&](Complex z) { return word_eval(w, s, z); },
        [&](Complex z) { return eval_normal_form(nf, s, z); },
        plan);
    nf.residual = rep.max_error;
    if (!rep.equal()) {
      throw VerificationFailed(rep.verdict == Verdict::indeterminate
                                   ? std::numeric_limits<double>::infinity()
                                   : rep.max_error);
    }
    return nf;
  }

  // Convenience: table and G computed from the presentation.
  struct RewriteContext {
    CommutatorTable table;
    AffineGroup     group;

    static RewriteContext build(SemigroupPresentation const& s,
                                SamplePlan const&            plan,
                                std::size_t                  cap = 64) {
      CommutatorTable table   = build_commutator_table(s, plan);
      auto const      entries = table.distinct_entries();
      AffineGroup     group   = group_closure(entries, cap);
      return {std::move(table), std::move(group)};
    }
  };

}  // namespace semidyn

#endif  // SEMIDYN_WORD_HPP_
