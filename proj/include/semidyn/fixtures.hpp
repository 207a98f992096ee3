#ifndef SEMIDYN_FIXTURES_HPP_
#define SEMIDYN_FIXTURES_HPP_

// Built-in presentations. The constant lambda is a recorded choice per
// fixture, not a canonical value.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semidyn/affine.hpp"
#include "semidyn/commutator.hpp"
#include "semidyn/error.hpp"
#include "semidyn/expr.hpp"
#include "semidyn/grid.hpp"

namespace semidyn {

  struct Fixture {
    std::string name;
    std::string description;
    Complex     lambda;  // default constant, overridable per run
    // Generator texts in prefix notation for a given lambda; f1, f2, ...
    // refer to earlier generators.
    std::function<std::vector<std::string>(Complex)> generators;
    // The commutator used for conjugation and transport by default.
    std::optional<AffineMap> phi;

    [[nodiscard]] std::vector<std::string> generator_texts(
        std::optional<Complex> lambda_override = std::nullopt) const {
      return generators(lambda_override.value_or(lambda));
    }

    [[nodiscard]] SemigroupPresentation presentation(
        std::optional<Complex> lambda_override = std::nullopt) const {
      std::vector<FunctionExpr> gens;
      for (auto const& t : generator_texts(lambda_override)) {
        gens.push_back(parse_prefix(t, gens));
      }
      return {std::move(gens), name};
    }

    // [-4, 4]^2 at 512 x 512, max_iter 100, escape radius 50.
    [[nodiscard]] static GridSpec standard_window() {
      return GridSpec::window(-4.0, 4.0, -4.0, 4.0, 512, 512);
    }
  };

  inline std::vector<Fixture> const& fixtures() {
    auto const minus_z = AffineMap({-1.0, 0.0}, {0.0, 0.0});
    static std::vector<Fixture> const all = {
        // lambda = -1 makes 0 a superattracting fixed point of both f and -f;
        // for lambda = 0.2 or 1 every cell of the standard window escapes.
        {"example-2.1-exp",
         "f = exp(z^2) + lambda, g = -f; commutator z -> -z",
         {-1.0, 0.0},
         [](Complex lam) {
           return std::vector<std::string>{
               "add(exp(pow(z,2)), const(" + format_complex(lam) + "))",
               "neg(f1)"};
         },
         minus_z},
        {"example-2.1-cos",
         "f = lambda cos z, g = -f; commutator z -> -z",
         {1.0, 0.0},
         [](Complex lam) {
           if (lam == Complex(1.0)) {
             return std::vector<std::string>{"cos(z)", "neg(f1)"};
           }
           return std::vector<std::string>{
               "mul(const(" + format_complex(lam) + "), cos(z))", "neg(f1)"};
         },
         minus_z},
        {"derived-exp-shift",
         "f = exp(z), g = exp(z) + lambda; commutator "
         "z -> e^lambda (z - lambda)",
         {1.0, 0.0},
         [](Complex lam) {
           return std::vector<std::string>{
               "exp(z)", "add(exp(z), const(" + format_complex(lam) + "))"};
         },
         std::nullopt},
        {"derived-non-pair",
         "f = exp(z), g = exp(z^2); no affine commutator",
         {0.0, 0.0},
         [](Complex) {
           return std::vector<std::string>{"exp(z)", "exp(pow(z,2))"};
         },
         std::nullopt},
    };
    return all;
  }

  // Aliases name the same presentation under the example that reuses it.
  inline Fixture const& find_fixture(std::string_view name) {
    if (name == "example-3.1-cos") {
      name = "example-2.1-cos";
    } else if (name == "example-3.2-exp") {
      name = "example-2.1-exp";
    }
    for (auto const& f : fixtures()) {
      if (f.name == name) {
        return f;
      }
    }
    throw InvalidArgument("unknown fixture '" + std::string(name) + "'");
  }

}  // namespace semidyn

#endif  // SEMIDYN_FIXTURES_HPP_
