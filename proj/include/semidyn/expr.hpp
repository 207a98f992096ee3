#ifndef SEMIDYN_EXPR_HPP_
#define SEMIDYN_EXPR_HPP_

// Immutable expression trees for entire functions of one complex variable.
//
// Nodes are shared between trees (composition never copies subtrees), so a
// FunctionExpr is cheap to copy and safe to read from many threads at once.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semidyn/complex.hpp"
#include "semidyn/error.hpp"

namespace semidyn {

  // Any intermediate value with |v| above this is reported as overflow.
  inline constexpr double overflow_ceiling = 1e150;

  inline bool overflows(Complex v) noexcept {
    // Written so that NaN also counts as overflow.
    return !(norm(v) <= overflow_ceiling * overflow_ceiling);
  }

  enum class NodeKind : std::uint8_t {
    identity,
    constant,
    affine,
    power,
    exp,
    cos,
    sin,
    sum,
    product,
    negate,
    compose
  };

  class FunctionExpr {
   public:
    struct Node {
      NodeKind                  kind     = NodeKind::identity;
      Complex                   c0       = {};  // constant value, or affine a
      Complex                   c1       = {};  // affine b
      unsigned                  exponent = 0;   // power only
      std::vector<FunctionExpr> children = {};  // compose: {outer, inner}
    };

    // The identity map z -> z.
    FunctionExpr() : _node(identity_node()) {}

    explicit FunctionExpr(Node node)
        : _node(std::make_shared<Node const>(std::move(node))) {}

    [[nodiscard]] NodeKind kind() const noexcept {
      return _node->kind;
    }
    [[nodiscard]] Node const& node() const noexcept {
      return *_node;
    }
    [[nodiscard]] std::span<FunctionExpr const> children() const noexcept {
      return _node->children;
    }

    [[nodiscard]] bool same_node(FunctionExpr const& other) const noexcept {
      return _node == other._node;
    }

   private:
    static std::shared_ptr<Node const> const& identity_node() {
      static auto const node = std::make_shared<Node const>(Node{});
      return node;
    }

    std::shared_ptr<Node const> _node;
  };

  // Structural equality: same shape, same stored constants (bitwise).
  inline bool structurally_equal(FunctionExpr const& x, FunctionExpr const& y) {
    if (x.same_node(y)) {
      return true;
    }
    auto const& a = x.node();
    auto const& b = y.node();
    if (a.kind != b.kind || a.exponent != b.exponent
        || a.children.size() != b.children.size()) {
      return false;
    }
    if (a.kind == NodeKind::constant || a.kind == NodeKind::affine) {
      if (!(a.c0 == b.c0) || !(a.c1 == b.c1)) {
        return false;
      }
    }
    for (std::size_t k = 0; k < a.children.size(); ++k) {
      if (!structurally_equal(a.children[k], b.children[k])) {
        return false;
      }
    }
    return true;
  }

  ////////////////////////////////////////////////////////////////////////
  // Builders
  ////////////////////////////////////////////////////////////////////////

  namespace fn {

    inline FunctionExpr z() {
      return FunctionExpr();
    }

    inline FunctionExpr constant(Complex c) {
      if (!is_finite(c)) {
        throw InvalidArgument("constant must be finite");
      }
      return FunctionExpr({.kind = NodeKind::constant, .c0 = c});
    }

    // z -> a z + b, applied to z itself.
    inline FunctionExpr affine(Complex a, Complex b) {
      if (!is_finite(a) || !is_finite(b)) {
        throw InvalidArgument("affine coefficients must be finite");
      }
      return FunctionExpr({.kind = NodeKind::affine, .c0 = a, .c1 = b});
    }

    inline FunctionExpr pow(FunctionExpr base, unsigned k) {
      if (k < 1) {
        throw InvalidArgument("power exponent must be at least 1");
      }
      return FunctionExpr({.kind     = NodeKind::power,
                           .exponent = k,
                           .children = {std::move(base)}});
    }

    inline FunctionExpr unary(NodeKind kind, FunctionExpr inner) {
      return FunctionExpr({.kind = kind, .children = {std::move(inner)}});
    }

    inline FunctionExpr exp(FunctionExpr inner = z()) {
      return unary(NodeKind::exp, std::move(inner));
    }
    inline FunctionExpr cos(FunctionExpr inner = z()) {
      return unary(NodeKind::cos, std::move(inner));
    }
    inline FunctionExpr sin(FunctionExpr inner = z()) {
      return unary(NodeKind::sin, std::move(inner));
    }
    inline FunctionExpr neg(FunctionExpr inner) {
      return unary(NodeKind::negate, std::move(inner));
    }

    inline FunctionExpr nary(NodeKind kind, std::vector<FunctionExpr> terms) {
      if (terms.empty()) {
        throw InvalidArgument("sum/product needs at least one term");
      }
      return FunctionExpr({.kind = kind, .children = std::move(terms)});
    }

    inline FunctionExpr add(std::vector<FunctionExpr> terms) {
      return nary(NodeKind::sum, std::move(terms));
    }
    inline FunctionExpr add(FunctionExpr x, FunctionExpr y) {
      return add(std::vector<FunctionExpr>{std::move(x), std::move(y)});
    }
    inline FunctionExpr mul(std::vector<FunctionExpr> terms) {
      return nary(NodeKind::product, std::move(terms));
    }
    inline FunctionExpr mul(FunctionExpr x, FunctionExpr y) {
      return mul(std::vector<FunctionExpr>{std::move(x), std::move(y)});
    }

    // outer(inner(z)). Only the identity is folded away; anything else would
    // change the floating point operation sequence.
    inline FunctionExpr compose(FunctionExpr outer, FunctionExpr inner) {
      if (outer.kind() == NodeKind::identity) {
        return inner;
      }
      if (inner.kind() == NodeKind::identity) {
        return outer;
      }
      return FunctionExpr({.kind     = NodeKind::compose,
                           .children = {std::move(outer), std::move(inner)}});
    }

    // f^n, the n-fold self composition.
    inline FunctionExpr iterate(FunctionExpr const& f, unsigned n) {
      FunctionExpr result = z();
      for (unsigned k = 0; k < n; ++k) {
        result = compose(f, result);
      }
      return result;
    }

  }  // namespace fn

  ////////////////////////////////////////////////////////////////////////
  // Structure queries
  ////////////////////////////////////////////////////////////////////////

  inline bool depends_on_z(FunctionExpr const& e) {
    switch (e.kind()) {
      case NodeKind::identity:
      case NodeKind::affine:
        return true;
      case NodeKind::constant:
        return false;
      case NodeKind::compose:
        return depends_on_z(e.children()[0]) && depends_on_z(e.children()[1]);
      default:
        for (auto const& c : e.children()) {
          if (depends_on_z(c)) {
            return true;
          }
        }
        return false;
    }
  }

  // True if some exp/cos/sin node has an argument that varies with z. This is
  // the structural stand-in for "transcendental entire function".
  inline bool is_transcendental(FunctionExpr const& e) {
    switch (e.kind()) {
      case NodeKind::exp:
      case NodeKind::cos:
      case NodeKind::sin:
        if (depends_on_z(e.children()[0])) {
          return true;
        }
        break;
      case NodeKind::compose:
        // exp(const) composed with anything is constant; a transcendental
        // outer with a z-dependent inner is transcendental.
        return depends_on_z(e)
               && (is_transcendental(e.children()[0])
                   || is_transcendental(e.children()[1]));
      default:
        break;
    }
    for (auto const& c : e.children()) {
      if (is_transcendental(c)) {
        return true;
      }
    }
    return false;
  }

  inline std::size_t node_count(FunctionExpr const& e) {
    std::size_t n = 1;
    for (auto const& c : e.children()) {
      n += node_count(c);
    }
    return n;
  }

  ////////////////////////////////////////////////////////////////////////
  // Evaluation
  ////////////////////////////////////////////////////////////////////////

  namespace detail {
    inline Complex power_by_multiplication(Complex base, unsigned k) noexcept {
      Complex r = base;
      for (unsigned j = 1; j < k; ++j) {
        r = r * base;
      }
      return r;
    }
  }  // namespace detail

  // f(z), or nullopt if any intermediate value overflows.
  inline std::optional<Complex> eval(FunctionExpr const& e, Complex z) {
    auto const& n = e.node();
    std::optional<Complex> v;
    switch (n.kind) {
      case NodeKind::identity:
        v = z;
        break;
      case NodeKind::constant:
        v = n.c0;
        break;
      case NodeKind::affine:
        v = n.c0 * z + n.c1;
        break;
      case NodeKind::power: {
        auto b = eval(n.children[0], z);
        if (!b) {
          return std::nullopt;
        }
        v = detail::power_by_multiplication(*b, n.exponent);
        break;
      }
      case NodeKind::exp:
      case NodeKind::cos:
      case NodeKind::sin:
      case NodeKind::negate: {
        auto x = eval(n.children[0], z);
        if (!x) {
          return std::nullopt;
        }
        v = n.kind == NodeKind::exp   ? exp(*x)
            : n.kind == NodeKind::cos ? cos(*x)
            : n.kind == NodeKind::sin ? sin(*x)
                                      : -*x;
        break;
      }
      case NodeKind::sum:
      case NodeKind::product: {
        auto acc = eval(n.children[0], z);
        if (!acc) {
          return std::nullopt;
        }
        for (std::size_t k = 1; k < n.children.size(); ++k) {
          auto t = eval(n.children[k], z);
          if (!t) {
            return std::nullopt;
          }
          *acc = n.kind == NodeKind::sum ? *acc + *t : *acc * *t;
        }
        v = acc;
        break;
      }
      case NodeKind::compose: {
        auto inner = eval(n.children[1], z);
        if (!inner) {
          return std::nullopt;
        }
        return eval(n.children[0], *inner);
      }
    }
    if (overflows(*v)) {
      return std::nullopt;
    }
    return v;
  }

  // A flattened postfix form of an expression for hot loops. Performs exactly
  // the operations of eval() in the same order, so results agree bitwise.
  class CompiledExpr {
   public:
    CompiledExpr() : CompiledExpr(fn::z()) {}

    explicit CompiledExpr(FunctionExpr const& e) {
      std::size_t depth = 0, args = 1;
      emit(e, depth, args);
    }

    [[nodiscard]] std::optional<Complex> operator()(Complex z) const {
      constexpr std::size_t inline_capacity = 32;
      Complex               stack_buf[inline_capacity];
      Complex               arg_buf[inline_capacity];
      std::vector<Complex>  stack_heap, arg_heap;
      Complex*              stack = stack_buf;
      Complex*              args  = arg_buf;
      if (_max_stack > inline_capacity) {
        stack_heap.resize(_max_stack);
        stack = stack_heap.data();
      }
      if (_max_args > inline_capacity) {
        arg_heap.resize(_max_args);
        args = arg_heap.data();
      }
      std::size_t sp = 0, ap = 0;
      args[ap++]     = z;
      for (auto const& in : _code) {
        switch (in.op) {
          case Op::load_arg:
            stack[sp++] = args[ap - 1];
            break;
          case Op::push_const:
            stack[sp++] = in.c0;
            break;
          case Op::affine:
            stack[sp++] = in.c0 * args[ap - 1] + in.c1;
            break;
          case Op::power:
            stack[sp - 1]
                = detail::power_by_multiplication(stack[sp - 1], in.count);
            break;
          case Op::exp:
            stack[sp - 1] = exp(stack[sp - 1]);
            break;
          case Op::cos:
            stack[sp - 1] = cos(stack[sp - 1]);
            break;
          case Op::sin:
            stack[sp - 1] = sin(stack[sp - 1]);
            break;
          case Op::negate:
            stack[sp - 1] = -stack[sp - 1];
            break;
          case Op::sum: {
            std::size_t const base = sp - in.count;
            Complex           acc  = stack[base];
            for (std::size_t k = 1; k < in.count; ++k) {
              acc = acc + stack[base + k];
            }
            sp          = base + 1;
            stack[base] = acc;
            break;
          }
          case Op::product: {
            std::size_t const base = sp - in.count;
            Complex           acc  = stack[base];
            for (std::size_t k = 1; k < in.count; ++k) {
              acc = acc * stack[base + k];
            }
            sp          = base + 1;
            stack[base] = acc;
            break;
          }
          case Op::enter:
            args[ap++] = stack[--sp];
            continue;
          case Op::leave:
            --ap;
            continue;
        }
        if (overflows(stack[sp - 1])) {
          return std::nullopt;
        }
      }
      return stack[0];
    }

   private:
    enum class Op : std::uint8_t {
      load_arg,
      push_const,
      affine,
      power,
      exp,
      cos,
      sin,
      negate,
      sum,
      product,
      enter,
      leave
    };

    struct Instr {
      Op       op;
      unsigned count = 0;
      Complex  c0    = {};
      Complex  c1    = {};
    };

    void push(Instr in, std::size_t& depth, std::ptrdiff_t delta) {
      _code.push_back(in);
      depth = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(depth)
                                       + delta);
      _max_stack = std::max(_max_stack, depth);
    }

    void emit(FunctionExpr const& e, std::size_t& depth, std::size_t& args) {
      auto const& n = e.node();
      switch (n.kind) {
        case NodeKind::identity:
          push({Op::load_arg}, depth, 1);
          return;
        case NodeKind::constant:
          push({Op::push_const, 0, n.c0}, depth, 1);
          return;
        case NodeKind::affine:
          push({Op::affine, 0, n.c0, n.c1}, depth, 1);
          return;
        case NodeKind::power:
          emit(n.children[0], depth, args);
          push({Op::power, n.exponent}, depth, 0);
          return;
        case NodeKind::exp:
        case NodeKind::cos:
        case NodeKind::sin:
        case NodeKind::negate: {
          emit(n.children[0], depth, args);
          Op const op = n.kind == NodeKind::exp   ? Op::exp
                        : n.kind == NodeKind::cos ? Op::cos
                        : n.kind == NodeKind::sin ? Op::sin
                                                  : Op::negate;
          push({op}, depth, 0);
          return;
        }
        case NodeKind::sum:
        case NodeKind::product: {
          for (auto const& c : n.children) {
            emit(c, depth, args);
          }
          auto const count = static_cast<unsigned>(n.children.size());
          push({n.kind == NodeKind::sum ? Op::sum : Op::product, count},
               depth,
               1 - static_cast<std::ptrdiff_t>(count));
          return;
        }
        case NodeKind::compose:
          emit(n.children[1], depth, args);
          push({Op::enter}, depth, -1);
          ++args;
          _max_args = std::max(_max_args, args);
          emit(n.children[0], depth, args);
          --args;
          push({Op::leave}, depth, 0);
          return;
      }
    }

    std::vector<Instr> _code;
    std::size_t        _max_stack = 0;
    std::size_t        _max_args  = 1;
  };

  ////////////////////////////////////////////////////////////////////////
  // Prefix notation
  //
  //   z | const(c) | affine(a, b) | pow(e,k) | exp(e) | cos(e) | sin(e)
  //     | neg(e) | add(e, e, ...) | mul(e, e, ...) | compose(outer, inner)
  //
  // with complex literals written re+imi. When parsing a presentation, the
  // names f1, f2, ... refer to previously parsed generators.
  ////////////////////////////////////////////////////////////////////////

  inline std::string to_prefix(FunctionExpr const& e) {
    auto const& n = e.node();
    auto        list = [&n](std::string_view head) {
      std::string out(head);
      out += '(';
      for (std::size_t k = 0; k < n.children.size(); ++k) {
        if (k > 0) {
          out += ", ";
        }
        out += to_prefix(n.children[k]);
      }
      out += ')';
      return out;
    };
    switch (n.kind) {
      case NodeKind::identity:
        return "z";
      case NodeKind::constant:
        return "const(" + format_complex(n.c0) + ")";
      case NodeKind::affine:
        return "affine(" + format_complex(n.c0) + ", " + format_complex(n.c1)
               + ")";
      case NodeKind::power:
        return "pow(" + to_prefix(n.children[0]) + ","
               + std::to_string(n.exponent) + ")";
      case NodeKind::exp:
        return list("exp");
      case NodeKind::cos:
        return list("cos");
      case NodeKind::sin:
        return list("sin");
      case NodeKind::negate:
        return list("neg");
      case NodeKind::sum:
        return list("add");
      case NodeKind::product:
        return list("mul");
      case NodeKind::compose:
        return list("compose");
    }
    return {};
  }

  namespace detail {

    class PrefixParser {
     public:
      PrefixParser(std::string_view text, std::span<FunctionExpr const> refs)
          : _text(text), _refs(refs) {}

      FunctionExpr parse_all() {
        FunctionExpr e = parse_expr();
        skip_space();
        if (_pos != _text.size()) {
          fail("trailing characters");
        }
        return e;
      }

     private:
      [[noreturn]] void fail(std::string const& what) const {
        throw ParseError(what + " in '" + std::string(_text) + "'", _pos);
      }

      void skip_space() {
        while (_pos < _text.size()
               && (_text[_pos] == ' ' || _text[_pos] == '\t')) {
          ++_pos;
        }
      }

      void expect(char c) {
        skip_space();
        if (_pos >= _text.size() || _text[_pos] != c) {
          fail(std::string("expected '") + c + "'");
        }
        ++_pos;
      }

      bool peek(char c) {
        skip_space();
        return _pos < _text.size() && _text[_pos] == c;
      }

      std::string_view identifier() {
        skip_space();
        std::size_t start = _pos;
        while (_pos < _text.size()
               && (std::isalnum(static_cast<unsigned char>(_text[_pos]))
                   || _text[_pos] == '_')) {
          ++_pos;
        }
        if (start == _pos) {
          fail("expected a name");
        }
        return _text.substr(start, _pos - start);
      }

      // A literal runs to the next ',' or ')'.
      std::string_view literal() {
        skip_space();
        std::size_t start = _pos;
        while (_pos < _text.size() && _text[_pos] != ','
               && _text[_pos] != ')') {
          ++_pos;
        }
        std::size_t end = _pos;
        while (end > start && _text[end - 1] == ' ') {
          --end;
        }
        if (end == start) {
          fail("expected a literal");
        }
        return _text.substr(start, end - start);
      }

      Complex complex_literal() {
        auto const lit = literal();
        try {
          return parse_complex(lit);
        } catch (ParseError const&) {
          fail("invalid complex literal '" + std::string(lit) + "'");
        }
      }

      std::vector<FunctionExpr> arguments() {
        std::vector<FunctionExpr> out;
        expect('(');
        out.push_back(parse_expr());
        while (peek(',')) {
          ++_pos;
          out.push_back(parse_expr());
        }
        expect(')');
        return out;
      }

      FunctionExpr single_argument() {
        auto args = arguments();
        if (args.size() != 1) {
          fail("expected exactly one argument");
        }
        return std::move(args[0]);
      }

      FunctionExpr parse_expr() {
        auto const name = identifier();
        if (name == "z") {
          return fn::z();
        }
        if (name.size() > 1 && name[0] == 'f'
            && std::all_of(name.begin() + 1, name.end(), [](char c) {
                 return std::isdigit(static_cast<unsigned char>(c));
               })) {
          std::size_t idx = std::stoul(std::string(name.substr(1)));
          if (idx < 1 || idx > _refs.size()) {
            fail("unknown generator reference '" + std::string(name) + "'");
          }
          return _refs[idx - 1];
        }
        if (name == "const") {
          expect('(');
          Complex c = complex_literal();
          expect(')');
          return fn::constant(c);
        }
        if (name == "affine") {
          expect('(');
          Complex a = complex_literal();
          expect(',');
          Complex b = complex_literal();
          expect(')');
          return fn::affine(a, b);
        }
        if (name == "pow") {
          expect('(');
          FunctionExpr base = parse_expr();
          expect(',');
          auto const lit = literal();
          unsigned   k   = 0;
          auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), k);
          if (ec != std::errc() || ptr != lit.data() + lit.size() || k < 1) {
            fail("power exponent must be a positive integer");
          }
          expect(')');
          return fn::pow(std::move(base), k);
        }
        if (name == "exp") {
          return fn::exp(single_argument());
        }
        if (name == "cos") {
          return fn::cos(single_argument());
        }
        if (name == "sin") {
          return fn::sin(single_argument());
        }
        if (name == "neg") {
          return fn::neg(single_argument());
        }
        if (name == "add") {
          return fn::add(arguments());
        }
        if (name == "mul") {
          return fn::mul(arguments());
        }
        if (name == "compose") {
          auto args = arguments();
          if (args.size() != 2) {
            fail("compose takes (outer, inner)");
          }
          // Built directly so that parse(to_prefix(e)) preserves structure.
          return FunctionExpr({.kind     = NodeKind::compose,
                               .children = std::move(args)});
        }
        fail("unknown function '" + std::string(name) + "'");
      }

      std::string_view              _text;
      std::span<FunctionExpr const> _refs;
      std::size_t                   _pos = 0;
    };

  }  // namespace detail

  inline FunctionExpr parse_prefix(std::string_view text,
                                   std::span<FunctionExpr const> refs = {}) {
    return detail::PrefixParser(text, refs).parse_all();
  }

}  // namespace semidyn

#endif  // SEMIDYN_EXPR_HPP_
