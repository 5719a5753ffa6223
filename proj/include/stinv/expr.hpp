#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "stinv/error.hpp"

namespace stinv {

/// Field expressions over x and t.
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?          right-associative
///   primary := number | 'x' | 't' | fn '(' expr ')' | '(' expr ')'
///   fn      := 'sin' | 'cos' | 'exp'
///
/// `-x^2` parses as -(x^2).
class Expression {
 public:
  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    Expression e;
    e.root_ = p.expr();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
    e.text_ = std::string(text);
    return e;
  }

  double operator()(double x, double t) const { return root_->eval(x, t); }
  const std::string& text() const { return text_; }

  std::function<double(double, double)> field() const {
    return [root = root_](double x, double t) { return root->eval(x, t); };
  }

 private:
  struct Node {
    enum Kind { Num, X, T, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp } kind;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;

    double eval(double x, double t) const {
      switch (kind) {
        case Num: return value;
        case X: return x;
        case T: return t;
        case Add: return a->eval(x, t) + b->eval(x, t);
        case Sub: return a->eval(x, t) - b->eval(x, t);
        case Mul: return a->eval(x, t) * b->eval(x, t);
        case Div: return a->eval(x, t) / b->eval(x, t);
        case Pow: return std::pow(a->eval(x, t), b->eval(x, t));
        case Neg: return -a->eval(x, t);
        case Sin: return std::sin(a->eval(x, t));
        case Cos: return std::cos(a->eval(x, t));
        case Exp: return std::exp(a->eval(x, t));
      }
      return 0.0;
    }
  };
  using NodePtr = std::shared_ptr<const Node>;

  static NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    n->value = v;
    return n;
  }

  struct Parser {
    std::string_view s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& msg) const {
      throw Error(ErrorCode::ParseError, "expression '" + std::string(s) + "' at column " + std::to_string(pos + 1) +
                                             ": " + msg);
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    NodePtr expr() {
      NodePtr lhs = term();
      for (;;) {
        if (accept('+')) lhs = make(Node::Add, lhs, term());
        else if (accept('-')) lhs = make(Node::Sub, lhs, term());
        else return lhs;
      }
    }
    NodePtr term() {
      NodePtr lhs = unary();
      for (;;) {
        if (accept('*')) lhs = make(Node::Mul, lhs, unary());
        else if (accept('/')) lhs = make(Node::Div, lhs, unary());
        else return lhs;
      }
    }
    NodePtr unary() {
      if (accept('-')) return make(Node::Neg, unary());
      if (accept('+')) return unary();
      return power();
    }
    NodePtr power() {
      NodePtr base = primary();
      if (accept('^')) return make(Node::Pow, base, unary());
      return base;
    }
    NodePtr primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end of input");
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string_view id = s.substr(start, pos - start);
        if (id == "x") return make(Node::X);
        if (id == "t") return make(Node::T);
        Node::Kind k;
        if (id == "sin") k = Node::Sin;
        else if (id == "cos") k = Node::Cos;
        else if (id == "exp") k = Node::Exp;
        else {
          pos = start;
          fail("unknown identifier '" + std::string(id) + "'");
        }
        if (!accept('(')) fail("expected '(' after " + std::string(id));
        NodePtr arg = expr();
        if (!accept(')')) fail("expected ')'");
        return make(k, arg);
      }
      if (accept('(')) {
        NodePtr e = expr();
        if (!accept(')')) fail("expected ')'");
        return e;
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }
    NodePtr number() {
      const std::size_t start = pos;
      while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
      if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
        std::size_t p = pos + 1;
        if (p < s.size() && (s[p] == '+' || s[p] == '-')) ++p;
        if (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
          pos = p;
          while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        }
      }
      const std::string tok(s.substr(start, pos - start));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        pos = start;
        fail("bad number '" + tok + "'");
      }
      if (used != tok.size()) {
        pos = start;
        fail("bad number '" + tok + "'");
      }
      return make(Node::Num, nullptr, nullptr, v);
    }
  };

  NodePtr root_;
  std::string text_;
};

}  // namespace stinv
