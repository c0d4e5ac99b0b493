#ifndef FDW_EXPR_HPP
#define FDW_EXPR_HPP

/// \file expr.hpp
/// \brief Small arithmetic expression language for coefficients and data.
///
/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?
///   primary := number | 'x' | 't' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
///   func    := sin | cos | exp | sqrt | log | abs
/// '^' is right associative and binds tighter than unary minus, so -x^2 is -(x^2).

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "fdw/core.hpp"

namespace fdw {

class ExprError : public InvalidArgument {
 public:
  ExprError(const std::string& msg, std::size_t column)
      : InvalidArgument(msg + " at column " + std::to_string(column + 1)), column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

class Expr {
 public:
  Expr() : Expr("0") {}
  explicit Expr(const std::string& text) : text_(text) {
    Parser p{text, 0};
    root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) throw ExprError("unexpected '" + std::string(1, text[p.pos]) + "'", p.pos);
  }

  double operator()(double x, double t = 0.0) const { return root_->eval(x, t); }
  const std::string& text() const { return text_; }
  bool uses_x() const { return root_->uses('x'); }
  bool uses_t() const { return root_->uses('t'); }
  bool is_zero() const {
    return !uses_x() && !uses_t() && (*this)(0.0, 0.0) == 0.0;
  }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(double x, double t) const = 0;
    virtual bool uses(char v) const = 0;
  };
  using Ptr = std::shared_ptr<const Node>;

  struct Num : Node {
    double v;
    explicit Num(double v) : v(v) {}
    double eval(double, double) const override { return v; }
    bool uses(char) const override { return false; }
  };
  struct Var : Node {
    char name;
    explicit Var(char n) : name(n) {}
    double eval(double x, double t) const override { return name == 'x' ? x : t; }
    bool uses(char v) const override { return v == name; }
  };
  struct Unary : Node {
    char op;
    Ptr a;
    Unary(char op, Ptr a) : op(op), a(std::move(a)) {}
    double eval(double x, double t) const override {
      const double v = a->eval(x, t);
      switch (op) {
        case '-': return -v;
        case 's': return std::sin(v);
        case 'c': return std::cos(v);
        case 'e': return std::exp(v);
        case 'q': return std::sqrt(v);
        case 'l': return std::log(v);
        case 'a': return std::abs(v);
      }
      return v;
    }
    bool uses(char v) const override { return a->uses(v); }
  };
  struct Binary : Node {
    char op;
    Ptr a, b;
    Binary(char op, Ptr a, Ptr b) : op(op), a(std::move(a)), b(std::move(b)) {}
    double eval(double x, double t) const override {
      const double u = a->eval(x, t), v = b->eval(x, t);
      switch (op) {
        case '+': return u + v;
        case '-': return u - v;
        case '*': return u * v;
        case '/': return u / v;
        case '^': return std::pow(u, v);
      }
      return 0.0;
    }
    bool uses(char v) const override { return a->uses(v) || b->uses(v); }
  };

  struct Parser {
    const std::string& s;
    std::size_t pos;

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    Ptr parse_expr() {
      Ptr lhs = parse_term();
      for (;;) {
        if (eat('+')) lhs = std::make_shared<Binary>('+', lhs, parse_term());
        else if (eat('-')) lhs = std::make_shared<Binary>('-', lhs, parse_term());
        else return lhs;
      }
    }
    Ptr parse_term() {
      Ptr lhs = parse_unary();
      for (;;) {
        if (eat('*')) lhs = std::make_shared<Binary>('*', lhs, parse_unary());
        else if (eat('/')) lhs = std::make_shared<Binary>('/', lhs, parse_unary());
        else return lhs;
      }
    }
    Ptr parse_unary() {
      if (eat('-')) return std::make_shared<Unary>('-', parse_unary());
      if (eat('+')) return parse_unary();
      return parse_power();
    }
    Ptr parse_power() {
      Ptr base = parse_primary();
      if (eat('^')) return std::make_shared<Binary>('^', base, parse_unary());
      return base;
    }
    Ptr parse_primary() {
      skip_ws();
      if (pos >= s.size()) throw ExprError("unexpected end of expression", pos);
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw ExprError("malformed number", pos);
        pos += static_cast<std::size_t>(end - begin);
        return std::make_shared<Num>(v);
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        const std::string id = s.substr(start, pos - start);
        if (id == "x" || id == "t") return std::make_shared<Var>(id[0]);
        if (id == "pi") return std::make_shared<Num>(std::numbers::pi);
        if (id == "e") return std::make_shared<Num>(std::numbers::e);
        char code = 0;
        if (id == "sin") code = 's';
        else if (id == "cos") code = 'c';
        else if (id == "exp") code = 'e';
        else if (id == "sqrt") code = 'q';
        else if (id == "log") code = 'l';
        else if (id == "abs") code = 'a';
        else throw ExprError("unknown identifier '" + id + "'", start);
        if (!eat('(')) throw ExprError("expected '(' after " + id, pos);
        Ptr arg = parse_expr();
        if (!eat(')')) throw ExprError("expected ')'", pos);
        return std::make_shared<Unary>(code, arg);
      }
      if (eat('(')) {
        Ptr inner = parse_expr();
        if (!eat(')')) throw ExprError("expected ')'", pos);
        return inner;
      }
      throw ExprError("unexpected '" + std::string(1, c) + "'", pos);
    }
  };

  std::string text_;
  Ptr root_;
};

}  // namespace fdw

#endif  // FDW_EXPR_HPP
