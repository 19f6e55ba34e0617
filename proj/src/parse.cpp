#include <cctype>
#include <map>

#include "nlsym/expr.hpp"

namespace nlsym {

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;
  int n;

  explicit Parser(const std::string& text, int n_) : s(text), n(n_) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

  Expr parse_sum() {
    bool neg = eat('-');
    Expr e = parse_prod();
    if (neg) e = -e;
    for (;;) {
      if (eat('+')) {
        e = e + parse_prod();
      } else if (eat('-')) {
        e = e - parse_prod();
      } else {
        return e;
      }
    }
  }

  Expr parse_prod() {
    Expr e = parse_pow();
    for (;;) {
      if (eat('*')) {
        e = e * parse_pow();
      } else if (eat('/')) {
        e = e / parse_pow();
      } else {
        return e;
      }
    }
  }

  Expr parse_pow() {
    Expr base = parse_atom();
    if (eat('^')) {
      Expr expo = parse_atom();
      return pow(base, expo);
    }
    return base;
  }

  Expr parse_number() {
    size_t start = pos;
    long long int_part = 0;
    bool any = false;
    while (pos < s.size() && std::isdigit((unsigned char)s[pos])) {
      int_part = int_part * 10 + (s[pos] - '0');
      ++pos;
      any = true;
      if (int_part > 1000000000000000LL) fail("numeric literal too large");
    }
    long long frac = 0, scale = 1;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && std::isdigit((unsigned char)s[pos])) {
        frac = frac * 10 + (s[pos] - '0');
        scale *= 10;
        ++pos;
        any = true;
        if (scale > 1000000000000000LL) fail("numeric literal too precise");
      }
    }
    if (!any) fail("expected number");
    long long expo = 0;
    bool expo_neg = false;
    if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
      size_t save = pos;
      ++pos;
      if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        expo_neg = s[pos] == '-';
        ++pos;
      }
      if (pos < s.size() && std::isdigit((unsigned char)s[pos])) {
        while (pos < s.size() && std::isdigit((unsigned char)s[pos])) {
          expo = expo * 10 + (s[pos] - '0');
          ++pos;
          if (expo > 18) fail("exponent out of range");
        }
      } else {
        pos = save;  // 'e' belongs to an identifier, not this literal
      }
    }
    (void)start;
    Rational r(int_part);
    if (scale > 1) {
      auto fr = Rational::make(frac, scale);
      auto sum = Rational::add(r, *fr);
      if (!sum) fail("numeric literal overflow");
      r = *sum;
    }
    if (expo) {
      auto p = Rational::pow_int(Rational(10), expo_neg ? -expo : expo);
      if (!p) fail("numeric literal overflow");
      auto m = Rational::mul(r, *p);
      if (!m) fail("numeric literal overflow");
      r = *m;
    }
    return cst(Number(r));
  }

  Expr parse_atom() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end of input");
    char c = s[pos];
    if (c == '(') {
      ++pos;
      Expr e = parse_sum();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit((unsigned char)c) || c == '.') return parse_number();
    if (std::isalpha((unsigned char)c) || c == '_') return parse_ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr parse_ident() {
    size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum((unsigned char)s[pos]) || s[pos] == '_'))
      ++pos;
    std::string name = s.substr(start, pos - start);

    if (name == "i") return imag_unit();
    if (name == "t") return v_t();
    if (name == "psi") return v_psi();
    if (name == "cpsi") return v_cpsi();
    if (name == "rho") return rho();
    if (name == "phi") return phi();
    if (name.size() >= 2 && name[0] == 'x' &&
        std::isdigit((unsigned char)name[1])) {
      int a = 0;
      bool digits_only = true;
      for (size_t k = 1; k < name.size(); ++k) {
        if (!std::isdigit((unsigned char)name[k])) {
          digits_only = false;
          break;
        }
        a = a * 10 + (name[k] - '0');
      }
      if (digits_only) {
        if (a < 1 || a > n) {
          pos = start;
          fail("space index out of range: " + name);
        }
        return v_x(a);
      }
    }

    bool call = (peek() == '(');
    if (call) {
      static const std::map<std::string, Expr (*)(Expr)> builtins = {
          {"abs", &abs}, {"exp", &exp}, {"ln", &ln},
          {"re", &re},   {"im", &im},   {"conj", &conj_node},
      };
      auto it = builtins.find(name);
      std::vector<Expr> args;
      eat('(');
      args.push_back(parse_sum());
      while (eat(',')) args.push_back(parse_sum());
      if (!eat(')')) fail("expected ')'");
      if (it != builtins.end()) {
        if (args.size() != 1) {
          pos = start;
          fail(name + " takes one argument");
        }
        return it->second(args[0]);
      }
      if (name == "f" || name == "theta" || name == "eta0") {
        size_t nargs = args.size();
        Sym fs = symtab::funcsym(name, (int)nargs);
        return func(fs, std::vector<int>(nargs, 0), std::move(args));
      }
      pos = start;
      fail("unknown function symbol '" + name + "'");
    }

    // bare identifier: parameter (interning a new one if unseen)
    Sym existing;
    if (symtab::lookup(name, &existing)) {
      const auto& in = symtab::info(existing);
      if (in.kind == SymKind::FuncSym) {
        pos = start;
        fail("function symbol '" + name + "' needs arguments");
      }
      return var(existing);
    }
    return v_param(name);
  }
};

}  // namespace

Expr parse(const std::string& text, int n) {
  if (n < 1 || n > 4) throw std::invalid_argument("n must be in 1..4");
  Parser p(text, n);
  Expr e = p.parse_sum();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return e;
}

}  // namespace nlsym
