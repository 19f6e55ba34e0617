#include "nlsym/expr.hpp"

#include <algorithm>
#include <functional>

namespace nlsym {

namespace {

size_t hash_node(const ExprNode& n) {
  size_t h = (size_t)n.kind * 0x9e3779b97f4a7c15ULL + 1;
  auto mix = [&h](size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  switch (n.kind) {
    case Kind::Const: mix(n.value.hash()); break;
    case Kind::Var: mix(n.sym); break;
    case Kind::Func:
      mix(n.sym);
      for (int d : n.dord) mix((size_t)d + 17);
      break;
    default: break;
  }
  for (const Expr& k : n.kids) mix(k->h);
  return h;
}

Expr make(ExprNode n) {
  n.h = hash_node(n);
  return std::make_shared<const ExprNode>(std::move(n));
}

}  // namespace

Expr cst(Number v) {
  ExprNode n;
  n.kind = Kind::Const;
  n.value = std::move(v);
  return make(std::move(n));
}

Expr imag_unit() { return cst(Number::i()); }

Expr var(Sym s) {
  ExprNode n;
  n.kind = Kind::Var;
  n.sym = s;
  return make(std::move(n));
}

Expr sum(std::vector<Expr> kids) {
  if (kids.size() == 1) return kids[0];
  ExprNode n;
  n.kind = Kind::Sum;
  n.kids = std::move(kids);
  return make(std::move(n));
}

Expr prod(std::vector<Expr> kids) {
  if (kids.size() == 1) return kids[0];
  ExprNode n;
  n.kind = Kind::Prod;
  n.kids = std::move(kids);
  return make(std::move(n));
}

Expr pow(Expr base, Expr expo) {
  ExprNode n;
  n.kind = Kind::Pow;
  n.kids = {std::move(base), std::move(expo)};
  return make(std::move(n));
}

namespace {
Expr unary(Kind k, Expr u) {
  ExprNode n;
  n.kind = k;
  n.kids = {std::move(u)};
  return make(std::move(n));
}
}  // namespace

Expr exp(Expr u) { return unary(Kind::Exp, std::move(u)); }
Expr ln(Expr u) { return unary(Kind::Ln, std::move(u)); }
Expr abs(Expr u) { return unary(Kind::Abs, std::move(u)); }
Expr conj_node(Expr u) { return unary(Kind::Conj, std::move(u)); }
Expr re(Expr u) { return unary(Kind::Re, std::move(u)); }
Expr im(Expr u) { return unary(Kind::Im, std::move(u)); }

Expr rho() {
  ExprNode n;
  n.kind = Kind::Rho;
  return make(std::move(n));
}
Expr phi() {
  ExprNode n;
  n.kind = Kind::Phi;
  return make(std::move(n));
}

Expr func(Sym f, std::vector<int> dord, std::vector<Expr> args) {
  ExprNode n;
  n.kind = Kind::Func;
  n.sym = f;
  n.dord = std::move(dord);
  n.kids = std::move(args);
  if (n.dord.size() != n.kids.size())
    throw std::invalid_argument("func: dord/arg size mismatch");
  return make(std::move(n));
}

Expr v_t() { return var(symtab::t()); }
Expr v_x(int a) { return var(symtab::x(a)); }
Expr v_psi() { return var(symtab::psi()); }
Expr v_cpsi() { return var(symtab::cpsi()); }
Expr v_param(const std::string& name) { return var(symtab::param(name)); }

int compare(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  switch (a->kind) {
    case Kind::Const:
      if (a->value == b->value) return 0;
      return a->value.less(b->value) ? -1 : 1;
    case Kind::Var: {
      const std::string& an = symtab::info(a->sym).name;
      const std::string& bn = symtab::info(b->sym).name;
      if (an != bn) return an < bn ? -1 : 1;
      return 0;
    }
    case Kind::Func: {
      const std::string& an = symtab::info(a->sym).name;
      const std::string& bn = symtab::info(b->sym).name;
      if (an != bn) return an < bn ? -1 : 1;
      if (a->dord != b->dord) return a->dord < b->dord ? -1 : 1;
      break;
    }
    default: break;
  }
  if (a->kids.size() != b->kids.size())
    return a->kids.size() < b->kids.size() ? -1 : 1;
  for (size_t i = 0; i < a->kids.size(); ++i) {
    int c = compare(a->kids[i], b->kids[i]);
    if (c != 0) return c;
  }
  return 0;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return true;
  if (a->h != b->h) return false;
  return compare(a, b) == 0;
}

bool is_const(const Expr& e) { return e->kind == Kind::Const; }
bool is_const(const Expr& e, Number* out) {
  if (e->kind != Kind::Const) return false;
  if (out) *out = e->value;
  return true;
}
bool is_zero_const(const Expr& e) {
  return e->kind == Kind::Const && e->value.is_zero();
}

void free_vars(const Expr& e, std::set<Sym>& out) {
  if (e->kind == Kind::Var) out.insert(e->sym);
  if (e->kind == Kind::Func) out.insert(e->sym);
  if (e->kind == Kind::Rho || e->kind == Kind::Phi) {
    out.insert(symtab::psi());
    out.insert(symtab::cpsi());
  }
  for (const Expr& k : e->kids) free_vars(k, out);
}

bool depends_on(const Expr& e, Sym s) {
  if (e->kind == Kind::Var && e->sym == s) return true;
  if (e->kind == Kind::Func && e->sym == s) return true;
  if ((e->kind == Kind::Rho || e->kind == Kind::Phi) &&
      (s == symtab::psi() || s == symtab::cpsi()))
    return true;
  // conjugating nodes couple a symbol with its conjugate partner
  if (e->kind == Kind::Abs || e->kind == Kind::Re || e->kind == Kind::Im ||
      e->kind == Kind::Conj) {
    const SymbolInfo& in = symtab::info(s);
    if (in.conj_partner != UINT32_MAX && in.conj_partner != s &&
        depends_on(e->kids[0], in.conj_partner))
      return true;
  }
  for (const Expr& k : e->kids)
    if (depends_on(k, s)) return true;
  return false;
}

bool contains_kind(const Expr& e, Kind k) {
  if (e->kind == k) return true;
  for (const Expr& c : e->kids)
    if (contains_kind(c, k)) return true;
  return false;
}

// --- printing ---------------------------------------------------------------

namespace {

// precedence levels: 0 sum, 1 prod, 2 pow operand, 3 atom
void print(const Expr& e, int need, std::string& out);

bool atomic_for_pow(const Expr& e) {
  switch (e->kind) {
    case Kind::Var:
    case Kind::Rho:
    case Kind::Phi:
    case Kind::Exp:
    case Kind::Ln:
    case Kind::Abs:
    case Kind::Conj:
    case Kind::Re:
    case Kind::Im:
    case Kind::Func:
      return true;
    case Kind::Const: {
      std::string s = e->value.str();
      return s.find_first_of("+-*/") == std::string::npos;
    }
    default:
      return false;
  }
}

void print_pow_operand(const Expr& e, std::string& out) {
  if (atomic_for_pow(e)) {
    print(e, 0, out);
  } else {
    out += "(";
    print(e, 0, out);
    out += ")";
  }
}

void print(const Expr& e, int need, std::string& out) {
  switch (e->kind) {
    case Kind::Const: {
      std::string s = e->value.str();
      bool atomic = s.find_first_of("+-*/") == std::string::npos ||
                    s.front() == '(';
      if (!atomic && need >= 1) out += "(" + s + ")";
      else out += s;
      return;
    }
    case Kind::Var: out += symtab::info(e->sym).name; return;
    case Kind::Rho: out += "rho"; return;
    case Kind::Phi: out += "phi"; return;
    case Kind::Sum: {
      std::string body;
      for (size_t i = 0; i < e->kids.size(); ++i) {
        std::string term;
        print(e->kids[i], 1, term);
        if (i == 0) {
          body += term;
        } else if (!term.empty() && term[0] == '-') {
          body += " - " + term.substr(1);
        } else {
          body += " + " + term;
        }
      }
      if (need >= 1) out += "(" + body + ")";
      else out += body;
      return;
    }
    case Kind::Prod: {
      std::string body;
      for (size_t i = 0; i < e->kids.size(); ++i) {
        if (i) body += "*";
        print(e->kids[i], 2, body);
      }
      if (need >= 2) out += "(" + body + ")";
      else out += body;
      return;
    }
    case Kind::Pow: {
      print_pow_operand(e->kids[0], out);
      out += "^";
      print_pow_operand(e->kids[1], out);
      return;
    }
    case Kind::Exp: out += "exp("; print(e->kids[0], 0, out); out += ")"; return;
    case Kind::Ln: out += "ln("; print(e->kids[0], 0, out); out += ")"; return;
    case Kind::Abs: out += "abs("; print(e->kids[0], 0, out); out += ")"; return;
    case Kind::Conj: out += "conj("; print(e->kids[0], 0, out); out += ")"; return;
    case Kind::Re: out += "re("; print(e->kids[0], 0, out); out += ")"; return;
    case Kind::Im: out += "im("; print(e->kids[0], 0, out); out += ")"; return;
    case Kind::Func: {
      std::string name = symtab::info(e->sym).name;
      int total = 0;
      for (int d : e->dord) total += d;
      out += name;
      for (int k = 0; k < total; ++k) out += "'";
      out += "(";
      for (size_t i = 0; i < e->kids.size(); ++i) {
        if (i) out += ",";
        print(e->kids[i], 0, out);
      }
      out += ")";
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, 0, out);
  return out;
}

}  // namespace nlsym
