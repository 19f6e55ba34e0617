#include "nlsym/expr.hpp"

namespace nlsym {

namespace {

Expr d(const Expr& e, Sym v);
Expr d_conj(const Expr& e, Sym v);  // derivative with respect to conj(v)

// d/dv applied to conj(u): the Wirtinger chain rule conj(d u / d conj(v)).
Expr d_of_conj(const Expr& u, Sym v) {
  const SymbolInfo& in = symtab::info(v);
  if (in.is_real) return conjugate(d(u, v));
  if (in.conj_partner != UINT32_MAX) return conjugate(d(u, in.conj_partner));
  return conjugate(d_conj(u, v));
}

Expr d_conj(const Expr& e, Sym v) {
  switch (e->kind) {
    case Kind::Const: return cst(0);
    case Kind::Var: return cst(0);  // dVar/d(conj v): only Conj nodes carry conj(v)
    case Kind::Conj: return conjugate(d(e->kids[0], v));
    default: break;
  }
  // generic chain: rebuild with the same recursion
  // (sum/product/pow/exp/ln handled below mirror d())
  switch (e->kind) {
    case Kind::Sum: {
      std::vector<Expr> ks;
      for (const Expr& k : e->kids) ks.push_back(d_conj(k, v));
      return sum(std::move(ks));
    }
    case Kind::Prod: {
      std::vector<Expr> terms;
      for (size_t i = 0; i < e->kids.size(); ++i) {
        std::vector<Expr> fs(e->kids);
        fs[i] = d_conj(e->kids[i], v);
        terms.push_back(prod(std::move(fs)));
      }
      return sum(std::move(terms));
    }
    case Kind::Pow: {
      const Expr& b = e->kids[0];
      const Expr& p = e->kids[1];
      Expr db = d_conj(b, v), dp = d_conj(p, v);
      if (is_zero_const(dp))
        return prod({p, pow(b, p - cst(1)), db});
      return prod({pow(b, p), sum({prod({dp, ln(b)}), prod({p, db}) / b})});
    }
    case Kind::Exp: return prod({e, d_conj(e->kids[0], v)});
    case Kind::Ln: return d_conj(e->kids[0], v) / e->kids[0];
    case Kind::Abs: {
      Expr u = e->kids[0];
      Expr cu = conjugate(u);
      return prod({cst(Number(Rational(1, 2))),
                   pow(prod({u, cu}), cst(Number(Rational(-1, 2)))),
                   sum({prod({cu, d_conj(u, v)}),
                        prod({u, conjugate(d(u, v))})})});
    }
    case Kind::Re:
      return prod({cst(Number(Rational(1, 2))),
                   sum({d_conj(e->kids[0], v), conjugate(d(e->kids[0], v))})});
    case Kind::Im:
      return prod({cst(Number(Rational(0), Rational(-1, 2))),
                   sum({d_conj(e->kids[0], v),
                        -conjugate(d(e->kids[0], v))})});
    case Kind::Rho:
    case Kind::Phi:
      return cst(0);  // depend on psi/cpsi only; v is a non-field symbol here
    case Kind::Func: {
      std::vector<Expr> terms;
      for (size_t j = 0; j < e->kids.size(); ++j) {
        std::vector<int> dord = e->dord;
        dord[j] += 1;
        terms.push_back(
            prod({func(e->sym, std::move(dord), e->kids),
                  d_conj(e->kids[j], v)}));
      }
      if (terms.empty()) return cst(0);
      return sum(std::move(terms));
    }
    default: return cst(0);
  }
}

Expr d(const Expr& e, Sym v) {
  switch (e->kind) {
    case Kind::Const: return cst(0);
    case Kind::Var: return e->sym == v ? cst(1) : cst(0);
    case Kind::Sum: {
      std::vector<Expr> ks;
      ks.reserve(e->kids.size());
      for (const Expr& k : e->kids) ks.push_back(d(k, v));
      return sum(std::move(ks));
    }
    case Kind::Prod: {
      std::vector<Expr> terms;
      for (size_t i = 0; i < e->kids.size(); ++i) {
        if (!depends_on(e->kids[i], v)) continue;
        std::vector<Expr> fs(e->kids);
        fs[i] = d(e->kids[i], v);
        terms.push_back(prod(std::move(fs)));
      }
      if (terms.empty()) return cst(0);
      return sum(std::move(terms));
    }
    case Kind::Pow: {
      const Expr& b = e->kids[0];
      const Expr& p = e->kids[1];
      Expr dp = depends_on(p, v) ? d(p, v) : cst(0);
      Expr db = depends_on(b, v) ? d(b, v) : cst(0);
      if (is_zero_const(dp)) {
        if (is_zero_const(db)) return cst(0);
        return prod({p, pow(b, p - cst(1)), db});
      }
      return prod({pow(b, p), sum({prod({dp, ln(b)}), prod({p, db}) / b})});
    }
    case Kind::Exp: return prod({e, d(e->kids[0], v)});
    case Kind::Ln: return d(e->kids[0], v) / e->kids[0];
    case Kind::Abs: {
      // |u| = (u conj(u))^(1/2)
      Expr u = e->kids[0];
      Expr cu = conjugate(u);
      return prod({cst(Number(Rational(1, 2))),
                   pow(prod({u, cu}), cst(Number(Rational(-1, 2)))),
                   sum({prod({cu, d(u, v)}), prod({u, d_of_conj(u, v)})})});
    }
    case Kind::Conj: return d_of_conj(e->kids[0], v);
    case Kind::Re:
      return prod({cst(Number(Rational(1, 2))),
                   sum({d(e->kids[0], v), d_of_conj(e->kids[0], v)})});
    case Kind::Im:
      return prod({cst(Number(Rational(0), Rational(-1, 2))),
                   sum({d(e->kids[0], v), -d_of_conj(e->kids[0], v)})});
    case Kind::Rho: {
      if (v == symtab::psi())
        return prod({cst(Number(Rational(1, 2))), v_cpsi(),
                     pow(prod({v_psi(), v_cpsi()}),
                         cst(Number(Rational(-1, 2))))});
      if (v == symtab::cpsi())
        return prod({cst(Number(Rational(1, 2))), v_psi(),
                     pow(prod({v_psi(), v_cpsi()}),
                         cst(Number(Rational(-1, 2))))});
      return cst(0);
    }
    case Kind::Phi: {
      if (v == symtab::psi())
        return prod({cst(Number(Rational(0), Rational(-1, 2))),
                     pow(v_psi(), cst(-1))});
      if (v == symtab::cpsi())
        return prod({cst(Number(Rational(0), Rational(1, 2))),
                     pow(v_cpsi(), cst(-1))});
      return cst(0);
    }
    case Kind::Func: {
      std::vector<Expr> terms;
      for (size_t j = 0; j < e->kids.size(); ++j) {
        if (!depends_on(e->kids[j], v)) continue;
        std::vector<int> dord = e->dord;
        dord[j] += 1;
        terms.push_back(prod(
            {func(e->sym, std::move(dord), e->kids), d(e->kids[j], v)}));
      }
      if (terms.empty()) return cst(0);
      return sum(std::move(terms));
    }
  }
  return cst(0);
}

}  // namespace

Expr differentiate(const Expr& e, Sym v) { return simplify(d(e, v)); }

Expr conjugate(const Expr& e) {
  switch (e->kind) {
    case Kind::Const: return cst(e->value.conj());
    case Kind::Var: {
      const SymbolInfo& in = symtab::info(e->sym);
      if (in.is_real) return e;
      if (in.conj_partner != UINT32_MAX) return var(in.conj_partner);
      return conj_node(e);
    }
    case Kind::Sum: {
      std::vector<Expr> ks;
      ks.reserve(e->kids.size());
      for (const Expr& k : e->kids) ks.push_back(conjugate(k));
      return sum(std::move(ks));
    }
    case Kind::Prod: {
      std::vector<Expr> ks;
      ks.reserve(e->kids.size());
      for (const Expr& k : e->kids) ks.push_back(conjugate(k));
      return prod(std::move(ks));
    }
    case Kind::Pow:
      return pow(conjugate(e->kids[0]), conjugate(e->kids[1]));
    case Kind::Exp: return exp(conjugate(e->kids[0]));
    case Kind::Ln: return ln(conjugate(e->kids[0]));
    case Kind::Abs:
    case Kind::Re:
    case Kind::Im:
    case Kind::Rho:
    case Kind::Phi:
      return e;  // real-valued
    case Kind::Conj: return e->kids[0];
    case Kind::Func:
      // function symbols take real-valued arguments; the Conj node
      // conjugates the value, so the arguments stay untouched
      if (symtab::info(e->sym).is_real) return e;
      return conj_node(e);
  }
  return e;
}

Expr substitute(const Expr& e, Sym v, const Expr& replacement) {
  switch (e->kind) {
    case Kind::Const: return e;
    case Kind::Var: return e->sym == v ? replacement : e;
    case Kind::Rho:
      if (v == symtab::psi() || v == symtab::cpsi())
        return pow(prod({substitute(v_psi(), v, replacement),
                         substitute(v_cpsi(), v, replacement)}),
                   cst(Number(Rational(1, 2))));
      return e;
    case Kind::Phi:
      if (v == symtab::psi() || v == symtab::cpsi())
        return prod({cst(Number(Rational(0), Rational(1, 2))),
                     sum({ln(substitute(v_cpsi(), v, replacement)),
                          -ln(substitute(v_psi(), v, replacement))})});
      return e;
    default: break;
  }
  if (!depends_on(e, v)) return e;
  ExprNode n(*e);
  for (Expr& k : n.kids) k = substitute(k, v, replacement);
  // rebuild through constructors to refresh the hash
  switch (n.kind) {
    case Kind::Sum: return sum(std::move(n.kids));
    case Kind::Prod: return prod(std::move(n.kids));
    case Kind::Pow: return pow(n.kids[0], n.kids[1]);
    case Kind::Exp: return exp(n.kids[0]);
    case Kind::Ln: return ln(n.kids[0]);
    case Kind::Abs: return abs(n.kids[0]);
    case Kind::Conj: return conj_node(n.kids[0]);
    case Kind::Re: return re(n.kids[0]);
    case Kind::Im: return im(n.kids[0]);
    case Kind::Func: return func(n.sym, n.dord, std::move(n.kids));
    default: return e;
  }
}

Expr substitute_func(const Expr& e, Sym f, const std::vector<Sym>& formals,
                     const Expr& body) {
  if (e->kind == Kind::Func && e->sym == f) {
    if (formals.size() != e->kids.size())
      throw std::invalid_argument("substitute_func: arity mismatch for " +
                                  symtab::info(f).name);
    Expr w = body;
    for (size_t j = 0; j < formals.size(); ++j)
      for (int k = 0; k < e->dord[j]; ++k) w = differentiate(w, formals[j]);
    for (size_t j = 0; j < formals.size(); ++j) {
      Expr arg = substitute_func(e->kids[j], f, formals, body);
      w = substitute(w, formals[j], arg);
    }
    return w;
  }
  if (e->kids.empty()) return e;
  ExprNode n(*e);
  for (Expr& k : n.kids) k = substitute_func(k, f, formals, body);
  switch (n.kind) {
    case Kind::Sum: return sum(std::move(n.kids));
    case Kind::Prod: return prod(std::move(n.kids));
    case Kind::Pow: return pow(n.kids[0], n.kids[1]);
    case Kind::Exp: return exp(n.kids[0]);
    case Kind::Ln: return ln(n.kids[0]);
    case Kind::Abs: return abs(n.kids[0]);
    case Kind::Conj: return conj_node(n.kids[0]);
    case Kind::Re: return re(n.kids[0]);
    case Kind::Im: return im(n.kids[0]);
    case Kind::Func: return func(n.sym, n.dord, std::move(n.kids));
    default: return e;
  }
}

}  // namespace nlsym
