#include <algorithm>
#include <map>
#include <unordered_map>

#include "nlsym/expr.hpp"

namespace nlsym {

namespace {

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const {
    return compare(a, b) < 0;
  }
};

Expr half() { return cst(Number(Rational(1, 2))); }
Expr minus_half_i() { return cst(Number(Rational(0), Rational(-1, 2))); }
Expr half_i() { return cst(Number(Rational(0), Rational(1, 2))); }

bool provably_real(const Expr& e);

bool is_self_conjugate(const Expr& e) {
  Expr c = conjugate(e);
  if (equal(c, e)) return true;
  if (c->kind == e->kind && e->kind == Kind::Sum &&
      c->kids.size() == e->kids.size()) {
    std::vector<Expr> a(e->kids), b(c->kids);
    ExprLess lt;
    std::sort(a.begin(), a.end(), lt);
    std::sort(b.begin(), b.end(), lt);
    for (size_t i = 0; i < a.size(); ++i)
      if (!equal(a[i], b[i])) return false;
    return true;
  }
  return false;
}

// True when the value is guaranteed real for every admissible sample point.
bool provably_real(const Expr& e) {
  switch (e->kind) {
    case Kind::Const: return e->value.is_real();
    case Kind::Var: return symtab::info(e->sym).is_real;
    case Kind::Abs:
    case Kind::Re:
    case Kind::Im:
    case Kind::Rho:
    case Kind::Phi: return true;
    case Kind::Sum:
    case Kind::Prod: {
      bool all = true;
      for (const Expr& k : e->kids) all = all && provably_real(k);
      if (all) return true;
      return e->kind == Kind::Sum && is_self_conjugate(e);
    }
    case Kind::Pow: {
      Number p;
      if (!is_const(e->kids[1], &p)) return false;
      long long k;
      if (p.is_integer(&k)) return provably_real(e->kids[0]);
      return false;
    }
    case Kind::Exp: return provably_real(e->kids[0]);
    case Kind::Conj: return provably_real(e->kids[0]);
    case Kind::Func: return symtab::info(e->sym).is_real;
    default: return false;
  }
}

// True when the value is guaranteed a positive real (branch-safe to pull out
// of powers and logarithms).
bool provably_positive_real(const Expr& e) {
  switch (e->kind) {
    case Kind::Const:
      if (e->value.exact())
        return e->value.im_q().is_zero() && e->value.re_q().num > 0;
      return e->value.value().imag() == 0.0 && e->value.value().real() > 0.0;
    case Kind::Exp: return provably_real(e->kids[0]);
    case Kind::Abs:
    case Kind::Rho: return true;  // zero excluded by the sampling floor
    case Kind::Prod: {
      for (const Expr& k : e->kids)
        if (!provably_positive_real(k)) return false;
      return true;
    }
    case Kind::Pow: {
      Number p;
      if (!is_const(e->kids[1], &p)) return false;
      long long k;
      if (p.is_integer(&k) && k % 2 == 0) return provably_real(e->kids[0]);
      if (p.is_real()) return provably_positive_real(e->kids[0]);
      return false;
    }
    default: return false;
  }
}

std::pair<Expr, Expr> as_base_exp(const Expr& f) {
  if (f->kind == Kind::Pow) return {f->kids[0], f->kids[1]};
  return {f, cst(1)};
}

std::pair<Number, Expr> split_coeff(const Expr& t) {
  if (t->kind == Kind::Prod && !t->kids.empty() &&
      t->kids[0]->kind == Kind::Const) {
    std::vector<Expr> rest(t->kids.begin() + 1, t->kids.end());
    return {t->kids[0]->value, prod(std::move(rest))};
  }
  return {Number(1), t};
}

Expr simp(const Expr& e);
Expr simp_pow(Expr base, Expr expo);

Expr simp_sum(const std::vector<Expr>& kids_in) {
  Number cacc(0);
  std::map<Expr, Number, ExprLess> terms;
  std::vector<Expr> work(kids_in);
  while (!work.empty()) {
    Expr k = work.back();
    work.pop_back();
    if (k->kind == Kind::Sum) {
      for (const Expr& c : k->kids) work.push_back(c);
      continue;
    }
    if (k->kind == Kind::Const) {
      cacc = cacc + k->value;
      continue;
    }
    auto [c, rest] = split_coeff(k);
    auto it = terms.find(rest);
    if (it == terms.end()) terms.emplace(rest, c);
    else it->second = it->second + c;
  }
  std::vector<Expr> out;
  if (!cacc.is_zero()) out.push_back(cst(cacc));
  for (auto& [rest, c] : terms) {
    if (c.is_zero()) continue;
    if (c.is_one()) {
      out.push_back(rest);
    } else if (rest->kind == Kind::Prod) {
      std::vector<Expr> fs;
      fs.push_back(cst(c));
      for (const Expr& f : rest->kids) fs.push_back(f);
      out.push_back(prod(std::move(fs)));
    } else {
      out.push_back(prod({cst(c), rest}));
    }
  }
  if (out.empty()) return cst(0);
  if (out.size() == 1) return out[0];
  std::sort(out.begin(), out.end(), ExprLess());
  return sum(std::move(out));
}

// Expand a product containing sums into a sum of sum-free products.
Expr distribute(const std::vector<Expr>& factors) {
  std::vector<std::vector<Expr>> terms{{}};
  for (const Expr& f : factors) {
    if (f->kind == Kind::Sum) {
      std::vector<std::vector<Expr>> next;
      next.reserve(terms.size() * f->kids.size());
      if (terms.size() * f->kids.size() > 200000)
        return Expr();  // too large; caller keeps the nested form
      for (const auto& t : terms)
        for (const Expr& s : f->kids) {
          auto copy = t;
          copy.push_back(s);
          next.push_back(std::move(copy));
        }
      terms = std::move(next);
    } else {
      for (auto& t : terms) t.push_back(f);
    }
  }
  std::vector<Expr> addends;
  addends.reserve(terms.size());
  for (auto& t : terms) addends.push_back(simp(prod(std::move(t))));
  return simp_sum(addends);
}

Expr simp_prod(const std::vector<Expr>& kids_in) {
  Number cacc(1);
  std::vector<Expr> exp_args;
  std::map<Expr, std::vector<Expr>, ExprLess> bases;
  std::vector<Expr> opaque;  // factors kept as-is (exp remainder)

  std::vector<Expr> work(kids_in);
  bool exp_merged = false;
  while (true) {
    while (!work.empty()) {
      Expr f = work.back();
      work.pop_back();
      if (f->kind == Kind::Prod) {
        for (const Expr& c : f->kids) work.push_back(c);
        continue;
      }
      if (f->kind == Kind::Const) {
        if (f->value.is_zero()) return cst(0);
        cacc = cacc * f->value;
        continue;
      }
      if (f->kind == Kind::Exp && !exp_merged) {
        exp_args.push_back(f->kids[0]);
        continue;
      }
      auto [b, ex] = as_base_exp(f);
      bases[b].push_back(ex);
    }
    if (exp_args.empty() || exp_merged) break;
    exp_merged = true;
    Expr merged = simp(exp(simp_sum(exp_args)));
    exp_args.clear();
    if (merged->kind == Kind::Exp) {
      opaque.push_back(merged);
    } else {
      work.push_back(merged);
    }
  }

  std::vector<Expr> factors(opaque);
  bool changed = false;
  for (auto& [b, exps] : bases) {
    Expr etot = exps.size() == 1 ? exps[0] : simp_sum(exps);
    if (is_zero_const(etot)) continue;
    Expr f = simp_pow(b, etot);
    if (f->kind == Kind::Const) {
      if (f->value.is_zero()) return cst(0);
      cacc = cacc * f->value;
      continue;
    }
    // a collapsed power may need another collection pass
    if (f->kind == Kind::Prod) changed = true;
    factors.push_back(f);
  }
  int n_exp = 0;
  for (const Expr& f : factors)
    if (f->kind == Kind::Exp) ++n_exp;
  if (changed || n_exp >= 2) {
    factors.push_back(cst(cacc));
    return simp_prod(factors);
  }

  bool has_sum = false;
  for (const Expr& f : factors) has_sum = has_sum || f->kind == Kind::Sum;
  if (has_sum) {
    std::vector<Expr> all(factors);
    if (!cacc.is_one()) all.push_back(cst(cacc));
    Expr d = distribute(all);
    if (d) return d;
  }

  std::sort(factors.begin(), factors.end(), ExprLess());
  if (factors.empty()) return cst(cacc);
  if (cacc.is_one()) {
    if (factors.size() == 1) return factors[0];
    return prod(std::move(factors));
  }
  std::vector<Expr> out;
  out.push_back(cst(cacc));
  for (Expr& f : factors) out.push_back(std::move(f));
  return prod(std::move(out));
}

// Conjugate-pair extraction: factors of a product that are jointly positive
// real (v^a * conj(v)^conj(a) for a paired variable) or individually
// provably positive. Distribution of a power over these is branch-exact.
struct PairSplit {
  std::vector<Expr> safe;    // factors a power may be distributed over
  std::vector<Expr> rest;
};

PairSplit split_positive_factors(const std::vector<Expr>& fs) {
  PairSplit out;
  std::vector<bool> used(fs.size(), false);
  for (size_t i = 0; i < fs.size(); ++i) {
    if (used[i]) continue;
    if (provably_positive_real(fs[i])) {
      used[i] = true;
      out.safe.push_back(fs[i]);
      continue;
    }
    auto [b1, e1] = as_base_exp(fs[i]);
    Number n1;
    if (b1->kind == Kind::Var && is_const(e1, &n1)) {
      const auto& in = symtab::info(b1->sym);
      if (!in.is_real && in.conj_partner != UINT32_MAX) {
        for (size_t j = i + 1; j < fs.size(); ++j) {
          if (used[j]) continue;
          auto [b2, e2] = as_base_exp(fs[j]);
          Number n2;
          if (b2->kind == Kind::Var && b2->sym == in.conj_partner &&
              is_const(e2, &n2) && n2 == n1.conj()) {
            used[i] = used[j] = true;
            out.safe.push_back(fs[i]);
            out.safe.push_back(fs[j]);
            break;
          }
        }
      }
    }
  }
  for (size_t i = 0; i < fs.size(); ++i)
    if (!used[i]) out.rest.push_back(fs[i]);
  return out;
}

Expr simp_pow(Expr base, Expr expo) {
  Number pv;
  bool p_const = is_const(expo, &pv);
  if (p_const) {
    if (pv.is_zero()) return cst(1);
    if (pv.is_one()) return base;
  }
  Number bv;
  if (is_const(base, &bv)) {
    if (bv.is_one()) return cst(1);
    if (p_const) {
      auto r = Number::pow(bv, pv);
      if (r) return cst(*r);
      return pow(base, expo);
    }
    if (bv.is_zero()) return pow(base, expo);  // undecidable sign; keep
  }
  long long k = 0;
  bool p_int = p_const && pv.is_integer(&k);

  if (base->kind == Kind::Exp &&
      (p_int || provably_real(base->kids[0])))
    return simp(exp(prod({base->kids[0], expo})));
  if (base->kind == Kind::Pow) {
    Number q;
    bool q_const = is_const(base->kids[1], &q);
    bool inner_small_real =
        q_const && q.exact() && q.im_q().is_zero() &&
        std::abs(q.re_q().num) <= q.re_q().den;  // |q| <= 1
    if (p_int || (q_const && q.is_real() &&
                  provably_positive_real(base->kids[0])) ||
        (inner_small_real && base->kids[0]->kind == Kind::Var))
      return simp_pow(base->kids[0], simp(prod({base->kids[1], expo})));
  }
  if (base->kind == Kind::Prod) {
    if (p_int) {
      std::vector<Expr> fs;
      for (const Expr& f : base->kids) fs.push_back(pow(f, expo));
      return simp(prod(std::move(fs)));
    }
    PairSplit ps = split_positive_factors(base->kids);
    if (!ps.safe.empty()) {
      std::vector<Expr> fs;
      for (const Expr& f : ps.safe) fs.push_back(pow(f, expo));
      if (!ps.rest.empty()) fs.push_back(pow(prod(std::move(ps.rest)), expo));
      return simp(prod(std::move(fs)));
    }
  }
  if (base->kind == Kind::Sum && p_int && k > 1 && k <= 6 &&
      base->kids.size() <= 12) {
    std::vector<Expr> fs((size_t)k, base);
    Expr d = distribute(fs);
    if (d) return d;
  }
  return pow(std::move(base), std::move(expo));
}

Expr simp_exp(const Expr& u) {
  if (u->kind == Kind::Const) {
    if (u->value.is_zero()) return cst(1);
    if (!u->value.exact()) return cst(Number(std::exp(u->value.value())));
    return exp(u);
  }
  if (u->kind == Kind::Ln) return u->kids[0];
  // pull out logarithmic terms: exp(c*ln w + rest) = w^c * exp(rest)
  std::vector<Expr> terms =
      u->kind == Kind::Sum ? u->kids : std::vector<Expr>{u};
  std::vector<Expr> pows, rest;
  for (const Expr& t : terms) {
    auto [c, r] = split_coeff(t);
    if (r->kind == Kind::Ln) {
      pows.push_back(simp_pow(r->kids[0], cst(c)));
    } else {
      rest.push_back(t);
    }
  }
  if (pows.empty()) return exp(u);
  if (!rest.empty()) pows.push_back(exp(simp_sum(rest)));
  return simp(prod(std::move(pows)));
}

Expr simp_ln(const Expr& u) {
  if (u->kind == Kind::Const) {
    if (u->value.is_one()) return cst(0);
    if (!u->value.exact()) return cst(Number(std::log(u->value.value())));
    return ln(u);
  }
  if (u->kind == Kind::Exp && provably_real(u->kids[0])) return u->kids[0];
  if (u->kind == Kind::Pow) {
    Number p;
    if (is_const(u->kids[1], &p) && p.is_real() &&
        provably_positive_real(u->kids[0]))
      return simp(prod({cst(p), ln(u->kids[0])}));
  }
  if (u->kind == Kind::Prod) {
    PairSplit ps = split_positive_factors(u->kids);
    if (!ps.safe.empty()) {
      std::vector<Expr> terms;
      for (const Expr& f : ps.safe) {
        auto [b, e2] = as_base_exp(f);
        terms.push_back(simp(prod({e2, ln(b)})));
      }
      if (!ps.rest.empty()) terms.push_back(simp(ln(prod(ps.rest))));
      return simp_sum(terms);
    }
  }
  return ln(u);
}

// The key Expr is stored alongside the result so the keyed node cannot be
// freed and its address reused.
thread_local std::unordered_map<const ExprNode*, std::pair<Expr, Expr>> g_memo;

Expr simp(const Expr& e) {
  auto it = g_memo.find(e.get());
  if (it != g_memo.end()) return it->second.second;
  Expr r;
  switch (e->kind) {
    case Kind::Const:
    case Kind::Var:
      r = e;
      break;
    case Kind::Rho:
      r = simp(pow(prod({v_psi(), v_cpsi()}), half()));
      break;
    case Kind::Phi:
      r = simp(prod({half_i(), sum({ln(v_cpsi()), -ln(v_psi())})}));
      break;
    case Kind::Abs: {
      Expr su = simp(e->kids[0]);
      r = simp(pow(prod({su, conjugate(su)}), half()));
      break;
    }
    case Kind::Re: {
      Expr su = simp(e->kids[0]);
      r = simp(prod({half(), sum({su, conjugate(su)})}));
      break;
    }
    case Kind::Im: {
      Expr su = simp(e->kids[0]);
      r = simp(prod({minus_half_i(), sum({su, -conjugate(su)})}));
      break;
    }
    case Kind::Conj: {
      Expr su = simp(e->kids[0]);
      Expr c = conjugate(su);
      if (c->kind == Kind::Conj && equal(c->kids[0], su)) r = c;
      else r = simp(c);
      break;
    }
    case Kind::Exp:
      r = simp_exp(simp(e->kids[0]));
      break;
    case Kind::Ln:
      r = simp_ln(simp(e->kids[0]));
      break;
    case Kind::Pow:
      r = simp_pow(simp(e->kids[0]), simp(e->kids[1]));
      break;
    case Kind::Sum: {
      std::vector<Expr> ks;
      ks.reserve(e->kids.size());
      for (const Expr& k : e->kids) ks.push_back(simp(k));
      r = simp_sum(ks);
      break;
    }
    case Kind::Prod: {
      std::vector<Expr> ks;
      ks.reserve(e->kids.size());
      for (const Expr& k : e->kids) ks.push_back(simp(k));
      r = simp_prod(ks);
      break;
    }
    case Kind::Func: {
      std::vector<Expr> args;
      args.reserve(e->kids.size());
      for (const Expr& k : e->kids) args.push_back(simp(k));
      r = func(e->sym, e->dord, std::move(args));
      break;
    }
  }
  if (g_memo.size() > 400000) g_memo.clear();
  g_memo.emplace(e.get(), std::make_pair(e, r));
  return r;
}

}  // namespace

Expr simplify(const Expr& e) { return simp(e); }

}  // namespace nlsym
