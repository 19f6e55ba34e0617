#include "nlsym/invariance.hpp"

#include <algorithm>

namespace nlsym {

std::vector<VectorField> kernel_fields(int n) {
  std::vector<VectorField> out;
  out.push_back(named_generator("Pt", n));
  for (int a = 1; a <= n; ++a)
    out.push_back(named_generator("Pa", {{"a", cst(a)}}, n));
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b)
      out.push_back(named_generator("Jab", {{"a", cst(a)}, {"b", cst(b)}}, n));
  return out;
}

std::vector<VectorField> extended_galilei_fields(int n) {
  std::vector<VectorField> out = kernel_fields(n);
  for (int a = 1; a <= n; ++a)
    out.push_back(named_generator("Ga", {{"a", cst(a)}}, n));
  out.push_back(named_generator("M", n));
  return out;
}

Expr classifying_residual_raw(const Expr& F, const VectorField& q) {
  Sym ps = symtab::psi(), cs = symtab::cpsi(), tt = symtab::t();
  Expr Fp = differentiate(F, ps);
  Expr Fc = differentiate(F, cs);
  Expr eta = q.eta;
  Expr eta_c = q.eta_conj();
  std::vector<Expr> terms;
  terms.push_back(prod({eta, Fp}));
  terms.push_back(prod({eta_c, Fc}));
  terms.push_back(prod(
      {sum({differentiate(q.xi0, tt), -differentiate(eta, ps)}), F}));
  terms.push_back(prod({imag_unit(), differentiate(eta, tt)}));
  for (int a = 0; a < q.n; ++a)
    terms.push_back(
        differentiate(differentiate(eta, symtab::x(a + 1)), symtab::x(a + 1)));
  return simplify(sum(std::move(terms)));
}

Expr classifying_residual(const Expr& F, const VectorField& q,
                          const ZeroCheckOptions& opt) {
  DefiningReport rep = check_defining_equations(q, opt);
  if (!rep.pass) {
    std::string which;
    for (const auto& item : rep.items)
      if (item.result.verdict != Verdict::Zero) which += " " + item.name;
    throw DefiningViolated("defining system violated:" + which);
  }
  return classifying_residual_raw(F, q);
}

namespace {

struct JetInfo {
  bool conj;
  int nt;
  std::vector<int> xs;
};

struct JetTable {
  std::map<Sym, JetInfo> info;

  Sym get(bool conj, int nt, std::vector<int> xs) {
    std::sort(xs.begin(), xs.end());
    Sym s = symtab::jet(conj, nt, xs);
    info.emplace(s, JetInfo{conj, nt, xs});
    // the conjugate partner is registered too
    info.emplace(symtab::conj_of(s), JetInfo{!conj, nt, xs});
    return s;
  }

  // extend a field/jet symbol by one spatial derivative
  Sym ext_x(Sym s, int a) {
    if (s == symtab::psi()) return get(false, 0, {a});
    if (s == symtab::cpsi()) return get(true, 0, {a});
    const JetInfo& ji = info.at(s);
    std::vector<int> xs = ji.xs;
    xs.push_back(a);
    return get(ji.conj, ji.nt, std::move(xs));
  }

  Sym ext_t(Sym s) {
    if (s == symtab::psi()) return get(false, 1, {});
    if (s == symtab::cpsi()) return get(true, 1, {});
    const JetInfo& ji = info.at(s);
    return get(ji.conj, ji.nt + 1, ji.xs);
  }

  bool is_field_or_jet(Sym s) const {
    if (s == symtab::psi() || s == symtab::cpsi()) return true;
    return info.count(s) > 0;
  }
};

// field/jet symbols an expression depends on
void collect_field_syms(const Expr& e, const JetTable& jt,
                        std::set<Sym>& out) {
  if (e->kind == Kind::Var && jt.is_field_or_jet(e->sym)) out.insert(e->sym);
  if (e->kind == Kind::Rho || e->kind == Kind::Phi) {
    out.insert(symtab::psi());
    out.insert(symtab::cpsi());
  }
  if (e->kind == Kind::Abs || e->kind == Kind::Re || e->kind == Kind::Im ||
      e->kind == Kind::Conj) {
    std::set<Sym> inner;
    collect_field_syms(e->kids[0], jt, inner);
    for (Sym s : inner) {
      out.insert(s);
      out.insert(symtab::conj_of(s));
    }
    return;
  }
  for (const Expr& k : e->kids) collect_field_syms(k, jt, out);
}

Expr total_d_x(const Expr& e, int a, JetTable& jt) {
  std::set<Sym> syms;
  collect_field_syms(e, jt, syms);
  std::vector<Expr> terms;
  terms.push_back(differentiate(e, symtab::x(a)));
  for (Sym s : syms) {
    Expr de = differentiate(e, s);
    if (is_zero_const(de)) continue;
    terms.push_back(prod({de, var(jt.ext_x(s, a))}));
  }
  return simplify(sum(std::move(terms)));
}

Expr total_d_t(const Expr& e, JetTable& jt) {
  std::set<Sym> syms;
  collect_field_syms(e, jt, syms);
  std::vector<Expr> terms;
  terms.push_back(differentiate(e, symtab::t()));
  for (Sym s : syms) {
    Expr de = differentiate(e, s);
    if (is_zero_const(de)) continue;
    terms.push_back(prod({de, var(jt.ext_t(s))}));
  }
  return simplify(sum(std::move(terms)));
}

}  // namespace

Expr prolongation_residual(const Expr& F, const VectorField& q) {
  const int n = q.n;
  JetTable jt;
  Sym ps = symtab::psi(), cs = symtab::cpsi();

  // prolongation coefficients for u in {psi, cpsi}
  auto phi_t = [&](Sym u, const Expr& W) {
    std::vector<Expr> terms{total_d_t(W, jt)};
    terms.push_back(prod({cst(-1), var(jt.ext_t(u)), total_d_t(q.xi0, jt)}));
    for (int b = 1; b <= n; ++b)
      terms.push_back(prod(
          {cst(-1), var(jt.ext_x(u, b)), total_d_t(q.xi[b - 1], jt)}));
    return simplify(sum(std::move(terms)));
  };
  auto phi_x = [&](Sym u, const Expr& W, int a) {
    std::vector<Expr> terms{total_d_x(W, a, jt)};
    terms.push_back(
        prod({cst(-1), var(jt.ext_t(u)), total_d_x(q.xi0, a, jt)}));
    for (int b = 1; b <= n; ++b)
      terms.push_back(prod(
          {cst(-1), var(jt.ext_x(u, b)), total_d_x(q.xi[b - 1], a, jt)}));
    return simplify(sum(std::move(terms)));
  };
  auto phi_xx = [&](Sym u, const Expr& phi_a, int a) {
    std::vector<Expr> terms{total_d_x(phi_a, a, jt)};
    Sym uta = jt.ext_x(jt.ext_t(u), a);
    terms.push_back(prod({cst(-1), var(uta), total_d_x(q.xi0, a, jt)}));
    for (int c = 1; c <= n; ++c) {
      Sym uca = jt.ext_x(jt.ext_x(u, c), a);
      terms.push_back(
          prod({cst(-1), var(uca), total_d_x(q.xi[c - 1], a, jt)}));
    }
    return simplify(sum(std::move(terms)));
  };

  Expr eta = q.eta;
  std::vector<Expr> res_terms;
  res_terms.push_back(prod({imag_unit(), phi_t(ps, eta)}));
  for (int a = 1; a <= n; ++a)
    res_terms.push_back(phi_xx(ps, phi_x(ps, eta, a), a));
  res_terms.push_back(vf_apply(q, F));
  Expr res = simplify(sum(std::move(res_terms)));

  // eliminate t-jets through the evolution form and its consequences:
  //   psi_t = i (Lap psi + F),   psi_{t a} = D_a of that
  Expr Fc = simplify(conjugate(F));
  auto lap = [&](Sym u) {
    std::vector<Expr> terms;
    for (int b = 1; b <= n; ++b)
      terms.push_back(var(jt.get(u == cs, 0, {b, b})));
    return sum(std::move(terms));
  };
  Expr psi_t_rhs = simplify(prod({imag_unit(), sum({lap(ps), F})}));
  Expr cpsi_t_rhs = simplify(
      prod({cst(Number(Rational(0), Rational(-1))), sum({lap(cs), Fc})}));

  for (int a = 1; a <= n; ++a) {
    Sym pta = jt.ext_x(jt.ext_t(ps), a);
    Sym cta = jt.ext_x(jt.ext_t(cs), a);
    if (depends_on(res, pta))
      res = simplify(substitute(res, pta, total_d_x(psi_t_rhs, a, jt)));
    if (depends_on(res, cta))
      res = simplify(substitute(res, cta, total_d_x(cpsi_t_rhs, a, jt)));
  }
  res = simplify(substitute(res, jt.ext_t(ps), psi_t_rhs));
  res = simplify(substitute(res, jt.ext_t(cs), cpsi_t_rhs));
  return res;
}

Expr prolongation_minus_classifying(const Expr& F, const VectorField& q) {
  return simplify(prolongation_residual(F, q) -
                  classifying_residual_raw(F, q));
}

std::map<std::string, Expr> jet_monomial_coefficients(const Expr& residual) {
  Expr r = simplify(residual);
  std::vector<Expr> terms =
      r->kind == Kind::Sum ? r->kids : std::vector<Expr>{r};
  std::map<std::string, std::vector<Expr>> groups;
  for (const Expr& t : terms) {
    std::vector<Expr> factors =
        t->kind == Kind::Prod ? t->kids : std::vector<Expr>{t};
    std::vector<Expr> jetf, restf;
    for (const Expr& f : factors) {
      Expr b = f->kind == Kind::Pow ? f->kids[0] : f;
      bool is_jet =
          b->kind == Kind::Var && symtab::info(b->sym).kind == SymKind::Jet;
      (is_jet ? jetf : restf).push_back(f);
    }
    std::string key = jetf.empty() ? "1" : to_string(simplify(prod(jetf)));
    groups[key].push_back(restf.empty() ? cst(1) : prod(restf));
  }
  std::map<std::string, Expr> out;
  for (auto& [k, v] : groups) out[k] = simplify(sum(v));
  return out;
}

VerificationReport verify_symmetry(const Expr& F, const VectorField& q,
                                   const VerifyOptions& cfg) {
  VerificationReport rep;
  rep.generator = q.label;
  rep.defining = check_defining_equations(q, cfg.zopt);

  bool all_zero = rep.defining.pass;
  bool indeterminate = false;
  for (const auto& item : rep.defining.items)
    indeterminate =
        indeterminate || item.result.verdict == Verdict::Indeterminate;

  if (rep.defining.pass) {
    rep.classifying = is_zero(classifying_residual_raw(F, q), cfg.zopt);
    rep.ran_classifying = true;
    all_zero = all_zero && rep.classifying.verdict == Verdict::Zero;
    indeterminate =
        indeterminate || rep.classifying.verdict == Verdict::Indeterminate;
  } else {
    rep.note = "defining system violated; classifying residual skipped";
  }

  if (cfg.run_prolongation) {
    rep.prolongation = is_zero(prolongation_residual(F, q), cfg.zopt);
    rep.ran_prolongation = true;
    all_zero = all_zero && rep.prolongation.verdict == Verdict::Zero;
    indeterminate =
        indeterminate || rep.prolongation.verdict == Verdict::Indeterminate;
  }

  rep.status = indeterminate ? VerifyStatus::Indeterminate
               : all_zero    ? VerifyStatus::Pass
                             : VerifyStatus::Fail;
  return rep;
}

std::function<bool(const Expr&)> solution_ideal_check(Expr F,
                                                      ZeroCheckOptions opt,
                                                      int n) {
  return [F = std::move(F), opt = std::move(opt), n](const Expr& eta0) {
    // i eta0_t + Lap eta0 + F(eta0, eta0*) must vanish identically
    Expr u = simplify(eta0);
    Expr Fu = substitute(substitute(F, symtab::psi(), u), symtab::cpsi(),
                         simplify(conjugate(u)));
    std::vector<Expr> terms;
    terms.push_back(prod({imag_unit(), differentiate(u, symtab::t())}));
    for (int a = 1; a <= n; ++a)
      terms.push_back(differentiate(differentiate(u, symtab::x(a)), symtab::x(a)));
    terms.push_back(Fu);
    return is_zero(sum(std::move(terms)), opt).verdict == Verdict::Zero;
  };
}

}  // namespace nlsym
