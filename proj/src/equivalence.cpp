#include "nlsym/equivalence.hpp"

#include <cmath>

namespace nlsym {

EquivTransform compose(const EquivTransform& second,
                       const EquivTransform& first) {
  EquivTransform t;
  t.delta = first.delta * second.delta;
  t.alpha = second.alpha * first.alpha;
  t.beta = second.alpha * first.beta + second.beta;
  return t;
}

EquivTransform inverse(const EquivTransform& t) {
  EquivTransform r;
  r.delta = Number(1) / t.delta;
  r.alpha = Number(1) / t.alpha;
  r.beta = -(r.alpha * t.beta);
  return r;
}

Expr apply_to_F(const EquivTransform& t, const Expr& F) {
  if (t.delta.is_zero() || t.alpha.is_zero())
    throw std::invalid_argument("equivalence transform needs delta, alpha != 0");
  Number ainv = Number(1) / t.alpha;
  Expr psi_old = prod({cst(ainv), sum({v_psi(), cst(-t.beta)})});
  Expr cpsi_old =
      prod({cst(ainv.conj()), sum({v_cpsi(), cst(-t.beta.conj())})});
  // substitute through a fresh placeholder to avoid capture
  Sym tmp = symtab::fresh_formal("subst");
  Expr body = substitute(F, symtab::psi(), var(tmp));
  body = substitute(body, symtab::cpsi(), cpsi_old);
  body = substitute(body, tmp, psi_old);
  Number factor = t.alpha / (t.delta * t.delta);
  return simplify(prod({cst(factor), body}));
}

namespace {

// psi_old = A(t) psi_new + B(t,x)  =>
// F~ = A^{-1} [ i A' psi + i B_t + Lap B + F(A psi + B) ]
Expr apply_affine_gauge(const Expr& F, const Expr& A, const Expr& B, int n) {
  Sym tmp = symtab::fresh_formal("subst");
  Expr psi_old = sum({prod({A, v_psi()}), B});
  Expr cpsi_old = simplify(conjugate(psi_old));
  Expr body = substitute(F, symtab::psi(), var(tmp));
  body = substitute(body, symtab::cpsi(), cpsi_old);
  body = substitute(body, tmp, psi_old);

  std::vector<Expr> extra;
  extra.push_back(prod({imag_unit(), differentiate(A, symtab::t()), v_psi()}));
  extra.push_back(prod({imag_unit(), differentiate(B, symtab::t())}));
  for (int a = 1; a <= n; ++a)
    extra.push_back(differentiate(differentiate(B, symtab::x(a)), symtab::x(a)));
  extra.push_back(body);
  return simplify(prod({pow(A, cst(-1)), sum(std::move(extra))}));
}

Number step_param(const ChainStep& s, const std::string& key,
                  Number fallback = Number(0)) {
  auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}

}  // namespace

Expr apply_step(const ChainStep& step, const Expr& F, int n) {
  if (step.kind == "scale_shift") {
    EquivTransform t;
    t.delta = step_param(step, "delta", Number(1));
    t.alpha = step_param(step, "alpha", Number(1));
    t.beta = step_param(step, "beta", Number(0));
    return apply_to_F(t, F);
  }
  if (step.kind == "shift") {
    Number nu0 = step_param(step, "nu0"), nu1 = step_param(step, "nu1"),
           nu2 = step_param(step, "nu2");
    std::vector<Expr> xx;
    for (int a = 1; a <= n; ++a) xx.push_back(pow(v_x(a), cst(2)));
    Expr B = simplify(-sum({cst(nu0), prod({cst(nu1), v_t()}),
                            prod({cst(nu2), sum(std::move(xx))})}));
    return apply_affine_gauge(F, cst(1), B, n);
  }
  if (step.kind == "phase_gauge") {
    // psi~ = psi e^{i sigma1 t}: A = e^{-i sigma1 t}
    Number s1 = step_param(step, "sigma1");
    Expr A = exp(prod({cst(-(Number::i() * s1)), v_t()}));
    return apply_affine_gauge(F, A, cst(0), n);
  }
  if (step.kind == "amp_gauge") {
    // psi~ = psi e^{-s t}: A = e^{s t}
    Number s = step_param(step, "s");
    Expr A = exp(prod({cst(s), v_t()}));
    return apply_affine_gauge(F, A, cst(0), n);
  }
  throw std::invalid_argument("unknown chain step: " + step.kind);
}

Expr apply_chain(const TransformChain& chain, Expr F, int n) {
  for (const ChainStep& s : chain) F = apply_step(s, F, n);
  return simplify(F);
}

std::vector<EquivField> equivalence_algebra(int n) {
  std::vector<EquivField> out;
  Expr FF = v_param("F_slot");  // stands for the arbitrary element F
  auto push = [&](VectorField base, Expr thetaF, std::string label) {
    base.label = label;
    out.push_back(EquivField{std::move(base), simplify(thetaF),
                             std::move(label)});
  };
  push(named_generator("Pt", n), cst(0), "P_t");
  for (int a = 1; a <= n; ++a)
    push(named_generator("Pa", {{"a", cst(a)}}, n), cst(0),
         "P_" + std::to_string(a));
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b)
      push(named_generator("Jab", {{"a", cst(a)}, {"b", cst(b)}}, n), cst(0),
           "J_" + std::to_string(a) + std::to_string(b));
  // t d_t + (1/2) x_a d_a - F d_F - F* d_F*
  push(named_generator("D", n), -FF, "D_hat");
  {  // d_psi + d_cpsi
    VectorField q = vf_zero(n);
    q.eta = cst(1);
    push(q, cst(0), "shift_re");
  }
  {  // i (d_psi - d_cpsi)
    VectorField q = vf_zero(n);
    q.eta = imag_unit();
    push(q, cst(0), "shift_im");
  }
  // psi d_psi + psi* d_cpsi + F d_F + F* d_F*
  push(named_generator("I", n), FF, "I_hat");
  // i (psi d_psi - psi* d_cpsi + F d_F - F* d_F*)
  push(named_generator("M", n), prod({imag_unit(), FF}), "M_hat");
  return out;
}

EquivTransform equiv_flow(const std::string& label, double s) {
  EquivTransform t;
  if (label == "P_t" || label.rfind("P_", 0) == 0 || label.rfind("J_", 0) == 0)
    return t;  // trivial action on F
  if (label == "D_hat") {
    t.delta = Number(std::exp(s / 2));
    return t;
  }
  if (label == "shift_re") {
    t.beta = Number(s);
    return t;
  }
  if (label == "shift_im") {
    t.beta = Number(cplx(0.0, s));
    return t;
  }
  if (label == "I_hat") {
    t.alpha = Number(std::exp(s));
    return t;
  }
  if (label == "M_hat") {
    t.alpha = Number(std::polar(1.0, s));
    return t;
  }
  throw std::invalid_argument("unknown equivalence generator: " + label);
}

// --- structure detection ------------------------------------------------

namespace {

struct Probe {
  int n;
  Rng rng;
  explicit Probe(int n_, uint64_t seed) : n(n_), rng(seed) {}

  EvalEnv draw() {
    EvalEnv env;
    env.set(symtab::t(), cplx(rng.uniform(-1.2, 1.2), 0));
    for (int a = 1; a <= 4; ++a)
      env.set(symtab::x(a), cplx(rng.uniform(-1.2, 1.2), 0));
    cplx psi = std::polar(rng.uniform(0.35, 1.7), rng.uniform(-1.1, 1.1));
    env.set(symtab::psi(), psi);
    env.set(symtab::cpsi(), std::conj(psi));
    return env;
  }

  // value when e is constant over samples; nullopt otherwise
  std::optional<cplx> constant_value(const Expr& e, int pts = 8,
                                     double tol = 1e-8) {
    std::optional<cplx> first;
    for (int k = 0; k < pts; ++k) {
      EvalEnv env = draw();
      cplx v;
      try {
        v = eval_numeric(e, env);
      } catch (const SingularEval&) {
        continue;
      }
      if (!first) {
        first = v;
      } else if (std::abs(v - *first) > tol * (1.0 + std::abs(*first))) {
        return std::nullopt;
      }
    }
    return first;
  }
};

Number exactify(cplx v) {
  auto near = [](double x, double tol = 1e-9) {
    return std::abs(x) < tol;
  };
  // snap tiny components
  if (near(v.real(), 1e-11 * (1 + std::abs(v.imag())))) v.real(0.0);
  if (near(v.imag(), 1e-11 * (1 + std::abs(v.real())))) v.imag(0.0);
  auto ratio = [](double x) -> std::optional<Rational> {
    double best_err = 1e-9 * (1.0 + std::abs(x));
    for (long long den = 1; den <= 64; ++den) {
      double num = x * double(den);
      double rn = std::round(num);
      if (std::abs(rn) > 1e15) return std::nullopt;
      if (std::abs(num - rn) * (1.0 / double(den)) <= best_err)
        return Rational((long long)rn, den);
    }
    return std::nullopt;
  };
  auto r = ratio(v.real()), i = ratio(v.imag());
  if (r && i) return Number(*r, *i);
  return Number(v);
}

bool verify_equal(const Expr& a, const Expr& b, int n) {
  ZeroCheckOptions z;
  z.sampler.n = n;
  z.samples = 80;
  z.tol = 1e-8;
  return is_zero(a - b, z).verdict == Verdict::Zero;
}

Expr rho_pow_phase(const Number& g1, const Number& g2) {
  return prod({pow(rho(), cst(g1)), exp(prod({cst(g2), phi()}))});
}

Expr re_psi() { return re(v_psi()); }

Expr abs_pow(const Expr& u, const Number& g) {
  return pow(abs(u), cst(g));
}

}  // namespace

FStructure analyze_structure(const Expr& F_in, int n, uint64_t seed) {
  FStructure st;
  Expr F = simplify(F_in);
  Probe probe(n, seed);
  Sym ps = symtab::psi(), cs = symtab::cpsi();

  if (is_zero_const(F)) {
    st.family = FFamily::Zero;
    st.verified = true;
    return st;
  }

  // linear: all second Wirtinger derivatives vanish
  Expr Fp = differentiate(F, ps), Fc = differentiate(F, cs);
  {
    ZeroCheckOptions z;
    z.sampler.n = n;
    z.samples = 60;
    bool lin = is_zero(differentiate(Fp, ps), z).zero() &&
               is_zero(differentiate(Fp, cs), z).zero() &&
               is_zero(differentiate(Fc, cs), z).zero();
    if (lin) {
      auto s1 = probe.constant_value(Fp), s2 = probe.constant_value(Fc);
      if (s1 && s2) {
        Number n1 = exactify(*s1), n2 = exactify(*s2);
        Expr s0e = simplify(F - prod({cst(n1), v_psi()}) -
                            prod({cst(n2), v_cpsi()}));
        auto s0 = probe.constant_value(s0e);
        if (s0) {
          Number n0 = exactify(*s0);
          Expr rebuilt = sum({cst(n0), prod({cst(n1), v_psi()}),
                              prod({cst(n2), v_cpsi()})});
          if (verify_equal(F, rebuilt, n)) {
            st.family = FFamily::Linear;
            st.s0 = n0;
            st.s1 = n1;
            st.s2 = n2;
            st.verified = true;
            return st;
          }
        }
      }
    }
  }

  // G = F / psi families
  {
    Expr G = simplify(F / v_psi());
    Expr Gp = differentiate(G, ps), Gc = differentiate(G, cs);
    Expr W1 = simplify(prod({v_psi(), Gp}) / G);
    Expr W2 = simplify(prod({v_cpsi(), Gc}) / G);
    auto w1 = probe.constant_value(W1), w2 = probe.constant_value(W2);
    if (w1 && w2) {
      // sigma rho^g1 e^{g2 phi} psi: psi G_psi / G = (g1 - i g2)/2
      cplx g1 = *w1 + *w2;
      cplx g2 = cplx(0, 1) * (*w1 - *w2);
      if (std::abs(g1.imag()) < 1e-7 && std::abs(g2.imag()) < 1e-7) {
        Number ng1 = exactify(cplx(g1.real(), 0.0));
        Number ng2 = exactify(cplx(g2.real(), 0.0));
        Expr mono = rho_pow_phase(ng1, ng2);
        auto sig = probe.constant_value(simplify(G / mono));
        if (sig) {
          Number nsig = exactify(*sig);
          Expr rebuilt = prod({cst(nsig), rho_pow_phase(ng1, ng2), v_psi()});
          if (verify_equal(F, rebuilt, n)) {
            st.family = FFamily::PowerMonomial;
            st.sigma = nsig;
            st.g1 = ng1;
            st.g2 = ng2;
            st.verified = true;
            return st;
          }
        }
      }
    }
    // (A ln rho + B phi + C) psi: psi G_psi = (A - iB)/2 constant
    Expr U1 = simplify(prod({v_psi(), Gp}));
    Expr U2 = simplify(prod({v_cpsi(), Gc}));
    auto u1 = probe.constant_value(U1), u2 = probe.constant_value(U2);
    if (u1 && u2 && (std::abs(*u1) > 1e-10 || std::abs(*u2) > 1e-10)) {
      cplx A = *u1 + *u2;
      cplx B = cplx(0, 1) * (*u1 - *u2);
      Number nA = exactify(A), nB = exactify(B);
      Expr Ce = simplify(G - prod({cst(nA), ln(rho())}) -
                         prod({cst(nB), phi()}));
      auto c = probe.constant_value(Ce);
      if (c) {
        Number nC = exactify(*c);
        Expr rebuilt = prod({sum({prod({cst(nA), ln(rho())}),
                                  prod({cst(nB), phi()}), cst(nC)}),
                             v_psi()});
        if (verify_equal(F, rebuilt, n)) {
          st.family = FFamily::LogPhase;
          st.A = nA;
          st.B = nB;
          st.C = nC;
          st.verified = true;
          return st;
        }
      }
    }
  }

  // functions of u = Re psi: F_psi == F_cpsi
  {
    ZeroCheckOptions z;
    z.sampler.n = n;
    z.samples = 60;
    if (is_zero(Fp - Fc, z).zero()) {
      // evaluate h(u) := F(u + 0i) on the real slice
      auto eval_u = [&](const Expr& e, double u) {
        EvalEnv env;
        env.set(symtab::t(), 0.3);
        for (int a = 1; a <= 4; ++a) env.set(symtab::x(a), 0.2 * a);
        env.set(ps, cplx(u, 0));
        env.set(cs, cplx(u, 0));
        return eval_numeric(e, env);
      };
      Expr hu = simplify(prod({cst(2), Fp}));   // dF/du
      Expr huu = simplify(prod({cst(2), differentiate(hu, ps)}));
      // q(u) = h''/h'
      std::vector<double> us = {0.45, 0.8, 1.15, 1.5};
      std::vector<cplx> qs;
      bool ok = true;
      for (double u : us) {
        try {
          cplx d1 = eval_u(hu, u), d2 = eval_u(huu, u);
          if (std::abs(d1) < 1e-12) {
            ok = false;
            break;
          }
          qs.push_back(d2 / d1);
        } catch (const SingularEval&) {
          ok = false;
          break;
        }
      }
      if (ok) {
        bool q_const = true;
        for (const cplx& q : qs)
          q_const = q_const &&
                    std::abs(q - qs[0]) < 1e-7 * (1.0 + std::abs(qs[0]));
        if (q_const && std::abs(qs[0]) > 1e-9 &&
            std::abs(qs[0].imag()) < 1e-7) {
          // exponential family sigma e^{lam u} + w
          Number lam = exactify(cplx(qs[0].real(), 0.0));
          Expr eu = exp(prod({cst(lam), re_psi()}));
          auto sig = probe.constant_value(simplify(prod({cst(2), Fp}) /
                                                   simplify(prod(
                                                       {cst(lam), eu}))));
          if (sig) {
            Number nsig = exactify(*sig);
            Expr we = simplify(F - prod({cst(nsig), eu}));
            auto w = probe.constant_value(we);
            if (w) {
              Number nw = exactify(*w);
              Expr rebuilt = sum({prod({cst(nsig), eu}), cst(nw)});
              if (verify_equal(F, rebuilt, n)) {
                st.family = FFamily::ReExp;
                st.sigma = nsig;
                st.lam = lam;
                st.w = nw;
                st.verified = true;
                return st;
              }
            }
          }
        } else if (!q_const || std::abs(qs[0]) > 1e-9) {
          // 1/q is linear in u for |u-u0|^g and ln|u-u0|
          // 1/q = (u - u0)/(g - 1)
          std::vector<double> inv_re;
          bool real_ok = true;
          for (const cplx& q : qs) {
            cplx iv = 1.0 / q;
            if (std::abs(iv.imag()) > 1e-7 * (1 + std::abs(iv))) real_ok = false;
            inv_re.push_back(iv.real());
          }
          if (real_ok) {
            double slope = (inv_re[3] - inv_re[0]) / (us[3] - us[0]);
            double icpt = inv_re[0] - slope * us[0];
            // consistency on the middle points
            bool lin_ok = true;
            for (size_t k = 1; k + 1 < us.size(); ++k)
              lin_ok = lin_ok && std::abs(slope * us[k] + icpt - inv_re[k]) <
                                     1e-6 * (1 + std::abs(inv_re[k]));
            if (lin_ok && std::abs(slope) > 1e-9) {
              double g = 1.0 + 1.0 / slope;
              double u0 = -icpt / slope;
              Number ng = exactify(cplx(g, 0.0));
              Number nu0 = exactify(cplx(u0, 0.0));
              Expr um = simplify(re_psi() - cst(nu0));
              if (std::abs(g) < 1e-9) {
                // logarithmic: sigma ln|u-u0| + w
                Expr lg = ln(abs(um));
                auto sig = probe.constant_value(
                    simplify(prod({cst(2), Fp, um})));
                if (sig) {
                  Number nsig = exactify(*sig);
                  Expr we = simplify(F - prod({cst(nsig), lg}));
                  auto w = probe.constant_value(we);
                  if (w) {
                    Number nw = exactify(*w);
                    if (verify_equal(F, sum({prod({cst(nsig), lg}), cst(nw)}),
                                     n)) {
                      st.family = FFamily::ReLog;
                      st.sigma = nsig;
                      st.u0 = nu0;
                      st.w = nw;
                      st.verified = true;
                      return st;
                    }
                  }
                }
              } else {
                Expr pg = abs_pow(um, ng);
                auto sig = probe.constant_value(simplify(F / pg));
                Number nsig;
                bool have = false;
                if (sig) {
                  nsig = exactify(*sig);
                  have = verify_equal(F, prod({cst(nsig), pg}), n);
                }
                if (!have) {
                  // allow an additive constant w
                  auto s2 = probe.constant_value(
                      simplify(prod({cst(2), Fp}) /
                               simplify(differentiate(pg, ps) * cst(2))));
                  if (s2) {
                    nsig = exactify(*s2);
                    Expr we = simplify(F - prod({cst(nsig), pg}));
                    auto w = probe.constant_value(we);
                    if (w) {
                      Number nw = exactify(*w);
                      if (verify_equal(
                              F, sum({prod({cst(nsig), pg}), cst(nw)}), n)) {
                        st.family = FFamily::RePower;
                        st.sigma = nsig;
                        st.g1 = ng;
                        st.u0 = nu0;
                        st.w = nw;
                        st.verified = true;
                        return st;
                      }
                    }
                  }
                } else {
                  st.family = FFamily::RePower;
                  st.sigma = nsig;
                  st.g1 = ng;
                  st.u0 = nu0;
                  st.w = Number(0);
                  st.verified = true;
                  return st;
                }
              }
            }
          }
        }
      }
    }
  }

  st.family = FFamily::Other;
  return st;
}

// --- normalization ------------------------------------------------------

namespace {

void push_step(TransformChain& chain, std::string kind,
               std::map<std::string, Number> params) {
  chain.push_back(ChainStep{std::move(kind), std::move(params)});
}

bool near_one(double v) { return std::abs(v - 1.0) < 1e-12; }

}  // namespace

NormalizeResult normalize(const Expr& F_in, int n) {
  NormalizeResult out;
  Expr F = simplify(F_in);
  FStructure st = analyze_structure(F, n);

  auto finish = [&](Expr canonical, bool ok, std::string note = "") {
    out.canonical = simplify(canonical);
    out.normalized = ok;
    out.note = std::move(note);
    out.structure = analyze_structure(out.canonical, n);
    return out;
  };

  switch (st.family) {
    case FFamily::Zero:
      return finish(cst(0), true);

    case FFamily::Linear: {
      Expr cur = F;
      Number s0 = st.s0, s1 = st.s1, s2 = st.s2;
      if (!s0.is_zero()) {
        // try nu0 with s1 nu0 + s2 conj(nu0) = s0, a real 2x2 system in
        // (Re nu0, Im nu0)
        cplx a = s1.value(), b = s2.value(), c = s0.value();
        double m00 = a.real() + b.real(), m01 = -a.imag() + b.imag();
        double m10 = a.imag() + b.imag(), m11 = a.real() - b.real();
        double dd = m00 * m11 - m01 * m10;
        if (std::abs(dd) > 1e-12) {
          double x = (c.real() * m11 - c.imag() * m01) / dd;
          double y = (m00 * c.imag() - m10 * c.real()) / dd;
          Number nu0 = exactify(cplx(x, y));
          push_step(out.chain, "shift", {{"nu0", nu0}});
          cur = apply_step(out.chain.back(), cur, n);
        } else {
          // absorb into nu1: -i nu1 = -s0
          Number nu1 = Number(0) - Number::i() * s0;
          push_step(out.chain, "shift", {{"nu1", nu1}});
          cur = apply_step(out.chain.back(), cur, n);
        }
        FStructure st2 = analyze_structure(cur, n);
        s0 = st2.s0;
        s1 = st2.s1;
        s2 = st2.s2;
      }
      if (s2.is_zero()) {
        if (!s1.is_zero()) {
          // full complex gauge: phase for the real part, amplitude for the
          // imaginary part
          if (std::abs(s1.value().real()) > 1e-14) {
            push_step(out.chain, "phase_gauge",
                      {{"sigma1", -Number(s1.value().real())}});
            cur = apply_step(out.chain.back(), cur, n);
          }
          if (std::abs(s1.value().imag()) > 1e-14) {
            push_step(out.chain, "amp_gauge",
                      {{"s", Number(-s1.value().imag())}});
            cur = apply_step(out.chain.back(), cur, n);
          }
        }
        return finish(cur, true);  // case 2.1 canonical: F = 0
      }
      // s2 != 0: amplitude gauge kills Im s1, then alpha/delta set s2 = 1
      if (std::abs(s1.value().imag()) > 1e-14) {
        push_step(out.chain, "amp_gauge", {{"s", Number(-s1.value().imag())}});
        cur = apply_step(out.chain.back(), cur, n);
        FStructure st2 = analyze_structure(cur, n);
        s1 = st2.s1;
        s2 = st2.s2;
      }
      cplx s2v = s2.value();
      if (!(near_one(std::abs(s2v)) && std::abs(s2v.imag()) < 1e-12)) {
        Number alpha = Number(std::polar(1.0, -std::arg(s2v) / 2));
        Number delta = Number(std::sqrt(std::abs(s2v)));
        if (std::abs(std::arg(s2v)) < 1e-13) {
          alpha = Number(1);
          auto rq = Rational::sqrt_exact(s2.re_q());
          if (s2.exact() && rq) delta = Number(*rq);
        }
        push_step(out.chain, "scale_shift",
                  {{"delta", delta}, {"alpha", alpha}});
        cur = apply_step(out.chain.back(), cur, n);
      }
      return finish(cur, true);  // case 2.2 canonical: gamma psi + cpsi
    }

    case FFamily::PowerMonomial: {
      Expr cur = F;
      double mod = std::abs(st.sigma.value());
      if (!near_one(mod)) {
        double g1 = st.g1.value().real(), g2 = st.g2.value().real();
        Number alpha(1), delta(1);
        if (std::abs(g1) > 1e-12) {
          alpha = Number(std::pow(mod, 1.0 / g1));
        } else if (std::abs(g2) > 1e-12) {
          alpha = Number(std::polar(1.0, std::log(mod) / g2));
        } else {
          delta = Number(std::sqrt(mod));  // pure sigma psi: linear anyway
        }
        push_step(out.chain, "scale_shift",
                  {{"delta", delta}, {"alpha", alpha}});
        cur = apply_step(out.chain.back(), cur, n);
      }
      return finish(cur, true);
    }

    case FFamily::LogPhase: {
      Expr cur = F;
      // kill C through ln|alpha|, arg(alpha): C~ = C - A ln r - B theta
      cplx A = st.A.value(), B = st.B.value(), C = st.C.value();
      if (std::abs(C) > 1e-13) {
        double m00 = A.real(), m01 = B.real(), m10 = A.imag(),
               m11 = B.imag();
        double dd = m00 * m11 - m01 * m10;
        if (std::abs(dd) > 1e-12) {
          double lr = (C.real() * m11 - C.imag() * m01) / dd;
          double th = (m00 * C.imag() - m10 * C.real()) / dd;
          push_step(out.chain, "scale_shift",
                    {{"alpha", Number(std::polar(std::exp(lr), th))}});
          cur = apply_step(out.chain.back(), cur, n);
        } else if (std::abs(A) > 1e-12 || std::abs(B) > 1e-12) {
          // project C onto the reachable line
          cplx dir = std::abs(A) > std::abs(B) ? A : B;
          double span = std::norm(dir);
          double coef = (C.real() * dir.real() + C.imag() * dir.imag()) / span;
          if (std::abs(coef) > 1e-13) {
            if (std::abs(A) > std::abs(B))
              push_step(out.chain, "scale_shift",
                        {{"alpha", Number(std::exp(coef))}});
            else
              push_step(out.chain, "scale_shift",
                        {{"alpha", Number(std::polar(1.0, coef))}});
            cur = apply_step(out.chain.back(), cur, n);
          }
          // a residual Re C for B=0, A real is killable by phase gauge
          FStructure st2 = analyze_structure(cur, n);
          if (st2.family == FFamily::LogPhase &&
              std::abs(st2.B.value()) < 1e-12 &&
              std::abs(st2.C.value().real()) > 1e-13) {
            push_step(out.chain, "phase_gauge",
                      {{"sigma1", Number(-st2.C.value().real())}});
            cur = apply_step(out.chain.back(), cur, n);
          }
        }
      }
      // delta scaling: largest |delta_j| to 1
      FStructure st3 = analyze_structure(cur, n);
      if (st3.family == FFamily::LogPhase) {
        cplx A3 = st3.A.value(), B3 = st3.B.value();
        double m = std::max({std::abs(A3.real()), std::abs(A3.imag()),
                             std::abs(B3.real()), std::abs(B3.imag())});
        if (m > 1e-13 && !near_one(m)) {
          Number delta;
          Number mnum = exactify(cplx(m, 0.0));
          auto rq = mnum.exact() ? Rational::sqrt_exact(mnum.re_q())
                                 : std::optional<Rational>{};
          delta = rq ? Number(*rq) : Number(std::sqrt(m));
          push_step(out.chain, "scale_shift", {{"delta", delta}});
          cur = apply_step(out.chain.back(), cur, n);
        }
      }
      return finish(cur, true);
    }

    case FFamily::RePower:
    case FFamily::ReLog:
    case FFamily::ReExp: {
      Expr cur = F;
      // real shift kills u0; imaginary nu1/nu2 shifts kill w
      if (st.family != FFamily::ReExp && !st.u0.is_zero()) {
        push_step(out.chain, "shift", {{"nu0", -st.u0}});
        cur = apply_step(out.chain.back(), cur, n);
      }
      if (!st.w.is_zero()) {
        cplx w = st.w.value();
        std::map<std::string, Number> ps;
        if (std::abs(w.real()) > 1e-14)
          ps["nu1"] = Number(cplx(0.0, -w.real()));
        if (std::abs(w.imag()) > 1e-14)
          ps["nu2"] = Number(cplx(0.0, w.imag() / (2.0 * n)));
        if (!ps.empty()) {
          push_step(out.chain, "shift", std::move(ps));
          cur = apply_step(out.chain.back(), cur, n);
        }
      }
      if (st.family == FFamily::ReExp) {
        double lam = st.lam.value().real();
        if (!near_one(lam)) {
          push_step(out.chain, "scale_shift", {{"alpha", exactify(cplx(lam, 0.0))}});
          cur = apply_step(out.chain.back(), cur, n);
        }
      }
      // modulus of sigma -> 1, ties toward nonnegative real part
      FStructure st2 = analyze_structure(cur, n);
      if (st2.family == FFamily::RePower || st2.family == FFamily::ReLog ||
          st2.family == FFamily::ReExp) {
        cplx sg = st2.sigma.value();
        double mod = std::abs(sg);
        bool flip = st2.family == FFamily::RePower && sg.real() < -1e-13;
        if (!near_one(mod) || flip) {
          if (st2.family == FFamily::RePower &&
              std::abs(st2.g1.value().real() - 1.0) > 1e-9) {
            double g = st2.g1.value().real();
            // sigma~ = q sigma with q = alpha |alpha|^-g over real alpha
            double target = (flip ? -1.0 : 1.0) / mod;
            double am = std::pow(std::abs(target), 1.0 / (1.0 - g));
            double aval = (target < 0 ? -am : am);
            push_step(out.chain, "scale_shift", {{"alpha", Number(aval)}});
            cur = apply_step(out.chain.back(), cur, n);
          } else if (st2.family == FFamily::ReLog) {
            // F~ = delta^-2 alpha sigma ln|u/alpha| needs alpha = 1 to keep
            // the pattern; use delta only: sigma~ = delta^-2 sigma
            push_step(out.chain, "scale_shift",
                      {{"delta", Number(std::sqrt(mod))}});
            cur = apply_step(out.chain.back(), cur, n);
          } else {
            push_step(out.chain, "scale_shift",
                      {{"delta", Number(std::sqrt(mod))}});
            cur = apply_step(out.chain.back(), cur, n);
          }
        }
      }
      return finish(cur, true);
    }

    default:
      break;
  }
  out.canonical = F;
  out.normalized = false;
  out.note = "NOT_NORMALIZABLE: no rule applies";
  out.structure = st;
  return out;
}

}  // namespace nlsym
