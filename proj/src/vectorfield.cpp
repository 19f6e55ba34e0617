#include "nlsym/vectorfield.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace nlsym {

bool VectorField::is_zero_field() const {
  if (!is_zero_const(simplify(xi0))) return false;
  for (const Expr& x : xi)
    if (!is_zero_const(simplify(x))) return false;
  return is_zero_const(simplify(eta));
}

VectorField vf_zero(int n) {
  VectorField q;
  q.n = n;
  q.xi0 = cst(0);
  q.xi.assign(n, cst(0));
  q.eta = cst(0);
  q.label = "0";
  return q;
}

VectorField vf_add(const VectorField& a, const VectorField& b) {
  VectorField q = vf_zero(a.n);
  q.xi0 = simplify(a.xi0 + b.xi0);
  for (int i = 0; i < a.n; ++i) q.xi[i] = simplify(a.xi[i] + b.xi[i]);
  q.eta = simplify(a.eta + b.eta);
  q.label = a.label + "+" + b.label;
  return q;
}

VectorField vf_scale(const Expr& c, const VectorField& a) {
  VectorField q = vf_zero(a.n);
  q.xi0 = simplify(prod({c, a.xi0}));
  for (int i = 0; i < a.n; ++i) q.xi[i] = simplify(prod({c, a.xi[i]}));
  q.eta = simplify(prod({c, a.eta}));
  q.label = "(" + to_string(c) + ")*" + a.label;
  return q;
}

VectorField vf_scale(double c, const VectorField& a) {
  return vf_scale(cst(c), a);
}

VectorField vf_simplified(VectorField q) {
  q.xi0 = simplify(q.xi0);
  for (Expr& x : q.xi) x = simplify(x);
  q.eta = simplify(q.eta);
  return q;
}

Expr vf_apply(const VectorField& q, const Expr& g) {
  std::vector<Expr> terms;
  terms.push_back(prod({q.xi0, differentiate(g, symtab::t())}));
  for (int a = 0; a < q.n; ++a)
    terms.push_back(prod({q.xi[a], differentiate(g, symtab::x(a + 1))}));
  terms.push_back(prod({q.eta, differentiate(g, symtab::psi())}));
  terms.push_back(prod({q.eta_conj(), differentiate(g, symtab::cpsi())}));
  return simplify(sum(std::move(terms)));
}

VectorField lie_bracket(const VectorField& q1, const VectorField& q2) {
  VectorField b = vf_zero(q1.n);
  b.xi0 = simplify(vf_apply(q1, q2.xi0) - vf_apply(q2, q1.xi0));
  for (int a = 0; a < q1.n; ++a)
    b.xi[a] = simplify(vf_apply(q1, q2.xi[a]) - vf_apply(q2, q1.xi[a]));
  b.eta = simplify(vf_apply(q1, q2.eta) - vf_apply(q2, q1.eta));
  b.label = "[" + q1.label + "," + q2.label + "]";
  return b;
}

VectorField from_ansatz(const AnsatzParams& p, int n) {
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Number kab = (int)p.kappa.size() > a && (int)p.kappa[a].size() > b
                       ? p.kappa[a][b]
                       : Number(0);
      Number kba = (int)p.kappa.size() > b && (int)p.kappa[b].size() > a
                       ? p.kappa[b][a]
                       : Number(0);
      if (!((kab + kba).is_zero()))
        throw std::invalid_argument("kappa must be antisymmetric");
    }

  Expr xi0t = differentiate(p.xi0, symtab::t());
  Expr xi0tt = differentiate(xi0t, symtab::t());

  VectorField q = vf_zero(n);
  q.xi0 = simplify(p.xi0);
  for (int a = 0; a < n; ++a) {
    std::vector<Expr> terms;
    terms.push_back(prod({cst(Number(Rational(1, 2))), xi0t, v_x(a + 1)}));
    for (int b = 0; b < n; ++b) {
      Number kab = (int)p.kappa.size() > a && (int)p.kappa[a].size() > b
                       ? p.kappa[a][b]
                       : Number(0);
      if (!kab.is_zero()) terms.push_back(prod({cst(kab), v_x(b + 1)}));
    }
    if ((int)p.chi.size() > a) terms.push_back(p.chi[a]);
    q.xi[a] = simplify(sum(std::move(terms)));
  }

  std::vector<Expr> eta1_terms;
  std::vector<Expr> xx;
  for (int a = 0; a < n; ++a) xx.push_back(pow(v_x(a + 1), cst(2)));
  eta1_terms.push_back(prod(
      {cst(Number(Rational(0), Rational(1, 8))), xi0tt, sum(std::move(xx))}));
  for (int a = 0; a < n; ++a) {
    if ((int)p.chi.size() > a)
      eta1_terms.push_back(prod({cst(Number(Rational(0), Rational(1, 2))),
                                 differentiate(p.chi[a], symtab::t()),
                                 v_x(a + 1)}));
  }
  eta1_terms.push_back(p.zeta);
  Expr eta1 = sum(std::move(eta1_terms));
  q.eta = simplify(sum({prod({eta1, v_psi()}), p.eta0}));
  q.label = "ansatz";
  return q;
}

Expr cos_of(const Expr& u) {
  return prod({cst(Number(Rational(1, 2))),
               sum({exp(prod({imag_unit(), u})),
                    exp(prod({cst(Number(Rational(0), Rational(-1))), u}))})});
}

Expr sin_of(const Expr& u) {
  return prod({cst(Number(Rational(0), Rational(-1, 2))),
               sum({exp(prod({imag_unit(), u})),
                    -exp(prod({cst(Number(Rational(0), Rational(-1))), u}))})});
}

namespace {

int int_arg(const GenArgs& args, const std::string& key) {
  auto it = args.find(key);
  if (it == args.end())
    throw std::invalid_argument("named_generator: missing argument " + key);
  Number v;
  long long k;
  if (!is_const(it->second, &v) || !v.is_integer(&k))
    throw std::invalid_argument("named_generator: argument " + key +
                                " must be an integer");
  return (int)k;
}

Expr expr_arg(const GenArgs& args, const std::string& key) {
  auto it = args.find(key);
  if (it == args.end())
    throw std::invalid_argument("named_generator: missing argument " + key);
  return it->second;
}

Expr opt_arg(const GenArgs& args, const std::string& key, Expr fallback) {
  auto it = args.find(key);
  return it == args.end() ? fallback : it->second;
}

VectorField gen_I(int n) {
  VectorField q = vf_zero(n);
  q.eta = v_psi();
  q.label = "I";
  return q;
}

VectorField gen_M(int n) {
  VectorField q = vf_zero(n);
  q.eta = simplify(prod({imag_unit(), v_psi()}));
  q.label = "M";
  return q;
}

VectorField gen_D(int n) {
  VectorField q = vf_zero(n);
  q.xi0 = v_t();
  for (int a = 0; a < n; ++a)
    q.xi[a] = simplify(prod({cst(Number(Rational(1, 2))), v_x(a + 1)}));
  q.label = "D";
  return q;
}

// coefI(t) I + coefM(t) M as an eta-only field: eta = (coefI + i coefM) psi
VectorField gen_IM_combo(const Expr& coefI, const Expr& coefM, int n,
                         std::string label) {
  VectorField q = vf_zero(n);
  q.eta = simplify(prod({sum({coefI, prod({imag_unit(), coefM})}), v_psi()}));
  q.label = std::move(label);
  return q;
}

}  // namespace

VectorField named_generator(const std::string& name, const GenArgs& args,
                            int n) {
  if (name == "Pt") {
    VectorField q = vf_zero(n);
    q.xi0 = cst(1);
    q.label = "d_t";
    return q;
  }
  if (name == "Pa") {
    int a = int_arg(args, "a");
    if (a < 1 || a > n) throw std::out_of_range("Pa index");
    VectorField q = vf_zero(n);
    q.xi[a - 1] = cst(1);
    q.label = "d_" + std::to_string(a);
    return q;
  }
  if (name == "Jab") {
    int a = int_arg(args, "a"), b = int_arg(args, "b");
    if (a < 1 || a > n || b < 1 || b > n || a == b)
      throw std::out_of_range("Jab indices");
    VectorField q = vf_zero(n);
    q.xi[b - 1] = v_x(a);
    q.xi[a - 1] = simplify(-v_x(b));
    q.label = "J_" + std::to_string(a) + std::to_string(b);
    return q;
  }
  if (name == "I") return gen_I(n);
  if (name == "M") return gen_M(n);
  if (name == "D") return gen_D(n);
  if (name == "Ga") {
    int a = int_arg(args, "a");
    if (a < 1 || a > n) throw std::out_of_range("Ga index");
    VectorField q = vf_zero(n);
    q.xi[a - 1] = v_t();
    q.eta = simplify(
        prod({cst(Number(Rational(0), Rational(1, 2))), v_x(a), v_psi()}));
    q.label = "G_" + std::to_string(a);
    return q;
  }
  if (name == "Pi") {
    VectorField q = vf_zero(n);
    q.xi0 = simplify(pow(v_t(), cst(2)));
    for (int a = 0; a < n; ++a) q.xi[a] = simplify(prod({v_t(), v_x(a + 1)}));
    std::vector<Expr> xx;
    for (int a = 0; a < n; ++a) xx.push_back(pow(v_x(a + 1), cst(2)));
    Expr eta1 = sum({prod({cst(Number(Rational(-n, 2))), v_t()}),
                     prod({cst(Number(Rational(0), Rational(1, 4))),
                           sum(std::move(xx))})});
    q.eta = simplify(prod({eta1, v_psi()}));
    q.label = "Pi";
    return q;
  }
  if (name == "expI_M") {  // e^{delta t}(I + gamma M)
    Expr d = expr_arg(args, "delta"), g = expr_arg(args, "gamma");
    Expr et = exp(prod({d, v_t()}));
    return gen_IM_combo(et, simplify(prod({g, et})), n,
                        "e^(" + to_string(d) + "t)(I+" + to_string(g) + "M)");
  }
  if (name == "expM") {  // e^{delta t} M
    Expr d = expr_arg(args, "delta");
    Expr et = exp(prod({d, v_t()}));
    return gen_IM_combo(cst(0), et, n, "e^(" + to_string(d) + "t)M");
  }
  if (name == "expPaM") {  // e^{delta t}(d_a + (delta/2) x_a M)
    Expr d = expr_arg(args, "delta");
    int a = int_arg(args, "a");
    if (a < 1 || a > n) throw std::out_of_range("expPaM index");
    VectorField q = vf_zero(n);
    Expr et = exp(prod({d, v_t()}));
    q.xi[a - 1] = simplify(et);
    q.eta = simplify(prod({cst(Number(Rational(0), Rational(1, 2))), d, et,
                           v_x(a), v_psi()}));
    q.label = "e^(" + to_string(d) + "t)(d_" + std::to_string(a) + "+(1/2)" +
              to_string(d) + "x_" + std::to_string(a) + "M)";
    return q;
  }
  if (name == "theta_gen") {  // i e^{-delta1 t} theta(x) (d_psi - d_cpsi)
    Expr d1 = opt_arg(args, "delta1", cst(0));
    Expr th = expr_arg(args, "theta");
    VectorField q = vf_zero(n);
    q.eta =
        simplify(prod({imag_unit(), exp(prod({cst(-1), d1, v_t()})), th}));
    q.label = "i e^(-d1 t) theta (d_psi-d_cpsi)";
    return q;
  }
  if (name == "sol_gen") {  // eta0 d_psi + conj(eta0) d_cpsi
    Expr e0 = expr_arg(args, "eta0");
    VectorField q = vf_zero(n);
    q.eta = simplify(e0);
    q.label = "eta0 d_psi + eta0* d_cpsi";
    return q;
  }
  if (name == "expIM") {  // e^{delta t}(p I + q M)
    Expr d = expr_arg(args, "delta");
    Expr p = expr_arg(args, "p"), qq = expr_arg(args, "q");
    Expr et = exp(prod({d, v_t()}));
    return gen_IM_combo(simplify(prod({p, et})), simplify(prod({qq, et})), n,
                        "e^(" + to_string(d) + "t)(" + to_string(p) + "I+" +
                            to_string(qq) + "M)");
  }
  if (name == "exp_tIM") {  // e^{delta t}((p0+p1 t) I + (q0+q1 t) M)
    Expr d = expr_arg(args, "delta");
    Expr p0 = opt_arg(args, "p0", cst(0)), p1 = opt_arg(args, "p1", cst(0));
    Expr q0 = opt_arg(args, "q0", cst(0)), q1 = opt_arg(args, "q1", cst(0));
    Expr et = exp(prod({d, v_t()}));
    Expr ci = prod({sum({p0, prod({p1, v_t()})}), et});
    Expr cm = prod({sum({q0, prod({q1, v_t()})}), et});
    return gen_IM_combo(simplify(ci), simplify(cm), n,
                        "e^(" + to_string(d) + "t)((p0+p1 t)I+(q0+q1 t)M)");
  }
  if (name == "exp_trigIM") {
    // e^{mu t}((pc cos(nu t)+ps sin(nu t)) I + (qc cos(nu t)+qs sin(nu t)) M)
    Expr mu = expr_arg(args, "mu"), nu = expr_arg(args, "nu");
    Expr pc = opt_arg(args, "pc", cst(0)), ps = opt_arg(args, "ps", cst(0));
    Expr qc = opt_arg(args, "qc", cst(0)), qs = opt_arg(args, "qs", cst(0));
    Expr et = exp(prod({mu, v_t()}));
    Expr c = cos_of(prod({nu, v_t()})), s = sin_of(prod({nu, v_t()}));
    Expr ci = prod({sum({prod({pc, c}), prod({ps, s})}), et});
    Expr cm = prod({sum({prod({qc, c}), prod({qs, s})}), et});
    return gen_IM_combo(simplify(ci), simplify(cm), n, "e^(mu t)(trig I/M)");
  }
  if (name == "sol_re_gen") {  // i w(t,x) (d_psi - d_cpsi) with w real
    Expr w = expr_arg(args, "w");
    VectorField q = vf_zero(n);
    q.eta = simplify(prod({imag_unit(), w}));
    q.label = "i w (d_psi-d_cpsi)";
    return q;
  }
  throw std::invalid_argument("unknown generator name: " + name);
}

DefiningReport check_defining_equations(const VectorField& q,
                                        const ZeroCheckOptions& opt) {
  DefiningReport rep;
  auto add = [&](const std::string& name, const Expr& e) {
    rep.items.push_back({name, is_zero(e, opt)});
  };
  Sym ps = symtab::psi(), cs = symtab::cpsi(), tt = symtab::t();

  add("xi0_psi", differentiate(q.xi0, ps));
  add("xi0_cpsi", differentiate(q.xi0, cs));
  for (int a = 0; a < q.n; ++a)
    add("xi0_x" + std::to_string(a + 1),
        differentiate(q.xi0, symtab::x(a + 1)));
  for (int a = 0; a < q.n; ++a) {
    add("xi" + std::to_string(a + 1) + "_psi", differentiate(q.xi[a], ps));
    add("xi" + std::to_string(a + 1) + "_cpsi", differentiate(q.xi[a], cs));
  }
  add("eta_cpsi", differentiate(q.eta, cs));
  add("eta_psipsi", differentiate(differentiate(q.eta, ps), ps));
  for (int a = 0; a < q.n; ++a)
    for (int b = a + 1; b < q.n; ++b)
      add("xi_sym_" + std::to_string(a + 1) + std::to_string(b + 1),
          differentiate(q.xi[a], symtab::x(b + 1)) +
              differentiate(q.xi[b], symtab::x(a + 1)));
  for (int a = 0; a < q.n; ++a)
    add("eta_a_psi_" + std::to_string(a + 1),
        prod({cst(2),
              differentiate(differentiate(q.eta, symtab::x(a + 1)), ps)}) -
            prod({imag_unit(), differentiate(q.xi[a], tt)}));
  Expr xi0t = differentiate(q.xi0, tt);
  for (int a = 0; a < q.n; ++a)
    add("trace_" + std::to_string(a + 1),
        prod({cst(2), differentiate(q.xi[a], symtab::x(a + 1))}) - xi0t);
  add("xi0_real", q.xi0 - conjugate(q.xi0));
  for (int a = 0; a < q.n; ++a)
    add("xi" + std::to_string(a + 1) + "_real", q.xi[a] - conjugate(q.xi[a]));

  rep.pass = true;
  for (const auto& item : rep.items)
    rep.pass = rep.pass && item.result.verdict == Verdict::Zero;
  return rep;
}

namespace {

std::optional<Number> rationalize(double v, long long max_den, double tol) {
  double x = v;
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int it = 0; it < 40; ++it) {
    double fl = std::floor(x);
    if (fl > 1e15 || fl < -1e15) return std::nullopt;
    long long a = (long long)fl;
    long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den || q2 < 0) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    double rem = x - double(a);
    if (std::abs(rem) < 1e-12) break;
    x = 1.0 / rem;
  }
  if (q1 <= 0) return std::nullopt;
  Rational r(p1, q1);
  if (std::abs(r.to_double() - v) <= tol * (1.0 + std::abs(v)))
    return Number(r);
  return std::nullopt;
}

}  // namespace

SpanResult span_contains(const std::vector<VectorField>& basis,
                         const VectorField& q, const SpanOptions& opt) {
  SpanResult res;
  const int K = (int)basis.size();
  const int n = q.n;
  if (K == 0) {
    res.remainder = q;
    res.contained = q.is_zero_field();
    return res;
  }

  std::set<Sym> fv;
  auto collect = [&fv](const VectorField& f) {
    free_vars(f.xi0, fv);
    for (const Expr& x : f.xi) free_vars(x, fv);
    free_vars(f.eta, fv);
  };
  collect(q);
  for (const auto& b : basis) collect(b);
  SamplerConfig scfg = opt.zopt.sampler;
  scfg.seed = opt.seed;
  Sampler sm = Sampler::for_vars(std::vector<Sym>(fv.begin(), fv.end()), scfg);
  Rng rng(opt.seed);

  const int comps = n + 2;  // xi0, xi_a, eta
  const int rows = opt.sample_points * comps * 2;
  Eigen::MatrixXd A(rows, K);
  Eigen::VectorXd rhs(rows);

  // In modulo-solutions mode the eta0 room is factored out by fitting the
  // psi-linear part eta_psi instead of eta itself.
  std::vector<Expr> q_eta_fit{opt.modulo_solutions
                                  ? differentiate(q.eta, symtab::psi())
                                  : q.eta};
  std::vector<Expr> b_eta_fit;
  for (const auto& b : basis)
    b_eta_fit.push_back(opt.modulo_solutions
                            ? differentiate(b.eta, symtab::psi())
                            : b.eta);

  int row = 0;
  for (int pt = 0; pt < opt.sample_points; ++pt) {
    EvalEnv env = opt.zopt.base;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      env.vals.clear();
      sm.fill(rng, env);
      env.point_seed = rng.next_u64() | 1;
      try {
        for (int c = 0; c < comps; ++c) {
          auto comp = [&](const VectorField& f, bool is_q,
                          int k) -> const Expr& {
            if (c == 0) return f.xi0;
            if (c <= n) return f.xi[c - 1];
            return is_q ? q_eta_fit[0] : b_eta_fit[k];
          };
          int r0 = row + 2 * c;
          cplx qv = eval_numeric(comp(q, true, 0), env);
          rhs(r0) = qv.real();
          rhs(r0 + 1) = qv.imag();
          for (int k = 0; k < K; ++k) {
            cplx bv = eval_numeric(comp(basis[k], false, k), env);
            A(r0, k) = bv.real();
            A(r0 + 1, k) = bv.imag();
          }
        }
        ok = true;
      } catch (const SingularEval&) {
      }
    }
    if (!ok) {
      res.note = "singular sampling";
      return res;
    }
    row += comps * 2;
  }

  Eigen::VectorXd c =
      A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);

  res.coeffs.resize(K);
  for (int k = 0; k < K; ++k) {
    double v = c(k);
    if (std::abs(v) < 1e-9) v = 0.0;
    auto r = rationalize(v, 1 << 12, 1e-7);
    res.coeffs[k] = r ? *r : Number(v);
  }

  VectorField rem = q;
  for (int k = 0; k < K; ++k)
    rem = vf_add(rem, vf_scale(cst(-res.coeffs[k]), basis[k]));
  rem.label = "remainder";
  res.remainder = vf_simplified(rem);

  auto zero_comp = [&](const Expr& e) {
    return is_zero(e, opt.zopt).verdict == Verdict::Zero;
  };
  bool xi_zero = zero_comp(res.remainder.xi0);
  for (int a = 0; a < n; ++a)
    xi_zero = xi_zero && zero_comp(res.remainder.xi[a]);

  if (xi_zero && zero_comp(res.remainder.eta)) {
    res.contained = true;
    return res;
  }
  if (opt.modulo_solutions && xi_zero && opt.ideal_check) {
    if (zero_comp(differentiate(res.remainder.eta, symtab::psi())) &&
        zero_comp(differentiate(res.remainder.eta, symtab::cpsi())) &&
        opt.ideal_check(res.remainder.eta)) {
      res.contained = true;
      res.via_ideal = true;
      return res;
    }
  }
  res.note = "remainder outside span";
  return res;
}

}  // namespace nlsym
