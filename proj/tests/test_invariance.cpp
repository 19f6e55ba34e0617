#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlsym/invariance.hpp"

using namespace nlsym;

namespace {

Expr with_params(const char* text, int n,
                 std::initializer_list<std::pair<const char*, Number>> ps) {
  Expr e = parse(text, n);
  for (auto& [name, v] : ps)
    e = substitute(e, symtab::param(name), cst(v));
  return simplify(e);
}

VerifyOptions quick_opts(int n, int samples = 120) {
  VerifyOptions cfg;
  cfg.zopt.sampler.n = n;
  cfg.zopt.samples = samples;
  return cfg;
}

}  // namespace

TEST_CASE("classifying residual: free equation admits Pi structurally") {
  for (int n : {1, 2, 3}) {
    Expr r = classifying_residual_raw(cst(0), named_generator("Pi", n));
    CHECK_MESSAGE(is_zero_const(r), "Pi residual not structurally zero, n=", n,
                  ": ", to_string(r));
  }
}

TEST_CASE("classifying residual: power nonlinearity with I - gamma D") {
  Rng rng(11);
  for (int n : {1, 2, 3}) {
    for (int rep = 0; rep < 3; ++rep) {
      Number gamma(Rational(1 + (long long)(rng.next_u64() % 9),
                            1 + (long long)(rng.next_u64() % 4)));
      Number sigma(Rational(1 + (long long)(rng.next_u64() % 5), 2),
                   Rational((long long)(rng.next_u64() % 7) - 3, 3));
      Expr F = with_params("sigma*abs(psi)^gamma*psi", n,
                           {{"sigma", sigma}, {"gamma", gamma}});
      VectorField Q = vf_add(
          named_generator("I", n),
          vf_scale(cst(-gamma), named_generator("D", n)));
      Expr r = classifying_residual_raw(F, Q);
      CHECK_MESSAGE(is_zero_const(r), "residual not structural zero: gamma=",
                    gamma.str(), " -> ", to_string(r));
    }
  }
}

TEST_CASE("classifying residual: Pi fails off the critical exponent") {
  // gamma = 2 at n = 1 (4/n = 4): Pi is not admitted
  Expr F = with_params("sigma*abs(psi)^2*psi", 1, {{"sigma", Number(1)}});
  ZeroCheckOptions z;
  z.sampler.n = 1;
  ZeroResult r = is_zero(classifying_residual_raw(F, named_generator("Pi", 1)), z);
  CHECK(r.verdict == Verdict::NonZero);
  CHECK(std::abs(r.witness_value) > 1e-3);

  // and is admitted at the critical exponent gamma = 4/n
  Expr F2 = with_params("sigma*abs(psi)^4*psi", 1, {{"sigma", Number(1)}});
  CHECK(is_zero(classifying_residual_raw(F2, named_generator("Pi", 1)), z)
            .zero());
}

TEST_CASE("classifying_residual refuses fields off the ansatz") {
  VectorField bad = vf_zero(1);
  bad.xi0 = v_x(1);  // xi0 must not depend on x
  ZeroCheckOptions z;
  z.sampler.n = 1;
  CHECK_THROWS_AS(classifying_residual(cst(0), bad, z), DefiningViolated);
}

TEST_CASE("prolongation oracle: time translation and oracle agreement") {
  for (int n : {1, 2}) {
    Expr F = with_params("sigma*abs(psi)^gamma*psi", n,
                         {{"sigma", Number(Rational(1), Rational(1, 2))},
                          {"gamma", Number(Rational(3, 2))}});
    Expr r = prolongation_residual(F, named_generator("Pt", n));
    CHECK(is_zero_const(simplify(r)));
  }

  // agreement with the classifying residual whenever the ansatz holds
  ZeroCheckOptions z;
  z.samples = 100;
  z.tol = 1e-8;
  for (int n : {1, 2}) {
    z.sampler.n = n;
    Expr F = with_params("sigma*abs(psi)^gamma*psi", n,
                         {{"sigma", Number(2)}, {"gamma", Number(Rational(4, 3))}});
    for (const char* g : {"Pi", "D", "I", "M"}) {
      Expr diff = prolongation_minus_classifying(F, named_generator(g, n));
      CHECK_MESSAGE(is_zero(diff, z).zero(), "oracle mismatch for ", g,
                    " n=", n);
    }
    VectorField G1 = named_generator("Ga", {{"a", cst(1)}}, n);
    CHECK(is_zero(prolongation_minus_classifying(F, G1), z).zero());
  }
}

TEST_CASE("prolongation split detects broken coefficients") {
  // eta with eta_psipsi != 0 violates the defining system; the jet-monomial
  // coefficients of the prolongation residual must expose it
  VectorField bad = vf_zero(1);
  bad.eta = simplify(pow(v_psi(), cst(2)));
  Expr r = prolongation_residual(cst(0), bad);
  auto coeffs = jet_monomial_coefficients(r);
  ZeroCheckOptions z;
  z.sampler.n = 1;
  bool any_jet_dependence = false;
  for (auto& [mono, coeff] : coeffs) {
    if (mono == "1") continue;
    if (!is_zero(coeff, z).zero()) any_jet_dependence = true;
  }
  CHECK(any_jet_dependence);

  // a catalog field keeps no jet dependence at all
  Expr good = prolongation_residual(cst(0), named_generator("D", 1));
  for (auto& [mono, coeff] : jet_monomial_coefficients(good)) {
    if (mono == "1") continue;
    CHECK_MESSAGE(is_zero(coeff, z).zero(), "unexpected jet coefficient at ",
                  mono);
  }
}

TEST_CASE("verify_symmetry: kernel passes, wrong generators fail") {
  const int n = 2;
  VerifyOptions cfg = quick_opts(n);
  Expr F = with_params("sigma*exp(re(psi))", n, {{"sigma", Number(1)}});

  for (const auto& q : kernel_fields(n)) {
    VerificationReport rep = verify_symmetry(F, q, cfg);
    CHECK_MESSAGE(rep.pass(), "kernel generator failed: ", q.label);
  }

  // phase rotation is not a symmetry of sigma e^{Re psi}
  VerificationReport rep = verify_symmetry(F, named_generator("M", n), cfg);
  CHECK(rep.status == VerifyStatus::Fail);
  CHECK(rep.ran_classifying);
  CHECK(rep.classifying.verdict == Verdict::NonZero);
  CHECK(std::abs(rep.classifying.witness_value) > 1e-3);
}

TEST_CASE("verify_symmetry: theta generator with trigonometric witness") {
  // F = f(Re psi) + i (delta1 + i delta2) psi, theta = cos(k x1), k^2 = -delta2
  const int n = 1;
  Number delta1(Rational(3, 2)), delta2(-4);
  Expr F = with_params("f(re(psi)) + i*(delta1 + i*delta2)*psi", n,
                       {{"delta1", delta1}, {"delta2", delta2}});
  Expr theta = cos_of(prod({cst(2), v_x(1)}));
  VectorField Q = named_generator(
      "theta_gen", {{"delta1", cst(delta1)}, {"theta", theta}}, n);

  VerifyOptions cfg = quick_opts(n);
  Sym f = symtab::funcsym("f", 1);
  Sym w = symtab::fresh_formal("w");
  cfg.zopt.base.set_witness(f, FuncWitness{{w}, pow(var(w), cst(3))});
  VerificationReport rep = verify_symmetry(F, Q, cfg);
  CHECK_MESSAGE(rep.pass(), "theta generator failed: ", rep.note);
}

TEST_CASE("residual is real-linear in the generator") {
  const int n = 1;
  Expr F = with_params("sigma*abs(psi)^gamma*psi", n,
                       {{"sigma", Number(1)}, {"gamma", Number(3)}});
  VectorField Q1 = named_generator("D", n);
  VectorField Q2 = named_generator("M", n);
  Expr r1 = classifying_residual_raw(F, Q1);
  Expr r2 = classifying_residual_raw(F, Q2);
  Number a(Rational(2, 3)), b(Rational(-7, 5));
  VectorField combo = vf_add(vf_scale(cst(a), Q1), vf_scale(cst(b), Q2));
  Expr rc = classifying_residual_raw(F, combo);
  Expr diff = sum({rc, prod({cst(-a), r1}), prod({cst(-b), r2})});
  ZeroCheckOptions z;
  z.sampler.n = n;
  z.samples = 100;
  z.tol = 1e-10;
  CHECK(is_zero(diff, z).zero());
}

TEST_CASE("conjugation closure of the residual") {
  const int n = 1;
  Expr F = with_params("sigma*abs(psi)^gamma*psi", n,
                       {{"sigma", Number(Rational(1), Rational(1))},
                        {"gamma", Number(2)}});
  Expr r = classifying_residual_raw(F, named_generator("Pi", n));
  Expr rc = simplify(conjugate(r));
  Rng rng(77);
  SamplerConfig sc;
  sc.n = n;
  Sampler sm = Sampler::for_expr(r, sc);
  for (int k = 0; k < 50; ++k) {
    EvalEnv env;
    sm.fill(rng, env);
    cplx a = eval_numeric(r, env);
    cplx b = eval_numeric(rc, env);
    CHECK(std::abs(std::abs(a) - std::abs(b)) < 1e-12 * (1 + std::abs(a)));
  }
}

TEST_CASE("symmetries of a fixed F are closed under the bracket") {
  const int n = 1;
  // case gamma=4/n=4: extension {G_a, M, I-4D, Pi}
  Expr F = with_params("sigma*abs(psi)^4*psi", 1, {{"sigma", Number(1)}});
  VerifyOptions cfg = quick_opts(n);
  VectorField A = named_generator("Pi", n);
  VectorField B = vf_add(named_generator("I", n),
                         vf_scale(cst(-4), named_generator("D", n)));
  CHECK(verify_symmetry(F, A, cfg).pass());
  CHECK(verify_symmetry(F, B, cfg).pass());
  VectorField C = lie_bracket(A, B);
  CHECK(verify_symmetry(F, C, cfg).pass());
}

TEST_CASE("solution ideal check") {
  const int n = 1;
  ZeroCheckOptions z;
  z.sampler.n = n;
  auto check = solution_ideal_check(cst(0), z, n);
  // plane wave e^{i(k x - k^2 t)} solves the free equation
  Expr k = cst(Number(Rational(3, 2)));
  Expr pw = exp(prod({imag_unit(),
                      sum({prod({k, v_x(1)}),
                           prod({cst(-1), k, k, v_t()})})}));
  CHECK(check(simplify(pw)));
  CHECK(!check(simplify(prod({v_t(), pw}))));
}
