#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlsym/equivalence.hpp"
#include "nlsym/invariance.hpp"

using namespace nlsym;

namespace {

bool F_equal(const Expr& a, const Expr& b, int n, double tol = 1e-10) {
  ZeroCheckOptions z;
  z.sampler.n = n;
  z.tol = tol;
  return is_zero(a - b, z).zero();
}

EquivTransform random_transform(Rng& rng) {
  EquivTransform t;
  double d = rng.uniform(0.4, 1.8) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  t.delta = Number(d);
  t.alpha = Number(std::polar(rng.uniform(0.4, 1.9), rng.uniform(-3.0, 3.0)));
  t.beta = Number(rng.box(1.0));
  return t;
}

}  // namespace

TEST_CASE("apply_to_F: identity, rescaling, round trips") {
  const int n = 1;
  Expr F = simplify(parse("2*abs(psi)^3*psi", n));

  EquivTransform id;
  CHECK(F_equal(apply_to_F(id, F), F, n));

  // sigma |psi|^gamma psi with alpha = r > 0 rescales sigma by r^{-gamma}
  EquivTransform r3;
  r3.alpha = Number(Rational(2));
  Expr Ft = apply_to_F(r3, F);
  Expr expected = simplify(parse("(1/4)*abs(psi)^3*psi", n));
  CHECK(F_equal(Ft, expected, n));

  // round trip through 50 random transforms
  Rng rng(0xBEEF);
  Expr Fs[] = {F, simplify(parse("sigma0*exp(re(psi))", n)),
               simplify(parse("(3+i)*psi+2*cpsi", n))};
  for (int k = 0; k < 50; ++k) {
    EquivTransform t = random_transform(rng);
    const Expr& f = Fs[k % 3];
    Expr back = apply_to_F(inverse(t), apply_to_F(t, f));
    CHECK(F_equal(back, f, n));
  }

  // composition law
  for (int k = 0; k < 10; ++k) {
    EquivTransform t1 = random_transform(rng), t2 = random_transform(rng);
    Expr lhs = apply_to_F(t2, apply_to_F(t1, F));
    Expr rhs = apply_to_F(compose(t2, t1), F);
    CHECK(F_equal(lhs, rhs, n));
  }
}

TEST_CASE("equivalence algebra flows exponentiate to the group") {
  const int n = 2;
  auto fields = equivalence_algebra(n);
  CHECK(fields.size() == (size_t)(1 + n + n * (n - 1) / 2 + 5));

  Expr F = simplify(parse("abs(psi)^2*psi", n));
  double s = 0.7;

  // dilation flow at s: delta = e^{s/2}, so F~ = e^{-s} F
  EquivTransform dil = equiv_flow("D_hat", s);
  CHECK(std::abs(dil.delta.value() - std::exp(s / 2)) < 1e-14);
  CHECK(F_equal(apply_to_F(dil, F),
                simplify(prod({cst(std::exp(-s)), F})), n, 1e-9));

  EquivTransform sh = equiv_flow("shift_re", s);
  CHECK(sh.beta == Number(s));
  EquivTransform ih = equiv_flow("I_hat", s);
  CHECK(std::abs(ih.alpha.value() - std::exp(s)) < 1e-14);
  EquivTransform mh = equiv_flow("M_hat", s);
  CHECK(std::abs(std::abs(mh.alpha.value()) - 1.0) < 1e-14);
  EquivTransform kt = equiv_flow("P_t", s);
  CHECK(kt.alpha == Number(1));
  CHECK(kt.delta == Number(1));
}

TEST_CASE("equation-shape preservation under the group") {
  // F~(alpha psi + beta) = alpha delta^{-2} F(psi): the transformed equation
  // pulls back to the original times a nonzero constant
  const int n = 1;
  Rng rng(0xAB);
  Expr F = simplify(parse("abs(psi)^2*psi + psi^2", n));
  for (int k = 0; k < 10; ++k) {
    EquivTransform t = random_transform(rng);
    Expr Ft = apply_to_F(t, F);
    Expr psi_new = sum({prod({cst(t.alpha), v_psi()}), cst(t.beta)});
    Sym tmp = symtab::fresh_formal("chk");
    Expr lhs = substitute(Ft, symtab::psi(), var(tmp));
    lhs = substitute(lhs, symtab::cpsi(), simplify(conjugate(psi_new)));
    lhs = simplify(substitute(lhs, tmp, psi_new));
    Expr rhs = simplify(prod({cst(t.alpha / (t.delta * t.delta)), F}));
    CHECK(F_equal(lhs, rhs, n));
  }
}

TEST_CASE("structure analysis recognizes the table families") {
  const int n = 2;
  FStructure s1 = analyze_structure(parse("0", n), n);
  CHECK(s1.family == FFamily::Zero);

  FStructure s2 = analyze_structure(parse("3*psi+2", n), n);
  CHECK(s2.family == FFamily::Linear);
  CHECK(s2.s1 == Number(3));
  CHECK(s2.s0 == Number(2));
  CHECK(s2.s2 == Number(0));

  FStructure s3 = analyze_structure(parse("2*abs(psi)^3*psi", n), n);
  CHECK(s3.family == FFamily::PowerMonomial);
  CHECK(s3.g1 == Number(3));
  CHECK(s3.g2 == Number(0));
  CHECK(s3.sigma == Number(2));

  // psi^2 = rho^1 e^{1*phi ... } psi with gamma1 = 1, gamma2 = 0 is not a
  // real-exponent monomial in (rho, phi) alone; it factors with f(Omega)
  FStructure s4 = analyze_structure(parse("psi^2", n), n);
  CHECK(s4.family == FFamily::Other);

  FStructure s5 =
      analyze_structure(parse("-(ln(abs(psi)))*psi + 2*i*phi*psi", n), n);
  CHECK(s5.family == FFamily::LogPhase);
  CHECK(s5.A == Number(-1));
  CHECK(s5.B == Number(Rational(0), Rational(2)));

  FStructure s6 = analyze_structure(parse("2*abs(re(psi))^3", n), n);
  CHECK(s6.family == FFamily::RePower);
  CHECK(s6.g1 == Number(3));
  CHECK(s6.sigma == Number(2));
  CHECK(s6.u0 == Number(0));

  FStructure s7 = analyze_structure(parse("3*ln(abs(re(psi)))", n), n);
  CHECK(s7.family == FFamily::ReLog);
  CHECK(s7.sigma == Number(3));

  FStructure s8 = analyze_structure(parse("(1+i)*exp(2*re(psi)) - i", n), n);
  CHECK(s8.family == FFamily::ReExp);
  CHECK(s8.lam == Number(2));
  CHECK(s8.w == Number(Rational(0), Rational(-1)));

  FStructure s9 = analyze_structure(parse("psi^2 + cpsi^3", n), n);
  CHECK(s9.family == FFamily::Other);
}

TEST_CASE("normalize: linear reductions") {
  const int n = 2;
  NormalizeResult r = normalize(parse("3*psi+2", n), n);
  CHECK(r.normalized);
  CHECK(is_zero_const(r.canonical));
  REQUIRE(r.chain.size() == 2);
  CHECK(r.chain[0].kind == "shift");
  CHECK(r.chain[0].params.at("nu0") == Number(Rational(2, 3)));
  CHECK(r.chain[1].kind == "phase_gauge");
  CHECK(F_equal(apply_chain(r.chain, parse("3*psi+2", n), n), r.canonical, n));

  NormalizeResult r2 = normalize(parse("(3+i)*psi + (0+2*i)*cpsi", n), n);
  CHECK(r2.normalized);
  FStructure st = analyze_structure(r2.canonical, n);
  CHECK(st.family == FFamily::Linear);
  CHECK(st.s0 == Number(0));
  CHECK(std::abs(st.s2.value() - 1.0) < 1e-9);
  CHECK(std::abs(st.s1.value().imag()) < 1e-9);
  CHECK(F_equal(apply_chain(r2.chain, parse("(3+i)*psi + (0+2*i)*cpsi", n), n),
                r2.canonical, n));
}

TEST_CASE("normalize: modulus rescaling and idempotence") {
  const int n = 2;
  NormalizeResult r = normalize(parse("2*abs(psi)^2*psi", n), n);
  CHECK(r.normalized);
  FStructure st = analyze_structure(r.canonical, n);
  REQUIRE(st.family == FFamily::PowerMonomial);
  CHECK(std::abs(std::abs(st.sigma.value()) - 1.0) < 1e-10);
  CHECK(F_equal(apply_chain(r.chain, parse("2*abs(psi)^2*psi", n), n),
                r.canonical, n));

  NormalizeResult r2 = normalize(r.canonical, n);
  CHECK(r2.chain.empty());
  CHECK(F_equal(r2.canonical, r.canonical, n));

  NormalizeResult r3 = normalize(parse("2*exp(re(psi)) + (1+3*i)", n), n);
  CHECK(r3.normalized);
  FStructure st3 = analyze_structure(r3.canonical, n);
  REQUIRE(st3.family == FFamily::ReExp);
  CHECK(st3.w == Number(0));
  CHECK(st3.lam == Number(1));
  CHECK(std::abs(std::abs(st3.sigma.value()) - 1.0) < 1e-10);
  CHECK(F_equal(apply_chain(r3.chain, parse("2*exp(re(psi)) + (1+3*i)", n), n),
                r3.canonical, n));

  NormalizeResult r4 = normalize(parse("(-2*ln(abs(psi)) + 1/2)*psi", n), n);
  CHECK(r4.normalized);
  FStructure st4 = analyze_structure(r4.canonical, n);
  REQUIRE(st4.family == FFamily::LogPhase);
  CHECK(std::abs(st4.C.value()) < 1e-9);
  CHECK(std::abs(std::abs(st4.A.value().real()) - 1.0) < 1e-9);
  CHECK(F_equal(
      apply_chain(r4.chain, parse("(-2*ln(abs(psi)) + 1/2)*psi", n), n),
      r4.canonical, n));
}

TEST_CASE("symmetry transport along pure transforms") {
  const int n = 1;
  Expr F = simplify(parse("abs(psi)^2*psi", n));
  VectorField Q = vf_add(named_generator("I", n),
                         vf_scale(cst(-2), named_generator("D", n)));
  VerifyOptions cfg;
  cfg.zopt.sampler.n = n;
  CHECK(verify_symmetry(F, Q, cfg).pass());

  Rng rng(0xC0FFEE);
  for (int k = 0; k < 5; ++k) {
    EquivTransform t = random_transform(rng);
    t.beta = Number(0);  // I, M, D, Pi are equivariant under (delta, alpha)
    Expr Ft = apply_to_F(t, F);
    CHECK(verify_symmetry(Ft, Q, cfg).pass());
  }
}
