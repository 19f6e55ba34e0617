#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlsym/vectorfield.hpp"

using namespace nlsym;

namespace {

bool vf_equal(const VectorField& a, const VectorField& b) {
  if (!equal(simplify(a.xi0), simplify(b.xi0))) return false;
  for (int i = 0; i < a.n; ++i)
    if (!equal(simplify(a.xi[i]), simplify(b.xi[i]))) return false;
  return equal(simplify(a.eta), simplify(b.eta));
}

bool vf_vanishes(const VectorField& a, int n) {
  ZeroCheckOptions opt;
  opt.sampler.n = n;
  if (!is_zero(a.xi0, opt).zero()) return false;
  for (const Expr& x : a.xi)
    if (!is_zero(x, opt).zero()) return false;
  return is_zero(a.eta, opt).zero();
}

}  // namespace

TEST_CASE("named generators match their definitions") {
  VectorField I = named_generator("I", 2);
  CHECK(is_zero_const(I.xi0));
  CHECK(is_zero_const(I.xi[0]));
  CHECK(equal(I.eta, v_psi()));

  VectorField G1 = named_generator("Ga", {{"a", cst(1)}}, 2);
  CHECK(equal(G1.xi[0], v_t()));
  CHECK(is_zero_const(G1.xi[1]));
  CHECK(equal(G1.eta, simplify(prod({cst(Number(Rational(0), Rational(1, 2))),
                                     v_x(1), v_psi()}))));

  // Pi at n=2: eta(t=1, x=(1,0), psi=1) = -1 + i/4
  VectorField Pi = named_generator("Pi", 2);
  EvalEnv env;
  env.set(symtab::t(), 1.0);
  env.set(symtab::x(1), 1.0);
  env.set(symtab::x(2), 0.0);
  env.set(symtab::psi(), 1.0);
  env.set(symtab::cpsi(), 1.0);
  cplx v = eval_numeric(Pi.eta, env);
  CHECK(std::abs(v - cplx(-1.0, 0.25)) < 1e-14);

  CHECK_THROWS(named_generator("nosuch", 2));
  CHECK_THROWS(named_generator("Ga", {{"a", cst(3)}}, 2));
  CHECK_THROWS(named_generator("expM", 2));  // missing delta
}

TEST_CASE("from_ansatz reproduces D, Pi, Ga") {
  AnsatzParams pd;
  pd.xi0 = v_t();
  CHECK(vf_equal(from_ansatz(pd, 2), named_generator("D", 2)));

  AnsatzParams pp;
  pp.xi0 = pow(v_t(), cst(2));
  pp.zeta = simplify(prod({cst(-1), v_t()}));  // -(n/2) t at n = 2
  CHECK(vf_equal(from_ansatz(pp, 2), named_generator("Pi", 2)));

  AnsatzParams pg;
  pg.chi = {v_t(), cst(0)};
  CHECK(
      vf_equal(from_ansatz(pg, 2), named_generator("Ga", {{"a", cst(1)}}, 2)));

  AnsatzParams bad;
  bad.kappa = {{Number(0), Number(1)}, {Number(1), Number(0)}};
  CHECK_THROWS_AS(from_ansatz(bad, 2), std::invalid_argument);
}

TEST_CASE("defining equations hold on the catalog, fail on broken fields") {
  ZeroCheckOptions opt;
  opt.sampler.n = 2;
  opt.samples = 60;

  for (const char* name : {"Pt", "I", "M", "D", "Pi"}) {
    DefiningReport rep =
        check_defining_equations(named_generator(name, 2), opt);
    CHECK_MESSAGE(rep.pass, "defining equations fail for ", name);
  }
  CHECK(check_defining_equations(named_generator("Ga", {{"a", cst(2)}}, 2), opt)
            .pass);
  CHECK(check_defining_equations(
            named_generator("Jab", {{"a", cst(1)}, {"b", cst(2)}}, 2), opt)
            .pass);
  CHECK(check_defining_equations(
            named_generator("expPaM", {{"delta", cst(1)}, {"a", cst(1)}}, 2),
            opt)
            .pass);

  // symmetric (non-rotation) xi violates xi^a_b + xi^b_a = 0
  VectorField bad = vf_zero(2);
  bad.xi[0] = v_x(2);
  bad.xi[1] = v_x(1);
  DefiningReport rep = check_defining_equations(bad, opt);
  CHECK(!rep.pass);
  bool sym_failed = false;
  for (const auto& item : rep.items)
    if (item.name == "xi_sym_12")
      sym_failed = item.result.verdict == Verdict::NonZero;
  CHECK(sym_failed);
}

TEST_CASE("bracket identities from the generator table") {
  const int n = 2;
  VectorField Pt = named_generator("Pt", n);
  VectorField P1 = named_generator("Pa", {{"a", cst(1)}}, n);
  VectorField P2 = named_generator("Pa", {{"a", cst(2)}}, n);
  VectorField J12 = named_generator("Jab", {{"a", cst(1)}, {"b", cst(2)}}, n);
  VectorField I = named_generator("I", n);
  VectorField M = named_generator("M", n);
  VectorField D = named_generator("D", n);
  VectorField G1 = named_generator("Ga", {{"a", cst(1)}}, n);
  VectorField G2 = named_generator("Ga", {{"a", cst(2)}}, n);
  VectorField Pi = named_generator("Pi", n);

  CHECK(lie_bracket(Pt, P1).is_zero_field());

  // [D, G_a] = (1/2) G_a
  CHECK(
      vf_equal(lie_bracket(D, G1), vf_scale(cst(Number(Rational(1, 2))), G1)));

  // [Pt, Pi] = 2D - (n/2) I
  VectorField expected = vf_add(vf_scale(cst(2), D), vf_scale(cst(-1), I));
  CHECK(vf_equal(lie_bracket(Pt, Pi), expected));

  // Heisenberg-type relations
  CHECK(
      vf_equal(lie_bracket(P1, G1), vf_scale(cst(Number(Rational(1, 2))), M)));
  CHECK(lie_bracket(P1, G2).is_zero_field());
  CHECK(vf_equal(lie_bracket(Pt, G1), P1));
  CHECK(lie_bracket(G1, G2).is_zero_field());

  // e(n) structure constants: [d_a, J_bc] = delta_ab d_c - delta_ac d_b
  CHECK(vf_equal(lie_bracket(P1, J12), P2));
  CHECK(vf_equal(lie_bracket(P2, J12), vf_scale(cst(-1), P1)));
  // kernel summands commute
  CHECK(lie_bracket(Pt, J12).is_zero_field());

  // antisymmetry, structurally
  VectorField ab = lie_bracket(D, Pi);
  VectorField ba = lie_bracket(Pi, D);
  CHECK(vf_equal(ab, vf_scale(cst(-1), ba)));

  // Jacobi identity over the named set
  std::vector<VectorField> set = {Pt, P1, J12, I, M, D, G1, Pi};
  for (size_t a = 0; a < set.size(); ++a)
    for (size_t b = a + 1; b < set.size(); ++b)
      for (size_t c = b + 1; c < set.size(); ++c) {
        VectorField jac =
            vf_add(lie_bracket(set[a], lie_bracket(set[b], set[c])),
                   vf_add(lie_bracket(set[b], lie_bracket(set[c], set[a])),
                          lie_bracket(set[c], lie_bracket(set[a], set[b]))));
        CHECK_MESSAGE(vf_vanishes(jac, n), "Jacobi fails at triple ", a, ",",
                      b, ",", c);
      }
}

TEST_CASE("span_contains finds coefficients and remainders") {
  const int n = 2;
  VectorField I = named_generator("I", n);
  VectorField M = named_generator("M", n);
  VectorField D = named_generator("D", n);

  VectorField q = vf_add(vf_scale(cst(2), D), vf_scale(cst(3), I));
  SpanOptions opt;
  opt.zopt.sampler.n = n;
  SpanResult r = span_contains({D, I, M}, q, opt);
  REQUIRE(r.contained);
  CHECK(r.coeffs[0] == Number(2));
  CHECK(r.coeffs[1] == Number(3));
  CHECK(r.coeffs[2] == Number(0));

  // [G_a, G_b] = 0 lies in any span
  VectorField G1 = named_generator("Ga", {{"a", cst(1)}}, n);
  VectorField G2 = named_generator("Ga", {{"a", cst(2)}}, n);
  SpanResult r2 = span_contains({D, I, M}, lie_bracket(G1, G2), opt);
  CHECK(r2.contained);

  // Pi is not in the span of {D, I, M}
  SpanResult r3 = span_contains({D, I, M}, named_generator("Pi", n), opt);
  CHECK(!r3.contained);

  // modulo-solutions: remainder i(d_psi - d_cpsi) accepted by an ideal check
  VectorField shift = vf_zero(n);
  shift.eta = imag_unit();
  VectorField q4 = vf_add(vf_scale(cst(2), I), shift);
  SpanOptions opt4 = opt;
  opt4.modulo_solutions = true;
  opt4.ideal_check = [&](const Expr& eta) {
    ZeroCheckOptions z;
    z.sampler.n = n;
    return is_zero(eta - imag_unit(), z).zero();
  };
  SpanResult r4 = span_contains({I, M, D}, q4, opt4);
  CHECK(r4.contained);
  CHECK(r4.via_ideal);
}
