#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlsym/eval.hpp"
#include "nlsym/expr.hpp"

using namespace nlsym;

namespace {

EvalEnv point(cplx psi, double t = 0.7, double x1 = 0.4, double x2 = -0.9) {
  EvalEnv env;
  env.set(symtab::t(), t);
  env.set(symtab::x(1), x1);
  env.set(symtab::x(2), x2);
  env.set(symtab::psi(), psi);
  env.set(symtab::cpsi(), std::conj(psi));
  return env;
}

cplx wirtinger_fd(const Expr& e, EvalEnv env, Sym v, double h = 1e-6) {
  cplx v0 = env.vals.at(v);
  env.vals[v] = v0 + h;
  cplx fp = eval_numeric(e, env);
  env.vals[v] = v0 - h;
  cplx fm = eval_numeric(e, env);
  return (fp - fm) / (2.0 * h);
}

double rel_err(cplx a, cplx b) {
  return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b)));
}

cplx draw_psi(Rng& rng) {
  return std::polar(rng.uniform(0.4, 1.6), rng.uniform(-1.1, 1.1));
}

}  // namespace

TEST_CASE("parse atoms and casebook patterns") {
  CHECK(parse("psi", 1)->kind == Kind::Var);
  CHECK(parse("psi", 1)->sym == symtab::psi());

  Expr f = parse("sigma*abs(psi)^gamma*psi", 1);
  CHECK(f->kind == Kind::Prod);

  Expr t13 = parse("(f(Omega)+delta*phi)*psi", 2);
  CHECK(contains_kind(t13, Kind::Func));
  CHECK(contains_kind(t13, Kind::Phi));

  CHECK_THROWS_AS(parse("psi +* 2", 1), ParseError);
  CHECK_THROWS_AS(parse("g(psi)", 1), ParseError);
  CHECK_THROWS_AS(parse("x3", 2), ParseError);
  CHECK_NOTHROW(parse("x3", 3));

  try {
    parse("psi + $", 1);
    CHECK(false);
  } catch (const ParseError& pe) {
    CHECK(pe.offset == 6);
  }
}

TEST_CASE("print/parse round trip is structurally stable") {
  const char* cases[] = {
      "sigma*abs(psi)^gamma*psi",
      "(f(Omega)+delta*phi)*psi",
      "gamma*psi+cpsi",
      "-(ln(abs(psi)))*psi",
      "sigma*exp(re(psi))",
      "psi^2 + (1/2+3*i)*cpsi - x1*t",
      "abs(re(psi))^gamma",
      "exp(delta*t)*(psi + i*cpsi)",
  };
  for (const char* c : cases) {
    Expr e = simplify(parse(c, 2));
    Expr e2 = simplify(parse(to_string(e), 2));
    CHECK_MESSAGE(equal(e, e2), "round trip failed for ", c, " printed as ",
                  to_string(e));
  }
}

TEST_CASE("differentiate: product rule and Wirtinger independence") {
  Expr e = prod({v_psi(), v_cpsi()});
  CHECK(equal(differentiate(e, symtab::psi()), v_cpsi()));
  CHECK(equal(differentiate(e, symtab::cpsi()), v_psi()));
  CHECK(is_zero_const(differentiate(v_cpsi(), symtab::psi())));
}

TEST_CASE("differentiate |psi|^gamma psi against finite differences") {
  Rng rng(2024);
  for (double gamma : {2.0, 0.7, -1.3}) {
    Expr F = substitute(parse("abs(psi)^gamma*psi", 1), symtab::param("gamma"),
                        cst(gamma));
    Expr dF = differentiate(F, symtab::psi());
    Expr dFc = differentiate(F, symtab::cpsi());
    for (int k = 0; k < 25; ++k) {
      EvalEnv env = point(draw_psi(rng));
      // cpsi deliberately detuned from conj(psi): Wirtinger variables are
      // independent
      env.vals[symtab::cpsi()] += rng.box(0.05);
      cplx sym1 = eval_numeric(dF, env);
      cplx fd1 = wirtinger_fd(F, env, symtab::psi());
      CHECK(rel_err(sym1, fd1) < 1e-6);
      cplx sym2 = eval_numeric(dFc, env);
      cplx fd2 = wirtinger_fd(F, env, symtab::cpsi());
      CHECK(rel_err(sym2, fd2) < 1e-6);
    }
  }
}

TEST_CASE("differentiate phase: d(phi)/dpsi = -(i/2)/psi") {
  Expr dphi = differentiate(phi(), symtab::psi());
  Expr expected = simplify(prod({cst(Number(Rational(0), Rational(-1, 2))),
                                 pow(v_psi(), cst(-1))}));
  CHECK(equal(dphi, expected));
  // hand-derived from the definition phi = (i/2) ln(cpsi/psi)
  Rng rng(7);
  for (int k = 0; k < 20; ++k) {
    EvalEnv env = point(draw_psi(rng));
    cplx psi = env.vals[symtab::psi()];
    CHECK(rel_err(eval_numeric(dphi, env), cplx(0, -0.5) / psi) < 1e-12);
  }
}

TEST_CASE("differentiation is linear") {
  Rng rng(99);
  Expr e1 = simplify(parse("abs(psi)^2*psi + exp(psi)", 1));
  Expr e2 = simplify(parse("phi*psi + ln(rho)", 1));
  Expr combo = simplify(sum({prod({cst(Number(Rational(2, 3))), e1}),
                             prod({cst(Number(Rational(-5, 4))), e2})}));
  Expr lhs = differentiate(combo, symtab::psi());
  Expr rhs = simplify(
      sum({prod({cst(Number(Rational(2, 3))), differentiate(e1, symtab::psi())}),
           prod({cst(Number(Rational(-5, 4))),
                 differentiate(e2, symtab::psi())})}));
  for (int k = 0; k < 100; ++k) {
    EvalEnv env = point(draw_psi(rng));
    CHECK(rel_err(eval_numeric(lhs, env), eval_numeric(rhs, env)) < 1e-10);
  }
}

TEST_CASE("conjugate basics and homomorphism") {
  CHECK(equal(conjugate(v_psi()), v_cpsi()));
  CHECK(equal(conjugate(imag_unit()), cst(Number(Rational(0), Rational(-1)))));

  Rng rng(4242);
  std::vector<Expr> exprs = {
      simplify(parse("abs(psi)^2*psi", 1)),
      simplify(parse("phi + rho^2", 1)),
      simplify(parse("(2+3*i)*psi^2 + exp(i*t)*cpsi", 1)),
      simplify(parse("ln(rho)*psi", 1)),
  };
  for (const Expr& e : exprs) {
    Expr ce = simplify(conjugate(e));
    for (int k = 0; k < 100; ++k) {
      EvalEnv env = point(draw_psi(rng), rng.uniform(-1, 1), rng.uniform(-1, 1));
      CHECK(rel_err(eval_numeric(ce, env), std::conj(eval_numeric(e, env))) <
            1e-12);
    }
    CHECK(equal(simplify(conjugate(ce)), e));
  }
}

TEST_CASE("substitute: function symbols and parameters") {
  // f instantiated with the identity turns f(Omega) into Omega
  Expr om = simplify(parse("rho^2", 1));
  Sym f = symtab::funcsym("f", 1);
  Expr app = func(f, {0}, {om});
  Sym w = symtab::fresh_formal("w");
  CHECK(equal(simplify(substitute_func(app, f, {w}, var(w))), om));

  // gamma -> 4/n at n = 2
  Expr F = parse("abs(psi)^gamma*psi", 2);
  Expr F2 = simplify(substitute(F, symtab::param("gamma"), cst(2)));
  CHECK(equal(F2, simplify(parse("abs(psi)^2*psi", 2))));

  // instantiating Omega = |psi|^g2 e^{-g1 phi} matches direct evaluation
  Expr t11 = parse("f(Omega)*abs(psi)^(1/2)*exp(2*phi)*psi", 1);
  Expr omega = parse("abs(psi)^2*exp(-(1/2)*phi)", 1);
  Expr inst = substitute(t11, symtab::param("Omega"), omega);
  Expr direct =
      parse("f(abs(psi)^2*exp(-(1/2)*phi))*abs(psi)^(1/2)*exp(2*phi)*psi", 1);
  Sym wf = symtab::fresh_formal("w");
  Expr inst_c = simplify(substitute_func(inst, f, {wf},
                                         sum({var(wf), pow(var(wf), cst(2))})));
  Expr direct_c = simplify(substitute_func(direct, f, {wf},
                                           sum({var(wf), pow(var(wf), cst(2))})));
  Rng rng(31337);
  for (int k = 0; k < 50; ++k) {
    EvalEnv env = point(draw_psi(rng));
    CHECK(rel_err(eval_numeric(inst_c, env), eval_numeric(direct_c, env)) <
          1e-11);
  }
}

TEST_CASE("simplify: cancellation, idempotence, value preservation") {
  Expr z = simplify(sum({v_psi(), prod({cst(-1), v_psi()})}));
  CHECK(is_zero_const(z));

  const char* cases[] = {
      "sigma*abs(psi)^gamma*psi",
      "(psi+cpsi)^3",
      "rho^2 - psi*cpsi",
      "exp(ln(psi))",
      "phi*psi + i*t*x1^2",
      "abs(re(psi))^3",
      "exp(2*phi)*exp(-2*phi) - 1",
      "(f(rho)+delta*phi)*psi",
      "ln(rho^2*exp(t))",
  };
  Rng rng(555);
  Sym f = symtab::funcsym("f", 1);
  Sym w = symtab::fresh_formal("w");
  for (const char* c : cases) {
    Expr e = parse(c, 2);
    Expr s = simplify(e);
    CHECK_MESSAGE(equal(simplify(s), s), "not idempotent on ", c, " -> ",
                  to_string(s));
    Expr ec = substitute_func(e, f, {w}, sum({var(w), cst(1)}));
    Expr sc = substitute_func(s, f, {w}, sum({var(w), cst(1)}));
    // value preservation at 200 random points
    bool all_ok = true;
    for (int k = 0; k < 200; ++k) {
      EvalEnv env = point(draw_psi(rng), rng.uniform(-1.2, 1.2),
                          rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
      env.set(symtab::param("sigma"), rng.box(1.0) + cplx(0.3, 0.2));
      env.set(symtab::param("gamma"), cplx(rng.uniform(0.3, 2.2), 0));
      env.set(symtab::param("delta"), cplx(rng.uniform(-1.5, 1.5), 0));
      cplx a, b;
      try {
        a = eval_numeric(ec, env);
        b = eval_numeric(sc, env);
      } catch (const SingularEval&) {
        continue;
      }
      if (rel_err(a, b) >= 1e-10) all_ok = false;
    }
    CHECK_MESSAGE(all_ok, "value changed for ", c);
  }

  // rho/phi desugaring agrees with definitions to 1e-12 relative
  Expr rho_def = pow(prod({v_psi(), v_cpsi()}), cst(Number(Rational(1, 2))));
  Expr phi_def = prod({cst(Number(Rational(0), Rational(1, 2))),
                       sum({ln(v_cpsi()), -ln(v_psi())})});
  for (int k = 0; k < 100; ++k) {
    EvalEnv env = point(draw_psi(rng));
    CHECK(rel_err(eval_numeric(rho(), env), eval_numeric(rho_def, env)) <
          1e-12);
    CHECK(rel_err(eval_numeric(phi(), env), eval_numeric(phi_def, env)) <
          1e-12);
  }
}

TEST_CASE("eval: trivial values and singular reporting") {
  EvalEnv env = point(cplx(1, 1));
  CHECK(rel_err(eval_numeric(prod({v_psi(), v_cpsi()}), env), 2.0) < 1e-15);

  EvalEnv env_i = point(cplx(0, 1));
  CHECK(rel_err(eval_numeric(phi(), env_i), M_PI / 2) < 1e-14);

  EvalEnv env0 = point(cplx(1e-15, 0));
  CHECK_THROWS_AS(eval_numeric(phi(), env0), SingularEval);
  CHECK_THROWS_AS(eval_numeric(ln(v_psi()), env0), SingularEval);
  CHECK_THROWS_AS(
      eval_numeric(pow(v_psi(), cst(Number(Rational(-3, 2)))), env0),
      SingularEval);
}

TEST_CASE("is_zero: verdicts and witnesses") {
  ZeroCheckOptions opt;
  opt.sampler.n = 2;

  ZeroResult r1 = is_zero(v_psi() - v_psi(), opt);
  CHECK(r1.verdict == Verdict::Zero);
  CHECK(r1.structural);

  ZeroResult r2 = is_zero(prod({v_psi(), v_cpsi()}) - cst(1), opt);
  CHECK(r2.verdict == Verdict::NonZero);
  CHECK(std::abs(r2.witness_value) > 1e-3);
  CHECK(!r2.witness_point.empty());

  // simplify-value identity: exp(gamma2*phi) in monomial form
  Expr lhs = simplify(parse("exp(2*phi)", 1));
  Expr rhs = simplify(parse("psi^(-i)*cpsi^(i)", 1));
  ZeroResult r3 = is_zero(lhs - rhs, opt);
  CHECK(r3.verdict == Verdict::Zero);
}

TEST_CASE("rational constant folding stays exact") {
  Expr e = simplify(parse("(1/3 + 1/6)*psi", 1));
  auto [c, rest] = std::pair<Expr, Expr>{e->kids[0], e->kids[1]};
  Number v;
  REQUIRE(is_const(c, &v));
  CHECK(v.exact());
  CHECK(v == Number(Rational(1, 2)));
  // transcendental constants stay symbolic
  Expr t = simplify(parse("exp(2)", 1));
  CHECK(t->kind == Kind::Exp);
  // double folding
  Expr d = simplify(parse(".5*psi*4", 1));
  Number dv;
  CHECK(is_const(d->kids[0], &dv));
  CHECK(dv == Number(2));
}
