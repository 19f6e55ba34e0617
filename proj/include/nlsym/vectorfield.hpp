#ifndef NLSYM_VECTORFIELD_HPP
#define NLSYM_VECTORFIELD_HPP

#include <functional>
#include <map>
#include <optional>

#include "nlsym/eval.hpp"
#include "nlsym/expr.hpp"

namespace nlsym {

// Q = xi0 d_t + xi_a d_a + eta d_psi + conj(eta) d_cpsi.
// The d_cpsi coefficient is always derived by conjugation, never stored.
struct VectorField {
  int n = 1;
  Expr xi0;
  std::vector<Expr> xi;
  Expr eta;
  std::string label;

  Expr eta_conj() const { return simplify(conjugate(eta)); }
  bool is_zero_field() const;
};

VectorField vf_zero(int n);
VectorField vf_add(const VectorField& a, const VectorField& b);
VectorField vf_scale(const Expr& c, const VectorField& a);
VectorField vf_scale(double c, const VectorField& a);
VectorField vf_simplified(VectorField q);

// Q applied to a scalar expression (first-order action).
Expr vf_apply(const VectorField& q, const Expr& g);

// Commutator [q1, q2], computed coordinate-wise.
VectorField lie_bracket(const VectorField& q1, const VectorField& q2);

// General solution shape of the defining system: xi0(t); kappa antisymmetric;
// chi^a(t) real; zeta(t) complex; eta0(t,x) complex.
struct AnsatzParams {
  Expr xi0 = cst(0);
  std::vector<std::vector<Number>> kappa;  // n x n, antisymmetric, exact
  std::vector<Expr> chi;                   // size n (defaults to 0)
  Expr zeta = cst(0);
  Expr eta0 = cst(0);
};

VectorField from_ansatz(const AnsatzParams& p, int n);

// Named generator catalog. Arguments are expressions (integer indices are
// constant expressions; theta/eta0 take witness expressions).
using GenArgs = std::map<std::string, Expr>;
VectorField named_generator(const std::string& name, const GenArgs& args,
                            int n);
inline VectorField named_generator(const std::string& name, int n) {
  return named_generator(name, GenArgs{}, n);
}

// trig helpers built on complex exponentials
Expr cos_of(const Expr& u);
Expr sin_of(const Expr& u);

struct DefiningReport {
  struct Item {
    std::string name;
    ZeroResult result;
  };
  std::vector<Item> items;
  bool pass = false;
};

// Evaluates every equation of the defining system plus the reality
// constraints on xi0, xi_a.
DefiningReport check_defining_equations(const VectorField& q,
                                        const ZeroCheckOptions& opt);

struct SpanOptions {
  int sample_points = 24;
  double tol = 1e-8;
  uint64_t seed = 0xA11CE;
  ZeroCheckOptions zopt;
  bool modulo_solutions = false;
  // verdict for "remainder eta lies in the admissible ideal" (solution of the
  // current equation / theta family); supplied by the invariance layer
  std::function<bool(const Expr& eta_remainder)> ideal_check;
};

struct SpanResult {
  bool contained = false;
  bool via_ideal = false;
  std::vector<Number> coeffs;
  VectorField remainder;
  std::string note;
};

SpanResult span_contains(const std::vector<VectorField>& basis,
                         const VectorField& q, const SpanOptions& opt);

}  // namespace nlsym

#endif
