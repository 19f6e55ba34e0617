#ifndef NLSYM_INVARIANCE_HPP
#define NLSYM_INVARIANCE_HPP

#include "nlsym/vectorfield.hpp"

namespace nlsym {

struct DefiningViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Kernel algebra of the whole class: d_t, d_a, J_ab.
std::vector<VectorField> kernel_fields(int n);
// Kernel of the F = f(|psi|) psi subclass: d_t, d_a, J_ab, G_a, M.
std::vector<VectorField> extended_galilei_fields(int n);

// Left-hand side of the classifying condition
//   eta F_psi + eta* F_cpsi + (xi0_t - eta_psi) F + i eta_t + eta_aa,
// which is meaningful only for fields of the defining-system shape.
Expr classifying_residual_raw(const Expr& F, const VectorField& q);

// Same, but verifies the defining system first; throws DefiningViolated.
Expr classifying_residual(const Expr& F, const VectorField& q,
                          const ZeroCheckOptions& opt);

// Full second-prolongation residual of i psi_t + Lap psi + F = 0, restricted
// to the solution manifold by eliminating every t-derivative jet. Valid for
// arbitrary coefficient fields; remaining jet coordinates are the spatial
// derivatives of psi and cpsi (free on the manifold).
Expr prolongation_residual(const Expr& F, const VectorField& q);

// prolongation - classifying; vanishes identically whenever the defining
// system holds.
Expr prolongation_minus_classifying(const Expr& F, const VectorField& q);

// Coefficients of the residual grouped by jet monomial (the split that
// produces the determining equations). Keys are printed monomials; "1" holds
// the jet-free part.
std::map<std::string, Expr> jet_monomial_coefficients(const Expr& residual);

enum class VerifyStatus { Pass, Fail, Indeterminate };

struct VerificationReport {
  std::string generator;
  DefiningReport defining;
  ZeroResult classifying;
  ZeroResult prolongation;
  bool ran_classifying = false;
  bool ran_prolongation = false;
  VerifyStatus status = VerifyStatus::Indeterminate;
  std::string note;
  bool pass() const { return status == VerifyStatus::Pass; }
};

struct VerifyOptions {
  ZeroCheckOptions zopt;
  bool run_prolongation = true;
};

VerificationReport verify_symmetry(const Expr& F, const VectorField& q,
                                   const VerifyOptions& cfg);

// Ideal membership for span tests modulo solution fields: eta0 must satisfy
// the original equation i u_t + Lap u + F(u, u*) = 0 as an identity.
std::function<bool(const Expr&)> solution_ideal_check(Expr F,
                                                      ZeroCheckOptions opt,
                                                      int n);

}  // namespace nlsym

#endif
