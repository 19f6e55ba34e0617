#ifndef NLSYM_EQUIVALENCE_HPP
#define NLSYM_EQUIVALENCE_HPP

#include "nlsym/vectorfield.hpp"

namespace nlsym {

// One element of the equivalence group acting nontrivially on F:
//   t~ = delta^2 t,  x~ = delta x,  psi~ = alpha psi + beta,
//   F~ = delta^-2 alpha F.
struct EquivTransform {
  Number delta{1};
  Number alpha{1};
  Number beta{0};
};

EquivTransform compose(const EquivTransform& second,
                       const EquivTransform& first);
EquivTransform inverse(const EquivTransform& t);

// F~ as a function of the new variables.
Expr apply_to_F(const EquivTransform& t, const Expr& F);

// Conditional gauge steps (extensions of the equivalence group applicable to
// sub-families only). Each acts on F through the substitution of the inverse
// change of psi into the equation; the inhomogeneous terms are computed
// symbolically.
struct ChainStep {
  // kinds: "scale_shift" (delta, alpha, beta)
  //        "shift"       (nu0, nu1, nu2): psi~ = psi + nu0 + nu1 t + nu2 x.x
  //        "phase_gauge" (sigma1 real):   psi~ = psi e^{i sigma1 t}
  //        "amp_gauge"   (s real):        psi~ = psi e^{-s t}
  std::string kind;
  std::map<std::string, Number> params;
};
using TransformChain = std::vector<ChainStep>;

Expr apply_step(const ChainStep& step, const Expr& F, int n);
Expr apply_chain(const TransformChain& chain, Expr F, int n);

// Generators of the equivalence algebra: a vector field on (t,x,psi,psi*)
// extended by an F-component thetaF d_F + conj d_F*.
struct EquivField {
  VectorField base;
  Expr thetaF;
  std::string label;
};

std::vector<EquivField> equivalence_algebra(int n);

// One-parameter flow of a named equivalence-algebra generator, as an element
// of the group (kernel generators act trivially on F).
EquivTransform equiv_flow(const std::string& label, double s);

// --- structural analysis of a nonlinearity ----------------------------------

enum class FFamily {
  Zero,
  Linear,        // s1 psi + s2 cpsi + s0
  PowerMonomial, // sigma rho^g1 e^{g2 phi} psi
  LogPhase,      // (A ln rho + B phi + C) psi
  RePower,       // sigma |Re psi - u0|^g + w
  ReLog,         // sigma ln|Re psi - u0| + w
  ReExp,         // sigma e^{lam Re psi} + w
  Other,
};

struct FStructure {
  FFamily family = FFamily::Other;
  Number s0, s1, s2;          // Linear
  Number sigma, g1, g2;       // PowerMonomial (g1,g2 real), RePower (g1)
  Number A, B, C;             // LogPhase
  Number u0, w, lam;          // Re-families
  bool verified = false;
};

FStructure analyze_structure(const Expr& F, int n, uint64_t seed = 0xFACADE);

struct NormalizeResult {
  Expr canonical;
  TransformChain chain;
  FStructure structure;  // of the canonical form
  bool normalized = false;
  std::string note;
};

// shift -> gauge -> modulus rescaling, per family; NOT_NORMALIZABLE (note set,
// normalized=false, canonical=input) when no rule applies.
NormalizeResult normalize(const Expr& F, int n);

}  // namespace nlsym

#endif
