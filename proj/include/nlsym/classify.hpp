#ifndef NLSYM_CLASSIFY_HPP
#define NLSYM_CLASSIFY_HPP

#include "nlsym/equivalence.hpp"
#include "nlsym/invariance.hpp"

namespace nlsym {

// One first-order constraint (a psi + b) F_psi + (a* psi* + b*) F_cpsi
// + c F + d psi + e = 0 with complex constant coefficients.
struct ClassifyingEq {
  Number a, b, c, d, e;
};

Expr classifying_eq_residual(const ClassifyingEq& q, const Expr& F);

// --- k-detection ----------------------------------------------------------

enum class KStatus { Ok, Degenerate, Unstable };

struct KDetectResult {
  KStatus status = KStatus::Ok;
  int k = 0;
  std::vector<ClassifyingEq> basis;  // re-verified annihilators
  std::string note;
};

struct KOptions {
  int points = 24;
  uint64_t seed = 0x5eed0001;
  double rank_tol = 1e-7;
  EvalEnv base;  // witnesses / abstract function mode
  int n = 1;
};

KDetectResult satisfied_classifying_eqs(const Expr& F, const KOptions& opt);

// rank of [[a1 b1 a1* b1*],[a2 b2 a2* b2*]]
int matrix_rank(const ClassifyingEq& e1, const ClassifyingEq& e2,
                double tol = 1e-10);

// --- Lemma 1 canonicalization ----------------------------------------------

struct Lemma1Result {
  bool reducible = false;
  int canonical_case = 0;  // 1, 2, or 3
  // chain: first the real recombination R (rows act on equations), then the
  // equivalence transform T
  Number R[2][2];
  EquivTransform T;
  ClassifyingEq canon1, canon2;
  bool constraints_ok = false;
  std::vector<std::string> constraint_notes;
  std::string note;
};

Lemma1Result lemma1_canonicalize(const ClassifyingEq& e1,
                                 const ClassifyingEq& e2, double tol = 1e-9);

// replay of the reported chain, for round-trip checking
std::pair<ClassifyingEq, ClassifyingEq> apply_lemma1_chain(
    const Lemma1Result& r, const ClassifyingEq& e1, const ClassifyingEq& e2);

ClassifyingEq transform_classifying_eq(const EquivTransform& t,
                                       const ClassifyingEq& q);

// --- third-order minor conditions (display (8)) ------------------------------

std::pair<Expr, Expr> minor_conditions(const ClassifyingEq& e1,
                                       const ClassifyingEq& e2,
                                       const VectorField& q);

// --- casebook ----------------------------------------------------------------

struct GenTerm {
  std::string gen;                         // named_generator vocabulary
  std::string coeff = "1";                 // expression in the row parameters
  std::map<std::string, std::string> args; // idem
  bool all_a = false;                      // expand over a = 1..n
  bool theta_slot = false;
  bool eta0_slot = false;
};

struct OpSpec {
  std::vector<GenTerm> terms;  // instantiated op = sum coeff * gen(args)
  std::string special;         // dedicated builders (e.g. "t24_sol")
};

struct CaseRecord {
  std::string id;
  std::string f_text;
  std::string omega_text;
  std::vector<std::string> params;             // real scalar names
  std::vector<std::string> complex_params;     // e.g. sigma
  std::map<std::string, std::string> derived;  // name -> expression
  std::vector<std::string> constraints;        // "nonzero:", "pos:", ...
  std::vector<OpSpec> ops;
  std::string draw = "generic";
  bool f_slot = false, theta_slot = false, eta0_slot = false;
  bool infinite_dimensional = false;
};

const std::vector<CaseRecord>& casebook(int n);
const CaseRecord* find_case(const std::string& id, int n);

struct CaseInstance {
  std::string case_id;
  int n = 1;
  Expr F;
  std::map<std::string, Expr> param_values;
  std::vector<VectorField> extensions;
  EvalEnv witness_env;  // witnesses for f slots
  bool infinite_dimensional = false;
};

// draws admissible parameter values (rational-leaning); theta/eta0 witness
// index selects among the built-in families
std::map<std::string, Expr> draw_case_params(const CaseRecord& rec, int n,
                                             Rng& rng);
CaseInstance instantiate_case(const CaseRecord& rec,
                              const std::map<std::string, Expr>& params, int n,
                              int witness_index = 0);

// built-in witnesses
Expr theta_witness(const Number& delta2, int n, int which);
Expr eta0_free_witness(int n, int which);
Expr eta0_linear_witness(const Number& gamma, int n, int which);

// --- classification -----------------------------------------------------------

struct ClassifyOptions {
  int n = 1;
  uint64_t seed = 0xC1A55;
  int samples = 200;
  double tol = 1e-9;
  bool run_prolongation = false;  // full oracle per generator is optional
  EvalEnv base;
};

enum class ClassifyStatus { Verified, KernelOnly, UnverifiedMatch, Error };

struct ClassificationResult {
  ClassifyStatus status = ClassifyStatus::Error;
  std::string case_id = "KERNEL_ONLY";
  std::map<std::string, Expr> params;
  TransformChain chain;
  Expr canonical_F;
  std::vector<VectorField> extensions;
  std::vector<VerificationReport> extension_reports;
  std::vector<std::string> kernel_labels;
  KDetectResult kdetect;
  bool kdetect_ran = false;
  std::string note;
};

ClassificationResult classify(const Expr& F, const ClassifyOptions& opt);
ClassificationResult subclass_classify(const Expr& f_of_rho,
                                       const ClassifyOptions& opt);

struct Lemma2Result {
  bool linear = false;
  bool consequence_holds = false;  // nonlinear => k <= 2
  int k = -1;
  std::string note;
};
Lemma2Result lemma2_check(const Expr& F, const KOptions& opt);

}  // namespace nlsym

#endif
