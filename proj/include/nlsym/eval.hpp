#ifndef NLSYM_EVAL_HPP
#define NLSYM_EVAL_HPP

#include <map>
#include <stdexcept>
#include <unordered_map>

#include "nlsym/expr.hpp"

namespace nlsym {

struct SingularEval : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Concrete instantiation of a function symbol.
struct FuncWitness {
  std::vector<Sym> formals;
  Expr body;
};

struct EvalEnv {
  std::unordered_map<Sym, cplx> vals;
  std::unordered_map<Sym, FuncWitness> witnesses;
  // Unconstrained function symbols may be sampled as independent jets:
  // f, f', f'' at a point get consistent pseudo-random values.
  bool abstract_funcs = false;
  uint64_t point_seed = 0;

  void set(Sym s, cplx v) { vals[s] = v; }
  void set_witness(Sym f, FuncWitness w) { witnesses[f] = std::move(w); }
};

cplx eval_numeric(const Expr& e, const EvalEnv& env);

// Portable deterministic generator (splitmix64); identical streams on every
// platform for a given seed.
struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed) {}
  uint64_t next_u64() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  cplx box(double r) { return {uniform(-r, r), uniform(-r, r)}; }
};

struct SamplerConfig {
  int n = 1;
  double rho_min = 0.3, rho_max = 1.8;
  double arg_max = 1.2;        // |arg psi| stays off the ln branch cut
  double coord_range = 1.5;    // t and x_a range
  double jet_radius = 1.0;
  uint64_t seed = 0x5eed1;
};

// Draws values for every free symbol of an expression; conjugate-paired
// symbols are filled consistently (cpsi = conj(psi), likewise for jets).
struct Sampler {
  SamplerConfig cfg;
  std::vector<Sym> vars;  // name-sorted

  static Sampler for_expr(const Expr& e, const SamplerConfig& cfg);
  static Sampler for_vars(std::vector<Sym> vars, const SamplerConfig& cfg);
  void fill(Rng& rng, EvalEnv& env) const;
};

enum class Verdict { Zero, NonZero, Indeterminate };

struct ZeroResult {
  Verdict verdict = Verdict::Indeterminate;
  bool structural = false;
  double max_ratio = 0.0;
  cplx witness_value{};
  std::map<std::string, cplx> witness_point;
  std::string diagnostics;
  bool zero() const { return verdict == Verdict::Zero; }
};

struct ZeroCheckOptions {
  SamplerConfig sampler;
  int samples = 200;
  double tol = 1e-9;
  EvalEnv base;  // witnesses / abstract-function mode
};

ZeroResult is_zero(const Expr& e, const ZeroCheckOptions& opt);

}  // namespace nlsym

#endif
