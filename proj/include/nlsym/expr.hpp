#ifndef NLSYM_EXPR_HPP
#define NLSYM_EXPR_HPP

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlsym/number.hpp"
#include "nlsym/symbols.hpp"

namespace nlsym {

enum class Kind : uint8_t {
  Const,
  Var,
  Sum,
  Prod,
  Pow,   // kids = {base, exponent}
  Exp,
  Ln,
  Abs,
  Conj,
  Re,
  Im,
  Rho,   // |psi|, leaf
  Phi,   // arg psi, leaf
  Func,  // function-symbol application, dord = per-argument derivative order
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  Kind kind;
  Number value;            // Const
  Sym sym = 0;             // Var, Func
  std::vector<int> dord;   // Func only
  std::vector<Expr> kids;
  size_t h = 0;
};

// --- constructors -----------------------------------------------------------

Expr cst(Number v);
inline Expr cst(long long n) { return cst(Number(n)); }
inline Expr cst(int n) { return cst(Number((long long)n)); }
inline Expr cst(double d) { return cst(Number(d)); }
Expr imag_unit();
Expr var(Sym s);
Expr sum(std::vector<Expr> kids);
Expr prod(std::vector<Expr> kids);
Expr pow(Expr base, Expr expo);
Expr exp(Expr u);
Expr ln(Expr u);
Expr abs(Expr u);
Expr conj_node(Expr u);
Expr re(Expr u);
Expr im(Expr u);
Expr rho();
Expr phi();
Expr func(Sym f, std::vector<int> dord, std::vector<Expr> args);

inline Expr operator+(Expr a, Expr b) { return sum({std::move(a), std::move(b)}); }
inline Expr operator*(Expr a, Expr b) { return prod({std::move(a), std::move(b)}); }
inline Expr operator-(Expr a) { return prod({cst(-1), std::move(a)}); }
inline Expr operator-(Expr a, Expr b) { return a + (-std::move(b)); }
inline Expr operator/(Expr a, Expr b) {
  return a * pow(std::move(b), cst(-1));
}

// shorthand atoms
Expr v_t();
Expr v_x(int a);
Expr v_psi();
Expr v_cpsi();
Expr v_param(const std::string& name);

// --- structure --------------------------------------------------------------

bool equal(const Expr& a, const Expr& b);
int compare(const Expr& a, const Expr& b);  // total order; 0 iff equal
bool is_const(const Expr& e);
bool is_const(const Expr& e, Number* out);
bool is_zero_const(const Expr& e);
void free_vars(const Expr& e, std::set<Sym>& out);
bool depends_on(const Expr& e, Sym s);
bool contains_kind(const Expr& e, Kind k);
std::string to_string(const Expr& e);

// --- core operations --------------------------------------------------------

// Full canonical form: flatten/sort/collect, constant folding, branch-safe
// power and log normalization, rho/phi/abs/re/im desugaring. Idempotent and
// value-preserving on the sampled domain.
Expr simplify(const Expr& e);

// Wirtinger partial derivative; psi and cpsi are independent.
Expr differentiate(const Expr& e, Sym v);

// Complex conjugation as an expression map: eval(conjugate(e)) == conj(eval(e)).
Expr conjugate(const Expr& e);

// Capture-free replacement of a variable.
Expr substitute(const Expr& e, Sym v, const Expr& replacement);

// Replace a function symbol by a concrete witness: occurrences f^(k)(args)
// become (d^k body / d formals^k)(args).
Expr substitute_func(const Expr& e, Sym f, const std::vector<Sym>& formals,
                     const Expr& body);

// --- parsing ----------------------------------------------------------------

struct ParseError : std::runtime_error {
  size_t offset;
  ParseError(const std::string& msg, size_t off)
      : std::runtime_error(msg + " at byte " + std::to_string(off)),
        offset(off) {}
};

// Grammar:
//   sum  := ['-'] prod (('+'|'-') prod)*
//   prod := pow (('*'|'/') pow)*
//   pow  := atom ('^' atom)?
//   atom := number | 'i' | ident | ident '(' sum (',' sum)* ')' | '(' sum ')'
// n fixes which x_a are legal.
Expr parse(const std::string& text, int n);

}  // namespace nlsym

#endif
