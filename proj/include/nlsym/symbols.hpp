#ifndef NLSYM_SYMBOLS_HPP
#define NLSYM_SYMBOLS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace nlsym {

using Sym = uint32_t;

enum class SymKind : uint8_t {
  Time,      // t
  Space,     // x1..x4
  Field,     // psi
  FieldConj, // cpsi
  Jet,       // psi_t, psi_x1, psi_x12, ... and conjugates
  Param,     // sigma, gamma, ...
  FuncSym,   // f, theta, eta0
  Formal,    // bound variables of function-symbol witnesses
};

struct SymbolInfo {
  std::string name;
  SymKind kind;
  bool is_real;      // value known real
  Sym conj_partner;  // psi<->cpsi, jet pairs; self for real symbols
  int space_index;   // for Space: 1..4
  int arity;         // for FuncSym
};

// Process-global interner. Symbols are append-only and immutable once
// registered, so lookups after registration need no locking in practice;
// registration itself is mutex-guarded.
namespace symtab {

Sym intern(const std::string& name, SymKind kind, bool is_real,
           int space_index = 0, int arity = -1);
// Pairs two symbols as complex conjugates of each other.
void set_conj_pair(Sym a, Sym b);

const SymbolInfo& info(Sym s);
bool lookup(const std::string& name, Sym* out);
Sym conj_of(Sym s);

// Fixed vocabulary, registered at startup.
Sym t();
Sym x(int a);          // 1-based
Sym psi();
Sym cpsi();
Sym param(const std::string& name);  // interns on demand (realness by table)
Sym funcsym(const std::string& name, int arity);
Sym fresh_formal(const std::string& hint);

// Jet coordinates: derivatives of psi/cpsi by t (nt times) and by listed
// space indices (sorted, 1-based, repeats allowed). Interned on demand.
Sym jet(bool conjugated, int nt, const std::vector<int>& xs);

bool known_real_param(const std::string& name);

}  // namespace symtab

}  // namespace nlsym

#endif
