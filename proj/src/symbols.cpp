#include "nlsym/symbols.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace nlsym {
namespace symtab {

namespace {

struct Table {
  std::mutex mu;
  std::vector<SymbolInfo> infos;
  std::unordered_map<std::string, Sym> by_name;
  std::atomic<int> formal_counter{0};

  Table() {
    add("t", SymKind::Time, true, 0, -1);
    for (int a = 1; a <= 4; ++a)
      add("x" + std::to_string(a), SymKind::Space, true, a, -1);
    Sym p = add("psi", SymKind::Field, false, 0, -1);
    Sym c = add("cpsi", SymKind::FieldConj, false, 0, -1);
    infos[p].conj_partner = c;
    infos[c].conj_partner = p;
  }

  Sym add(const std::string& name, SymKind kind, bool is_real, int space_index,
          int arity) {
    Sym id = (Sym)infos.size();
    infos.push_back(SymbolInfo{name, kind, is_real,
                               is_real ? id : (Sym)UINT32_MAX, space_index,
                               arity});
    if (is_real) infos[id].conj_partner = id;
    by_name.emplace(name, id);
    return id;
  }
};

Table& tab() {
  static Table* t = new Table;
  return *t;
}

const std::set<std::string>& real_params() {
  static const std::set<std::string> s = {
      "gamma", "gamma1", "gamma2", "delta",   "delta1", "delta2", "delta3",
      "delta4", "k",      "k1",     "k2",     "k3",     "k4",     "mu",
      "nu",     "lambda", "lambda1", "lambda2", "eps",   "epsilon", "s",
      "A",      "Omega",  "omega",  "alpha0", "beta0",  "q",      "p",
  };
  return s;
}

}  // namespace

bool known_real_param(const std::string& name) {
  return real_params().count(name) > 0;
}

Sym intern(const std::string& name, SymKind kind, bool is_real,
           int space_index, int arity) {
  Table& T = tab();
  std::lock_guard<std::mutex> lk(T.mu);
  auto it = T.by_name.find(name);
  if (it != T.by_name.end()) return it->second;
  return T.add(name, kind, is_real, space_index, arity);
}

void set_conj_pair(Sym a, Sym b) {
  Table& T = tab();
  std::lock_guard<std::mutex> lk(T.mu);
  T.infos[a].conj_partner = b;
  T.infos[b].conj_partner = a;
}

const SymbolInfo& info(Sym s) { return tab().infos[s]; }

bool lookup(const std::string& name, Sym* out) {
  Table& T = tab();
  std::lock_guard<std::mutex> lk(T.mu);
  auto it = T.by_name.find(name);
  if (it == T.by_name.end()) return false;
  *out = it->second;
  return true;
}

Sym conj_of(Sym s) {
  const SymbolInfo& in = info(s);
  if (in.conj_partner == UINT32_MAX)
    throw std::logic_error("symbol has no conjugate partner: " + in.name);
  return in.conj_partner;
}

Sym t() { return 0; }
Sym x(int a) {
  if (a < 1 || a > 4) throw std::out_of_range("space index");
  return (Sym)a;
}
Sym psi() { return 5; }
Sym cpsi() { return 6; }

Sym param(const std::string& name) {
  return intern(name, SymKind::Param, known_real_param(name));
}

Sym funcsym(const std::string& name, int arity) {
  bool real = (name == "theta");
  Sym s = intern(name, SymKind::FuncSym, real, 0, arity);
  if (info(s).arity != arity)
    throw std::invalid_argument("function symbol arity mismatch: " + name);
  return s;
}

Sym fresh_formal(const std::string& hint) {
  Table& T = tab();
  int idx = T.formal_counter.fetch_add(1);
  return intern("$" + hint + std::to_string(idx), SymKind::Formal, true);
}

Sym jet(bool conjugated, int nt, const std::vector<int>& xs) {
  std::vector<int> s(xs);
  std::sort(s.begin(), s.end());
  std::string name = conjugated ? "cpsi" : "psi";
  name += "_";
  for (int k = 0; k < nt; ++k) name += "t";
  for (int a : s) name += "x" + std::to_string(a);
  Sym id = intern(name, SymKind::Jet, false);
  // pair with the conjugate jet
  std::string cname = conjugated ? "psi" : "cpsi";
  cname += name.substr(conjugated ? 4 : 3);
  Sym cid = intern(cname, SymKind::Jet, false);
  set_conj_pair(id, cid);
  return id;
}

}  // namespace symtab
}  // namespace nlsym
