#include "nlsym/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>

namespace nlsym {

namespace {

constexpr double kTiny = 1e-13;
constexpr double kCutMargin = 1e-9;

void guard_log_arg(cplx z) {
  if (std::abs(z) < kTiny) throw SingularEval("log of (near) zero");
  if (std::abs(std::arg(z)) > M_PI - kCutMargin)
    throw SingularEval("log argument near branch cut");
}

// cache of witness-body derivatives, keyed by (body node, formal, order)
struct DerivCache {
  std::mutex mu;
  std::map<std::tuple<const ExprNode*, Sym, int>, Expr> map;
  Expr get(const Expr& body, Sym formal, int order) {
    if (order == 0) return body;
    std::lock_guard<std::mutex> lk(mu);
    auto key = std::make_tuple(body.get(), formal, order);
    auto it = map.find(key);
    if (it != map.end()) return it->second;
    Expr d = body;
    for (int k = 0; k < order; ++k) {
      auto kk = std::make_tuple(body.get(), formal, k + 1);
      auto hit = map.find(kk);
      if (hit != map.end()) {
        d = hit->second;
        continue;
      }
      d = differentiate(d, formal);
      map.emplace(kk, d);
    }
    return map.at(key);
  }
};

DerivCache& deriv_cache() {
  static DerivCache* c = new DerivCache;
  return *c;
}

struct Evaluator {
  const EvalEnv& env;
  std::unordered_map<Sym, cplx> locals;
  mutable std::unordered_map<uint64_t, cplx> fcache;

  explicit Evaluator(const EvalEnv& e) : env(e) {}

  cplx lookup(Sym s) const {
    auto it = locals.find(s);
    if (it != locals.end()) return it->second;
    auto jt = env.vals.find(s);
    if (jt != env.vals.end()) return jt->second;
    throw std::runtime_error("unassigned symbol in evaluation: " +
                             symtab::info(s).name);
  }

  cplx eval(const Expr& e) {
    switch (e->kind) {
      case Kind::Const: return e->value.value();
      case Kind::Var: return lookup(e->sym);
      case Kind::Sum: {
        cplx acc = 0.0;
        for (const Expr& k : e->kids) acc += eval(k);
        return acc;
      }
      case Kind::Prod: {
        cplx acc = 1.0;
        for (const Expr& k : e->kids) acc *= eval(k);
        return acc;
      }
      case Kind::Pow: {
        cplx b = eval(e->kids[0]);
        cplx p = eval(e->kids[1]);
        bool p_int = std::abs(p.imag()) < 1e-15 &&
                     std::abs(p.real() - std::round(p.real())) < 1e-12;
        if (std::abs(b) < kTiny) {
          if (p.real() <= 0) throw SingularEval("zero base, nonpositive power");
          return 0.0;
        }
        if (p_int) {
          long long k = (long long)std::llround(p.real());
          if (std::llabs(k) <= 64) {
            cplx base = k < 0 ? cplx(1.0) / b : b;
            long long m = std::llabs(k);
            cplx acc = 1.0;
            while (m) {
              if (m & 1) acc *= base;
              m >>= 1;
              if (m) base *= base;
            }
            return acc;
          }
          return std::pow(b, p);
        }
        guard_log_arg(b);
        return std::pow(b, p);
      }
      case Kind::Exp: return std::exp(eval(e->kids[0]));
      case Kind::Ln: {
        cplx z = eval(e->kids[0]);
        guard_log_arg(z);
        return std::log(z);
      }
      case Kind::Abs: {
        cplx u = eval(e->kids[0]);
        cplx cu = eval(conjugate(e->kids[0]));
        return std::sqrt(u * cu);
      }
      case Kind::Conj: return std::conj(eval(e->kids[0]));
      case Kind::Re: {
        cplx u = eval(e->kids[0]);
        cplx cu = eval(conjugate(e->kids[0]));
        return (u + cu) / 2.0;
      }
      case Kind::Im: {
        cplx u = eval(e->kids[0]);
        cplx cu = eval(conjugate(e->kids[0]));
        return (u - cu) / cplx(0.0, 2.0);
      }
      case Kind::Rho: {
        cplx z = lookup(symtab::psi()) * lookup(symtab::cpsi());
        return std::sqrt(z);
      }
      case Kind::Phi: {
        cplx p = lookup(symtab::psi()), c = lookup(symtab::cpsi());
        guard_log_arg(p);
        guard_log_arg(c);
        return cplx(0.0, 0.5) * (std::log(c) - std::log(p));
      }
      case Kind::Func: return eval_func(e);
    }
    throw std::logic_error("unhandled node kind");
  }

  cplx eval_func(const Expr& e) {
    auto wit = env.witnesses.find(e->sym);
    if (wit != env.witnesses.end()) {
      const FuncWitness& w = wit->second;
      if (w.formals.size() != e->kids.size())
        throw std::invalid_argument("witness arity mismatch for " +
                                    symtab::info(e->sym).name);
      Expr body = w.body;
      for (size_t j = 0; j < w.formals.size(); ++j)
        body = deriv_cache().get(body, w.formals[j], e->dord[j]);
      std::vector<std::pair<Sym, bool>> saved;
      for (size_t j = 0; j < w.formals.size(); ++j) {
        cplx a = eval(e->kids[j]);
        saved.emplace_back(w.formals[j], locals.count(w.formals[j]) > 0);
        locals[w.formals[j]] = a;
      }
      cplx r = eval(body);
      for (auto& [s, had] : saved)
        if (!had) locals.erase(s);
      return r;
    }
    if (!env.abstract_funcs)
      throw std::runtime_error("no witness for function symbol " +
                               symtab::info(e->sym).name);
    // independent pseudo-random jet value, consistent per point
    uint64_t h = env.point_seed ^ (uint64_t(e->sym) * 0x9e3779b97f4a7c15ULL);
    for (int d : e->dord) h = (h * 1099511628211ULL) ^ (uint64_t)(d + 3);
    for (const Expr& a : e->kids) {
      cplx v = eval(a);
      uint64_t rb, ib;
      double rr = v.real(), ii = v.imag();
      static_assert(sizeof(double) == 8);
      std::memcpy(&rb, &rr, 8);
      std::memcpy(&ib, &ii, 8);
      h = (h * 1099511628211ULL) ^ rb;
      h = (h * 1099511628211ULL) ^ ib;
    }
    auto it = fcache.find(h);
    if (it != fcache.end()) return it->second;
    Rng rng(h);
    cplx v = symtab::info(e->sym).is_real
                 ? cplx(rng.uniform(-1.0, 1.0) +
                            (rng.uniform() < 0.5 ? -0.7 : 0.7),
                        0.0)
                 : rng.box(1.0) + cplx(0.3, 0.3);
    fcache.emplace(h, v);
    return v;
  }
};

}  // namespace

cplx eval_numeric(const Expr& e, const EvalEnv& env) {
  Evaluator ev(env);
  return ev.eval(e);
}

Sampler Sampler::for_expr(const Expr& e, const SamplerConfig& cfg) {
  std::set<Sym> fv;
  free_vars(e, fv);
  std::vector<Sym> vars(fv.begin(), fv.end());
  return for_vars(std::move(vars), cfg);
}

Sampler Sampler::for_vars(std::vector<Sym> vars, const SamplerConfig& cfg) {
  // close under conjugate pairing, drop bound formals and function symbols
  std::set<Sym> vs;
  for (Sym s : vars) {
    const SymbolInfo& in = symtab::info(s);
    if (in.kind == SymKind::Formal || in.kind == SymKind::FuncSym) continue;
    vs.insert(s);
    if (in.conj_partner != UINT32_MAX) vs.insert(in.conj_partner);
  }
  Sampler sm;
  sm.cfg = cfg;
  sm.vars.assign(vs.begin(), vs.end());
  std::sort(sm.vars.begin(), sm.vars.end(), [](Sym a, Sym b) {
    return symtab::info(a).name < symtab::info(b).name;
  });
  return sm;
}

void Sampler::fill(Rng& rng, EvalEnv& env) const {
  std::set<Sym> done;
  for (Sym s : vars) {
    if (done.count(s)) continue;
    const SymbolInfo& in = symtab::info(s);
    switch (in.kind) {
      case SymKind::Time:
      case SymKind::Space:
        env.set(s, cplx(rng.uniform(-cfg.coord_range, cfg.coord_range), 0.0));
        done.insert(s);
        break;
      case SymKind::Field:
      case SymKind::FieldConj: {
        double r = rng.uniform(cfg.rho_min, cfg.rho_max);
        double th = rng.uniform(-cfg.arg_max, cfg.arg_max);
        cplx psi = std::polar(r, th);
        Sym p = symtab::psi(), c = symtab::cpsi();
        env.set(p, psi);
        env.set(c, std::conj(psi));
        done.insert(p);
        done.insert(c);
        break;
      }
      case SymKind::Jet: {
        cplx v = rng.box(cfg.jet_radius);
        env.set(s, v);
        Sym partner = in.conj_partner;
        env.set(partner, std::conj(v));
        done.insert(s);
        done.insert(partner);
        break;
      }
      case SymKind::Param: {
        // parameters are normally substituted before sampling; fall back to
        // a generic nonzero draw
        if (in.is_real) {
          double v = rng.uniform(0.25, 1.75);
          env.set(s, cplx(rng.uniform() < 0.5 ? -v : v, 0.0));
        } else {
          env.set(s, rng.box(1.0) + cplx(0.4, 0.2));
        }
        done.insert(s);
        break;
      }
      default:
        done.insert(s);
        break;
    }
  }
}

ZeroResult is_zero(const Expr& e, const ZeroCheckOptions& opt) {
  ZeroResult res;
  Expr s = simplify(e);
  if (is_const(s)) {
    Number v;
    is_const(s, &v);
    double mag = std::abs(v.value());
    res.max_ratio = mag / (1.0 + mag);
    if (v.is_zero()) {
      res.verdict = Verdict::Zero;
      res.structural = true;
    } else if (mag <= opt.tol) {
      res.verdict = Verdict::Zero;
    } else {
      res.verdict = Verdict::NonZero;
      res.witness_value = v.value();
    }
    return res;
  }

  // function symbols present need a witness or abstract mode
  std::set<Sym> fv;
  free_vars(s, fv);
  for (Sym sym : fv) {
    const SymbolInfo& in = symtab::info(sym);
    if (in.kind == SymKind::FuncSym && !opt.base.witnesses.count(sym) &&
        !opt.base.abstract_funcs) {
      res.verdict = Verdict::Indeterminate;
      res.diagnostics = "function symbol " + in.name + " has no witness";
      return res;
    }
  }

  Sampler sm = Sampler::for_expr(s, opt.sampler);
  Rng rng(opt.sampler.seed);
  std::vector<Expr> terms =
      s->kind == Kind::Sum ? s->kids : std::vector<Expr>{s};

  for (int pt = 0; pt < opt.samples; ++pt) {
    bool ok = false;
    cplx value = 0.0;
    double scale = 0.0;
    EvalEnv env = opt.base;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      env.vals.clear();
      sm.fill(rng, env);
      env.point_seed = rng.next_u64() | 1;
      try {
        value = 0.0;
        scale = 0.0;
        for (const Expr& t : terms) {
          cplx tv = eval_numeric(t, env);
          value += tv;
          scale += std::abs(tv);
        }
        ok = true;
      } catch (const SingularEval&) {
        continue;
      }
    }
    if (!ok) {
      res.verdict = Verdict::Indeterminate;
      res.diagnostics = "persistent singular evaluation";
      return res;
    }
    double ratio = std::abs(value) / (1.0 + scale);
    if (ratio > res.max_ratio) res.max_ratio = ratio;
    if (ratio > opt.tol) {
      res.verdict = Verdict::NonZero;
      res.witness_value = value;
      for (Sym sym : sm.vars)
        if (env.vals.count(sym))
          res.witness_point[symtab::info(sym).name] = env.vals.at(sym);
      return res;
    }
  }
  res.verdict = Verdict::Zero;
  return res;
}

}  // namespace nlsym
