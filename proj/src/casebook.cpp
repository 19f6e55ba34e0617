#include <fstream>
#include <json.hpp>
#include <mutex>

#include "nlsym/classify.hpp"

namespace nlsym {

namespace {

using nlohmann::json;

std::string casebook_path() {
  if (const char* env = std::getenv("NLSYM_CASEBOOK")) return env;
  return std::string(NLSYM_DATA_DIR) + "/casebook.json";
}

std::vector<CaseRecord> load_records() {
  std::ifstream in(casebook_path());
  if (!in) throw std::runtime_error("cannot open casebook: " + casebook_path());
  json doc = json::parse(in);
  std::vector<CaseRecord> out;
  for (const json& c : doc.at("cases")) {
    CaseRecord r;
    r.id = c.at("id").get<std::string>();
    r.f_text = c.at("F").get<std::string>();
    if (c.contains("omega")) r.omega_text = c["omega"].get<std::string>();
    if (c.contains("params"))
      for (const json& p : c["params"]) r.params.push_back(p.get<std::string>());
    if (c.contains("complex_params"))
      for (const json& p : c["complex_params"])
        r.complex_params.push_back(p.get<std::string>());
    if (c.contains("derived"))
      for (auto& [k, v] : c["derived"].items())
        r.derived[k] = v.get<std::string>();
    if (c.contains("constraints"))
      for (const json& p : c["constraints"])
        r.constraints.push_back(p.get<std::string>());
    if (c.contains("draw")) r.draw = c["draw"].get<std::string>();
    if (c.contains("infinite")) r.infinite_dimensional = c["infinite"].get<bool>();
    if (c.contains("slots"))
      for (const json& s : c["slots"]) {
        std::string slot = s.get<std::string>();
        if (slot == "f") r.f_slot = true;
        if (slot == "theta") r.theta_slot = true;
        if (slot == "eta0") r.eta0_slot = true;
      }
    for (const json& op : c.at("ops")) {
      OpSpec spec;
      if (op.contains("special")) {
        spec.special = op["special"].get<std::string>();
        r.ops.push_back(std::move(spec));
        continue;
      }
      auto read_term = [](const json& t) {
        GenTerm g;
        g.gen = t.at("gen").get<std::string>();
        if (t.contains("coeff")) g.coeff = t["coeff"].get<std::string>();
        if (t.contains("args"))
          for (auto& [k, v] : t["args"].items())
            g.args[k] = v.get<std::string>();
        if (t.contains("all_a")) g.all_a = t["all_a"].get<bool>();
        if (t.contains("theta_slot")) g.theta_slot = t["theta_slot"].get<bool>();
        if (t.contains("eta0_slot")) g.eta0_slot = t["eta0_slot"].get<bool>();
        return g;
      };
      if (op.contains("combo")) {
        for (const json& t : op["combo"]) spec.terms.push_back(read_term(t));
      } else {
        spec.terms.push_back(read_term(op));
      }
      r.ops.push_back(std::move(spec));
    }
    out.push_back(std::move(r));
  }
  return out;
}

const std::vector<CaseRecord>& records() {
  static std::vector<CaseRecord>* recs =
      new std::vector<CaseRecord>(load_records());
  return *recs;
}

Expr subst_all(Expr e, const std::map<std::string, Expr>& params, int n) {
  e = substitute(e, symtab::param("n"), cst(n));
  for (auto& [name, v] : params) e = substitute(e, symtab::param(name), v);
  return simplify(e);
}

cplx eval_const(const Expr& e) {
  EvalEnv env;
  return eval_numeric(e, env);
}

Number rational_draw(Rng& rng, int num_range = 8, int max_den = 4) {
  long long num = (long long)(rng.next_u64() % (2 * num_range + 1)) - num_range;
  long long den = 1 + (long long)(rng.next_u64() % max_den);
  return Number(Rational(num, den));
}

Number nonzero_rational_draw(Rng& rng, int num_range = 8, int max_den = 4) {
  for (;;) {
    Number v = rational_draw(rng, num_range, max_den);
    if (!v.is_zero()) return v;
  }
}

bool constraints_ok(const CaseRecord& rec,
                    const std::map<std::string, Expr>& params, int n) {
  for (const std::string& c : rec.constraints) {
    size_t colon = c.find(':');
    std::string kind = c.substr(0, colon);
    std::string rest = c.substr(colon + 1);
    auto value = [&](const std::string& text) {
      return eval_const(subst_all(parse(text, 4), params, n));
    };
    if (kind == "nonzero") {
      if (std::abs(value(rest)) < 1e-9) return false;
    } else if (kind == "zero") {
      if (std::abs(value(rest)) > 1e-12) return false;
    } else if (kind == "ne") {
      size_t bar = rest.find('|');
      cplx a = value(rest.substr(0, bar));
      cplx b = value(rest.substr(bar + 1));
      if (std::abs(a - b) < 1e-9) return false;
    } else if (kind == "pos") {
      if (value(rest).real() < 1e-9) return false;
    } else if (kind == "neg") {
      if (value(rest).real() > -1e-9) return false;
    } else {
      throw std::runtime_error("unknown constraint kind: " + kind);
    }
  }
  return true;
}

}  // namespace

const std::vector<CaseRecord>& casebook(int n) {
  (void)n;  // rows are n-independent; instantiation fixes n
  return records();
}

const CaseRecord* find_case(const std::string& id, int n) {
  for (const CaseRecord& r : casebook(n))
    if (r.id == id) return &r;
  return nullptr;
}

Expr theta_witness(const Number& delta2, int n, int which) {
  cplx d2 = delta2.value();
  if (std::abs(d2) < 1e-14) {
    if (which % 2 == 0) return v_x(1);
    return n >= 2 ? simplify(prod({v_x(1), v_x(2)})) : cst(1);
  }
  Expr k = simplify(pow(cst(d2.real() > 0 ? delta2 : -delta2),
                        cst(Number(Rational(1, 2)))));
  Expr kx = prod({k, v_x(1)});
  if (d2.real() > 0)
    return which % 2 == 0 ? simplify(exp(kx)) : simplify(exp(-kx));
  return which % 2 == 0 ? simplify(cos_of(kx)) : simplify(sin_of(kx));
}

Expr eta0_free_witness(int n, int which) {
  if (which % 2 == 0) {
    // plane wave e^{i (k.x - |k|^2 t)}
    std::vector<Expr> kx;
    Number k2(0);
    for (int a = 1; a <= n; ++a) {
      Number ka(Rational(1, a + 1));
      k2 = k2 + ka * ka;
      kx.push_back(prod({cst(ka), v_x(a)}));
    }
    kx.push_back(prod({cst(-k2), v_t()}));
    return simplify(exp(prod({imag_unit(), sum(std::move(kx))})));
  }
  // time-shifted fundamental-solution profile (t+3)^{-n/2} e^{i x.x / (4(t+3))}
  Expr tau = sum({v_t(), cst(3)});
  std::vector<Expr> xx;
  for (int a = 1; a <= n; ++a) xx.push_back(pow(v_x(a), cst(2)));
  Expr phase = prod({cst(Number(Rational(0), Rational(1, 4))),
                     sum(std::move(xx)), pow(tau, cst(-1))});
  return simplify(prod({pow(tau, cst(Number(Rational(-n, 2)))), exp(phase)}));
}

Expr eta0_linear_witness(const Number& gamma, int n, int which) {
  (void)n;
  // plane-wave pair for i u_t + Lap u + gamma u + u* = 0:
  // u = e^{i(k x1 - w t)} + B e^{-i(k x1 - conj(w) t)},
  // w^2 = (gamma - k^2)^2 - 1, B = -conj(w - k^2 + gamma)
  double g = gamma.value().real();
  double k = which % 2 == 0 ? 0.5 : 1.0 / 3.0;
  cplx w = std::sqrt(cplx((g - k * k) * (g - k * k) - 1.0, 0.0));
  cplx B = -std::conj(w - k * k + g);
  Expr th1 = sum({prod({cst(k), v_x(1)}), prod({cst(Number(-w)), v_t()})});
  Expr th2 = sum({prod({cst(k), v_x(1)}),
                  prod({cst(Number(-std::conj(w))), v_t()})});
  return simplify(sum({exp(prod({imag_unit(), th1})),
                       prod({cst(Number(B)),
                             exp(prod({cst(Number(cplx(0, -1))), th2}))})}));
}

std::map<std::string, Expr> draw_case_params(const CaseRecord& rec, int n,
                                             Rng& rng) {
  for (int attempt = 0; attempt < 400; ++attempt) {
    std::map<std::string, Expr> params;
    if (rec.draw == "delta_family" || rec.draw == "delta_family_degenerate") {
      Number d1(0), d2(0), d3(0), d4(0);
      if (rec.id == "T2.9") {
        d3 = nonzero_rational_draw(rng);
        d2 = rational_draw(rng);
        d1 = rational_draw(rng);
      } else if (rec.id == "T2.10") {
        d3 = nonzero_rational_draw(rng);
        d2 = d3;
        d1 = nonzero_rational_draw(rng);
      } else if (rec.id == "T2.11") {
        d2 = nonzero_rational_draw(rng);
        d1 = rational_draw(rng);
      } else if (rec.id == "T2.12") {
        d1 = nonzero_rational_draw(rng);
      } else if (rec.id == "T2.15") {
        // delta1 delta4 = ((delta2-delta3)/2)^2 exactly
        long long s = rng.uniform() < 0.5 ? -1 : 1;
        long long kk = 1 + (long long)(rng.next_u64() % 3);
        long long mm = 1 + (long long)(rng.next_u64() % 3);
        d1 = Number(Rational(s * kk * kk, 1));
        d4 = Number(Rational(s * mm * mm, 1));
        d2 = rational_draw(rng);
        d3 = d2 - Number(Rational(2 * s * kk * mm, 1));
      } else {  // T2.13, T2.14
        d1 = rational_draw(rng);
        d2 = rational_draw(rng);
        d3 = rational_draw(rng);
        d4 = nonzero_rational_draw(rng);
      }
      params["delta1"] = cst(d1);
      params["delta2"] = cst(d2);
      params["delta3"] = cst(d3);
      params["delta4"] = cst(d4);
    } else {
      for (const std::string& p : rec.params)
        params[p] = cst(rational_draw(rng));
    }
    for (const std::string& p : rec.complex_params) {
      Number re = rational_draw(rng, 4, 3), im = rational_draw(rng, 4, 3);
      if (re.is_zero() && im.is_zero()) re = Number(1);
      params[p] = cst(re + Number::i() * im);
    }
    // derived values
    bool derived_ok = true;
    for (auto& [name, text] : rec.derived) {
      Expr v = subst_all(parse(text, 4), params, n);
      params[name] = v;
      if (!std::isfinite(std::abs(eval_const(v)))) derived_ok = false;
    }
    if (derived_ok && constraints_ok(rec, params, n)) return params;
  }
  throw std::runtime_error("failed to draw admissible parameters for " +
                           rec.id);
}

namespace {

VectorField build_term(const GenTerm& t,
                       const std::map<std::string, Expr>& params, int n, int a,
                       int witness_index, const CaseRecord& rec) {
  GenArgs args;
  for (auto& [k, v] : t.args) args[k] = subst_all(parse(v, n), params, n);
  if (t.all_a) args["a"] = cst(a);
  if (t.gen == "Ga" && !args.count("a")) args["a"] = cst(a);
  if (t.theta_slot) {
    Number d2(0);
    if (params.count("delta2")) {
      Number v;
      if (is_const(params.at("delta2"), &v)) d2 = v;
    }
    args["theta"] = theta_witness(d2, n, witness_index);
  }
  if (t.eta0_slot) {
    if (rec.id == "T2.2") {
      Number g(0);
      Number v;
      if (params.count("gamma") && is_const(params.at("gamma"), &v)) g = v;
      args["eta0"] = eta0_linear_witness(g, n, witness_index);
    } else {
      args["eta0"] = eta0_free_witness(n, witness_index);
    }
  }
  VectorField q = named_generator(t.gen, args, n);
  Expr coeff = subst_all(parse(t.coeff, n), params, n);
  Number cval;
  if (is_const(coeff, &cval) && cval.is_one()) return q;
  return vf_scale(coeff, q);
}

VectorField build_t24_op1(const std::map<std::string, Expr>& params, int n) {
  Number sigma;
  if (!is_const(params.at("sigma"), &sigma))
    throw std::invalid_argument("t24_op1 needs a numeric sigma");
  Number re_s = (sigma + sigma.conj()) * Number(Rational(1, 2));
  Number im_s =
      (sigma - sigma.conj()) * Number(Rational(0), Rational(-1, 2));
  // I + D + i (t Re sigma - (1/2n) x.x Im sigma)(d_psi - d_cpsi)
  std::vector<Expr> xx;
  for (int a = 1; a <= n; ++a) xx.push_back(pow(v_x(a), cst(2)));
  Expr w = sum({prod({cst(re_s), v_t()}),
                prod({cst(Number(0) - im_s * Number(Rational(1, 2 * n))),
                      sum(std::move(xx))})});
  VectorField q = vf_add(named_generator("I", n), named_generator("D", n));
  VectorField shift = named_generator("sol_re_gen", {{"w", simplify(w)}}, n);
  VectorField out = vf_add(q, shift);
  out.label = "I+D+i(t Re(sigma)-x.x Im(sigma)/(2n))(d_psi-d_cpsi)";
  return out;
}

}  // namespace

CaseInstance instantiate_case(const CaseRecord& rec,
                              const std::map<std::string, Expr>& params, int n,
                              int witness_index) {
  CaseInstance inst;
  inst.case_id = rec.id;
  inst.n = n;
  inst.param_values = params;
  inst.infinite_dimensional = rec.infinite_dimensional;
  for (auto& [name, text] : rec.derived)
    if (!inst.param_values.count(name))
      inst.param_values[name] = subst_all(parse(text, 4), params, n);

  Expr F = parse(rec.f_text, n);
  if (!rec.omega_text.empty()) {
    Expr omega = subst_all(parse(rec.omega_text, n), inst.param_values, n);
    F = substitute(F, symtab::param("Omega"), omega);
  }
  inst.F = subst_all(F, inst.param_values, n);

  for (const OpSpec& spec : rec.ops) {
    if (spec.special == "t24_op1") {
      inst.extensions.push_back(build_t24_op1(inst.param_values, n));
      continue;
    }
    bool expands = false;
    for (const GenTerm& t : spec.terms) expands = expands || t.all_a;
    if (expands && spec.terms.size() == 1) {
      for (int a = 1; a <= n; ++a)
        inst.extensions.push_back(
            build_term(spec.terms[0], inst.param_values, n, a, witness_index,
                       rec));
      continue;
    }
    VectorField acc = vf_zero(n);
    std::string label;
    for (const GenTerm& t : spec.terms) {
      VectorField part =
          build_term(t, inst.param_values, n, 1, witness_index, rec);
      label += (label.empty() ? "" : " + ") + part.label;
      acc = vf_add(acc, part);
    }
    acc.label = label;
    inst.extensions.push_back(std::move(acc));
  }

  if (rec.f_slot) {
    Sym f = symtab::funcsym("f", 1);
    Sym w = symtab::fresh_formal("w");
    Expr body = witness_index % 2 == 0
                    ? var(w)
                    : exp(prod({imag_unit(), var(w)}));
    inst.witness_env.set_witness(f, FuncWitness{{w}, body});
  }
  return inst;
}

}  // namespace nlsym
