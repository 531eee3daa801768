#pragma once
// Experiment configs. One JSON document drives a whole run: the "kind" field
// picks the pipeline, the rest describes systems, observables, schemes and
// sampler parameters. Builders here turn config blocks into library objects;
// validate_config collects diagnostics without running anything expensive.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergolab/averaging.hpp"
#include "ergolab/convergence.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/observables.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/util.hpp"

namespace ergolab {

using Json = nlohmann::json;

struct ExperimentConfig {
  Json doc;
  std::string kind;
  std::string out_prefix;
  std::uint64_t seed = 0;
  bool has_seed = false;

  // nlohmann::json keeps object keys sorted, so dump() is already canonical:
  // two configs that differ only in key order serialize identically.
  std::string canonical() const { return doc.dump(); }
  std::uint64_t digest() const { return fnv64(canonical()); }

  static ExperimentConfig from_json(Json j) {
    ExperimentConfig c;
    c.doc = std::move(j);
    if (!c.doc.is_object()) throw ValidationError("config root must be a JSON object");
    c.kind = c.doc.value("kind", std::string());
    c.out_prefix = c.doc.value("out", std::string());
    if (c.doc.contains("seed")) {
      const Json& s = c.doc["seed"];
      if (!s.is_number_unsigned())
        throw ValidationError("seed must be an unsigned integer");
      c.seed = s.get<std::uint64_t>();
      c.has_seed = true;
    }
    return c;
  }

  static ExperimentConfig from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on config file: " + path);
    Json j;
    try {
      j = Json::parse(buf.str());
    } catch (const Json::parse_error& e) {
      throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(std::move(j));
  }
};

inline const std::vector<std::string>& config_kinds() {
  static const std::vector<std::string> kinds = {
      "cone-check", "scan", "iid-lab", "coboundary", "badfun", "cover", "rates"};
  return kinds;
}

namespace detail {

inline double want_number(const Json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j[key].is_number())
    throw ValidationError(std::string(where) + ": missing numeric field '" + key + "'");
  return j[key].get<double>();
}

inline std::int64_t want_int(const Json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw ValidationError(std::string(where) + ": missing integer field '" + key + "'");
  return j[key].get<std::int64_t>();
}

inline std::string want_string(const Json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j[key].is_string())
    throw ValidationError(std::string(where) + ": missing string field '" + key + "'");
  return j[key].get<std::string>();
}

inline std::vector<double> number_list(const Json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j[key].is_array())
    throw ValidationError(std::string(where) + ": missing array field '" + key + "'");
  std::vector<double> out;
  for (const Json& e : j[key]) {
    if (!e.is_number())
      throw ValidationError(std::string(where) + ": '" + key + "' entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

inline System make_system(const Json& j, std::uint64_t master_seed) {
  if (!j.is_object()) throw ValidationError("system: spec must be an object");
  const std::string type = detail::want_string(j, "type", "system");
  const auto sd = j.contains("seed") ? j["seed"].get<std::uint64_t>() : master_seed;
  if (type == "cyclic") {
    const std::int64_t n = detail::want_int(j, "size", "cyclic system");
    const std::int64_t st = j.value("step", std::int64_t{1});
    return CyclicSystem(n, st, sd);
  }
  if (type == "shift") {
    const std::int64_t s = detail::want_int(j, "alphabet", "shift system");
    std::vector<double> probs;
    if (j.contains("probs"))
      probs = detail::number_list(j, "probs", "shift system");
    else if (s > 0)
      probs.assign(static_cast<std::size_t>(s), 1.0 / static_cast<double>(s));
    return ShiftSystem(static_cast<int>(s), probs, sd);
  }
  if (type == "rotation") {
    const double a = detail::want_number(j, "angle", "rotation system");
    const bool conv = j.value("convergents", false);
    return RotationSystem(a, sd, conv);
  }
  throw ValidationError("system: unknown type '" + type + "' (cyclic | shift | rotation)");
}

inline RealFunction make_real_function(const Json& j) {
  if (!j.is_object()) throw ValidationError("function: spec must be an object");
  const std::string type = detail::want_string(j, "type", "function");
  if (type == "poly") {
    PolyFunction f;
    f.coeffs = detail::number_list(j, "coeffs", "poly function");
    if (f.coeffs.empty()) throw ValidationError("poly function: coeffs must be nonempty");
    return f;
  }
  if (type == "pwl") {
    PwlFunction f;
    f.knots = detail::number_list(j, "knots", "pwl function");
    if (f.knots.empty()) throw ValidationError("pwl function: knots must be nonempty");
    return f;
  }
  throw ValidationError("function: unknown type '" + type + "' (poly | pwl)");
}

inline TransferSpec make_transfer(const Json& j) {
  if (!j.is_object()) throw ValidationError("transfer: spec must be an object");
  const std::string type = detail::want_string(j, "type", "transfer");
  if (type == "step") {
    StepObservable g;
    g.values = detail::number_list(j, "values", "step transfer");
    if (g.values.empty()) throw ValidationError("step transfer: values must be nonempty");
    return g;
  }
  if (type == "cylinder") {
    CylinderObservable g;
    g.radius = static_cast<int>(detail::want_int(j, "radius", "cylinder transfer"));
    g.table = detail::number_list(j, "table", "cylinder transfer");
    return g;
  }
  if (type == "pareto") {
    ParetoTransfer g;
    g.exponent = detail::want_number(j, "exponent", "pareto transfer");
    g.scale = j.value("scale", 1.0);
    return g;
  }
  throw ValidationError("transfer: unknown type '" + type + "' (step | cylinder | pareto)");
}

inline FpParams make_fp_params(const Json& j) {
  if (!j.is_object()) throw ValidationError("fp: spec must be an object");
  FpParams par;
  par.p = j.value("p", 2.0);
  if (!(par.p > 1.0)) throw ValidationError("fp: p must be > 1");
  par.target = j.value("target", 0.5);
  par.n_max = static_cast<int>(detail::want_int(j, "n_max", "fp"));
  if (j.contains("growth")) {
    const Json& g = j["growth"];
    const std::string gk = detail::want_string(g, "kind", "fp growth");
    if (gk == "geometric") {
      par.growth.kind = FpGrowthSpec::Kind::geometric;
      par.growth.scale = g.value("scale", 1.5);
      par.growth.base = g.value("base", 2.0);
    } else if (gk == "exponential") {
      par.growth.kind = FpGrowthSpec::Kind::exponential;
    } else if (gk == "explicit") {
      par.growth.kind = FpGrowthSpec::Kind::explicit_list;
      par.growth.values = detail::number_list(g, "values", "fp growth");
    } else {
      throw ValidationError("fp growth: unknown kind '" + gk + "'");
    }
  }
  if (j.contains("mass")) {
    const Json& m = j["mass"];
    const std::string mk = detail::want_string(m, "kind", "fp mass");
    if (mk == "classic") {
      par.mass.kind = FpMassSpec::Kind::classic;
    } else if (mk == "inverse-height-power") {
      par.mass.kind = FpMassSpec::Kind::inverse_height_power;
      par.mass.power = m.value("power", 2.0);
    } else if (mk == "explicit") {
      par.mass.kind = FpMassSpec::Kind::explicit_list;
      par.mass.values = detail::number_list(m, "values", "fp mass");
    } else {
      throw ValidationError("fp mass: unknown kind '" + mk + "'");
    }
  }
  return par;
}

inline Observable make_observable(const Json& j, const System& sys) {
  if (!j.is_object()) throw ValidationError("observable: spec must be an object");
  const std::string type = detail::want_string(j, "type", "observable");
  if (type == "step") {
    StepObservable f;
    f.values = detail::number_list(j, "values", "step observable");
    if (f.values.empty()) throw ValidationError("step observable: values must be nonempty");
    return f;
  }
  if (type == "constant") {
    ConstantObservable f;
    f.value = detail::want_number(j, "value", "constant observable");
    return f;
  }
  if (type == "cylinder") {
    CylinderObservable f;
    f.radius = static_cast<int>(detail::want_int(j, "radius", "cylinder observable"));
    f.table = detail::number_list(j, "table", "cylinder observable");
    return f;
  }
  if (type == "encoded") {
    EncodedObservable f;
    if (!j.contains("function"))
      throw ValidationError("encoded observable: missing 'function' block");
    f.fn = make_real_function(j["function"]);
    f.depth = static_cast<int>(j.value("depth", std::int64_t{53}));
    f.refresh();
    return f;
  }
  if (type == "pareto") {
    ParetoTransfer f;
    f.exponent = detail::want_number(j, "exponent", "pareto observable");
    f.scale = j.value("scale", 1.0);
    return f;
  }
  if (type == "coboundary") {
    if (!j.contains("transfer"))
      throw ValidationError("coboundary observable: missing 'transfer' block");
    return CoboundaryObservable{make_transfer(j["transfer"])};
  }
  if (type == "fp") {
    // materialized as a step function on the cyclic system
    const FpParams par = make_fp_params(j);
    auto built = build_fp_function(par, detail::want_cyclic(sys, "fp observable"));
    return built.first;
  }
  throw ValidationError("observable: unknown type '" + type + "'");
}

inline SchemeSpec make_scheme(const Json& j) {
  if (!j.is_object()) throw ValidationError("scheme: spec must be an object");
  const std::string fam = detail::want_string(j, "family", "scheme");
  SchemeSpec spec;
  if (fam == "quadratic") spec.family = SchemeFamily::quadratic;
  else if (fam == "lacunary") spec.family = SchemeFamily::lacunary;
  else if (fam == "hyperlacunary") spec.family = SchemeFamily::hyperlacunary;
  else if (fam == "triangular") spec.family = SchemeFamily::triangular;
  else if (fam == "power") spec.family = SchemeFamily::power;
  else if (fam == "exponential") spec.family = SchemeFamily::exponential;
  else if (fam == "expsqrt") spec.family = SchemeFamily::expsqrt;
  else if (fam == "explicit") spec.family = SchemeFamily::explicit_list;
  else throw ValidationError("scheme: unknown family '" + fam + "'");
  spec.param = j.value("param", 1.0);
  if (spec.family == SchemeFamily::explicit_list) {
    if (!j.contains("pairs") || !j["pairs"].is_array())
      throw ValidationError("explicit scheme: missing 'pairs' array");
    std::int64_t prev = 0;
    for (const Json& e : j["pairs"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw ValidationError("explicit scheme: each pair must be [v, L] with integers");
      WindowPair pr{e[0].get<std::int64_t>(), e[1].get<std::int64_t>()};
      if (pr.L <= prev)
        throw ValidationError(
            "explicit scheme: window lengths must be strictly increasing "
            "(increasing always means strictly increasing here)");
      prev = pr.L;
      spec.pairs.push_back(pr);
    }
    if (spec.pairs.empty()) throw ValidationError("explicit scheme: 'pairs' is empty");
  }
  return spec;
}

inline IIDSampler make_sampler(const Json& j, std::uint64_t master_seed) {
  if (!j.is_object()) throw ValidationError("sampler: spec must be an object");
  const std::string type = detail::want_string(j, "type", "sampler");
  const auto sd = j.contains("seed") ? j["seed"].get<std::uint64_t>() : master_seed;
  if (type == "rademacher") return IIDSampler::rademacher(sd);
  if (type == "uniform") return IIDSampler::uniform(sd, j.value("half_width", 1.0));
  if (type == "pareto") {
    const double alpha = detail::want_number(j, "alpha", "pareto sampler");
    return IIDSampler::pareto(sd, alpha);
  }
  if (type == "discrete") {
    return IIDSampler::discrete(sd, detail::number_list(j, "values", "discrete sampler"),
                                detail::number_list(j, "probs", "discrete sampler"));
  }
  throw ValidationError("sampler: unknown type '" + type +
                        "' (rademacher | uniform | pareto | discrete)");
}

namespace detail {

// run a builder only for its error messages
template <class F>
void try_build(F&& f, std::vector<std::string>& diags) {
  try {
    f();
  } catch (const Error& e) {
    diags.emplace_back(e.what());
  }
}

}  // namespace detail

// Structural and semantic checks. Diagnostics are the output; nothing throws.
inline std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> diags;
  const Json& d = cfg.doc;

  bool known_kind = false;
  for (const std::string& k : config_kinds()) known_kind = known_kind || (k == cfg.kind);
  if (cfg.kind.empty())
    diags.emplace_back("missing 'kind' field");
  else if (!known_kind)
    diags.emplace_back("unknown kind '" + cfg.kind +
                       "' (cone-check | scan | iid-lab | coboundary | badfun | cover | rates)");

  if (!cfg.has_seed)
    diags.emplace_back("missing 'seed': every run needs an explicit seed, there are no entropy defaults");

  if (cfg.out_prefix.empty())
    diags.emplace_back("missing 'out': output path prefix is required");

  if (d.contains("deltas")) {
    if (!d["deltas"].is_array()) {
      diags.emplace_back("'deltas' must be an array of reals");
    } else {
      for (const Json& e : d["deltas"])
        if (!e.is_number() || !(e.get<double>() > 0.0)) {
          diags.emplace_back("deltas must all be > 0");
          break;
        }
    }
  }
  if (d.contains("trials") &&
      (!d["trials"].is_number_integer() || d["trials"].get<std::int64_t>() < 1))
    diags.emplace_back("'trials' must be an integer >= 1");
  if (d.contains("n") && (!d["n"].is_number_integer() || d["n"].get<std::int64_t>() < 1))
    diags.emplace_back("'n' must be an integer >= 1");
  if (d.contains("eta") && (!d["eta"].is_number() || !(d["eta"].get<double>() > 0.0)))
    diags.emplace_back("'eta' must be a real > 0");
  if (d.contains("p") && (!d["p"].is_number() || !(d["p"].get<double>() > 1.0)))
    diags.emplace_back("'p' must be a real > 1");

  if (d.contains("scheme"))
    detail::try_build([&] { make_scheme(d["scheme"]); }, diags);
  if (d.contains("system"))
    detail::try_build([&] { make_system(d["system"], cfg.seed); }, diags);
  if (d.contains("sampler"))
    detail::try_build([&] { make_sampler(d["sampler"], cfg.seed); }, diags);
  if (d.contains("observable") && d["observable"].is_object()) {
    const std::string type = d["observable"].value("type", std::string());
    if (type == "fp")
      detail::try_build([&] { make_fp_params(d["observable"]); }, diags);
  }
  if (d.contains("fp")) detail::try_build([&] { make_fp_params(d["fp"]); }, diags);

  return diags;
}

}  // namespace ergolab
