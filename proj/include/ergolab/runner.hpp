#pragma once
// Batch runner behind the CLI. Each experiment kind maps to one handler that
// produces a CSV and a JSON document; run() writes them atomically next to
// the configured prefix and returns a manifest with checksums. Outputs are a
// pure function of (config, version): thread count only changes wall time.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/adversary.hpp"
#include "ergolab/averaging.hpp"
#include "ergolab/cone.hpp"
#include "ergolab/config.hpp"
#include "ergolab/convergence.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/observables.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/util.hpp"
#include "ergolab/version.hpp"

namespace ergolab {

struct RunManifest {
  std::string kind;
  std::string config_digest;
  std::string version;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, fnv64 hex
  double wall_ms = 0.0;

  Json to_json() const {
    Json j;
    j["kind"] = kind;
    j["config_digest"] = config_digest;
    j["version"] = version;
    Json outs = Json::object();
    for (const auto& [path, sum] : outputs) outs[path] = sum;
    j["outputs"] = outs;
    j["wall_ms"] = wall_ms;
    return j;
  }
};

namespace detail {

inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create output directory: " + target.parent_path().string());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failure on: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("cannot move " + tmp + " into place");
  }
}

// one CSV row; reals in round-trip decimal form, '.' separator
struct CsvBuilder {
  std::string text;
  bool at_line_start = true;

  void field(const std::string& s) {
    if (!at_line_start) text += ',';
    text += s;
    at_line_start = false;
  }
  void field(const char* s) { field(std::string(s)); }
  void field(double x) { field(format_real(x)); }
  void field(std::int64_t x) { field(std::to_string(x)); }
  void field(int x) { field(std::to_string(x)); }
  void field(bool b) { field(std::string(b ? "1" : "0")); }
  void endrow() {
    text += '\n';
    at_line_start = true;
  }
  template <class... Ts>
  void row(Ts&&... vals) {
    (field(std::forward<Ts>(vals)), ...);
    endrow();
  }
};

struct KindOutput {
  std::string csv;
  Json json;
};

inline Json slope_json(const SlopeReport& s) {
  Json j;
  j["slope"] = s.slope;
  j["tail_increment"] = s.tail_increment;
  j["points"] = s.points;
  j["verdict"] = s.verdict;
  return j;
}

inline void scan_csv_rows(CsvBuilder& csv, const ScanResult& res) {
  csv.row("delta", "n", "L", "estimate", "stderr", "partial_sum");
  for (const ScanRow& row : res.rows)
    for (std::size_t i = 0; i < res.lengths.size(); ++i)
      csv.row(row.delta, static_cast<std::int64_t>(i + 1), res.lengths[i],
              row.estimates[i], row.stderrs[i], row.partial_sums[i]);
}

inline Json scan_json(const ScanResult& res) {
  Json j;
  j["trials"] = res.trials;
  j["lengths_count"] = static_cast<std::int64_t>(res.lengths.size());
  Json rows = Json::array();
  for (const ScanRow& row : res.rows) {
    Json r;
    r["delta"] = row.delta;
    r["exact"] = row.exact;
    r["final_sum"] = row.partial_sums.empty() ? 0.0 : row.partial_sums.back();
    r["slope"] = slope_json(row.slope);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

inline KindOutput run_cone_check(const ExperimentConfig& cfg) {
  const Json& d = cfg.doc;
  if (!d.contains("scheme")) throw ValidationError("cone-check: missing 'scheme'");
  const SchemeSpec spec = make_scheme(d["scheme"]);
  const int n = static_cast<int>(want_int(d, "n", "cone-check"));
  GridSpec grid;
  if (d.contains("grid")) {
    const Json& g = d["grid"];
    grid.lambda_min = g.value("lambda_min", 0.0);
    grid.lambda_max = g.value("lambda_max", 0.0);
    grid.per_decade = static_cast<int>(g.value("per_decade", std::int64_t{64}));
  }
  const ConeProfile pr = ratio_profile(spec, n, grid);

  KindOutput out;
  CsvBuilder csv;
  csv.row("lambda", "C_lambda", "ratio");
  for (std::size_t i = 0; i < pr.lambdas.size(); ++i)
    csv.row(pr.lambdas[i], pr.lengths[i], pr.ratios[i]);
  out.csv = std::move(csv.text);

  out.json["family"] = scheme_name(spec.family);
  out.json["n"] = n;
  out.json["verdict"] = cone_verdict(pr);
  out.json["max_ratio"] = pr.max_ratio;
  out.json["witness_lambda"] = pr.witness_lambda;
  if (d.contains("k_bound")) {
    const double k = d["k_bound"].get<double>();
    const SubsequenceResult sub = good_subsequence(spec, k, n);
    Json js;
    js["k_bound"] = k;
    js["indices"] = sub.indices;
    js["max_ratio"] = sub.max_ratio;
    out.json["subsequence"] = std::move(js);
  }
  return out;
}

inline KindOutput run_scan(const ExperimentConfig& cfg, int threads) {
  const Json& d = cfg.doc;
  if (!d.contains("system")) throw ValidationError("scan: missing 'system'");
  if (!d.contains("observable")) throw ValidationError("scan: missing 'observable'");
  if (!d.contains("scheme")) throw ValidationError("scan: missing 'scheme'");
  const System sys = make_system(d["system"], cfg.seed);
  const Observable f = make_observable(d["observable"], sys);
  const SchemeSpec spec = make_scheme(d["scheme"]);
  const int n = static_cast<int>(want_int(d, "n", "scan"));
  const std::vector<double> deltas = number_list(d, "deltas", "scan");
  const std::int64_t trials = want_int(d, "trials", "scan");
  const auto budget = d.value("budget", std::uint64_t{1} << 36);

  const ScanResult res = exceedance_scan(sys, f, spec, n, deltas, trials, threads, budget);

  KindOutput out;
  CsvBuilder csv;
  scan_csv_rows(csv, res);
  out.csv = std::move(csv.text);
  out.json = scan_json(res);
  return out;
}

inline KindOutput run_iid_lab(const ExperimentConfig& cfg, int threads) {
  const Json& d = cfg.doc;
  const std::string mode = d.value("mode", std::string("scan"));
  KindOutput out;
  CsvBuilder csv;

  if (mode == "scan") {
    if (!d.contains("sampler")) throw ValidationError("iid-lab scan: missing 'sampler'");
    if (!d.contains("scheme")) throw ValidationError("iid-lab scan: missing 'scheme'");
    const IIDSampler sampler = make_sampler(d["sampler"], cfg.seed);
    const SchemeSpec spec = make_scheme(d["scheme"]);
    const int n = static_cast<int>(want_int(d, "n", "iid-lab scan"));
    const std::vector<double> deltas = number_list(d, "deltas", "iid-lab scan");
    const std::int64_t trials = want_int(d, "trials", "iid-lab scan");
    const auto budget = d.value("budget", std::uint64_t{1} << 33);
    const bool force_mc = d.value("force_monte_carlo", false);

    const ScanResult res =
        iid_exceedance_scan(sampler, spec, n, deltas, trials, threads, budget, force_mc);
    scan_csv_rows(csv, res);
    out.csv = std::move(csv.text);
    out.json = scan_json(res);
    out.json["sampler"] = sampler_name(sampler.kind);
  } else if (mode == "erdos") {
    if (!d.contains("sampler")) throw ValidationError("iid-lab erdos: missing 'sampler'");
    const IIDSampler sampler = make_sampler(d["sampler"], cfg.seed);
    const std::int64_t n = want_int(d, "n", "iid-lab erdos");
    const std::int64_t trials = want_int(d, "trials", "iid-lab erdos");
    const ErdosReport rep = erdos_block_demo(sampler, n, trials, threads);

    csv.row("n", "start", "exceed_rate", "partial_sum");
    for (std::size_t i = 0; i < rep.block_exceed_rate.size(); ++i)
      csv.row(static_cast<std::int64_t>(i + 1), rep.block_start[i],
              rep.block_exceed_rate[i], rep.partial_sums[i]);
    out.csv = std::move(csv.text);

    out.json["sampler"] = sampler_name(sampler.kind);
    out.json["n_blocks"] = rep.n_blocks;
    out.json["trials"] = rep.trials;
    out.json["blocks_disjoint"] = rep.blocks_disjoint;
    out.json["mean_exceed_count"] = rep.mean_exceed_count;
    out.json["max_abs_corr"] = rep.max_abs_corr;
    out.json["corr_bound"] = rep.corr_bound;
    out.json["slope"] = slope_json(rep.slope);
  } else if (mode == "hoeffding") {
    const std::vector<double> a = number_list(d, "a", "iid-lab hoeffding");
    const std::vector<double> b = number_list(d, "b", "iid-lab hoeffding");
    const double t = want_number(d, "t", "iid-lab hoeffding");
    const std::int64_t trials = d.value("trials", std::int64_t{0});
    const HoeffdingResult hb = hoeffding_bound(a, b, t);
    EmpiricalTail emp;
    if (trials > 0) emp = hoeffding_empirical(a, b, t, trials, cfg.seed, threads);

    csv.row("t", "bound", "range_sq", "degenerate", "empirical", "stderr", "trials");
    csv.row(t, hb.bound, hb.range_sq, hb.degenerate, emp.estimate, emp.stderr_, emp.trials);
    out.csv = std::move(csv.text);

    out.json["t"] = t;
    out.json["bound"] = hb.bound;
    out.json["range_sq"] = hb.range_sq;
    out.json["degenerate"] = hb.degenerate;
    out.json["trials"] = emp.trials;
    out.json["empirical"] = emp.estimate;
    out.json["stderr"] = emp.stderr_;
  } else {
    throw ValidationError("iid-lab: unknown mode '" + mode + "' (scan | erdos | hoeffding)");
  }
  out.json["mode"] = mode;
  return out;
}

inline KindOutput run_coboundary(const ExperimentConfig& cfg, int threads) {
  const Json& d = cfg.doc;
  if (!d.contains("system")) throw ValidationError("coboundary: missing 'system'");
  if (!d.contains("observable")) throw ValidationError("coboundary: missing 'observable'");
  const System sys = make_system(d["system"], cfg.seed);
  const Observable f = make_observable(d["observable"], sys);
  const int n = static_cast<int>(want_int(d, "n", "coboundary"));
  const double delta = want_number(d, "delta", "coboundary");
  const std::int64_t N = want_int(d, "lengths_to", "coboundary");
  const std::int64_t trials = want_int(d, "trials", "coboundary");

  const CofbReport rep = cofb_decomposition_scan(sys, f, n, delta, N, trials, threads);

  KindOutput out;
  CsvBuilder csv;
  csv.row("m", "direct", "direct_se", "chain", "chain_se");
  for (std::size_t i = 0; i < rep.lengths.size(); ++i)
    csv.row(rep.lengths[i], rep.direct[i], rep.direct_se[i], rep.chain[i], rep.chain_se[i]);
  out.csv = std::move(csv.text);

  out.json["n"] = rep.n;
  out.json["delta"] = rep.delta;
  out.json["dev_bound"] = rep.dev_bound;
  out.json["dev_seen"] = rep.dev_seen;
  out.json["strided_corr_bound"] = rep.strided_corr_bound;
  out.json["max_strided_corr"] = rep.max_strided_corr;
  out.json["chain_dominates"] = rep.chain_dominates;
  out.json["direct_final"] = rep.direct_final;
  out.json["chain_final"] = rep.chain_final;
  return out;
}

inline KindOutput run_badfun(const ExperimentConfig& cfg, int threads) {
  const Json& d = cfg.doc;
  if (!d.contains("fp")) throw ValidationError("badfun: missing 'fp' block");
  BadfunParams par;
  par.cycle = want_int(d, "cycle", "badfun");
  par.fp = make_fp_params(d["fp"]);
  par.eta = d.value("eta", 0.125);
  par.points = d.value("points", std::int64_t{1000});
  par.seed = cfg.seed;
  par.threads = threads;

  const BadfunReport rep = badfun_pipeline(par);

  KindOutput out;
  CsvBuilder csv;
  csv.row("i", "v", "L");
  for (std::size_t k = 0; k < rep.scheme.pairs.size(); ++k)
    csv.row(rep.scheme.index[k], rep.scheme.pairs[k].v, rep.scheme.pairs[k].L);
  out.csv = std::move(csv.text);

  Json& j = out.json;
  j["cycle"] = par.cycle;
  j["eta"] = rep.scheme.eta;
  j["p"] = rep.scheme.p;
  j["a_n"] = rep.a_n;
  j["delta"] = rep.scheme.delta;
  j["tau"] = rep.scheme.tau;
  j["fp_n_max"] = rep.fp.n_max;
  j["fp_mass_b"] = rep.fp.mass_b;
  j["fp_heights"] = rep.fp.heights;
  j["anchor_count"] = rep.anchor_count;
  j["k_x"] = rep.k_x;
  j["ell_x"] = rep.ell_x;
  j["certified"] = rep.certified;
  j["mu_bprime"] = rep.mu_bprime;
  {
    Json v;
    v["selected_count"] = static_cast<std::int64_t>(rep.vitali.selected.size());
    v["selected_total"] = rep.vitali.selected_total;
    v["union_length"] = rep.vitali.union_length;
    v["bound_holds"] = rep.vitali.bound_holds;
    j["vitali"] = std::move(v);
  }
  {
    Json c;
    c["steps"] = static_cast<std::int64_t>(rep.cover.raw_shifts.size());
    c["covered"] = rep.cover.covered;
    c["full_scan"] = rep.cover.full_scan;
    c["raw_shifts"] = rep.cover.raw_shifts;
    c["leftover_mass"] = rep.cover.leftover_mass;
    j["cover"] = std::move(c);
  }
  {
    Json l;
    l["points"] = rep.limsup.points;
    l["threshold"] = rep.limsup.threshold;
    l["fraction"] = rep.limsup.fraction;
    l["mean_max"] = rep.limsup.mean_max;
    l["deciles"] = rep.limsup.deciles;
    l["exact"] = rep.limsup.exact;
    j["limsup"] = std::move(l);
  }
  return out;
}

inline KindOutput run_cover(const ExperimentConfig& cfg) {
  const Json& d = cfg.doc;
  if (!d.contains("system")) throw ValidationError("cover: missing 'system'");
  const System sys = make_system(d["system"], cfg.seed);
  const CyclicSystem& cyc = want_cyclic(sys, "cover");
  if (!d.contains("sets") || !d["sets"].is_array() || d["sets"].empty())
    throw ValidationError("cover: missing 'sets' (array of index arrays)");
  std::vector<std::vector<std::int64_t>> sets;
  for (const Json& s : d["sets"]) {
    if (!s.is_array()) throw ValidationError("cover: each set must be an index array");
    std::vector<std::int64_t> one;
    for (const Json& e : s) {
      if (!e.is_number_integer()) throw ValidationError("cover: set entries must be integers");
      one.push_back(e.get<std::int64_t>());
    }
    sets.push_back(std::move(one));
  }
  const std::int64_t steps = want_int(d, "steps", "cover");

  const CoverPlan plan = greedy_cover(cyc, sets, static_cast<int>(steps), cfg.seed);

  KindOutput out;
  CsvBuilder csv;
  csv.row("step", "raw_shift", "shift", "overlap", "leftover", "leftover_mass");
  for (std::size_t i = 0; i < plan.raw_shifts.size(); ++i)
    csv.row(static_cast<std::int64_t>(i + 1), plan.raw_shifts[i], plan.shifts[i],
            plan.overlaps[i], plan.leftover[i], plan.leftover_mass[i]);
  out.csv = std::move(csv.text);

  out.json["domain"] = plan.domain;
  out.json["generator_step"] = plan.step;
  out.json["requested_steps"] = steps;
  out.json["covered"] = plan.covered;
  out.json["full_scan"] = plan.full_scan;
  return out;
}

inline KindOutput run_rates(const ExperimentConfig& cfg) {
  const Json& d = cfg.doc;
  if (!d.contains("system")) throw ValidationError("rates: missing 'system'");
  if (!d.contains("observable")) throw ValidationError("rates: missing 'observable'");
  const System sys = make_system(d["system"], cfg.seed);
  const Observable f = make_observable(d["observable"], sys);
  std::vector<std::int64_t> ns;
  if (d.contains("n_list")) {
    for (const Json& e : d["n_list"]) {
      if (!e.is_number_integer()) throw ValidationError("rates: n_list entries must be integers");
      ns.push_back(e.get<std::int64_t>());
    }
  } else {
    ns.push_back(want_int(d, "n", "rates"));
  }
  if (ns.empty()) throw ValidationError("rates: empty n_list");
  const double r = d.value("r", 2.0);

  KindOutput out;
  CsvBuilder csv;
  csv.row("check", "n", "lhs", "rhs", "holds", "transfer_dev");
  Json rows = Json::array();
  for (std::int64_t n : ns) {
    const RateUnderResult ru = rate_under_transfer(sys, f, n);
    const RateCheck rc = rate_over_check(sys, f, Observable(ru.H), r, n);
    csv.row("rate", n, rc.lhs, rc.rhs, rc.holds, ru.max_dev);
    Json row;
    row["n"] = n;
    row["lhs"] = rc.lhs;
    row["rhs"] = rc.rhs;
    row["holds"] = rc.holds;
    row["transfer_dev"] = ru.max_dev;
    rows.push_back(std::move(row));
  }
  out.json["r"] = r;
  out.json["rows"] = std::move(rows);
  if (d.contains("harmonic_to")) {
    const std::int64_t N = d["harmonic_to"].get<std::int64_t>();
    const RateCheck hc = harmonic_divergence_check(sys, f, N);
    Json h;
    h["N"] = N;
    h["lhs"] = hc.lhs;
    h["rhs"] = hc.rhs;
    h["holds"] = hc.holds;
    out.json["harmonic"] = std::move(h);
    csv.row("harmonic", N, hc.lhs, hc.rhs, hc.holds, 0.0);
  }
  out.csv = std::move(csv.text);
  return out;
}

}  // namespace detail

inline RunManifest run(const ExperimentConfig& cfg, int threads = 1) {
  const auto diags = validate_config(cfg);
  if (!diags.empty()) {
    std::string msg = "config invalid";
    for (const std::string& s : diags) msg += "; " + s;
    throw ValidationError(msg);
  }
  if (threads < 1) throw ValidationError("threads must be >= 1");

  const auto t0 = std::chrono::steady_clock::now();
  detail::KindOutput out;
  if (cfg.kind == "cone-check") out = detail::run_cone_check(cfg);
  else if (cfg.kind == "scan") out = detail::run_scan(cfg, threads);
  else if (cfg.kind == "iid-lab") out = detail::run_iid_lab(cfg, threads);
  else if (cfg.kind == "coboundary") out = detail::run_coboundary(cfg, threads);
  else if (cfg.kind == "badfun") out = detail::run_badfun(cfg, threads);
  else if (cfg.kind == "cover") out = detail::run_cover(cfg);
  else if (cfg.kind == "rates") out = detail::run_rates(cfg);
  else throw ValidationError("unknown kind '" + cfg.kind + "'");

  out.json["kind"] = cfg.kind;
  out.json["seed"] = cfg.seed;
  const std::string json_text = out.json.dump(2) + "\n";

  RunManifest man;
  man.kind = cfg.kind;
  man.config_digest = hex64(cfg.digest());
  man.version = kVersion;

  const std::string csv_path = cfg.out_prefix + ".csv";
  const std::string json_path = cfg.out_prefix + ".json";
  detail::write_file_atomic(csv_path, out.csv);
  detail::write_file_atomic(json_path, json_text);
  man.outputs.emplace_back(csv_path, hex64(fnv64(out.csv)));
  man.outputs.emplace_back(json_path, hex64(fnv64(json_text)));

  const auto t1 = std::chrono::steady_clock::now();
  man.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  detail::write_file_atomic(cfg.out_prefix + ".manifest.json", man.to_json().dump(2) + "\n");
  return man;
}

}  // namespace ergolab
