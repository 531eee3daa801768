// ergolab command line: one subcommand per experiment kind, all driven by a
// JSON config. --seed and --out override the config fields; --validate stops
// after diagnostics. Exit codes: 0 ok, 2 validation, 3 budget, 4 io.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ergolab/ergolab.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_prefix;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  bool validate_only = false;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "JSON config file")->required();
  sub->add_option("--out", o.out_prefix, "output path prefix (overrides config)");
  sub->add_option("--seed", o.seed, "master seed (overrides config)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--validate", o.validate_only, "only validate the config and exit");
}

void emit_error(const char* type, const std::string& msg) {
  ergolab::Json rec;
  rec["error"]["type"] = type;
  rec["error"]["message"] = msg;
  std::cerr << rec.dump() << "\n";
}

int run_kind(const std::string& kind, const CommonOpts& o) {
  ergolab::ExperimentConfig cfg = ergolab::ExperimentConfig::from_file(o.config_path);

  // fold overrides into the document so the digest names the run actually done
  if (o.seed_set) cfg.doc["seed"] = o.seed;
  if (!o.out_prefix.empty()) cfg.doc["out"] = o.out_prefix;
  if (!cfg.doc.contains("kind")) cfg.doc["kind"] = kind;
  cfg = ergolab::ExperimentConfig::from_json(std::move(cfg.doc));

  if (cfg.kind != kind)
    throw ergolab::ValidationError("config kind '" + cfg.kind +
                                   "' does not match subcommand '" + kind + "'");

  const auto diags = ergolab::validate_config(cfg);
  if (o.validate_only) {
    ergolab::Json rep;
    rep["valid"] = diags.empty();
    rep["diagnostics"] = diags;
    std::cout << rep.dump(2) << "\n";
    return diags.empty() ? 0 : 2;
  }
  if (!diags.empty()) {
    std::string msg = "config invalid";
    for (const auto& s : diags) msg += "; " + s;
    throw ergolab::ValidationError(msg);
  }

  const ergolab::RunManifest man = ergolab::run(cfg, o.threads);
  std::cout << man.to_json().dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moving-average laboratory"};
  app.require_subcommand(1);

  const char* kinds[] = {"cone-check", "scan", "iid-lab", "coboundary",
                         "badfun",     "cover", "rates"};
  const char* blurbs[] = {
      "window cross-section profile and cone verdict",
      "exceedance partial sums along a scheme on a dynamical system",
      "iid moving-average experiments: scan, disjoint blocks, tail bounds",
      "coboundary decomposition tail chain on a shift system",
      "adversarial function/scheme pipeline on a cycle",
      "greedy shift cover of a cyclic set",
      "transfer-function rate checks and harmonic lower bound",
  };

  CommonOpts opts[7];
  for (int i = 0; i < 7; ++i) add_common(app.add_subcommand(kinds[i], blurbs[i]), opts[i]);

  CLI11_PARSE(app, argc, argv);

  int which = -1;
  for (int i = 0; i < 7; ++i) {
    CLI::App* sub = app.get_subcommand(kinds[i]);
    if (sub->parsed()) {
      which = i;
      opts[i].seed_set = sub->count("--seed") > 0;
    }
  }
  if (which < 0) {
    emit_error("validation", "no subcommand given");
    return 2;
  }

  try {
    return run_kind(kinds[which], opts[which]);
  } catch (const ergolab::BudgetError& e) {
    emit_error("budget", e.what());
    return 3;
  } catch (const ergolab::IoError& e) {
    emit_error("io", e.what());
    return 4;
  } catch (const ergolab::ValidationError& e) {
    emit_error("validation", e.what());
    return 2;
  } catch (const ergolab::Error& e) {
    emit_error("internal", e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
}
