#include "caprob/cli.h"

#include "caprob/config.h"
#include "caprob/error.h"
#include "caprob/report.h"

#include <CLI11.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <sstream>

namespace caprob {

namespace {

constexpr int kOk = 0;
constexpr int kViolations = 1;
constexpr int kUsage = 2;

struct Subcommand {
  CLI::App* app = nullptr;
  std::string config_path;
  bool show_config = false;
  // key -> raw flag text; unique_ptr keeps addresses stable for CLI11.
  std::map<std::string, std::unique_ptr<std::string>> raw;
  std::map<std::string, CLI::Option*> options;
};

void add_param_flag(Subcommand& sc, const ParamSpec& p) {
  std::string names = "--" + p.key;
  if (p.key.find('_') != std::string::npos) {
    std::string dashed = p.key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    names += ",--" + dashed;
  }
  auto& slot = sc.raw[p.key];
  slot = std::make_unique<std::string>();
  const bool list = p.type == ParamType::IntList || p.type == ParamType::DoubleList ||
                    p.type == ParamType::StringList;
  sc.options[p.key] = sc.app->add_option(names, *slot, p.help + " (" + to_string(p.type) +
                                                           (list ? ", comma-separated)" : ")"));
}

const std::map<std::string, std::string> kDescriptions{
    {"verify", "bound sweep over the Gaussian proxy, analytic and estimated slack"},
    {"achievability", "ridge-policy achievability ratio r per cell"},
    {"leak", "leak-policy stress test over lambda and epsilon"},
    {"dpi-check", "data-processing sanity check on linear-Gaussian chains"},
    {"audit-estimators", "estimator audits: hyperparam, sample_complexity, distribution, high_d"},
    {"multistep", "multi-step slack accumulation"},
    {"encoder-ceiling", "PCA channel ceiling from clean/perturbed feature dumps"},
    {"shift-signature", "classify a defense as input-side or llm-side from two encoder audits"},
};

SweepResult single_result(const std::string& name, std::map<std::string, double> summary) {
  SweepResult r;
  r.name = name;
  r.summary = std::move(summary);
  return r;
}

EncoderAudit audit_pair(const std::string& clean, const std::string& pert) {
  return encoder_ceiling(read_feature_dump(clean).values, read_feature_dump(pert).values);
}

int finish(const SweepResult& result, const RunConfig& config, std::ostream& out) {
  const auto dir = emit_results(result, config);
  for (const auto& [k, v] : result.summary) out << k << ": " << v << '\n';
  out << "violations: " << result.violations << '\n';
  out << "wrote " << dir.string() << '\n';
  return result.violations > 0 ? kViolations : kOk;
}

int dispatch(const RunConfig& c, std::ostream& out) {
  const auto& cmd = c.command;
  if (cmd == "verify") return finish(run_bound_sweep(bound_sweep_options(c)), c, out);
  if (cmd == "achievability") return finish(run_achievability_sweep(achievability_options(c)), c, out);
  if (cmd == "leak") return finish(run_leak_sweep(leak_options(c)), c, out);
  if (cmd == "dpi-check") return finish(run_dpi_check(dpi_options(c)), c, out);
  if (cmd == "audit-estimators") return finish(run_estimator_audit(audit_options(c)), c, out);
  if (cmd == "multistep") return finish(run_multistep(multistep_options(c)), c, out);
  if (cmd == "encoder-ceiling") {
    const auto o = encoder_ceiling_options(c);
    auto audit = audit_pair(o.clean, o.pert);
    std::map<std::string, double> s{{"feature_dim", static_cast<double>(audit.feature_dim)},
                                    {"n", static_cast<double>(audit.n)},
                                    {"sigma2_delta_phi", audit.sigma2_delta_phi},
                                    {"bound_nats", audit.bound}};
    if (!o.baseline_clean.empty()) {
      const auto base = audit_pair(o.baseline_clean, o.baseline_pert);
      audit.shift_vs_baseline = audit.bound - base.bound;
      s["baseline_bound_nats"] = base.bound;
      s["shift_vs_baseline"] = *audit.shift_vs_baseline;
    }
    return finish(single_result("encoder-ceiling", s), c, out);
  }
  if (cmd == "shift-signature") {
    const auto o = shift_signature_options(c);
    const auto defended = audit_pair(o.defended_clean, o.defended_pert);
    const auto vanilla = audit_pair(o.vanilla_clean, o.vanilla_pert);
    const auto sig = shift_signature(defended, vanilla, o.rel_threshold);
    const bool input_side = sig.classification == ShiftClass::InputSide;
    out << "classification: " << (input_side ? "input-side" : "llm-side") << '\n';
    return finish(single_result("shift-signature", {{"defended_bound_nats", defended.bound},
                                                    {"vanilla_bound_nats", vanilla.bound},
                                                    {"delta_nats", sig.delta},
                                                    {"input_side", input_side ? 1.0 : 0.0}}),
                  c, out);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown command '" + cmd + "'");
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Capability-robustness bound verification toolkit", "caprob"};
  app.require_subcommand(1);
  std::map<std::string, Subcommand> subs;
  for (const auto& name : command_names()) {
    auto& sc = subs[name];
    sc.app = app.add_subcommand(name, kDescriptions.at(name));
    sc.app->add_option("--config", sc.config_path, "JSON config file");
    sc.app->add_flag("--show-config", sc.show_config, "print the effective config and exit");
    for (const auto& g : global_params()) add_param_flag(sc, g);
    for (const auto& p : command_params(name)) add_param_flag(sc, p);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kUsage;
  }

  try {
    for (auto& [name, sc] : subs) {
      if (!sc.app->parsed()) continue;
      FlagOverrides overrides;
      for (const auto& [key, opt] : sc.options) {
        if (opt->count() > 0) overrides.emplace_back(key, *sc.raw.at(key));
      }
      const RunConfig config = parse_config(name, sc.config_path, overrides);
      if (sc.show_config) {
        out << config.to_json().dump(2) << '\n';
        return kOk;
      }
      return dispatch(config, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  err << app.help();
  return kUsage;
}

}  // namespace caprob
