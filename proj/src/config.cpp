#include "caprob/config.h"

#include "caprob/error.h"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace caprob {

using json = nlohmann::json;

namespace {

// ------------------------------------------------------------ field tables

template <class Opt>
struct Field {
  ParamSpec spec;
  std::function<json(const Opt&)> get;
  std::function<void(Opt&, const json&)> set;
};

// Scalar or list member whose C++ type already maps onto the JSON type.
template <class Opt, class F>
Field<Opt> direct(std::string key, ParamType type, std::string help, F ref) {
  return {{std::move(key), type, std::move(help)},
          [ref](const Opt& o) { return json(ref(o)); },
          [ref](Opt& o, const json& j) {
            using T = std::decay_t<decltype(ref(o))>;
            ref(o) = j.template get<T>();
          }};
}

// Integer-valued list stored as doubles (grid axis values).
template <class Opt, class F>
Field<Opt> int_axis(std::string key, std::string help, F ref) {
  return {{std::move(key), ParamType::IntList, std::move(help)},
          [ref](const Opt& o) {
            json a = json::array();
            for (double v : ref(o)) a.push_back(static_cast<std::int64_t>(v));
            return a;
          },
          [ref](Opt& o, const json& j) {
            std::vector<double> v;
            for (const auto& e : j) v.push_back(static_cast<double>(e.get<std::int64_t>()));
            ref(o) = v;
          }};
}

template <class Opt, class F>
Field<Opt> estimator_list(std::string key, std::string help, F ref) {
  return {{std::move(key), ParamType::StringList, std::move(help)},
          [ref](const Opt& o) {
            json a = json::array();
            for (auto e : ref(o)) a.push_back(to_string(e));
            return a;
          },
          [ref](Opt& o, const json& j) {
            std::vector<EstimatorId> v;
            for (const auto& e : j) v.push_back(estimator_from_string(e.get<std::string>()));
            ref(o) = v;
          }};
}

std::string coupling_name(Coupling c) { return c == Coupling::Matched ? "matched" : "independent"; }

Coupling coupling_from(const std::string& s) {
  if (s == "matched") return Coupling::Matched;
  if (s == "independent") return Coupling::Independent;
  throw Error(ErrorKind::InvalidArgument, "coupling must be 'matched' or 'independent', got '" + s + "'");
}

template <class Opt, class F>
Field<Opt> coupling_field(F ref) {
  return {{"coupling", ParamType::String, "W_pi relative to W*: matched | independent"},
          [ref](const Opt& o) { return json(coupling_name(ref(o))); },
          [ref](Opt& o, const json& j) { ref(o) = coupling_from(j.get<std::string>()); }};
}

template <class Opt>
void add_critic_fields(std::vector<Field<Opt>>& f) {
  f.push_back(direct<Opt>("hidden_width", ParamType::Int, "critic hidden width",
                          [](auto& o) -> auto& { return o.critic.hidden_width; }));
  f.push_back(direct<Opt>("depth", ParamType::Int, "critic hidden layers",
                          [](auto& o) -> auto& { return o.critic.depth; }));
  f.push_back(direct<Opt>("learning_rate", ParamType::Double, "Adam learning rate",
                          [](auto& o) -> auto& { return o.critic.learning_rate; }));
  f.push_back(direct<Opt>("ema_decay", ParamType::Double, "MINE moving-average decay",
                          [](auto& o) -> auto& { return o.critic.ema_decay; }));
  f.push_back(direct<Opt>("steps", ParamType::Int, "critic optimizer steps",
                          [](auto& o) -> auto& { return o.critic.epochs; }));
  f.push_back(direct<Opt>("batch_size", ParamType::Int, "critic mini-batch size",
                          [](auto& o) -> auto& { return o.critic.batch_size; }));
  f.push_back(direct<Opt>("embedding_dim", ParamType::Int, "InfoNCE embedding width",
                          [](auto& o) -> auto& { return o.critic.embedding_dim; }));
}

std::vector<double>& axis_values(SweepGrid& g, const std::string& name) {
  for (auto& a : g.axes) {
    if (a.name == name) return a.values;
  }
  g.axes.push_back({name, {}});
  return g.axes.back().values;
}

const std::vector<double>& axis_values(const SweepGrid& g, const std::string& name) {
  for (const auto& a : g.axes) {
    if (a.name == name) return a.values;
  }
  throw Error(ErrorKind::InvalidArgument, "grid has no axis '" + name + "'");
}

const std::vector<Field<BoundSweepOptions>>& verify_fields() {
  using O = BoundSweepOptions;
  static const std::vector<Field<O>> f = [] {
    std::vector<Field<O>> v;
    v.push_back(int_axis<O>("dx", "input dimensions", [](auto& o) -> auto& { return axis_values(o.grid, "dx"); }));
    v.push_back(int_axis<O>("da", "action dimensions", [](auto& o) -> auto& { return axis_values(o.grid, "da"); }));
    v.push_back(direct<O>("sigma_pi", ParamType::DoubleList, "policy noise scales",
                          [](auto& o) -> auto& { return axis_values(o.grid, "sigma_pi"); }));
    v.push_back(direct<O>("epsilon", ParamType::DoubleList, "perturbation scales",
                          [](auto& o) -> auto& { return axis_values(o.grid, "epsilon"); }));
    v.push_back(direct<O>("replicates", ParamType::IntList, "replicate labels per cell",
                          [](auto& o) -> auto& { return o.grid.seeds; }));
    v.push_back(direct<O>("n", ParamType::Int, "samples per cell", [](auto& o) -> auto& { return o.grid.samples_n; }));
    v.push_back(estimator_list<O>("estimators", "histogram_mm | ksg | mine | infonce",
                                  [](auto& o) -> auto& { return o.grid.estimators; }));
    v.push_back(direct<O>("sigma_star", ParamType::Double, "task noise scale", [](auto& o) -> auto& { return o.sigma_star; }));
    v.push_back(coupling_field<O>([](auto& o) -> auto& { return o.coupling; }));
    v.push_back(direct<O>("bins", ParamType::Int, "histogram bins per dimension",
                          [](auto& o) -> auto& { return o.hist.bins_k; }));
    v.push_back(direct<O>("ksg_k", ParamType::Int, "KSG neighbour count", [](auto& o) -> auto& { return o.ksg_k; }));
    v.push_back(direct<O>("infonce_k", ParamType::Int, "InfoNCE batch size K", [](auto& o) -> auto& { return o.infonce_k; }));
    v.push_back(direct<O>("holm_alpha", ParamType::Double, "family-wise level for the Holm step",
                          [](auto& o) -> auto& { return o.alpha; }));
    add_critic_fields(v);
    return v;
  }();
  return f;
}

const std::vector<Field<AchievabilityOptions>>& achievability_fields() {
  using O = AchievabilityOptions;
  static const std::vector<Field<O>> f = [] {
    std::vector<Field<O>> v;
    v.push_back(int_axis<O>("dx", "input dimensions", [](auto& o) -> auto& { return o.dx; }));
    v.push_back(int_axis<O>("da", "action dimensions", [](auto& o) -> auto& { return o.da; }));
    v.push_back(direct<O>("epsilon", ParamType::DoubleList, "perturbation scales", [](auto& o) -> auto& { return o.epsilon; }));
    v.push_back(direct<O>("alpha", ParamType::DoubleList, "ridge gains", [](auto& o) -> auto& { return o.alpha; }));
    v.push_back(direct<O>("sigma_pi", ParamType::DoubleList, "policy dither scales",
                          [](auto& o) -> auto& { return o.sigma_pi; }));
    v.push_back(direct<O>("sigma_star", ParamType::Double, "task noise scale", [](auto& o) -> auto& { return o.sigma_star; }));
    v.push_back(direct<O>("n", ParamType::Int, "samples per cell", [](auto& o) -> auto& { return o.n; }));
    v.push_back(direct<O>("bins", ParamType::Int, "quantisation bins per action dimension",
                          [](auto& o) -> auto& { return o.bins; }));
    v.push_back({{"attack", ParamType::String, "oblivious | adaptive_sign"},
                 [](const O& o) { return json(o.attack.kind == AttackKind::AdaptiveSign ? "adaptive_sign" : "oblivious"); },
                 [](O& o, const json& j) {
                   const auto s = j.get<std::string>();
                   if (s == "oblivious") o.attack.kind = AttackKind::ObliviousGaussian;
                   else if (s == "adaptive_sign") o.attack.kind = AttackKind::AdaptiveSign;
                   else throw Error(ErrorKind::InvalidArgument, "attack must be 'oblivious' or 'adaptive_sign', got '" + s + "'");
                 }});
    v.push_back(direct<O>("attack_steps", ParamType::Int, "adaptive attack sign steps",
                          [](auto& o) -> auto& { return o.attack.steps; }));
    v.push_back(direct<O>("replicates", ParamType::IntList, "replicate labels per cell",
                          [](auto& o) -> auto& { return o.seeds; }));
    return v;
  }();
  return f;
}

const std::vector<Field<LeakOptions>>& leak_fields() {
  using O = LeakOptions;
  static const std::vector<Field<O>> f = [] {
    std::vector<Field<O>> v;
    v.push_back(direct<O>("lambda", ParamType::DoubleList, "leak ratios", [](auto& o) -> auto& { return o.lambda; }));
    v.push_back(direct<O>("epsilon", ParamType::DoubleList, "perturbation scales", [](auto& o) -> auto& { return o.epsilon; }));
    v.push_back(direct<O>("dx", ParamType::Int, "input dimension", [](auto& o) -> auto& { return o.dx; }));
    v.push_back(direct<O>("da", ParamType::Int, "action dimension", [](auto& o) -> auto& { return o.da; }));
    v.push_back(direct<O>("sigma_star", ParamType::Double, "task noise scale", [](auto& o) -> auto& { return o.sigma_star; }));
    v.push_back(direct<O>("sigma_pi", ParamType::Double, "policy noise scale", [](auto& o) -> auto& { return o.sigma_pi; }));
    v.push_back(coupling_field<O>([](auto& o) -> auto& { return o.coupling; }));
    return v;
  }();
  return f;
}

const std::vector<Field<DpiOptions>>& dpi_fields() {
  using O = DpiOptions;
  static const std::vector<Field<O>> f = [] {
    std::vector<Field<O>> v;
    v.push_back(int_axis<O>("dims", "chain dimensions", [](auto& o) -> auto& { return o.dims; }));
    v.push_back(direct<O>("sigma_xy", ParamType::DoubleList, "X -> Y noise scales", [](auto& o) -> auto& { return o.sigma_xy; }));
    v.push_back(direct<O>("sigma_yz", ParamType::DoubleList, "Y -> Z noise scales", [](auto& o) -> auto& { return o.sigma_yz; }));
    v.push_back(direct<O>("replicates", ParamType::IntList, "replicate labels per cell",
                          [](auto& o) -> auto& { return o.seeds; }));
    v.push_back(direct<O>("n", ParamType::Int, "samples per cell", [](auto& o) -> auto& { return o.n; }));
    v.push_back({{"estimator", ParamType::String, "histogram_mm | ksg"},
                 [](const O& o) { return json(to_string(o.estimator)); },
                 [](O& o, const json& j) {
                   o.estimator = estimator_from_string(j.get<std::string>());
                   if (o.estimator != EstimatorId::HistogramMM && o.estimator != EstimatorId::Ksg) {
                     throw Error(ErrorKind::InvalidArgument, "dpi-check supports histogram_mm and ksg");
                   }
                 }});
    v.push_back(direct<O>("bins", ParamType::Int, "histogram bins per dimension", [](auto& o) -> auto& { return o.hist.bins_k; }));
    v.push_back(direct<O>("ksg_k", ParamType::Int, "KSG neighbour count", [](auto& o) -> auto& { return o.ksg_k; }));
    v.push_back(direct<O>("dpi_tolerance", ParamType::Double, "allowed I(X;Z) - I(X;Y) in nats",
                          [](auto& o) -> auto& { return o.tolerance; }));
    v.push_back(direct<O>("broken", ParamType::Bool, "let Z tap X directly (negative control)",
                          [](auto& o) -> auto& { return o.broken; }));
    return v;
  }();
  return f;
}

const std::vector<Field<AuditOptions>>& audit_fields() {
  using O = AuditOptions;
  static const std::vector<Field<O>> f = [] {
    std::vector<Field<O>> v;
    v.push_back({{"kind", ParamType::String, "hyperparam | sample_complexity | distribution | high_d"},
                 [](const O& o) { return json(to_string(o.kind)); },
                 [](O& o, const json& j) { o.kind = audit_kind_from_string(j.get<std::string>()); }});
    v.push_back(direct<O>("replicates", ParamType::IntList, "replicate labels per cell",
                          [](auto& o) -> auto& { return o.seeds; }));
    v.push_back(direct<O>("n", ParamType::Int, "samples per cell", [](auto& o) -> auto& { return o.n; }));
    v.push_back(int_axis<O>("sample_sizes", "sample-complexity sizes", [](auto& o) -> auto& { return o.sample_sizes; }));
    v.push_back(int_axis<O>("high_d_dims", "high-d audit dimensions", [](auto& o) -> auto& { return o.high_d_dims; }));
    v.push_back(direct<O>("high_d_epsilon", ParamType::DoubleList, "high-d audit perturbation scales",
                          [](auto& o) -> auto& { return o.high_d_epsilon; }));
    v.push_back(direct<O>("noise_sigma", ParamType::Double, "distribution audit channel noise",
                          [](auto& o) -> auto& { return o.noise_sigma; }));
    v.push_back(estimator_list<O>("estimators", "estimators for the distribution and high-d audits",
                                  [](auto& o) -> auto& { return o.estimators; }));
    v.push_back(direct<O>("bins", ParamType::Int, "histogram bins per dimension", [](auto& o) -> auto& { return o.hist.bins_k; }));
    v.push_back(direct<O>("ksg_k", ParamType::Int, "KSG neighbour count", [](auto& o) -> auto& { return o.ksg_k; }));
    add_critic_fields(v);
    return v;
  }();
  return f;
}

const std::vector<Field<MultistepOptions>>& multistep_fields() {
  using O = MultistepOptions;
  static const std::vector<Field<O>> f = [] {
    std::vector<Field<O>> v;
    v.push_back(direct<O>("steps", ParamType::Int, "horizon T", [](auto& o) -> auto& { return o.steps; }));
    v.push_back(direct<O>("epsilon", ParamType::DoubleList, "one value (i.i.d.) or one per step",
                          [](auto& o) -> auto& { return o.epsilon; }));
    v.push_back(direct<O>("dx", ParamType::Int, "input dimension", [](auto& o) -> auto& { return o.dx; }));
    v.push_back(direct<O>("da", ParamType::Int, "action dimension", [](auto& o) -> auto& { return o.da; }));
    v.push_back(direct<O>("sigma_star", ParamType::Double, "task noise scale", [](auto& o) -> auto& { return o.sigma_star; }));
    v.push_back(direct<O>("sigma_pi", ParamType::Double, "policy noise scale", [](auto& o) -> auto& { return o.sigma_pi; }));
    v.push_back(coupling_field<O>([](auto& o) -> auto& { return o.coupling; }));
    v.push_back(direct<O>("rel_tolerance", ParamType::Double, "allowed relative gap to T * S_1",
                          [](auto& o) -> auto& { return o.rel_tolerance; }));
    return v;
  }();
  return f;
}

const std::vector<Field<EncoderCeilingOptions>>& encoder_fields() {
  using O = EncoderCeilingOptions;
  static const std::vector<Field<O>> f = [] {
    std::vector<Field<O>> v;
    v.push_back(direct<O>("clean", ParamType::String, "clean feature dump (CSV)", [](auto& o) -> auto& { return o.clean; }));
    v.push_back(direct<O>("pert", ParamType::String, "perturbed feature dump (CSV)", [](auto& o) -> auto& { return o.pert; }));
    v.push_back(direct<O>("baseline_clean", ParamType::String, "optional reference encoder, clean",
                          [](auto& o) -> auto& { return o.baseline_clean; }));
    v.push_back(direct<O>("baseline_pert", ParamType::String, "optional reference encoder, perturbed",
                          [](auto& o) -> auto& { return o.baseline_pert; }));
    return v;
  }();
  return f;
}

const std::vector<Field<ShiftSignatureOptions>>& shift_fields() {
  using O = ShiftSignatureOptions;
  static const std::vector<Field<O>> f = [] {
    std::vector<Field<O>> v;
    v.push_back(direct<O>("defended_clean", ParamType::String, "defended encoder, clean dump",
                          [](auto& o) -> auto& { return o.defended_clean; }));
    v.push_back(direct<O>("defended_pert", ParamType::String, "defended encoder, perturbed dump",
                          [](auto& o) -> auto& { return o.defended_pert; }));
    v.push_back(direct<O>("vanilla_clean", ParamType::String, "vanilla encoder, clean dump",
                          [](auto& o) -> auto& { return o.vanilla_clean; }));
    v.push_back(direct<O>("vanilla_pert", ParamType::String, "vanilla encoder, perturbed dump",
                          [](auto& o) -> auto& { return o.vanilla_pert; }));
    v.push_back(direct<O>("rel_threshold", ParamType::Double, "relative shift separating the classes",
                          [](auto& o) -> auto& { return o.rel_threshold; }));
    return v;
  }();
  return f;
}

template <class Opt>
std::vector<ParamSpec> specs_of(const std::vector<Field<Opt>>& fields) {
  std::vector<ParamSpec> out;
  for (const auto& f : fields) out.push_back(f.spec);
  return out;
}

template <class Opt>
json defaults_of(const std::vector<Field<Opt>>& fields, const Opt& o) {
  json j = json::object();
  for (const auto& f : fields) j[f.spec.key] = f.get(o);
  return j;
}

template <class Opt>
Opt build(const std::vector<Field<Opt>>& fields, Opt o, const json& params) {
  for (const auto& f : fields) f.set(o, params.at(f.spec.key));
  return o;
}

void check_preset(const std::string& preset) {
  if (preset != "desk" && preset != "full") {
    throw Error(ErrorKind::InvalidArgument, "unknown preset '" + preset + "' (desk | full)");
  }
}

void require_command(const RunConfig& c, const std::string& name) {
  if (c.command != name) {
    throw Error(ErrorKind::InvalidArgument, "config is for '" + c.command + "', not '" + name + "'");
  }
}

std::vector<ParamSpec> specs_for(const std::string& command) {
  if (command == "verify") return specs_of(verify_fields());
  if (command == "achievability") return specs_of(achievability_fields());
  if (command == "leak") return specs_of(leak_fields());
  if (command == "dpi-check") return specs_of(dpi_fields());
  if (command == "audit-estimators") return specs_of(audit_fields());
  if (command == "multistep") return specs_of(multistep_fields());
  if (command == "encoder-ceiling") return specs_of(encoder_fields());
  if (command == "shift-signature") return specs_of(shift_fields());
  throw Error(ErrorKind::InvalidArgument, "unknown command '" + command + "'");
}

// `kind` only matters for audit-estimators, whose defaults depend on it.
json defaults_for(const std::string& command, const std::string& preset, const std::string& kind) {
  check_preset(preset);
  if (command == "verify") return defaults_of(verify_fields(), BoundSweepOptions::preset(preset));
  if (command == "achievability") return defaults_of(achievability_fields(), AchievabilityOptions::preset(preset));
  if (command == "leak") return defaults_of(leak_fields(), LeakOptions{});
  if (command == "dpi-check") return defaults_of(dpi_fields(), DpiOptions{});
  if (command == "audit-estimators") {
    return defaults_of(audit_fields(), AuditOptions::preset(preset, audit_kind_from_string(kind)));
  }
  if (command == "multistep") return defaults_of(multistep_fields(), MultistepOptions{});
  if (command == "encoder-ceiling") return defaults_of(encoder_fields(), EncoderCeilingOptions{});
  if (command == "shift-signature") return defaults_of(shift_fields(), ShiftSignatureOptions{});
  throw Error(ErrorKind::InvalidArgument, "unknown command '" + command + "'");
}

// ---------------------------------------------------------------- typing

bool is_int(const json& j) { return j.is_number_integer(); }

bool matches(const json& j, ParamType t) {
  auto all = [&](auto pred) {
    if (!j.is_array()) return false;
    return std::all_of(j.begin(), j.end(), pred);
  };
  switch (t) {
    case ParamType::Int: return is_int(j);
    case ParamType::Double: return j.is_number();
    case ParamType::String: return j.is_string();
    case ParamType::Bool: return j.is_boolean();
    case ParamType::IntList: return all([](const json& e) { return is_int(e); });
    case ParamType::DoubleList: return all([](const json& e) { return e.is_number(); });
    case ParamType::StringList: return all([](const json& e) { return e.is_string(); });
  }
  return false;
}

// Doubles are stored as floats so 1 and 1.0 compare and echo the same way.
json normalized(const json& j, ParamType t) {
  if (t == ParamType::Double) return json(j.get<double>());
  if (t == ParamType::DoubleList) {
    json a = json::array();
    for (const auto& e : j) a.push_back(e.get<double>());
    return a;
  }
  return j;
}

json typed(const std::string& key, const json& j, ParamType t) {
  if (!matches(j, t)) {
    throw Error(ErrorKind::TypeMismatch,
                "key '" + key + "' expects " + to_string(t) + ", got " + j.dump());
  }
  return normalized(j, t);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

json parse_scalar(const std::string& key, const std::string& raw, ParamType t) {
  const std::string s = trim(raw);
  auto mismatch = [&] {
    return Error(ErrorKind::TypeMismatch, "flag --" + key + " expects " + to_string(t) + ", got '" + raw + "'");
  };
  switch (t) {
    case ParamType::Int:
    case ParamType::IntList: {
      if (s.empty()) throw mismatch();
      errno = 0;
      char* end = nullptr;
      const long long v = std::strtoll(s.c_str(), &end, 10);
      if (errno != 0 || *end != '\0') throw mismatch();
      return json(static_cast<std::int64_t>(v));
    }
    case ParamType::Double:
    case ParamType::DoubleList: {
      if (s.empty()) throw mismatch();
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (errno != 0 || *end != '\0') throw mismatch();
      return json(v);
    }
    case ParamType::Bool:
      if (s == "true" || s == "1") return json(true);
      if (s == "false" || s == "0") return json(false);
      throw mismatch();
    case ParamType::String:
    case ParamType::StringList:
      return json(s);
  }
  throw mismatch();
}

json parse_flag(const std::string& key, const std::string& raw, ParamType t) {
  const bool list = t == ParamType::IntList || t == ParamType::DoubleList || t == ParamType::StringList;
  if (!list) return parse_scalar(key, raw, t);
  json a = json::array();
  if (trim(raw).empty()) return a;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) a.push_back(parse_scalar(key, item, t));
  return a;
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  const std::size_t stop = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < stop; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string to_string(ParamType type) {
  switch (type) {
    case ParamType::Int: return "int";
    case ParamType::Double: return "number";
    case ParamType::String: return "string";
    case ParamType::Bool: return "bool";
    case ParamType::IntList: return "list of int";
    case ParamType::DoubleList: return "list of number";
    case ParamType::StringList: return "list of string";
  }
  return "unknown";
}

const std::vector<ParamSpec>& global_params() {
  static const std::vector<ParamSpec> g{
      {"preset", ParamType::String, "desk | full"},
      {"seed", ParamType::Int, "sweep seed"},
      {"jobs", ParamType::Int, "worker threads"},
      {"out", ParamType::String, "output root directory"},
      {"tolerance_nats", ParamType::Double, "slack below -tolerance counts as a violation"},
  };
  return g;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"verify",           "achievability", "leak",
                                              "dpi-check",        "audit-estimators",
                                              "multistep",        "encoder-ceiling",
                                              "shift-signature"};
  return names;
}

std::vector<ParamSpec> command_params(const std::string& command) { return specs_for(command); }

json command_defaults(const std::string& command, const std::string& preset) {
  return defaults_for(command, preset, to_string(AuditOptions{}.kind));
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& c : candidates) {
    const auto d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

json RunConfig::to_json() const {
  json j = params;
  j["command"] = command;
  j["preset"] = preset;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["out"] = out;
  j["tolerance_nats"] = tolerance_nats;
  return j;
}

bool RunConfig::operator==(const RunConfig& o) const {
  return command == o.command && preset == o.preset && seed == o.seed && jobs == o.jobs &&
         out == o.out && tolerance_nats == o.tolerance_nats && params == o.params;
}

RunConfig parse_config_text(const std::string& command, const std::string& text,
                            const FlagOverrides& overrides) {
  const auto specs = specs_for(command);
  std::map<std::string, ParamType> types;
  std::vector<std::string> valid;
  for (const auto& g : global_params()) {
    types[g.key] = g.type;
    valid.push_back(g.key);
  }
  for (const auto& s : specs) {
    types[s.key] = s.type;
    valid.push_back(s.key);
  }
  auto check_known = [&](const std::string& key) {
    if (!types.count(key)) {
      throw Error(ErrorKind::UnknownKey, "unknown key '" + key + "' for " + command +
                                             " (did you mean '" + nearest_key(key, valid) + "'?)");
    }
  };

  json file = json::object();
  if (!trim(text).empty()) {
    try {
      file = json::parse(text);
    } catch (const json::parse_error& e) {
      const auto [line, col] = line_col(text, e.byte);
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ", column " +
                                             std::to_string(col) + ": " + e.what());
    }
    if (!file.is_object()) throw Error(ErrorKind::TypeMismatch, "config root must be a JSON object");
  }

  // Layer file values, then flags; the result maps key -> typed value.
  std::map<std::string, json> given;
  for (const auto& [key, value] : file.items()) {
    if (key == "command") {
      if (!value.is_string() || value.get<std::string>() != command) {
        throw Error(ErrorKind::InvalidArgument, "config file is for command " + value.dump());
      }
      continue;
    }
    check_known(key);
    given[key] = typed(key, value, types.at(key));
  }
  for (const auto& [raw_key, raw] : overrides) {
    const auto key = normalize_key(raw_key);
    check_known(key);
    given[key] = normalized(parse_flag(key, raw, types.at(key)), types.at(key));
  }

  RunConfig c;
  c.command = command;
  if (given.count("preset")) c.preset = given["preset"].get<std::string>();
  check_preset(c.preset);
  if (given.count("seed")) {
    const auto s = given["seed"].get<std::int64_t>();
    if (s < 0) throw Error(ErrorKind::InvalidArgument, "seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (given.count("jobs")) c.jobs = given["jobs"].get<int>();
  if (c.jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be >= 1");
  if (given.count("out")) c.out = given["out"].get<std::string>();
  if (given.count("tolerance_nats")) c.tolerance_nats = given["tolerance_nats"].get<double>();
  if (!(c.tolerance_nats >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance_nats must be >= 0");

  std::string kind = to_string(AuditOptions{}.kind);
  if (given.count("kind")) kind = given["kind"].get<std::string>();
  c.params = defaults_for(command, c.preset, kind);
  for (const auto& [key, value] : given) {
    if (c.params.contains(key)) c.params[key] = value;
  }
  return c;
}

RunConfig parse_config(const std::string& command, const std::string& path,
                       const FlagOverrides& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config_text(command, text, overrides);
}

// ------------------------------------------------------------ typed views

BoundSweepOptions bound_sweep_options(const RunConfig& c) {
  require_command(c, "verify");
  auto o = build(verify_fields(), BoundSweepOptions::preset(c.preset), c.params);
  o.grid.sweep_seed = c.seed;
  o.tolerance = c.tolerance_nats;
  o.jobs = c.jobs;
  for (const char* axis : {"dx", "da", "sigma_pi", "epsilon"}) {
    if (axis_values(o.grid, axis).empty()) {
      throw Error(ErrorKind::InvalidArgument, std::string("axis '") + axis + "' is empty");
    }
  }
  o.critic.validate();
  return o;
}

AchievabilityOptions achievability_options(const RunConfig& c) {
  require_command(c, "achievability");
  auto o = build(achievability_fields(), AchievabilityOptions::preset(c.preset), c.params);
  o.sweep_seed = c.seed;
  o.tolerance = c.tolerance_nats;
  o.jobs = c.jobs;
  return o;
}

LeakOptions leak_options(const RunConfig& c) {
  require_command(c, "leak");
  auto o = build(leak_fields(), LeakOptions{}, c.params);
  o.sweep_seed = c.seed;
  o.tolerance = c.tolerance_nats;
  return o;
}

DpiOptions dpi_options(const RunConfig& c) {
  require_command(c, "dpi-check");
  auto o = build(dpi_fields(), DpiOptions{}, c.params);
  o.sweep_seed = c.seed;
  o.jobs = c.jobs;
  return o;
}

AuditOptions audit_options(const RunConfig& c) {
  require_command(c, "audit-estimators");
  const auto kind = audit_kind_from_string(c.params.at("kind").get<std::string>());
  auto o = build(audit_fields(), AuditOptions::preset(c.preset, kind), c.params);
  o.sweep_seed = c.seed;
  o.jobs = c.jobs;
  o.critic.validate();
  return o;
}

MultistepOptions multistep_options(const RunConfig& c) {
  require_command(c, "multistep");
  auto o = build(multistep_fields(), MultistepOptions{}, c.params);
  o.sweep_seed = c.seed;
  return o;
}

EncoderCeilingOptions encoder_ceiling_options(const RunConfig& c) {
  require_command(c, "encoder-ceiling");
  auto o = build(encoder_fields(), EncoderCeilingOptions{}, c.params);
  if (o.clean.empty() || o.pert.empty()) {
    throw Error(ErrorKind::InvalidArgument, "encoder-ceiling needs --clean and --pert");
  }
  if (o.baseline_clean.empty() != o.baseline_pert.empty()) {
    throw Error(ErrorKind::InvalidArgument, "baseline needs both --baseline-clean and --baseline-pert");
  }
  return o;
}

ShiftSignatureOptions shift_signature_options(const RunConfig& c) {
  require_command(c, "shift-signature");
  auto o = build(shift_fields(), ShiftSignatureOptions{}, c.params);
  for (const auto* p : {&o.defended_clean, &o.defended_pert, &o.vanilla_clean, &o.vanilla_pert}) {
    if (p->empty()) throw Error(ErrorKind::InvalidArgument, "shift-signature needs all four dumps");
  }
  return o;
}

}  // namespace caprob
