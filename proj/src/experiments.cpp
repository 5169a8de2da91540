#include "rgheston/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#ifndef RGHESTON_VERSION
#define RGHESTON_VERSION "0.0.0"
#endif
#ifndef RGHESTON_GIT_REV
#define RGHESTON_GIT_REV "unknown"
#endif

namespace rgheston {

namespace {

using Settings = std::map<std::string, std::string>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  for (char c : value) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "': not a number: '" + value + "'");
  return v;
}

std::uint64_t to_count(const std::string& key, const std::string& value) {
  // Accepts plain integers and exact scientific forms such as 1e6.
  const double v = to_double(key, value);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e18) throw ConfigError("key '" + key + "': not a count: '" + value + "'");
  return static_cast<std::uint64_t>(v);
}

int to_int(const std::string& key, const std::string& value) {
  const std::uint64_t v = to_count(key, value);
  if (v > 1'000'000) throw ConfigError("key '" + key + "': value too large: '" + value + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("key '" + key + "': not a boolean: '" + value + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(to_double(key, item));
  return out;
}

const std::map<std::string, Settings>& preset_table() {
  static const Settings fig1_params{{"a", "0.2"}, {"b", "1"}, {"sigma", "0.5"}, {"rho", "-0.7"}, {"r", "0"},
                                    {"y0", "0.2"}, {"spot", "100"}, {"T", "1"}};
  static const Settings fig2_params{{"a", "0.1"}, {"b", "1"}, {"sigma", "1"}, {"rho", "-0.9"}, {"r", "0"},
                                    {"y0", "0.1"}, {"spot", "100"}, {"T", "1"}};
  auto with = [](Settings base, const Settings& extra) {
    for (const auto& [k, v] : extra) base[k] = v;
    return base;
  };
  static const std::map<std::string, Settings> table{
      {"fig1", with(fig1_params, {{"label", "fig1"}, {"model", "heston"}, {"mode", "convergence"},
                                  {"scheme", "NV"}, {"coupling", "Standard"}, {"order", "1,2"},
                                  {"n", "2,3,4,6,8"}, {"payoff", "european_put"}, {"strike", "105"},
                                  {"eps", "2e-3"}, {"reference", "fourier"}})},
      {"fig2", with(fig2_params, {{"label", "fig2"}, {"model", "heston"}, {"mode", "convergence"},
                                  {"scheme", "Ex"}, {"coupling", "Standard"}, {"order", "1,2"},
                                  {"n", "2,3,4,6,8"}, {"payoff", "european_put"}, {"strike", "105"},
                                  {"eps", "2e-3"}, {"reference", "fourier"}})},
      {"fig3", with(fig1_params, {{"label", "fig3"}, {"model", "heston"}, {"mode", "selfdiff"}, {"b", "2"},
                                  {"scheme", "NV"}, {"coupling", "Standard"}, {"order", "1,2"},
                                  {"n", "2,3,4,6,8,12,16"}, {"payoff", "asian_put"}, {"strike", "100"},
                                  {"eps", "2e-3"}, {"reference", "none"}})},
      {"fig4", with(fig2_params, {{"label", "fig4"}, {"model", "heston"}, {"mode", "selfdiff"},
                                  {"scheme", "Ex"}, {"coupling", "Standard"}, {"order", "1,2"},
                                  {"n", "2,3,4,6,8,12,16"}, {"payoff", "asian_put"}, {"strike", "100"},
                                  {"eps", "2e-3"}, {"reference", "none"}})},
      {"fig7", {{"label", "fig7"}, {"model", "multifactor"}, {"mode", "convergence"}, {"kernel", "bl2_h01_d3"},
                {"a", "0.3"}, {"b", "1"}, {"sigma", "0.1"}, {"rho", "-0.7"}, {"r", "0"}, {"y0", "0.1"},
                {"spot", "100"}, {"strike", "105"}, {"T", "1"}, {"scheme", "NV"}, {"coupling", "Standard"},
                {"order", "1,2"}, {"n", "2,3,4,6,8"}, {"payoff", "european_put"}, {"eps", "2e-3"},
                {"reference", "mc"}, {"reference_n", "16"}, {"reference_eps", "1e-3"}}},
      {"table1", with(fig1_params, {{"label", "table1"}, {"model", "heston"}, {"mode", "variance"},
                                    {"scheme", "NV,NVBernoulli,Ex"}, {"coupling", "Standard,VolAveraged,OneStep"},
                                    {"order", "2"}, {"n", "2,4,8,16,32"}, {"payoff", "european_put"},
                                    {"strike", "105"}, {"eps", "2e-3"}, {"samples", "1e6"}, {"reference", "none"}})},
      {"table2", with(fig2_params, {{"label", "table2"}, {"model", "heston"}, {"mode", "variance"},
                                    {"scheme", "Ex,ExBernoulli"}, {"coupling", "Standard,VolAveraged,OneStep"},
                                    {"order", "2"}, {"n", "2,4,8,16,32"}, {"payoff", "european_put"},
                                    {"strike", "105"}, {"eps", "2e-3"}, {"samples", "1e6"}, {"reference", "none"}})},
      {"timing", with(fig1_params, {{"label", "timing"}, {"model", "heston"}, {"mode", "timing"},
                                    {"scheme", "NV"}, {"coupling", "OneStep"}, {"order", "1,2"},
                                    {"n", "2,3,4,5"}, {"payoff", "european_put"}, {"strike", "105"},
                                    {"eps", "1e-3"}, {"reference", "fourier"}})},
  };
  return table;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "preset") return;
  if (key == "label") c.label = value;
  else if (key == "model") {
    if (value == "heston" || value == "plain") c.model = ModelKind::heston;
    else if (value == "multifactor") c.model = ModelKind::multifactor;
    else if (value == "general" || value == "generalized") c.model = ModelKind::general;
    else throw ConfigError("key 'model': unknown model '" + value + "'");
  } else if (key == "mode") {
    if (value == "convergence") c.mode = ExperimentMode::convergence;
    else if (value == "selfdiff") c.mode = ExperimentMode::selfdiff;
    else if (value == "variance") c.mode = ExperimentMode::variance;
    else if (value == "timing") c.mode = ExperimentMode::timing;
    else throw ConfigError("key 'mode': unknown mode '" + value + "'");
  } else if (key == "a") c.params.a = to_double(key, value);
  else if (key == "b") c.params.b = to_double(key, value);
  else if (key == "sigma") c.params.sigma = to_double(key, value);
  else if (key == "rho") c.params.rho = to_double(key, value);
  else if (key == "r") c.params.r = to_double(key, value);
  else if (key == "y0") c.y0 = to_double(key, value);
  else if (key == "spot") c.spot = to_double(key, value);
  else if (key == "strike") c.strike = to_double(key, value);
  else if (key == "T") c.T = to_double(key, value);
  else if (key == "n") {
    c.n_list.clear();
    for (const auto& item : split_list(value)) c.n_list.push_back(to_int(key, item));
  } else if (key == "scheme") {
    c.schemes.clear();
    for (const auto& item : split_list(value)) c.schemes.push_back(parse_scheme(item));
  } else if (key == "coupling") {
    c.couplings.clear();
    for (const auto& item : split_list(value)) c.couplings.push_back(parse_coupling(item));
  } else if (key == "order") {
    c.orders.clear();
    for (const auto& item : split_list(value)) c.orders.push_back(to_int(key, item));
  } else if (key == "payoff") c.payoff = parse_payoff(value);
  else if (key == "eps") c.eps = to_double(key, value);
  else if (key == "seed") c.seed = to_count(key, value);
  else if (key == "pilot") c.pilot = to_count(key, value);
  else if (key == "workers") c.workers = static_cast<unsigned>(to_int(key, value));
  else if (key == "samples") c.samples = to_count(key, value);
  else if (key == "kernel") {
    if (value == "bl2_h01_d3" || value == "bl2") c.kernel = ExpKernel::bl2_h01_d3();
    else if (value == "trivial") c.kernel = ExpKernel::trivial();
    else throw ConfigError("key 'kernel': unknown kernel '" + value + "'");
  } else if (key == "kernel_rho") c.kernel.rho = to_doubles(key, value);
  else if (key == "kernel_gamma") c.kernel.gamma = to_doubles(key, value);
  else if (key == "extra_blocks") {
    c.extra_blocks.clear();
    std::string block;
    std::istringstream is(value);
    while (std::getline(is, block, ';')) {
      block = trim(block);
      if (block.empty()) continue;
      std::vector<double> f;
      std::string field;
      std::istringstream fs(block);
      while (std::getline(fs, field, ':')) f.push_back(to_double(key, trim(field)));
      if (f.size() != 5) throw ConfigError("key 'extra_blocks': expected a:b:sigma:rho:y0, got '" + block + "'");
      c.extra_blocks.push_back({f[0], f[1], f[2], f[3], f[4]});
    }
  } else if (key == "jump_law") {
    if (value == "none") c.jumps.law = JumpLaw::None;
    else if (value == "normal") c.jumps.law = JumpLaw::Normal;
    else if (value == "double_exponential") c.jumps.law = JumpLaw::DoubleExponential;
    else throw ConfigError("key 'jump_law': unknown law '" + value + "'");
  } else if (key == "jump_intensity") c.jumps.intensity = to_double(key, value);
  else if (key == "jump_mean") c.jumps.mean = to_double(key, value);
  else if (key == "jump_stdev") c.jumps.stdev = to_double(key, value);
  else if (key == "jump_p_up") c.jumps.p_up = to_double(key, value);
  else if (key == "jump_eta_up") c.jumps.eta_up = to_double(key, value);
  else if (key == "jump_eta_down") c.jumps.eta_down = to_double(key, value);
  else if (key == "jump_compensate") c.jumps.compensate = to_bool(key, value);
  else if (key == "rate_kind") {
    if (value == "constant") c.rate.kind = RateKind::Constant;
    else if (value == "cir") c.rate.kind = RateKind::Cir;
    else throw ConfigError("key 'rate_kind': unknown kind '" + value + "'");
  } else if (key == "rate_a") c.rate.a = to_double(key, value);
  else if (key == "rate_b") c.rate.b = to_double(key, value);
  else if (key == "rate_sigma") c.rate.sigma = to_double(key, value);
  else if (key == "reference") {
    if (value == "fourier") c.reference = ReferenceKind::fourier;
    else if (value == "mc") c.reference = ReferenceKind::mc;
    else if (value == "none") c.reference = ReferenceKind::none;
    else throw ConfigError("key 'reference': unknown reference '" + value + "'");
  } else if (key == "reference_n") c.reference_n = to_int(key, value);
  else if (key == "reference_eps") c.reference_eps = to_double(key, value);
  else if (key == "out") c.out = value;
  else if (key == "record_timing") c.record_timing = to_bool(key, value);
  else throw ConfigError("unknown key '" + key + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

using AnyDynamics = std::variant<HestonDynamics, MultiFactorDynamics, GeneralDynamics>;

AnyDynamics make_dynamics(const ExperimentConfig& c, SchemeKind scheme) {
  switch (c.model) {
    case ModelKind::heston: return HestonDynamics(c.params, scheme, c.start());
    case ModelKind::multifactor: return MultiFactorDynamics(c.params, c.kernel, c.start());
    case ModelKind::general: return GeneralDynamics(c.general_spec());
  }
  throw ConfigError("unknown model");
}

EstimatorConfig estimator_config(const ExperimentConfig& c, int n, int order, CouplingKind coupling) {
  EstimatorConfig e;
  e.T = c.T;
  e.n = n;
  e.order = order;
  e.coupling = coupling;
  e.epsilon = c.eps;
  e.pilot_size = c.pilot;
  e.seed = c.seed;
  e.workers = c.workers;
  return e;
}

CsvRow make_row(const std::string& label, const RunReport& r, bool timing) {
  return {label, r.order, r.n, r.estimate, r.half_width, r.M1, r.M2, r.final_stats.sigma2_sq,
          r.final_stats.V, r.final_stats.Gamma, timing ? r.wall_ms : 0.0};
}

// Estimates for every n and order in the config, in (n, order) order.
std::vector<RunReport> sweep(const ExperimentConfig& c, const AnyDynamics& dyn, const Payoff& payoff) {
  const bool both = std::count(c.orders.begin(), c.orders.end(), 1) && std::count(c.orders.begin(), c.orders.end(), 2);
  std::vector<RunReport> out;
  for (int n : c.n_list) {
    const EstimatorConfig e = estimator_config(c, n, 2, c.couplings.front());
    std::visit(
        [&](const auto& d) {
          if (both) {
            const OrderPair p = estimate_both_orders(d, e, payoff);
            out.push_back(p.order1);
            out.push_back(p.order2);
          } else {
            EstimatorConfig single = e;
            single.order = c.orders.front();
            out.push_back(estimate(d, single, payoff));
          }
        },
        dyn);
  }
  return out;
}

void fit_slopes(ExperimentSummary& summary, const std::map<int, std::vector<std::pair<double, double>>>& errors) {
  for (const auto& [order, pts] : errors) {
    if (pts.size() < 3) {
      summary.notes.push_back("order " + std::to_string(order) + ": fewer than 3 points, no slope");
      continue;
    }
    try {
      SlopeFit fit = regress_slope(pts);
      for (const auto& w : fit.warnings) summary.notes.push_back("order " + std::to_string(order) + ": " + w);
      summary.slopes[order] = std::move(fit);
    } catch (const NumericFailure& e) {
      summary.notes.push_back("order " + std::to_string(order) + ": " + e.what());
    }
  }
}

}  // namespace

Point ExperimentConfig::start() const { return {std::log(spot), y0}; }

Payoff ExperimentConfig::make_payoff() const { return {payoff, strike, {}}; }

GeneralModelSpec ExperimentConfig::general_spec() const {
  GeneralModelSpec spec;
  spec.blocks.push_back({params.a, params.b, params.sigma, params.rho, y0});
  spec.blocks.insert(spec.blocks.end(), extra_blocks.begin(), extra_blocks.end());
  spec.jumps = jumps;
  spec.rate = rate;
  spec.rate.r0 = params.r;
  spec.x0 = std::log(spot);
  return spec;
}

void ExperimentConfig::validate() const {
  if (!(spot > 0.0)) throw ConfigError("spot must be > 0");
  if (!(T > 0.0)) throw ConfigError("T must be > 0");
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (n_list.empty()) throw ConfigError("n list is empty");
  for (int n : n_list)
    if (n < 1) throw ConfigError("every n must be >= 1");
  if (orders.empty()) throw ConfigError("order list is empty");
  for (int o : orders)
    if (o != 1 && o != 2) throw ConfigError("order must be 1 or 2");
  if (schemes.empty() || couplings.empty()) throw ConfigError("scheme and coupling must be set");
  if (mode != ExperimentMode::variance && (schemes.size() > 1 || couplings.size() > 1))
    throw ConfigError("several schemes or couplings are only allowed in variance mode");
  for (auto cp : couplings)
    if (cp == CouplingKind::OneStep && !make_payoff().is_terminal())
      throw ConfigError("OneStep coupling only applies to terminal payoffs");
  if (model == ModelKind::multifactor)
    for (auto s : schemes)
      if (s != SchemeKind::NV) throw ConfigError("the multifactor model only runs the NV scheme");
  if (mode == ExperimentMode::convergence && reference == ReferenceKind::fourier) {
    if (model != ModelKind::heston) throw ConfigError("the Fourier reference only covers the plain Heston model");
    if (!make_payoff().is_terminal()) throw ConfigError("the Fourier reference only prices European payoffs");
  }
  if (mode == ExperimentMode::convergence && reference == ReferenceKind::mc) {
    if (reference_n < 1) throw ConfigError("reference_n must be >= 1");
    if (!(reference_eps > 0.0)) throw ConfigError("reference_eps must be > 0");
  }
  if (mode == ExperimentMode::variance && samples < 2) throw ConfigError("samples must be >= 2");
  // Model admissibility, checked before any simulation.
  for (auto s : schemes) (void)make_dynamics(*this, s);
}

std::map<std::string, std::string> parse_settings(const std::string& text) {
  Settings out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + t + "'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (out.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys{"a",      "b", "sigma", "rho",    "y0",     "spot",
                                             "strike", "T", "n",     "scheme", "payoff", "eps"};
  return keys;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "preset",         "label",        "model",          "mode",          "a",           "b",
      "sigma",          "rho",          "r",              "y0",            "spot",        "strike",
      "T",              "n",            "scheme",         "coupling",      "order",       "payoff",
      "eps",            "seed",         "pilot",          "workers",       "samples",     "kernel",
      "kernel_rho",     "kernel_gamma", "extra_blocks",   "jump_law",      "jump_intensity", "jump_mean",
      "jump_stdev",     "jump_p_up",    "jump_eta_up",    "jump_eta_down", "jump_compensate", "rate_kind",
      "rate_a",         "rate_b",       "rate_sigma",     "reference",     "reference_n", "reference_eps",
      "out",            "record_timing"};
  return keys;
}

ExperimentConfig config_from_settings(const std::map<std::string, std::string>& settings) {
  std::vector<std::string> unknown, missing;
  const auto& known = known_keys();
  for (const auto& [k, v] : settings)
    if (std::find(known.begin(), known.end(), k) == known.end()) unknown.push_back(k);

  Settings merged;
  if (const auto it = settings.find("preset"); it != settings.end()) {
    const auto& table = preset_table();
    const auto p = table.find(it->second);
    if (p == table.end()) throw ConfigError("unknown preset '" + it->second + "'");
    merged = p->second;
    merged["preset"] = it->second;
  } else {
    for (const auto& k : required_keys())
      if (!settings.count(k)) missing.push_back(k);
  }
  if (!unknown.empty() || !missing.empty()) {
    std::string msg;
    auto list = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& k : v) s += (s.empty() ? "" : ", ") + k;
      return s;
    };
    if (!unknown.empty()) msg += "unknown keys: " + list(unknown);
    if (!missing.empty()) msg += std::string(msg.empty() ? "" : "; ") + "missing required keys: " + list(missing);
    throw ConfigError(msg);
  }
  for (const auto& [k, v] : settings) merged[k] = v;

  ExperimentConfig c;
  // The kernel name goes first so explicit node/weight lists override it.
  if (const auto it = merged.find("kernel"); it != merged.end()) apply_setting(c, "kernel", it->second);
  for (const auto& [k, v] : merged)
    if (k != "kernel") apply_setting(c, k, v);
  c.settings = merged;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_settings(parse_settings(ss.str()));
}

ExperimentConfig preset(const std::string& name) { return config_from_settings({{"preset", name}}); }

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : preset_table()) out.push_back(k);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult res;
  const Payoff payoff = c.make_payoff();

  switch (c.mode) {
    case ExperimentMode::convergence:
    case ExperimentMode::selfdiff: {
      const AnyDynamics dyn = make_dynamics(c, c.schemes.front());
      if (c.mode == ExperimentMode::convergence) {
        if (c.reference == ReferenceKind::fourier) {
          const OptionKind kind =
              c.payoff == PayoffKind::european_call ? OptionKind::call : OptionKind::put;
          res.summary.reference = european_price_cf(c.params, c.start(), c.T, c.strike, kind).price;
        } else if (c.reference == ReferenceKind::mc) {
          EstimatorConfig e = estimator_config(c, c.reference_n, 2, c.couplings.front());
          e.epsilon = c.reference_eps;
          e.seed = c.seed ^ 0x5DEECE66Dull;
          const RunReport ref = std::visit([&](const auto& d) { return estimate(d, e, payoff); }, dyn);
          res.summary.reference = ref.estimate;
          res.rows.push_back(make_row(c.label + "_reference", ref, c.record_timing));
        }
      }
      const std::vector<RunReport> reports = sweep(c, dyn, payoff);
      std::map<int, std::map<int, double>> by_order;
      for (const auto& r : reports) {
        res.rows.push_back(make_row(c.label, r, c.record_timing));
        by_order[r.order][r.n] = r.estimate;
      }
      std::map<int, std::vector<std::pair<double, double>>> errors;
      for (const auto& [order, values] : by_order) {
        if (c.mode == ExperimentMode::selfdiff) {
          errors[order] = self_difference_errors(values);
        } else if (res.summary.reference) {
          for (const auto& [n, v] : values) errors[order].emplace_back(n, std::abs(v - *res.summary.reference));
        }
      }
      fit_slopes(res.summary, errors);
      break;
    }
    case ExperimentMode::variance: {
      for (auto scheme : c.schemes) {
        const AnyDynamics dyn = make_dynamics(c, scheme);
        for (auto coupling : c.couplings) {
          const std::string label = std::string(to_string(scheme)) + "/" + std::string(to_string(coupling));
          for (int n : c.n_list) {
            EstimatorConfig e = estimator_config(c, n, 2, coupling);
            e.fixed_M1 = e.fixed_M2 = c.samples;
            const RunReport r = std::visit([&](const auto& d) { return estimate(d, e, payoff); }, dyn);
            res.rows.push_back(make_row(label, r, c.record_timing));
          }
        }
      }
      break;
    }
    case ExperimentMode::timing: {
      const AnyDynamics dyn = make_dynamics(c, c.schemes.front());
      for (int n : c.n_list) {
        const EstimatorConfig e1 = estimator_config(c, n * n, 1, CouplingKind::Standard);
        const EstimatorConfig e2 = estimator_config(c, n, 2, c.couplings.front());
        const RunReport r1 = std::visit([&](const auto& d) { return estimate(d, e1, payoff); }, dyn);
        const RunReport r2 = std::visit([&](const auto& d) { return estimate(d, e2, payoff); }, dyn);
        res.rows.push_back(make_row(c.label, r1, c.record_timing));
        res.rows.push_back(make_row(c.label, r2, c.record_timing));
        if (r2.wall_ms > 0.0) res.summary.timing_ratio[n] = r1.wall_ms / r2.wall_ms;
      }
      break;
    }
  }
  return res;
}

std::string csv_header() { return "label,order,n,estimate,half_width,M1,M2,sigma2_sq,V_n,Gamma_n,wall_ms"; }

std::string to_csv_line(const CsvRow& r) {
  std::string s = r.label;
  s += ',' + std::to_string(r.order) + ',' + std::to_string(r.n) + ',' + fmt(r.estimate) + ',' + fmt(r.half_width) +
       ',' + std::to_string(r.M1) + ',' + std::to_string(r.M2) + ',' + fmt(r.sigma2_sq) + ',' + fmt(r.V_n) + ',' +
       fmt(r.Gamma_n) + ',' + fmt(r.wall_ms);
  return s;
}

void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << csv_header() << '\n';
  for (const auto& r : rows) out << to_csv_line(r) << '\n';
}

void write_metadata(const std::filesystem::path& path, const ExperimentConfig& config,
                    const ExperimentSummary& summary) {
  nlohmann::ordered_json j;
  j["version"] = version_string();
  j["seed"] = config.seed;
  j["config"] = config.settings;
  if (summary.reference) j["reference"] = *summary.reference;
  for (const auto& [order, fit] : summary.slopes) {
    j["slopes"][std::to_string(order)] = {{"slope", fit.slope}, {"intercept", fit.intercept},
                                          {"points", fit.used.size()}, {"dropped", fit.dropped}};
  }
  for (const auto& [n, ratio] : summary.timing_ratio) j["timing_ratio"][std::to_string(n)] = ratio;
  j["notes"] = summary.notes;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::string format_summary(const ExperimentConfig& config, const ExperimentResult& result) {
  std::ostringstream os;
  os << config.label << ": " << result.rows.size() << " rows\n";
  if (result.summary.reference) os << "reference " << fmt(*result.summary.reference) << '\n';
  for (const auto& [order, fit] : result.summary.slopes) {
    os << "order " << order << " slope " << fmt(fit.slope) << " (" << fit.used.size() << " points)\n";
    for (const auto& [n, err] : fit.used) os << "  n=" << n << " error " << fmt(err) << '\n';
  }
  for (const auto& [n, ratio] : result.summary.timing_ratio)
    os << "n=" << n << " wall(order 1, n^2) / wall(order 2, n) = " << fmt(ratio) << '\n';
  for (const auto& note : result.summary.notes) os << "note: " << note << '\n';
  return os.str();
}

std::string version_string() { return std::string(RGHESTON_VERSION) + "+" + RGHESTON_GIT_REV; }

}  // namespace rgheston
