#include "rgheston/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rgheston {

std::string_view to_string(SchemeKind s) noexcept {
  switch (s) {
    case SchemeKind::NV: return "NV";
    case SchemeKind::Ex: return "Ex";
    case SchemeKind::ExBernoulli: return "ExBernoulli";
    case SchemeKind::NVBernoulli: return "NVBernoulli";
  }
  return "?";
}

SchemeKind parse_scheme(std::string_view name) {
  for (auto s : {SchemeKind::NV, SchemeKind::Ex, SchemeKind::ExBernoulli, SchemeKind::NVBernoulli}) {
    if (name == to_string(s)) return s;
  }
  if (name == "nv") return SchemeKind::NV;
  if (name == "ex") return SchemeKind::Ex;
  if (name == "ex_bernoulli") return SchemeKind::ExBernoulli;
  if (name == "nv_bernoulli") return SchemeKind::NVBernoulli;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

ValidationReport validate_params(const HestonParams& p, SchemeKind scheme) {
  auto reject = [](std::string why) { return ValidationReport{false, std::move(why)}; };
  if (!(p.a >= 0.0)) return reject("a >= 0");
  if (!(p.sigma > 0.0)) return reject("sigma > 0");
  if (!(p.rho >= -1.0 && p.rho <= 1.0)) return reject("rho in [-1, 1]");
  if (!std::isfinite(p.b) || !std::isfinite(p.r)) return reject("b and r finite");
  if (uses_nv(scheme) && !p.nv_admissible()) {
    std::ostringstream os;
    os << "sigma^2 <= 4a (NV scheme): " << p.sigma * p.sigma << " > " << 4.0 * p.a;
    return reject(os.str());
  }
  return {};
}

void GridSpec::validate() const {
  if (!(T > 0.0)) throw ConfigError("grid horizon T must be > 0");
  if (n < 1) throw ConfigError("grid step count n must be >= 1");
  if (kappa && (*kappa < 0 || *kappa >= n)) throw ConfigError("kappa must lie in {0, ..., n-1}");
}

std::string_view to_string(PayoffKind k) noexcept {
  switch (k) {
    case PayoffKind::european_put: return "european_put";
    case PayoffKind::european_call: return "european_call";
    case PayoffKind::asian_put: return "asian_put";
    case PayoffKind::asian_call: return "asian_call";
    case PayoffKind::custom_terminal: return "custom_terminal";
  }
  return "?";
}

PayoffKind parse_payoff(std::string_view name) {
  for (auto k : {PayoffKind::european_put, PayoffKind::european_call, PayoffKind::asian_put,
                 PayoffKind::asian_call}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown payoff '" + std::string(name) + "'");
}

double payoff_eval(const Payoff& payoff, const PathState& terminal, const GridSpec& grid) {
  const double K = payoff.strike;
  switch (payoff.kind) {
    case PayoffKind::european_put: return std::max(K - std::exp(terminal.x), 0.0);
    case PayoffKind::european_call: return std::max(std::exp(terminal.x) - K, 0.0);
    case PayoffKind::asian_put:
    case PayoffKind::asian_call: {
      if (!terminal.integral_I) throw ConfigError("asian payoff needs the running integral I");
      const double avg = *terminal.integral_I / grid.T;
      return payoff.kind == PayoffKind::asian_put ? std::max(K - avg, 0.0) : std::max(avg - K, 0.0);
    }
    case PayoffKind::custom_terminal:
      if (!payoff.custom) throw ConfigError("custom_terminal payoff without a function");
      return payoff.custom(terminal.x, terminal.y);
  }
  return 0.0;
}

}  // namespace rgheston
