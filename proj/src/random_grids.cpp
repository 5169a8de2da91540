#include "rgheston/random_grids.hpp"

#include <numeric>
#include <string>

namespace rgheston {

std::string_view to_string(CouplingKind c) noexcept {
  switch (c) {
    case CouplingKind::Standard: return "Standard";
    case CouplingKind::VolAveraged: return "VolAveraged";
    case CouplingKind::OneStep: return "OneStep";
  }
  return "?";
}

CouplingKind parse_coupling(std::string_view name) {
  for (auto c : {CouplingKind::Standard, CouplingKind::VolAveraged, CouplingKind::OneStep}) {
    if (name == to_string(c)) return c;
  }
  if (name == "standard" || name == "st") return CouplingKind::Standard;
  if (name == "vol_averaged" || name == "av") return CouplingKind::VolAveraged;
  if (name == "one_step" || name == "onestep") return CouplingKind::OneStep;
  throw ConfigError("unknown coupling '" + std::string(name) + "'");
}

__extension__ using u128 = unsigned __int128;

int sample_kappa(int n, RngStream& stream) {
  if (n < 1) throw ConfigError("sample_kappa: n must be >= 1");
  // Multiply-high maps a 64-bit word onto {0, ..., n-1} without modulo bias beyond 2^-64 n.
  const u128 wide = static_cast<u128>(stream.next_u64()) * static_cast<unsigned>(n);
  return static_cast<int>(wide >> 64);
}

double couple_weighted(CouplingKind kind, std::span<const double> fine_normals, std::span<const double> weights) {
  const std::size_t n = fine_normals.size();
  if (n == 0) throw ConfigError("couple_weighted: no fine normals");
  if (n == 1) return fine_normals[0];
  if (kind == CouplingKind::VolAveraged) {
    if (weights.size() != n) throw ConfigError("couple_weighted: one weight per fine normal expected");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      num += std::sqrt(weights[k]) * fine_normals[k];
      den += weights[k];
    }
    if (den > 0.0) return num / std::sqrt(den);
  }
  return std::accumulate(fine_normals.begin(), fine_normals.end(), 0.0) / std::sqrt(static_cast<double>(n));
}

double couple_coarse_gaussian(CouplingKind kind, std::span<const double> fine_normals, std::span<const double> fine_y) {
  const std::size_t n = fine_normals.size();
  if (fine_y.size() != n + 1) throw ConfigError("couple_coarse_gaussian: fine_y must hold n+1 values");
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (fine_y[k] < 0.0 || fine_y[k + 1] < 0.0) throw ConfigError("couple_coarse_gaussian: negative variance");
    w[k] = fine_y[k] + fine_y[k + 1];
  }
  return couple_weighted(kind, fine_normals, w);
}

SampleSizes tune_sample_sizes(const PilotStats& stats, double eps) {
  if (!(eps > 0.0)) throw ConfigError("tune_sample_sizes: eps must be > 0");
  SampleSizes out;
  double S = stats.sigma2_sq + 2.0 * stats.Gamma;
  if (S < 0.0) {
    S = 0.0;
    out.clamped = true;
  }
  const double V = std::max(stats.V, 0.0);
  const double e2 = eps * eps;
  out.M1 = static_cast<std::uint64_t>(std::ceil((S + std::sqrt(1.5 * S * V)) / e2));
  out.M2 = static_cast<std::uint64_t>(std::ceil((V + std::sqrt(2.0 / 3.0 * S * V)) / e2));
  out.M2 = std::max<std::uint64_t>(out.M2, 1);
  out.M1 = std::max(out.M1, out.M2);
  return out;
}

double half_width_95(const PilotStats& s, int order, std::uint64_t M1, std::uint64_t M2) {
  if (M1 == 0) return 0.0;
  if (order == 1) return 1.96 * std::sqrt(std::max(s.sigma2_sq, 0.0) / static_cast<double>(M1));
  if (M2 == 0) return 0.0;
  // Samples below M2 feed both sums; the cross term uses the covariance
  // restricted to the shared samples, which equals Gamma / M1.
  const double var = std::max(s.sigma2_sq + 2.0 * s.Gamma, 0.0) / static_cast<double>(M1) +
                     std::max(s.V, 0.0) / static_cast<double>(M2);
  return 1.96 * std::sqrt(var);
}

namespace detail {

void Moments::merge(const Moments& o) noexcept {
  if (o.count > 0) {
    if (count == 0) {
      count = o.count;
      mean_a = o.mean_a;
      m2_a = o.m2_a;
    } else {
      const double n1 = static_cast<double>(count), n2 = static_cast<double>(o.count);
      const double n = n1 + n2;
      const double d = o.mean_a - mean_a;
      mean_a += d * n2 / n;
      m2_a += o.m2_a + d * d * n1 * n2 / n;
      count += o.count;
    }
  }
  if (o.pairs > 0) {
    if (pairs == 0) {
      pairs = o.pairs;
      pmean_a = o.pmean_a;
      pm2_a = o.pm2_a;
      mean_c = o.mean_c;
      m2_c = o.m2_c;
      co_ac = o.co_ac;
    } else {
      const double n1 = static_cast<double>(pairs), n2 = static_cast<double>(o.pairs);
      const double n = n1 + n2;
      const double da = o.pmean_a - pmean_a;
      const double dc = o.mean_c - mean_c;
      pmean_a += da * n2 / n;
      mean_c += dc * n2 / n;
      pm2_a += o.pm2_a + da * da * n1 * n2 / n;
      m2_c += o.m2_c + dc * dc * n1 * n2 / n;
      co_ac += o.co_ac + da * dc * n1 * n2 / n;
      pairs += o.pairs;
    }
  }
}

PilotStats Moments::stats() const noexcept {
  PilotStats s;
  if (count > 1) s.sigma2_sq = m2_a / static_cast<double>(count - 1);
  if (pairs > 1) {
    const double d = static_cast<double>(pairs - 1);
    s.V = m2_c / d;
    s.Gamma = co_ac / d;
  }
  return s;
}

void check_config(const EstimatorConfig& cfg, const Payoff& payoff) {
  if (cfg.order != 1 && cfg.order != 2) throw ConfigError("order must be 1 or 2");
  if (cfg.n < 1) throw ConfigError("n must be >= 1");
  if (!(cfg.T > 0.0)) throw ConfigError("T must be > 0");
  if (!(cfg.epsilon > 0.0) && !(cfg.fixed_M1 && cfg.fixed_M2)) throw ConfigError("epsilon must be > 0");
  if (cfg.coupling == CouplingKind::OneStep && !payoff.is_terminal())
    throw ConfigError("OneStep coupling only applies to terminal payoffs");
  if (payoff.kind == PayoffKind::custom_terminal && !payoff.custom)
    throw ConfigError("custom payoff without a function");
}

}  // namespace detail

RunReport estimate(const HestonParams& p, SchemeKind scheme, Point start, const EstimatorConfig& cfg,
                   const Payoff& payoff) {
  return estimate(HestonDynamics(p, scheme, start), cfg, payoff);
}

}  // namespace rgheston
