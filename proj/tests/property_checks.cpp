#include "property_checks.hpp"

#include <cmath>
#include <sstream>

#include "rgheston/experiments.hpp"
#include "rgheston/extensions.hpp"
#include "rgheston/random_grids.hpp"
#include "rgheston/reference.hpp"
#include "rgheston/schemes.hpp"
#include "stats_util.hpp"

namespace rgheston::test {

namespace {

const HestonParams fig1{0.2, 1.0, 0.5, -0.7, 0.0};
const HestonParams fig2{0.1, 1.0, 1.0, -0.9, 0.0};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Five-map Strang composition with two independent price Gaussians.
Point five_map(double t, Point s, double N1, double G, double N2, const HestonParams& p) {
  s = phi_B(0.5 * t, s.x, s.y, N1, p);
  s = phi_0(0.5 * t, s.x, s.y, p);
  s = phi_1(std::sqrt(t) * G, s.x, s.y, p);
  s = phi_0(0.5 * t, s.x, s.y, p);
  return phi_B(0.5 * t, s.x, s.y, N2, p);
}

bool within(double a, double b, double sa, double sb, double k = 4.0) { return std::abs(a - b) <= k * std::hypot(sa, sb); }

template <class Dyn>
bool prefix_holds(const Dyn& dyn, int n, CouplingKind coupling, const Payoff& payoff, std::uint64_t seed,
                  std::uint64_t samples, std::string& why) {
  for (std::uint64_t m = 0; m < samples; ++m) {
    const auto pr = simulate_pair(dyn, {1.0, n, std::nullopt}, coupling, payoff, seed, m);
    const int last = coupling == CouplingKind::OneStep ? std::min(pr.kappa, n - 1) : pr.kappa;
    for (int k = 0; k <= last; ++k) {
      if (coupling == CouplingKind::OneStep && k > 0) break;  // only the start node is materialised
      if (pr.coarse_x[k] != pr.fine_x[k]) {
        why = "sample " + std::to_string(m) + " node " + std::to_string(k);
        return false;
      }
    }
  }
  return true;
}

// Reference tuner: golden-section search of the continuous cost M1 + 1.5 M2
// along the constraint S/M1 + V/M2 = eps^2, then ceilings. The cost is flat
// at the optimum, so the search runs in long double to resolve single samples.
std::pair<double, double> brute_force_sizes(double S_, double V_, double eps) {
  using real = long double;
  const real S = S_, V = V_, e2 = real(eps) * eps;
  auto m1_of = [&](real m2) { return S / (e2 - V / m2); };
  auto cost = [&](real m2) { return m1_of(m2) + 1.5L * m2; };
  const real lo = V / e2 * (1 + 1e-15L), hi = (V + S) / e2 * 1e3L;
  // Coarse scan first to bracket the minimum.
  const int grid = 20000;
  const real ratio = hi / lo;
  real best = lo, best_cost = INFINITY;
  for (int i = 1; i < grid; ++i) {
    const real m2 = lo * std::pow(ratio, real(i) / grid);
    if (const real c = cost(m2); c < best_cost) {
      best_cost = c;
      best = m2;
    }
  }
  real a = best * std::pow(ratio, -1.0L / grid), b = best * std::pow(ratio, 1.0L / grid);
  const real g = (std::sqrt(5.0L) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const real c = b - g * (b - a), d = a + g * (b - a);
    if (cost(c) < cost(d)) b = d;
    else a = c;
  }
  const real m2 = (a + b) / 2;
  return {double(std::ceil(m1_of(m2))), double(std::ceil(m2))};
}

CheckResult martingale_check(const std::string& name, const GeneralModelSpec& spec, double S0, double T, double r,
                             std::uint64_t seed) {
  const GeneralDynamics dyn(spec);
  EstimatorConfig c;
  c.T = T;
  c.n = 32;
  c.order = 2;
  c.epsilon = 0.1;
  c.seed = seed;
  c.pilot_size = 5000;
  const Payoff disc = Payoff::terminal([r, T](double x, double) { return std::exp(x - r * T); });
  const RunReport rep = estimate(dyn, c, disc);
  const double sd = rep.half_width / 1.96;
  CheckResult res{name, std::abs(rep.estimate - S0) <= 3 * sd, {}};
  res.detail = "E[exp(X_T - rT)] = " + num(rep.estimate) + " vs " + num(S0) + " (sd " + num(sd) + ")";
  return res;
}

}  // namespace

CheckResult cir_moment_oracles() {
  struct Case {
    double y0, t, a, b, sigma;
  };
  // b > 0, b = 0, b < 0, d > 1 and d < 1.
  const Case cases[] = {{0.2, 1.0, 0.2, 1.0, 0.5},  {0.1, 0.5, 0.1, 0.0, 1.0}, {0.05, 1.0, 0.02, -0.5, 0.6},
                        {0.3, 0.1, 0.5, 2.0, 0.3},  {0.0, 0.25, 0.05, 3.0, 1.2}, {0.4, 2.0, 0.01, 0.0, 0.8}};
  CheckResult r{"CIR exact transition moments (4 sigma, 1e6 draws)", true, {}};
  std::uint64_t id = 0;
  for (const auto& c : cases) {
    RngStream s(2024, id++);
    Sample m;
    m.shift = c.y0;
    const CirTransitionParams p{c.y0, c.t, c.a, c.b, c.sigma};
    for (int i = 0; i < 1'000'000; ++i) m.add(cir_exact_transition(p, s));
    const CirMoments ex = cir_moments(c.y0, c.t, c.a, c.b, c.sigma);
    const bool ok = std::abs(m.mean() - ex.mean) <= 4 * m.se_mean() && std::abs(m.var() - ex.variance) <= 4 * m.se_var();
    if (!ok) {
      r.ok = false;
      r.detail += "case d=" + num(p.dof()) + " b=" + num(c.b) + ": mean " + num(m.mean()) + "/" + num(ex.mean) +
                  " var " + num(m.var()) + "/" + num(ex.variance) + "; ";
    }
  }
  if (r.ok) r.detail = std::to_string(std::size(cases)) + " parameter sets";
  return r;
}

CheckResult variance_positivity() {
  CheckResult r{"positivity of every variance update (1e6 random inputs each)", true, {}};
  RngStream s(77, 0);
  std::uint64_t bad = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const double sigma = 2.0 * s.uniform();
    const double a = sigma * sigma / 4.0 * (1.0 + 3.0 * s.uniform());
    const double b = 4.0 * s.uniform() - 1.0;
    const HestonParams p{a, b, sigma, 2.0 * s.uniform() - 1.0, 0.0};
    const double t = s.uniform(), y = s.uniform() * (s.uniform() < 0.1 ? 0.0 : 1.0);
    const double G = 3.0 * s.normal();
    if (!(nv_step(t, 0.0, y, s.normal(), G, p).y >= 0.0)) ++bad;
    if (!(phi_1(G, 0.0, y, p).y >= 0.0)) ++bad;
    if (!(cir_exact_transition({y, t, a * s.uniform(), b, sigma}, s) >= 0.0)) ++bad;
  }
  // Aggregate variance of the multifactor scheme along sampled paths.
  const HestonParams fig7{0.3, 1.0, 0.1, -0.7, 0.0};
  const MultiFactorDynamics mf(fig7, ExpKernel::bl2_h01_d3(), {std::log(100.0), 0.1});
  const auto prep = mf.prepare(1.0 / 8.0);
  StepKick kick;
  for (std::uint64_t m = 0; m < 125'000; ++m) {
    RngStream ps(78, m);
    auto v = mf.initial();
    for (int k = 0; k < 8; ++k) {
      v = mf.advance(v, prep, ps, kick);
      if (!(v.agg >= 0.0)) ++bad;
    }
  }
  r.ok = bad == 0;
  r.detail = std::to_string(bad) + " negative values";
  return r;
}

CheckResult prefix_equality() {
  CheckResult r{"coarse/fine prefix equality up to node kappa (bitwise)", true, {}};
  const Point s1{std::log(100.0), 0.2}, s2{std::log(100.0), 0.1};
  std::string why;
  std::uint64_t seed = 1;
  for (int n : {2, 3, 5, 8}) {
    for (auto cp : {CouplingKind::Standard, CouplingKind::VolAveraged, CouplingKind::OneStep}) {
      const Payoff pay = cp == CouplingKind::OneStep ? Payoff::european_put(105) : Payoff::asian_put(100);
      for (auto sc : {SchemeKind::NV, SchemeKind::NVBernoulli}) {
        if (!prefix_holds(HestonDynamics(fig1, sc, s1), n, cp, pay, seed++, 200, why)) {
          r.ok = false;
          r.detail += std::string(to_string(sc)) + ": " + why + "; ";
        }
      }
      for (auto sc : {SchemeKind::Ex, SchemeKind::ExBernoulli}) {
        if (!prefix_holds(HestonDynamics(fig2, sc, s2), n, cp, pay, seed++, 200, why)) {
          r.ok = false;
          r.detail += std::string(to_string(sc)) + ": " + why + "; ";
        }
      }
      const HestonParams fig7{0.3, 1.0, 0.1, -0.7, 0.0};
      if (!prefix_holds(MultiFactorDynamics(fig7, ExpKernel::bl2_h01_d3(), {std::log(100.0), 0.1}), n, cp, pay,
                        seed++, 200, why)) {
        r.ok = false;
        r.detail += "multifactor: " + why + "; ";
      }
      GeneralModelSpec spec;
      spec.blocks = {{0.2, 1.0, 0.5, -0.7, 0.2}, {0.1, 1.0, 1.0, -0.9, 0.1}};
      spec.jumps = {JumpLaw::Normal, 0.5, -0.1, 0.2};
      spec.rate = {RateKind::Cir, 0.03, 0.03, 1.0, 0.1};
      spec.x0 = std::log(100.0);
      if (!prefix_holds(GeneralDynamics(spec), n, cp, pay, seed++, 200, why)) {
        r.ok = false;
        r.detail += "general: " + why + "; ";
      }
    }
  }
  if (r.ok) r.detail = "all schemes, couplings, models; n in {2,3,5,8}";
  return r;
}

CheckResult nv_composition_law() {
  CheckResult r{"nv_step has the law of the five-map composition (1e6 draws)", true, {}};
  for (double t : {0.125, 0.5, 1.0}) {
    RngStream a(17, 0), b(18, 0);
    Sample xa, xb, ya, yb;
    for (int i = 0; i < 1'000'000; ++i) {
      const double N = a.normal(), G = a.normal();
      const Point s = nv_step(t, 0.0, 0.2, N, G, fig1);
      xa.add(s.x);
      ya.add(s.y);
      const double N1 = b.normal(), G2 = b.normal(), N2 = b.normal();
      const Point c = five_map(t, {0.0, 0.2}, N1, G2, N2, fig1);
      xb.add(c.x);
      yb.add(c.y);
    }
    const bool ok = within(xa.mean(), xb.mean(), xa.se_mean(), xb.se_mean()) &&
                    within(xa.var(), xb.var(), xa.se_var(), xb.se_var()) &&
                    within(ya.mean(), yb.mean(), ya.se_mean(), yb.se_mean()) &&
                    within(ya.var(), yb.var(), ya.se_var(), yb.se_var());
    if (!ok) {
      r.ok = false;
      r.detail += "t=" + num(t) + " x mean " + num(xa.mean()) + "/" + num(xb.mean()) + " var " + num(xa.var()) + "/" +
                  num(xb.var()) + "; ";
    }
  }
  if (r.ok) r.detail = "t in {1/8, 1/2, 1}";
  return r;
}

CheckResult tuning_matches_brute_force() {
  CheckResult r{"tune_sample_sizes matches a brute-force cost minimiser (+-1)", true, {}};
  int cases = 0;
  for (double S : {0.5, 1.0, 20.0, 556.0}) {
    for (double ratio : {0.01, 0.1, 0.5, 1.0, 1.4}) {  // V / S below the M1 = M2 override
      for (double Gamma : {0.0, 0.1 * S}) {
        for (double eps : {0.01, 0.002}) {
          const double V = ratio * S;
          const SampleSizes got = tune_sample_sizes({S - 2 * Gamma, V, Gamma, 0}, eps);
          const auto [m1, m2] = brute_force_sizes(S, V, eps);
          ++cases;
          if (std::abs(double(got.M1) - m1) > 1 || std::abs(double(got.M2) - m2) > 1) {
            r.ok = false;
            r.detail += "S=" + num(S) + " V=" + num(V) + ": " + std::to_string(got.M1) + "," +
                        std::to_string(got.M2) + " vs " + num(m1) + "," + num(m2) + "; ";
          }
        }
      }
    }
  }
  if (r.ok) r.detail = std::to_string(cases) + " pilot statistics";
  return r;
}

CheckResult char_fn_identities() {
  CheckResult r{"phi(0) = 1 and phi(-i) = exp(x0 + rT) to 1e-8", true, {}};
  double worst = 0.0;
  for (const auto& p : {fig1, fig2, HestonParams{0.05, -0.5, 0.3, 0.4, 0.03}, HestonParams{0.3, 3.0, 2.0, 0.0, 0.1}}) {
    for (double T : {0.05, 0.5, 1.0, 3.0, 10.0}) {
      worst = std::max(worst, std::abs(heston_char_fn({0.0, 0.0}, p, T, 0.2, 0.1) - cplx(1.0)));
      const double m = std::exp(0.2 + p.r * T);
      worst = std::max(worst, std::abs(heston_char_fn({0.0, -1.0}, p, T, 0.2, 0.1) - m) / m);
    }
  }
  r.ok = worst <= 1e-8;
  r.detail = "max deviation " + num(worst);
  return r;
}

CheckResult put_call_parity() {
  CheckResult r{"put-call parity of the Fourier prices to 1e-8", true, {}};
  double worst = 0.0;
  for (const auto& [p, y0] : {std::pair{fig1, 0.2}, std::pair{fig2, 0.1}, std::pair{HestonParams{0.05, 2, 0.4, 0.2, 0.04}, 0.05}}) {
    for (double K : {70.0, 100.0, 105.0, 140.0}) {
      for (double T : {0.25, 1.0, 4.0}) {
        const Point s{std::log(100.0), y0};
        const double c = european_price_cf(p, s, T, K, OptionKind::call).price;
        const double q = european_price_cf(p, s, T, K, OptionKind::put).price;
        worst = std::max(worst, std::abs(c - q - (100.0 - K * std::exp(-p.r * T))));
      }
    }
  }
  r.ok = worst <= 1e-8;
  r.detail = "max parity residual " + num(worst);
  return r;
}

CheckResult martingale_plain() {
  HestonParams p = fig1;
  p.r = 0.02;
  return martingale_check("martingale, plain Heston (n=32, order 2)",
                          GeneralModelSpec::heston(p, {std::log(100.0), 0.2}), 100.0, 1.0, 0.02, 501);
}

CheckResult martingale_bates() {
  GeneralModelSpec spec = GeneralModelSpec::heston(fig1, {std::log(100.0), 0.2});
  spec.jumps = {JumpLaw::Normal, 0.0, -0.1, 0.2};
  // Zero intensity: the paths must be those of the plain model.
  EstimatorConfig c;
  c.n = 4;
  c.epsilon = 0.3;
  c.seed = 9;
  const Payoff put = Payoff::european_put(105);
  const bool same = estimate(GeneralDynamics(spec), c, put).estimate ==
                    estimate(GeneralDynamics(GeneralModelSpec::heston(fig1, {std::log(100.0), 0.2})), c, put).estimate;
  CheckResult r = martingale_check("martingale, Bates with zero intensity (n=32, order 2)", spec, 100.0, 1.0, 0.0, 502);
  if (!same) {
    r.ok = false;
    r.detail += "; zero-intensity paths differ from the plain model";
  }
  GeneralModelSpec jumps = spec;
  jumps.jumps.intensity = 0.5;
  const CheckResult with = martingale_check("", jumps, 100.0, 1.0, 0.0, 503);
  r.ok = r.ok && with.ok;
  r.detail += "; with intensity 0.5: " + with.detail;
  return r;
}

CheckResult martingale_double_heston() {
  GeneralModelSpec spec;
  spec.blocks = {{0.1, 1.0, 0.4, -0.7, 0.1}, {0.05, 3.0, 1.0, -0.3, 0.05}};
  spec.rate = {RateKind::Constant, 0.01, 0, 0, 0};
  spec.x0 = std::log(100.0);
  return martingale_check("martingale, double Heston (n=32, order 2)", spec, 100.0, 1.0, 0.01, 504);
}

CheckResult worker_determinism() {
  CheckResult r{"bitwise CSV under 1, 2 and 3 workers", true, {}};
  std::string first;
  for (const char* w : {"1", "2", "3"}) {
    const ExperimentConfig c = config_from_settings({{"preset", "fig3"},
                                                     {"n", "2,4"},
                                                     {"eps", "0.05"},
                                                     {"pilot", "3000"},
                                                     {"workers", w},
                                                     {"record_timing", "false"}});
    const ExperimentResult res = run_experiment(c);
    std::string csv = csv_header() + "\n";
    for (const auto& row : res.rows) csv += to_csv_line(row) + "\n";
    if (first.empty()) first = csv;
    else if (csv != first) {
      r.ok = false;
      r.detail = std::string("workers=") + w + " differs";
    }
  }
  if (r.ok) r.detail = "identical";
  return r;
}

std::vector<CheckResult> run_all_property_checks() {
  return {cir_moment_oracles(), variance_positivity(),      prefix_equality(), nv_composition_law(),
          tuning_matches_brute_force(), char_fn_identities(), put_call_parity(), martingale_plain(),
          martingale_bates(),   martingale_double_heston(), worker_determinism()};
}

}  // namespace rgheston::test
