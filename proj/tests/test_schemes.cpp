#include <doctest.h>

#include <cmath>

#include "rgheston/errors.hpp"
#include "rgheston/reference.hpp"
#include "rgheston/schemes.hpp"
#include "stats_util.hpp"

using namespace rgheston;
using rgheston::test::Sample;

namespace {

const HestonParams fig1{0.2, 1.0, 0.5, -0.7, 0.0};
const HestonParams fig2{0.1, 1.0, 1.0, -0.9, 0.0};

// Five-map Strang composition with two independent price Gaussians.
Point five_map(double t, Point s, double N1, double G, double N2, const HestonParams& p) {
  s = phi_B(0.5 * t, s.x, s.y, N1, p);
  s = phi_0(0.5 * t, s.x, s.y, p);
  s = phi_1(std::sqrt(t) * G, s.x, s.y, p);
  s = phi_0(0.5 * t, s.x, s.y, p);
  return phi_B(0.5 * t, s.x, s.y, N2, p);
}

}  // namespace

TEST_CASE("validate_params examples") {
  CHECK(validate_params({0.2, 1, 0.5, -0.7, 0}, SchemeKind::NV).ok);
  CHECK_FALSE(validate_params({0.1, 1, 1.0, -0.9, 0}, SchemeKind::NV).ok);
  CHECK(validate_params({0.1, 1, 1.0, -0.9, 0}, SchemeKind::Ex).ok);
  CHECK_FALSE(validate_params({0.1, 1, 1.0, -1.5, 0}, SchemeKind::Ex).ok);
  CHECK_FALSE(validate_params({-0.1, 1, 1.0, 0.0, 0}, SchemeKind::Ex).ok);
}

TEST_CASE("phi_0") {
  const Point id = phi_0(0.0, 0.3, 0.2, fig1);
  CHECK(id.x == 0.3);
  CHECK(id.y == doctest::Approx(0.2).epsilon(1e-15));

  HestonParams p = fig1;
  p.b = 0.0;
  CHECK(phi_0(0.4, 0.0, 0.2, p).y == doctest::Approx(0.2 + 0.4 * (0.2 - 0.0625)).epsilon(1e-14));

  p = fig1;
  p.a = p.sigma * p.sigma / 4.0;
  const double t = 0.3;
  const Point q = phi_0(t, 1.0, 0.2, p);
  CHECK(q.y == doctest::Approx(std::exp(-p.b * t) * 0.2).epsilon(1e-14));
  CHECK(q.x == doctest::Approx(1.0 - p.rho * p.b / p.sigma * psi_b(p.b, t) * 0.2).epsilon(1e-14));

  CHECK_THROWS_AS((void)phi_0(0.1, 0.0, 0.1, fig2), AdmissibilityError);
}

TEST_CASE("phi_1") {
  const Point id = phi_1(0.0, 0.5, 0.2, fig1);
  CHECK(id.x == 0.5);
  CHECK(id.y == doctest::Approx(0.2).epsilon(1e-15));

  const Point q = phi_1(1.0, 0.0, 0.0, fig1);
  CHECK(q.y == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(q.x == doctest::Approx(fig1.rho * 0.125).epsilon(1e-15));

  for (double w : {-2.0, -0.3, 0.7, 3.0}) {
    const Point s = phi_1(w, 0.1, 0.3, fig1);
    CHECK(s.y - 0.3 == doctest::Approx(fig1.sigma / fig1.rho * (s.x - 0.1)).epsilon(1e-12));
  }
}

TEST_CASE("nv_step") {
  const Point id = nv_step(0.0, 0.4, 0.2, 0.5, -0.3, fig1);
  CHECK(id.x == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(id.y == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS((void)nv_step(0.1, 0.0, 0.1, 0.0, 0.0, fig2), AdmissibilityError);

  SUBCASE("variance endpoint equals the composed flows given the same G") {
    for (double G : {-2.5, -0.1, 0.0, 1.3}) {
      const Point c = five_map(0.25, {0.0, 0.2}, 0.0, G, 0.0, fig1);
      CHECK(nv_step(0.25, 0.0, 0.2, 0.0, G, fig1).y == doctest::Approx(c.y).epsilon(1e-13));
    }
  }

  SUBCASE("same law as the five-map composition") {
    const double t = 0.5;
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
    auto close = [](double u, double v, double su, double sv) { return std::abs(u - v) < 4 * std::hypot(su, sv); };
    CHECK(close(xa.mean(), xb.mean(), xa.se_mean(), xb.se_mean()));
    CHECK(close(xa.var(), xb.var(), xa.se_var(), xb.se_var()));
    CHECK(close(ya.mean(), yb.mean(), ya.se_mean(), yb.se_mean()));
    CHECK(close(ya.var(), yb.var(), ya.se_var(), yb.se_var()));
  }

  SUBCASE("one-step martingale property at t = 1/8") {
    const double t = 0.125;
    RngStream s(23, 0);
    Sample e;
    for (int i = 0; i < 1'000'000; ++i) {
      const double N = s.normal(), G = s.normal();
      e.add(std::exp(nv_step(t, 0.0, 0.2, N, G, fig1).x - fig1.r * t));
    }
    CHECK(std::abs(e.mean() - 1.0) < 4 * e.se_mean() + 1e-4);
  }
}

TEST_CASE("NV variance step has local weak error O(t^3) on the first two moments") {
  // Closed-form moments of shift + decay (sqrt(inner) + vol G)^2 against the exact CIR moments.
  const HestonParams p{0.2, 1.0, 0.5, -0.7, 0.0};
  const double y = 0.2;
  std::vector<std::pair<double, double>> err_mean, err_m2;
  for (int k = 1; k <= 7; ++k) {
    const double t = std::ldexp(1.0, -k);
    const NvStep nv(t, p.a, p.b, p.sigma);
    const double inner = nv.shift + nv.decay * y;
    const double v2 = nv.vol * nv.vol;
    const double r2 = inner + v2;
    const double r4 = inner * inner + 6 * inner * v2 + 3 * v2 * v2;
    const double m1 = nv.shift + nv.decay * r2;
    const double m2 = nv.shift * nv.shift + 2 * nv.shift * nv.decay * r2 + nv.decay * nv.decay * r4;
    const CirMoments ex = cir_moments(y, t, p.a, p.b, p.sigma);
    err_mean.emplace_back(1.0 / t, std::abs(m1 - ex.mean));
    err_m2.emplace_back(1.0 / t, std::abs(m2 - (ex.variance + ex.mean * ex.mean)));
  }
  CHECK(regress_slope(err_mean).slope >= 2.7);
  CHECK(regress_slope(err_m2).slope >= 2.7);
}

TEST_CASE("NvStep clamps rounding-level negatives only") {
  HestonParams p{0.0, -1.0, 0.0001, 0.0, 0.0};  // a - sigma^2/4 < 0 with zero variance
  const NvStep nv(1.0, p.a, p.b, p.sigma);
  CHECK_THROWS_AS((void)nv.apply(0.0, 0.0), AdmissibilityError);
  const NvStep ok(0.1, 0.2, 1.0, 0.5);
  CHECK(ok.apply(0.0, -10.0) >= 0.0);
}

TEST_CASE("ex_step_x") {
  CHECK(ex_step_x(0.0, 0.7, 0.2, 1.5, 0.2, fig2) == 0.7);
  HestonParams p = fig2;
  for (double rho : {-1.0, 1.0}) {
    p.rho = rho;
    CHECK(ex_step_x(0.3, 0.0, 0.2, -2.0, 0.25, p) == ex_step_x(0.3, 0.0, 0.2, 3.0, 0.25, p));
  }
  // Direct evaluation of the conditional-Gaussian update.
  const double t = 0.2, y = 0.1, yn = 0.15, N = 0.4;
  const double ros = fig2.rho / fig2.sigma;
  const double expect = (fig2.r - ros * fig2.a) * t + ros * (yn - y) + (ros * fig2.b - 0.5) * (y + yn) / 2 * t +
                        std::sqrt((1 - fig2.rho * fig2.rho) * (y + yn) / 2 * t) * N;
  CHECK(ex_step_x(t, 0.0, y, N, yn, fig2) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("bernoulli_step_x") {
  CHECK(bernoulli_step_x(0.0, 0.7, 0.2, 1.5, true, 0.2, fig2) == 0.7);
  CHECK(bernoulli_step_x(0.0, 0.7, 0.2, 1.5, false, 0.2, fig2) == 0.7);

  // Averaged over B the mean of x' matches the Strang step on the same y_next stream.
  const double t = 0.5;
  RngStream sy(31, 0), sa(32, 0), sb(33, 0);
  Sample b, e;
  for (int i = 0; i < 1'000'000; ++i) {
    const double yn = ex_variance_step(t, 0.1, fig2, sy);
    b.add(bernoulli_step_x(t, 0.0, 0.1, sa.normal(), sa.bernoulli_half(), yn, fig2));
    e.add(ex_step_x(t, 0.0, 0.1, sb.normal(), yn, fig2));
  }
  CHECK(std::abs(b.mean() - e.mean()) < 4 * std::hypot(b.se_mean(), e.se_mean()));
}

TEST_CASE("terminal_one_step_x") {
  CHECK(terminal_one_step_x(0.3, 0.2, 0.2, 0.0, 1.0, fig1, 0.0) == 0.3);
  HestonParams p = fig1;
  p.rho = 0.0;
  p.r = 0.03;
  const double IY = 0.17, N = -0.8;
  CHECK(terminal_one_step_x(0.1, 0.2, 0.3, IY, N, p, 2.0) ==
        doctest::Approx(0.1 + 0.03 * 2.0 - IY / 2 + std::sqrt(IY) * N).epsilon(1e-14));
  CHECK_THROWS_AS((void)terminal_one_step_x(0.0, 0.2, 0.2, -1e-3, 0.0, fig1, 1.0), std::domain_error);
}

TEST_CASE("payoffs") {
  const GridSpec g{1.0, 4, std::nullopt};
  PathState s;
  s.x = std::log(100.0);
  CHECK(payoff_eval(Payoff::european_put(105), s, g) == doctest::Approx(5.0).epsilon(1e-13));
  s.x = std::log(110.0);
  CHECK(payoff_eval(Payoff::european_put(105), s, g) == 0.0);
  s.integral_I = 95.0;
  CHECK(payoff_eval(Payoff::asian_put(100), s, g) == doctest::Approx(5.0).epsilon(1e-13));
  for (double x : {3.0, 4.6, 5.0}) {
    s.x = x;
    CHECK(payoff_eval(Payoff::european_call(100), s, g) - payoff_eval(Payoff::european_put(100), s, g) ==
          doctest::Approx(std::exp(x) - 100.0).epsilon(1e-12));
  }
  PathState no_integral;
  CHECK_THROWS_AS((void)payoff_eval(Payoff::asian_put(100), no_integral, g), ConfigError);
}
