#pragma once
#include <cmath>

#include "rgheston/model.hpp"
#include "rgheston/sampling.hpp"

namespace rgheston {

// Rounding slack tolerated under the inner square root of the NV step.
inline constexpr double kNvSqrtSlack = 1e-14;

// ---------------------------------------------------------------------------
// Elementary flows of the splitting L = L_B + L_0 + L_1.
// ---------------------------------------------------------------------------

// Exact flow of L_B over time t driven by N ~ N(0,1); y is frozen.
[[nodiscard]] Point phi_B(double t, double x, double y, double N, const HestonParams& p);

// Exact flow of the ODE attached to L_0. Requires sigma^2 <= 4a.
[[nodiscard]] Point phi_0(double t, double x, double y, const HestonParams& p);

// phi_1(w, .) solves the SDE attached to L_1 when w = W_t.
[[nodiscard]] Point phi_1(double w, double x, double y, const HestonParams& p);

// ---------------------------------------------------------------------------
// Conditional-Gaussian one-step maps. Given the variance endpoints, the
// log-price step is x + drift + sqrt(variance) * N.
// ---------------------------------------------------------------------------

// Noise of one step: N drives the price, G the NV volatility flow, B picks
// the splitting order of the Bernoulli variants.
struct StepNoise {
  double N = 0.0;
  double G = 0.0;
  bool B = false;
};

struct Increment {
  double drift = 0.0;
  double variance = 0.0;
};

[[nodiscard]] inline double log_price_drift(double t, double y, double y_next, const HestonParams& p) noexcept {
  const double ros = p.rho / p.sigma;
  return (p.r - ros * p.a) * t + ros * (y_next - y) + (ros * p.b - 0.5) * (0.5 * (y + y_next)) * t;
}

[[nodiscard]] inline Increment strang_increment(double t, double y, double y_next, const HestonParams& p) noexcept {
  return {log_price_drift(t, y, y_next, p), (1.0 - p.rho * p.rho) * (0.5 * (y + y_next)) * t};
}

// B in {0,1} picks which half of the splitting runs first.
[[nodiscard]] inline Increment bernoulli_increment(double t, double y, double y_next, bool B,
                                                   const HestonParams& p) noexcept {
  const double y_used = B ? y_next : y;
  return {log_price_drift(t, y, y_next, p), (1.0 - p.rho * p.rho) * y_used * t};
}

[[nodiscard]] inline double apply_increment(double x, const Increment& inc, double N) noexcept {
  return x + inc.drift + std::sqrt(inc.variance) * N;
}

// Precomputed constants of the NV variance step for a fixed step.
struct NvStep {
  double shift = 0.0;       // (a - sigma^2/4) psi_b(t/2)
  double decay = 1.0;       // e^{-bt/2}
  double vol = 0.0;         // sigma sqrt(t) / 2

  NvStep() = default;
  NvStep(double t, double a, double b, double sigma)
      : shift((a - 0.25 * sigma * sigma) * psi_b(b, 0.5 * t)), decay(std::exp(-0.5 * b * t)),
        vol(0.5 * sigma * std::sqrt(t)) {}

  double apply(double y, double G) const {
    double inner = shift + decay * y;
    if (inner < 0.0) {
      if (inner < -kNvSqrtSlack) throw AdmissibilityError("NV step: negative variance under the square root");
      inner = 0.0;
    }
    const double root = std::sqrt(inner) + vol * G;
    return shift + decay * root * root;
  }
};

// Variance part of the Ninomiya-Victoir step phi_0(t/2) o phi_1(sqrt(t) G) o phi_0(t/2).
[[nodiscard]] double nv_variance_step(double t, double y, double G, const HestonParams& p);

// Full NV step (x, y) -> (x', y') with the single Gaussian N for the price.
[[nodiscard]] Point nv_step(double t, double x, double y, double N, double G, const HestonParams& p);

// Log-price update of the Ex scheme once y_next has been drawn exactly.
[[nodiscard]] double ex_step_x(double t, double x, double y, double N, double y_next, const HestonParams& p);

// Log-price update of the Bernoulli-randomised composition.
[[nodiscard]] double bernoulli_step_x(double t, double x, double y, double N, bool B, double y_next,
                                      const HestonParams& p);

// Terminal log-price conditional on the whole variance path, summarised by
// its endpoints and the trapezoidal integrated variance IY.
[[nodiscard]] double terminal_one_step_x(double x, double y0, double yT, double IY, double N,
                                         const HestonParams& p, double T);

// Exact CIR draw for the variance of the Ex scheme.
[[nodiscard]] inline double ex_variance_step(double t, double y, const HestonParams& p, RngStream& stream) {
  return cir_exact_transition({y, t, p.a, p.b, p.sigma}, stream);
}

}  // namespace rgheston
