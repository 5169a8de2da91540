#pragma once
#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "rgheston/dynamics.hpp"
#include "rgheston/model.hpp"
#include "rgheston/sampling.hpp"
#include "rgheston/schemes.hpp"

namespace rgheston {

inline constexpr int kMaxFactors = 16;

// ---------------------------------------------------------------------------
// Multifactor Heston: the variance is y_base + sum_k gamma_k Y^k with
//   dY^k = -rho_k Y^k dt + (a - b Y) dt + sigma sqrt(Y) dW,  Y^k_0 = 0.
// ---------------------------------------------------------------------------

// Kernel K(t) = sum_k gamma_k exp(-rho_k t).
struct ExpKernel {
  std::vector<double> rho;
  std::vector<double> gamma;

  [[nodiscard]] int d() const noexcept { return static_cast<int>(rho.size()); }
  [[nodiscard]] double K0() const noexcept;
  void validate() const;

  // Three-factor L2-optimised approximation of the fractional kernel, H = 0.1.
  static ExpKernel bl2_h01_d3();
  static ExpKernel trivial() { return {{0.0}, {1.0}}; }
};

struct MultiFactorState {
  double x = 0.0;
  std::vector<double> yvec;
  double y_base = 0.0;

  [[nodiscard]] double aggregate(const ExpKernel& kernel) const;
};

// Exact flow of the linear part: y_k -> y_k exp(-rho_k t); x is unchanged.
[[nodiscard]] std::pair<double, std::vector<double>> psi_1(double t, double x, std::span<const double> yvec,
                                                           const ExpKernel& kernel);

// Spreads the change z_new - y_prime_old of the aggregate evenly on the
// factors so that the new aggregate equals z_new.
[[nodiscard]] std::vector<double> lift_affine(std::span<const double> yvec, double y_prime_old, double z_new,
                                              const ExpKernel& kernel);

// Strang step psi_1(t/2), NV step of the aggregate with coefficients
// K0 (a, b, sigma), lift, psi_1(t/2). Uses noise.N and noise.G.
[[nodiscard]] MultiFactorState mf_step(double t, const MultiFactorState& state, const HestonParams& p,
                                       const ExpKernel& kernel, const StepNoise& noise);

class MultiFactorDynamics {
public:
  struct VarState {
    std::array<double, kMaxFactors> y{};
    double agg = 0.0;         // y_base + sum gamma_k y_k, tracked incrementally
    double inner_from = 0.0;  // aggregate before and after the inner NV step
    double inner_to = 0.0;
  };
  struct Prepared {
    double h = 0.0;
    NvStep nv;
    std::array<double, kMaxFactors> half_decay{};  // exp(-rho_k h / 2)
  };

  MultiFactorDynamics(const HestonParams& p, ExpKernel kernel, Point start);

  [[nodiscard]] const HestonParams& effective_params() const noexcept { return eff_; }
  [[nodiscard]] const ExpKernel& kernel() const noexcept { return kernel_; }
  [[nodiscard]] double x0() const noexcept { return start_.x; }
  [[nodiscard]] VarState initial() const noexcept {
    VarState s;
    s.agg = s.inner_from = s.inner_to = start_.y;
    return s;
  }
  [[nodiscard]] double variance(const VarState& s) const noexcept { return s.agg; }

  [[nodiscard]] Prepared prepare(double h) const;

  VarState step_with(const VarState& s, const Prepared& prep, double G) const;

  VarState advance(const VarState& s, const Prepared& prep, RngStream& rng, StepKick& kick) const {
    kick.gauss[0] = rng.normal();
    return step_with(s, prep, kick.gauss[0]);
  }

  VarState advance_coupled(const VarState& s, const Prepared& prep, std::span<const StepKick> fine, const VarState&,
                           RngStream&, StepKick& kick) const {
    double sum = 0.0;
    for (const auto& k : fine) sum += k.gauss[0];
    kick.gauss[0] = sum / std::sqrt(static_cast<double>(fine.size()));
    return step_with(s, prep, kick.gauss[0]);
  }

  // The price only moves during the inner step, driven by the aggregate.
  [[nodiscard]] Increment increment(const VarState&, const VarState& to, const Prepared& prep,
                                    const StepKick&) const noexcept {
    return strang_increment(prep.h, to.inner_from, to.inner_to, eff_);
  }

  [[nodiscard]] double coupling_weight(const VarState&, const VarState& to, const Prepared&) const noexcept {
    return to.inner_from + to.inner_to;
  }

private:
  HestonParams eff_;
  ExpKernel kernel_;
  Point start_;
  double K0_ = 1.0;
};

// ---------------------------------------------------------------------------
// Generalized model: M independent Heston variance blocks, a compound
// Poisson jump part H and a constant or CIR short rate, all independent.
// ---------------------------------------------------------------------------

struct HestonBlock {
  double a = 0.0;
  double b = 0.0;
  double sigma = 1.0;
  double rho = 0.0;
  double y0 = 0.0;

  [[nodiscard]] bool nv_admissible() const noexcept { return sigma * sigma <= 4.0 * a; }
};

enum class JumpLaw { None, Normal, DoubleExponential };

struct JumpSpec {
  JumpLaw law = JumpLaw::None;
  double intensity = 0.0;
  double mean = 0.0;     // Normal: jump mean
  double stdev = 0.0;    // Normal: jump standard deviation
  double p_up = 0.5;     // DoubleExponential: probability of an upward jump
  double eta_up = 1.0;   // rate of the upward exponential (> 1 for a finite E[e^J])
  double eta_down = 1.0; // rate of the downward exponential
  bool compensate = true;  // subtract intensity * (E[e^J] - 1) from the drift

  [[nodiscard]] double mean_exp_minus_one() const;
  double draw_size(RngStream& rng) const;
};

enum class RateKind { Constant, Cir };

struct RateSpec {
  RateKind kind = RateKind::Constant;
  double r0 = 0.0;
  double a = 0.0;
  double b = 0.0;
  double sigma = 0.0;
};

struct GeneralModelSpec {
  std::vector<HestonBlock> blocks;
  JumpSpec jumps;
  RateSpec rate;
  double x0 = 0.0;

  void validate() const;
  static GeneralModelSpec heston(const HestonParams& p, Point start);
};

// Log-price update over one step of length h given the block variances at
// both ends, the rate at both ends and the jump increment dH.
[[nodiscard]] Increment gen_increment(double h, std::span<const double> y_prev, std::span<const double> y_next,
                                      double r_prev, double r_next, double dH, const GeneralModelSpec& spec) noexcept;

[[nodiscard]] double gen_step(double h, double x, std::span<const double> y_prev, std::span<const double> y_next,
                              double r_prev, double r_next, double dH, const GeneralModelSpec& spec, double N);

class GeneralDynamics {
public:
  struct VarState {
    std::array<double, kMaxBlocks> y{};
    double r = 0.0;
    double H = 0.0;  // cumulative jumps
  };
  struct Prepared {
    double h = 0.0;
    std::array<NvStep, kMaxBlocks> nv{};
    std::array<CirStep, kMaxBlocks> cir{};
    CirStep rate;
    double jump_mean = 0.0;  // intensity * h
  };

  explicit GeneralDynamics(GeneralModelSpec spec);

  [[nodiscard]] const GeneralModelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] double x0() const noexcept { return spec_.x0; }
  [[nodiscard]] VarState initial() const noexcept;
  [[nodiscard]] double variance(const VarState& s) const noexcept;
  [[nodiscard]] Prepared prepare(double h) const;

  VarState advance(const VarState& s, const Prepared& prep, RngStream& rng, StepKick& kick) const;
  VarState advance_coupled(const VarState& s, const Prepared& prep, std::span<const StepKick> fine,
                           const VarState& fine_end, RngStream& rng, StepKick& kick) const;

  [[nodiscard]] Increment increment(const VarState& from, const VarState& to, const Prepared& prep,
                                    const StepKick&) const noexcept {
    return gen_increment(prep.h, std::span(from.y).first(m_), std::span(to.y).first(m_), from.r, to.r, to.H - from.H,
                         spec_);
  }

  [[nodiscard]] double coupling_weight(const VarState& from, const VarState& to, const Prepared&) const noexcept;

private:
  GeneralModelSpec spec_;
  std::size_t m_ = 0;
  std::array<bool, kMaxBlocks> use_nv_{};
};

}  // namespace rgheston
