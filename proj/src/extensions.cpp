#include "rgheston/extensions.hpp"

#include <numeric>
#include <string>

namespace rgheston {

double ExpKernel::K0() const noexcept { return std::accumulate(gamma.begin(), gamma.end(), 0.0); }

void ExpKernel::validate() const {
  if (rho.empty() || rho.size() != gamma.size()) throw ConfigError("kernel needs d >= 1 matching nodes and weights");
  if (rho.size() > static_cast<std::size_t>(kMaxFactors))
    throw ConfigError("kernel has more than " + std::to_string(kMaxFactors) + " factors");
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (!(rho[k] >= 0.0) || !(gamma[k] >= 0.0)) throw ConfigError("kernel nodes and weights must be >= 0");
  }
  if (!(K0() > 0.0)) throw ConfigError("kernel K(0) must be > 0");
}

ExpKernel ExpKernel::bl2_h01_d3() {
  return {{0.08399474, 5.64850577, 118.00624702}, {0.80386099, 1.60786461, 8.80775525}};
}

double MultiFactorState::aggregate(const ExpKernel& kernel) const {
  double agg = y_base;
  for (std::size_t k = 0; k < yvec.size(); ++k) agg += kernel.gamma[k] * yvec[k];
  return agg;
}

std::pair<double, std::vector<double>> psi_1(double t, double x, std::span<const double> yvec,
                                             const ExpKernel& kernel) {
  if (yvec.size() != kernel.rho.size()) throw ConfigError("psi_1: factor count mismatch");
  std::vector<double> out(yvec.begin(), yvec.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= std::exp(-kernel.rho[k] * t);
  return {x, std::move(out)};
}

std::vector<double> lift_affine(std::span<const double> yvec, double y_prime_old, double z_new,
                                const ExpKernel& kernel) {
  const double shift = (z_new - y_prime_old) / kernel.K0();
  std::vector<double> out(yvec.begin(), yvec.end());
  for (auto& v : out) v += shift;
  return out;
}

MultiFactorDynamics::MultiFactorDynamics(const HestonParams& p, ExpKernel kernel, Point start)
    : kernel_(std::move(kernel)), start_(start) {
  kernel_.validate();
  K0_ = kernel_.K0();
  eff_ = {K0_ * p.a, K0_ * p.b, K0_ * p.sigma, p.rho, p.r};
  if (auto report = validate_params(eff_, SchemeKind::NV); !report)
    throw AdmissibilityError("multifactor NV step needs K(0) sigma^2 <= 4a: " + report.violated);
  if (!(start.y >= 0.0)) throw ConfigError("initial variance must be >= 0");
}

MultiFactorDynamics::Prepared MultiFactorDynamics::prepare(double h) const {
  Prepared prep;
  prep.h = h;
  prep.nv = NvStep(h, eff_.a, eff_.b, eff_.sigma);
  for (int k = 0; k < kernel_.d(); ++k) prep.half_decay[k] = std::exp(-kernel_.rho[k] * 0.5 * h);
  return prep;
}

MultiFactorDynamics::VarState MultiFactorDynamics::step_with(const VarState& s, const Prepared& prep,
                                                             double G) const {
  const int d = kernel_.d();
  VarState n = s;
  double agg = s.agg;
  for (int k = 0; k < d; ++k) {
    const double decayed = n.y[k] * prep.half_decay[k];
    agg += kernel_.gamma[k] * (decayed - n.y[k]);
    n.y[k] = decayed;
  }
  const double z = prep.nv.apply(agg, G);
  const double shift = (z - agg) / K0_;
  n.inner_from = agg;
  n.inner_to = z;
  agg = z;
  for (int k = 0; k < d; ++k) {
    const double lifted = n.y[k] + shift;
    const double decayed = lifted * prep.half_decay[k];
    agg += kernel_.gamma[k] * (decayed - lifted);
    n.y[k] = decayed;
  }
  n.agg = agg;
  return n;
}

MultiFactorState mf_step(double t, const MultiFactorState& state, const HestonParams& p, const ExpKernel& kernel,
                         const StepNoise& noise) {
  if (state.yvec.size() != kernel.rho.size()) throw ConfigError("mf_step: factor count mismatch");
  const double agg = state.aggregate(kernel);
  const MultiFactorDynamics dyn(p, kernel, {state.x, agg});
  MultiFactorDynamics::VarState s;
  std::copy(state.yvec.begin(), state.yvec.end(), s.y.begin());
  s.agg = s.inner_from = s.inner_to = agg;
  const auto prep = dyn.prepare(t);
  const auto next = dyn.step_with(s, prep, noise.G);
  MultiFactorState out;
  out.x = apply_increment(state.x, dyn.increment(s, next, prep, {}), noise.N);
  out.yvec.assign(next.y.begin(), next.y.begin() + kernel.d());
  out.y_base = state.y_base;
  return out;
}

double JumpSpec::mean_exp_minus_one() const {
  switch (law) {
    case JumpLaw::None: return 0.0;
    case JumpLaw::Normal: return std::expm1(mean + 0.5 * stdev * stdev);
    case JumpLaw::DoubleExponential:
      return p_up * eta_up / (eta_up - 1.0) + (1.0 - p_up) * eta_down / (eta_down + 1.0) - 1.0;
  }
  return 0.0;
}

double JumpSpec::draw_size(RngStream& rng) const {
  switch (law) {
    case JumpLaw::None: return 0.0;
    case JumpLaw::Normal: return mean + stdev * rng.normal();
    case JumpLaw::DoubleExponential: {
      const bool up = rng.uniform() < p_up;
      const double e = -std::log(rng.uniform());
      return up ? e / eta_up : -e / eta_down;
    }
  }
  return 0.0;
}

void GeneralModelSpec::validate() const {
  if (blocks.empty() || blocks.size() > static_cast<std::size_t>(kMaxBlocks))
    throw ConfigError("general model needs 1 to " + std::to_string(kMaxBlocks) + " variance blocks");
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    const auto& b = blocks[m];
    const std::string tag = "block " + std::to_string(m) + ": ";
    if (!(b.a >= 0.0)) throw ConfigError(tag + "a >= 0");
    if (!(b.sigma > 0.0)) throw ConfigError(tag + "sigma > 0");
    if (!(b.rho >= -1.0 && b.rho <= 1.0)) throw ConfigError(tag + "rho in [-1, 1]");
    if (!(b.y0 >= 0.0)) throw ConfigError(tag + "y0 >= 0");
    if (!std::isfinite(b.b)) throw ConfigError(tag + "b finite");
  }
  if (!(jumps.intensity >= 0.0)) throw ConfigError("jump intensity must be >= 0");
  if (jumps.intensity > 0.0) {
    switch (jumps.law) {
      case JumpLaw::None: throw ConfigError("jump law unset with positive intensity");
      case JumpLaw::Normal:
        if (!(jumps.stdev >= 0.0)) throw ConfigError("normal jump stdev must be >= 0");
        break;
      case JumpLaw::DoubleExponential:
        if (!(jumps.p_up >= 0.0 && jumps.p_up <= 1.0)) throw ConfigError("p_up must lie in [0, 1]");
        if (!(jumps.eta_up > 0.0) || !(jumps.eta_down > 0.0)) throw ConfigError("exponential rates must be > 0");
        if (jumps.compensate && jumps.p_up > 0.0 && !(jumps.eta_up > 1.0))
          throw ConfigError("compensated double-exponential jumps need eta_up > 1");
        break;
    }
  }
  if (rate.kind == RateKind::Cir) {
    if (!(rate.sigma > 0.0) || !(rate.a >= 0.0) || !(rate.r0 >= 0.0))
      throw ConfigError("CIR rate needs sigma > 0, a >= 0, r0 >= 0");
  }
}

GeneralModelSpec GeneralModelSpec::heston(const HestonParams& p, Point start) {
  GeneralModelSpec spec;
  spec.blocks = {{p.a, p.b, p.sigma, p.rho, start.y}};
  spec.rate = {RateKind::Constant, p.r, 0.0, 0.0, 0.0};
  spec.x0 = start.x;
  return spec;
}

Increment gen_increment(double h, std::span<const double> y_prev, std::span<const double> y_next, double r_prev,
                        double r_next, double dH, const GeneralModelSpec& spec) noexcept {
  double drift_rate = 0.5 * (r_prev + r_next);
  for (const auto& b : spec.blocks) drift_rate -= b.rho / b.sigma * b.a;
  Increment inc;
  inc.drift = drift_rate * h;
  for (std::size_t m = 0; m < spec.blocks.size(); ++m) {
    const auto& b = spec.blocks[m];
    const double ros = b.rho / b.sigma;
    const double avg = 0.5 * (y_prev[m] + y_next[m]);
    inc.drift += ros * (y_next[m] - y_prev[m]);
    inc.drift += (ros * b.b - 0.5) * avg * h;
    inc.variance += (1.0 - b.rho * b.rho) * avg * h;
  }
  if (spec.jumps.intensity > 0.0) {
    inc.drift += dH;
    if (spec.jumps.compensate) inc.drift -= spec.jumps.intensity * spec.jumps.mean_exp_minus_one() * h;
  }
  return inc;
}

double gen_step(double h, double x, std::span<const double> y_prev, std::span<const double> y_next, double r_prev,
                double r_next, double dH, const GeneralModelSpec& spec, double N) {
  if (y_prev.size() != spec.blocks.size() || y_next.size() != spec.blocks.size())
    throw ConfigError("gen_step: one variance per block expected");
  return apply_increment(x, gen_increment(h, y_prev, y_next, r_prev, r_next, dH, spec), N);
}

GeneralDynamics::GeneralDynamics(GeneralModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  m_ = spec_.blocks.size();
  for (std::size_t m = 0; m < m_; ++m) use_nv_[m] = spec_.blocks[m].nv_admissible();
}

GeneralDynamics::VarState GeneralDynamics::initial() const noexcept {
  VarState s;
  for (std::size_t m = 0; m < m_; ++m) s.y[m] = spec_.blocks[m].y0;
  s.r = spec_.rate.r0;
  return s;
}

double GeneralDynamics::variance(const VarState& s) const noexcept {
  double v = 0.0;
  for (std::size_t m = 0; m < m_; ++m) v += s.y[m];
  return v;
}

GeneralDynamics::Prepared GeneralDynamics::prepare(double h) const {
  Prepared prep;
  prep.h = h;
  for (std::size_t m = 0; m < m_; ++m) {
    const auto& b = spec_.blocks[m];
    if (use_nv_[m]) prep.nv[m] = NvStep(h, b.a, b.b, b.sigma);
    else prep.cir[m] = CirStep(h, b.a, b.b, b.sigma);
  }
  if (spec_.rate.kind == RateKind::Cir) prep.rate = CirStep(h, spec_.rate.a, spec_.rate.b, spec_.rate.sigma);
  prep.jump_mean = spec_.jumps.intensity * h;
  return prep;
}

GeneralDynamics::VarState GeneralDynamics::advance(const VarState& s, const Prepared& prep, RngStream& rng,
                                                   StepKick& kick) const {
  VarState n = s;
  for (std::size_t m = 0; m < m_; ++m) {
    if (use_nv_[m]) {
      kick.gauss[m] = rng.normal();
      n.y[m] = prep.nv[m].apply(s.y[m], kick.gauss[m]);
    } else {
      n.y[m] = prep.cir[m].draw(s.y[m], rng);
    }
  }
  if (spec_.rate.kind == RateKind::Cir) n.r = prep.rate.draw(s.r, rng);
  if (prep.jump_mean > 0.0) {
    const std::uint64_t count = draw_poisson(prep.jump_mean, rng);
    for (std::uint64_t i = 0; i < count; ++i) n.H += spec_.jumps.draw_size(rng);
  }
  return n;
}

GeneralDynamics::VarState GeneralDynamics::advance_coupled(const VarState& s, const Prepared& prep,
                                                           std::span<const StepKick> fine, const VarState& fine_end,
                                                           RngStream&, StepKick& kick) const {
  VarState n = fine_end;
  const double scale = 1.0 / std::sqrt(static_cast<double>(fine.size()));
  for (std::size_t m = 0; m < m_; ++m) {
    if (!use_nv_[m]) continue;
    double sum = 0.0;
    for (const auto& k : fine) sum += k.gauss[m];
    kick.gauss[m] = sum * scale;
    n.y[m] = prep.nv[m].apply(s.y[m], kick.gauss[m]);
  }
  return n;
}

double GeneralDynamics::coupling_weight(const VarState& from, const VarState& to, const Prepared&) const noexcept {
  double w = 0.0;
  for (std::size_t m = 0; m < m_; ++m) {
    const double rho = spec_.blocks[m].rho;
    w += (1.0 - rho * rho) * (from.y[m] + to.y[m]);
  }
  return w;
}

}  // namespace rgheston
