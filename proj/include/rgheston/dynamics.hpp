#pragma once
#include <array>
#include <cmath>
#include <span>

#include "rgheston/model.hpp"
#include "rgheston/sampling.hpp"
#include "rgheston/schemes.hpp"

namespace rgheston {

// Upper bound on independent variance blocks carried by one step.
inline constexpr int kMaxBlocks = 8;

// Noise consumed by one variance step that the coupled coarse step on the
// refined interval has to see: the NV volatility Gaussians (one per block)
// and the Bernoulli ordering flag.
struct StepKick {
  std::array<double, kMaxBlocks> gauss{};
  bool bernoulli = false;
};

// Plain log-Heston model under one of the four one-step schemes.
//
// A dynamics type exposes the variance-side of a scheme to the random-grid
// engine: `advance` draws one variance step, `advance_coupled` produces the
// coarse step over the refined interval from the fine sub-path, and
// `increment` returns the conditional drift/variance of the log-price step.
class HestonDynamics {
public:
  struct VarState {
    double y = 0.0;
  };
  struct Prepared {
    double h = 0.0;
    NvStep nv;
    CirStep cir;
  };

  HestonDynamics(const HestonParams& p, SchemeKind scheme, Point start) : p_(p), scheme_(scheme), start_(start) {
    if (auto report = validate_params(p, scheme); !report) throw AdmissibilityError(report.violated);
    if (!(start.y >= 0.0)) throw ConfigError("initial variance must be >= 0");
  }

  [[nodiscard]] const HestonParams& params() const noexcept { return p_; }
  [[nodiscard]] SchemeKind scheme() const noexcept { return scheme_; }
  [[nodiscard]] double x0() const noexcept { return start_.x; }
  [[nodiscard]] VarState initial() const noexcept { return {start_.y}; }
  [[nodiscard]] double variance(const VarState& s) const noexcept { return s.y; }

  [[nodiscard]] Prepared prepare(double h) const {
    Prepared prep;
    prep.h = h;
    if (uses_nv(scheme_)) prep.nv = NvStep(h, p_.a, p_.b, p_.sigma);
    else prep.cir = CirStep(h, p_.a, p_.b, p_.sigma);
    return prep;
  }

  VarState advance(const VarState& s, const Prepared& prep, RngStream& rng, StepKick& kick) const {
    double y;
    if (uses_nv(scheme_)) {
      kick.gauss[0] = rng.normal();
      y = prep.nv.apply(s.y, kick.gauss[0]);
    } else {
      y = prep.cir.draw(s.y, rng);
    }
    if (uses_bernoulli(scheme_)) kick.bernoulli = rng.bernoulli_half();
    return {y};
  }

  VarState advance_coupled(const VarState& s, const Prepared& prep, std::span<const StepKick> fine,
                           const VarState& fine_end, RngStream& rng, StepKick& kick) const {
    double y;
    if (uses_nv(scheme_)) {
      double sum = 0.0;
      for (const auto& k : fine) sum += k.gauss[0];
      kick.gauss[0] = sum / std::sqrt(static_cast<double>(fine.size()));
      y = prep.nv.apply(s.y, kick.gauss[0]);
    } else {
      y = fine_end.y;
    }
    if (uses_bernoulli(scheme_)) kick.bernoulli = rng.bernoulli_half();
    return {y};
  }

  [[nodiscard]] Increment increment(const VarState& from, const VarState& to, const Prepared& prep,
                                    const StepKick& kick) const noexcept {
    if (uses_bernoulli(scheme_)) return bernoulli_increment(prep.h, from.y, to.y, kick.bernoulli, p_);
    return strang_increment(prep.h, from.y, to.y, p_);
  }

  // Weight of a fine step in the volatility-averaged coupling.
  [[nodiscard]] double coupling_weight(const VarState& from, const VarState& to, const Prepared&) const noexcept {
    return from.y + to.y;
  }

private:
  HestonParams p_;
  SchemeKind scheme_;
  Point start_;
};

}  // namespace rgheston
