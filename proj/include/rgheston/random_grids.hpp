#pragma once
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include "rgheston/dynamics.hpp"
#include "rgheston/model.hpp"
#include "rgheston/sampling.hpp"

namespace rgheston {

enum class CouplingKind { Standard, VolAveraged, OneStep };

[[nodiscard]] std::string_view to_string(CouplingKind c) noexcept;
[[nodiscard]] CouplingKind parse_coupling(std::string_view name);

// Uniform index of the refined coarse step, in {0, ..., n-1}.
[[nodiscard]] int sample_kappa(int n, RngStream& stream);

// Coarse Gaussian on the refined step built from the n fine Gaussians.
// Standard: sum / sqrt(n). VolAveraged: sum sqrt(w_k) N_k / sqrt(sum w_k).
// All-zero weights fall back to Standard.
[[nodiscard]] double couple_weighted(CouplingKind kind, std::span<const double> fine_normals,
                                     std::span<const double> weights);

// Same with the weights y_{k-1} + y_k from the n+1 fine variances.
[[nodiscard]] double couple_coarse_gaussian(CouplingKind kind, std::span<const double> fine_normals,
                                            std::span<const double> fine_y);

[[nodiscard]] inline double trapezoid_update(double I, double x_prev, double x_next, double h) noexcept {
  return I + h * (std::exp(x_prev) + std::exp(x_next)) / 2.0;
}

// Variance statistics of the coarse payoff and of the correction term
// n (f(fine) - f(coarse)).
struct PilotStats {
  double sigma2_sq = 0.0;  // Var f(coarse)
  double V = 0.0;          // Var of the correction
  double Gamma = 0.0;      // Cov(f(coarse), correction)
  std::uint64_t pilot_size = 0;
};

struct SampleSizes {
  std::uint64_t M1 = 0;
  std::uint64_t M2 = 0;
  bool clamped = false;  // sigma2_sq + 2 Gamma < 0 was clamped to 0
};

// Cost-optimal (M1, M2) for a target standard deviation eps of the order-2
// estimator. M1 is raised to M2 when smaller, and M2 is at least 1.
[[nodiscard]] SampleSizes tune_sample_sizes(const PilotStats& stats, double eps);

struct EstimatorConfig {
  double T = 1.0;
  int n = 1;
  int order = 2;                       // 1: plain scheme, 2: random-grid boosted
  CouplingKind coupling = CouplingKind::Standard;
  double epsilon = 1e-2;               // target standard deviation of the estimator
  std::uint64_t pilot_size = 10'000;
  std::uint64_t seed = 1;
  unsigned workers = 0;                // 0 = hardware concurrency
  std::optional<std::uint64_t> fixed_M1;  // bypass tuning when both are set
  std::optional<std::uint64_t> fixed_M2;
};

struct RunReport {
  int n = 0;
  int order = 0;
  double estimate = 0.0;
  double half_width = 0.0;   // 95% confidence half-width
  std::uint64_t M1 = 0;      // samples in the coarse sum
  std::uint64_t M2 = 0;      // samples in the correction sum (first M2 of M1)
  SampleSizes tuned;         // output of tune_sample_sizes before the pilot floor
  PilotStats pilot;
  PilotStats final_stats;    // same quantities over the full run
  double wall_ms = 0.0;
};

[[nodiscard]] double half_width_95(const PilotStats& s, int order, std::uint64_t M1, std::uint64_t M2);

namespace detail {

enum class Slot : std::uint32_t { Coarse = 1, Fine = 2, Misc = 3 };

[[nodiscard]] inline std::uint32_t slot_id(Slot s, std::uint32_t index) noexcept {
  return static_cast<std::uint32_t>(s) << 24 | index;
}

// Streaming mean/co-moment accumulator (Welford, merged with Chan's formula).
struct Moments {
  std::uint64_t count = 0;
  double mean_a = 0.0, m2_a = 0.0;
  std::uint64_t pairs = 0;
  double pmean_a = 0.0, pm2_a = 0.0;
  double mean_c = 0.0, m2_c = 0.0, co_ac = 0.0;

  void add(double a) noexcept {
    ++count;
    const double d = a - mean_a;
    mean_a += d / static_cast<double>(count);
    m2_a += d * (a - mean_a);
  }
  void add_pair(double a, double c) noexcept {
    ++pairs;
    const double np = static_cast<double>(pairs);
    const double da = a - pmean_a;
    const double dc = c - mean_c;
    pmean_a += da / np;
    mean_c += dc / np;
    pm2_a += da * (a - pmean_a);
    m2_c += dc * (c - mean_c);
    co_ac += da * (c - mean_c);
  }
  void merge(const Moments& o) noexcept;
  [[nodiscard]] PilotStats stats() const noexcept;
};

}  // namespace detail

struct PairOutcome {
  PathState coarse;
  PathState fine;
  int kappa = 0;
};

// Simulates one Monte Carlo sample on the coarse grid, or on the coarse grid
// and the grid refined on the (kappa+1)-th step with shared noise.
//
// Noise of sample m is read from RngStream(seed, m) substreams keyed by the
// step index, so the two grids see the same numbers wherever they share a
// step and any sample can be regenerated in isolation.
template <class Dyn>
class RandomGridEngine {
public:
  using VarState = typename Dyn::VarState;

  RandomGridEngine(const Dyn& dyn, double T, int n, CouplingKind coupling, bool track_integral, std::uint64_t seed)
      : dyn_(dyn), n_(n), coupling_(coupling), track_integral_(track_integral), seed_(seed),
        coarse_(dyn_.prepare(T / n)), fine_(dyn_.prepare(T / (static_cast<double>(n) * n))),
        kicks_(n), fine_normals_(n), weights_(n), coarse_x_(n + 1), fine_x_(n + 1) {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (!(T > 0.0)) throw ConfigError("T must be > 0");
    if (coupling == CouplingKind::OneStep && track_integral)
      throw ConfigError("OneStep coupling only applies to terminal payoffs");
  }

  [[nodiscard]] int n() const noexcept { return n_; }

  PathState run_coarse(std::uint64_t sample) {
    const RngStream base(seed_, sample);
    Track t = start();
    coarse_x_[0] = t.x;
    StepKick kick;
    for (int k = 1; k <= n_; ++k) {
      RngStream st = base.substream(detail::slot_id(detail::Slot::Coarse, k));
      const VarState next = dyn_.advance(t.v, coarse_, st, kick);
      step(t, next, coarse_, kick, price_noise(st));
      coarse_x_[k] = t.x;
    }
    return finish(t, base);
  }

  PairOutcome run_pair(std::uint64_t sample, std::optional<int> kappa_override = std::nullopt) {
    const RngStream base(seed_, sample);
    int kappa;
    if (kappa_override) {
      kappa = *kappa_override;
    } else {
      RngStream ks = base.substream(detail::slot_id(detail::Slot::Misc, 0));
      kappa = sample_kappa(n_, ks);
    }

    Track c = start();
    coarse_x_[0] = c.x;
    StepKick kick;
    for (int k = 1; k <= kappa; ++k) {
      RngStream st = base.substream(detail::slot_id(detail::Slot::Coarse, k));
      const VarState next = dyn_.advance(c.v, coarse_, st, kick);
      step(c, next, coarse_, kick, price_noise(st));
      coarse_x_[k] = c.x;
    }
    for (int k = 0; k <= kappa; ++k) fine_x_[k] = coarse_x_[k];

    // Refined interval [kappa h1, (kappa+1) h1] on the fine path.
    Track f = c;
    for (int j = 1; j <= n_; ++j) {
      RngStream st = base.substream(detail::slot_id(detail::Slot::Fine, j));
      const VarState next = dyn_.advance(f.v, fine_, st, kicks_[j - 1]);
      weights_[j - 1] = dyn_.coupling_weight(f.v, next, fine_);
      fine_normals_[j - 1] = price_noise(st);
      step(f, next, fine_, kicks_[j - 1], fine_normals_[j - 1]);
    }
    fine_x_[kappa + 1] = f.x;

    // Same interval as one coarse step.
    {
      RngStream st = base.substream(detail::slot_id(detail::Slot::Coarse, kappa + 1));
      const VarState next = dyn_.advance_coupled(c.v, coarse_, std::span<const StepKick>(kicks_), f.v, st, kick);
      double N = 0.0;
      if (coupling_ != CouplingKind::OneStep) N = couple_weighted(coupling_, fine_normals_, weights_);
      step(c, next, coarse_, kick, N);
      coarse_x_[kappa + 1] = c.x;
    }

    // Both paths read the same stream from here on.
    StepKick kick_f;
    for (int k = kappa + 2; k <= n_; ++k) {
      const RngStream shared = base.substream(detail::slot_id(detail::Slot::Coarse, k));
      RngStream st_c = shared;
      const VarState next_c = dyn_.advance(c.v, coarse_, st_c, kick);
      step(c, next_c, coarse_, kick, price_noise(st_c));
      RngStream st_f = shared;
      const VarState next_f = dyn_.advance(f.v, coarse_, st_f, kick_f);
      step(f, next_f, coarse_, kick_f, price_noise(st_f));
      coarse_x_[k] = c.x;
      fine_x_[k] = f.x;
    }
    PairOutcome out{finish(c, base), finish(f, base), kappa};
    if (coupling_ == CouplingKind::OneStep) {
      coarse_x_[n_] = out.coarse.x;
      fine_x_[n_] = out.fine.x;
    }
    return out;
  }

  // Log-price at the coarse nodes of the last simulated sample. For OneStep
  // only the terminal entries are meaningful.
  [[nodiscard]] std::span<const double> coarse_nodes_x() const noexcept { return coarse_x_; }
  [[nodiscard]] std::span<const double> fine_nodes_x() const noexcept { return fine_x_; }

private:
  struct Track {
    VarState v;
    double x = 0.0;
    double I = 0.0;
    double IY = 0.0;
    double drift = 0.0;
    double var = 0.0;
  };

  Track start() const {
    Track t;
    t.v = dyn_.initial();
    t.x = dyn_.x0();
    return t;
  }

  // The price Gaussian of a step is drawn after the variance noise.
  double price_noise(RngStream& st) const {
    return coupling_ == CouplingKind::OneStep ? 0.0 : st.normal();
  }

  void step(Track& t, const VarState& next, const typename Dyn::Prepared& prep, const StepKick& kick, double N) const {
    const Increment inc = dyn_.increment(t.v, next, prep, kick);
    t.IY += prep.h * (dyn_.variance(t.v) + dyn_.variance(next)) / 2.0;
    t.drift += inc.drift;
    t.var += inc.variance;
    if (coupling_ != CouplingKind::OneStep) {
      const double x_next = apply_increment(t.x, inc, N);
      if (track_integral_) t.I = trapezoid_update(t.I, t.x, x_next, prep.h);
      t.x = x_next;
    }
    t.v = next;
  }

  PathState finish(const Track& t, const RngStream& base) const {
    PathState s;
    s.x = t.x;
    s.y = dyn_.variance(t.v);
    s.integral_IY = t.IY;
    if (track_integral_) s.integral_I = t.I;
    if (coupling_ == CouplingKind::OneStep) {
      RngStream ms = base.substream(detail::slot_id(detail::Slot::Misc, 1));
      s.x = dyn_.x0() + t.drift + std::sqrt(std::max(t.var, 0.0)) * ms.normal();
    }
    return s;
  }

  Dyn dyn_;
  int n_;
  CouplingKind coupling_;
  bool track_integral_;
  std::uint64_t seed_;
  typename Dyn::Prepared coarse_;
  typename Dyn::Prepared fine_;
  std::vector<StepKick> kicks_;
  std::vector<double> fine_normals_;
  std::vector<double> weights_;
  std::vector<double> coarse_x_;
  std::vector<double> fine_x_;
};

struct PairedPathResult {
  PathState coarse_terminal;
  PathState fine_terminal;
  int kappa = 0;
  std::vector<double> coarse_x;  // log-price at coarse nodes 0..n
  std::vector<double> fine_x;    // fine-path log-price at the same nodes
};

// One paired sample with explicit kappa (or a drawn one), for inspection.
template <class Dyn>
PairedPathResult simulate_pair(const Dyn& dyn, const GridSpec& grid, CouplingKind coupling, const Payoff& payoff,
                               std::uint64_t seed, std::uint64_t sample) {
  grid.validate();
  RandomGridEngine<Dyn> engine(dyn, grid.T, grid.n, coupling, payoff.needs_integral(), seed);
  const PairOutcome out = engine.run_pair(sample, grid.kappa);
  const auto cx = engine.coarse_nodes_x();
  const auto fx = engine.fine_nodes_x();
  return {out.coarse, out.fine, out.kappa, {cx.begin(), cx.end()}, {fx.begin(), fx.end()}};
}

namespace detail {

// Runs samples [begin, end) in fixed-size chunks; samples below `paired`
// also contribute to the correction sums. Chunks are merged in index order
// so the result does not depend on the number of workers.
template <class Dyn>
Moments accumulate(const Dyn& dyn, const EstimatorConfig& cfg, const Payoff& payoff, std::uint64_t begin,
                   std::uint64_t end, std::uint64_t paired) {
  constexpr std::uint64_t kChunk = 1u << 13;
  if (end <= begin) return {};
  const std::uint64_t chunks = (end - begin + kChunk - 1) / kChunk;
  std::vector<Moments> partial(chunks);
  std::atomic<std::uint64_t> next{0};
  const GridSpec grid{cfg.T, cfg.n, std::nullopt};
  const double weight = static_cast<double>(cfg.n);

  auto worker = [&]() {
    RandomGridEngine<Dyn> engine(dyn, cfg.T, cfg.n, cfg.coupling, payoff.needs_integral(), cfg.seed);
    for (std::uint64_t c = next++; c < chunks; c = next++) {
      Moments m;
      const std::uint64_t lo = begin + c * kChunk;
      const std::uint64_t hi = std::min(end, lo + kChunk);
      for (std::uint64_t s = lo; s < hi; ++s) {
        if (s < paired) {
          const PairOutcome out = engine.run_pair(s);
          const double fc = payoff_eval(payoff, out.coarse, grid);
          const double ff = payoff_eval(payoff, out.fine, grid);
          m.add(fc);
          m.add_pair(fc, weight * (ff - fc));
        } else {
          m.add(payoff_eval(payoff, engine.run_coarse(s), grid));
        }
      }
      partial[c] = m;
    }
  };

  unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, chunks));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  Moments total;
  for (const auto& m : partial) total.merge(m);
  return total;
}

void check_config(const EstimatorConfig& cfg, const Payoff& payoff);

}  // namespace detail

// Statistics of the coarse payoff and correction term over `samples` paired
// samples (the pilot of `estimate`, or a standalone variance measurement).
template <class Dyn>
PilotStats pilot_stats(const Dyn& dyn, const EstimatorConfig& cfg, const Payoff& payoff, std::uint64_t samples) {
  detail::check_config(cfg, payoff);
  const std::uint64_t paired = cfg.order == 2 ? samples : 0;
  PilotStats s = detail::accumulate(dyn, cfg, payoff, 0, samples, paired).stats();
  s.pilot_size = samples;
  return s;
}

// Monte Carlo estimator of order 1 (plain scheme on the coarse grid) or
// order 2 (coarse sum plus n-weighted correction on random grids). The first
// M2 samples feed both sums; pilot samples are the first samples of the run.
template <class Dyn>
RunReport estimate(const Dyn& dyn, const EstimatorConfig& cfg, const Payoff& payoff) {
  detail::check_config(cfg, payoff);
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  rep.n = cfg.n;
  rep.order = cfg.order;

  std::uint64_t M1, M2;
  if (cfg.fixed_M1 && cfg.fixed_M2) {
    M1 = *cfg.fixed_M1;
    M2 = cfg.order == 2 ? *cfg.fixed_M2 : 0;
    rep.tuned = {M1, M2, false};
  } else {
    const std::uint64_t P = std::max<std::uint64_t>(cfg.pilot_size, 2);
    rep.pilot = pilot_stats(dyn, cfg, payoff, P);
    if (cfg.order == 2) {
      rep.tuned = tune_sample_sizes(rep.pilot, cfg.epsilon);
    } else {
      const double m = std::ceil(rep.pilot.sigma2_sq / (cfg.epsilon * cfg.epsilon));
      rep.tuned = {static_cast<std::uint64_t>(m), 0, false};
    }
    M2 = cfg.order == 2 ? std::max({rep.tuned.M2, P, std::uint64_t{1}}) : 0;
    M1 = std::max({rep.tuned.M1, M2, P});
  }
  rep.M1 = M1;
  rep.M2 = M2;
  const detail::Moments m = detail::accumulate(dyn, cfg, payoff, 0, M1, M2);
  rep.final_stats = m.stats();
  rep.final_stats.pilot_size = M1;
  rep.estimate = m.mean_a + (cfg.order == 2 ? m.mean_c : 0.0);
  rep.half_width = half_width_95(rep.final_stats, cfg.order, M1, M2);
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

struct OrderPair {
  RunReport order1;
  RunReport order2;
};

// Order-1 and order-2 estimators at the same n from one simulation: the
// order-1 estimate is the coarse mean over its own first M1 samples, sized
// from the shared pilot. The coarse payoffs are common to both rows.
template <class Dyn>
OrderPair estimate_both_orders(const Dyn& dyn, EstimatorConfig cfg, const Payoff& payoff) {
  cfg.order = 2;
  detail::check_config(cfg, payoff);
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t P = std::max<std::uint64_t>(cfg.pilot_size, 2);
  const PilotStats pilot = pilot_stats(dyn, cfg, payoff, P);

  OrderPair out;
  RunReport& r1 = out.order1;
  RunReport& r2 = out.order2;
  r1.n = r2.n = cfg.n;
  r1.order = 1;
  r2.order = 2;
  r1.pilot = r2.pilot = pilot;
  const double e2 = cfg.epsilon * cfg.epsilon;
  r1.tuned = {static_cast<std::uint64_t>(std::ceil(pilot.sigma2_sq / e2)), 0, false};
  r2.tuned = tune_sample_sizes(pilot, cfg.epsilon);
  r1.M1 = std::max(r1.tuned.M1, P);
  r2.M2 = std::max(r2.tuned.M2, P);
  r2.M1 = std::max({r2.tuned.M1, r2.M2, P});

  // Prefix statistics at each breakpoint, merged in sample order.
  std::vector<std::uint64_t> cuts{0, r2.M2, r1.M1, r2.M1};
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  detail::Moments prefix;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    prefix.merge(detail::accumulate(dyn, cfg, payoff, cuts[i], cuts[i + 1], r2.M2));
    if (cuts[i + 1] == r1.M1) {
      r1.final_stats = prefix.stats();
      r1.estimate = prefix.mean_a;
    }
    if (cuts[i + 1] == r2.M1) {
      r2.final_stats = prefix.stats();
      r2.estimate = prefix.mean_a + prefix.mean_c;
    }
  }
  r1.final_stats.V = r1.final_stats.Gamma = 0.0;
  r1.final_stats.pilot_size = r1.M1;
  r2.final_stats.pilot_size = r2.M1;
  r1.half_width = half_width_95(r1.final_stats, 1, r1.M1, 0);
  r2.half_width = half_width_95(r2.final_stats, 2, r2.M1, r2.M2);
  r1.wall_ms = r2.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Convenience overload for the plain log-Heston model.
RunReport estimate(const HestonParams& p, SchemeKind scheme, Point start, const EstimatorConfig& cfg,
                   const Payoff& payoff);

}  // namespace rgheston
