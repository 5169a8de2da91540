#include "rgheston/sampling.hpp"

#include <cmath>
#include <limits>

namespace rgheston {

namespace {

// Thread-safe log-gamma for positive arguments.
double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double gamma_shape_ge1(double shape, RngStream& stream) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = stream.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::uint64_t poisson_ptrs(double mean, RngStream& stream) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double U = stream.uniform() - 0.5;
    const double V = stream.uniform();
    const double us = 0.5 - std::fabs(U);
    const double k = std::floor((2.0 * a / us + b) * U + mean + 0.43);
    if (us >= 0.07 && V <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && V > us)) continue;
    if (std::log(V) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - log_gamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

double draw_gamma(double shape, double scale, RngStream& stream) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw std::domain_error("draw_gamma: shape and scale must be > 0");
  if (shape >= 1.0) return scale * gamma_shape_ge1(shape, stream);
  const double g = gamma_shape_ge1(shape + 1.0, stream);
  return scale * g * std::pow(stream.uniform(), 1.0 / shape);
}

std::uint64_t draw_poisson(double mean, RngStream& stream) {
  if (!(mean >= 0.0)) throw std::domain_error("draw_poisson: mean must be >= 0");
  if (mean == 0.0) return 0;
  if (mean >= 10.0) return poisson_ptrs(mean, stream);
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double prod = stream.uniform();
  while (prod > limit) {
    ++k;
    prod *= stream.uniform();
  }
  return k;
}

double cir_exact_transition(const CirTransitionParams& p, RngStream& stream) {
  if (!(p.t > 0.0)) throw std::domain_error("cir_exact_transition: t must be > 0");
  if (!(p.sigma > 0.0)) throw std::domain_error("cir_exact_transition: sigma must be > 0");
  if (!(p.y0 >= 0.0) || !(p.a >= 0.0)) throw std::domain_error("cir_exact_transition: y0 and a must be >= 0");
  return CirStep(p.t, p.a, p.b, p.sigma).draw(p.y0, stream);
}

}  // namespace rgheston
