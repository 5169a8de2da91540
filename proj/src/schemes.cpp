#include "rgheston/schemes.hpp"

#include <cassert>
#include <cmath>

namespace rgheston {

namespace {

void require_nv(const HestonParams& p) {
  if (!p.nv_admissible()) throw AdmissibilityError("NV flow requires sigma^2 <= 4a");
}

}  // namespace

Point phi_B(double t, double x, double y, double N, const HestonParams& p) {
  const double x_next = x + (p.r - p.rho * p.a / p.sigma) * t - (0.5 - p.rho * p.b / p.sigma) * y * t +
                        std::sqrt((1.0 - p.rho * p.rho) * t * y) * N;
  return {x_next, y};
}

Point phi_0(double t, double x, double y, const HestonParams& p) {
  require_nv(p);
  const double psi = psi_b(p.b, t);
  const double shift = p.a - 0.25 * p.sigma * p.sigma;
  const double ros = p.rho / p.sigma;
  return {x - ros * p.b * psi * y + ros * psi * shift, std::exp(-p.b * t) * y + psi * shift};
}

Point phi_1(double w, double x, double y, const HestonParams& p) {
  const double root = std::sqrt(y) + 0.5 * p.sigma * w;
  const double y_next = root * root;
  return {x + p.rho / p.sigma * (y_next - y), y_next};
}

double nv_variance_step(double t, double y, double G, const HestonParams& p) {
  return NvStep(t, p.a, p.b, p.sigma).apply(y, G);
}

Point nv_step(double t, double x, double y, double N, double G, const HestonParams& p) {
  require_nv(p);
  const double y_next = nv_variance_step(t, y, G, p);
  return {apply_increment(x, strang_increment(t, y, y_next, p), N), y_next};
}

double ex_step_x(double t, double x, double y, double N, double y_next, const HestonParams& p) {
  return apply_increment(x, strang_increment(t, y, y_next, p), N);
}

double bernoulli_step_x(double t, double x, double y, double N, bool B, double y_next, const HestonParams& p) {
  return apply_increment(x, bernoulli_increment(t, y, y_next, B, p), N);
}

double terminal_one_step_x(double x, double y0, double yT, double IY, double N, const HestonParams& p, double T) {
  if (IY < 0.0) throw std::domain_error("terminal_one_step_x: integrated variance must be >= 0");
  const double ros = p.rho / p.sigma;
  return x + (p.r - ros * p.a) * T + ros * (yT - y0) + (ros * p.b - 0.5) * IY +
         std::sqrt((1.0 - p.rho * p.rho) * IY) * N;
}

}  // namespace rgheston
