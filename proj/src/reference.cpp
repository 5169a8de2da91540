#include "rgheston/reference.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rgheston/sampling.hpp"

namespace rgheston {

namespace {

// exp(z) - 1 without cancellation near z = 0.
cplx cexpm1(cplx z) {
  const double x = z.real(), y = z.imag();
  const double s = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

// log(1 + w) without cancellation near w = 0.
cplx clog1p(cplx w) {
  const double x = w.real(), y = w.imag();
  return {0.5 * std::log1p(x * (2.0 + x) + y * y), std::atan2(y, 1.0 + x)};
}

}  // namespace

cplx heston_char_fn(cplx u, const HestonParams& p, double T, double x0, double y0) {
  const cplx i{0.0, 1.0};
  const double s2 = p.sigma * p.sigma;
  const cplx iu = i * u;
  const cplx beta = p.b - p.rho * p.sigma * iu;
  const cplx d = std::sqrt(beta * beta + s2 * (iu + u * u));
  const cplx bd = beta + d;
  if (std::abs(bd) == 0.0) return std::exp(iu * (x0 + p.r * T));
  const cplx q = -(iu + u * u) / bd;  // (beta - d) / sigma^2
  const cplx g = s2 * q / bd;          // (beta - d) / (beta + d)
  const cplx one_minus_e = -cexpm1(-d * T);
  const cplx e = 1.0 - one_minus_e;
  const cplx w = g * one_minus_e / (1.0 - g);
  const cplx C = p.a * (q * T - 2.0 * clog1p(w) / s2);
  const cplx D = q * one_minus_e / (1.0 - g * e);
  return std::exp(iu * (x0 + p.r * T) + C + D * y0);
}

PriceResult european_price_cf(const HestonParams& p, Point start, double T, double K, OptionKind kind,
                              const QuadratureSpec& quad) {
  if (!(T > 0.0)) throw ConfigError("european_price_cf: T must be > 0");
  if (!(K >= 0.0)) throw ConfigError("european_price_cf: K must be >= 0");
  if (!(quad.abs_tolerance > 0.0)) throw ConfigError("european_price_cf: tolerance must be > 0");
  const double S0 = std::exp(start.x);
  const double disc_K = K * std::exp(-p.r * T);
  double call = S0;
  double err = 0.0;
  if (disc_K > 0.0) {
    HestonParams q = p;
    q.r = 0.0;
    const double ell = std::log(disc_K / S0);
    auto integrand = [&](double u) {
      const cplx phi = heston_char_fn(cplx(u, -0.5), q, T, 0.0, start.y);
      return (std::exp(cplx(0.0, -u * ell)) * phi).real() / (u * u + 0.25);
    };
    double l1 = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, 0.0, std::numeric_limits<double>::infinity(), quad.max_depth, 1e-14, &err, &l1);
    const double scale = std::exp(0.5 * ell) / std::numbers::pi;
    err *= scale;
    if (!std::isfinite(integral) || err > quad.abs_tolerance) {
      std::ostringstream os;
      os << "european_price_cf: quadrature did not converge (error estimate " << err << ", tolerance "
         << quad.abs_tolerance << ", L1 norm " << l1 << ")";
      throw NumericFailure(os.str());
    }
    call = S0 * (1.0 - scale * integral);
    err *= S0;
  }
  const double price = kind == OptionKind::call ? call : call - S0 + disc_K;
  return {price, err};
}

CirMoments cir_moments(double y0, double t, double a, double b, double sigma) {
  const double psi = psi_b(b, t);
  const double decay = std::exp(-b * t);
  const double s2 = sigma * sigma;
  return {y0 * decay + a * psi, y0 * s2 * decay * psi + 0.5 * a * s2 * psi * psi};
}

SlopeFit regress_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw ConfigError("regress_slope: at least 3 points are needed");
  SlopeFit fit;
  for (const auto& [n, err] : points) {
    if (!(n > 0.0)) throw ConfigError("regress_slope: n must be > 0");
    if (err > 0.0 && std::isfinite(err)) {
      fit.used.emplace_back(n, err);
    } else {
      fit.dropped.push_back(n);
      std::ostringstream os;
      os << "dropped n=" << n << ": non-positive error " << err;
      fit.warnings.push_back(os.str());
    }
  }
  if (fit.used.size() < 2) throw NumericFailure("regress_slope: fewer than 2 usable points");
  double mx = 0.0, my = 0.0;
  for (const auto& [n, err] : fit.used) {
    mx += -std::log(n);
    my += std::log(err);
  }
  const double m = static_cast<double>(fit.used.size());
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, err] : fit.used) {
    const double dx = -std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(err) - my);
  }
  if (!(sxx > 0.0)) throw NumericFailure("regress_slope: all n are equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

std::vector<std::pair<double, double>> self_difference_errors(const std::map<int, double>& estimates) {
  std::vector<std::pair<double, double>> out;
  for (const auto& [n, v] : estimates) {
    const auto it = estimates.find(2 * n);
    if (it == estimates.end()) continue;
    out.emplace_back(static_cast<double>(n), std::abs(it->second - v));
  }
  return out;
}

}  // namespace rgheston
