#pragma once
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rgheston/model.hpp"

namespace rgheston {

using cplx = std::complex<double>;

// E[exp(i u X_T)] for the log-Heston model started at (x0, y0). u may be
// complex; the formulation avoids the branch cut of the complex logarithm.
[[nodiscard]] cplx heston_char_fn(cplx u, const HestonParams& p, double T, double x0, double y0);

struct QuadratureSpec {
  double abs_tolerance = 1e-8;  // on the price divided by the spot
  unsigned max_depth = 20;      // adaptive Gauss-Kronrod bisections
};

enum class OptionKind { put, call };

struct PriceResult {
  double price = 0.0;
  double error_estimate = 0.0;  // quadrature error estimate, in price units
};

// European option price by Fourier inversion of the characteristic function
// (call from a single real integral, put from parity).
[[nodiscard]] PriceResult european_price_cf(const HestonParams& p, Point start, double T, double K, OptionKind kind,
                                            const QuadratureSpec& quad = {});

struct CirMoments {
  double mean = 0.0;
  double variance = 0.0;
};

[[nodiscard]] CirMoments cir_moments(double y0, double t, double a, double b, double sigma);

struct SlopeFit {
  double slope = 0.0;      // of log(error) against log(1/n)
  double intercept = 0.0;
  std::vector<std::pair<double, double>> used;
  std::vector<double> dropped;  // n values whose error was not positive
  std::vector<std::string> warnings;
};

[[nodiscard]] SlopeFit regress_slope(const std::vector<std::pair<double, double>>& points);

// |v(2n) - v(n)| for every n whose double is also present.
[[nodiscard]] std::vector<std::pair<double, double>> self_difference_errors(const std::map<int, double>& estimates);

}  // namespace rgheston
