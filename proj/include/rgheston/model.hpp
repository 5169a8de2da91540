#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "rgheston/errors.hpp"

namespace rgheston {

// Coefficients of the log-Heston SDE
//   dX = (r - Y/2) dt + sqrt(Y) (rho dW + sqrt(1 - rho^2) dB)
//   dY = (a - b Y) dt + sigma sqrt(Y) dW
// b may take any sign.
struct HestonParams {
  double a = 0.0;
  double b = 0.0;
  double sigma = 1.0;
  double rho = 0.0;
  double r = 0.0;

  // The Ninomiya-Victoir volatility flow keeps Y >= 0 only when sigma^2 <= 4a.
  [[nodiscard]] bool nv_admissible() const noexcept { return sigma * sigma <= 4.0 * a; }
};

enum class SchemeKind { NV, Ex, ExBernoulli, NVBernoulli };

[[nodiscard]] constexpr bool uses_nv(SchemeKind s) noexcept {
  return s == SchemeKind::NV || s == SchemeKind::NVBernoulli;
}
[[nodiscard]] constexpr bool uses_bernoulli(SchemeKind s) noexcept {
  return s == SchemeKind::ExBernoulli || s == SchemeKind::NVBernoulli;
}

[[nodiscard]] std::string_view to_string(SchemeKind s) noexcept;
[[nodiscard]] SchemeKind parse_scheme(std::string_view name);

struct ValidationReport {
  bool ok = true;
  std::string violated;  // empty when ok

  explicit operator bool() const noexcept { return ok; }
};

[[nodiscard]] ValidationReport validate_params(const HestonParams& p, SchemeKind scheme);

// (log-price, variance) pair; the value type of the one-step maps.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Terminal or intermediate state of a simulated path. The two running
// integrals are only tracked when a payoff or a coupling needs them.
struct PathState {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> integral_I;   // trapezoidal estimate of int_0^t e^{X_u} du
  std::optional<double> integral_IY;  // trapezoidal estimate of int_0^t Y_u du
};

// Uniform coarse grid of n steps over [0, T] and, optionally, the index of
// the coarse step that gets refined into n substeps.
struct GridSpec {
  double T = 1.0;
  int n = 1;
  std::optional<int> kappa;

  [[nodiscard]] double h1() const noexcept { return T / n; }
  [[nodiscard]] double h2() const noexcept { return T / (static_cast<double>(n) * n); }
  void validate() const;
};

enum class PayoffKind { european_put, european_call, asian_put, asian_call, custom_terminal };

[[nodiscard]] std::string_view to_string(PayoffKind k) noexcept;
[[nodiscard]] PayoffKind parse_payoff(std::string_view name);

struct Payoff {
  PayoffKind kind = PayoffKind::european_put;
  double strike = 0.0;
  // Used by custom_terminal only: f(x, y).
  std::function<double(double, double)> custom;

  [[nodiscard]] bool is_terminal() const noexcept {
    return kind != PayoffKind::asian_put && kind != PayoffKind::asian_call;
  }
  [[nodiscard]] bool needs_integral() const noexcept { return !is_terminal(); }

  static Payoff european_put(double K) { return {PayoffKind::european_put, K, {}}; }
  static Payoff european_call(double K) { return {PayoffKind::european_call, K, {}}; }
  static Payoff asian_put(double K) { return {PayoffKind::asian_put, K, {}}; }
  static Payoff asian_call(double K) { return {PayoffKind::asian_call, K, {}}; }
  static Payoff terminal(std::function<double(double, double)> f) {
    return {PayoffKind::custom_terminal, 0.0, std::move(f)};
  }
};

[[nodiscard]] double payoff_eval(const Payoff& payoff, const PathState& terminal, const GridSpec& grid);

}  // namespace rgheston
