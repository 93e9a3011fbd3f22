#include "cramp/special.hpp"

#include <cmath>
#include <limits>

#include "cramp/error.hpp"

namespace cramp {
namespace {

constexpr int kMaxIterations = 100000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

double log_prefactor(double a, double x) {
  return -x + a * std::log(x) - std::lgamma(a);
}

// Power series for P(a, x); converges quickly for x < a + 1.
double lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < kMaxIterations; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Modified Lentz continued fraction for Q(a, x); used for x >= a + 1.
double upper_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0)) fail(ErrorKind::argument, "gamma_q requires a > 0");
  if (x < 0.0 || std::isnan(x)) {
    fail(ErrorKind::argument, "gamma_q requires x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - lower_series(a, x);
  return upper_fraction(a, x);
}

double gamma_p(double a, double x) {
  if (!(a > 0.0)) fail(ErrorKind::argument, "gamma_p requires a > 0");
  if (x < 0.0 || std::isnan(x)) {
    fail(ErrorKind::argument, "gamma_p requires x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return lower_series(a, x);
  return 1.0 - upper_fraction(a, x);
}

double chi2_sf(double x, int df) {
  if (df < 1) fail(ErrorKind::argument, "chi2_sf requires df >= 1");
  if (x < 0.0 || std::isnan(x)) {
    fail(ErrorKind::argument, "chi2_sf requires x >= 0");
  }
  const double q = gamma_q(0.5 * df, 0.5 * x);
  return q < 0.0 ? 0.0 : (q > 1.0 ? 1.0 : q);
}

double normal_sf(double z) {
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace cramp
