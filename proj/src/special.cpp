#include "uos/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "uos/error.hpp"

namespace uos {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min() / kEps;

// P(a, x) by its power series; converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int i = 1; i < 100000; ++i) {
    term *= x / (a + i);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(a * std::log(x) - x - std::lgamma(a));
}

// Q(a, x) by the modified-Lentz continued fraction; used for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(a * std::log(x) - x - std::lgamma(a)) * h;
}

// (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu) and the matching half-sum, as in
// Temme's method. For tiny mu the odd part of 1/Gamma(1+x) is expanded.
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl, double& gammi) {
  gampl = 1.0 / std::tgamma(1.0 + mu);
  gammi = 1.0 / std::tgamma(1.0 - mu);
  if (std::abs(mu) < 1e-4) {
    gam1 = -(std::numbers::egamma - 0.0420026350340952355 * mu * mu);
  } else {
    gam1 = (gammi - gampl) / (2.0 * mu);
  }
  gam2 = (gammi + gampl) / 2.0;
}

}  // namespace

double gaussian_q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double gamma_q(double a, double x) {
  if (!(a > 0) || !(x >= 0)) throw Error(ErrorCode::DomainError, "gamma_q needs a > 0, x >= 0");
  if (x == 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi2_sf(int dof, double t) {
  if (dof < 1 || !(t >= 0)) throw Error(ErrorCode::DomainError, "chi2_sf needs dof >= 1, t >= 0");
  return gamma_q(0.5 * dof, 0.5 * t);
}

double noncentral_chi2_sf(int dof, double delta, double t) {
  if (dof < 1 || !(delta >= 0) || !(t >= 0))
    throw Error(ErrorCode::DomainError, "noncentral_chi2_sf needs dof >= 1, delta >= 0, t >= 0");
  if (delta == 0) return chi2_sf(dof, t);
  const double half = 0.5 * delta;
  constexpr long kMaxTerms = 1000000;
  constexpr double kResidualMass = 1e-14;
  double sum = 0.0;
  for (long j = 0; j < kMaxTerms; ++j) {
    const double weight = std::exp(j * std::log(half) - half - std::lgamma(j + 1.0));
    sum += weight * chi2_sf(dof + 2 * static_cast<int>(j), t);
    // Past the mode the Poisson tail is dominated by a geometric series.
    const double ratio = half / (j + 2.0);
    if (j + 1 > half && ratio < 1.0) {
      const double tail = weight * half / (j + 1.0) / (1.0 - ratio);
      if (tail < kResidualMass) return sum;
    }
  }
  throw Error(ErrorCode::ConvergenceError, "noncentral chi-squared series did not converge");
}

double bessel_k(double nu, double x) {
  if (!(nu >= 0) || !(x > 0)) throw Error(ErrorCode::DomainError, "bessel_k needs nu >= 0, x > 0");
  if (x > 700.0) return 0.0;
  const int steps = static_cast<int>(nu + 0.5);
  const double mu = nu - steps;  // in [-1/2, 1/2)
  const double mu2 = mu * mu;
  const double two_over_x = 2.0 / x;
  double k_mu = 0.0;
  double k_mu1 = 0.0;
  if (x < 2.0) {
    double gam1, gam2, gampl, gammi;
    temme_gammas(mu, gam1, gam2, gampl, gammi);
    const double half_x = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(half_x);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = half_x * half_x;
    double sum1 = p;
    for (int i = 1; i < 10000; ++i) {
      ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
      c *= d / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    k_mu = sum;
    k_mu1 = sum1 * two_over_x;
  } else {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i < 100000; ++i) {
      a -= 2 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < kEps) break;
    }
    h = a1 * h;
    k_mu = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
    k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
  }
  for (int i = 1; i <= steps; ++i) {
    const double next = (mu + i) * two_over_x * k_mu1 + k_mu;
    k_mu = k_mu1;
    k_mu1 = next;
  }
  return k_mu;
}

double bessel_k_half_integer(int k, double x) {
  if (k < 0 || !(x > 0)) throw Error(ErrorCode::DomainError, "bessel_k_half_integer needs k >= 0, x > 0");
  // K_{k+1/2}(x) = sqrt(pi/(2x)) e^{-x} sum_j (k+j)! / (j! (k-j)!) (2x)^{-j}
  double term = 1.0;
  double sum = 1.0;
  for (int j = 1; j <= k; ++j) {
    term *= static_cast<double>((k + j) * (k - j + 1)) / (j * 2.0 * x);
    sum += term;
  }
  return std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) * sum;
}

double psi(int n, double eta0, double alpha) {
  if (n < 1) throw Error(ErrorCode::DomainError, "psi needs n >= 1");
  if (!(eta0 > 0.0 && eta0 < 0.5)) throw Error(ErrorCode::DomainError, "psi needs eta0 in (0, 1/2)");
  if (!(alpha > 0)) throw Error(ErrorCode::DomainError, "psi needs alpha > 0");
  const double nu = 0.5 * (n - 1);
  const double arg = eta0 * alpha;
  const double k = (n % 2 == 0) ? bessel_k_half_integer((n - 2) / 2, 0.5 * arg) : bessel_k(nu, 0.5 * arg);
  if (k == 0.0) return 0.0;
  const double log_value = 0.5 * std::log(2.0) - n * std::log(2.0) - std::lgamma(0.5 * n) +
                           nu * std::log(arg) + std::log(k);
  return std::exp(log_value);
}

double psi_at_zero(int n) {
  if (n < 1) throw Error(ErrorCode::DomainError, "psi needs n >= 1");
  if (n == 1) return std::numeric_limits<double>::infinity();
  // x^nu K_nu(x/2) -> Gamma(nu) 2^{2 nu - 1} as x -> 0
  const double nu = 0.5 * (n - 1);
  const double log_value = 0.5 * std::log(2.0) - n * std::log(2.0) - std::lgamma(0.5 * n) +
                           std::lgamma(nu) + (2.0 * nu - 1.0) * std::log(2.0);
  return std::exp(log_value);
}

}  // namespace uos
