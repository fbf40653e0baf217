#pragma once

// Special functions needed by the detection bounds. All double precision.

namespace uos {

/// Gaussian tail Q(x) = P(N(0,1) > x).
double gaussian_q(double x);

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double gamma_q(double a, double x);

/// P(chi^2_dof > t).
double chi2_sf(int dof, double t);

/// P(chi'^2_dof(delta) > t) as a Poisson mixture of central tails. Terms are
/// summed until the unvisited Poisson mass drops below 1e-14; more than 1e6
/// terms raises ConvergenceError.
double noncentral_chi2_sf(int dof, double delta, double t);

/// Modified Bessel function of the second kind K_nu(x), nu >= 0, x > 0
/// (Temme series for x < 2, Steed's continued fraction above, then forward
/// recurrence in the order).
double bessel_k(double nu, double x);

/// K_{k+1/2}(x) from its finite closed form.
double bessel_k_half_integer(int k, double x);

/// sqrt(2) / (2^n Gamma(n/2)) (eta0 alpha)^{(n-1)/2} K_{(n-1)/2}(eta0 alpha / 2)
/// for eta0 in (0, 1/2) and alpha > 0.
double psi(int n, double eta0, double alpha);

/// Limit of psi as alpha -> 0+ (infinite for n = 1).
double psi_at_zero(int n);

}  // namespace uos
