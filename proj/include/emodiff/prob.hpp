#pragma once

namespace emodiff {

// Standard normal distribution.
double norm_cdf(double z);
double norm_sf(double z);
// Two-sided tail probability of |Z| >= |z|.
double norm_two_sided_p(double z);

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper tail of the chi-square distribution with k degrees of freedom.
double chi2_sf(double x, double k);

// Regularized incomplete beta function I_x(a, b).
double inc_beta(double a, double b, double x);

// Two-sided tail probability of |T| >= |t| for Student's t with nu degrees
// of freedom (nu need not be an integer).
double student_t_two_sided_p(double t, double nu);

}  // namespace emodiff
