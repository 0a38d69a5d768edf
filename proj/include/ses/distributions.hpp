#pragma once

namespace ses {

// Upper-tail probabilities for the reference distributions behind the
// conditional-independence tests. Survival functions saturate to [0, 1].

// P(|N(0,1)| >= |z|), two-sided, computed through erfc.
double normal_two_sided_p(double z);

// P(Chi2_dof >= x).
double chi_squared_sf(double x, double dof);

// P(F_{d1,d2} >= x).
double f_sf(double x, double d1, double d2);

// Regularized incomplete gamma functions P(a,x) (lower) and Q(a,x) (upper).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Regularized incomplete beta function I_x(a,b).
double incomplete_beta(double a, double b, double x);

} // namespace ses
