#pragma once

namespace faultcast {

/// Inverse standard normal CDF (Acklam's rational approximation, |err| < 2e-9).
double inverse_normal_cdf(double p);

/// Two-sided p-value of a t statistic with df degrees of freedom, computed
/// through the regularized incomplete beta function.
double student_t_two_sided_pvalue(double t, double df);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace faultcast
