#pragma once

// Gaussian and chi-squared distribution functions.

namespace stochlift {

/// Standard normal CDF, evaluated through erfc.
double NormCdf(double x);

/// Standard normal quantile. Throws DomainError unless 0 < p < 1.
double InvNormCdf(double p);

/// Chi-squared CDF with n degrees of freedom (regularized lower incomplete
/// gamma at (n/2, x/2)).
double Chi2Cdf(double x, int n);

/// Chi-squared quantile. Throws DomainError unless 0 < p < 1 and n >= 1.
double InvChi2Cdf(double p, int n);

}  // namespace stochlift
