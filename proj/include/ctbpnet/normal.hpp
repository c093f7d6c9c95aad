#pragma once

namespace ctbpnet::normal {

/// Standard Gaussian CDF, computed as erfc(-x/sqrt 2)/2.
double cdf(double x);

/// Standard Gaussian quantile. Wichura's algorithm AS 241 (PPND16), relative
/// accuracy about 1e-16. Returns -inf/+inf at p = 0/1 and NaN outside [0,1].
double quantile(double p);

}  // namespace ctbpnet::normal
