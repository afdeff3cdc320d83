#pragma once

namespace phirl {

double normal_cdf(double x);
// Upper tail 1 - Phi(x), accurate far into the tail.
double normal_sf(double x);
// Standard normal quantile (Wichura AS241, ~1e-16 relative accuracy).
// Returns -inf / +inf at p = 0 / 1; throws for p outside [0, 1].
double normal_quantile(double p);
// Upper tail of Student's t with `df` degrees of freedom.
double student_t_sf(double t, double df);

}  // namespace phirl
