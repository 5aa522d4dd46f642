#ifndef DREG_ORACLES_HPP
#define DREG_ORACLES_HPP

#include <array>
#include <cstdint>

#include "dreg/datagen.hpp"
#include "dreg/linalg.hpp"

namespace dreg {

struct OracleValue {
    double value = 0.0;
    double mc_standard_error = 0.0;
    long long draws = 0;
};

// Efficient influence function evaluated with the true m1, pi and mu1
// of the design. Both displayed forms are computed and cross-checked.
double efficient_influence(const std::array<double, 4>& z, int t, double y,
                           const Scenario& scenario);

// Monte Carlo estimate of E(tau1^2) over the complete-data law; the
// semiparametric bound for mu1 at sample size n is value / n.
OracleValue variance_bound(const Scenario& scenario, long long draws,
                           std::uint64_t seed);

// Asymptotic limit of the stratification estimator: a Monte Carlo
// evaluation of sum_j E[pi m1 | S_j] / E[pi | S_j] P(S_j) over
// population quantile bins of the propensity limit pi*. For the
// misspecified design pi* is a large-sample logistic fit on X.
OracleValue strat_limit(const Scenario& scenario, int strata, long long draws,
                        DesignSpec ps_spec, std::uint64_t seed);

// Coefficients of the large-sample (10^6 units) misspecified logistic
// fit that defines pi* above; exposed so the oracle run can record them.
Vector misspecified_ps_limit_coefficients(const Scenario& scenario,
                                          std::uint64_t seed);

} // namespace dreg

#endif
