#include "dreg/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dreg/models.hpp"
#include "dreg/rng.hpp"

namespace dreg {

double efficient_influence(const std::array<double, 4>& z, int t, double y,
                           const Scenario& scenario) {
    const double pi = scenario.propensity(z);
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("efficient_influence: pi outside (0,1)");
    const double m1 = scenario.mean_outcome(z);
    const double mu1 = scenario.true_mu1();
    const double w = t == 1 ? 1.0 / pi : 0.0;

    const double form1 = w * y - mu1 - (w - 1.0) * m1;
    const double form2 = m1 - mu1 + w * (y - m1);
    const double scale = std::abs(w * y) + std::abs(m1) + std::abs(mu1) + 1.0;
    if (std::abs(form1 - form2) > 1e-12 * scale)
        throw std::logic_error("efficient_influence: form mismatch");
    return form2;
}

OracleValue variance_bound(const Scenario& scenario, long long draws,
                           std::uint64_t seed) {
    if (draws < 10000)
        throw std::invalid_argument("variance_bound: need >= 1e4 draws");
    RngStream zs = RngStream(seed, 0).substream(0);
    RngStream es = RngStream(seed, 0).substream(1);
    RngStream us = RngStream(seed, 0).substream(2);

    double sum = 0.0, sumsq = 0.0;
    for (long long d = 0; d < draws; ++d) {
        std::array<double, 4> z;
        for (auto& v : z) v = zs.next_normal();
        const double eps = es.next_normal();
        const double pi = scenario.propensity(z);
        const int t = us.next_uniform() < pi ? 1 : 0;
        const double y = scenario.mean_outcome(z) + scenario.noise_sd * eps;
        const double tau = efficient_influence(z, t, y, scenario);
        const double tau2 = tau * tau;
        sum += tau2;
        sumsq += tau2 * tau2;
    }
    const double n = static_cast<double>(draws);
    OracleValue v;
    v.value = sum / n;
    v.mc_standard_error = std::sqrt((sumsq / n - v.value * v.value) / n);
    v.draws = draws;
    return v;
}

Vector misspecified_ps_limit_coefficients(const Scenario& scenario,
                                          std::uint64_t seed) {
    Dataset big = Dataset::generate(scenario, 1000000, RngStream(seed, 0));
    LogisticFit fit = fit_ps(big, DesignSpec::misspecified);
    if (!fit.converged)
        throw std::runtime_error("misspecified PS limit fit did not converge");
    return fit.coefficients;
}

OracleValue strat_limit(const Scenario& scenario, int strata, long long draws,
                        DesignSpec ps_spec, std::uint64_t seed) {
    if (draws < 100000)
        throw std::invalid_argument("strat_limit: need >= 1e5 draws");
    if (strata < 1) throw std::invalid_argument("strat_limit: strata >= 1");

    Vector gamma_star;
    if (ps_spec == DesignSpec::misspecified)
        gamma_star = misspecified_ps_limit_coefficients(scenario, seed);

    // seed+1 keeps the limit-defining fit and the evaluation draws on
    // disjoint streams
    RngStream zs = RngStream(seed + 1, 0).substream(0);

    Vector pi_star(draws), pi_true(draws), pim1(draws);
    for (long long d = 0; d < draws; ++d) {
        std::array<double, 4> z;
        for (auto& v : z) v = zs.next_normal();
        const double pi = scenario.propensity(z);
        pi_true[d] = pi;
        pim1[d] = pi * scenario.mean_outcome(z);
        if (ps_spec == DesignSpec::correct) {
            pi_star[d] = pi;
        } else {
            const auto x = scenario.transform(z);
            double lp = gamma_star[0];
            for (int j = 0; j < 4; ++j) lp += gamma_star[j + 1] * x[j];
            pi_star[d] = 1.0 / (1.0 + std::exp(-lp));
        }
    }

    // population quantile boundaries from the full sample, then a
    // batch-wise evaluation for the Monte Carlo error
    Vector sorted = pi_star;
    std::sort(sorted.begin(), sorted.end());
    Vector bounds(strata - 1);
    for (int j = 1; j < strata; ++j)
        bounds[j - 1] =
            sorted[static_cast<std::size_t>(
                std::ceil(static_cast<double>(draws) * j / strata)) - 1];

    auto stratum_of = [&](double p) {
        int s = 0;
        while (s < strata - 1 && p > bounds[s]) ++s;
        return s;
    };

    const int batches = 20;
    Vector batch_value(batches, 0.0);
    const long long per = draws / batches;
    for (int b = 0; b < batches; ++b) {
        Vector sum_pim(strata, 0.0), sum_pi(strata, 0.0);
        std::vector<long long> count(strata, 0);
        const long long lo = b * per;
        const long long hi = b == batches - 1 ? draws : lo + per;
        for (long long d = lo; d < hi; ++d) {
            const int s = stratum_of(pi_star[d]);
            sum_pim[s] += pim1[d];
            sum_pi[s] += pi_true[d];
            ++count[s];
        }
        double v = 0.0;
        const double nb = static_cast<double>(hi - lo);
        for (int s = 0; s < strata; ++s) {
            if (count[s] == 0 || sum_pi[s] == 0.0) continue;
            v += (sum_pim[s] / sum_pi[s]) * (static_cast<double>(count[s]) / nb);
        }
        batch_value[b] = v;
    }

    double mean = 0.0;
    for (double v : batch_value) mean += v;
    mean /= batches;
    double var = 0.0;
    for (double v : batch_value) var += (v - mean) * (v - mean);
    var /= (batches - 1);

    OracleValue out;
    out.value = mean;
    out.mc_standard_error = std::sqrt(var / batches);
    out.draws = draws;
    return out;
}

} // namespace dreg
