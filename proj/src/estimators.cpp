#include "dreg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dreg {

Family parse_family(const std::string& s) {
    if (s == "OLS" || s == "OR") return Family::OR_mean;
    if (s == "IPW" || s == "IPW_raw") return Family::IPW_raw;
    if (s == "IPW_ratio") return Family::IPW_ratio;
    if (s == "AIPW_h") return Family::AIPW_h;
    if (s == "AIPW_fix") return Family::AIPW_fix;
    if (s == "WLS") return Family::WLS;
    if (s == "REG_tilde") return Family::REG_tilde;
    if (s == "REG_hat") return Family::REG_hat;
    if (s == "REG_tilde_m") return Family::REG_tilde_m;
    if (s == "REG_hat_m") return Family::REG_hat_m;
    if (s == "strat" || s == "STRAT") return Family::STRAT;
    throw std::invalid_argument("unknown estimator family: " + s);
}

const char* family_label(Family f) {
    switch (f) {
        case Family::OR_mean: return "OLS";
        case Family::IPW_raw: return "IPW";
        case Family::IPW_ratio: return "IPW_ratio";
        case Family::AIPW_h: return "AIPW_h";
        case Family::AIPW_fix: return "AIPW_fix";
        case Family::WLS: return "WLS";
        case Family::REG_tilde: return "REG_tilde";
        case Family::REG_hat: return "REG_hat";
        case Family::REG_tilde_m: return "REG_tilde_m";
        case Family::REG_hat_m: return "REG_hat_m";
        case Family::STRAT: return "strat";
    }
    return "?";
}

bool family_uses_or(Family f) {
    switch (f) {
        case Family::OR_mean:
        case Family::AIPW_fix:
        case Family::WLS:
        case Family::REG_tilde:
        case Family::REG_hat:
        case Family::REG_tilde_m:
        case Family::REG_hat_m: return true;
        default: return false;
    }
}

bool family_uses_ps(Family f) { return f != Family::OR_mean; }

bool family_drops_score(Family f) {
    return f == Family::REG_tilde_m || f == Family::REG_hat_m;
}

Basis parse_basis(const std::string& s) {
    if (s == "m1_only") return Basis::m1_only;
    if (s == "one_and_m1") return Basis::one_and_m1;
    if (s == "one_h_m1") return Basis::one_h_m1;
    throw std::invalid_argument("unknown basis: " + s);
}

PsValues PsValues::from_fit(const Dataset& data, const LogisticFit& fit,
                            double pi_floor) {
    PsValues v;
    Matrix design = data.design_matrix(fit.spec);
    v.pi = predict_pi_all(fit, design);
    if (pi_floor > 0.0)
        for (double& p : v.pi) p = std::max(p, pi_floor);
    v.score_design = std::move(design);
    v.at_mle = fit.converged && pi_floor == 0.0;
    v.fit_flagged = !fit.converged || fit.separation;
    return v;
}

PsValues PsValues::raw(Vector pi) {
    PsValues v;
    v.pi = std::move(pi);
    v.at_mle = false;
    return v;
}

namespace {

void check_positive_pi_on_treated(const EstimationInput& in) {
    for (int i = 0; i < in.n(); ++i)
        if (in.t[i] == 1 && in.ps.pi[i] <= 0.0)
            throw ZeroPropensityOnTreated("zero fitted propensity on a treated unit");
}

EstimationInput input_from(const Dataset& data, const PsValues& ps) {
    EstimationInput in;
    in.t.resize(data.n());
    in.y.assign(data.n(), 0.0);
    for (int i = 0; i < data.n(); ++i) {
        in.t[i] = data.t(i);
        if (in.t[i] == 1) in.y[i] = data.outcome(i);
    }
    in.ps = ps;
    return in;
}

EstimationInput mirrored_input(const Dataset& data, const PsValues& ps) {
    EstimationInput in;
    in.t.resize(data.n());
    in.y.assign(data.n(), 0.0);
    for (int i = 0; i < data.n(); ++i) {
        in.t[i] = 1 - data.t(i);
        if (in.t[i] == 1) in.y[i] = data.outcome(i);
    }
    in.ps = ps;
    for (double& p : in.ps.pi) p = 1.0 - p;
    // The score block keeps the same design rows: the kernel's
    // (t'/pi' - 1) * pi' * x weighting reproduces the mirrored score
    // (pi-hat - T) * x automatically.
    return in;
}

} // namespace

double or_estimate(const Dataset& data, const LinearFit& or_fit) {
    Matrix design = data.design_matrix(or_fit.spec);
    double s = 0.0;
    for (std::size_t i = 0; i < design.rows(); ++i)
        s += or_fit.predict_m(design.row(i));
    return s / static_cast<double>(design.rows());
}

EstimateResult ipw_core(const EstimationInput& in, IpwVersion version) {
    check_positive_pi_on_treated(in);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < in.n(); ++i) {
        if (in.t[i] != 1) continue;
        num += in.y[i] / in.ps.pi[i];
        den += 1.0 / in.ps.pi[i];
    }
    EstimateResult r;
    r.flagged = in.ps.fit_flagged;
    if (version == IpwVersion::raw) {
        r.value = num / static_cast<double>(in.n());
    } else {
        if (den == 0.0) {
            r.value = 0.0;
            r.flagged = true;
            r.note = "no treated units";
        } else {
            r.value = num / den;
        }
    }
    return r;
}

EstimateResult aipw_core(const EstimationInput& in, const Vector& h_values) {
    check_positive_pi_on_treated(in);
    const double n = in.n();
    double s = 0.0;
    for (int i = 0; i < in.n(); ++i) {
        const double w = in.t[i] == 1 ? 1.0 / in.ps.pi[i] : 0.0;
        if (in.t[i] == 1) s += w * in.y[i];
        s -= (w - 1.0) * h_values[i];
    }
    EstimateResult r;
    r.value = s / n;
    r.flagged = in.ps.fit_flagged;
    return r;
}

EstimateResult aipw_fix_core(const EstimationInput& in, const Vector& m) {
    check_positive_pi_on_treated(in);
    const double n = in.n();
    // form 1: IPW minus (T/pi - 1)-weighted m-hat
    double ipw_term = 0.0, corr = 0.0;
    // form 2: OR mean plus (T/pi)-weighted residual
    double m_mean = 0.0, resid = 0.0;
    for (int i = 0; i < in.n(); ++i) {
        const double w = in.t[i] == 1 ? 1.0 / in.ps.pi[i] : 0.0;
        if (in.t[i] == 1) {
            ipw_term += w * in.y[i];
            resid += w * (in.y[i] - m[i]);
        }
        corr += (w - 1.0) * m[i];
        m_mean += m[i];
    }
    const double v1 = (ipw_term - corr) / n;
    const double v2 = (m_mean + resid) / n;
    EstimateResult r;
    r.value = v1;
    r.flagged = in.ps.fit_flagged;
    // the two displayed forms are algebraically identical; tolerance is
    // relative to the summand scale to survive heavy-weight cancellation
    const double scale = (std::abs(ipw_term) + std::abs(corr) + std::abs(m_mean) +
                          std::abs(resid)) / n + 1.0;
    if (std::abs(v1 - v2) > 1e-10 * scale) {
        r.flagged = true;
        r.note = "aipw_fix: two-form identity violated";
    }
    return r;
}

ControlVariateRows control_variates_core(const EstimationInput& in, const Vector& m,
                                         Basis basis, const Vector* h_values,
                                         bool include_score) {
    check_positive_pi_on_treated(in);
    const std::size_t g_cols = basis == Basis::m1_only ? 1u
                             : basis == Basis::one_and_m1 ? 2u
                                                          : 3u;
    if (basis == Basis::one_h_m1 && !h_values)
        throw std::invalid_argument("one_h_m1 basis requires h values");
    const std::size_t q = include_score ? in.ps.score_design.cols() : 0u;
    if (include_score && q == 0)
        throw std::invalid_argument("score block requested but no score design");

    const std::size_t k = g_cols + q;
    ControlVariateRows cv;
    cv.g_cols = g_cols;
    cv.eta.assign(in.n(), 0.0);
    cv.xi = Matrix(in.n(), k);
    cv.zeta = Matrix(in.n(), k);

    Vector b(k);
    for (int i = 0; i < in.n(); ++i) {
        const double pi = in.ps.pi[i];
        const double w_zeta = in.t[i] == 1 ? 1.0 / pi : 0.0;
        const double w_xi = w_zeta - 1.0;

        std::size_t c = 0;
        if (basis != Basis::m1_only) b[c++] = 1.0;
        if (basis == Basis::one_h_m1) b[c++] = (*h_values)[i];
        b[c++] = m[i];
        // score basis dpi/dgamma / (1 - pi) = pi * x for the logistic link
        for (std::size_t j = 0; j < q; ++j) b[c++] = pi * in.ps.score_design(i, j);

        if (in.t[i] == 1) cv.eta[i] = in.y[i] / pi;
        for (std::size_t j = 0; j < k; ++j) {
            cv.xi(i, j) = w_xi * b[j];
            cv.zeta(i, j) = w_zeta * b[j];
        }
    }
    return cv;
}

namespace {

EstimateResult reg_from_rows(const ControlVariateRows& cv, RegVariant variant,
                             bool at_mle, bool fit_flagged) {
    const std::size_t n = cv.eta.size();
    const std::size_t k = cv.xi.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    Vector xi_mean(k, 0.0);
    double eta_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) xi_mean[a] += cv.xi(i, a);
        eta_mean += cv.eta[i];
    }
    eta_mean *= inv_n;
    for (std::size_t a = 0; a < k; ++a) xi_mean[a] *= inv_n;

    // The tilde coefficient uses the raw cross moments of xi against zeta
    // (the construction that yields the exact-fit collapse). The hat
    // coefficient is the classical regression coefficient of eta against
    // xi, i.e. computed from centered moments.
    Matrix gram(k, k);
    Vector rhs(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = cv.xi.row(i);
        if (variant == RegVariant::tilde) {
            const double* other = cv.zeta.row(i);
            for (std::size_t a = 0; a < k; ++a) {
                rhs[a] += xi[a] * cv.eta[i];
                for (std::size_t b = 0; b < k; ++b) gram(a, b) += xi[a] * other[b];
            }
        } else {
            const double de = cv.eta[i] - eta_mean;
            for (std::size_t a = 0; a < k; ++a) {
                const double da = xi[a] - xi_mean[a];
                rhs[a] += da * de;
                for (std::size_t b = 0; b < k; ++b)
                    gram(a, b) += da * (xi[b] - xi_mean[b]);
            }
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        rhs[a] *= inv_n;
        for (std::size_t b = 0; b < k; ++b) gram(a, b) *= inv_n;
    }

    SolveResult beta = variant == RegVariant::tilde ? solve_general(gram, rhs)
                                                    : solve_spd(gram, rhs);

    double corr_full = 0.0, corr_g = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        corr_full += beta.x[a] * xi_mean[a];
        if (a < cv.g_cols) corr_g += beta.x[a] * xi_mean[a];
    }

    EstimateResult r;
    r.value = eta_mean - corr_full;
    r.flagged = fit_flagged;
    if (beta.fallback_used) {
        r.flagged = true;
        r.note = "singular control-variate Gram, fallback solution";
    }
    // At the logistic MLE the score components of the xi sample mean are
    // exactly zero, so the full correction and the basis-block-only
    // correction must coincide.
    if (at_mle && k > cv.g_cols) {
        const double scale = std::abs(eta_mean) + std::abs(corr_full) + 1.0;
        if (std::abs(corr_full - corr_g) > 1e-8 * scale) {
            r.flagged = true;
            r.note = "score-block correction not null at MLE";
        }
    }
    return r;
}

} // namespace

EstimateResult reg_core(const EstimationInput& in, const Vector& m, Basis basis,
                        const Vector* h_values, bool include_score,
                        RegVariant variant) {
    ControlVariateRows cv =
        control_variates_core(in, m, basis, h_values, include_score);
    return reg_from_rows(cv, variant, in.ps.at_mle && include_score,
                         in.ps.fit_flagged);
}

EstimateResult strat_core(const EstimationInput& in, int strata) {
    if (strata < 1) throw std::invalid_argument("strat: strata must be >= 1");
    const int n = in.n();
    // quantile bins of pi-hat: boundaries are order statistics, so only
    // ranks matter; ties go to the lower stratum (right-closed bins)
    Vector sorted = in.ps.pi;
    std::sort(sorted.begin(), sorted.end());
    Vector bounds(strata - 1);
    for (int j = 1; j < strata; ++j) {
        const auto idx = static_cast<std::size_t>(
            std::ceil(static_cast<double>(n) * j / strata)) - 1;
        bounds[j - 1] = sorted[idx];
    }
    std::vector<int> stratum(n);
    std::vector<int> size(strata, 0), treated(strata, 0);
    for (int i = 0; i < n; ++i) {
        int s = 0;
        while (s < strata - 1 && in.ps.pi[i] > bounds[s]) ++s;
        stratum[i] = s;
        ++size[s];
        if (in.t[i] == 1) ++treated[s];
    }
    bool empty_treated = false;
    for (int s = 0; s < strata; ++s)
        if (size[s] > 0 && treated[s] == 0) empty_treated = true;

    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (in.t[i] != 1) continue;
        const double pi_strat = static_cast<double>(treated[stratum[i]]) /
                                static_cast<double>(size[stratum[i]]);
        sum += in.y[i] / pi_strat;
    }
    EstimateResult r;
    r.value = sum / static_cast<double>(n);
    r.flagged = in.ps.fit_flagged || empty_treated;
    if (empty_treated) r.note = "stratum with zero treated units";
    return r;
}

EstimateResult ipw(const Dataset& data, const PsValues& ps, IpwVersion version) {
    return ipw_core(input_from(data, ps), version);
}

EstimateResult aipw(const Dataset& data, const PsValues& ps, const Vector& h_values) {
    return aipw_core(input_from(data, ps), h_values);
}

EstimateResult aipw_fix(const Dataset& data, const PsValues& ps, const Vector& m1) {
    return aipw_fix_core(input_from(data, ps), m1);
}

EstimateResult wls_estimate(const Dataset& data, const PsValues& ps,
                            DesignSpec or_spec) {
    check_positive_pi_on_treated(input_from(data, ps));
    Vector w(data.n(), 1.0);
    for (int i = 0; i < data.n(); ++i)
        if (data.t(i) == 1) w[i] = 1.0 / ps.pi[i];
    LinearFit fit = fit_or_treated(data, or_spec, &w);
    EstimateResult r;
    r.value = or_estimate(data, fit);
    r.flagged = ps.fit_flagged || fit.fallback;
    if (fit.fallback) r.note = "rank-deficient WLS design";
    return r;
}

ControlVariateRows build_control_variates(const Dataset& data, const PsValues& ps,
                                          const Vector& m1,
                                          const EstimatorSpec& spec) {
    EstimationInput in = input_from(data, ps);
    std::optional<Vector> hv;
    if (spec.basis == Basis::one_h_m1) {
        hv.emplace(data.n());
        for (int i = 0; i < data.n(); ++i)
            (*hv)[i] = spec.h({data.x(i, 0), data.x(i, 1), data.x(i, 2), data.x(i, 3)});
    }
    return control_variates_core(in, m1, spec.basis, hv ? &*hv : nullptr,
                                 !family_drops_score(spec.family));
}

EstimateResult reg_estimate(const Dataset& data, const PsValues& ps, const Vector& m1,
                            const EstimatorSpec& spec, RegVariant variant) {
    EstimationInput in = input_from(data, ps);
    std::optional<Vector> hv;
    if (spec.basis == Basis::one_h_m1) {
        hv.emplace(data.n());
        for (int i = 0; i < data.n(); ++i)
            (*hv)[i] = spec.h({data.x(i, 0), data.x(i, 1), data.x(i, 2), data.x(i, 3)});
    }
    const bool include_score =
        !family_drops_score(spec.family) && in.ps.score_design.cols() > 0;
    return reg_core(in, m1, spec.basis, hv ? &*hv : nullptr, include_score, variant);
}

EstimateResult strat_estimate(const Dataset& data, const PsValues& ps, int strata) {
    return strat_core(input_from(data, ps), strata);
}

EstimateResult mu0_estimate(const Dataset& data, const PsValues& ps,
                            const Vector& m0, const EstimatorSpec& spec) {
    EstimationInput in = mirrored_input(data, ps);
    switch (spec.family) {
        case Family::OR_mean: {
            double s = std::accumulate(m0.begin(), m0.end(), 0.0);
            return {s / data.n(), false, ""};
        }
        case Family::IPW_raw: return ipw_core(in, IpwVersion::raw);
        case Family::IPW_ratio: return ipw_core(in, IpwVersion::ratio);
        case Family::AIPW_fix: return aipw_fix_core(in, m0);
        case Family::REG_tilde:
        case Family::REG_tilde_m:
            return reg_core(in, m0, spec.basis, nullptr,
                            !family_drops_score(spec.family) &&
                                in.ps.score_design.cols() > 0,
                            RegVariant::tilde);
        case Family::REG_hat:
        case Family::REG_hat_m:
            return reg_core(in, m0, spec.basis, nullptr,
                            !family_drops_score(spec.family) &&
                                in.ps.score_design.cols() > 0,
                            RegVariant::hat);
        case Family::STRAT: return strat_core(in, spec.strata);
        default:
            throw std::invalid_argument("mu0_estimate: unsupported family");
    }
}

EstimateResult ace_combined(const Dataset& data, const PsValues& ps,
                            const Vector& m1, const Vector& m0) {
    const int n = data.n();
    for (int i = 0; i < n; ++i) {
        if (data.t(i) == 1 && ps.pi[i] <= 0.0)
            throw ZeroPropensityOnTreated("zero propensity on a treated unit");
        if (data.t(i) == 0 && ps.pi[i] >= 1.0)
            throw ZeroPropensityOnTreated("unit propensity on a control unit");
    }
    const std::size_t q = ps.score_design.cols();
    const std::size_t k = 4 + q;

    ControlVariateRows cv;
    cv.g_cols = 4;
    cv.eta.assign(n, 0.0);
    cv.xi = Matrix(n, k);
    cv.zeta = Matrix(n, k);

    for (int i = 0; i < n; ++i) {
        const double pi = ps.pi[i];
        const int t = data.t(i);
        const double y = data.outcome(i);
        const double w = t == 1 ? 1.0 / pi : -1.0 / (1.0 - pi);
        cv.eta[i] = w * y;

        const double b[4] = {pi, 1.0 - pi, pi * m0[i], (1.0 - pi) * m1[i]};
        // zeta shifts each column by the increment that turns the
        // weighted variate into its all-data counterpart
        const double incr[4] = {-1.0, 1.0, -m0[i], m1[i]};
        for (int j = 0; j < 4; ++j) {
            cv.xi(i, j) = w * b[j];
            cv.zeta(i, j) = w * b[j] + incr[j];
        }
        for (std::size_t j = 0; j < q; ++j) {
            const double x = ps.score_design(i, j);
            cv.xi(i, 4 + j) = (t - pi) * x;
            cv.zeta(i, 4 + j) = t * x;
        }
    }
    return reg_from_rows(cv, RegVariant::tilde, ps.at_mle && q > 0, ps.fit_flagged);
}

} // namespace dreg
