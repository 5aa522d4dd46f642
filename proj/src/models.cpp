#include "dreg/models.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace dreg {

namespace {

double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// log(1 + e^v) without overflow
double log1pexp(double v) {
    if (v > 35.0) return v;
    return std::log1p(std::exp(v));
}

std::string coef_json(const Vector& c) {
    std::ostringstream os;
    os << "[";
    for (std::size_t j = 0; j < c.size(); ++j) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", c[j]);
        os << (j ? "," : "") << buf;
    }
    os << "]";
    return os.str();
}

} // namespace

double LogisticFit::linear_predictor(const double* row) const {
    double lp = 0.0;
    for (std::size_t j = 0; j < coefficients.size(); ++j) lp += coefficients[j] * row[j];
    return lp;
}

double LogisticFit::predict_pi(const double* row) const {
    return expit(linear_predictor(row));
}

Vector LogisticFit::score_variate(const double* row, int t) const {
    const double pi = predict_pi(row);
    Vector v(coefficients.size());
    for (std::size_t j = 0; j < coefficients.size(); ++j)
        v[j] = (static_cast<double>(t) - pi) * row[j];
    return v;
}

std::string LogisticFit::to_json() const {
    std::ostringstream os;
    os << "{\"model\":\"logistic\",\"spec\":\"" << design_spec_label(spec)
       << "\",\"coefficients\":" << coef_json(coefficients)
       << ",\"converged\":" << (converged ? "true" : "false")
       << ",\"separation\":" << (separation ? "true" : "false")
       << ",\"iterations\":" << iterations << "}";
    return os.str();
}

double LinearFit::predict_m(const double* row) const {
    double m = 0.0;
    for (std::size_t j = 0; j < coefficients.size(); ++j) m += coefficients[j] * row[j];
    return m;
}

std::string LinearFit::to_json() const {
    std::ostringstream os;
    os << "{\"model\":\"linear\",\"spec\":\"" << design_spec_label(spec)
       << "\",\"coefficients\":" << coef_json(coefficients)
       << ",\"fallback\":" << (fallback ? "true" : "false") << "}";
    return os.str();
}

double logistic_loglik(const Matrix& design, const std::vector<int>& t,
                       const Vector& coef) {
    double ll = 0.0;
    for (std::size_t i = 0; i < design.rows(); ++i) {
        double lp = 0.0;
        const double* row = design.row(i);
        for (std::size_t j = 0; j < coef.size(); ++j) lp += coef[j] * row[j];
        ll += t[i] * lp - log1pexp(lp);
    }
    return ll;
}

LogisticFit fit_logistic(const Matrix& design, const std::vector<int>& t) {
    const std::size_t n = design.rows();
    const std::size_t p = design.cols();
    if (t.size() != n) throw DimensionMismatch("fit_logistic: t length mismatch");

    LogisticFit fit;
    fit.coefficients.assign(p, 0.0);
    double ll = logistic_loglik(design, t, fit.coefficients);

    Vector pi(n), score(p);
    Matrix hess(p, p);
    const double score_tol = 1e-8 * static_cast<double>(n);

    for (int iter = 1; iter <= 100; ++iter) {
        fit.iterations = iter;
        for (std::size_t j = 0; j < p; ++j) score[j] = 0.0;
        for (std::size_t j = 0; j < p * p; ++j) hess.row(0)[j] = 0.0;
        double max_abs_lp = 0.0, min_abs_lp = 1e300;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = design.row(i);
            const double lp = fit.linear_predictor(row);
            max_abs_lp = std::max(max_abs_lp, std::abs(lp));
            min_abs_lp = std::min(min_abs_lp, std::abs(lp));
            pi[i] = expit(lp);
            const double r = t[i] - pi[i];
            const double w = pi[i] * (1.0 - pi[i]);
            for (std::size_t j = 0; j < p; ++j) {
                score[j] += r * row[j];
                for (std::size_t k = j; k < p; ++k) hess(j, k) += w * row[j] * row[k];
            }
        }
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < j; ++k) hess(j, k) = hess(k, j);

        double max_score = 0.0;
        for (double s : score) max_score = std::max(max_score, std::abs(s));
        if (max_score < score_tol) {
            // a vanishing score with every unit classified at machine
            // certainty means the likelihood has no interior maximum
            if (min_abs_lp > 15.0)
                fit.separation = true;
            else
                fit.converged = true;
            return fit;
        }

        SolveResult step = solve_spd(hess, score);

        // step-halving keeps the log-likelihood non-decreasing
        double scale = 1.0;
        bool accepted = false;
        Vector trial(p);
        for (int h = 0; h < 30; ++h) {
            for (std::size_t j = 0; j < p; ++j)
                trial[j] = fit.coefficients[j] + scale * step.x[j];
            const double ll_trial = logistic_loglik(design, t, trial);
            if (ll_trial >= ll) {
                const double rel = std::abs(ll_trial - ll) /
                                   (std::abs(ll) + 1e-300);
                fit.coefficients = trial;
                const bool tiny = rel < 1e-12;
                ll = ll_trial;
                accepted = true;
                if (tiny) {
                    // a stalled likelihood with uniformly extreme linear
                    // predictors is separation, not convergence
                    if (min_abs_lp > 30.0)
                        fit.separation = true;
                    else
                        fit.converged = true;
                    return fit;
                }
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            // no score reduction possible; huge predictors everywhere
            // indicate complete separation
            if (min_abs_lp > 30.0) fit.separation = true;
            return fit;
        }
    }
    return fit; // unconverged, flagged via converged == false
}

LinearFit fit_linear(const Matrix& design, const Vector& y, const Vector& weights) {
    const std::size_t n = design.rows();
    const std::size_t p = design.cols();
    if (y.size() != n || weights.size() != n)
        throw DimensionMismatch("fit_linear: length mismatch");

    Matrix gram(p, p);
    Vector rhs(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = design.row(i);
        const double w = weights[i];
        for (std::size_t j = 0; j < p; ++j) {
            rhs[j] += w * row[j] * y[i];
            for (std::size_t k = j; k < p; ++k) gram(j, k) += w * row[j] * row[k];
        }
    }
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < j; ++k) gram(j, k) = gram(k, j);

    SolveResult sol = solve_spd(gram, rhs);
    LinearFit fit;
    fit.coefficients = std::move(sol.x);
    fit.fallback = sol.fallback_used;
    return fit;
}

LogisticFit fit_ps(const Dataset& data, DesignSpec spec) {
    Matrix design = data.design_matrix(spec);
    std::vector<int> t(data.n());
    for (int i = 0; i < data.n(); ++i) t[i] = data.t(i);
    LogisticFit fit = fit_logistic(design, t);
    fit.spec = spec;
    return fit;
}

namespace {

LinearFit fit_or_on_arm(const Dataset& data, DesignSpec spec, int arm,
                        const Vector* weights_all_units) {
    Matrix full = data.design_matrix(spec);
    std::vector<std::size_t> rows;
    for (int i = 0; i < data.n(); ++i)
        if (data.t(i) == arm) rows.push_back(i);
    Matrix design(rows.size(), full.cols());
    Vector y(rows.size()), w(rows.size(), 1.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t j = 0; j < full.cols(); ++j)
            design(r, j) = full(rows[r], j);
        y[r] = data.outcome(static_cast<int>(rows[r]));
        if (weights_all_units) w[r] = (*weights_all_units)[rows[r]];
    }
    LinearFit fit = fit_linear(design, y, w);
    fit.spec = spec;
    return fit;
}

} // namespace

LinearFit fit_or_treated(const Dataset& data, DesignSpec spec,
                         const Vector* weights_all_units) {
    return fit_or_on_arm(data, spec, 1, weights_all_units);
}

LinearFit fit_or_control(const Dataset& data, DesignSpec spec) {
    return fit_or_on_arm(data, spec, 0, nullptr);
}

Vector predict_pi_all(const LogisticFit& fit, const Matrix& design) {
    Vector pi(design.rows());
    for (std::size_t i = 0; i < design.rows(); ++i)
        pi[i] = fit.predict_pi(design.row(i));
    return pi;
}

Vector predict_m_all(const LinearFit& fit, const Matrix& design) {
    Vector m(design.rows());
    for (std::size_t i = 0; i < design.rows(); ++i)
        m[i] = fit.predict_m(design.row(i));
    return m;
}

} // namespace dreg
