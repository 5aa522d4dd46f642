#ifndef DREG_MODELS_HPP
#define DREG_MODELS_HPP

#include <string>
#include <vector>

#include "dreg/datagen.hpp"
#include "dreg/linalg.hpp"

namespace dreg {

// Logistic maximum-likelihood fit via IRLS with step-halving.
struct LogisticFit {
    Vector coefficients;
    bool converged = false;
    bool separation = false;
    int iterations = 0;
    DesignSpec spec = DesignSpec::correct;

    double linear_predictor(const double* design_row) const;
    double predict_pi(const double* design_row) const;

    // (T/pi - 1) * dpi/dgamma / (1 - pi); for the canonical logistic
    // link this reduces to (T - pi) * x, which is what we evaluate.
    Vector score_variate(const double* design_row, int t) const;

    std::string to_json() const;
};

struct LinearFit {
    Vector coefficients;
    bool fallback = false; // rank-deficient design, min-norm path used
    DesignSpec spec = DesignSpec::correct;

    double predict_m(const double* design_row) const;
    std::string to_json() const;
};

// IRLS stopping: max |score component| < 1e-8 n, or relative
// log-likelihood change < 1e-12, capped at 100 iterations. Unconverged
// fits are returned flagged, never thrown.
LogisticFit fit_logistic(const Matrix& design, const std::vector<int>& t);

// Weighted least squares on the given rows. unit weights = OLS;
// weights 1/pi-hat on treated units = the WLS variant.
LinearFit fit_linear(const Matrix& design, const Vector& y, const Vector& weights);

// Convenience: fit PS / OR models on a dataset under a design spec.
LogisticFit fit_ps(const Dataset& data, DesignSpec spec);
LinearFit fit_or_treated(const Dataset& data, DesignSpec spec,
                         const Vector* weights_all_units = nullptr);
// Mirror fit of E(Y | T=0, X) on untreated units (requires their Y).
LinearFit fit_or_control(const Dataset& data, DesignSpec spec);

Vector predict_pi_all(const LogisticFit& fit, const Matrix& design);
Vector predict_m_all(const LinearFit& fit, const Matrix& design);

double logistic_loglik(const Matrix& design, const std::vector<int>& t,
                       const Vector& coef);

} // namespace dreg

#endif
