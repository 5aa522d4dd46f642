#ifndef DREG_ESTIMATORS_HPP
#define DREG_ESTIMATORS_HPP

#include <array>
#include <functional>
#include <optional>
#include <string>

#include "dreg/datagen.hpp"
#include "dreg/linalg.hpp"
#include "dreg/models.hpp"

namespace dreg {

enum class Family {
    OR_mean,
    IPW_raw,
    IPW_ratio,
    AIPW_h,
    AIPW_fix,
    WLS,
    REG_tilde,
    REG_hat,
    REG_tilde_m,
    REG_hat_m,
    STRAT,
};

Family parse_family(const std::string& s);
const char* family_label(Family f);
bool family_uses_or(Family f);
bool family_uses_ps(Family f);
// The "(m)" variants drop the PS score block from the control variates.
bool family_drops_score(Family f);

enum class Basis { m1_only, one_and_m1, one_h_m1 };
Basis parse_basis(const std::string& s);

using HFunction = std::function<double(const std::array<double, 4>& x)>;

struct EstimatorSpec {
    Family family = Family::REG_tilde;
    Basis basis = Basis::one_and_m1; // table preset: (1, m1-hat)
    HFunction h;                     // required for AIPW_h / one_h_m1
    int strata = 5;                  // STRAT only
};

struct ZeroPropensityOnTreated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fitted propensity values plus the score-block design. Tests inject
// arbitrary pi directly (no score block, at_mle = false).
struct PsValues {
    Vector pi;
    Matrix score_design; // n x q rows x_i; q = 0 when score unavailable
    bool at_mle = false;
    bool fit_flagged = false; // unconverged / separated logistic fit

    static PsValues from_fit(const Dataset& data, const LogisticFit& fit,
                             double pi_floor = 0.0);
    static PsValues raw(Vector pi);
};

struct EstimateResult {
    double value = 0.0;
    bool flagged = false;
    std::string note;
};

struct ControlVariateRows {
    Vector eta;  // per unit
    Matrix xi;   // n x k
    Matrix zeta; // n x k
    std::size_t g_cols = 0; // leading non-score (basis) columns
};

enum class IpwVersion { raw, ratio };
enum class RegVariant { tilde, hat };

// mu-1 estimators on a dataset (spec-level API).
double or_estimate(const Dataset& data, const LinearFit& or_fit);
EstimateResult ipw(const Dataset& data, const PsValues& ps, IpwVersion version);
EstimateResult aipw(const Dataset& data, const PsValues& ps, const Vector& h_values);
EstimateResult aipw_fix(const Dataset& data, const PsValues& ps, const Vector& m1);
EstimateResult wls_estimate(const Dataset& data, const PsValues& ps,
                            DesignSpec or_spec);
ControlVariateRows build_control_variates(const Dataset& data, const PsValues& ps,
                                          const Vector& m1, const EstimatorSpec& spec);
EstimateResult reg_estimate(const Dataset& data, const PsValues& ps, const Vector& m1,
                            const EstimatorSpec& spec, RegVariant variant);
EstimateResult strat_estimate(const Dataset& data, const PsValues& ps, int strata);

// mu-0 mirrors: every family above with T, pi-hat, m1-hat replaced by
// 1-T, 1-pi-hat, m0-hat. Requires observed Y on control units.
EstimateResult mu0_estimate(const Dataset& data, const PsValues& ps,
                            const Vector& m0, const EstimatorSpec& spec);

// Average causal effect via the combined control-variate set
// [T/pi - (1-T)/(1-pi)] (pi, 1-pi, pi m0, (1-pi) m1) plus the PS score.
EstimateResult ace_combined(const Dataset& data, const PsValues& ps,
                            const Vector& m1, const Vector& m0);

// Low-level input: arm indicator, outcome (valid where t = 1), fitted
// propensities and optional score design. The mu-0 mirrors and the
// randomized-propensity property tests are built on this directly.
struct EstimationInput {
    std::vector<int> t;
    Vector y;
    PsValues ps;
    int n() const { return static_cast<int>(t.size()); }
};

EstimateResult ipw_core(const EstimationInput& in, IpwVersion version);
EstimateResult aipw_core(const EstimationInput& in, const Vector& h_values);
EstimateResult aipw_fix_core(const EstimationInput& in, const Vector& m);
ControlVariateRows control_variates_core(const EstimationInput& in, const Vector& m,
                                         Basis basis, const Vector* h_values,
                                         bool include_score);
EstimateResult reg_core(const EstimationInput& in, const Vector& m, Basis basis,
                        const Vector* h_values, bool include_score,
                        RegVariant variant);
EstimateResult strat_core(const EstimationInput& in, int strata);

} // namespace dreg

#endif
