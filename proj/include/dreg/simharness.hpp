#ifndef DREG_SIMHARNESS_HPP
#define DREG_SIMHARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dreg/datagen.hpp"
#include "dreg/estimators.hpp"

namespace dreg {

struct CellSpec {
    Scenario scenario;
    int n = 1000;
    std::optional<DesignSpec> ps_spec; // empty for the pure OR estimator
    std::optional<DesignSpec> or_spec; // empty for IPW / strat
    EstimatorSpec estimator;
    int replications = 1000;
    std::uint64_t master_seed = 0;
    double pi_floor = 0.0;
};

struct CellResult {
    double bias = 0.0;
    double pct_bias = 0.0; // 100 * bias / sample SD
    double rmse = 0.0;
    double mae = 0.0; // median absolute error
    double sd = 0.0;
    int flagged_replications = 0;
    bool zero_sd = false;
    bool unreliable = false; // > 5% replications flagged
    int replications = 0;
    std::vector<double> estimates; // kept when keep_draws is on
};

CellResult metrics(const std::vector<double>& estimates, double truth);

CellResult run_cell(const CellSpec& cell, int workers = 1, bool keep_draws = false);

struct TableRow {
    std::string scenario;
    int n = 0;
    std::string ps_spec; // "correct" / "misspecified" / "none"
    std::string or_spec;
    std::string estimator;
    CellResult result;
};

// Full Table 1 / Table 2 grid: IPW and strat under both PS specs, OLS
// under both OR specs, and the six DR families over the PS x OR spec
// grid, at n = 200 and n = 1000. Model fits are shared across all
// estimators within a replication, so row comparisons are noise-paired.
std::vector<TableRow> run_table(const Scenario& scenario, int replications,
                                std::uint64_t master_seed, int workers = 1,
                                bool keep_draws = false);

void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows,
                     std::uint64_t seed, int replications);

struct MisspecDiagnostics {
    double r_squared = 0.0;        // misspecified OR fit among treated
    double fitted_y_correlation = 0.0;
    double ps_linpred_correlation = 0.0;
    double diff_q1 = 0.0, diff_q2 = 0.0, diff_q3 = 0.0; // |fitted-Y gap| quartiles
    double diff_max = 0.0;
};

// Per-dataset diagnostics behind the misspecification discussion;
// computed among treated units for the OR side, all units for the PS
// linear predictors.
MisspecDiagnostics misspec_diagnostics(const Dataset& data);

// Componentwise medians of the diagnostics over independent replications.
MisspecDiagnostics median_misspec_diagnostics(const Scenario& scenario, int n,
                                              int replications,
                                              std::uint64_t master_seed);

} // namespace dreg

#endif
