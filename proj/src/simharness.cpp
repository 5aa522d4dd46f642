#include "dreg/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <thread>

#include "dreg/models.hpp"
#include "dreg/rng.hpp"

namespace dreg {

namespace {

double median_of_sorted(const std::vector<double>& s) {
    const std::size_t n = s.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double quantile_sorted(const std::vector<double>& s, double p) {
    // linear interpolation between order statistics
    const double h = p * (static_cast<double>(s.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - lo) * (s[hi] - s[lo]);
}

double correlation(const Vector& a, const Vector& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// All model fits one replication needs, shared across estimator cells.
struct RepFits {
    Dataset data;
    std::optional<PsValues> ps[2];     // [correct, misspecified]
    std::optional<LinearFit> or_fit[2];
    std::optional<Vector> m1[2];       // fitted values over all units
    bool or_flagged[2] = {false, false};
};

int spec_index(DesignSpec d) { return d == DesignSpec::correct ? 0 : 1; }

RepFits make_fits(const Scenario& scenario, int n, std::uint64_t seed, int rep,
                  bool need_ps[2], bool need_or[2], double pi_floor) {
    RepFits f{Dataset::generate(scenario, n, RngStream(seed, rep))};
    for (int s = 0; s < 2; ++s) {
        const DesignSpec d = s == 0 ? DesignSpec::correct : DesignSpec::misspecified;
        if (need_ps[s]) f.ps[s] = PsValues::from_fit(f.data, fit_ps(f.data, d), pi_floor);
        if (need_or[s]) {
            f.or_fit[s] = fit_or_treated(f.data, d);
            f.m1[s] = predict_m_all(*f.or_fit[s], f.data.design_matrix(d));
            f.or_flagged[s] = f.or_fit[s]->fallback;
        }
    }
    return f;
}

EstimateResult evaluate(const RepFits& f, const EstimatorSpec& spec,
                        std::optional<DesignSpec> ps_spec,
                        std::optional<DesignSpec> or_spec) {
    const PsValues* ps = ps_spec ? &*f.ps[spec_index(*ps_spec)] : nullptr;
    const Vector* m1 = or_spec ? &*f.m1[spec_index(*or_spec)] : nullptr;
    EstimateResult r;
    switch (spec.family) {
        case Family::OR_mean:
            r.value = or_estimate(f.data, *f.or_fit[spec_index(*or_spec)]);
            break;
        case Family::IPW_raw: r = ipw(f.data, *ps, IpwVersion::raw); break;
        case Family::IPW_ratio: r = ipw(f.data, *ps, IpwVersion::ratio); break;
        case Family::AIPW_h: {
            Vector hv(f.data.n());
            for (int i = 0; i < f.data.n(); ++i)
                hv[i] = spec.h({f.data.x(i, 0), f.data.x(i, 1), f.data.x(i, 2),
                                f.data.x(i, 3)});
            r = aipw(f.data, *ps, hv);
            break;
        }
        case Family::AIPW_fix: r = aipw_fix(f.data, *ps, *m1); break;
        case Family::WLS: r = wls_estimate(f.data, *ps, *or_spec); break;
        case Family::REG_tilde:
        case Family::REG_tilde_m:
            r = reg_estimate(f.data, *ps, *m1, spec, RegVariant::tilde);
            break;
        case Family::REG_hat:
        case Family::REG_hat_m:
            r = reg_estimate(f.data, *ps, *m1, spec, RegVariant::hat);
            break;
        case Family::STRAT: r = strat_estimate(f.data, *ps, spec.strata); break;
    }
    if (or_spec && f.or_flagged[spec_index(*or_spec)]) r.flagged = true;
    return r;
}

void parallel_reps(int replications, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, workers);
    if (workers == 1) {
        for (int r = 0; r < replications; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (int r = w; r < replications; r += workers) fn(r);
        });
    for (auto& th : pool) th.join();
}

} // namespace

CellResult metrics(const std::vector<double>& estimates, double truth) {
    CellResult c;
    std::vector<double> valid;
    valid.reserve(estimates.size());
    for (double e : estimates)
        if (std::isfinite(e)) valid.push_back(e);
    c.replications = static_cast<int>(estimates.size());
    if (valid.empty()) {
        c.zero_sd = true;
        return c;
    }
    const double r = static_cast<double>(valid.size());
    double mean = 0.0;
    for (double e : valid) mean += e;
    mean /= r;
    c.bias = mean - truth;

    double ss = 0.0, se2 = 0.0;
    std::vector<double> abs_err;
    abs_err.reserve(valid.size());
    for (double e : valid) {
        ss += (e - mean) * (e - mean);
        se2 += (e - truth) * (e - truth);
        abs_err.push_back(std::abs(e - truth));
    }
    c.sd = valid.size() > 1 ? std::sqrt(ss / (r - 1.0)) : 0.0;
    c.rmse = std::sqrt(se2 / r);
    std::sort(abs_err.begin(), abs_err.end());
    c.mae = median_of_sorted(abs_err);
    if (c.sd > 0.0) {
        c.pct_bias = 100.0 * c.bias / c.sd;
    } else {
        c.pct_bias = 0.0;
        c.zero_sd = true;
    }
    return c;
}

CellResult run_cell(const CellSpec& cell, int workers, bool keep_draws) {
    const int R = cell.replications;
    std::vector<double> estimates(R);
    std::vector<char> flags(R, 0);

    bool need_ps[2] = {false, false}, need_or[2] = {false, false};
    if (cell.ps_spec) need_ps[spec_index(*cell.ps_spec)] = true;
    if (cell.or_spec && cell.estimator.family != Family::WLS)
        need_or[spec_index(*cell.or_spec)] = true;

    parallel_reps(R, workers, [&](int rep) {
        RepFits f = make_fits(cell.scenario, cell.n, cell.master_seed, rep, need_ps,
                              need_or, cell.pi_floor);
        try {
            EstimateResult e = evaluate(f, cell.estimator, cell.ps_spec, cell.or_spec);
            estimates[rep] = e.value;
            flags[rep] = e.flagged ? 1 : 0;
        } catch (const std::exception&) {
            estimates[rep] = std::numeric_limits<double>::quiet_NaN();
            flags[rep] = 1;
        }
    });

    CellResult c = metrics(estimates, cell.scenario.true_mu1());
    for (char fl : flags) c.flagged_replications += fl;
    c.unreliable = c.flagged_replications > R / 20;
    if (keep_draws) c.estimates = std::move(estimates);
    return c;
}

std::vector<TableRow> run_table(const Scenario& scenario, int replications,
                                std::uint64_t master_seed, int workers,
                                bool keep_draws) {
    struct RowSpec {
        Family family;
        std::optional<DesignSpec> ps, orr;
    };
    const DesignSpec C = DesignSpec::correct, M = DesignSpec::misspecified;
    std::vector<RowSpec> grid = {
        {Family::IPW_raw, C, {}},  {Family::IPW_raw, M, {}},
        {Family::STRAT, C, {}},    {Family::STRAT, M, {}},
        {Family::OR_mean, {}, C},  {Family::OR_mean, {}, M},
    };
    for (DesignSpec ps : {C, M})
        for (Family fam : {Family::AIPW_fix, Family::WLS, Family::REG_tilde,
                           Family::REG_hat, Family::REG_tilde_m, Family::REG_hat_m})
            for (DesignSpec orr : {C, M}) grid.push_back({fam, ps, orr});

    std::vector<TableRow> rows;
    for (int n : {200, 1000}) {
        const std::size_t base = rows.size();
        for (const RowSpec& rs : grid) {
            TableRow row;
            row.scenario = scenario.label();
            row.n = n;
            row.ps_spec = rs.ps ? design_spec_label(*rs.ps) : "none";
            row.or_spec = rs.orr ? design_spec_label(*rs.orr) : "none";
            row.estimator = family_label(rs.family);
            rows.push_back(std::move(row));
        }

        std::vector<std::vector<double>> est(grid.size(),
                                             std::vector<double>(replications));
        std::vector<std::vector<char>> flg(grid.size(),
                                           std::vector<char>(replications, 0));
        bool need_ps[2] = {true, true}, need_or[2] = {true, true};

        parallel_reps(replications, workers, [&](int rep) {
            RepFits f = make_fits(scenario, n, master_seed, rep, need_ps, need_or,
                                  0.0);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                EstimatorSpec spec;
                spec.family = grid[g].family;
                try {
                    EstimateResult e = evaluate(f, spec, grid[g].ps, grid[g].orr);
                    est[g][rep] = e.value;
                    flg[g][rep] = e.flagged ? 1 : 0;
                } catch (const std::exception&) {
                    est[g][rep] = std::numeric_limits<double>::quiet_NaN();
                    flg[g][rep] = 1;
                }
            }
        });

        for (std::size_t g = 0; g < grid.size(); ++g) {
            CellResult c = metrics(est[g], scenario.true_mu1());
            for (char fl : flg[g]) c.flagged_replications += fl;
            c.unreliable = c.flagged_replications > replications / 20;
            if (keep_draws) c.estimates = std::move(est[g]);
            rows[base + g].result = std::move(c);
        }
    }
    return rows;
}

void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows,
                     std::uint64_t seed, int replications) {
    os << "# seed=" << seed << " R=" << replications << "\n";
    os << "scenario,n,ps_spec,or_spec,estimator,bias,pct_bias,rmse,mae,flagged,R,seed\n";
    char buf[256];
    for (const TableRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%s,%s,%s,%.6g,%.6g,%.6g,%.6g,%d,%d,%llu\n",
                      r.scenario.c_str(), r.n, r.ps_spec.c_str(), r.or_spec.c_str(),
                      r.estimator.c_str(), r.result.bias, r.result.pct_bias,
                      r.result.rmse, r.result.mae, r.result.flagged_replications,
                      r.result.replications,
                      static_cast<unsigned long long>(seed));
        os << buf;
    }
}

MisspecDiagnostics misspec_diagnostics(const Dataset& data) {
    MisspecDiagnostics d;
    LinearFit or_c = fit_or_treated(data, DesignSpec::correct);
    LinearFit or_m = fit_or_treated(data, DesignSpec::misspecified);
    Matrix design_c = data.design_matrix(DesignSpec::correct);
    Matrix design_m = data.design_matrix(DesignSpec::misspecified);

    Vector fit_c, fit_m, y_t;
    for (int i = 0; i < data.n(); ++i) {
        if (data.t(i) != 1) continue;
        fit_c.push_back(or_c.predict_m(design_c.row(i)));
        fit_m.push_back(or_m.predict_m(design_m.row(i)));
        y_t.push_back(data.outcome(i));
    }

    double ym = 0.0;
    for (double y : y_t) ym += y;
    ym /= y_t.size();
    double sst = 0.0, ssr = 0.0;
    for (std::size_t i = 0; i < y_t.size(); ++i) {
        sst += (y_t[i] - ym) * (y_t[i] - ym);
        ssr += (y_t[i] - fit_m[i]) * (y_t[i] - fit_m[i]);
    }
    d.r_squared = 1.0 - ssr / sst;
    d.fitted_y_correlation = correlation(fit_c, fit_m);

    std::vector<double> diff(fit_c.size());
    for (std::size_t i = 0; i < fit_c.size(); ++i)
        diff[i] = std::abs(fit_c[i] - fit_m[i]);
    std::sort(diff.begin(), diff.end());
    d.diff_q1 = quantile_sorted(diff, 0.25);
    d.diff_q2 = quantile_sorted(diff, 0.50);
    d.diff_q3 = quantile_sorted(diff, 0.75);
    d.diff_max = diff.back();

    LogisticFit ps_c = fit_ps(data, DesignSpec::correct);
    LogisticFit ps_m = fit_ps(data, DesignSpec::misspecified);
    Vector lp_c(data.n()), lp_m(data.n());
    for (int i = 0; i < data.n(); ++i) {
        lp_c[i] = ps_c.linear_predictor(design_c.row(i));
        lp_m[i] = ps_m.linear_predictor(design_m.row(i));
    }
    d.ps_linpred_correlation = correlation(lp_c, lp_m);
    return d;
}

MisspecDiagnostics median_misspec_diagnostics(const Scenario& scenario, int n,
                                              int replications,
                                              std::uint64_t master_seed) {
    std::vector<MisspecDiagnostics> all(replications);
    for (int rep = 0; rep < replications; ++rep) {
        Dataset data = Dataset::generate(scenario, n, RngStream(master_seed, rep));
        all[rep] = misspec_diagnostics(data);
    }
    auto med = [&](double MisspecDiagnostics::*f) {
        std::vector<double> v(replications);
        for (int i = 0; i < replications; ++i) v[i] = all[i].*f;
        std::sort(v.begin(), v.end());
        return median_of_sorted(v);
    };
    MisspecDiagnostics m;
    m.r_squared = med(&MisspecDiagnostics::r_squared);
    m.fitted_y_correlation = med(&MisspecDiagnostics::fitted_y_correlation);
    m.ps_linpred_correlation = med(&MisspecDiagnostics::ps_linpred_correlation);
    m.diff_q1 = med(&MisspecDiagnostics::diff_q1);
    m.diff_q2 = med(&MisspecDiagnostics::diff_q2);
    m.diff_q3 = med(&MisspecDiagnostics::diff_q3);
    m.diff_max = med(&MisspecDiagnostics::diff_max);
    return m;
}

} // namespace dreg
