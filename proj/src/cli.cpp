#include "dreg/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "dreg/datagen.hpp"
#include "dreg/estimators.hpp"
#include "dreg/models.hpp"
#include "dreg/oracles.hpp"
#include "dreg/simharness.hpp"

namespace dreg {

namespace {

struct Options {
    std::string scenario = "ks";
    int n = 1000;
    std::uint64_t seed = 0;
    bool with_latent = false;
    std::string output;

    std::string data_path;
    std::string estimator = "REG_tilde";
    std::string ps_design = "correct";
    std::string or_design = "correct";
    std::string basis = "one_and_m1";
    int strata = 5;
    double pi_floor = 0.0;

    std::string preset;
    int replications = 1000;
    int workers = 1;
    bool keep_draws = false;

    std::string quantity = "variance-bound";
    long long draws = 1000000;
};

std::unique_ptr<CLI::App> build_app(Options& o) {
    auto app = std::make_unique<CLI::App>(
        "Estimators of a population mean under missingness: outcome "
        "regression, propensity weighting, doubly robust families, and a "
        "Monte Carlo study harness");
    app->require_subcommand(0, 1);
    app->set_config("--config", "", "flat key=value config file with [subcommand] sections");
    app->allow_config_extras(false);

    CLI::App* gen = app->add_subcommand("generate", "Generate a dataset CSV");
    gen->configurable();
    gen->add_option("--scenario", o.scenario, "ks or alt")->default_val("ks");
    gen->add_option("--n", o.n, "sample size")->check(CLI::PositiveNumber)->required();
    gen->add_option("--seed", o.seed, "master seed")->required();
    gen->add_flag("--with-latent", o.with_latent, "include latent z columns");
    gen->add_option("-o,--output", o.output, "output path (default stdout)");

    CLI::App* est = app->add_subcommand("estimate", "Point estimate on a dataset CSV");
    est->configurable();
    est->add_option("--data", o.data_path, "dataset CSV path")->required();
    est->add_option("--estimator", o.estimator,
                    "OLS|IPW|IPW_ratio|AIPW_fix|WLS|REG_tilde|REG_hat|"
                    "REG_tilde_m|REG_hat_m|strat")
        ->required();
    est->add_option("--ps-design", o.ps_design, "correct|misspecified");
    est->add_option("--or-design", o.or_design, "correct|misspecified");
    est->add_option("--basis", o.basis, "m1_only|one_and_m1|one_h_m1");
    est->add_option("--strata", o.strata, "strata count for strat")
        ->check(CLI::PositiveNumber);
    est->add_option("--pi-floor", o.pi_floor, "floor on fitted propensities")
        ->check(CLI::NonNegativeNumber);
    est->add_option("-o,--output", o.output, "output path (default stdout)");

    CLI::App* sim = app->add_subcommand("simulate", "Monte Carlo study");
    sim->configurable();
    sim->add_option("--preset", o.preset, "table1 (ks) or table2 (alt)");
    sim->add_option("--scenario", o.scenario, "ks or alt (custom cell)");
    sim->add_option("--n", o.n, "sample size (custom cell)")
        ->check(CLI::PositiveNumber);
    sim->add_option("--estimator", o.estimator, "estimator family (custom cell)");
    sim->add_option("--ps-design", o.ps_design, "correct|misspecified");
    sim->add_option("--or-design", o.or_design, "correct|misspecified|none");
    sim->add_option("--strata", o.strata, "strata count for strat")
        ->check(CLI::PositiveNumber);
    sim->add_option("--pi-floor", o.pi_floor, "floor on fitted propensities")
        ->check(CLI::NonNegativeNumber);
    sim->add_option("--replications", o.replications, "Monte Carlo replications")
        ->check(CLI::PositiveNumber);
    sim->add_option("--seed", o.seed, "master seed")->required();
    sim->add_option("--workers", o.workers, "parallel workers")
        ->check(CLI::PositiveNumber);
    sim->add_flag("--keep-draws", o.keep_draws,
                  "also write per-replication estimates next to the output");
    sim->add_option("-o,--output", o.output, "output path (default stdout)");

    CLI::App* ora = app->add_subcommand("oracle", "Ground-truth quantities of the design");
    ora->configurable();
    ora->add_option("--quantity", o.quantity, "variance-bound|strat-limit")->required();
    ora->add_option("--scenario", o.scenario, "ks or alt");
    ora->add_option("--strata", o.strata, "strata count (strat-limit)")
        ->check(CLI::PositiveNumber);
    ora->add_option("--ps-design", o.ps_design, "correct|misspecified (strat-limit)");
    ora->add_option("--draws", o.draws, "Monte Carlo draws")
        ->check(CLI::PositiveNumber);
    ora->add_option("--seed", o.seed, "master seed")->required();
    ora->add_option("-o,--output", o.output, "output path (default stdout)");

    return app;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output path: " + path);
    return file;
}

int run_generate(const Options& o) {
    Scenario sc = Scenario::parse(o.scenario);
    Dataset d = Dataset::generate(sc, o.n, RngStream(o.seed, 0));
    std::ofstream file;
    std::ostream& os = open_output(o.output, file);
    os << "# seed=" << o.seed << "\n";
    d.write_csv(os, o.with_latent);
    return 0;
}

int run_estimate(const Options& o) {
    std::ifstream in(o.data_path);
    if (!in) throw std::runtime_error("cannot open dataset: " + o.data_path);
    std::string first;
    if (in.peek() == '#') std::getline(in, first); // tolerate a seed header
    Dataset d = Dataset::read_csv(in);

    EstimatorSpec spec;
    spec.family = parse_family(o.estimator);
    spec.basis = parse_basis(o.basis);
    spec.strata = o.strata;
    const DesignSpec ps_spec = parse_design_spec(o.ps_design);
    const DesignSpec or_spec = parse_design_spec(o.or_design);

    EstimateResult r;
    std::optional<PsValues> ps;
    std::optional<Vector> m1;
    if (family_uses_ps(spec.family))
        ps = PsValues::from_fit(d, fit_ps(d, ps_spec), o.pi_floor);
    if (family_uses_or(spec.family) && spec.family != Family::WLS) {
        LinearFit fit = fit_or_treated(d, or_spec);
        m1 = predict_m_all(fit, d.design_matrix(or_spec));
    }
    switch (spec.family) {
        case Family::OR_mean: {
            LinearFit fit = fit_or_treated(d, or_spec);
            r.value = or_estimate(d, fit);
            break;
        }
        case Family::IPW_raw: r = ipw(d, *ps, IpwVersion::raw); break;
        case Family::IPW_ratio: r = ipw(d, *ps, IpwVersion::ratio); break;
        case Family::AIPW_fix: r = aipw_fix(d, *ps, *m1); break;
        case Family::WLS: r = wls_estimate(d, *ps, or_spec); break;
        case Family::REG_tilde:
        case Family::REG_tilde_m:
            r = reg_estimate(d, *ps, *m1, spec, RegVariant::tilde);
            break;
        case Family::REG_hat:
        case Family::REG_hat_m:
            r = reg_estimate(d, *ps, *m1, spec, RegVariant::hat);
            break;
        case Family::STRAT: r = strat_estimate(d, *ps, spec.strata); break;
        default:
            throw CLI::ValidationError("--estimator",
                                       "estimator not available from the CLI");
    }

    std::ofstream file;
    std::ostream& os = open_output(o.output, file);
    char buf[256];
    std::snprintf(buf, sizeof buf, "estimator,estimate,flagged,note\n%s,%.17g,%d,%s\n",
                  family_label(spec.family), r.value, r.flagged ? 1 : 0,
                  r.note.c_str());
    os << buf;
    return 0;
}

void write_draws_csv(const std::string& base, const std::vector<TableRow>& rows,
                     std::uint64_t seed) {
    const std::string path = base.empty() ? "draws.csv" : base + ".draws.csv";
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output path: " + path);
    os << "# seed=" << seed << "\n";
    os << "scenario,n,ps_spec,or_spec,estimator,rep,estimate\n";
    char buf[256];
    for (const TableRow& r : rows)
        for (std::size_t i = 0; i < r.result.estimates.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s,%d,%s,%s,%s,%zu,%.17g\n",
                          r.scenario.c_str(), r.n, r.ps_spec.c_str(),
                          r.or_spec.c_str(), r.estimator.c_str(), i,
                          r.result.estimates[i]);
            os << buf;
        }
}

int run_simulate(const Options& o, const CLI::App* sim) {
    std::vector<TableRow> rows;
    if (!o.preset.empty()) {
        if (o.preset != "table1" && o.preset != "table2")
            throw CLI::ValidationError("--preset", "must be table1 or table2");
        Scenario sc = o.preset == "table1" ? Scenario::ks() : Scenario::alt();
        rows = run_table(sc, o.replications, o.seed, o.workers, o.keep_draws);
    } else {
        if (!sim->count("--estimator"))
            throw CLI::ValidationError("--estimator",
                                       "required unless --preset is given");
        CellSpec cell;
        cell.scenario = Scenario::parse(o.scenario);
        cell.n = o.n;
        cell.replications = o.replications;
        cell.master_seed = o.seed;
        cell.pi_floor = o.pi_floor;
        cell.estimator.family = parse_family(o.estimator);
        cell.estimator.strata = o.strata;
        if (family_uses_ps(cell.estimator.family))
            cell.ps_spec = parse_design_spec(o.ps_design);
        if (family_uses_or(cell.estimator.family)) {
            if (o.or_design == "none")
                throw CLI::ValidationError("--or-design",
                                           "this estimator needs an OR model");
            cell.or_spec = parse_design_spec(o.or_design);
        }
        CellResult c = run_cell(cell, o.workers, o.keep_draws);
        TableRow row;
        row.scenario = cell.scenario.label();
        row.n = cell.n;
        row.ps_spec = cell.ps_spec ? design_spec_label(*cell.ps_spec) : "none";
        row.or_spec = cell.or_spec ? design_spec_label(*cell.or_spec) : "none";
        row.estimator = family_label(cell.estimator.family);
        row.result = std::move(c);
        rows.push_back(std::move(row));
    }

    std::ofstream file;
    std::ostream& os = open_output(o.output, file);
    write_table_csv(os, rows, o.seed, o.replications);
    if (o.keep_draws) write_draws_csv(o.output, rows, o.seed);

    int flagged_cells = 0;
    for (const TableRow& r : rows)
        if (r.result.unreliable) ++flagged_cells;
    std::cerr << "simulate: " << rows.size() << " cells, " << flagged_cells
              << " flagged\n";
    return 0;
}

int run_oracle(const Options& o) {
    Scenario sc = Scenario::parse(o.scenario);
    OracleValue v;
    if (o.quantity == "variance-bound") {
        v = variance_bound(sc, o.draws, o.seed);
    } else if (o.quantity == "strat-limit") {
        v = strat_limit(sc, o.strata, o.draws, parse_design_spec(o.ps_design),
                        o.seed);
    } else {
        throw CLI::ValidationError("--quantity",
                                   "must be variance-bound or strat-limit");
    }
    std::ofstream file;
    std::ostream& os = open_output(o.output, file);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "# seed=%llu\nquantity,scenario,value,mc_error,draws\n"
                  "%s,%s,%.10g,%.4g,%lld\n",
                  static_cast<unsigned long long>(o.seed), o.quantity.c_str(),
                  sc.label(), v.value, v.mc_standard_error, v.draws);
    os << buf;
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    Options o;
    auto app = build_app(o);
    try {
        app->parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app->exit(e);
    } catch (const CLI::ParseError& e) {
        app->exit(e);
        return 1;
    }
    try {
        if (app->got_subcommand("generate")) return run_generate(o);
        if (app->got_subcommand("estimate")) return run_estimate(o);
        if (app->got_subcommand("simulate"))
            return run_simulate(o, app->get_subcommand("simulate"));
        if (app->got_subcommand("oracle")) return run_oracle(o);
        std::cout << app->help();
        return 0;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}

std::string cli_help(const std::string& subcommand) {
    Options o;
    auto app = build_app(o);
    if (subcommand.empty()) return app->help();
    return app->get_subcommand(subcommand)->help();
}

} // namespace dreg
