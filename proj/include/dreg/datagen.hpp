#ifndef DREG_DATAGEN_HPP
#define DREG_DATAGEN_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "dreg/linalg.hpp"
#include "dreg/rng.hpp"

namespace dreg {

// Simulation design: a linear outcome in four latent standard-normal
// covariates plus logistic treatment assignment. The two named designs
// share everything except the transform producing the fourth observed
// covariate.
struct Scenario {
    enum class Name { ks, alt };
    Name name = Name::ks;

    double intercept = 210.0;
    std::array<double, 4> outcome_slopes{27.4, 13.7, 13.7, 13.7};
    std::array<double, 4> ps_slopes{-1.0, 0.5, -0.25, -0.1};
    double noise_sd = 1.0;

    static Scenario ks() { return Scenario{Name::ks}; }
    static Scenario alt() { return Scenario{Name::alt}; }
    static Scenario parse(const std::string& s);
    const char* label() const { return name == Name::ks ? "ks" : "alt"; }

    // Population mean of the treated-arm outcome: the latent covariates
    // and noise are zero-mean, so this is just the intercept.
    double true_mu1() const { return intercept; }

    double mean_outcome(const std::array<double, 4>& z) const;
    double propensity(const std::array<double, 4>& z) const;
    std::array<double, 4> transform(const std::array<double, 4>& z) const;
};

enum class ModelSide { ps, outcome };
enum class DesignSpec { correct, misspecified };

DesignSpec parse_design_spec(const std::string& s);
const char* design_spec_label(DesignSpec d);

// One generated (or loaded) sample. The complete outcome vector is kept
// for oracle computations only; estimator code must go through
// outcome(), which is defined only where t = 1.
class Dataset {
public:
    int n() const { return static_cast<int>(t_.size()); }

    int t(int i) const { return t_[i]; }
    double z(int i, int j) const { return z_[j][i]; }
    double x(int i, int j) const { return x_[j][i]; }

    // Observed outcome; only valid on treated units.
    double outcome(int i) const;

    // Complete-data outcome, for oracle use only.
    double oracle_outcome(int i) const { return y_full_[i]; }

    bool has_latent() const { return !z_[0].empty(); }

    static Dataset generate(const Scenario& scenario, int n, const RngStream& rng);

    void write_csv(std::ostream& os, bool with_latent) const;
    static Dataset read_csv(std::istream& is);

    // Rows (1, Z1..Z4) for the correct spec, (1, X1..X4) for the
    // misspecified one; the same convention serves both model sides.
    Matrix design_matrix(DesignSpec spec) const;

    friend class DatasetBuilder;

private:
    std::array<std::vector<double>, 4> z_;
    std::array<std::vector<double>, 4> x_;
    std::vector<int> t_;
    std::vector<double> y_full_;
    std::vector<bool> y_known_; // loaded datasets have no untreated Y
};

// Assembles hand-built datasets in tests and the CSV reader.
class DatasetBuilder {
public:
    DatasetBuilder& row(int t, double y, std::array<double, 4> x,
                        std::array<double, 4> z = {0, 0, 0, 0});
    DatasetBuilder& missing_row(int t, std::array<double, 4> x,
                                std::array<double, 4> z = {0, 0, 0, 0});
    DatasetBuilder& mark_no_latent();
    Dataset build();

private:
    Dataset d_;
    bool has_latent_ = true;
};

} // namespace dreg

#endif
