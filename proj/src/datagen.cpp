#include "dreg/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dreg {

namespace {

double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Scenario Scenario::parse(const std::string& s) {
    if (s == "ks") return ks();
    if (s == "alt") return alt();
    throw std::invalid_argument("unknown scenario: " + s);
}

double Scenario::mean_outcome(const std::array<double, 4>& z) const {
    double m = intercept;
    for (int j = 0; j < 4; ++j) m += outcome_slopes[j] * z[j];
    return m;
}

double Scenario::propensity(const std::array<double, 4>& z) const {
    double lp = 0.0;
    for (int j = 0; j < 4; ++j) lp += ps_slopes[j] * z[j];
    return expit(lp);
}

std::array<double, 4> Scenario::transform(const std::array<double, 4>& z) const {
    std::array<double, 4> x;
    x[0] = std::exp(z[0] / 2.0);
    x[1] = z[1] / (1.0 + std::exp(z[0])) + 10.0;
    x[2] = std::pow(z[0] * z[2] / 25.0 + 0.6, 3.0);
    const double s4 = (name == Name::ks) ? z[1] + z[3] : z[2] + z[3];
    x[3] = (s4 + 20.0) * (s4 + 20.0);
    return x;
}

DesignSpec parse_design_spec(const std::string& s) {
    if (s == "correct") return DesignSpec::correct;
    if (s == "misspecified") return DesignSpec::misspecified;
    throw std::invalid_argument("unknown design spec: " + s);
}

const char* design_spec_label(DesignSpec d) {
    return d == DesignSpec::correct ? "correct" : "misspecified";
}

double Dataset::outcome(int i) const {
    if (!y_known_[i])
        throw std::logic_error("outcome() on a unit with missing Y");
    return y_full_[i];
}

Dataset Dataset::generate(const Scenario& scenario, int n, const RngStream& rng) {
    if (n < 1) throw std::invalid_argument("generate: n must be >= 1");
    Dataset d;
    for (auto& c : d.z_) c.resize(n);
    for (auto& c : d.x_) c.resize(n);
    d.t_.resize(n);
    d.y_full_.resize(n);
    d.y_known_.resize(n);

    // Separate sub-streams for Z, noise and treatment uniforms, so the
    // ks and alt designs share all randomness under a common seed.
    RngStream zs = rng.substream(0);
    RngStream es = rng.substream(1);
    RngStream us = rng.substream(2);

    for (int i = 0; i < n; ++i) {
        std::array<double, 4> z;
        for (int j = 0; j < 4; ++j) z[j] = zs.next_normal();
        const double eps = es.next_normal();
        const double u = us.next_uniform();

        const double pi = scenario.propensity(z);
        const int t = (u < pi) ? 1 : 0; // strict less-than tie rule
        const std::array<double, 4> x = scenario.transform(z);

        for (int j = 0; j < 4; ++j) {
            d.z_[j][i] = z[j];
            d.x_[j][i] = x[j];
        }
        d.t_[i] = t;
        d.y_full_[i] = scenario.mean_outcome(z) + scenario.noise_sd * eps;
        d.y_known_[i] = (t == 1);
    }
    return d;
}

Matrix Dataset::design_matrix(DesignSpec spec) const {
    if (spec == DesignSpec::correct && !has_latent())
        throw std::invalid_argument(
            "correct design requested but dataset has no latent covariates");
    Matrix m(static_cast<std::size_t>(n()), 5);
    for (int i = 0; i < n(); ++i) {
        m(i, 0) = 1.0;
        for (int j = 0; j < 4; ++j)
            m(i, j + 1) = (spec == DesignSpec::correct) ? z(i, j) : x(i, j);
    }
    return m;
}

void Dataset::write_csv(std::ostream& os, bool with_latent) const {
    if (with_latent && !has_latent())
        throw std::invalid_argument("write_csv: dataset has no latent covariates");
    os << "t,y,x1,x2,x3,x4";
    if (with_latent) os << ",z1,z2,z3,z4";
    os << "\n";
    for (int i = 0; i < n(); ++i) {
        os << t_[i] << ',';
        if (y_known_[i]) os << fmt17(y_full_[i]);
        for (int j = 0; j < 4; ++j) os << ',' << fmt17(x_[j][i]);
        if (with_latent)
            for (int j = 0; j < 4; ++j) os << ',' << fmt17(z_[j][i]);
        os << "\n";
    }
}

Dataset Dataset::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_csv: empty input");
    bool with_latent;
    if (line == "t,y,x1,x2,x3,x4")
        with_latent = false;
    else if (line == "t,y,x1,x2,x3,x4,z1,z2,z3,z4")
        with_latent = true;
    else
        throw std::runtime_error("read_csv: unrecognized header: " + line);

    DatasetBuilder b;
    if (!with_latent) b.mark_no_latent();
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.push_back("");
        const std::size_t want = with_latent ? 10u : 6u;
        if (fields.size() != want)
            throw std::runtime_error("read_csv: bad field count in row: " + line);

        const int t = std::stoi(fields[0]);
        const bool y_present = !fields[1].empty();
        const double y = y_present ? std::stod(fields[1]) : 0.0;
        std::array<double, 4> x, z{0, 0, 0, 0};
        for (int j = 0; j < 4; ++j) x[j] = std::stod(fields[2 + j]);
        if (with_latent)
            for (int j = 0; j < 4; ++j) z[j] = std::stod(fields[6 + j]);

        if (y_present)
            b.row(t, y, x, z);
        else
            b.missing_row(t, x, z);
    }
    return b.build();
}

DatasetBuilder& DatasetBuilder::row(int t, double y, std::array<double, 4> x,
                                    std::array<double, 4> z) {
    for (int j = 0; j < 4; ++j) {
        d_.x_[j].push_back(x[j]);
        if (has_latent_) d_.z_[j].push_back(z[j]);
    }
    d_.t_.push_back(t);
    d_.y_full_.push_back(y);
    d_.y_known_.push_back(true);
    return *this;
}

DatasetBuilder& DatasetBuilder::missing_row(int t, std::array<double, 4> x,
                                            std::array<double, 4> z) {
    for (int j = 0; j < 4; ++j) {
        d_.x_[j].push_back(x[j]);
        if (has_latent_) d_.z_[j].push_back(z[j]);
    }
    d_.t_.push_back(t);
    d_.y_full_.push_back(0.0);
    d_.y_known_.push_back(false);
    return *this;
}

DatasetBuilder& DatasetBuilder::mark_no_latent() {
    has_latent_ = false;
    for (auto& c : d_.z_) c.clear();
    return *this;
}

Dataset DatasetBuilder::build() { return d_; }

} // namespace dreg
