#include "dreg/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace dreg {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw DimensionMismatch("matvec: size mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

Vector sample_average(const std::vector<Vector>& values) {
    if (values.empty()) throw EmptyInput("sample_average: empty input");
    const std::size_t d = values.front().size();
    Vector mean(d, 0.0);
    for (const Vector& v : values) {
        if (v.size() != d) throw DimensionMismatch("sample_average: ragged input");
        for (std::size_t j = 0; j < d; ++j) mean[j] += v[j];
    }
    const double inv = 1.0 / static_cast<double>(values.size());
    for (double& m : mean) m *= inv;
    return mean;
}

namespace {

void check_square_finite(const Matrix& a, const Vector& b) {
    if (a.rows() != a.cols() || a.rows() != b.size())
        throw DimensionMismatch("solve: dimension mismatch");
    if (!a.all_finite()) throw NonFiniteInput("solve: non-finite matrix entry");
    for (double v : b)
        if (!std::isfinite(v)) throw NonFiniteInput("solve: non-finite rhs entry");
}

// Cholesky A = L L^T in place on a copy; returns false on a
// non-positive pivot.
bool cholesky_solve(const Matrix& a, const Vector& b, double ridge, Vector& x) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j) + (i == j ? ridge : 0.0);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return false;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    // forward then back substitution
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return true;
}

Vector min_norm_symmetric(const Matrix& a, const Vector& b) {
    const std::size_t n = a.rows();
    Vector eval;
    Matrix evec;
    jacobi_eigen(a, eval, evec);
    double amax = 0.0;
    for (double e : eval) amax = std::max(amax, std::abs(e));
    const double cutoff = amax * 1e-12;
    Vector x(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(eval[k]) <= cutoff) continue;
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += evec(i, k) * b[i];
        c /= eval[k];
        for (std::size_t i = 0; i < n; ++i) x[i] += c * evec(i, k);
    }
    return x;
}

} // namespace

void jacobi_eigen(const Matrix& a_in, Vector& eigenvalues, Matrix& eigenvectors) {
    const std::size_t n = a_in.rows();
    Matrix a = a_in;
    eigenvectors = Matrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = eigenvectors(k, p), vkq = eigenvectors(k, q);
                    eigenvectors(k, p) = c * vkp - s * vkq;
                    eigenvectors(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a(i, i);
}

SolveResult solve_spd(const Matrix& a, const Vector& b, double ridge) {
    check_square_finite(a, b);
    const std::size_t n = a.rows();
    // symmetry to tolerance
    double anorm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) anorm = std::max(anorm, std::abs(a(i, j)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-10 * std::max(anorm, 1.0))
                throw DimensionMismatch("solve_spd: matrix not symmetric");

    SolveResult r;
    if (cholesky_solve(a, b, ridge, r.x)) return r;

    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
    const double auto_ridge = 1e-8 * trace / static_cast<double>(n);
    if (cholesky_solve(a, b, ridge + auto_ridge, r.x)) {
        r.fallback_used = true;
        return r;
    }
    Matrix ar = a;
    for (std::size_t i = 0; i < n; ++i) ar(i, i) += ridge;
    r.x = min_norm_symmetric(ar, b);
    r.fallback_used = true;
    return r;
}

SolveResult solve_general(const Matrix& a, const Vector& b) {
    check_square_finite(a, b);
    const std::size_t n = a.rows();
    Matrix m = a;
    Vector rhs = b;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    double anorm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) anorm = std::max(anorm, std::abs(m(i, j)));

    bool singular = false;
    for (std::size_t k = 0; k < n && !singular; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
        if (std::abs(m(piv, k)) <= 1e-13 * std::max(anorm, 1.0)) {
            singular = true;
            break;
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(rhs[k], rhs[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = m(i, k) / m(k, k);
            m(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
            rhs[i] -= f * rhs[k];
        }
    }

    SolveResult r;
    if (!singular) {
        r.x.assign(n, 0.0);
        for (std::size_t ii = n; ii-- > 0;) {
            double s = rhs[ii];
            for (std::size_t j = ii + 1; j < n; ++j) s -= m(ii, j) * r.x[j];
            r.x[ii] = s / m(ii, ii);
        }
        return r;
    }
    // min-norm least squares via A^T A
    Matrix ata(n, n);
    Vector atb(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += a(k, i) * a(k, j);
            ata(i, j) = s;
        }
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += a(k, i) * b[k];
        atb[i] = s;
    }
    r.x = min_norm_symmetric(ata, atb);
    r.fallback_used = true;
    return r;
}

} // namespace dreg
