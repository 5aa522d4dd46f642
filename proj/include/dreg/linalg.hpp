#ifndef DREG_LINALG_HPP
#define DREG_LINALG_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dreg {

using Vector = std::vector<double>;

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NonFiniteInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix. Sized for the small Gram systems used here
// (dimension ~10), not general-purpose linear algebra.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const double* row(std::size_t i) const { return data_.data() + i * cols_; }
    double* row(std::size_t i) { return data_.data() + i * cols_; }

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct SolveResult {
    Vector x;
    bool fallback_used = false; // ridge or minimum-norm path engaged
};

// Solve (A + ridge I) x = b for symmetric A. Cholesky first; if the
// factorization fails, retry with ridge = 1e-8 tr(A)/dim; if that also
// fails, return the minimum-norm least-squares solution from a
// symmetric eigendecomposition and set fallback_used.
SolveResult solve_spd(const Matrix& a, const Vector& b, double ridge = 0.0);

// Solve A x = b for general square A by Gaussian elimination with
// partial pivoting. On a singular pivot, falls back to the minimum-norm
// least-squares solution of the normal equations.
SolveResult solve_general(const Matrix& a, const Vector& b);

// Componentwise arithmetic mean of a nonempty set of equal-length vectors.
Vector sample_average(const std::vector<Vector>& values);

// Symmetric eigendecomposition by cyclic Jacobi sweeps. a must be
// symmetric; returns eigenvalues and the matrix of column eigenvectors.
void jacobi_eigen(const Matrix& a, Vector& eigenvalues, Matrix& eigenvectors);

double dot(const Vector& a, const Vector& b);
Vector matvec(const Matrix& a, const Vector& x);

} // namespace dreg

#endif
