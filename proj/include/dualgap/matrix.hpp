#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace dualgap {

// Dense row-major matrix of doubles. Every routine in this header treats
// matrices as value types; nothing is cached behind the caller's back.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::size_t rows, std::size_t cols, std::vector<double> row_major);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return a_.size(); }
    bool empty() const { return a_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    Matrix transpose() const;
    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    double frobenius_norm() const;
    double max_abs() const;
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);
Matrix operator*(Matrix m, double s);
Matrix operator*(double s, Matrix m);

// OpenMP kernel (rows split across threads, inner sums in fixed k order, so
// results are bit-identical for every thread count).
Matrix matmul(const Matrix& a, const Matrix& b);
// Reference kernel used by the equivalence tests and the benchmark.
Matrix matmul_serial(const Matrix& a, const Matrix& b);

double frobenius_inner(const Matrix& a, const Matrix& b);

// Thin SVD A = U diag(sigma) V^T with sigma sorted descending.
// Deterministic sign convention: each U column's largest-magnitude entry is
// non-negative (ties resolved to the lowest row index), V adjusted to match.
struct SvdResult {
    Matrix U;
    std::vector<double> sigma;
    Matrix V;

    // Numerical rank: number of sigma_i > 1e-10 * sigma_1.
    std::size_t rank() const;
    // Smallest singular value above the rank threshold; +inf for a zero matrix.
    double sigma_min_positive() const;
};

inline constexpr double kRankRelTol = 1e-10;

SvdResult svd(const Matrix& a);

// Best rank-k approximation U_k diag(sigma_k) V_k^T.
Matrix truncated_svd(const Matrix& a, std::size_t k);
Matrix truncated_svd(const SvdResult& s, std::size_t k);

// Moore-Penrose inverse with singular values below the rank threshold dropped.
Matrix pseudo_inverse(const Matrix& a);

// Schatten p-norm (sum sigma_i^p)^(1/p); p = infinity gives the spectral norm.
double schatten_norm(const Matrix& a, double p);
// Sum of sigma_i^p without the outer root; the regularizers need this form.
double schatten_power_sum(const Matrix& a, double p);
double nuclear_norm(const Matrix& a);
double spectral_norm(const Matrix& a);

// Sum of the top min(d, min(rows, cols)) squared singular values.
double dmin_norm_sq(const Matrix& a, std::size_t d);

// Orthogonal projector onto the row space of x, i.e. pinv(x) * x.
Matrix row_space_projector(const Matrix& x);
// m * pinv(x) * x: projects the rows of m onto Row(x).
Matrix project_onto_row_space(const Matrix& m, const Matrix& x);

// Frobenius projection onto the spectral-norm ball of the given radius
// (singular values clipped at the radius).
Matrix spectral_ball_project(const Matrix& m, double radius);

void require_finite(const Matrix& m, const char* label);

}  // namespace dualgap
