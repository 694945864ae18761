#include "dualgap/matrix.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "dualgap/errors.hpp"
#include "dualgap/parallel.hpp"

namespace dualgap {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::size_t rows, std::size_t cols, std::vector<double> row_major) {
    require(row_major.size() == rows * cols, "matrix literal has wrong element count");
    Matrix m(rows, cols);
    m.a_ = std::move(row_major);
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require(rows_ == other.rows_ && cols_ == other.cols_, "matrix add: shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += other.a_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require(rows_ == other.rows_ && cols_ == other.cols_, "matrix subtract: shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= other.a_[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
}

double Matrix::frobenius_norm() const {
    // Neumaier-compensated sum of squares keeps the norm stable for the
    // report fields that get compared at 1e-12 scale.
    double sum = 0.0, comp = 0.0;
    for (double v : a_) {
        double term = v * v;
        double t = sum + term;
        if (std::abs(sum) >= std::abs(term))
            comp += (sum - t) + term;
        else
            comp += (term - t) + sum;
        sum = t;
    }
    return std::sqrt(sum + comp);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
}

bool Matrix::all_finite() const {
    for (double v : a_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }
Matrix operator*(Matrix m, double s) { return m *= s; }
Matrix operator*(double s, Matrix m) { return m *= s; }

namespace {

void matmul_row_range(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i0,
                      std::size_t i1) {
    const std::size_t n = a.cols();
    const std::size_t p = b.cols();
    for (std::size_t i = i0; i < i1; ++i) {
        double* out_row = out.data() + i * p;
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* b_row = b.data() + k * p;
            for (std::size_t j = 0; j < p; ++j) out_row[j] += aik * b_row[j];
        }
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    const int threads = worker_threads();
    const long long m = static_cast<long long>(a.rows());
#pragma omp parallel for num_threads(threads) schedule(static) if (m > 16)
    for (long long i = 0; i < m; ++i)
        matmul_row_range(a, b, out, static_cast<std::size_t>(i), static_cast<std::size_t>(i) + 1);
    return out;
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    matmul_row_range(a, b, out, 0, a.rows());
    return out;
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "frobenius_inner: shape mismatch");
    double sum = 0.0, comp = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t k = 0; k < a.size(); ++k) {
        double term = pa[k] * pb[k];
        double t = sum + term;
        if (std::abs(sum) >= std::abs(term))
            comp += (sum - t) + term;
        else
            comp += (term - t) + sum;
        sum = t;
    }
    return sum + comp;
}

std::size_t SvdResult::rank() const {
    if (sigma.empty() || sigma[0] <= 0.0) return 0;
    const double thresh = kRankRelTol * sigma[0];
    std::size_t r = 0;
    while (r < sigma.size() && sigma[r] > thresh) ++r;
    return r;
}

double SvdResult::sigma_min_positive() const {
    std::size_t r = rank();
    if (r == 0) return std::numeric_limits<double>::infinity();
    return sigma[r - 1];
}

SvdResult svd(const Matrix& a) {
    require(a.rows() > 0 && a.cols() > 0, "svd: empty matrix");
    require_finite(a, "svd input");
    using EMat = Eigen::MatrixXd;
    EMat ea(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) ea(i, j) = a(i, j);

    Eigen::JacobiSVD<EMat> solver(ea, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success)
        throw numerical_error("svd: iteration failed to converge");

    const std::size_t k = static_cast<std::size_t>(solver.singularValues().size());
    SvdResult out;
    out.U = Matrix(a.rows(), k);
    out.V = Matrix(a.cols(), k);
    out.sigma.resize(k);
    for (std::size_t j = 0; j < k; ++j) out.sigma[j] = solver.singularValues()(j);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) out.U(i, j) = solver.matrixU()(i, j);
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = 0; j < k; ++j) out.V(i, j) = solver.matrixV()(i, j);

    for (std::size_t j = 0; j < k; ++j) {
        std::size_t pivot = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double mag = std::abs(out.U(i, j));
            if (mag > best) {  // strict: ties keep the lowest row index
                best = mag;
                pivot = i;
            }
        }
        if (out.U(pivot, j) < 0.0) {
            for (std::size_t i = 0; i < a.rows(); ++i) out.U(i, j) = -out.U(i, j);
            for (std::size_t i = 0; i < a.cols(); ++i) out.V(i, j) = -out.V(i, j);
        }
    }

    if (!out.U.all_finite() || !out.V.all_finite())
        throw numerical_error("svd: non-finite factors");
    return out;
}

Matrix truncated_svd(const SvdResult& s, std::size_t k) {
    const std::size_t rows = s.U.rows();
    const std::size_t cols = s.V.rows();
    const std::size_t use = std::min({k, s.sigma.size(), s.rank()});
    Matrix out(rows, cols);
    for (std::size_t t = 0; t < use; ++t) {
        const double sv = s.sigma[t];
        for (std::size_t i = 0; i < rows; ++i) {
            const double usv = s.U(i, t) * sv;
            for (std::size_t j = 0; j < cols; ++j) out(i, j) += usv * s.V(j, t);
        }
    }
    return out;
}

Matrix truncated_svd(const Matrix& a, std::size_t k) { return truncated_svd(svd(a), k); }

Matrix pseudo_inverse(const Matrix& a) {
    SvdResult s = svd(a);
    const std::size_t r = s.rank();
    Matrix out(a.cols(), a.rows());
    for (std::size_t t = 0; t < r; ++t) {
        const double inv = 1.0 / s.sigma[t];
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double vs = s.V(i, t) * inv;
            for (std::size_t j = 0; j < a.rows(); ++j) out(i, j) += vs * s.U(j, t);
        }
    }
    return out;
}

double schatten_norm(const Matrix& a, double p) {
    require(p >= 1.0, "schatten_norm: p must be >= 1");
    SvdResult s = svd(a);
    if (std::isinf(p)) return s.sigma.empty() ? 0.0 : s.sigma[0];
    double sum = 0.0;
    for (double sv : s.sigma) sum += std::pow(sv, p);
    return std::pow(sum, 1.0 / p);
}

double schatten_power_sum(const Matrix& a, double p) {
    require(p >= 1.0, "schatten_power_sum: p must be >= 1");
    SvdResult s = svd(a);
    double sum = 0.0;
    for (double sv : s.sigma) sum += std::pow(sv, p);
    return sum;
}

double nuclear_norm(const Matrix& a) {
    SvdResult s = svd(a);
    double sum = 0.0;
    for (double sv : s.sigma) sum += sv;
    return sum;
}

double spectral_norm(const Matrix& a) {
    SvdResult s = svd(a);
    return s.sigma.empty() ? 0.0 : s.sigma[0];
}

double dmin_norm_sq(const Matrix& a, std::size_t d) {
    SvdResult s = svd(a);
    const std::size_t use = std::min(d, s.sigma.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < use; ++t) sum += s.sigma[t] * s.sigma[t];
    return sum;
}

Matrix row_space_projector(const Matrix& x) { return matmul(pseudo_inverse(x), x); }

Matrix project_onto_row_space(const Matrix& m, const Matrix& x) {
    require(m.cols() == x.cols(), "row-space projection: column counts differ");
    return matmul(m, row_space_projector(x));
}

Matrix spectral_ball_project(const Matrix& m, double radius) {
    require(radius >= 0.0, "spectral_ball_project: negative radius");
    SvdResult s = svd(m);
    if (s.sigma.empty() || s.sigma[0] <= radius) return m;
    Matrix out(m.rows(), m.cols());
    for (std::size_t t = 0; t < s.sigma.size(); ++t) {
        const double sv = std::min(s.sigma[t], radius);
        if (sv == 0.0) continue;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const double usv = s.U(i, t) * sv;
            for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) += usv * s.V(j, t);
        }
    }
    return out;
}

void require_finite(const Matrix& m, const char* label) {
    if (!m.all_finite()) throw numerical_error(std::string(label) + ": non-finite entries");
}

}  // namespace dualgap
