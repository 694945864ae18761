#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "dualgap/errors.hpp"
#include "dualgap/matrix.hpp"
#include "dualgap/parallel.hpp"
#include "dualgap/rng.hpp"

using namespace dualgap;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.gaussian();
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

}  // namespace

TEST_CASE("svd of a diagonal matrix recovers the diagonal, sorted descending") {
    // Hand-built oracle: diag(3, 1, 2) has singular values (3, 2, 1).
    Matrix a(3, 3);
    a(0, 0) = 3.0;
    a(1, 1) = 1.0;
    a(2, 2) = 2.0;
    SvdResult s = svd(a);
    REQUIRE(s.sigma.size() == 3);
    CHECK(s.sigma[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(s.sigma[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.sigma[2] == doctest::Approx(1.0).epsilon(1e-14));
    // Sign convention: columns of U are +e_i here (largest entry non-negative).
    CHECK(s.U(0, 0) == doctest::Approx(1.0));
    CHECK(s.U(2, 1) == doctest::Approx(1.0));
    CHECK(s.U(1, 2) == doctest::Approx(1.0));
    CHECK(s.rank() == 3);
}

TEST_CASE("svd of identity is all-ones spectrum") {
    SvdResult s = svd(Matrix::identity(4));
    for (double sv : s.sigma) CHECK(sv == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("svd reconstruction and orthonormality on random rectangular matrices") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        for (auto [r, c] : {std::pair<int, int>{7, 5}, {5, 7}, {6, 6}}) {
            Matrix a = random_matrix(r, c, 100 + seed * 10 + r);
            SvdResult s = svd(a);
            // U diag(sigma) V^T must reproduce A.
            Matrix recon = truncated_svd(s, s.sigma.size());
            CHECK(max_abs_diff(a, recon) <= 1e-10 * (1.0 + s.sigma[0]));
            // Orthonormal columns.
            Matrix utu = matmul(s.U.transpose(), s.U);
            Matrix vtv = matmul(s.V.transpose(), s.V);
            CHECK(max_abs_diff(utu, Matrix::identity(utu.rows())) <= 1e-10);
            CHECK(max_abs_diff(vtv, Matrix::identity(vtv.rows())) <= 1e-10);
            // Descending order.
            for (std::size_t k = 1; k < s.sigma.size(); ++k) CHECK(s.sigma[k - 1] >= s.sigma[k]);
        }
    }
}

TEST_CASE("svd is deterministic call to call") {
    Matrix a = random_matrix(8, 6, 42);
    SvdResult s1 = svd(a);
    SvdResult s2 = svd(a);
    CHECK(max_abs_diff(s1.U, s2.U) == 0.0);
    CHECK(max_abs_diff(s1.V, s2.V) == 0.0);
    for (std::size_t k = 0; k < s1.sigma.size(); ++k) CHECK(s1.sigma[k] == s2.sigma[k]);
}

TEST_CASE("rank thresholding on a numerically low-rank matrix") {
    // Rank-2 by construction: third row is the sum of the first two.
    Matrix a(3, 4);
    Rng rng(7);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 4; ++j) a(i, j) = rng.gaussian();
    for (std::size_t j = 0; j < 4; ++j) a(2, j) = a(0, j) + a(1, j);
    SvdResult s = svd(a);
    CHECK(s.rank() == 2);
    CHECK(s.sigma_min_positive() == s.sigma[1]);
}

TEST_CASE("zero matrix has rank 0 and +inf smallest positive singular value") {
    SvdResult s = svd(Matrix(3, 3));
    CHECK(s.rank() == 0);
    CHECK(std::isinf(s.sigma_min_positive()));
}

TEST_CASE("truncated_svd at rank k is the Eckart-Young optimum among sampled competitors") {
    Matrix a = random_matrix(8, 8, 11);
    SvdResult s = svd(a);
    for (std::size_t k : {1u, 3u, 5u}) {
        Matrix best = truncated_svd(s, k);
        double best_err = (a - best).frobenius_norm();
        // Oracle identity: error^2 = sum of squared trailing singular values.
        double tail = 0.0;
        for (std::size_t t = k; t < s.sigma.size(); ++t) tail += s.sigma[t] * s.sigma[t];
        CHECK(best_err * best_err == doctest::Approx(tail).epsilon(1e-10));
        // Any competitor of the same rank sampled at random must not beat it.
        for (std::uint64_t trial = 0; trial < 5; ++trial) {
            Matrix b = matmul(random_matrix(8, k, 500 + trial), random_matrix(k, 8, 900 + trial));
            CHECK((a - b).frobenius_norm() >= best_err - 1e-12);
        }
    }
}

TEST_CASE("pseudo_inverse satisfies the four Penrose identities") {
    for (auto [r, c] : {std::pair<int, int>{6, 4}, {4, 6}, {5, 5}}) {
        Matrix a = random_matrix(r, c, 1000 + r * 10 + c);
        Matrix p = pseudo_inverse(a);
        Matrix apa = matmul(matmul(a, p), a);
        Matrix pap = matmul(matmul(p, a), p);
        Matrix ap = matmul(a, p);
        Matrix pa = matmul(p, a);
        CHECK(max_abs_diff(apa, a) <= 1e-10);
        CHECK(max_abs_diff(pap, p) <= 1e-10);
        CHECK(max_abs_diff(ap, ap.transpose()) <= 1e-10);
        CHECK(max_abs_diff(pa, pa.transpose()) <= 1e-10);
    }
}

TEST_CASE("pseudo_inverse of identity and of a rank-deficient projector") {
    CHECK(max_abs_diff(pseudo_inverse(Matrix::identity(4)), Matrix::identity(4)) <= 1e-14);
    // pinv of an orthogonal projector is itself.
    Matrix x = random_matrix(3, 6, 77);
    Matrix proj = row_space_projector(x);
    CHECK(max_abs_diff(pseudo_inverse(proj), proj) <= 1e-9);
}

TEST_CASE("schatten norms: closed forms on a known spectrum") {
    // diag(3, 4) has sigma = (4, 3): nuclear 7, spectral 4, S_2 = 5, S_3 = (91)^(1/3).
    Matrix a(2, 2);
    a(0, 0) = 3.0;
    a(1, 1) = 4.0;
    CHECK(nuclear_norm(a) == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(spectral_norm(a) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(schatten_norm(a, 2.0) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(schatten_norm(a, 3.0) == doctest::Approx(std::cbrt(91.0)).epsilon(1e-14));
    CHECK(schatten_norm(a, std::numeric_limits<double>::infinity()) == doctest::Approx(4.0));
    CHECK(schatten_power_sum(a, 3.0) == doctest::Approx(91.0).epsilon(1e-14));
    CHECK_THROWS_AS(schatten_norm(a, 0.5), precondition_error);
}

TEST_CASE("schatten_norm(-, 2) equals the Frobenius norm on random input") {
    Matrix a = random_matrix(6, 9, 5);
    CHECK(schatten_norm(a, 2.0) == doctest::Approx(a.frobenius_norm()).epsilon(1e-12));
}

TEST_CASE("schatten p-norm is non-increasing in p") {
    Matrix a = random_matrix(5, 5, 31);
    double prev = schatten_norm(a, 1.0);
    for (double p : {1.5, 2.0, 3.0, 6.0, 20.0}) {
        double cur = schatten_norm(a, p);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("dmin_norm_sq sums the top-d squared singular values") {
    Matrix a(3, 3);
    a(0, 0) = 3.0;
    a(1, 1) = 1.0;
    a(2, 2) = 2.0;
    CHECK(dmin_norm_sq(a, 1) == doctest::Approx(9.0));
    CHECK(dmin_norm_sq(a, 2) == doctest::Approx(13.0));
    CHECK(dmin_norm_sq(a, 3) == doctest::Approx(14.0));
    CHECK(dmin_norm_sq(a, 10) == doctest::Approx(14.0));  // d beyond min dim saturates
}

TEST_CASE("row_space_projector is an orthogonal projector fixing rows of X") {
    Matrix x = random_matrix(4, 9, 13);
    Matrix p = row_space_projector(x);
    CHECK(max_abs_diff(matmul(p, p), p) <= 1e-10);
    CHECK(max_abs_diff(p, p.transpose()) <= 1e-10);
    CHECK(max_abs_diff(matmul(x, p), x) <= 1e-10);
    // A vector orthogonal to Row(X) projects to ~0: build one via residual.
    Matrix g = random_matrix(1, 9, 14);
    Matrix res = g - matmul(g, p);
    CHECK(matmul(res, p).max_abs() <= 1e-10 * (1.0 + g.max_abs()));
}

TEST_CASE("project_onto_row_space with X = I is the identity map") {
    Matrix m = random_matrix(3, 5, 21);
    CHECK(max_abs_diff(project_onto_row_space(m, Matrix::identity(5)), m) <= 1e-12);
}

TEST_CASE("spectral_ball_project clips singular values and fixes interior points") {
    Matrix a(2, 2);
    a(0, 0) = 3.0;
    a(1, 1) = 1.0;
    Matrix clipped = spectral_ball_project(a, 2.0);
    CHECK(clipped(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(clipped(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spectral_norm(clipped) <= 2.0 + 1e-12);
    // Already inside the ball: unchanged (exact fast path).
    Matrix inside = spectral_ball_project(a, 5.0);
    CHECK(max_abs_diff(inside, a) == 0.0);
    // Radius zero collapses to the zero matrix.
    CHECK(spectral_ball_project(a, 0.0).max_abs() <= 1e-15);
}

TEST_CASE("spectral_ball_project is the Frobenius projection: no sampled feasible point is closer") {
    Matrix m = random_matrix(5, 4, 33);
    double radius = 0.5 * spectral_norm(m);
    Matrix p = spectral_ball_project(m, radius);
    double dist = (m - p).frobenius_norm();
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix q = spectral_ball_project(random_matrix(5, 4, 4000 + trial), radius);
        CHECK((m - q).frobenius_norm() >= dist - 1e-12);
    }
}

TEST_CASE("matmul OpenMP kernel matches the serial reference bit for bit") {
    Matrix a = random_matrix(37, 23, 1);
    Matrix b = random_matrix(23, 31, 2);
    Matrix serial = matmul_serial(a, b);
    for (int threads : {1, 2, 4, 7}) {
        set_worker_threads(threads);
        Matrix par = matmul(a, b);
        CHECK(max_abs_diff(serial, par) == 0.0);
    }
    set_worker_threads(0);
}

TEST_CASE("matmul agrees with a hand-rolled triple loop oracle") {
    Matrix a = random_matrix(4, 3, 8);
    Matrix b = random_matrix(3, 5, 9);
    Matrix expect(4, 5);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            expect(i, j) = s;
        }
    CHECK(max_abs_diff(matmul(a, b), expect) <= 1e-15);
    CHECK_THROWS_AS(matmul(a, a), precondition_error);
}

TEST_CASE("non-finite input is rejected up front") {
    Matrix a(2, 2);
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(a.all_finite());
    CHECK_THROWS_AS(svd(a), numerical_error);
}
