#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dualgap/errors.hpp"
#include "dualgap/linear_net.hpp"
#include "dualgap/rng.hpp"

using namespace dualgap;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = scale * rng.gaussian();
    return m;
}

ProblemInstance diag_instance() {
    // X = I_3, Y = diag(5, 3, 1), widths 3-2-3, gamma = 1/2.
    Matrix y(3, 3);
    y(0, 0) = 5.0;
    y(1, 1) = 3.0;
    y(2, 2) = 1.0;
    return make_instance({3, 2, 3}, 0.5, Matrix::identity(3), y);
}

}  // namespace

TEST_CASE("instance construction validates shapes and derives d_min") {
    ProblemInstance p = diag_instance();
    CHECK(p.depth() == 2);
    CHECK(p.d_min == 2);
    CHECK(p.well_posed);
    // Ytilde = Y for X = I.
    CHECK((p.Ytilde - p.Y).max_abs() <= 1e-14);

    CHECK_THROWS_AS(make_instance({3, 2}, 0.1, Matrix::identity(3), Matrix(2, 3)),
                    precondition_error);
    CHECK_THROWS_AS(make_instance({3, 2, 3}, -1.0, Matrix::identity(3), Matrix(3, 3)),
                    precondition_error);
    CHECK_THROWS_AS(make_instance({3, 2, 3}, 0.1, Matrix::identity(4), Matrix(3, 4)),
                    precondition_error);
}

TEST_CASE("well-posedness flag reacts to gamma against the smallest positive sigma") {
    Matrix y(3, 3);
    y(0, 0) = 5.0;
    y(1, 1) = 3.0;
    y(2, 2) = 1.0;
    CHECK(make_instance({3, 2, 3}, 0.999, Matrix::identity(3), y).well_posed);
    CHECK_FALSE(make_instance({3, 2, 3}, 1.0, Matrix::identity(3), y).well_posed);
    CHECK(make_instance({3, 2, 3}, 0.0, Matrix::identity(3), y).well_posed);
}

TEST_CASE("closed-form global product on the diagonal oracle instance") {
    // Soft-thresholding at gamma = 1/2 keeps the top d_min = 2 values:
    // Z* = diag(4.5, 2.5, 0); objective 1/2(0.25+0.25+1) + 0.5*7 = 4.25.
    ProblemInstance p = diag_instance();
    ClosedFormPrimal cf = closed_form_global_product(p);
    CHECK(cf.rank == 2);
    CHECK(cf.z(0, 0) == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(cf.z(1, 1) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(cf.z(2, 2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(cf.value == doctest::Approx(4.25).epsilon(1e-12));

    // Ill-posed instance is rejected.
    Matrix y = p.Y;
    ProblemInstance bad = make_instance({3, 2, 3}, 1.5, Matrix::identity(3), y);
    CHECK_THROWS_AS(closed_form_global_product(bad), precondition_error);
}

TEST_CASE("gamma = 0 reduces the closed form to the top-d_min truncation") {
    Matrix y = random_matrix(5, 5, 900);
    ProblemInstance p = make_instance({5, 3, 5}, 0.0, Matrix::identity(5), y);
    ClosedFormPrimal cf = closed_form_global_product(p);
    CHECK((cf.z - truncated_svd(y, 3)).max_abs() <= 1e-12);
}

TEST_CASE("nuclear_objective reports value and feasibility diagnostics") {
    ProblemInstance p = diag_instance();
    Matrix z(3, 3);
    z(0, 0) = 4.5;
    z(1, 1) = 2.5;
    NuclearReport rep = nuclear_objective(z, p);
    CHECK(rep.value == doctest::Approx(4.25).epsilon(1e-12));
    CHECK(rep.rank_excess <= 1e-12);
    CHECK(rep.row_space_residual <= 1e-12);

    // Rank-3 Z on a d_min = 2 instance shows positive rank excess.
    Matrix z3 = Matrix::identity(3);
    CHECK(nuclear_objective(z3, p).rank_excess == doctest::Approx(1.0));
}

TEST_CASE("balanced factorization reconstructs Z and attains the variational equality") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        for (std::size_t h : {2u, 3u, 4u}) {
            std::vector<std::size_t> dims(h + 1, 4);
            dims[1] = 3;  // d_min = 3
            ProblemInstance p =
                make_instance(dims, 0.3, random_matrix(4, 7, 50 + seed), Matrix(4, 7));
            // Rank-feasible Z inside Row(X): random rank-2 combination times the projector.
            Matrix z = matmul(matmul(random_matrix(4, 2, seed), random_matrix(2, 7, seed + 10)),
                              p.row_projector);
            Factors w = balanced_factorization(z, p);
            REQUIRE(w.size() == h);
            CHECK((factor_product(w, p.X) - z).max_abs() <= 1e-9 * (1.0 + z.max_abs()));

            // Regularizer identity: (1/H) sum of Schatten-H powers equals ||Z||_*.
            double reg = schatten_power_sum(matmul(w[0], p.X), static_cast<double>(h));
            for (std::size_t i = 1; i < h; ++i)
                reg += schatten_power_sum(w[i], static_cast<double>(h));
            reg /= static_cast<double>(h);
            CHECK(reg == doctest::Approx(nuclear_norm(z)).epsilon(1e-8));
        }
    }
}

TEST_CASE("balanced factorization rejects infeasible Z") {
    ProblemInstance p = diag_instance();
    CHECK_THROWS_AS(balanced_factorization(Matrix::identity(3), p), precondition_error);  // rank 3
}

TEST_CASE("generalized Hoelder chain on random factors") {
    // ||W_H...W_1 X||_* <= ||W_1 X||_{S_H} prod ||W_i||_{S_H}
    //                   <= (1/H)(||W_1 X||^H + sum ||W_i||^H); margins >= -1e-12.
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(seed);
        std::size_t h = 2 + seed % 3;
        std::vector<std::size_t> dims;
        for (std::size_t i = 0; i <= h; ++i) dims.push_back(2 + rng.below(4));
        std::size_t n = 3 + rng.below(4);
        Matrix x = random_matrix(dims[0], n, 1000 + seed);
        Factors w;
        for (std::size_t i = 0; i < h; ++i)
            w.push_back(random_matrix(dims[i + 1], dims[i], 2000 + 10 * seed + i));

        double lhs = nuclear_norm(factor_product(w, x));
        double mid = schatten_norm(matmul(w[0], x), static_cast<double>(h));
        double sum_powers = schatten_power_sum(matmul(w[0], x), static_cast<double>(h));
        for (std::size_t i = 1; i < h; ++i) {
            mid *= schatten_norm(w[i], static_cast<double>(h));
            sum_powers += schatten_power_sum(w[i], static_cast<double>(h));
        }
        double rhs = sum_powers / static_cast<double>(h);
        CHECK(mid - lhs >= -1e-12 * (1.0 + std::abs(mid)));
        CHECK(rhs - mid >= -1e-12 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("primal objective at the balanced closed-form factors equals the nuclear optimum") {
    ProblemInstance p = diag_instance();
    ClosedFormPrimal cf = closed_form_global_product(p);
    Factors w = balanced_factorization(cf.z, p);
    CHECK(primal_objective(w, p) == doctest::Approx(cf.value).epsilon(1e-10));
}

TEST_CASE("analytic gradients match central finite differences") {
    for (std::size_t h : {2u, 3u}) {
        std::vector<std::size_t> dims(h + 1, 3);
        ProblemInstance p =
            make_instance(dims, 0.2, random_matrix(3, 5, 31), random_matrix(3, 5, 32));
        for (std::uint64_t pt = 0; pt < 10; ++pt) {
            Factors w;
            for (std::size_t i = 0; i < h; ++i) w.push_back(random_matrix(3, 3, 600 + 10 * pt + i));
            Factors g = primal_gradients(w, p);
            const double step = 1e-6;
            double max_rel = 0.0;
            for (std::size_t i = 0; i < h; ++i) {
                for (std::size_t r = 0; r < 3; ++r)
                    for (std::size_t c = 0; c < 3; ++c) {
                        Factors wp = w, wm = w;
                        wp[i](r, c) += step;
                        wm[i](r, c) -= step;
                        double fd =
                            (primal_objective(wp, p) - primal_objective(wm, p)) / (2.0 * step);
                        double rel =
                            std::abs(fd - g[i](r, c)) / (1.0 + std::abs(fd) + std::abs(g[i](r, c)));
                        max_rel = std::max(max_rel, rel);
                    }
            }
            CHECK(max_rel <= 1e-5);
        }
    }
}

TEST_CASE("local search started at the balanced global optimum stays put") {
    ProblemInstance p = diag_instance();
    ClosedFormPrimal cf = closed_form_global_product(p);
    Factors w = balanced_factorization(cf.z, p);
    LocalSearchOptions opts;
    opts.steps = 200;
    opts.learning_rate = 1e-2;
    LocalSearchResult res = primal_local_search(p, w, opts);
    CHECK_FALSE(res.failed);
    CHECK(std::abs(res.objective - cf.value) <= 1e-6);
}

TEST_CASE("local search is monotone and matches Eckart-Young at gamma = 0") {
    Matrix y = random_matrix(4, 4, 71);
    ProblemInstance p = make_instance({4, 2, 4}, 0.0, Matrix::identity(4), y);
    SvdResult s = svd(y);
    double target = 0.5 * (s.sigma[2] * s.sigma[2] + s.sigma[3] * s.sigma[3]);

    LocalSearchOptions opts;
    opts.steps = 4000;
    opts.learning_rate = 5e-2;
    MultiStartResult ms = primal_multi_start(p, 5, opts, 7);
    CHECK_FALSE(ms.best.failed);
    for (std::size_t i = 1; i < ms.best.trace.size(); ++i)
        CHECK(ms.best.trace[i] <= ms.best.trace[i - 1] + 1e-12);
    CHECK(std::abs(ms.best.objective - target) <= 1e-4 * (1.0 + std::abs(target)));
}

TEST_CASE("multi-start search approaches the closed-form optimum on a regularized instance") {
    ProblemInstance p = gaussian_identity_instance(5, 5, 2, 2, 0.5, 17);
    ClosedFormPrimal cf = closed_form_global_product(p);
    LocalSearchOptions opts;
    opts.steps = 6000;
    opts.learning_rate = 5e-2;
    MultiStartResult ms = primal_multi_start(p, 10, opts, 3);
    CHECK_FALSE(ms.best.failed);
    CHECK(ms.best.objective >= cf.value - 1e-9);  // never below the global optimum
    CHECK(std::abs(ms.best.objective - cf.value) <= 1e-3 * (1.0 + std::abs(cf.value)));
}

TEST_CASE("generator produces the documented instance shape") {
    ProblemInstance p = gaussian_identity_instance(20, 20, 5, 3, 0.5, 42);
    CHECK(p.dims == std::vector<std::size_t>{20, 5, 5, 20});
    CHECK(p.d_min == 5);
    CHECK(p.well_posed);
    CHECK(p.gamma == doctest::Approx(0.5 * p.ytilde_svd.sigma_min_positive()).epsilon(1e-12));
    // Deterministic: same seed, same instance.
    ProblemInstance q = gaussian_identity_instance(20, 20, 5, 3, 0.5, 42);
    CHECK((p.Y - q.Y).max_abs() == 0.0);
}
