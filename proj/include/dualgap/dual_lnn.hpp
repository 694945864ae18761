#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualgap/linear_net.hpp"
#include "dualgap/matrix.hpp"

namespace dualgap {

// Dual side of the regularized deep linear network problem:
//
//   D(Lambda) = -1/2 |||Ytilde - Lambda|||_{d_min}^2 + 1/2 ||Y||_F^2
//   over  ||Lambda||_spectral <= gamma,  Row(Lambda) within Row(X),
//
// where ||| . |||_{d_min}^2 sums the top d_min squared singular values.

double dual_objective(const Matrix& lambda, const ProblemInstance& p);

struct DualFeasibility {
    double spectral_excess = 0.0;    // max(0, ||Lambda|| - gamma)
    double row_space_residual = 0.0;  // ||Lambda - Lambda pinv(X) X||_F
};
DualFeasibility dual_feasibility(const Matrix& lambda, const ProblemInstance& p);

// Optimal dual certificate gamma * U_r V_r^T over the positive-rank part of
// Ytilde's SVD. Splitting at k = min(rank, d_min) recovers the two-block
// form: gamma U_k V_k^T on the singular spaces of the optimal Z plus a
// spectral-norm-gamma tail on the complement.
Matrix closed_form_certificate(const ProblemInstance& p);

struct DualConditionsReport {
    // Subgradient membership: the T-space part of Lambda must equal
    // gamma U_Z V_Z^T and the T-orthogonal part must fit in the gamma ball.
    double subgradient_residual = 0.0;
    // P_T(Ytilde - Lambda) must reproduce Z.
    double projection_residual = 0.0;
    // sigma_{d_min}(Z) - || P_{T-perp}(Ytilde - Lambda) ||_spectral; the
    // condition requires this to be non-negative.
    double spectral_margin = 0.0;
    // Frobenius norms of the stationarity equations at the balanced factors
    // of Z, one per layer.
    std::vector<double> stationarity_residuals;
    double tol = 0.0;
    bool pass = false;
};

DualConditionsReport check_dual_conditions(const Matrix& lambda, const Matrix& z,
                                           const ProblemInstance& p, double tol = 1e-8);

struct AscentOptions {
    double eta0 = 1.0;  // step eta0 / sqrt(t)
    std::size_t max_iters = 5000;
    double tol = 1e-10;          // improvement threshold
    std::size_t patience = 50;   // consecutive sub-tol improvements to stop
    std::size_t trace_every = 1;
};

struct AscentResult {
    Matrix lambda;          // best iterate
    double value = 0.0;     // best dual objective
    std::size_t iters = 0;  // iterations actually run
    std::vector<double> trace;  // best-so-far objective, non-decreasing
    bool converged = false;     // stopped by patience rather than max_iters
};

// Projected supergradient ascent: Lambda <- clip(Lambda + eta_t * G_t, gamma)
// with G_t the top-d_min truncation of Ytilde - Lambda. Row(X) feasibility
// is preserved automatically since Lambda_0 = 0 and every update stays in
// Row(Ytilde - Lambda) + Row(Lambda).
AscentResult solve_dual_projected_ascent(const ProblemInstance& p, const AscentOptions& opts);

// svd_{d_min}(Ytilde - Lambda): the primal product matching a dual point.
Matrix recover_primal_from_dual(const Matrix& lambda, const ProblemInstance& p);

struct GapReportLNN {
    std::size_t n = 0, d = 0, d_min = 0, depth = 0;
    double gamma = 0.0;
    bool well_posed = false;

    double primal_closed_form = 0.0;
    double dual_closed_form = 0.0;
    double gap_closed_form = 0.0;  // primal - dual

    bool ran_iterative = false;
    double dual_iterative = 0.0;
    std::size_t iterative_iters = 0;
    bool iterative_converged = false;
    double iterative_rel_err = 0.0;  // |dual_it - dual_cf| / (1 + |dual_cf|)

    bool ran_local_search = false;
    double primal_local_search = 0.0;
    std::uint64_t local_search_seed = 0;

    // || Z_closed_form - svd_dmin(Ytilde - Lambda) ||_F with the certificate.
    double l2_primal_dual_distance = 0.0;

    DualConditionsReport conditions;

    AscentOptions solver;  // echoed parameters
};

struct GapReportOptions {
    bool run_iterative = true;
    bool run_local_search = false;
    std::size_t restarts = 10;
    LocalSearchOptions search;
    AscentOptions ascent;
    std::uint64_t seed = 0;
};

GapReportLNN duality_gap_report(const ProblemInstance& p, const GapReportOptions& opts);

std::string gap_report_to_json(const GapReportLNN& r);
std::string gap_report_lnn_csv_header();
std::string gap_report_csv_row(const GapReportLNN& r);

}  // namespace dualgap
