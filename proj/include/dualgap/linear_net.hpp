#pragma once

#include <cstdint>
#include <vector>

#include "dualgap/matrix.hpp"

namespace dualgap {

// Deep linear network fitting Y from X through H factor matrices, with the
// Schatten-H power regularizer on the factors:
//
//   P(W) = 1/2 ||Y - W_H ... W_1 X||_F^2
//          + (gamma/H) (||W_1 X||_{S_H}^H + sum_{i>=2} ||W_i||_{S_H}^H)
//
// and its rank-constrained nuclear-norm companion over Z in Row(X):
//
//   N(Z) = 1/2 ||Y - Z||_F^2 + gamma ||Z||_*,   rank(Z) <= d_min.
struct ProblemInstance {
    std::vector<std::size_t> dims;  // layer widths d_0 .. d_H, H >= 2
    double gamma = 0.0;
    Matrix X;  // d_0 x n
    Matrix Y;  // d_H x n

    // Derived on construction.
    Matrix Ytilde;          // Y pinv(X) X
    Matrix row_projector;   // pinv(X) X, n x n
    SvdResult ytilde_svd;   // SVD of Ytilde
    std::size_t d_min = 0;  // min over hidden widths d_1 .. d_{H-1}
    bool well_posed = false;  // gamma in [0, smallest positive sigma of Ytilde)

    std::size_t depth() const { return dims.size() - 1; }
    std::size_t samples() const { return X.cols(); }
};

ProblemInstance make_instance(std::vector<std::size_t> dims, double gamma, Matrix X, Matrix Y);

// Convenience generator behind the bundled configs: Y iid standard normal,
// X identity, all hidden widths equal to d_min, gamma = gamma_frac * smallest
// positive singular value of Ytilde.
ProblemInstance gaussian_identity_instance(std::size_t n, std::size_t d, std::size_t d_min,
                                           std::size_t depth, double gamma_frac,
                                           std::uint64_t seed);

using Factors = std::vector<Matrix>;  // W[i] has shape dims[i+1] x dims[i]

// W_H ... W_1 X.
Matrix factor_product(const Factors& w, const Matrix& x);

double primal_objective(const Factors& w, const ProblemInstance& p);

struct NuclearReport {
    double value = 0.0;        // 1/2 ||Y - Z||_F^2 + gamma ||Z||_*
    double rank_excess = 0.0;  // sigma_{d_min + 1}(Z), 0 when rank feasible
    double row_space_residual = 0.0;  // ||Z - Z pinv(X) X||_F
};
NuclearReport nuclear_objective(const Matrix& z, const ProblemInstance& p);

// Factors that attain the variational equality
//   ||Z||_* = (1/H)(||W_1 X||_{S_H}^H + sum_{i>=2} ||W_i||_{S_H}^H)
// with W_H ... W_1 X = Z: square-root-of-H powers of the singular values,
// zero-padded to the layer widths. Requires rank(Z) <= d_min and
// Row(Z) within Row(X).
Factors balanced_factorization(const Matrix& z, const ProblemInstance& p);

struct ClosedFormPrimal {
    Matrix z;             // soft-thresholded product U (sigma - gamma)_+ V^T
    double value = 0.0;   // N(Z), which is also the global primal optimum
    std::size_t rank = 0;  // retained spectral terms, min(rank(Ytilde), d_min)
};
// Requires a well-posed instance (gamma below the smallest positive singular
// value of Ytilde).
ClosedFormPrimal closed_form_global_product(const ProblemInstance& p);

// Analytic gradients of primal_objective. The Schatten term uses the
// subgradient U diag(sigma^{H-1}) V^T, which vanishes on zero singular values.
Factors primal_gradients(const Factors& w, const ProblemInstance& p);

struct LocalSearchResult {
    Factors w;
    double objective = 0.0;
    std::vector<double> trace;  // objective every trace_every steps
    std::size_t steps_taken = 0;
    bool failed = false;  // divergence to non-finite values
};

struct LocalSearchOptions {
    std::size_t steps = 2000;
    double learning_rate = 1e-2;
    std::size_t trace_every = 100;
    // Step halving on objective increase keeps descent monotone; the step is
    // gently re-grown after successful moves.
    bool adaptive = true;
    double stop_tol = 0.0;  // stop when a step improves by less than this
};

LocalSearchResult primal_local_search(const ProblemInstance& p, Factors init,
                                      const LocalSearchOptions& opts);

// Uniform [-s, s] entries with s = 1 / sqrt(max layer width).
Factors random_init(const ProblemInstance& p, std::uint64_t seed);

struct MultiStartResult {
    LocalSearchResult best;
    std::uint64_t best_seed = 0;
    std::size_t restarts = 0;
};
// Best of `restarts` local searches from seeded random inits; ties in the
// final objective resolve to the lowest seed.
MultiStartResult primal_multi_start(const ProblemInstance& p, std::size_t restarts,
                                    const LocalSearchOptions& opts, std::uint64_t seed_base = 0);

}  // namespace dualgap
