#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dualgap/epigraph.hpp"

namespace dualgap {

// Multi-branch hinge-loss networks on finite parameter grids: the averaged
// output f = (1/I) sum_i f_i(w_i; x) under the margin-scaled hinge, with a
// shared budget (1/I) sum_i h_i(w_i) <= K. Primal and dual are solved
// exactly over the grids.

enum class BranchFamily { affine, relu_unit, sigmoid_unit, tanh_unit, sinusoid, stack2 };
enum class RegularizerKind { squared_norm, norm };

const char* branch_family_name(BranchFamily f);
const char* regularizer_name(RegularizerKind r);
BranchFamily branch_family_from_name(const std::string& name);
RegularizerKind regularizer_from_name(const std::string& name);

// Parameter points are 1- or 2-dimensional; the second slot is ignored for
// one-parameter families.
using BranchParam = std::array<double, 2>;

struct BranchSpec {
    BranchFamily family = BranchFamily::affine;
    RegularizerKind reg = RegularizerKind::squared_norm;
    std::size_t param_dim = 1;
    std::vector<double> direction;  // input projection, one entry per feature
    double scale = 1.0;
    std::vector<BranchParam> grid;
    BranchParam box_lo{};
    BranchParam box_hi{};
};

std::size_t family_param_dim(BranchFamily f);

// Sub-network output for one parameter point and one input.
double branch_feature(const BranchSpec& b, BranchParam w, const std::vector<double>& x);
double branch_regularizer(const BranchSpec& b, BranchParam w);

// Tensor grid over the box with `per_dim` points per axis; validates the
// invariants (non-empty grid inside the box, regularizer midpoint-convex on
// random box pairs).
BranchSpec make_branch(BranchFamily family, RegularizerKind reg, std::vector<double> direction,
                       double scale, std::size_t per_dim, BranchParam box_lo, BranchParam box_hi);
void validate_branch(const BranchSpec& b);

struct Sample {
    std::vector<double> x;
    double y = 1.0;  // +1 or -1
    double weight = 0.0;
};

struct Dataset {
    std::vector<Sample> samples;
};

void validate_dataset(const Dataset& data);

// Gaussian features, random labels, positive random weights normalized to 1.
Dataset synthetic_dataset(std::size_t n, std::size_t dim, std::uint64_t seed);

// Per-branch, per-grid-point tables: c[i][k] = E[y * f_i(w_k; x)] and
// h[i][k] = h_i(w_k). Everything downstream works off these.
struct BranchTables {
    std::vector<std::vector<double>> c;
    std::vector<std::vector<double>> h;
    std::size_t branch_count() const { return c.size(); }
};

BranchTables precompute_tables(const std::vector<BranchSpec>& branches, const Dataset& data);

// Exact averaged hinge risk E max(0, 1 - y f / tau) for one assignment of a
// grid index per branch. Deliberately evaluates the hinge itself so margin
// violations show up.
double tau_hinge_risk(const std::vector<BranchSpec>& branches,
                      const std::vector<std::size_t>& assignment, const Dataset& data,
                      double tau);

struct AssumptionReport {
    bool ok = false;
    double margin = 0.0;             // tau minus the largest achievable y*f
    std::size_t witness_sample = 0;  // sample attaining the max
};

// The margin condition tau > y f(w; x) for every grid assignment. The max
// of y f over assignments separates across branches, so the check is exact.
AssumptionReport check_assumption_tau(const std::vector<BranchSpec>& branches,
                                      const Dataset& data, double tau);

double default_tau(const std::vector<BranchSpec>& branches, const Dataset& data);

// 30th percentile of the averaged regularizer over random grid assignments;
// feasible by construction and generically an active constraint.
double default_budget(const BranchTables& tables, std::uint64_t seed = 0);

struct PrimalSolution {
    double value = 0.0;
    std::vector<std::size_t> assignment;
    bool merged = false;       // frontier overflow forced bucket merging
    double merge_slack = 0.0;  // accumulated budget displacement from merging
};

// Exact minimizer of the affine risk 1 - (1/(I tau)) sum_i c_i subject to
// sum_i h_i <= I*K, by dynamic programming on the Pareto frontier of
// (accumulated budget, accumulated correlation). Falls back to budget-bucket
// merging only if the frontier exceeds a fixed cap, reporting the slack.
PrimalSolution primal_inf(const BranchTables& tables, double tau, double K);

// Product-enumeration reference for small instances.
PrimalSolution primal_inf_exhaustive(const BranchTables& tables, double tau, double K);

// Q(lambda) = 1 + sum_i min_k [ -c[i][k]/(I tau) + (lambda/I) h[i][k] ].
double dual_q(const BranchTables& tables, double tau, double lambda);

struct DualSolution {
    double value = 0.0;
    double lambda_star = 0.0;
    bool boundary = false;  // maximizer pinned at lambda_max with ascent left
};

// Exact maximum of the concave piecewise-linear lambda -> Q(lambda) - lambda*K
// over [0, lambda_max] by evaluating every lower-envelope breakpoint.
DualSolution dual_sup(const BranchTables& tables, double tau, double K, double lambda_max);

// Grows lambda_max geometrically until the maximizer is interior.
DualSolution solve_dual(const BranchTables& tables, double tau, double K);

// True-hinge primal and dual by product enumeration, for instances where the
// margin assumption fails. The product of grid sizes is capped.
PrimalSolution primal_inf_hinge(const std::vector<BranchSpec>& branches, const Dataset& data,
                                const BranchTables& tables, double tau, double K);
DualSolution solve_dual_hinge(const std::vector<BranchSpec>& branches, const Dataset& data,
                              const BranchTables& tables, double tau, double K);

struct DeltaReport {
    double delta = 0.0;            // max over the grid of f_hat - f_tilde, clipped at 0
    std::vector<double> f_hat;     // budget-constrained best risk per grid point
    std::vector<double> f_tilde;   // convex envelope of the risk per grid point
    // Extra slack needed because the grid evaluates f_hat - f_tilde only at
    // grid points while the hull decomposition lands between them. Equals
    // sup_t [staircase(t) - hull(t)] - delta over the (h, risk) cloud,
    // computed exactly from the staircase steps; zero on dense grids.
    double envelope_slack = 0.0;
};

// Per-branch non-convexity divergence of the risk w -> 1 - E[y f_i(w)]/tau:
// f_hat is the best risk among grid points with no larger regularizer,
// f_tilde the convex envelope over the parameter grid.
DeltaReport compute_delta(const BranchSpec& b, const std::vector<double>& c_row, double tau);

// The branch's augmented epigraph sample set {(1/I)(h(w), 1 - c(w)/tau)}.
PlanarSet branch_epigraph(const BranchSpec& b, const std::vector<double>& c_row, double tau,
                          std::size_t branch_count);

struct GapReport {
    std::size_t branch_count = 0;
    double tau = 0.0;
    double budget = 0.0;
    bool assumption_tau_ok = false;
    double assumption_margin = 0.0;
    double inf_p = 0.0;
    double sup_d = 0.0;
    double lambda_star = 0.0;
    double gap = 0.0;
    std::vector<double> delta_i;
    double delta_worst = 0.0;
    double bound = 0.0;  // (2/I) * delta_worst
    double eps_grid = 0.0;
    bool lower_ok = false;  // gap >= -eps_grid
    bool upper_ok = false;  // gap <= bound + eps_grid (trivially true when unasserted)
    bool dual_boundary = false;
};

// End-to-end instance solve plus bound verification. Throws a numerical
// error if weak duality fails, or if the margin assumption holds and the
// measured gap exceeds (2/I) delta_worst + eps_grid.
GapReport verify_theorem1(const std::vector<BranchSpec>& branches, const Dataset& data,
                          double tau, double K);

std::string gap_report_to_json(const GapReport& r);
std::string gap_report_csv_header();
std::string gap_report_csv_row(const GapReport& r);

}  // namespace dualgap
