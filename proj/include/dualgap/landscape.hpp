#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dualgap/matrix.hpp"

namespace dualgap {

// Multi-branch ReLU networks with hand-coded gradients, SGD training on a
// synthetic teacher task, 2-d loss-surface projections, and the hitting-rate
// study. Each branch is an ordered list of weight matrices with ReLU between
// them and a linear last layer; branch outputs are summed or averaged.

enum class Combine { sum, average };
enum class LossKind { tau_hinge, squared, multiclass_hinge };

const char* combine_name(Combine c);
const char* loss_name(LossKind k);
Combine combine_from_name(const std::string& name);
LossKind loss_from_name(const std::string& name);

struct MultiBranchNet {
    std::size_t input_dim = 0;
    std::size_t output_dim = 1;
    Combine combine = Combine::sum;
    std::vector<std::vector<Matrix>> branches;  // branch -> layer weights

    std::size_t branch_count() const { return branches.size(); }
};

// `hidden` lists the widths of the ReLU layers inside every branch; an empty
// list makes each branch a single linear map. Weights start at zero.
MultiBranchNet make_net(std::size_t input_dim, std::size_t output_dim, std::size_t branch_count,
                        const std::vector<std::size_t>& hidden, Combine combine);

// Independent N(0, 1/fan_in) entries per layer.
void init_gaussian(MultiBranchNet& net, std::uint64_t seed);

std::size_t param_count(const MultiBranchNet& net);

// Fixed branch-major, layer-major, row-major layout; round-trips exactly.
std::vector<double> flatten(const MultiBranchNet& net);
void unflatten(MultiBranchNet& net, const std::vector<double>& params);

std::vector<double> net_forward(const MultiBranchNet& net, const std::vector<double>& x);

// Labeled sample set for the teacher task: continuous targets for the
// squared loss, sign labels for the hinge, class ids for the multiclass
// hinge.
struct TeacherData {
    std::vector<std::vector<double>> x;
    std::vector<double> target;
    std::vector<double> label;

    std::size_t size() const { return x.size(); }
};

struct TeacherInstance {
    TeacherData data;
    MultiBranchNet teacher;
};

// Standard-normal inputs labeled by a frozen one-hidden-layer ReLU teacher
// (one width-1 branch per hidden neuron, summed).
TeacherInstance teacher_synthetic_data(std::size_t n, std::size_t dim, std::size_t hidden,
                                       std::uint64_t seed);

// Mean loss over the whole sample set.
double dataset_loss(const MultiBranchNet& net, const TeacherData& data, LossKind kind,
                    double tau = 1.0);

// Per-sample loss gradient accumulated into `grad` (flatten layout) with
// weight `scale`. Returns the sample's loss.
double add_loss_gradient(const MultiBranchNet& net, const std::vector<double>& x, double y,
                         LossKind kind, double tau, double scale, std::vector<double>& grad);

struct SgdOptions {
    std::size_t iters = 20000;
    double lr = 0.05;
    std::size_t batch = 32;
    double tau = 1.0;
    std::size_t trace_stride = 100;  // 0 disables the trace
    double stop_tol = -1.0;          // full-data loss threshold; negative disables
    std::size_t stop_check = 1000;   // full-data evaluations this many iters apart
};

struct SgdResult {
    std::vector<double> trace;
    double final_loss = 0.0;
    std::size_t iters_run = 0;
    bool diverged = false;
};

// Plain minibatch SGD with hand-derived gradients (ReLU subgradient 0 at 0),
// sampling with replacement from an own generator stream per seed.
SgdResult sgd_train(MultiBranchNet& net, const TeacherData& data, LossKind kind,
                    std::uint64_t seed, const SgdOptions& opt);

struct PlaneGrid {
    std::size_t resolution = 0;
    std::vector<double> alpha;                      // resolution axis values
    std::vector<double> beta;                       // resolution axis values
    std::vector<double> loss;                       // row-major [beta][alpha]
    std::array<std::array<double, 2>, 3> anchors{};  // plane coordinates of the three points

    double at(std::size_t bi, std::size_t ai) const { return loss[bi * resolution + ai]; }
};

// Loss surface on the plane through three parameter vectors, spanned by the
// orthonormalized differences, swept over their bounding box with a 20%
// margin on each side.
PlaneGrid plane_projection_grid(const MultiBranchNet& proto, const TeacherData& data,
                                LossKind kind, double tau, const std::vector<double>& theta_a,
                                const std::vector<double>& theta_b,
                                const std::vector<double>& theta_c, std::size_t resolution);
PlaneGrid plane_projection_grid_serial(const MultiBranchNet& proto, const TeacherData& data,
                                       LossKind kind, double tau,
                                       const std::vector<double>& theta_a,
                                       const std::vector<double>& theta_b,
                                       const std::vector<double>& theta_c,
                                       std::size_t resolution);

std::string plane_grid_csv(const PlaneGrid& g);

// Fraction of random grid point pairs whose exact grid midpoint lies above
// the chord by more than 1e-9; pairs are drawn with even index sums from a
// fixed generator, so the midpoint is itself a grid node.
double convexity_violation_metric(const PlaneGrid& g);

struct HitOptions {
    std::size_t seeds = 100;
    double tol = 1e-4;
    std::size_t iters = 20000;
    double lr = 0.05;
    std::size_t batch = 32;

    // Full-budget setting: 100,000 iterations at tolerance 1e-5.
    static HitOptions full_budget();
};

struct HitTable {
    std::vector<std::size_t> widths;
    std::vector<std::size_t> hits;
    std::size_t seeds = 0;
};

// Trains `seeds` independent one-hidden-layer students per width on the
// hinge task and counts runs whose final loss reaches the known global
// minimum 0 within `tol`. Trial generators derive from (master, width,
// trial), so results are schedule-independent.
HitTable hitting_rate_experiment(const TeacherData& data, const std::vector<std::size_t>& widths,
                                 const HitOptions& opt, std::uint64_t master_seed);

std::string hit_table_csv(const HitTable& t);

// Spearman rank correlation with tie-averaged ranks.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace dualgap
