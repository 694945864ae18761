#include "dualgap/multibranch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "dualgap/errors.hpp"
#include "dualgap/parallel.hpp"
#include "dualgap/rng.hpp"
#include "dualgap/serialization.hpp"

namespace dualgap {

namespace {

constexpr std::size_t kFrontierCap = 16384;
constexpr std::size_t kMergeBins = 2048;
constexpr std::size_t kProductCap = 200000;

double neumaier_sum(const std::vector<double>& xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        double t = sum + x;
        comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

double objective_from_correlation(double corr, std::size_t count, double tau) {
    return 1.0 - corr / (static_cast<double>(count) * tau);
}

double dot_direction(const BranchSpec& b, const std::vector<double>& x) {
    require(b.direction.size() == x.size(), "branch direction and input dimension differ");
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += b.direction[j] * x[j];
    return s;
}

// Construction-time validation reports configuration mistakes, not runtime
// precondition breaches.
void require_config(bool cond, const std::string& what) {
    if (!cond) throw config_error(what);
}

}  // namespace

const char* branch_family_name(BranchFamily f) {
    switch (f) {
        case BranchFamily::affine: return "affine";
        case BranchFamily::relu_unit: return "relu_unit";
        case BranchFamily::sigmoid_unit: return "sigmoid_unit";
        case BranchFamily::tanh_unit: return "tanh_unit";
        case BranchFamily::sinusoid: return "sinusoid";
        case BranchFamily::stack2: return "stack2";
    }
    return "affine";
}

const char* regularizer_name(RegularizerKind r) {
    return r == RegularizerKind::squared_norm ? "squared_norm" : "norm";
}

BranchFamily branch_family_from_name(const std::string& name) {
    for (BranchFamily f : {BranchFamily::affine, BranchFamily::relu_unit,
                           BranchFamily::sigmoid_unit, BranchFamily::tanh_unit,
                           BranchFamily::sinusoid, BranchFamily::stack2})
        if (name == branch_family_name(f)) return f;
    throw config_error("unknown branch family: " + name);
}

RegularizerKind regularizer_from_name(const std::string& name) {
    if (name == "squared_norm") return RegularizerKind::squared_norm;
    if (name == "norm") return RegularizerKind::norm;
    throw config_error("unknown regularizer: " + name);
}

std::size_t family_param_dim(BranchFamily f) {
    switch (f) {
        case BranchFamily::affine:
        case BranchFamily::tanh_unit:
        case BranchFamily::sinusoid: return 1;
        case BranchFamily::relu_unit:
        case BranchFamily::sigmoid_unit:
        case BranchFamily::stack2: return 2;
    }
    return 1;
}

double branch_feature(const BranchSpec& b, BranchParam w, const std::vector<double>& x) {
    const double t = dot_direction(b, x);
    switch (b.family) {
        case BranchFamily::affine: return b.scale * w[0] * t;
        case BranchFamily::relu_unit: return b.scale * w[1] * std::max(0.0, w[0] * t + 0.5);
        case BranchFamily::sigmoid_unit: return b.scale * w[1] / (1.0 + std::exp(-w[0] * t));
        case BranchFamily::tanh_unit: return b.scale * std::tanh(w[0] * t);
        case BranchFamily::sinusoid: return b.scale * std::sin(w[0] * t);
        case BranchFamily::stack2: return b.scale * w[1] * std::tanh(w[0] * std::tanh(t));
    }
    return 0.0;
}

double branch_regularizer(const BranchSpec& b, BranchParam w) {
    double q = w[0] * w[0];
    if (b.param_dim == 2) q += w[1] * w[1];
    return b.reg == RegularizerKind::squared_norm ? q : std::sqrt(q);
}

void validate_branch(const BranchSpec& b) {
    require_config(b.param_dim == 1 || b.param_dim == 2,
                   "branch parameter dimension must be 1 or 2");
    require_config(b.param_dim == family_param_dim(b.family),
                   "parameter dimension does not match the branch family");
    require_config(!b.grid.empty(), "branch grid is empty");
    require_config(!b.direction.empty(), "branch direction is empty");
    for (std::size_t d = 0; d < b.param_dim; ++d)
        require_config(b.box_lo[d] <= b.box_hi[d], "branch box is inverted");
    for (const BranchParam& w : b.grid)
        for (std::size_t d = 0; d < b.param_dim; ++d) {
            require_config(std::isfinite(w[d]), "branch grid point is not finite");
            require_config(w[d] >= b.box_lo[d] - 1e-12 && w[d] <= b.box_hi[d] + 1e-12,
                           "branch grid point escapes the box");
        }

    Rng rng(0x5eedc0de);
    for (int trial = 0; trial < 64; ++trial) {
        BranchParam a{}, c{}, mid{};
        for (std::size_t d = 0; d < b.param_dim; ++d) {
            a[d] = b.box_lo[d] + (b.box_hi[d] - b.box_lo[d]) * rng.uniform();
            c[d] = b.box_lo[d] + (b.box_hi[d] - b.box_lo[d]) * rng.uniform();
            mid[d] = 0.5 * (a[d] + c[d]);
        }
        double ha = branch_regularizer(b, a), hc = branch_regularizer(b, c);
        double hm = branch_regularizer(b, mid);
        if (hm > 0.5 * (ha + hc) + 1e-12 * (1.0 + std::abs(ha) + std::abs(hc)))
            throw config_error("branch regularizer fails a midpoint convexity check");
    }
}

BranchSpec make_branch(BranchFamily family, RegularizerKind reg, std::vector<double> direction,
                       double scale, std::size_t per_dim, BranchParam box_lo,
                       BranchParam box_hi) {
    require_config(per_dim >= 1, "grid needs at least one point per axis");
    BranchSpec b;
    b.family = family;
    b.reg = reg;
    b.param_dim = family_param_dim(family);
    b.direction = std::move(direction);
    b.scale = scale;
    b.box_lo = box_lo;
    b.box_hi = box_hi;
    auto axis = [&](std::size_t d, std::size_t k) {
        if (per_dim == 1) return 0.5 * (box_lo[d] + box_hi[d]);
        return box_lo[d] +
               (box_hi[d] - box_lo[d]) * static_cast<double>(k) / static_cast<double>(per_dim - 1);
    };
    if (b.param_dim == 1) {
        for (std::size_t k = 0; k < per_dim; ++k) b.grid.push_back({axis(0, k), 0.0});
    } else {
        for (std::size_t k0 = 0; k0 < per_dim; ++k0)
            for (std::size_t k1 = 0; k1 < per_dim; ++k1)
                b.grid.push_back({axis(0, k0), axis(1, k1)});
    }
    validate_branch(b);
    return b;
}

void validate_dataset(const Dataset& data) {
    require_config(!data.samples.empty(), "dataset is empty");
    const std::size_t dim = data.samples.front().x.size();
    require_config(dim > 0, "dataset features are empty");
    double wsum = 0.0;
    for (const Sample& s : data.samples) {
        require_config(s.x.size() == dim, "dataset features have inconsistent dimensions");
        for (double v : s.x) require_config(std::isfinite(v), "dataset feature is not finite");
        require_config(s.y == 1.0 || s.y == -1.0, "labels must be +1 or -1");
        require_config(s.weight >= 0.0 && std::isfinite(s.weight),
                       "weights must be non-negative");
        wsum += s.weight;
    }
    require_config(std::abs(wsum - 1.0) <= 1e-12, "weights must sum to 1");
}

Dataset synthetic_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
    require(n >= 1 && dim >= 1, "dataset shape must be positive");
    Rng rng(Rng::stream_seed(seed, 0xda7a));
    Dataset data;
    data.samples.resize(n);
    double wsum = 0.0;
    for (Sample& s : data.samples) {
        s.x.resize(dim);
        for (double& v : s.x) v = rng.gaussian();
        s.y = rng.uniform() < 0.5 ? -1.0 : 1.0;
        s.weight = 0.05 + rng.uniform();
        wsum += s.weight;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        data.samples[i].weight /= wsum;
        acc += data.samples[i].weight;
    }
    data.samples[n - 1].weight = 1.0 - acc;
    return data;
}

BranchTables precompute_tables(const std::vector<BranchSpec>& branches, const Dataset& data) {
    require(!branches.empty(), "no branches");
    for (const BranchSpec& b : branches) validate_branch(b);
    validate_dataset(data);

    BranchTables t;
    t.c.resize(branches.size());
    t.h.resize(branches.size());
    const long long count = static_cast<long long>(branches.size());
    const int threads = worker_threads();
#pragma omp parallel for num_threads(threads) schedule(static) if (count > 1)
    for (long long i = 0; i < count; ++i) {
        const BranchSpec& b = branches[static_cast<std::size_t>(i)];
        auto& ci = t.c[static_cast<std::size_t>(i)];
        auto& hi = t.h[static_cast<std::size_t>(i)];
        ci.resize(b.grid.size());
        hi.resize(b.grid.size());
        std::vector<double> terms(data.samples.size());
        for (std::size_t k = 0; k < b.grid.size(); ++k) {
            for (std::size_t s = 0; s < data.samples.size(); ++s)
                terms[s] = data.samples[s].weight * data.samples[s].y *
                           branch_feature(b, b.grid[k], data.samples[s].x);
            ci[k] = neumaier_sum(terms);
            hi[k] = branch_regularizer(b, b.grid[k]);
        }
    }
    return t;
}

double tau_hinge_risk(const std::vector<BranchSpec>& branches,
                      const std::vector<std::size_t>& assignment, const Dataset& data,
                      double tau) {
    require(tau > 0.0, "tau must be positive");
    require(assignment.size() == branches.size(), "one grid index per branch required");
    for (std::size_t i = 0; i < branches.size(); ++i)
        require(assignment[i] < branches[i].grid.size(), "assignment index out of range");
    const double inv = 1.0 / static_cast<double>(branches.size());
    std::vector<double> terms(data.samples.size());
    for (std::size_t s = 0; s < data.samples.size(); ++s) {
        double f = 0.0;
        for (std::size_t i = 0; i < branches.size(); ++i)
            f += branch_feature(branches[i], branches[i].grid[assignment[i]], data.samples[s].x);
        f *= inv;
        terms[s] = data.samples[s].weight *
                   std::max(0.0, 1.0 - data.samples[s].y * f / tau);
    }
    return neumaier_sum(terms);
}

AssumptionReport check_assumption_tau(const std::vector<BranchSpec>& branches,
                                      const Dataset& data, double tau) {
    require(tau > 0.0, "tau must be positive");
    require(!branches.empty(), "no branches");
    // max over assignments of y*f separates across branches, so the margin
    // can be computed exactly without touching the product grid.
    const double inv = 1.0 / static_cast<double>(branches.size());
    AssumptionReport rep;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < data.samples.size(); ++s) {
        if (data.samples[s].weight == 0.0) continue;
        double total = 0.0;
        for (const BranchSpec& b : branches) {
            double best = -std::numeric_limits<double>::infinity();
            for (const BranchParam& w : b.grid)
                best = std::max(best, data.samples[s].y * branch_feature(b, w, data.samples[s].x));
            total += best;
        }
        total *= inv;
        if (total > worst) {
            worst = total;
            rep.witness_sample = s;
        }
    }
    rep.margin = tau - worst;
    rep.ok = rep.margin > 0.0;
    return rep;
}

double default_tau(const std::vector<BranchSpec>& branches, const Dataset& data) {
    require(!branches.empty(), "no branches");
    const double inv = 1.0 / static_cast<double>(branches.size());
    double bound = 0.0;
    for (const Sample& s : data.samples) {
        if (s.weight == 0.0) continue;
        double total = 0.0;
        for (const BranchSpec& b : branches) {
            double best = 0.0;
            for (const BranchParam& w : b.grid)
                best = std::max(best, std::abs(branch_feature(b, w, s.x)));
            total += best;
        }
        bound = std::max(bound, total * inv);
    }
    return 2.0 * (1.0 + bound);
}

double default_budget(const BranchTables& tables, std::uint64_t seed) {
    require(tables.branch_count() > 0, "empty tables");
    Rng rng(Rng::stream_seed(seed, 0xb7d9e7));
    const double inv = 1.0 / static_cast<double>(tables.branch_count());
    std::vector<double> draws(1000);
    for (double& v : draws) {
        double sum = 0.0;
        for (const auto& hi : tables.h) sum += hi[rng.below(hi.size())];
        v = sum * inv;
    }
    std::nth_element(draws.begin(), draws.begin() + 299, draws.end());
    return draws[299];
}

namespace {

struct DpNode {
    double budget = 0.0;  // accumulated sum of h
    double corr = 0.0;    // accumulated sum of c
    std::uint32_t prev = 0;
    std::uint32_t pick = 0;
};

// Keep the Pareto frontier: budget strictly increasing implies correlation
// strictly increasing. Input is destroyed.
void prune_frontier(std::vector<DpNode>& nodes) {
    std::sort(nodes.begin(), nodes.end(), [](const DpNode& a, const DpNode& b) {
        if (a.budget != b.budget) return a.budget < b.budget;
        if (a.corr != b.corr) return a.corr > b.corr;
        if (a.prev != b.prev) return a.prev < b.prev;
        return a.pick < b.pick;
    });
    std::vector<DpNode> kept;
    kept.reserve(nodes.size());
    double best = -std::numeric_limits<double>::infinity();
    for (const DpNode& n : nodes) {
        if (n.corr > best) {
            kept.push_back(n);
            best = n.corr;
        }
    }
    nodes = std::move(kept);
}

// Bucket the frontier on the budget axis, keeping the best-correlation node
// per bucket (exact values, no rounding). Returns the bucket width.
double merge_frontier(std::vector<DpNode>& nodes) {
    const double lo = nodes.front().budget;
    const double hi = nodes.back().budget;
    const double width = (hi - lo) / static_cast<double>(kMergeBins);
    if (width <= 0.0) {
        nodes.resize(1);
        return 0.0;
    }
    std::vector<DpNode> kept;
    kept.reserve(kMergeBins + 1);
    std::size_t bin = static_cast<std::size_t>(-1);
    for (const DpNode& n : nodes) {
        std::size_t b = std::min(
            static_cast<std::size_t>((n.budget - lo) / width), kMergeBins);
        if (b != bin) {
            kept.push_back(n);
            bin = b;
        } else {
            kept.back() = n;  // frontier order: later in bin = higher correlation
        }
    }
    nodes = std::move(kept);
    return width;
}

}  // namespace

PrimalSolution primal_inf(const BranchTables& tables, double tau, double K) {
    require(tau > 0.0, "tau must be positive");
    const std::size_t count = tables.branch_count();
    require(count > 0, "empty tables");
    const double budget_sum = static_cast<double>(count) * K;

    std::vector<std::vector<DpNode>> stages(count);
    std::vector<DpNode> frontier{{0.0, 0.0, 0, 0}};
    PrimalSolution out;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& ci = tables.c[i];
        const auto& hi = tables.h[i];
        std::vector<DpNode> next;
        next.reserve(frontier.size() * hi.size());
        for (std::size_t s = 0; s < frontier.size(); ++s)
            for (std::size_t k = 0; k < hi.size(); ++k)
                next.push_back({frontier[s].budget + hi[k], frontier[s].corr + ci[k],
                                static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(k)});
        prune_frontier(next);
        if (next.size() > kFrontierCap) {
            out.merged = true;
            out.merge_slack += merge_frontier(next);
        }
        stages[i] = next;
        frontier = std::move(next);
    }

    if (frontier.front().budget > budget_sum)
        throw precondition_error("infeasible budget: smallest achievable regularizer average "
                                 "exceeds K");

    // Correlation increases along the frontier, so the best feasible node is
    // the last one within budget.
    std::size_t best = 0;
    for (std::size_t s = 0; s < frontier.size(); ++s)
        if (frontier[s].budget <= budget_sum) best = s;

    out.value = objective_from_correlation(frontier[best].corr, count, tau);
    out.assignment.resize(count);
    std::size_t cursor = best;
    for (std::size_t i = count; i-- > 0;) {
        out.assignment[i] = stages[i][cursor].pick;
        cursor = stages[i][cursor].prev;
    }
    return out;
}

PrimalSolution primal_inf_exhaustive(const BranchTables& tables, double tau, double K) {
    require(tau > 0.0, "tau must be positive");
    const std::size_t count = tables.branch_count();
    require(count > 0, "empty tables");
    std::size_t product = 1;
    for (const auto& hi : tables.h) {
        require(product <= kProductCap / hi.size(), "grid product too large to enumerate");
        product *= hi.size();
    }
    const double budget_sum = static_cast<double>(count) * K;

    std::vector<std::size_t> odo(count, 0);
    PrimalSolution out;
    double best_corr = -std::numeric_limits<double>::infinity();
    bool feasible = false;
    for (std::size_t step = 0; step < product; ++step) {
        double budget = 0.0, corr = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            budget = budget + tables.h[i][odo[i]];
            corr = corr + tables.c[i][odo[i]];
        }
        if (budget <= budget_sum && corr > best_corr) {
            best_corr = corr;
            out.assignment = odo;
            feasible = true;
        }
        for (std::size_t i = count; i-- > 0;) {
            if (++odo[i] < tables.h[i].size()) break;
            odo[i] = 0;
        }
    }
    if (!feasible)
        throw precondition_error("infeasible budget: smallest achievable regularizer average "
                                 "exceeds K");
    out.value = objective_from_correlation(best_corr, count, tau);
    return out;
}

double dual_q(const BranchTables& tables, double tau, double lambda) {
    require(tau > 0.0, "tau must be positive");
    require(lambda >= 0.0, "lambda must be non-negative");
    const std::size_t count = tables.branch_count();
    require(count > 0, "empty tables");
    const double denom = static_cast<double>(count) * tau;
    const double inv = 1.0 / static_cast<double>(count);
    std::vector<double> mins(count);
    for (std::size_t i = 0; i < count; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < tables.c[i].size(); ++k)
            best = std::min(best, -tables.c[i][k] / denom + lambda * inv * tables.h[i][k]);
        mins[i] = best;
    }
    return 1.0 + neumaier_sum(mins);
}

namespace {

struct EnvLine {
    double slope = 0.0;
    double icept = 0.0;
};

// Switch points of the lower envelope of a family of lines, ascending.
std::vector<double> envelope_breakpoints(std::vector<EnvLine> lines) {
    std::sort(lines.begin(), lines.end(), [](const EnvLine& a, const EnvLine& b) {
        if (a.slope != b.slope) return a.slope > b.slope;
        return a.icept < b.icept;
    });
    std::vector<EnvLine> stack;
    auto isect = [](const EnvLine& a, const EnvLine& b) {
        return (b.icept - a.icept) / (a.slope - b.slope);
    };
    for (const EnvLine& l : lines) {
        if (!stack.empty() && stack.back().slope == l.slope) continue;  // kept min intercept
        while (stack.size() >= 2 &&
               isect(stack[stack.size() - 2], l) <= isect(stack[stack.size() - 2], stack.back()))
            stack.pop_back();
        stack.push_back(l);
    }
    std::vector<double> breaks;
    for (std::size_t k = 0; k + 1 < stack.size(); ++k) breaks.push_back(isect(stack[k], stack[k + 1]));
    return breaks;
}

struct PwlMax {
    double value = 0.0;
    double arg = 0.0;
    bool boundary = false;
};

// Exact maximum of a concave piecewise-linear function over [0, hi]: the
// candidates are the endpoints and every envelope breakpoint.
template <typename Eval, typename RightSlope>
PwlMax maximize_concave_pwl(const std::vector<double>& breakpoints, double hi, Eval eval,
                            RightSlope right_slope) {
    std::vector<double> cands{0.0, hi};
    for (double b : breakpoints)
        if (b > 0.0 && b < hi) cands.push_back(b);
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    PwlMax best;
    best.value = -std::numeric_limits<double>::infinity();
    for (double lam : cands) {
        double v = eval(lam);
        if (v > best.value) {
            best.value = v;
            best.arg = lam;
        }
    }
    best.boundary = best.arg == hi && hi > 0.0 && right_slope(hi) > 0.0;
    return best;
}

}  // namespace

DualSolution dual_sup(const BranchTables& tables, double tau, double K, double lambda_max) {
    require(tau > 0.0, "tau must be positive");
    require(lambda_max > 0.0, "lambda_max must be positive");
    const std::size_t count = tables.branch_count();
    require(count > 0, "empty tables");
    const double denom = static_cast<double>(count) * tau;
    const double inv = 1.0 / static_cast<double>(count);

    std::vector<double> breaks;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<EnvLine> lines(tables.c[i].size());
        for (std::size_t k = 0; k < lines.size(); ++k)
            lines[k] = {inv * tables.h[i][k], -tables.c[i][k] / denom};
        for (double b : envelope_breakpoints(std::move(lines))) breaks.push_back(b);
    }

    auto eval = [&](double lam) { return dual_q(tables, tau, lam) - lam * K; };
    auto right_slope = [&](double lam) {
        double slope = -K;
        for (std::size_t i = 0; i < count; ++i) {
            double best = std::numeric_limits<double>::infinity();
            double best_h = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < tables.c[i].size(); ++k) {
                double v = -tables.c[i][k] / denom + lam * inv * tables.h[i][k];
                if (v < best || (v == best && tables.h[i][k] < best_h)) {
                    best = v;
                    best_h = tables.h[i][k];
                }
            }
            slope += inv * best_h;
        }
        return slope;
    };

    PwlMax m = maximize_concave_pwl(breaks, lambda_max, eval, right_slope);
    return {m.value, m.arg, m.boundary};
}

DualSolution solve_dual(const BranchTables& tables, double tau, double K) {
    double lambda_max = 1.0;
    for (int round = 0; round < 64; ++round) {
        DualSolution d = dual_sup(tables, tau, K, lambda_max);
        if (!d.boundary) return d;
        lambda_max *= 4.0;
    }
    throw numerical_error("dual ascent direction never vanishes; the budget is likely "
                          "infeasible");
}

namespace {

std::size_t checked_product(const std::vector<BranchSpec>& branches) {
    std::size_t product = 1;
    for (const BranchSpec& b : branches) {
        require(product <= kProductCap / b.grid.size(),
                "grid product too large for hinge enumeration; shrink the grids");
        product *= b.grid.size();
    }
    return product;
}

}  // namespace

PrimalSolution primal_inf_hinge(const std::vector<BranchSpec>& branches, const Dataset& data,
                                const BranchTables& tables, double tau, double K) {
    const std::size_t count = branches.size();
    const std::size_t product = checked_product(branches);
    const double budget_sum = static_cast<double>(count) * K;

    std::vector<std::size_t> odo(count, 0);
    PrimalSolution out;
    out.value = std::numeric_limits<double>::infinity();
    bool feasible = false;
    for (std::size_t step = 0; step < product; ++step) {
        double budget = 0.0;
        for (std::size_t i = 0; i < count; ++i) budget += tables.h[i][odo[i]];
        if (budget <= budget_sum) {
            double risk = tau_hinge_risk(branches, odo, data, tau);
            if (risk < out.value) {
                out.value = risk;
                out.assignment = odo;
                feasible = true;
            }
        }
        for (std::size_t i = count; i-- > 0;) {
            if (++odo[i] < branches[i].grid.size()) break;
            odo[i] = 0;
        }
    }
    if (!feasible)
        throw precondition_error("infeasible budget: smallest achievable regularizer average "
                                 "exceeds K");
    return out;
}

DualSolution solve_dual_hinge(const std::vector<BranchSpec>& branches, const Dataset& data,
                              const BranchTables& tables, double tau, double K) {
    const std::size_t count = branches.size();
    const std::size_t product = checked_product(branches);
    const double inv = 1.0 / static_cast<double>(count);

    // One line per product assignment: risk + lambda * (averaged budget).
    std::vector<EnvLine> lines;
    lines.reserve(product);
    std::vector<std::size_t> odo(count, 0);
    for (std::size_t step = 0; step < product; ++step) {
        double budget = 0.0;
        for (std::size_t i = 0; i < count; ++i) budget += tables.h[i][odo[i]];
        lines.push_back({budget * inv, tau_hinge_risk(branches, odo, data, tau)});
        for (std::size_t i = count; i-- > 0;) {
            if (++odo[i] < branches[i].grid.size()) break;
            odo[i] = 0;
        }
    }

    std::vector<EnvLine> kept = lines;
    std::vector<double> breaks = envelope_breakpoints(std::move(kept));
    auto eval = [&](double lam) {
        double best = std::numeric_limits<double>::infinity();
        for (const EnvLine& l : lines) best = std::min(best, l.icept + l.slope * lam);
        return best - lam * K;
    };
    auto right_slope = [&](double lam) {
        double best = std::numeric_limits<double>::infinity();
        double best_slope = std::numeric_limits<double>::infinity();
        for (const EnvLine& l : lines) {
            double v = l.icept + l.slope * lam;
            if (v < best || (v == best && l.slope < best_slope)) {
                best = v;
                best_slope = l.slope;
            }
        }
        return best_slope - K;
    };

    double lambda_max = 1.0;
    for (int round = 0; round < 64; ++round) {
        PwlMax m = maximize_concave_pwl(breaks, lambda_max, eval, right_slope);
        if (!m.boundary) return {m.value, m.arg, false};
        lambda_max *= 4.0;
    }
    throw numerical_error("dual ascent direction never vanishes; the budget is likely "
                          "infeasible");
}

DeltaReport compute_delta(const BranchSpec& b, const std::vector<double>& c_row, double tau) {
    require(tau > 0.0, "tau must be positive");
    require(b.param_dim <= 2, "branch parameter dimension above 2 is unsupported");
    require(c_row.size() == b.grid.size(), "correlation row does not match the grid");
    const std::size_t n = b.grid.size();

    DeltaReport rep;
    rep.f_hat.resize(n);
    rep.f_tilde.resize(n);
    std::vector<double> risk(n);
    for (std::size_t k = 0; k < n; ++k) risk[k] = 1.0 - c_row[k] / tau;
    if (n == 1) {
        rep.f_hat[0] = rep.f_tilde[0] = risk[0];
        rep.delta = 0.0;
        return rep;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> hval(n);
    for (std::size_t k = 0; k < n; ++k) hval[k] = branch_regularizer(b, b.grid[k]);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (hval[a] != hval[c]) return hval[a] < hval[c];
        return a < c;
    });
    double running = std::numeric_limits<double>::infinity();
    std::vector<double> level_h;
    std::vector<double> level_best;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi < n && hval[order[hi]] == hval[order[lo]]) ++hi;
        double group = std::numeric_limits<double>::infinity();
        for (std::size_t j = lo; j < hi; ++j) group = std::min(group, risk[order[j]]);
        running = std::min(running, group);
        for (std::size_t j = lo; j < hi; ++j) rep.f_hat[order[j]] = running;
        level_h.push_back(hval[order[lo]]);
        level_best.push_back(group);
        lo = hi;
    }

    if (b.param_dim == 1) {
        std::vector<double> xs(n);
        for (std::size_t k = 0; k < n; ++k) xs[k] = b.grid[k][0];
        ConvexEnvelope1D env(xs, risk);
        for (std::size_t k = 0; k < n; ++k) rep.f_tilde[k] = env(xs[k]);
    } else {
        std::vector<std::array<double, 2>> sites(n);
        for (std::size_t k = 0; k < n; ++k) sites[k] = {b.grid[k][0], b.grid[k][1]};
        ConvexEnvelope2D env(sites, risk);
        for (std::size_t k = 0; k < n; ++k) rep.f_tilde[k] = env(sites[k][0], sites[k][1]);
    }

    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, rep.f_hat[k] - rep.f_tilde[k]);
    rep.delta = worst;

    // The bound's decomposition step lands on convex combinations of grid
    // points, so the divergence must hold along the whole budget axis, not
    // only at grid budgets. The constrained-best curve is a staircase with
    // steps at grid regularizer values and the hull is linear in between,
    // so its supremum over each step interval is exact from the endpoints.
    const std::size_t m = level_h.size();
    if (m >= 2) {
        std::vector<double> hull_risk(m);
        {
            ConvexEnvelope1D env(level_h, level_best);
            for (std::size_t k = 0; k < m; ++k) hull_risk[k] = env(level_h[k]);
        }
        std::vector<double> stair(m);
        double run = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < m; ++k) {
            run = std::min(run, level_best[k]);
            stair[k] = run;
        }
        double needed = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            double low = hull_risk[k];
            if (k + 1 < m) low = std::min(low, hull_risk[k + 1]);
            needed = std::max(needed, stair[k] - low);
        }
        rep.envelope_slack = std::max(0.0, needed - rep.delta);
    }
    return rep;
}

PlanarSet branch_epigraph(const BranchSpec& b, const std::vector<double>& c_row, double tau,
                          std::size_t branch_count) {
    require(branch_count > 0, "branch count must be positive");
    require(c_row.size() == b.grid.size(), "correlation row does not match the grid");
    const double inv = 1.0 / static_cast<double>(branch_count);
    PlanarSet s;
    s.pts.resize(b.grid.size());
    for (std::size_t k = 0; k < b.grid.size(); ++k)
        s.pts[k] = {inv * branch_regularizer(b, b.grid[k]), inv * (1.0 - c_row[k] / tau)};
    return s;
}

GapReport verify_theorem1(const std::vector<BranchSpec>& branches, const Dataset& data,
                          double tau, double K) {
    BranchTables tables = precompute_tables(branches, data);
    const std::size_t count = branches.size();

    GapReport rep;
    rep.branch_count = count;
    rep.tau = tau;
    rep.budget = K;
    AssumptionReport assumption = check_assumption_tau(branches, data, tau);
    rep.assumption_tau_ok = assumption.ok;
    rep.assumption_margin = assumption.margin;

    PrimalSolution primal;
    DualSolution dual;
    if (assumption.ok) {
        primal = primal_inf(tables, tau, K);
        dual = solve_dual(tables, tau, K);
    } else {
        primal = primal_inf_hinge(branches, data, tables, tau, K);
        dual = solve_dual_hinge(branches, data, tables, tau, K);
    }
    rep.inf_p = primal.value;
    rep.sup_d = dual.value;
    rep.lambda_star = dual.lambda_star;
    rep.gap = rep.inf_p - rep.sup_d;
    rep.dual_boundary = dual.boundary;

    rep.delta_i.resize(count);
    double needed_worst = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        DeltaReport d = compute_delta(branches[i], tables.c[i], tau);
        rep.delta_i[i] = d.delta;
        needed_worst = std::max(needed_worst, d.delta + d.envelope_slack);
    }
    rep.delta_worst = *std::max_element(rep.delta_i.begin(), rep.delta_i.end());
    rep.bound = 2.0 * rep.delta_worst / static_cast<double>(count);

    rep.eps_grid = primal.merge_slack * rep.lambda_star / static_cast<double>(count) +
                   2.0 * std::max(0.0, needed_worst - rep.delta_worst) /
                       static_cast<double>(count) +
                   1e-9 * (1.0 + std::abs(rep.inf_p) + std::abs(rep.sup_d));

    rep.lower_ok = rep.gap >= -rep.eps_grid;
    if (!rep.lower_ok)
        throw numerical_error("weak duality violated: gap " + std::to_string(rep.gap) +
                              " below -" + std::to_string(rep.eps_grid));
    if (rep.assumption_tau_ok) {
        rep.upper_ok = rep.delta_worst > 0.0 ? rep.gap <= rep.bound + rep.eps_grid
                                             : rep.gap <= rep.eps_grid;
        if (!rep.upper_ok)
            throw numerical_error("duality-gap bound violated: gap " + std::to_string(rep.gap) +
                                  " exceeds " + std::to_string(rep.bound) + " + " +
                                  std::to_string(rep.eps_grid));
    } else {
        rep.upper_ok = true;  // bound not asserted without the margin assumption
    }
    return rep;
}

std::string gap_report_to_json(const GapReport& r) {
    JsonWriter w;
    w.begin_object();
    w.key("branch_count").value(r.branch_count);
    w.key("tau").value(r.tau);
    w.key("budget").value(r.budget);
    w.key("assumption_tau_ok").value(r.assumption_tau_ok);
    w.key("assumption_margin").value(r.assumption_margin);
    w.key("inf_p").value(r.inf_p);
    w.key("sup_d").value(r.sup_d);
    w.key("lambda_star").value(r.lambda_star);
    w.key("gap").value(r.gap);
    w.key("delta_i").value(r.delta_i);
    w.key("delta_worst").value(r.delta_worst);
    w.key("bound").value(r.bound);
    w.key("eps_grid").value(r.eps_grid);
    w.key("lower_ok").value(r.lower_ok);
    w.key("upper_ok").value(r.upper_ok);
    w.key("dual_boundary").value(r.dual_boundary);
    w.end_object();
    return w.str();
}

std::string gap_report_csv_header() {
    return "branch_count,tau,budget,assumption_tau_ok,inf_p,sup_d,lambda_star,gap,"
           "delta_worst,bound,eps_grid,lower_ok,upper_ok\n";
}

std::string gap_report_csv_row(const GapReport& r) {
    std::string row = std::to_string(r.branch_count);
    auto add = [&](double v) {
        row += ',';
        row += fmt17(v);
    };
    add(r.tau);
    add(r.budget);
    row += r.assumption_tau_ok ? ",1" : ",0";
    add(r.inf_p);
    add(r.sup_d);
    add(r.lambda_star);
    add(r.gap);
    add(r.delta_worst);
    add(r.bound);
    add(r.eps_grid);
    row += r.lower_ok ? ",1" : ",0";
    row += r.upper_ok ? ",1\n" : ",0\n";
    return row;
}

}  // namespace dualgap
