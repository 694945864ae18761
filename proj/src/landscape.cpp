#include "dualgap/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dualgap/errors.hpp"
#include "dualgap/parallel.hpp"
#include "dualgap/rng.hpp"
#include "dualgap/serialization.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dualgap {

namespace {

constexpr double kConvexityTolerance = 1e-9;

double branch_scale(const MultiBranchNet& net) {
    if (net.combine == Combine::sum || net.branches.empty()) return 1.0;
    return 1.0 / static_cast<double>(net.branches.size());
}

// Offsets of every layer inside the flattened parameter vector.
std::vector<std::vector<std::size_t>> layer_offsets(const MultiBranchNet& net) {
    std::vector<std::vector<std::size_t>> off(net.branches.size());
    std::size_t at = 0;
    for (std::size_t b = 0; b < net.branches.size(); ++b) {
        off[b].resize(net.branches[b].size());
        for (std::size_t l = 0; l < net.branches[b].size(); ++l) {
            off[b][l] = at;
            at += net.branches[b][l].rows() * net.branches[b][l].cols();
        }
    }
    return off;
}

// Reusable buffers for repeated loss and gradient evaluations. Once sized,
// the SGD inner loop runs allocation-free.
struct Workspace {
    std::vector<std::vector<std::vector<double>>> act;  // [branch][layer] inputs
    // pre[b][l] = layer output after the in-place ReLU; zero entries mark the
    // units whose error signal gets masked on the way back.
    std::vector<std::vector<std::vector<double>>> pre;
    std::vector<std::vector<double>> delta;  // per-layer backward errors
    std::vector<double> f, g;                // combined output and its loss gradient
};

void size_workspace(const MultiBranchNet& net, Workspace& ws) {
    ws.act.resize(net.branches.size());
    ws.pre.resize(net.branches.size());
    std::size_t depth = 0;
    for (std::size_t b = 0; b < net.branches.size(); ++b) {
        ws.act[b].resize(net.branches[b].size());
        ws.pre[b].resize(net.branches[b].size());
        depth = std::max(depth, net.branches[b].size());
    }
    ws.delta.resize(depth);
}

void matvec(const Matrix& w, const std::vector<double>& in, std::vector<double>& out) {
    out.resize(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < w.cols(); ++c) s += w(r, c) * in[c];
        out[r] = s;
    }
}

// Forward through one branch without caching. The bounce buffers keep every
// matvec reading from one vector and writing to another.
void branch_forward(const std::vector<Matrix>& layers, const std::vector<double>& x,
                    std::vector<double>& out) {
    const std::vector<double>* in = &x;
    std::vector<double> bounce_a, bounce_b;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        std::vector<double>& z = in == &bounce_a ? bounce_b : bounce_a;
        matvec(layers[l], *in, z);
        if (l + 1 < layers.size())
            for (double& v : z) v = v > 0.0 ? v : 0.0;
        in = &z;
    }
    out = *in;
}

// Forward through every branch, caching per-layer inputs and outputs and
// leaving the combined network output in ws.f.
void forward_cached(const MultiBranchNet& net, Workspace& ws, const std::vector<double>& x) {
    const double factor = branch_scale(net);
    ws.f.assign(net.output_dim, 0.0);
    for (std::size_t b = 0; b < net.branches.size(); ++b) {
        const std::vector<Matrix>& layers = net.branches[b];
        const std::vector<double>* in = &x;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            ws.act[b][l] = *in;
            std::vector<double>& z = ws.pre[b][l];
            matvec(layers[l], *in, z);
            if (l + 1 < layers.size())
                for (double& v : z) v = v > 0.0 ? v : 0.0;
            in = &z;
        }
        const std::vector<double>& out = ws.pre[b].back();
        for (std::size_t j = 0; j < net.output_dim; ++j) ws.f[j] += factor * out[j];
    }
}

// dLoss/df for one sample; returns the loss.
double loss_and_output_grad(LossKind kind, double tau, const std::vector<double>& f, double y,
                            std::vector<double>& g) {
    g.assign(f.size(), 0.0);
    switch (kind) {
        case LossKind::squared: {
            double r = f[0] - y;
            g[0] = r;
            return 0.5 * r * r;
        }
        case LossKind::tau_hinge: {
            double margin = 1.0 - y * f[0] / tau;
            if (margin > 0.0) {
                g[0] = -y / tau;
                return margin;
            }
            return 0.0;
        }
        case LossKind::multiclass_hinge: {
            long long raw = std::llround(y);
            require(raw >= 0 && static_cast<std::size_t>(raw) < f.size(),
                    "class label outside the network output range");
            std::size_t cls = static_cast<std::size_t>(raw);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t arg = cls;
            for (std::size_t j = 0; j < f.size(); ++j) {
                if (j == cls) continue;
                double v = 1.0 + f[j] - f[cls];
                if (v > best) {
                    best = v;
                    arg = j;
                }
            }
            if (best > 0.0) {
                g[arg] = 1.0;
                g[cls] = -1.0;
                return best;
            }
            return 0.0;
        }
    }
    return 0.0;
}

// Backprop one sample into the flat gradient buffer. Shared by the public
// accumulation entry point and the SGD inner loop.
double backprop_sample(const MultiBranchNet& net,
                       const std::vector<std::vector<std::size_t>>& offsets, Workspace& ws,
                       const std::vector<double>& x, double y, LossKind kind, double tau,
                       double scale, std::vector<double>& grad) {
    const double factor = branch_scale(net);
    forward_cached(net, ws, x);
    double loss = loss_and_output_grad(kind, tau, ws.f, y, ws.g);
    bool active = false;
    for (double v : ws.g) active = active || v != 0.0;
    if (!active) return loss;

    for (std::size_t b = 0; b < net.branches.size(); ++b) {
        const std::vector<Matrix>& layers = net.branches[b];
        const std::size_t last = layers.size() - 1;
        ws.delta[last].resize(net.output_dim);
        for (std::size_t j = 0; j < net.output_dim; ++j)
            ws.delta[last][j] = scale * factor * ws.g[j];

        for (std::size_t l = layers.size(); l-- > 0;) {
            const Matrix& w = layers[l];
            const std::vector<double>& in = ws.act[b][l];
            const std::vector<double>& d = ws.delta[l];
            double* gw = grad.data() + offsets[b][l];
            for (std::size_t r = 0; r < w.rows(); ++r) {
                const double dr = d[r];
                if (dr == 0.0) continue;
                double* row = gw + r * w.cols();
                for (std::size_t c = 0; c < w.cols(); ++c) row[c] += dr * in[c];
            }
            if (l == 0) break;
            std::vector<double>& prev = ws.delta[l - 1];
            prev.assign(w.cols(), 0.0);
            for (std::size_t r = 0; r < w.rows(); ++r) {
                const double dr = d[r];
                if (dr == 0.0) continue;
                for (std::size_t c = 0; c < w.cols(); ++c) prev[c] += w(r, c) * dr;
            }
            // ReLU mask of the layer below.
            const std::vector<double>& z = ws.pre[b][l - 1];
            for (std::size_t c = 0; c < prev.size(); ++c)
                if (z[c] <= 0.0) prev[c] = 0.0;
        }
    }
    return loss;
}

}  // namespace

const char* combine_name(Combine c) { return c == Combine::sum ? "sum" : "average"; }

const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::tau_hinge: return "tau_hinge";
        case LossKind::squared: return "squared";
        case LossKind::multiclass_hinge: return "multiclass_hinge";
    }
    return "tau_hinge";
}

Combine combine_from_name(const std::string& name) {
    if (name == "sum") return Combine::sum;
    if (name == "average") return Combine::average;
    throw config_error("unknown combine mode: " + name);
}

LossKind loss_from_name(const std::string& name) {
    for (LossKind k : {LossKind::tau_hinge, LossKind::squared, LossKind::multiclass_hinge})
        if (name == loss_name(k)) return k;
    throw config_error("unknown loss: " + name);
}

MultiBranchNet make_net(std::size_t input_dim, std::size_t output_dim, std::size_t branch_count,
                        const std::vector<std::size_t>& hidden, Combine combine) {
    if (input_dim == 0 || output_dim == 0 || branch_count == 0)
        throw config_error("network dimensions must be positive");
    for (std::size_t w : hidden)
        if (w == 0) throw config_error("hidden widths must be positive");

    MultiBranchNet net;
    net.input_dim = input_dim;
    net.output_dim = output_dim;
    net.combine = combine;
    net.branches.resize(branch_count);
    for (auto& branch : net.branches) {
        std::size_t prev = input_dim;
        for (std::size_t w : hidden) {
            branch.emplace_back(w, prev);
            prev = w;
        }
        branch.emplace_back(output_dim, prev);
    }
    return net;
}

void init_gaussian(MultiBranchNet& net, std::uint64_t seed) {
    Rng rng(Rng::stream_seed(seed, 0x1a9e57));
    for (auto& branch : net.branches)
        for (Matrix& w : branch) {
            const double scale = 1.0 / std::sqrt(static_cast<double>(w.cols()));
            for (std::size_t r = 0; r < w.rows(); ++r)
                for (std::size_t c = 0; c < w.cols(); ++c) w(r, c) = scale * rng.gaussian();
        }
}

std::size_t param_count(const MultiBranchNet& net) {
    std::size_t n = 0;
    for (const auto& branch : net.branches)
        for (const Matrix& w : branch) n += w.rows() * w.cols();
    return n;
}

std::vector<double> flatten(const MultiBranchNet& net) {
    std::vector<double> out;
    out.reserve(param_count(net));
    for (const auto& branch : net.branches)
        for (const Matrix& w : branch)
            out.insert(out.end(), w.data(), w.data() + w.rows() * w.cols());
    return out;
}

void unflatten(MultiBranchNet& net, const std::vector<double>& params) {
    require(params.size() == param_count(net), "parameter vector length mismatch");
    std::size_t at = 0;
    for (auto& branch : net.branches)
        for (Matrix& w : branch) {
            std::copy(params.begin() + at, params.begin() + at + w.rows() * w.cols(), w.data());
            at += w.rows() * w.cols();
        }
}

std::vector<double> net_forward(const MultiBranchNet& net, const std::vector<double>& x) {
    require(x.size() == net.input_dim, "input dimension mismatch");
    require(!net.branches.empty(), "network has no branches");
    const double factor = branch_scale(net);
    std::vector<double> f(net.output_dim, 0.0);
    std::vector<double> out;
    for (const auto& branch : net.branches) {
        branch_forward(branch, x, out);
        for (std::size_t j = 0; j < net.output_dim; ++j) f[j] += factor * out[j];
    }
    return f;
}

TeacherInstance teacher_synthetic_data(std::size_t n, std::size_t dim, std::size_t hidden,
                                       std::uint64_t seed) {
    require(n > 0 && dim > 0 && hidden > 0, "teacher task dimensions must be positive");
    TeacherInstance inst;
    inst.teacher = make_net(dim, 1, hidden, {1}, Combine::sum);
    init_gaussian(inst.teacher, Rng::stream_seed(seed, 0x7eac));

    Rng rng(Rng::stream_seed(seed, 0xda7a));
    inst.data.x.resize(n);
    inst.data.target.resize(n);
    inst.data.label.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        inst.data.x[s].resize(dim);
        for (double& v : inst.data.x[s]) v = rng.gaussian();
        double t = net_forward(inst.teacher, inst.data.x[s])[0];
        inst.data.target[s] = t;
        inst.data.label[s] = t >= 0.0 ? 1.0 : -1.0;
    }
    return inst;
}

double dataset_loss(const MultiBranchNet& net, const TeacherData& data, LossKind kind,
                    double tau) {
    require(data.size() > 0, "empty sample set");
    require(tau > 0.0, "tau must be positive");
    Workspace ws;
    size_workspace(net, ws);
    double sum = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
        double y = kind == LossKind::squared ? data.target[s] : data.label[s];
        forward_cached(net, ws, data.x[s]);
        sum += loss_and_output_grad(kind, tau, ws.f, y, ws.g);
    }
    return sum / static_cast<double>(data.size());
}

double add_loss_gradient(const MultiBranchNet& net, const std::vector<double>& x, double y,
                         LossKind kind, double tau, double scale, std::vector<double>& grad) {
    require(tau > 0.0, "tau must be positive");
    require(grad.size() == param_count(net), "gradient buffer length mismatch");
    Workspace ws;
    size_workspace(net, ws);
    auto offsets = layer_offsets(net);
    return backprop_sample(net, offsets, ws, x, y, kind, tau, scale, grad);
}

SgdResult sgd_train(MultiBranchNet& net, const TeacherData& data, LossKind kind,
                    std::uint64_t seed, const SgdOptions& opt) {
    require(opt.lr >= 0.0, "learning rate must be non-negative");
    require(opt.batch > 0, "batch size must be positive");
    require(data.size() > 0, "empty sample set");

    Rng rng(Rng::stream_seed(seed, 0x59d));
    Workspace ws;
    size_workspace(net, ws);
    auto offsets = layer_offsets(net);
    const std::size_t params = param_count(net);
    std::vector<double> grad(params, 0.0);

    SgdResult res;
    const double inv_batch = 1.0 / static_cast<double>(opt.batch);
    for (std::size_t it = 0; it < opt.iters; ++it) {
        if (opt.trace_stride > 0 && it % opt.trace_stride == 0)
            res.trace.push_back(dataset_loss(net, data, kind, opt.tau));
        if (opt.stop_check > 0 && opt.stop_tol >= 0.0 && it > 0 && it % opt.stop_check == 0) {
            double full = dataset_loss(net, data, kind, opt.tau);
            if (!std::isfinite(full)) {
                res.diverged = true;
                break;
            }
            if (full <= opt.stop_tol) break;
        }

        std::fill(grad.begin(), grad.end(), 0.0);
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < opt.batch; ++b) {
            std::size_t s = rng.below(data.size());
            double y = kind == LossKind::squared ? data.target[s] : data.label[s];
            batch_loss +=
                backprop_sample(net, offsets, ws, data.x[s], y, kind, opt.tau, inv_batch, grad);
        }
        if (!std::isfinite(batch_loss)) {
            res.diverged = true;
            break;
        }

        std::size_t at = 0;
        for (auto& branch : net.branches)
            for (Matrix& w : branch) {
                double* p = w.data();
                const std::size_t count = w.rows() * w.cols();
                for (std::size_t k = 0; k < count; ++k) p[k] -= opt.lr * grad[at + k];
                at += count;
            }
        res.iters_run = it + 1;
    }

    res.final_loss = dataset_loss(net, data, kind, opt.tau);
    if (!std::isfinite(res.final_loss)) res.diverged = true;
    return res;
}

namespace {

struct PlaneBasis {
    std::vector<double> origin, u, v;
    std::array<std::array<double, 2>, 3> anchors;
};

PlaneBasis plane_basis(const std::vector<double>& a, const std::vector<double>& b,
                       const std::vector<double>& c) {
    require(a.size() == b.size() && b.size() == c.size(), "anchor dimension mismatch");
    const std::size_t n = a.size();
    std::vector<double> u(n), w(n);
    for (std::size_t k = 0; k < n; ++k) {
        u[k] = b[k] - a[k];
        w[k] = c[k] - a[k];
    }
    double nu = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        scale = std::max({scale, std::abs(u[k]), std::abs(w[k])});
    if (nu <= 1e-12 * (1.0 + scale))
        throw precondition_error("plane anchors are degenerate: first two points coincide");
    for (double& x : u) x /= nu;

    double proj = std::inner_product(w.begin(), w.end(), u.begin(), 0.0);
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = w[k] - proj * u[k];
    double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (nv <= 1e-12 * (1.0 + scale))
        throw precondition_error("plane anchors are degenerate: points are collinear");
    for (double& x : v) x /= nv;

    PlaneBasis basis;
    basis.origin = a;
    basis.u = std::move(u);
    basis.v = std::move(v);
    basis.anchors = {{{0.0, 0.0}, {nu, 0.0}, {proj, nv}}};
    return basis;
}

template <typename CellFn>
PlaneGrid sweep_plane(const PlaneBasis& basis, std::size_t resolution, CellFn&& cell) {
    require(resolution >= 2, "grid resolution must be at least 2");
    PlaneGrid g;
    g.resolution = resolution;
    g.anchors = basis.anchors;

    double alo = 0.0, ahi = 0.0, blo = 0.0, bhi = 0.0;
    for (const auto& p : basis.anchors) {
        alo = std::min(alo, p[0]);
        ahi = std::max(ahi, p[0]);
        blo = std::min(blo, p[1]);
        bhi = std::max(bhi, p[1]);
    }
    const double apad = 0.2 * (ahi - alo), bpad = 0.2 * (bhi - blo);
    alo -= apad;
    ahi += apad;
    blo -= bpad;
    bhi += bpad;

    g.alpha.resize(resolution);
    g.beta.resize(resolution);
    for (std::size_t k = 0; k < resolution; ++k) {
        double t = static_cast<double>(k) / static_cast<double>(resolution - 1);
        g.alpha[k] = alo + (ahi - alo) * t;
        g.beta[k] = blo + (bhi - blo) * t;
    }
    g.loss.resize(resolution * resolution);
    cell(g);
    return g;
}

double plane_cell_loss(const TeacherData& data, LossKind kind, double tau,
                       const PlaneBasis& basis, double alpha, double beta,
                       MultiBranchNet& scratch, std::vector<double>& theta) {
    const std::size_t n = basis.origin.size();
    theta.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        theta[k] = basis.origin[k] + alpha * basis.u[k] + beta * basis.v[k];
    unflatten(scratch, theta);
    return dataset_loss(scratch, data, kind, tau);
}

}  // namespace

PlaneGrid plane_projection_grid_serial(const MultiBranchNet& proto, const TeacherData& data,
                                       LossKind kind, double tau,
                                       const std::vector<double>& theta_a,
                                       const std::vector<double>& theta_b,
                                       const std::vector<double>& theta_c,
                                       std::size_t resolution) {
    require(theta_a.size() == param_count(proto), "anchor length does not match the network");
    PlaneBasis basis = plane_basis(theta_a, theta_b, theta_c);
    return sweep_plane(basis, resolution, [&](PlaneGrid& g) {
        MultiBranchNet scratch = proto;
        std::vector<double> theta;
        for (std::size_t bi = 0; bi < resolution; ++bi)
            for (std::size_t ai = 0; ai < resolution; ++ai)
                g.loss[bi * resolution + ai] = plane_cell_loss(
                    data, kind, tau, basis, g.alpha[ai], g.beta[bi], scratch, theta);
    });
}

PlaneGrid plane_projection_grid(const MultiBranchNet& proto, const TeacherData& data,
                                LossKind kind, double tau, const std::vector<double>& theta_a,
                                const std::vector<double>& theta_b,
                                const std::vector<double>& theta_c, std::size_t resolution) {
    require(theta_a.size() == param_count(proto), "anchor length does not match the network");
    PlaneBasis basis = plane_basis(theta_a, theta_b, theta_c);
    return sweep_plane(basis, resolution, [&](PlaneGrid& g) {
        const std::int64_t cells = static_cast<std::int64_t>(resolution * resolution);
#ifdef _OPENMP
#pragma omp parallel num_threads(worker_threads())
        {
            MultiBranchNet scratch = proto;
            std::vector<double> theta;
#pragma omp for schedule(static)
            for (std::int64_t idx = 0; idx < cells; ++idx) {
                std::size_t bi = static_cast<std::size_t>(idx) / resolution;
                std::size_t ai = static_cast<std::size_t>(idx) % resolution;
                g.loss[idx] = plane_cell_loss(data, kind, tau, basis, g.alpha[ai], g.beta[bi],
                                              scratch, theta);
            }
        }
#else
        MultiBranchNet scratch = proto;
        std::vector<double> theta;
        for (std::int64_t idx = 0; idx < cells; ++idx) {
            std::size_t bi = static_cast<std::size_t>(idx) / resolution;
            std::size_t ai = static_cast<std::size_t>(idx) % resolution;
            g.loss[idx] = plane_cell_loss(data, kind, tau, basis, g.alpha[ai], g.beta[bi],
                                          scratch, theta);
        }
#endif
    });
}

std::string plane_grid_csv(const PlaneGrid& g) {
    std::string out = "alpha,beta,loss\n";
    for (std::size_t bi = 0; bi < g.resolution; ++bi)
        for (std::size_t ai = 0; ai < g.resolution; ++ai) {
            out += fmt17(g.alpha[ai]);
            out += ',';
            out += fmt17(g.beta[bi]);
            out += ',';
            out += fmt17(g.at(bi, ai));
            out += '\n';
        }
    return out;
}

double convexity_violation_metric(const PlaneGrid& g) {
    require(g.resolution >= 1 && g.loss.size() == g.resolution * g.resolution,
            "malformed grid");
    const std::size_t pairs = 10000;
    Rng rng(0xc07f1de);
    std::size_t violations = 0;
    for (std::size_t p = 0; p < pairs; ++p) {
        std::size_t a0, a1, b0, b1;
        do {
            a0 = rng.below(g.resolution);
            b0 = rng.below(g.resolution);
            a1 = rng.below(g.resolution);
            b1 = rng.below(g.resolution);
        } while ((a0 + a1) % 2 != 0 || (b0 + b1) % 2 != 0);
        double mid = g.at((b0 + b1) / 2, (a0 + a1) / 2);
        double chord = 0.5 * (g.at(b0, a0) + g.at(b1, a1));
        if (mid > chord + kConvexityTolerance) ++violations;
    }
    return static_cast<double>(violations) / static_cast<double>(pairs);
}

HitOptions HitOptions::full_budget() {
    HitOptions opt;
    opt.iters = 100000;
    opt.tol = 1e-5;
    return opt;
}

HitTable hitting_rate_experiment(const TeacherData& data, const std::vector<std::size_t>& widths,
                                 const HitOptions& opt, std::uint64_t master_seed) {
    require(opt.seeds > 0, "seed count must be positive");
    require(!widths.empty(), "width list is empty");
    require(data.size() > 0, "empty sample set");
    const std::size_t dim = data.x.front().size();

    HitTable table;
    table.widths = widths;
    table.seeds = opt.seeds;
    table.hits.assign(widths.size(), 0);

    SgdOptions sgd;
    sgd.iters = opt.iters;
    sgd.lr = opt.lr;
    sgd.batch = opt.batch;
    sgd.tau = 1.0;
    sgd.trace_stride = 0;
    sgd.stop_tol = opt.tol;
    sgd.stop_check = 1000;

    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
        std::size_t hits = 0;
        for (std::size_t trial = 0; trial < opt.seeds; ++trial) {
            MultiBranchNet net = make_net(dim, 1, widths[wi], {1}, Combine::sum);
            init_gaussian(net, Rng::stream_seed(master_seed, widths[wi], 2 * trial));
            SgdResult run = sgd_train(net, data, LossKind::tau_hinge,
                                      Rng::stream_seed(master_seed, widths[wi], 2 * trial + 1),
                                      sgd);
            if (!run.diverged && run.final_loss <= opt.tol) ++hits;
        }
        table.hits[wi] = hits;
    }
    return table;
}

std::string hit_table_csv(const HitTable& t) {
    std::string out = "width,hits,seeds\n";
    for (std::size_t i = 0; i < t.widths.size(); ++i) {
        out += std::to_string(t.widths[i]);
        out += ',';
        out += std::to_string(t.hits[i]);
        out += ',';
        out += std::to_string(t.seeds);
        out += '\n';
    }
    return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size() && a.size() >= 2, "rank correlation needs paired samples");
    auto ranks = [](const std::vector<double>& xs) {
        const std::size_t n = xs.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
        std::vector<double> r(n);
        for (std::size_t lo = 0; lo < n;) {
            std::size_t hi = lo;
            while (hi < n && xs[order[hi]] == xs[order[lo]]) ++hi;
            double avg = 0.5 * static_cast<double>(lo + hi - 1);
            for (std::size_t k = lo; k < hi; ++k) r[order[k]] = avg;
            lo = hi;
        }
        return r;
    };
    std::vector<double> ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double num = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return num / std::sqrt(va * vb);
}

}  // namespace dualgap
