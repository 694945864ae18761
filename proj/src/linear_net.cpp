#include "dualgap/linear_net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dualgap/errors.hpp"
#include "dualgap/rng.hpp"

namespace dualgap {

ProblemInstance make_instance(std::vector<std::size_t> dims, double gamma, Matrix X, Matrix Y) {
    require(dims.size() >= 3, "instance: need depth H >= 2, so at least 3 layer widths");
    for (std::size_t d : dims) require(d > 0, "instance: zero layer width");
    require(gamma >= 0.0, "instance: negative gamma");
    require(X.rows() == dims.front(), "instance: X rows must equal d_0");
    require(Y.rows() == dims.back(), "instance: Y rows must equal d_H");
    require(X.cols() == Y.cols(), "instance: X and Y sample counts differ");
    require_finite(X, "instance X");
    require_finite(Y, "instance Y");

    ProblemInstance p;
    p.dims = std::move(dims);
    p.gamma = gamma;
    p.X = std::move(X);
    p.Y = std::move(Y);
    p.row_projector = row_space_projector(p.X);
    p.Ytilde = matmul(p.Y, p.row_projector);
    p.ytilde_svd = svd(p.Ytilde);
    p.d_min = *std::min_element(p.dims.begin() + 1, p.dims.end() - 1);
    p.well_posed = gamma < p.ytilde_svd.sigma_min_positive();
    return p;
}

ProblemInstance gaussian_identity_instance(std::size_t n, std::size_t d, std::size_t d_min,
                                           std::size_t depth, double gamma_frac,
                                           std::uint64_t seed) {
    require(depth >= 2, "generator: depth must be >= 2");
    Rng rng(seed);
    Matrix y(d, n);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < n; ++j) y(i, j) = rng.gaussian();
    std::vector<std::size_t> dims(depth + 1, d_min);
    dims.front() = n;
    dims.back() = d;
    // X = I: Ytilde = Y, so gamma_frac scales the smallest positive sigma of Y.
    SvdResult s = svd(y);
    double gamma = gamma_frac * s.sigma_min_positive();
    return make_instance(std::move(dims), gamma, Matrix::identity(n), std::move(y));
}

Matrix factor_product(const Factors& w, const Matrix& x) {
    require(!w.empty(), "factor_product: no factors");
    Matrix acc = matmul(w.front(), x);
    for (std::size_t i = 1; i < w.size(); ++i) acc = matmul(w[i], acc);
    return acc;
}

namespace {

void check_factor_shapes(const Factors& w, const ProblemInstance& p) {
    require(w.size() == p.depth(), "factors: count must equal depth");
    for (std::size_t i = 0; i < w.size(); ++i)
        require(w[i].rows() == p.dims[i + 1] && w[i].cols() == p.dims[i],
                "factors: W_" + std::to_string(i + 1) + " has wrong shape");
}

}  // namespace

double primal_objective(const Factors& w, const ProblemInstance& p) {
    check_factor_shapes(w, p);
    const std::size_t h = p.depth();
    Matrix residual = factor_product(w, p.X) - p.Y;
    double fit = 0.5 * residual.frobenius_norm() * residual.frobenius_norm();
    double reg = schatten_power_sum(matmul(w[0], p.X), static_cast<double>(h));
    for (std::size_t i = 1; i < h; ++i) reg += schatten_power_sum(w[i], static_cast<double>(h));
    return fit + p.gamma / static_cast<double>(h) * reg;
}

NuclearReport nuclear_objective(const Matrix& z, const ProblemInstance& p) {
    require(z.rows() == p.Y.rows() && z.cols() == p.Y.cols(), "nuclear objective: Z shape");
    require_finite(z, "nuclear objective Z");
    SvdResult s = svd(z);
    NuclearReport rep;
    double fit = (p.Y - z).frobenius_norm();
    double nuc = 0.0;
    for (double sv : s.sigma) nuc += sv;
    rep.value = 0.5 * fit * fit + p.gamma * nuc;
    rep.rank_excess = s.sigma.size() > p.d_min ? s.sigma[p.d_min] : 0.0;
    rep.row_space_residual = (z - matmul(z, p.row_projector)).frobenius_norm();
    return rep;
}

Factors balanced_factorization(const Matrix& z, const ProblemInstance& p) {
    NuclearReport feas = nuclear_objective(z, p);
    SvdResult s = svd(z);
    const double scale = s.sigma.empty() ? 0.0 : s.sigma[0];
    require(feas.rank_excess <= 1e-8 * (1.0 + scale),
            "balanced_factorization: rank(Z) exceeds d_min");
    require(feas.row_space_residual <= 1e-8 * (1.0 + scale),
            "balanced_factorization: Row(Z) leaves Row(X)");

    const std::size_t h = p.depth();
    const std::size_t k = std::min(s.rank(), p.d_min);
    std::vector<double> root(k);
    for (std::size_t t = 0; t < k; ++t)
        root[t] = std::pow(s.sigma[t], 1.0 / static_cast<double>(h));

    Factors w;
    w.reserve(h);
    // W_1 = [diag(root) V^T; 0] pinv(X): d_1 x d_0.
    {
        Matrix top(p.dims[1], p.X.cols());
        for (std::size_t t = 0; t < k; ++t)
            for (std::size_t j = 0; j < p.X.cols(); ++j) top(t, j) = root[t] * s.V(j, t);
        w.push_back(matmul(top, pseudo_inverse(p.X)));
    }
    // W_i = [diag(root) 0; 0 0]: d_i x d_{i-1}, for i = 2 .. H-1.
    for (std::size_t i = 2; i < h; ++i) {
        Matrix mid(p.dims[i], p.dims[i - 1]);
        for (std::size_t t = 0; t < k; ++t) mid(t, t) = root[t];
        w.push_back(std::move(mid));
    }
    // W_H = [U diag(root), 0]: d_H x d_{H-1}.
    {
        Matrix last(p.dims[h], p.dims[h - 1]);
        for (std::size_t i = 0; i < p.dims[h]; ++i)
            for (std::size_t t = 0; t < k; ++t) last(i, t) = s.U(i, t) * root[t];
        w.push_back(std::move(last));
    }
    return w;
}

ClosedFormPrimal closed_form_global_product(const ProblemInstance& p) {
    require(p.well_posed,
            "closed form: gamma must lie below the smallest positive singular value of Ytilde");
    const SvdResult& s = p.ytilde_svd;
    const std::size_t k = std::min(s.rank(), p.d_min);
    ClosedFormPrimal out;
    out.rank = k;
    out.z = Matrix(p.Y.rows(), p.Y.cols());
    for (std::size_t t = 0; t < k; ++t) {
        const double shrunk = s.sigma[t] - p.gamma;  // positive: gamma < sigma_min
        for (std::size_t i = 0; i < p.Y.rows(); ++i) {
            const double usv = s.U(i, t) * shrunk;
            for (std::size_t j = 0; j < p.Y.cols(); ++j) out.z(i, j) += usv * s.V(j, t);
        }
    }
    out.value = nuclear_objective(out.z, p).value;
    return out;
}

Factors primal_gradients(const Factors& w, const ProblemInstance& p) {
    check_factor_shapes(w, p);
    const std::size_t h = p.depth();

    // Prefixes P_i = W_i ... W_1 X; prefix[0] = X.
    std::vector<Matrix> prefix(h + 1);
    prefix[0] = p.X;
    for (std::size_t i = 0; i < h; ++i) prefix[i + 1] = matmul(w[i], prefix[i]);
    Matrix residual = prefix[h] - p.Y;

    // Suffix products S_i = W_H ... W_{i+2} applied to the residual from the
    // left: back[i] = S_i^T residual for the gradient of W_{i+1}.
    Factors grads(h);
    Matrix back = residual;
    for (std::size_t i = h; i-- > 0;) {
        grads[i] = matmul(back, prefix[i].transpose());
        if (i > 0) back = matmul(w[i].transpose(), back);
    }

    // Schatten subgradients: gamma U diag(sigma^{H-1}) V^T, through X for W_1.
    const double expo = static_cast<double>(h) - 1.0;
    for (std::size_t i = 0; i < h; ++i) {
        Matrix base = (i == 0) ? matmul(w[0], p.X) : w[i];
        SvdResult s = svd(base);
        Matrix sub(base.rows(), base.cols());
        for (std::size_t t = 0; t < s.rank(); ++t) {
            const double coef = p.gamma * std::pow(s.sigma[t], expo);
            for (std::size_t r = 0; r < base.rows(); ++r) {
                const double u = s.U(r, t) * coef;
                for (std::size_t c = 0; c < base.cols(); ++c) sub(r, c) += u * s.V(c, t);
            }
        }
        grads[i] += (i == 0) ? matmul(sub, p.X.transpose()) : sub;
    }
    return grads;
}

LocalSearchResult primal_local_search(const ProblemInstance& p, Factors init,
                                      const LocalSearchOptions& opts) {
    check_factor_shapes(init, p);
    LocalSearchResult res;
    res.w = std::move(init);
    res.objective = primal_objective(res.w, p);
    res.trace.push_back(res.objective);
    double lr = opts.learning_rate;

    for (std::size_t step = 0; step < opts.steps; ++step) {
        Factors g = primal_gradients(res.w, p);
        bool moved = false;
        for (int attempt = 0; attempt < 40 && !moved; ++attempt) {
            Factors trial = res.w;
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= lr * g[i];
            bool finite = true;
            for (const Matrix& m : trial) finite = finite && m.all_finite();
            double val = finite ? primal_objective(trial, p)
                                : std::numeric_limits<double>::infinity();
            if (finite && val <= res.objective) {
                double gain = res.objective - val;
                res.w = std::move(trial);
                res.objective = val;
                moved = true;
                lr = std::min(lr * 1.1, opts.learning_rate * 16.0);
                if (opts.stop_tol > 0.0 && gain < opts.stop_tol) {
                    res.steps_taken = step + 1;
                    res.trace.push_back(res.objective);
                    return res;
                }
            } else if (!opts.adaptive) {
                if (!finite || !std::isfinite(val)) {
                    res.failed = true;
                    res.steps_taken = step + 1;
                    return res;
                }
                // Non-adaptive mode accepts the move regardless, faithful to
                // plain gradient descent.
                res.w = std::move(trial);
                res.objective = val;
                moved = true;
            } else {
                lr *= 0.5;
            }
        }
        if (!moved) {  // step collapsed to nothing useful: stationary
            res.steps_taken = step + 1;
            res.trace.push_back(res.objective);
            return res;
        }
        if ((step + 1) % opts.trace_every == 0) res.trace.push_back(res.objective);
        res.steps_taken = step + 1;
    }
    res.trace.push_back(res.objective);
    return res;
}

Factors random_init(const ProblemInstance& p, std::uint64_t seed) {
    Rng rng(seed);
    const double s = 1.0 / std::sqrt(static_cast<double>(
                         *std::max_element(p.dims.begin(), p.dims.end())));
    Factors w;
    w.reserve(p.depth());
    for (std::size_t i = 0; i < p.depth(); ++i) {
        Matrix m(p.dims[i + 1], p.dims[i]);
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-s, s);
        w.push_back(std::move(m));
    }
    return w;
}

MultiStartResult primal_multi_start(const ProblemInstance& p, std::size_t restarts,
                                    const LocalSearchOptions& opts, std::uint64_t seed_base) {
    require(restarts >= 1, "multi start: need at least one restart");
    MultiStartResult out;
    out.restarts = restarts;
    bool have = false;
    for (std::size_t r = 0; r < restarts; ++r) {
        std::uint64_t seed = Rng::stream_seed(seed_base, r);
        LocalSearchResult cand = primal_local_search(p, random_init(p, seed), opts);
        if (cand.failed) continue;
        // Strict improvement only, so equal objectives keep the lowest seed.
        if (!have || cand.objective < out.best.objective) {
            out.best = std::move(cand);
            out.best_seed = r;
            have = true;
        }
    }
    if (!have) {
        out.best.failed = true;
    }
    return out;
}

}  // namespace dualgap
