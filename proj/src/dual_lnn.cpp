#include "dualgap/dual_lnn.hpp"

#include <algorithm>
#include <cmath>

#include "dualgap/errors.hpp"
#include "dualgap/serialization.hpp"

namespace dualgap {

double dual_objective(const Matrix& lambda, const ProblemInstance& p) {
    require(lambda.rows() == p.Y.rows() && lambda.cols() == p.Y.cols(),
            "dual objective: Lambda shape");
    require_finite(lambda, "dual objective Lambda");
    double ynorm = p.Y.frobenius_norm();
    return -0.5 * dmin_norm_sq(p.Ytilde - lambda, p.d_min) + 0.5 * ynorm * ynorm;
}

DualFeasibility dual_feasibility(const Matrix& lambda, const ProblemInstance& p) {
    DualFeasibility f;
    f.spectral_excess = std::max(0.0, spectral_norm(lambda) - p.gamma);
    f.row_space_residual = (lambda - matmul(lambda, p.row_projector)).frobenius_norm();
    return f;
}

Matrix closed_form_certificate(const ProblemInstance& p) {
    require(p.well_posed, "certificate: instance is not well posed");
    const SvdResult& s = p.ytilde_svd;
    const std::size_t r = s.rank();
    Matrix lam(p.Y.rows(), p.Y.cols());
    for (std::size_t t = 0; t < r; ++t) {
        for (std::size_t i = 0; i < lam.rows(); ++i) {
            const double u = p.gamma * s.U(i, t);
            for (std::size_t j = 0; j < lam.cols(); ++j) lam(i, j) += u * s.V(j, t);
        }
    }
    return lam;
}

namespace {

// T is the tangent space of the singular spaces of Z: U_Z C1^T + C2 V_Z^T.
struct TangentSpace {
    Matrix pu;  // U_Z U_Z^T
    Matrix pv;  // V_Z V_Z^T
    Matrix uvt;  // U_Z V_Z^T
    std::size_t rank = 0;
};

TangentSpace tangent_space(const SvdResult& s) {
    TangentSpace t;
    t.rank = s.rank();
    const std::size_t m = s.U.rows();
    const std::size_t n = s.V.rows();
    t.pu = Matrix(m, m);
    t.pv = Matrix(n, n);
    t.uvt = Matrix(m, n);
    for (std::size_t k = 0; k < t.rank; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
            const double u = s.U(i, k);
            for (std::size_t j = 0; j < m; ++j) t.pu(i, j) += u * s.U(j, k);
            for (std::size_t j = 0; j < n; ++j) t.uvt(i, j) += u * s.V(j, k);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double v = s.V(i, k);
            for (std::size_t j = 0; j < n; ++j) t.pv(i, j) += v * s.V(j, k);
        }
    }
    return t;
}

Matrix project_t(const TangentSpace& t, const Matrix& m) {
    Matrix pum = matmul(t.pu, m);
    return pum + matmul(m - pum, t.pv);
}

}  // namespace

DualConditionsReport check_dual_conditions(const Matrix& lambda, const Matrix& z,
                                           const ProblemInstance& p, double tol) {
    require(lambda.rows() == p.Y.rows() && lambda.cols() == p.Y.cols(),
            "dual conditions: Lambda shape");
    require(z.rows() == p.Y.rows() && z.cols() == p.Y.cols(), "dual conditions: Z shape");

    DualConditionsReport rep;
    rep.tol = tol;
    SvdResult zs = svd(z);
    TangentSpace t = tangent_space(zs);

    // (1) Lambda in gamma * subdifferential of the nuclear norm at Z.
    Matrix lam_t = project_t(t, lambda);
    double eq_part = (lam_t - p.gamma * t.uvt).frobenius_norm();
    double ball_part = std::max(0.0, spectral_norm(lambda - lam_t) - p.gamma);
    rep.subgradient_residual = std::max(eq_part, ball_part);

    // (2) The T projection of Ytilde - Lambda reproduces Z.
    Matrix resid = p.Ytilde - lambda;
    rep.projection_residual = (project_t(t, resid) - z).frobenius_norm();

    // (3) The T-orthogonal part stays below sigma_{d_min}(Z).
    double sigma_dmin = zs.sigma.size() >= p.d_min ? zs.sigma[p.d_min - 1] : 0.0;
    rep.spectral_margin = sigma_dmin - spectral_norm(resid - project_t(t, resid));

    // Stationarity of every layer at the balanced factors of Z, with the
    // combined residual Z + Lambda - Ytilde playing the role of the misfit.
    Factors w = balanced_factorization(z, p);
    const std::size_t h = p.depth();
    Matrix core = z + lambda - p.Ytilde;
    std::vector<Matrix> prefix(h + 1);
    prefix[0] = p.X;
    for (std::size_t i = 0; i < h; ++i) prefix[i + 1] = matmul(w[i], prefix[i]);
    Matrix back = core;
    rep.stationarity_residuals.assign(h, 0.0);
    for (std::size_t i = h; i-- > 0;) {
        rep.stationarity_residuals[i] = matmul(back, prefix[i].transpose()).frobenius_norm();
        if (i > 0) back = matmul(w[i].transpose(), back);
    }

    double worst_stat = 0.0;
    for (double v : rep.stationarity_residuals) worst_stat = std::max(worst_stat, v);
    rep.pass = rep.subgradient_residual <= tol && rep.projection_residual <= tol &&
               rep.spectral_margin >= -tol && worst_stat <= tol;
    return rep;
}

AscentResult solve_dual_projected_ascent(const ProblemInstance& p, const AscentOptions& opts) {
    require(opts.eta0 > 0.0, "ascent: eta0 must be positive");
    require(opts.max_iters >= 1, "ascent: need at least one iteration");

    AscentResult res;
    Matrix lambda(p.Y.rows(), p.Y.cols());
    res.lambda = lambda;
    res.value = dual_objective(lambda, p);
    res.trace.push_back(res.value);

    std::size_t stall = 0;
    for (std::size_t t = 1; t <= opts.max_iters; ++t) {
        Matrix g = truncated_svd(p.Ytilde - lambda, p.d_min);
        double eta = opts.eta0 / std::sqrt(static_cast<double>(t));
        lambda = spectral_ball_project(lambda + eta * g, p.gamma);
        double val = dual_objective(lambda, p);
        res.iters = t;
        if (val > res.value + opts.tol) {
            stall = 0;
        } else {
            ++stall;
        }
        if (val > res.value) {
            res.value = val;
            res.lambda = lambda;
        }
        if (t % opts.trace_every == 0) res.trace.push_back(res.value);
        if (stall >= opts.patience) {
            res.converged = true;
            break;
        }
    }
    if (res.trace.empty() || res.trace.back() != res.value) res.trace.push_back(res.value);
    return res;
}

Matrix recover_primal_from_dual(const Matrix& lambda, const ProblemInstance& p) {
    require(lambda.rows() == p.Y.rows() && lambda.cols() == p.Y.cols(),
            "primal recovery: Lambda shape");
    return truncated_svd(p.Ytilde - lambda, p.d_min);
}

GapReportLNN duality_gap_report(const ProblemInstance& p, const GapReportOptions& opts) {
    GapReportLNN rep;
    rep.n = p.samples();
    rep.d = p.Y.rows();
    rep.d_min = p.d_min;
    rep.depth = p.depth();
    rep.gamma = p.gamma;
    rep.well_posed = p.well_posed;
    rep.solver = opts.ascent;

    ClosedFormPrimal primal = closed_form_global_product(p);
    Matrix cert = closed_form_certificate(p);
    rep.primal_closed_form = primal.value;
    rep.dual_closed_form = dual_objective(cert, p);
    rep.gap_closed_form = rep.primal_closed_form - rep.dual_closed_form;
    rep.l2_primal_dual_distance = (primal.z - recover_primal_from_dual(cert, p)).frobenius_norm();
    rep.conditions = check_dual_conditions(cert, primal.z, p);

    if (opts.run_iterative) {
        AscentResult it = solve_dual_projected_ascent(p, opts.ascent);
        rep.ran_iterative = true;
        rep.dual_iterative = it.value;
        rep.iterative_iters = it.iters;
        rep.iterative_converged = it.converged;
        rep.iterative_rel_err =
            std::abs(it.value - rep.dual_closed_form) / (1.0 + std::abs(rep.dual_closed_form));
    }
    if (opts.run_local_search) {
        MultiStartResult ms = primal_multi_start(p, opts.restarts, opts.search, opts.seed);
        rep.ran_local_search = true;
        rep.primal_local_search = ms.best.failed ? std::numeric_limits<double>::quiet_NaN()
                                                 : ms.best.objective;
        rep.local_search_seed = ms.best_seed;
    }
    return rep;
}

std::string gap_report_to_json(const GapReportLNN& r) {
    JsonWriter w;
    w.begin_object();
    w.key("n").value(r.n);
    w.key("d").value(r.d);
    w.key("d_min").value(r.d_min);
    w.key("depth").value(r.depth);
    w.key("gamma").value(r.gamma);
    w.key("well_posed").value(r.well_posed);
    w.key("primal_closed_form").value(r.primal_closed_form);
    w.key("dual_closed_form").value(r.dual_closed_form);
    w.key("gap_closed_form").value(r.gap_closed_form);
    w.key("l2_primal_dual_distance").value(r.l2_primal_dual_distance);
    w.key("ran_iterative").value(r.ran_iterative);
    if (r.ran_iterative) {
        w.key("dual_iterative").value(r.dual_iterative);
        w.key("iterative_iters").value(r.iterative_iters);
        w.key("iterative_converged").value(r.iterative_converged);
        w.key("iterative_rel_err").value(r.iterative_rel_err);
    }
    w.key("ran_local_search").value(r.ran_local_search);
    if (r.ran_local_search) {
        w.key("primal_local_search").value(r.primal_local_search);
        w.key("local_search_seed").value(static_cast<std::size_t>(r.local_search_seed));
    }
    w.key("dual_conditions").begin_object();
    w.key("subgradient_residual").value(r.conditions.subgradient_residual);
    w.key("projection_residual").value(r.conditions.projection_residual);
    w.key("spectral_margin").value(r.conditions.spectral_margin);
    w.key("stationarity_residuals").value(r.conditions.stationarity_residuals);
    w.key("tol").value(r.conditions.tol);
    w.key("pass").value(r.conditions.pass);
    w.end_object();
    w.key("solver").begin_object();
    w.key("eta0").value(r.solver.eta0);
    w.key("max_iters").value(r.solver.max_iters);
    w.key("tol").value(r.solver.tol);
    w.key("patience").value(r.solver.patience);
    w.end_object();
    w.end_object();
    return w.str();
}

std::string gap_report_lnn_csv_header() {
    return "n,d,d_min,depth,gamma,primal_closed_form,dual_closed_form,gap_closed_form,"
           "dual_iterative,iterative_rel_err,primal_local_search,l2_primal_dual_distance,"
           "conditions_pass\n";
}

std::string gap_report_csv_row(const GapReportLNN& r) {
    std::string out;
    out += std::to_string(r.n) + ',' + std::to_string(r.d) + ',' + std::to_string(r.d_min) + ',' +
           std::to_string(r.depth) + ',';
    out += fmt17(r.gamma) + ',';
    out += fmt17(r.primal_closed_form) + ',' + fmt17(r.dual_closed_form) + ',' +
           fmt17(r.gap_closed_form) + ',';
    out += (r.ran_iterative ? fmt17(r.dual_iterative) : "") + std::string(",");
    out += (r.ran_iterative ? fmt17(r.iterative_rel_err) : "") + std::string(",");
    out += (r.ran_local_search ? fmt17(r.primal_local_search) : "") + std::string(",");
    out += fmt17(r.l2_primal_dual_distance) + ',';
    out += r.conditions.pass ? "true" : "false";
    out += '\n';
    return out;
}

}  // namespace dualgap
