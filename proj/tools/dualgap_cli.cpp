#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dualgap/dual_lnn.hpp"
#include "dualgap/errors.hpp"
#include "dualgap/landscape.hpp"
#include "dualgap/linear_net.hpp"
#include "dualgap/matrix.hpp"
#include "dualgap/multibranch.hpp"
#include "dualgap/rng.hpp"
#include "dualgap/serialization.hpp"

namespace fs = std::filesystem;

namespace {

using namespace dualgap;

// ---------------------------------------------------------------------------
// Typed flat configs with a fixed key schema. Every run resolves its config
// to a JSON file next to the outputs, so reruns are reproducible from the
// artifacts alone.

struct ConfigValue {
    enum class Kind { integer, real, boolean, text, int_list };
    Kind kind = Kind::integer;
    std::int64_t i = 0;
    double d = 0.0;
    bool b = false;
    std::string s;
    std::vector<std::int64_t> list;
};

ConfigValue cv(std::int64_t v) {
    ConfigValue c;
    c.kind = ConfigValue::Kind::integer;
    c.i = v;
    return c;
}
ConfigValue cv(double v) {
    ConfigValue c;
    c.kind = ConfigValue::Kind::real;
    c.d = v;
    return c;
}
ConfigValue cv(bool v) {
    ConfigValue c;
    c.kind = ConfigValue::Kind::boolean;
    c.b = v;
    return c;
}
ConfigValue cv(const char* v) {
    ConfigValue c;
    c.kind = ConfigValue::Kind::text;
    c.s = v;
    return c;
}
ConfigValue cv(std::vector<std::int64_t> v) {
    ConfigValue c;
    c.kind = ConfigValue::Kind::int_list;
    c.list = std::move(v);
    return c;
}

std::int64_t parse_integer(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(text, &used);
        if (used != text.size()) throw config_error("");
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "' expects an integer, got '" + text + "'");
    }
}

double parse_real(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw config_error("");
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "' expects a number, got '" + text + "'");
    }
}

bool parse_boolean(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw config_error("config key '" + key + "' expects true or false, got '" + text + "'");
}

class Config {
public:
    explicit Config(std::vector<std::pair<std::string, ConfigValue>> defaults)
        : entries_(std::move(defaults)) {}

    void apply_json_file(const std::string& path) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw config_error(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw config_error("config file must hold a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            ConfigValue& v = find(it.key());
            const nlohmann::json& item = it.value();
            switch (v.kind) {
                case ConfigValue::Kind::integer:
                    if (!item.is_number_integer())
                        throw config_error("config key '" + it.key() + "' expects an integer");
                    v.i = item.get<std::int64_t>();
                    break;
                case ConfigValue::Kind::real:
                    if (!item.is_number())
                        throw config_error("config key '" + it.key() + "' expects a number");
                    v.d = item.get<double>();
                    break;
                case ConfigValue::Kind::boolean:
                    if (!item.is_boolean())
                        throw config_error("config key '" + it.key() + "' expects a boolean");
                    v.b = item.get<bool>();
                    break;
                case ConfigValue::Kind::text:
                    if (!item.is_string())
                        throw config_error("config key '" + it.key() + "' expects a string");
                    v.s = item.get<std::string>();
                    break;
                case ConfigValue::Kind::int_list: {
                    if (!item.is_array())
                        throw config_error("config key '" + it.key() +
                                           "' expects an array of integers");
                    v.list.clear();
                    for (const auto& e : item) {
                        if (!e.is_number_integer())
                            throw config_error("config key '" + it.key() +
                                               "' expects an array of integers");
                        v.list.push_back(e.get<std::int64_t>());
                    }
                    break;
                }
            }
        }
    }

    void apply_set(const std::string& assignment) {
        std::size_t eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0)
            throw config_error("--set expects key=value, got '" + assignment + "'");
        std::string key = assignment.substr(0, eq);
        std::string text = assignment.substr(eq + 1);
        ConfigValue& v = find(key);
        switch (v.kind) {
            case ConfigValue::Kind::integer: v.i = parse_integer(key, text); break;
            case ConfigValue::Kind::real: v.d = parse_real(key, text); break;
            case ConfigValue::Kind::boolean: v.b = parse_boolean(key, text); break;
            case ConfigValue::Kind::text: v.s = text; break;
            case ConfigValue::Kind::int_list: {
                v.list.clear();
                std::size_t at = 0;
                while (at <= text.size()) {
                    std::size_t comma = text.find(',', at);
                    if (comma == std::string::npos) comma = text.size();
                    v.list.push_back(parse_integer(key, text.substr(at, comma - at)));
                    at = comma + 1;
                }
                break;
            }
        }
    }

    std::int64_t integer(const std::string& key) const { return expect(key, ConfigValue::Kind::integer).i; }
    double real(const std::string& key) const { return expect(key, ConfigValue::Kind::real).d; }
    bool boolean(const std::string& key) const { return expect(key, ConfigValue::Kind::boolean).b; }
    const std::string& text(const std::string& key) const {
        return expect(key, ConfigValue::Kind::text).s;
    }
    const std::vector<std::int64_t>& int_list(const std::string& key) const {
        return expect(key, ConfigValue::Kind::int_list).list;
    }

    void set_integer(const std::string& key, std::int64_t v) {
        ConfigValue& c = find(key);
        if (c.kind != ConfigValue::Kind::integer)
            throw config_error("config key '" + key + "' is not an integer");
        c.i = v;
    }

    ConfigValue::Kind kind(const std::string& key) const {
        return const_cast<Config*>(this)->find(key).kind;
    }

    // Assigns a sweep point; integer keys require an integral value.
    void set_numeric(const std::string& key, double v) {
        ConfigValue& c = find(key);
        if (c.kind == ConfigValue::Kind::real) {
            c.d = v;
        } else if (c.kind == ConfigValue::Kind::integer) {
            double r = std::round(v);
            if (std::abs(v - r) > 1e-9)
                throw config_error("sweep over integer key '" + key +
                                   "' hit a non-integer value");
            c.i = static_cast<std::int64_t>(r);
        } else {
            throw config_error("sweep key '" + key + "' is not numeric");
        }
    }

    std::string resolved_json(const std::string& subcommand, const std::string& sweep) const {
        JsonWriter w;
        w.begin_object();
        w.key("subcommand").value(subcommand);
        for (const auto& [name, v] : entries_) {
            w.key(name);
            switch (v.kind) {
                case ConfigValue::Kind::integer: w.value(v.i); break;
                case ConfigValue::Kind::real: w.value(v.d); break;
                case ConfigValue::Kind::boolean: w.value(v.b); break;
                case ConfigValue::Kind::text: w.value(v.s); break;
                case ConfigValue::Kind::int_list: {
                    w.begin_array();
                    for (std::int64_t e : v.list) w.value(e);
                    w.end_array();
                    break;
                }
            }
        }
        w.key("sweep").value(sweep);
        w.end_object();
        return w.str();
    }

private:
    ConfigValue& find(const std::string& key) {
        for (auto& [name, v] : entries_)
            if (name == key) return v;
        throw config_error("unknown config key: " + key);
    }
    const ConfigValue& expect(const std::string& key, ConfigValue::Kind k) const {
        const ConfigValue& v = const_cast<Config*>(this)->find(key);
        if (v.kind != k) throw config_error("config key '" + key + "' has the wrong type");
        return v;
    }

    std::vector<std::pair<std::string, ConfigValue>> entries_;
};

// ---------------------------------------------------------------------------
// Sweeps: --sweep key=a..b[:step] runs the command once per value of the key.

struct Sweep {
    std::string key;
    double lo = 0.0, hi = 0.0, step = 1.0;
};

Sweep parse_sweep(const std::string& text) {
    Sweep s;
    std::size_t eq = text.find('=');
    std::size_t dots = text.find("..", eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || eq == 0 || dots == std::string::npos || dots < eq)
        throw config_error("--sweep expects key=a..b[:step], got '" + text + "'");
    s.key = text.substr(0, eq);
    std::string lo = text.substr(eq + 1, dots - eq - 1);
    std::string rest = text.substr(dots + 2);
    std::size_t colon = rest.find(':');
    std::string hi = colon == std::string::npos ? rest : rest.substr(0, colon);
    s.lo = parse_real(s.key, lo);
    s.hi = parse_real(s.key, hi);
    if (colon != std::string::npos) s.step = parse_real(s.key, rest.substr(colon + 1));
    if (s.step <= 0.0) throw config_error("--sweep step must be positive");
    if (s.hi < s.lo) throw config_error("--sweep range is empty");
    return s;
}

std::vector<double> sweep_points(const Sweep& s) {
    std::vector<double> pts;
    for (std::size_t k = 0;; ++k) {
        double v = s.lo + static_cast<double>(k) * s.step;
        if (v > s.hi + 1e-9 * s.step) break;
        pts.push_back(v);
    }
    return pts;
}

std::string format_sweep_value(const Config& c, const std::string& key, double v) {
    if (c.kind(key) == ConfigValue::Kind::integer)
        return std::to_string(static_cast<std::int64_t>(std::llround(v)));
    return fmt17(v);
}

// ---------------------------------------------------------------------------
// Generic command driver: resolves the config, runs each sweep point, and
// aggregates one CSV row per point.

struct CommonArgs {
    std::string config_path;
    std::string out = ".";
    std::string sweep;
    std::vector<std::string> sets;
    std::int64_t seed = 0;
    bool seed_given = false;
};

struct PointOutcome {
    bool pass = true;
    std::string csv_row;  // newline-terminated; may span several lines
};

using PointRunner = std::function<PointOutcome(const Config&, const std::string& suffix,
                                               const fs::path& out)>;

Config resolve_config(Config cfg, const CommonArgs& args) {
    if (!args.config_path.empty()) cfg.apply_json_file(args.config_path);
    for (const std::string& s : args.sets) cfg.apply_set(s);
    if (args.seed_given) cfg.set_integer("seed", args.seed);
    return cfg;
}

int drive(const std::string& prefix, Config cfg, const CommonArgs& args,
          const std::string& csv_header, const std::string& csv_name, PointRunner run) {
    fs::path out(args.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw config_error("cannot create output directory '" + args.out + "'");

    atomic_write_file((out / (prefix + "_resolved_config.json")).string(),
                      cfg.resolved_json(prefix, args.sweep));

    bool all_pass = true;
    std::string csv = csv_header;
    if (args.sweep.empty()) {
        PointOutcome o = run(cfg, "", out);
        all_pass = o.pass;
        csv += o.csv_row;
    } else {
        Sweep sweep = parse_sweep(args.sweep);
        for (double v : sweep_points(sweep)) {
            Config point = cfg;
            point.set_numeric(sweep.key, v);
            std::string suffix = "_" + sweep.key + "=" + format_sweep_value(cfg, sweep.key, v);
            PointOutcome o = run(point, suffix, out);
            all_pass = all_pass && o.pass;
            csv += o.csv_row;
        }
    }
    if (!csv_name.empty()) atomic_write_file((out / csv_name).string(), csv);
    return all_pass ? 0 : 3;
}

// ---------------------------------------------------------------------------
// strong-duality: closed-form primal/dual optima, optional iterative solver
// and certificate matrices for a deep linear network instance.

Config strong_duality_defaults() {
    return Config({
        {"n", cv(std::int64_t{20})},
        {"d", cv(std::int64_t{20})},
        {"d_min", cv(std::int64_t{5})},
        {"depth", cv(std::int64_t{2})},
        {"gamma_factor", cv(0.5)},
        {"seed", cv(std::int64_t{1})},
        {"tol", cv(1e-8)},
        {"iterative", cv(true)},
        {"max_iters", cv(std::int64_t{5000})},
        {"eta0", cv(1.0)},
        {"local_search", cv(false)},
        {"restarts", cv(std::int64_t{10})},
        {"y_file", cv("")},
    });
}

ProblemInstance build_lnn_instance(const Config& c) {
    const std::int64_t d_min = c.integer("d_min");
    const std::int64_t depth = c.integer("depth");
    if (d_min < 1) throw config_error("d_min must be positive");
    if (depth < 2) throw config_error("depth must be at least 2");

    if (!c.text("y_file").empty()) {
        const std::string& path = c.text("y_file");
        std::string body = read_file(path);
        Matrix y = path.size() >= 5 && path.substr(path.size() - 5) == ".json"
                       ? matrix_from_json(body)
                       : matrix_from_csv(body);
        std::vector<std::size_t> dims;
        dims.push_back(y.cols());
        for (std::int64_t k = 0; k + 1 < depth; ++k)
            dims.push_back(static_cast<std::size_t>(d_min));
        dims.push_back(y.rows());
        Matrix x = Matrix::identity(y.cols());
        ProblemInstance probe = make_instance(dims, 0.0, x, y);
        double gamma = c.real("gamma_factor") * probe.ytilde_svd.sigma_min_positive();
        return make_instance(dims, gamma, std::move(x), std::move(y));
    }

    const std::int64_t n = c.integer("n");
    const std::int64_t d = c.integer("d");
    if (n < 1 || d < 1) throw config_error("n and d must be positive");
    return gaussian_identity_instance(static_cast<std::size_t>(n), static_cast<std::size_t>(d),
                                      static_cast<std::size_t>(d_min),
                                      static_cast<std::size_t>(depth), c.real("gamma_factor"),
                                      static_cast<std::uint64_t>(c.integer("seed")));
}

PointOutcome run_strong_duality_point(const Config& c, const std::string& suffix,
                                      const fs::path& out) {
    ProblemInstance p = build_lnn_instance(c);

    GapReportOptions opts;
    opts.run_iterative = c.boolean("iterative");
    opts.ascent.max_iters = static_cast<std::size_t>(c.integer("max_iters"));
    opts.ascent.eta0 = c.real("eta0");
    opts.run_local_search = c.boolean("local_search");
    opts.restarts = static_cast<std::size_t>(c.integer("restarts"));
    opts.seed = static_cast<std::uint64_t>(c.integer("seed"));
    GapReportLNN rep = duality_gap_report(p, opts);

    atomic_write_file((out / ("strong_duality_report" + suffix + ".json")).string(),
                      gap_report_to_json(rep));
    ClosedFormPrimal cf = closed_form_global_product(p);
    Matrix lambda = closed_form_certificate(p);
    atomic_write_file((out / ("z_star" + suffix + ".csv")).string(), matrix_to_csv(cf.z));
    atomic_write_file((out / ("lambda_star" + suffix + ".csv")).string(),
                      matrix_to_csv(lambda));

    const double tol = c.real("tol");
    PointOutcome o;
    o.pass = std::abs(rep.gap_closed_form) <= tol * (1.0 + std::abs(rep.primal_closed_form)) &&
             rep.l2_primal_dual_distance <= tol;
    o.csv_row = gap_report_csv_row(rep);
    return o;
}

// ---------------------------------------------------------------------------
// gap-bound: replicates one branch family I times and certifies the duality
// gap bound on the grid-restricted problem.

Config gap_bound_defaults() {
    return Config({
        {"family", cv("sinusoid")},
        {"regularizer", cv("squared_norm")},
        {"grid_points", cv(std::int64_t{21})},
        {"box_lo", cv(-3.0)},
        {"box_hi", cv(3.0)},
        {"scale", cv(1.0)},
        {"samples", cv(std::int64_t{10})},
        {"data_dim", cv(std::int64_t{2})},
        {"branches", cv(std::int64_t{8})},
        {"tau", cv(-1.0)},
        {"budget", cv(-1.0)},
        {"seed", cv(std::int64_t{1})},
    });
}

PointOutcome run_gap_bound_point(const Config& c, const std::string& suffix,
                                 const fs::path& out) {
    const std::int64_t branches = c.integer("branches");
    const std::int64_t samples = c.integer("samples");
    const std::int64_t dim = c.integer("data_dim");
    const std::int64_t grid_points = c.integer("grid_points");
    if (branches < 1) throw config_error("branches must be positive");
    if (samples < 1 || dim < 1) throw config_error("samples and data_dim must be positive");
    if (grid_points < 1) throw config_error("grid_points must be positive");

    Dataset data = synthetic_dataset(static_cast<std::size_t>(samples),
                                     static_cast<std::size_t>(dim),
                                     static_cast<std::uint64_t>(c.integer("seed")));
    std::vector<double> direction(static_cast<std::size_t>(dim),
                                  1.0 / std::sqrt(static_cast<double>(dim)));
    BranchParam lo{c.real("box_lo"), c.real("box_lo")};
    BranchParam hi{c.real("box_hi"), c.real("box_hi")};
    BranchSpec spec = make_branch(branch_family_from_name(c.text("family")),
                                  regularizer_from_name(c.text("regularizer")), direction,
                                  c.real("scale"), static_cast<std::size_t>(grid_points), lo, hi);
    std::vector<BranchSpec> bs(static_cast<std::size_t>(branches), spec);

    double tau = c.real("tau");
    if (tau <= 0.0) tau = default_tau(bs, data);
    double budget = c.real("budget");
    if (budget < 0.0) {
        BranchTables tables = precompute_tables(bs, data);
        budget = default_budget(tables, static_cast<std::uint64_t>(c.integer("seed")));
    }

    GapReport rep = verify_theorem1(bs, data, tau, budget);
    atomic_write_file((out / ("gap_bound_report" + suffix + ".json")).string(),
                      gap_report_to_json(rep));

    PointOutcome o;
    o.pass = rep.lower_ok && rep.upper_ok;
    o.csv_row = gap_report_csv_row(rep);
    return o;
}

// ---------------------------------------------------------------------------
// landscape: trains three seeds, projects the loss onto the plane through
// the three solutions, and reports the convexity-violation metric.

Config landscape_defaults() {
    return Config({
        {"samples", cv(std::int64_t{200})},
        {"dim", cv(std::int64_t{10})},
        {"teacher_hidden", cv(std::int64_t{11})},
        {"branches", cv(std::int64_t{10})},
        {"loss", cv("tau_hinge")},
        {"combine", cv("sum")},
        {"tau", cv(1.0)},
        {"iters", cv(std::int64_t{2000})},
        {"lr", cv(0.05)},
        {"batch", cv(std::int64_t{32})},
        {"resolution", cv(std::int64_t{25})},
        {"trial_seeds", cv(std::vector<std::int64_t>{0, 1, 2})},
        {"seed", cv(std::int64_t{1})},
    });
}

PointOutcome run_landscape_point(const Config& c, const std::string& suffix,
                                 const fs::path& out) {
    const std::int64_t branches = c.integer("branches");
    const std::int64_t resolution = c.integer("resolution");
    if (branches < 1) throw config_error("branches must be positive");
    if (resolution < 2) throw config_error("resolution must be at least 2");
    const std::vector<std::int64_t>& trial_seeds = c.int_list("trial_seeds");
    if (trial_seeds.size() != 3) throw config_error("trial_seeds must list three entries");

    LossKind kind = loss_from_name(c.text("loss"));
    if (kind == LossKind::multiclass_hinge)
        throw config_error("the landscape task uses binary labels; pick tau_hinge or squared");
    Combine combine = combine_from_name(c.text("combine"));

    const std::uint64_t master = static_cast<std::uint64_t>(c.integer("seed"));
    TeacherInstance inst = teacher_synthetic_data(
        static_cast<std::size_t>(c.integer("samples")),
        static_cast<std::size_t>(c.integer("dim")),
        static_cast<std::size_t>(c.integer("teacher_hidden")), Rng::stream_seed(master, 0xd));

    SgdOptions sgd;
    sgd.iters = static_cast<std::size_t>(c.integer("iters"));
    sgd.lr = c.real("lr");
    sgd.batch = static_cast<std::size_t>(c.integer("batch"));
    sgd.tau = c.real("tau");
    sgd.trace_stride = 0;

    std::vector<std::vector<double>> thetas;
    std::vector<double> finals;
    MultiBranchNet proto = make_net(static_cast<std::size_t>(c.integer("dim")), 1,
                                    static_cast<std::size_t>(branches), {1}, combine);
    for (std::size_t trial = 0; trial < 3; ++trial) {
        MultiBranchNet net = proto;
        const std::uint64_t ts = static_cast<std::uint64_t>(trial_seeds[trial]);
        init_gaussian(net, Rng::stream_seed(master, ts, 0));
        SgdResult run = sgd_train(net, inst.data, kind, Rng::stream_seed(master, ts, 1), sgd);
        if (run.diverged)
            throw numerical_error("training diverged for trial seed " + std::to_string(ts));
        thetas.push_back(flatten(net));
        finals.push_back(run.final_loss);
    }

    PlaneGrid grid = plane_projection_grid(proto, inst.data, kind, c.real("tau"), thetas[0],
                                           thetas[1], thetas[2],
                                           static_cast<std::size_t>(resolution));
    double violation = convexity_violation_metric(grid);

    atomic_write_file((out / ("landscape_grid" + suffix + ".csv")).string(),
                      plane_grid_csv(grid));
    JsonWriter w;
    w.begin_object();
    w.key("branches").value(static_cast<std::int64_t>(branches));
    w.key("final_losses").begin_array();
    for (double f : finals) w.value(f);
    w.end_array();
    w.key("violation").value(violation);
    w.key("resolution").value(static_cast<std::int64_t>(resolution));
    w.end_object();
    atomic_write_file((out / ("landscape_summary" + suffix + ".json")).string(), w.str());

    PointOutcome o;
    o.pass = std::isfinite(violation);
    o.csv_row = std::to_string(branches) + "," + fmt17(violation) + "\n";
    return o;
}

// ---------------------------------------------------------------------------
// hitting-rate: trains many one-hidden-layer students per width and tabulates
// how often they reach the known global minimum.

Config hitting_rate_defaults() {
    return Config({
        {"samples", cv(std::int64_t{1000})},
        {"dim", cv(std::int64_t{10})},
        {"teacher_hidden", cv(std::int64_t{11})},
        {"width_min", cv(std::int64_t{10})},
        {"width_max", cv(std::int64_t{21})},
        {"seeds", cv(std::int64_t{100})},
        {"iters", cv(std::int64_t{20000})},
        {"tol", cv(1e-4)},
        {"lr", cv(0.05)},
        {"batch", cv(std::int64_t{32})},
        {"full_budget", cv(false)},
        {"seed", cv(std::int64_t{1})},
    });
}

PointOutcome run_hitting_rate_point(const Config& c, const std::string& suffix,
                                    const fs::path& out) {
    const std::int64_t seeds = c.integer("seeds");
    const std::int64_t wmin = c.integer("width_min");
    const std::int64_t wmax = c.integer("width_max");
    if (seeds < 1) throw config_error("seeds must be positive");
    if (wmin < 1 || wmax < wmin) throw config_error("width range is empty");

    const std::uint64_t master = static_cast<std::uint64_t>(c.integer("seed"));
    TeacherInstance inst = teacher_synthetic_data(
        static_cast<std::size_t>(c.integer("samples")),
        static_cast<std::size_t>(c.integer("dim")),
        static_cast<std::size_t>(c.integer("teacher_hidden")), Rng::stream_seed(master, 0xd));

    HitOptions opt;
    if (c.boolean("full_budget")) {
        opt = HitOptions::full_budget();
    } else {
        opt.iters = static_cast<std::size_t>(c.integer("iters"));
        opt.tol = c.real("tol");
    }
    opt.seeds = static_cast<std::size_t>(seeds);
    opt.lr = c.real("lr");
    opt.batch = static_cast<std::size_t>(c.integer("batch"));

    std::vector<std::size_t> widths;
    for (std::int64_t w = wmin; w <= wmax; ++w) widths.push_back(static_cast<std::size_t>(w));
    HitTable table = hitting_rate_experiment(inst.data, widths, opt, master);

    atomic_write_file((out / ("hitting_rate" + suffix + ".csv")).string(), hit_table_csv(table));

    std::vector<double> ws(table.widths.begin(), table.widths.end());
    std::vector<double> hs(table.hits.begin(), table.hits.end());
    JsonWriter w;
    w.begin_object();
    w.key("widths").begin_array();
    for (std::size_t v : table.widths) w.value(v);
    w.end_array();
    w.key("hits").begin_array();
    for (std::size_t v : table.hits) w.value(v);
    w.end_array();
    w.key("seeds").value(table.seeds);
    w.key("rate_width_spearman").value(ws.size() >= 2 ? spearman(ws, hs) : 0.0);
    w.end_object();
    atomic_write_file((out / ("hitting_rate_summary" + suffix + ".json")).string(), w.str());

    PointOutcome o;
    o.pass = true;
    o.csv_row.clear();
    return o;
}

int dispatch(const std::string& name, const CommonArgs& args) {
    if (name == "strong-duality") {
        Config cfg = resolve_config(strong_duality_defaults(), args);
        return drive("strong_duality", std::move(cfg), args, gap_report_lnn_csv_header(),
                     args.sweep.empty() ? "strong_duality_report.csv" : "strong_duality_sweep.csv",
                     run_strong_duality_point);
    }
    if (name == "gap-bound") {
        Config cfg = resolve_config(gap_bound_defaults(), args);
        return drive("gap_bound", std::move(cfg), args, gap_report_csv_header(),
                     args.sweep.empty() ? "gap_bound_report.csv" : "gap_bound_sweep.csv",
                     run_gap_bound_point);
    }
    if (name == "landscape") {
        Config cfg = resolve_config(landscape_defaults(), args);
        return drive("landscape", std::move(cfg), args, "I,violation\n", "landscape_metric.csv",
                     run_landscape_point);
    }
    Config cfg = resolve_config(hitting_rate_defaults(), args);
    return drive("hitting_rate", std::move(cfg), args, "", "", run_hitting_rate_point);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"duality-gap experiments: strong duality for deep linear networks and the "
                 "Shapley-Folkman gap bound for multi-branch networks"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"strong-duality", "closed-form and iterative duality gap for a deep linear network"},
        {"gap-bound", "certify the duality-gap bound for a replicated branch family"},
        {"landscape", "train three seeds and project the loss surface onto their plane"},
        {"hitting-rate", "tabulate how often SGD reaches the global minimum per width"},
    };

    std::vector<CommonArgs> args(subs.size());
    std::vector<CLI::Option*> seed_opts(subs.size());
    std::vector<CLI::App*> apps(subs.size());
    for (std::size_t k = 0; k < subs.size(); ++k) {
        CLI::App* sub = app.add_subcommand(subs[k].first, subs[k].second);
        sub->add_option("--config", args[k].config_path, "JSON config file");
        sub->add_option("--out", args[k].out, "output directory (default .)");
        seed_opts[k] = sub->add_option("--seed", args[k].seed, "master seed override");
        sub->add_option("--set", args[k].sets, "key=value override, repeatable")->type_size(1);
        sub->add_option("--sweep", args[k].sweep, "key=a..b[:step] parameter sweep");
        apps[k] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    for (std::size_t k = 0; k < subs.size(); ++k) {
        if (!apps[k]->parsed()) continue;
        args[k].seed_given = seed_opts[k]->count() > 0;
        try {
            return dispatch(subs[k].first, args[k]);
        } catch (const config_error& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const precondition_error& e) {
            std::cerr << "precondition violated: " << e.what() << "\n";
            return 3;
        } catch (const numerical_error& e) {
            std::cerr << "numerical failure: " << e.what() << "\n";
            return 4;
        } catch (const std::exception& e) {
            std::cerr << "failure: " << e.what() << "\n";
            return 4;
        }
    }
    return 2;
}
