#include "dualgap/epigraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dualgap/errors.hpp"
#include "dualgap/parallel.hpp"
#include "dualgap/serialization.hpp"

namespace dualgap {

namespace {

constexpr std::size_t kEnumerationCap = 2'000'000;

double cross(PlanarPoint o, PlanarPoint a, PlanarPoint b) {
    return (a.r - o.r) * (b.w - o.w) - (a.w - o.w) * (b.r - o.r);
}

double coord_scale(const std::vector<PlanarPoint>& pts) {
    double m = 0.0;
    for (const PlanarPoint& p : pts) m = std::max({m, std::abs(p.r), std::abs(p.w)});
    return std::max(1.0, m);
}

bool lex_less(PlanarPoint a, PlanarPoint b) {
    if (a.r != b.r) return a.r < b.r;
    return a.w < b.w;
}

}  // namespace

ConvexHull2D convex_hull(const PlanarSet& s) {
    require(!s.pts.empty(), "convex_hull: empty point set");
    std::vector<std::size_t> order(s.pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s.pts[a].r != s.pts[b].r) return s.pts[a].r < s.pts[b].r;
        if (s.pts[a].w != s.pts[b].w) return s.pts[a].w < s.pts[b].w;
        return a < b;  // coincident points resolve to the lowest input index
    });
    // Drop exact duplicates, keeping the lowest original index.
    std::vector<std::size_t> uniq;
    for (std::size_t idx : order) {
        if (!uniq.empty() && s.pts[uniq.back()].r == s.pts[idx].r &&
            s.pts[uniq.back()].w == s.pts[idx].w)
            continue;
        uniq.push_back(idx);
    }

    const double eps = 1e-12 * coord_scale(s.pts) * coord_scale(s.pts);
    auto build = [&](std::vector<std::size_t>& chain, std::size_t idx) {
        while (chain.size() >= 2 &&
               cross(s.pts[chain[chain.size() - 2]], s.pts[chain.back()], s.pts[idx]) <= eps)
            chain.pop_back();
        chain.push_back(idx);
    };

    std::vector<std::size_t> lower, upper;
    for (std::size_t idx : uniq) build(lower, idx);
    for (auto it = uniq.rbegin(); it != uniq.rend(); ++it) build(upper, *it);

    ConvexHull2D h;
    for (std::size_t k = 0; k + 1 < lower.size(); ++k) {
        h.v.push_back(s.pts[lower[k]]);
        h.source.push_back(lower[k]);
    }
    for (std::size_t k = 0; k + 1 < upper.size(); ++k) {
        h.v.push_back(s.pts[upper[k]]);
        h.source.push_back(upper[k]);
    }
    if (h.v.empty()) {  // all points coincide
        h.v.push_back(s.pts[uniq.front()]);
        h.source.push_back(uniq.front());
    }
    return h;
}

namespace {

double point_segment_distance(PlanarPoint a, PlanarPoint b, PlanarPoint q) {
    double dr = b.r - a.r, dw = b.w - a.w;
    double len2 = dr * dr + dw * dw;
    double t = len2 > 0.0 ? ((q.r - a.r) * dr + (q.w - a.w) * dw) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double pr = a.r + t * dr - q.r, pw = a.w + t * dw - q.w;
    return std::hypot(pr, pw);
}

}  // namespace

double hull_violation(const ConvexHull2D& h, PlanarPoint q) {
    require(!h.v.empty(), "hull_violation: empty hull");
    if (h.v.size() == 1) return std::hypot(q.r - h.v[0].r, q.w - h.v[0].w);
    if (h.v.size() == 2) return point_segment_distance(h.v[0], h.v[1], q);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < h.v.size(); ++i) {
        PlanarPoint a = h.v[i];
        PlanarPoint b = h.v[(i + 1) % h.v.size()];
        double len = std::hypot(b.r - a.r, b.w - a.w);
        if (len == 0.0) continue;
        worst = std::max(worst, -cross(a, b, q) / len);
    }
    return worst;
}

PlanarSet minkowski_sum_serial(const PlanarSet& a, const PlanarSet& b) {
    require(!a.pts.empty() && !b.pts.empty(), "minkowski_sum: empty operand");
    require(a.pts.size() * b.pts.size() <= kEnumerationCap,
            "minkowski_sum: enumeration exceeds the 2e6 point cap");
    PlanarSet out;
    out.pts.resize(a.pts.size() * b.pts.size());
    for (std::size_t i = 0; i < a.pts.size(); ++i)
        for (std::size_t j = 0; j < b.pts.size(); ++j)
            out.pts[i * b.pts.size() + j] = {a.pts[i].r + b.pts[j].r, a.pts[i].w + b.pts[j].w};
    return out;
}

PlanarSet minkowski_sum(const PlanarSet& a, const PlanarSet& b) {
    require(!a.pts.empty() && !b.pts.empty(), "minkowski_sum: empty operand");
    require(a.pts.size() * b.pts.size() <= kEnumerationCap,
            "minkowski_sum: enumeration exceeds the 2e6 point cap");
    PlanarSet out;
    out.pts.resize(a.pts.size() * b.pts.size());
    const long long n = static_cast<long long>(a.pts.size());
    const int threads = worker_threads();
#pragma omp parallel for num_threads(threads) schedule(static) if (n > 64)
    for (long long i = 0; i < n; ++i)
        for (std::size_t j = 0; j < b.pts.size(); ++j)
            out.pts[static_cast<std::size_t>(i) * b.pts.size() + j] = {
                a.pts[static_cast<std::size_t>(i)].r + b.pts[j].r,
                a.pts[static_cast<std::size_t>(i)].w + b.pts[j].w};
    return out;
}

PlanarSet minkowski_sum(const std::vector<PlanarSet>& sets) {
    require(!sets.empty(), "minkowski_sum: no sets");
    PlanarSet acc = sets.front();
    for (std::size_t i = 1; i < sets.size(); ++i) acc = minkowski_sum(acc, sets[i]);
    return acc;
}

PlanarSet minkowski_average(const std::vector<PlanarSet>& sets) {
    PlanarSet acc = minkowski_sum(sets);
    const double inv = 1.0 / static_cast<double>(sets.size());
    for (PlanarPoint& p : acc.pts) {
        p.r *= inv;
        p.w *= inv;
    }
    return acc;
}

SumHull minkowski_sum_hull(const std::vector<PlanarSet>& sets) {
    require(!sets.empty(), "minkowski_sum_hull: no sets");
    SumHull acc;
    acc.hull = convex_hull(sets.front());
    acc.provenance.resize(acc.hull.v.size());
    for (std::size_t k = 0; k < acc.hull.v.size(); ++k)
        acc.provenance[k] = {acc.hull.source[k]};

    for (std::size_t i = 1; i < sets.size(); ++i) {
        ConvexHull2D hi = convex_hull(sets[i]);
        PlanarSet candidates;
        std::vector<std::vector<std::size_t>> cand_prov;
        candidates.pts.reserve(acc.hull.v.size() * hi.v.size());
        cand_prov.reserve(acc.hull.v.size() * hi.v.size());
        for (std::size_t k = 0; k < acc.hull.v.size(); ++k)
            for (std::size_t m = 0; m < hi.v.size(); ++m) {
                candidates.pts.push_back(
                    {acc.hull.v[k].r + hi.v[m].r, acc.hull.v[k].w + hi.v[m].w});
                std::vector<std::size_t> prov = acc.provenance[k];
                prov.push_back(hi.source[m]);
                cand_prov.push_back(std::move(prov));
            }
        ConvexHull2D next = convex_hull(candidates);
        std::vector<std::vector<std::size_t>> next_prov(next.v.size());
        for (std::size_t k = 0; k < next.v.size(); ++k)
            next_prov[k] = cand_prov[next.source[k]];
        acc.hull = std::move(next);
        acc.provenance = std::move(next_prov);
        // Source indices now point at the candidate list, not an input set;
        // provenance carries the usable mapping, so drop the raw indices.
        acc.hull.source.assign(acc.hull.v.size(), 0);
    }
    return acc;
}

double epigraph_inf(const PlanarSet& s, double budget) {
    require(!s.pts.empty(), "epigraph_inf: empty set");
    double best = std::numeric_limits<double>::infinity();
    for (const PlanarPoint& p : s.pts)
        if (p.r <= budget) best = std::min(best, p.w);
    if (!std::isfinite(best))
        throw precondition_error("epigraph_inf: no point satisfies the budget");
    return best;
}

double epigraph_inf(const ConvexHull2D& h, double budget) {
    require(!h.v.empty(), "epigraph_inf: empty hull");
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = h.v.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (h.v[i].r <= budget) best = std::min(best, h.v[i].w);
        if (n >= 2) {
            PlanarPoint a = h.v[i], b = h.v[(i + 1) % n];
            if ((a.r - budget) * (b.r - budget) < 0.0) {
                double t = (budget - a.r) / (b.r - a.r);
                best = std::min(best, a.w + t * (b.w - a.w));
            }
        }
    }
    if (!std::isfinite(best))
        throw precondition_error("epigraph_inf: hull lies entirely above the budget");
    return best;
}

namespace {

// Barycentric expression of q over the hull with at most three vertices used.
struct HullCombo {
    std::vector<std::size_t> vertex;  // indices into hull vertices
    std::vector<double> weight;
};

HullCombo hull_barycentric(const ConvexHull2D& h, PlanarPoint q) {
    HullCombo combo;
    const std::size_t n = h.v.size();
    if (n == 1) {
        combo.vertex = {0};
        combo.weight = {1.0};
        return combo;
    }
    if (n == 2) {
        PlanarPoint a = h.v[0], b = h.v[1];
        double dr = b.r - a.r, dw = b.w - a.w;
        double len2 = dr * dr + dw * dw;
        double t = len2 > 0.0 ? ((q.r - a.r) * dr + (q.w - a.w) * dw) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        combo.vertex = {0, 1};
        combo.weight = {1.0 - t, t};
        return combo;
    }
    // Fan triangulation from vertex 0; pick the triangle with the best worst
    // barycentric coordinate (deterministic, robust to boundary noise).
    double best_min = -std::numeric_limits<double>::infinity();
    std::array<double, 3> best_w{};
    std::size_t best_t = 1;
    for (std::size_t t = 1; t + 1 < n; ++t) {
        PlanarPoint a = h.v[0], b = h.v[t], c = h.v[t + 1];
        double det = (b.r - a.r) * (c.w - a.w) - (c.r - a.r) * (b.w - a.w);
        if (det == 0.0) continue;
        double l1 = ((q.r - a.r) * (c.w - a.w) - (c.r - a.r) * (q.w - a.w)) / det;
        double l2 = ((b.r - a.r) * (q.w - a.w) - (q.r - a.r) * (b.w - a.w)) / det;
        double l0 = 1.0 - l1 - l2;
        double mn = std::min({l0, l1, l2});
        if (mn > best_min) {
            best_min = mn;
            best_w = {l0, l1, l2};
            best_t = t;
        }
    }
    require(best_min > -1e-7, "hull_barycentric: point is outside the hull");
    double sum = 0.0;
    for (double& w : best_w) {
        w = std::max(w, 0.0);
        sum += w;
    }
    combo.vertex = {0, best_t, best_t + 1};
    combo.weight = {best_w[0] / sum, best_w[1] / sum, best_w[2] / sum};
    return combo;
}

struct SupportEntry {
    std::size_t point = 0;
    double weight = 0.0;
};

// One pivot of the weight-transfer walk: find a direction in the null space
// of the per-set sum constraints and the two coordinate constraints, then
// move until a weight hits zero.
bool reduce_one(std::vector<std::vector<SupportEntry>>& support,
                const std::vector<PlanarSet>& sets) {
    std::vector<std::size_t> active;
    std::size_t slack = 0;
    for (std::size_t i = 0; i < support.size(); ++i)
        if (support[i].size() >= 2) {
            active.push_back(i);
            slack += support[i].size() - 1;
        }
    if (slack <= 2) return false;

    std::vector<std::pair<std::size_t, std::size_t>> cols;  // (set, slot)
    for (std::size_t i : active)
        for (std::size_t s = 0; s < support[i].size(); ++s) cols.emplace_back(i, s);

    const std::size_t rows = active.size() + 2;
    const std::size_t ncol = cols.size();
    std::vector<double> m(rows * ncol, 0.0);
    for (std::size_t c = 0; c < ncol; ++c) {
        auto [set_i, slot] = cols[c];
        std::size_t arow =
            std::lower_bound(active.begin(), active.end(), set_i) - active.begin();
        const PlanarPoint& p = sets[set_i].pts[support[set_i][slot].point];
        m[arow * ncol + c] = 1.0;
        m[(active.size() + 0) * ncol + c] = p.r;
        m[(active.size() + 1) * ncol + c] = p.w;
    }

    // Gaussian elimination with partial pivoting; then set the first free
    // column to 1 and back-substitute for a null vector.
    std::vector<std::size_t> pivot_col;
    std::size_t row = 0;
    std::vector<bool> is_pivot(ncol, false);
    for (std::size_t c = 0; c < ncol && row < rows; ++c) {
        std::size_t best = row;
        for (std::size_t r = row + 1; r < rows; ++r)
            if (std::abs(m[r * ncol + c]) > std::abs(m[best * ncol + c])) best = r;
        if (std::abs(m[best * ncol + c]) < 1e-13) continue;
        for (std::size_t cc = 0; cc < ncol; ++cc)
            std::swap(m[row * ncol + cc], m[best * ncol + cc]);
        double inv = 1.0 / m[row * ncol + c];
        for (std::size_t cc = 0; cc < ncol; ++cc) m[row * ncol + cc] *= inv;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == row) continue;
            double f = m[r * ncol + c];
            if (f == 0.0) continue;
            for (std::size_t cc = 0; cc < ncol; ++cc) m[r * ncol + cc] -= f * m[row * ncol + cc];
        }
        pivot_col.push_back(c);
        is_pivot[c] = true;
        ++row;
    }

    std::size_t free_col = ncol;
    for (std::size_t c = 0; c < ncol; ++c)
        if (!is_pivot[c]) {
            free_col = c;
            break;
        }
    if (free_col == ncol) return false;  // fully determined, nothing to move

    std::vector<double> delta(ncol, 0.0);
    delta[free_col] = 1.0;
    for (std::size_t r = 0; r < pivot_col.size(); ++r)
        delta[pivot_col[r]] = -m[r * ncol + free_col];

    double t_pos = std::numeric_limits<double>::infinity();
    double t_neg = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < ncol; ++c) {
        auto [set_i, slot] = cols[c];
        double w = support[set_i][slot].weight;
        if (delta[c] < -1e-15) t_pos = std::min(t_pos, w / -delta[c]);
        if (delta[c] > 1e-15) t_neg = std::min(t_neg, w / delta[c]);
    }
    double t = 0.0;
    if (t_pos <= t_neg)
        t = t_pos;
    else
        t = -t_neg;
    if (!std::isfinite(t)) return false;

    for (std::size_t c = 0; c < ncol; ++c) {
        auto [set_i, slot] = cols[c];
        support[set_i][slot].weight += t * delta[c];
    }
    // Drop slots that hit zero and renormalize each set's weights.
    for (std::size_t i : active) {
        auto& entries = support[i];
        entries.erase(std::remove_if(entries.begin(), entries.end(),
                                     [](const SupportEntry& e) { return e.weight <= 1e-13; }),
                      entries.end());
        double sum = 0.0;
        for (const SupportEntry& e : entries) sum += e.weight;
        require(sum > 0.0, "sf_decompose: a set lost all its weight");
        for (SupportEntry& e : entries) e.weight /= sum;
    }
    return true;
}

}  // namespace

SFDecomposition sf_decompose(PlanarPoint target, const std::vector<PlanarSet>& sets) {
    require(!sets.empty(), "sf_decompose: no sets");
    for (const PlanarSet& s : sets) require(!s.pts.empty(), "sf_decompose: empty set");

    SumHull sum = minkowski_sum_hull(sets);
    double scale = coord_scale(sum.hull.v);
    double viol = hull_violation(sum.hull, target);
    if (viol > 1e-9 * scale) {
        // Report the direction along which the hull separates the target.
        double dr = 0.0, dw = 0.0;
        const std::size_t n = sum.hull.v.size();
        if (n >= 3) {
            for (std::size_t i = 0; i < n; ++i) {
                PlanarPoint a = sum.hull.v[i], b = sum.hull.v[(i + 1) % n];
                double len = std::hypot(b.r - a.r, b.w - a.w);
                if (len == 0.0) continue;
                if (-cross(a, b, target) / len >= viol - 1e-15 * scale) {
                    dr = (b.w - a.w) / len;
                    dw = -(b.r - a.r) / len;
                    break;
                }
            }
        } else {
            double gr = target.r - sum.hull.v[0].r, gw = target.w - sum.hull.v[0].w;
            double len = std::hypot(gr, gw);
            if (len > 0.0) {
                dr = gr / len;
                dw = gw / len;
            }
        }
        throw precondition_error("sf_decompose: target outside the summed hull by " +
                                 std::to_string(viol) + " along direction (" +
                                 std::to_string(dr) + ", " + std::to_string(dw) + ")");
    }

    HullCombo combo = hull_barycentric(sum.hull, target);

    // Initial decomposition: each set supported on at most three points, one
    // per hull vertex in the combination.
    std::vector<std::vector<SupportEntry>> support(sets.size());
    for (std::size_t j = 0; j < combo.vertex.size(); ++j) {
        if (combo.weight[j] <= 1e-14) continue;
        const std::vector<std::size_t>& prov = sum.provenance[combo.vertex[j]];
        for (std::size_t i = 0; i < sets.size(); ++i) {
            std::size_t pt = prov[i];
            bool merged = false;
            for (SupportEntry& e : support[i])
                if (e.point == pt) {
                    e.weight += combo.weight[j];
                    merged = true;
                    break;
                }
            if (!merged) support[i].push_back({pt, combo.weight[j]});
        }
    }
    for (auto& entries : support) {
        double sum_w = 0.0;
        for (const SupportEntry& e : entries) sum_w += e.weight;
        require(sum_w > 0.0, "sf_decompose: empty support");
        for (SupportEntry& e : entries) e.weight /= sum_w;
    }

    while (reduce_one(support, sets)) {
    }

    SFDecomposition out;
    out.pure_choice.assign(sets.size(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (support[i].size() == 1) {
            out.pure_choice[i] = support[i][0].point;
        } else {
            SFTerm term;
            term.set_index = i;
            for (const SupportEntry& e : support[i]) {
                term.support.push_back(e.point);
                term.weights.push_back(e.weight);
            }
            out.convexified.push_back(std::move(term));
        }
    }
    if (out.convexified.size() > 2)
        throw numerical_error("sf_decompose: reduction left more than two convexified sets");
    for (const SFTerm& t : out.convexified)
        if (t.support.size() > 3)
            throw numerical_error("sf_decompose: support wider than three points");

    PlanarPoint rec{0.0, 0.0};
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (const SupportEntry& e : support[i]) {
            rec.r += e.weight * sets[i].pts[e.point].r;
            rec.w += e.weight * sets[i].pts[e.point].w;
        }
    out.reconstruction = rec;
    out.residual = std::hypot(rec.r - target.r, rec.w - target.w);
    if (out.residual > 1e-9 * scale)
        throw numerical_error("sf_decompose: reconstruction drifted beyond tolerance");
    return out;
}

ConvexEnvelope1D::ConvexEnvelope1D(std::vector<double> xs, std::vector<double> fs) {
    require(!xs.empty() && xs.size() == fs.size(), "envelope: sample size mismatch");
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (xs[a] != xs[b]) return xs[a] < xs[b];
        return fs[a] < fs[b];
    });
    std::vector<double> sx, sf;
    for (std::size_t idx : order) {
        if (!sx.empty() && sx.back() == xs[idx]) continue;  // keep the lower tie
        sx.push_back(xs[idx]);
        sf.push_back(fs[idx]);
    }
    // Lower hull in (x, f).
    for (std::size_t i = 0; i < sx.size(); ++i) {
        while (hx_.size() >= 2) {
            double c = (hx_.back() - hx_[hx_.size() - 2]) * (sf[i] - hf_[hf_.size() - 2]) -
                       (sx[i] - hx_[hx_.size() - 2]) * (hf_.back() - hf_[hf_.size() - 2]);
            if (c <= 0.0) {
                hx_.pop_back();
                hf_.pop_back();
            } else {
                break;
            }
        }
        hx_.push_back(sx[i]);
        hf_.push_back(sf[i]);
    }
}

double ConvexEnvelope1D::operator()(double x) const {
    const double tol = 1e-9 * std::max(1.0, std::max(std::abs(hx_.front()), std::abs(hx_.back())));
    require(x >= hx_.front() - tol && x <= hx_.back() + tol,
            "envelope: query outside the sampled interval");
    x = std::clamp(x, hx_.front(), hx_.back());
    if (hx_.size() == 1) return hf_[0];
    std::size_t hi = std::lower_bound(hx_.begin(), hx_.end(), x) - hx_.begin();
    if (hi == 0) return hf_[0];
    if (hi == hx_.size()) return hf_.back();
    std::size_t lo = hi - 1;
    if (hx_[hi] == hx_[lo]) return std::min(hf_[lo], hf_[hi]);
    double t = (x - hx_[lo]) / (hx_[hi] - hx_[lo]);
    return hf_[lo] + t * (hf_[hi] - hf_[lo]);
}

ConvexEnvelope2D::ConvexEnvelope2D(std::vector<std::array<double, 2>> xs, std::vector<double> fs) {
    require(!xs.empty() && xs.size() == fs.size(), "envelope: sample size mismatch");
    const std::size_t n = xs.size();
    double fscale = 1.0;
    for (double f : fs) fscale = std::max(fscale, std::abs(f));
    for (const auto& x : xs) scale_ = std::max({scale_, std::abs(x[0]), std::abs(x[1])});

    // Detect a collinear site configuration and fall back to a 1-d envelope
    // along the common line.
    std::size_t far = 0;
    double far_d = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        double d = std::hypot(xs[i][0] - xs[0][0], xs[i][1] - xs[0][1]);
        if (d > far_d) {
            far_d = d;
            far = i;
        }
    }
    bool collinear = true;
    if (far_d > 1e-12 * scale_) {
        double ux = (xs[far][0] - xs[0][0]) / far_d;
        double uy = (xs[far][1] - xs[0][1]) / far_d;
        for (std::size_t i = 0; i < n && collinear; ++i) {
            double px = xs[i][0] - xs[0][0], py = xs[i][1] - xs[0][1];
            if (std::abs(px * uy - py * ux) > 1e-10 * scale_) collinear = false;
        }
        if (collinear) {
            collapsed_ = true;
            line_origin_ = {xs[0][0], xs[0][1]};
            line_dir_ = {ux, uy};
        }
    } else {
        collapsed_ = true;  // all sites coincide
        line_origin_ = {xs[0][0], xs[0][1]};
        line_dir_ = {0.0, 0.0};
    }
    if (collapsed_) {
        std::vector<double> ts(n);
        for (std::size_t i = 0; i < n; ++i)
            ts[i] = line_dir_[0] * (xs[i][0] - line_origin_[0]) +
                    line_dir_[1] * (xs[i][1] - line_origin_[1]);
        ts_ = ts;
        tf_ = fs;
        return;
    }

    PlanarSet sites;
    for (const auto& x : xs) sites.pts.push_back({x[0], x[1]});
    domain_ = convex_hull(sites);

    const double eps_area = 1e-10 * scale_ * scale_;
    const double eps_below = 1e-12 * (1.0 + fscale);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                double ax = xs[j][0] - xs[i][0], ay = xs[j][1] - xs[i][1];
                double bx = xs[k][0] - xs[i][0], by = xs[k][1] - xs[i][1];
                double det = ax * by - ay * bx;
                if (std::abs(det) <= eps_area) continue;
                double df1 = fs[j] - fs[i], df2 = fs[k] - fs[i];
                double b0 = (df1 * by - df2 * ay) / det;
                double b1 = (ax * df2 - bx * df1) / det;
                double a = fs[i] - b0 * xs[i][0] - b1 * xs[i][1];
                bool below = true;
                for (std::size_t m = 0; m < n && below; ++m)
                    below = a + b0 * xs[m][0] + b1 * xs[m][1] <= fs[m] + eps_below;
                if (below) planes_.push_back({a, b0, b1});
            }
    require(!planes_.empty(), "envelope: no supporting facet found");
}

double ConvexEnvelope2D::operator()(double x0, double x1) const {
    if (collapsed_) {
        double px = x0 - line_origin_[0], py = x1 - line_origin_[1];
        double off = px * line_dir_[1] - py * line_dir_[0];
        require(std::abs(off) <= 1e-8 * scale_,
                "envelope: query off the degenerate sample line");
        double t = px * line_dir_[0] + py * line_dir_[1];
        ConvexEnvelope1D env(ts_, tf_);
        return env(t);
    }
    require(hull_violation(domain_, {x0, x1}) <= 1e-9 * scale_,
            "envelope: query outside the sampled domain");
    double best = -std::numeric_limits<double>::infinity();
    for (const Plane& p : planes_) best = std::max(best, p.a + p.b0 * x0 + p.b1 * x1);
    return best;
}

double hull_fill_distance(const PlanarSet& s, std::size_t grid_n) {
    require(grid_n >= 2, "hull_fill_distance: grid too small");
    ConvexHull2D h = convex_hull(s);
    if (h.v.size() <= 2) return 0.0;  // a segment is filled by its endpoints' span

    double rlo = h.v[0].r, rhi = rlo, wlo = h.v[0].w, whi = wlo;
    for (const PlanarPoint& p : h.v) {
        rlo = std::min(rlo, p.r);
        rhi = std::max(rhi, p.r);
        wlo = std::min(wlo, p.w);
        whi = std::max(whi, p.w);
    }
    // Bucket the set points on a uniform grid for nearest-point queries.
    const std::size_t bn = grid_n;
    std::vector<std::vector<std::size_t>> buckets(bn * bn);
    auto bucket_of = [&](PlanarPoint p) {
        std::size_t bi = static_cast<std::size_t>(
            std::clamp((p.r - rlo) / (rhi - rlo) * static_cast<double>(bn - 1), 0.0,
                       static_cast<double>(bn - 1)));
        std::size_t bj = static_cast<std::size_t>(
            std::clamp((p.w - wlo) / (whi - wlo) * static_cast<double>(bn - 1), 0.0,
                       static_cast<double>(bn - 1)));
        return std::pair<std::size_t, std::size_t>(bi, bj);
    };
    for (std::size_t k = 0; k < s.pts.size(); ++k) {
        auto [bi, bj] = bucket_of(s.pts[k]);
        buckets[bi * bn + bj].push_back(k);
    }

    const double cell_r = (rhi - rlo) / static_cast<double>(bn - 1);
    const double cell_w = (whi - wlo) / static_cast<double>(bn - 1);
    const double cell_min = std::min(cell_r, cell_w);
    double worst = 0.0;
    for (std::size_t gi = 0; gi < grid_n; ++gi)
        for (std::size_t gj = 0; gj < grid_n; ++gj) {
            PlanarPoint q{rlo + (rhi - rlo) * static_cast<double>(gi) / (grid_n - 1),
                          wlo + (whi - wlo) * static_cast<double>(gj) / (grid_n - 1)};
            if (hull_violation(h, q) > 0.0) continue;
            auto [bi, bj] = bucket_of(q);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t ring = 0; ring < bn; ++ring) {
                std::size_t ilo = bi >= ring ? bi - ring : 0;
                std::size_t ihi = std::min(bn - 1, bi + ring);
                std::size_t jlo = bj >= ring ? bj - ring : 0;
                std::size_t jhi = std::min(bn - 1, bj + ring);
                for (std::size_t ii = ilo; ii <= ihi; ++ii)
                    for (std::size_t jj = jlo; jj <= jhi; ++jj) {
                        if (ring > 0 && ii != ilo && ii != ihi && jj != jlo && jj != jhi)
                            continue;  // interior of the ring was already scanned
                        for (std::size_t k : buckets[ii * bn + jj])
                            best = std::min(best,
                                            std::hypot(s.pts[k].r - q.r, s.pts[k].w - q.w));
                    }
                // Everything not yet scanned sits at bucket distance >= ring+1,
                // hence at least ring * cell_min away.
                if (std::isfinite(best) && best <= static_cast<double>(ring) * cell_min) break;
            }
            worst = std::max(worst, best);
        }
    return worst;
}

namespace {

std::string points_csv(const std::vector<PlanarPoint>& pts) {
    std::string out = "r,w\n";
    for (const PlanarPoint& p : pts) {
        out += fmt17(p.r);
        out += ',';
        out += fmt17(p.w);
        out += '\n';
    }
    return out;
}

}  // namespace

std::string planar_set_csv(const PlanarSet& s) { return points_csv(s.pts); }

std::string planar_set_csv(const ConvexHull2D& h) { return points_csv(h.v); }

}  // namespace dualgap
