#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace dualgap {

// Planar (r, w) geometry for augmented epigraph sets: r is the averaged
// regularizer coordinate, w the averaged risk coordinate.

struct PlanarPoint {
    double r = 0.0;
    double w = 0.0;
};

struct PlanarSet {
    std::vector<PlanarPoint> pts;
    int branch = -1;  // optional originating branch, -1 when unattributed
};

// Convex hull with vertices in counter-clockwise order starting from the
// lexicographically smallest point. Collinear and duplicate points are
// dropped; `source` maps each vertex to the index of an input point (the
// lowest index when several coincide).
struct ConvexHull2D {
    std::vector<PlanarPoint> v;
    std::vector<std::size_t> source;
};

ConvexHull2D convex_hull(const PlanarSet& s);

// Signed violation of hull membership: <= 0 inside (up to float), otherwise
// the largest distance by which an edge separates q from the hull.
double hull_violation(const ConvexHull2D& h, PlanarPoint q);

// Exhaustive pairwise Minkowski sum. Errors when |a| * |b| exceeds the
// enumeration cap of 2e6 points.
PlanarSet minkowski_sum(const PlanarSet& a, const PlanarSet& b);
PlanarSet minkowski_sum_serial(const PlanarSet& a, const PlanarSet& b);

// Y_1 + ... + Y_I enumerated exactly; the cap applies to the full product
// of the set sizes.
PlanarSet minkowski_sum(const std::vector<PlanarSet>& sets);

// (1/I) (Y_1 + ... + Y_I) enumerated exactly, same cap.
PlanarSet minkowski_average(const std::vector<PlanarSet>& sets);

// Hull of the Minkowski sum computed polygon-wise (hull of sums of hull
// vertices), with provenance: for every output vertex, one input point index
// per summand set.
struct SumHull {
    ConvexHull2D hull;
    std::vector<std::vector<std::size_t>> provenance;  // [vertex][set] -> point index
};
SumHull minkowski_sum_hull(const std::vector<PlanarSet>& sets);

// min w over points of the set (or of the hull region) with r <= budget.
// Errors when no point satisfies the budget.
double epigraph_inf(const PlanarSet& s, double budget);
double epigraph_inf(const ConvexHull2D& h, double budget);

// Shapley-Folkman decomposition of a point of conv(sum of sets): all but at
// most two indices contribute a single set point; the remainder contribute a
// convex combination of at most three set points.
struct SFTerm {
    std::size_t set_index = 0;
    std::vector<std::size_t> support;  // indices into the input set, <= 3
    std::vector<double> weights;       // same length, positive, sums to 1
};

struct SFDecomposition {
    // For sets not in `convexified`: the chosen pure point index.
    std::vector<std::size_t> pure_choice;
    std::vector<SFTerm> convexified;  // at most 2 entries
    PlanarPoint reconstruction;
    double residual = 0.0;  // |target - reconstruction|, L2
};

SFDecomposition sf_decompose(PlanarPoint target, const std::vector<PlanarSet>& sets);

// Lower convex envelope of samples of a 1-d function. Queries outside the
// sampled interval are domain errors.
class ConvexEnvelope1D {
public:
    ConvexEnvelope1D(std::vector<double> xs, std::vector<double> fs);
    double operator()(double x) const;
    double x_min() const { return hx_.front(); }
    double x_max() const { return hx_.back(); }

private:
    std::vector<double> hx_, hf_;  // lower-hull vertices, increasing x
};

// Lower convex envelope of samples of a 2-d function, evaluated as the max
// of the supporting planes of the lower hull facets. Queries outside the
// convex hull of the sample sites are domain errors.
class ConvexEnvelope2D {
public:
    ConvexEnvelope2D(std::vector<std::array<double, 2>> xs, std::vector<double> fs);
    double operator()(double x0, double x1) const;

private:
    struct Plane {
        double a = 0.0, b0 = 0.0, b1 = 0.0;  // f = a + b0 x0 + b1 x1
    };
    std::vector<Plane> planes_;
    ConvexHull2D domain_;
    bool collapsed_ = false;           // sample sites are collinear
    std::vector<double> line_origin_;  // 2 entries when collapsed
    std::vector<double> line_dir_;     // unit direction when collapsed
    std::vector<double> ts_, tf_;      // 1-d envelope data when collapsed
    double scale_ = 1.0;
};

// Max distance from any point of the hull region to the nearest set point;
// measures how far the set is from filling its hull (0 for convex position
// sampled densely). Estimated on a grid_n x grid_n probe of the hull.
double hull_fill_distance(const PlanarSet& s, std::size_t grid_n = 128);

// CSV with header "r,w" and one full-precision row per point or vertex.
std::string planar_set_csv(const PlanarSet& s);
std::string planar_set_csv(const ConvexHull2D& h);

}  // namespace dualgap
