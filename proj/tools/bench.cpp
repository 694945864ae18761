#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "dualgap/epigraph.hpp"
#include "dualgap/landscape.hpp"
#include "dualgap/matrix.hpp"
#include "dualgap/parallel.hpp"
#include "dualgap/rng.hpp"

using namespace dualgap;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
    return m;
}

PlanarSet random_cloud(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    PlanarSet s;
    s.pts.resize(count);
    for (PlanarPoint& p : s.pts) {
        p.r = rng.gaussian();
        p.w = rng.gaussian();
    }
    return s;
}

template <typename F>
double best_ms(F&& f, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool match) {
    std::cout << name << ": serial " << serial_ms << " ms, parallel " << parallel_ms
              << " ms, speedup " << serial_ms / parallel_ms << "x, "
              << (match ? "outputs match bitwise" : "OUTPUT MISMATCH") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    int reps = argc > 1 ? std::atoi(argv[1]) : 3;
    if (reps < 1) reps = 1;
    std::cout << "worker threads: " << worker_threads() << " (set DUALGAP_THREADS to cap)\n";
    bool all_match = true;

    {
        Matrix a = random_matrix(320, 300, 1);
        Matrix b = random_matrix(300, 280, 2);
        Matrix rs, rp;
        double ts = best_ms([&] { rs = matmul_serial(a, b); }, reps);
        double tp = best_ms([&] { rp = matmul(a, b); }, reps);
        bool match = (rs - rp).max_abs() == 0.0;
        all_match = all_match && match;
        report("matmul 320x300 * 300x280", ts, tp, match);
    }

    {
        PlanarSet a = random_cloud(1200, 10);
        PlanarSet b = random_cloud(1300, 11);
        PlanarSet rs, rp;
        double ts = best_ms([&] { rs = minkowski_sum_serial(a, b); }, reps);
        double tp = best_ms([&] { rp = minkowski_sum(a, b); }, reps);
        bool match = rs.pts.size() == rp.pts.size();
        for (std::size_t k = 0; match && k < rs.pts.size(); ++k)
            match = rs.pts[k].r == rp.pts[k].r && rs.pts[k].w == rp.pts[k].w;
        all_match = all_match && match;
        report("minkowski sum 1200 x 1300 points", ts, tp, match);
    }

    {
        TeacherInstance inst = teacher_synthetic_data(150, 8, 5, 21);
        MultiBranchNet proto = make_net(8, 1, 6, {1}, Combine::sum);
        std::vector<std::vector<double>> thetas;
        for (std::uint64_t s : {31u, 32u, 33u}) {
            MultiBranchNet net = proto;
            init_gaussian(net, s);
            thetas.push_back(flatten(net));
        }
        PlaneGrid gs, gp;
        double ts = best_ms(
            [&] {
                gs = plane_projection_grid_serial(proto, inst.data, LossKind::tau_hinge, 1.0,
                                                  thetas[0], thetas[1], thetas[2], 41);
            },
            reps);
        double tp = best_ms(
            [&] {
                gp = plane_projection_grid(proto, inst.data, LossKind::tau_hinge, 1.0, thetas[0],
                                           thetas[1], thetas[2], 41);
            },
            reps);
        bool match = gs.loss == gp.loss && gs.alpha == gp.alpha && gs.beta == gp.beta;
        all_match = all_match && match;
        report("loss plane projection 41x41 grid", ts, tp, match);
    }

    return all_match ? 0 : 1;
}
