// Timings for the parallel kernels against their serial reference
// implementations, plus the campaign at 1 worker versus all cores.
#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "imfphd/campaign.hpp"
#include "imfphd/gmphd.hpp"
#include "imfphd/reference.hpp"
#include "imfphd/rng.hpp"
#include "imfphd/scenario.hpp"

using namespace imfphd;

namespace {

double now() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <typename F>
double best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const double t0 = now();
        fn();
        best = std::min(best, now() - t0);
    }
    return best;
}

GaussianMixture random_mixture(int J, Rng& rng) {
    GaussianMixture v(4);
    for (int i = 0; i < J; ++i) {
        Vector m(4);
        m << rng.uniform(0, 200), rng.normal(), rng.uniform(0, 200), rng.normal();
        Matrix P = Matrix::Identity(4, 4);
        P(0, 0) = P(2, 2) = 5.0 + rng.uniform();
        P(1, 1) = P(3, 3) = 1.0 + rng.uniform();
        v.add(GaussianComponent(rng.uniform(0.1, 1.0), std::move(m), std::move(P)));
    }
    return v;
}

std::vector<Vector> random_measurements(int n, Rng& rng) {
    std::vector<Vector> zs;
    for (int i = 0; i < n; ++i) {
        Vector z(2);
        z << rng.uniform(0, 200), rng.uniform(0, 200);
        zs.push_back(std::move(z));
    }
    return zs;
}

void bench_phd_update() {
    Matrix H(2, 4);
    H << 1, 0, 0, 0,
         0, 0, 1, 0;
    const MeasurementModel meas(H);
    const Matrix R = 4.0 * Matrix::Identity(2, 2);
    const Vector mean0 = Vector::Zero(2);
    const ClutterModel clutter(10.0, {Vector::Zero(2), Vector::Constant(2, 200.0)});
    FilterParams params;

    std::printf("phd_update (J components x Z measurements)\n");
    std::printf("%-12s %12s %12s %9s\n", "size", "serial [ms]", "parallel", "speedup");
    for (const auto& [J, nZ] : {std::pair{50, 10}, {100, 20}, {200, 40}, {400, 60}}) {
        Rng rng(7);
        const GaussianMixture pred = random_mixture(J, rng);
        const auto zs = random_measurements(nZ, rng);
        const double ts = best_of(5, [&] {
            ref::phd_update(pred, meas, R, mean0, zs, clutter, params);
        });
        const double tp = best_of(5, [&] {
            phd_update(pred, meas, R, mean0, zs, clutter, params);
        });
        char label[32];
        std::snprintf(label, sizeof label, "%dx%d", J, nZ);
        std::printf("%-12s %12.3f %12.3f %8.2fx\n", label, ts * 1e3, tp * 1e3, ts / tp);
    }
}

void bench_ospa_series() {
    Rng rng(11);
    const int frames = 400, perSet = 10;
    std::vector<PointSet> truth(frames), est(frames);
    for (int t = 0; t < frames; ++t) {
        for (int i = 0; i < perSet; ++i) {
            Vector a(4), b(4);
            a << rng.uniform(0, 200), 0, rng.uniform(0, 200), 0;
            b << rng.uniform(0, 200), 0, rng.uniform(0, 200), 0;
            truth[t].push_back(std::move(a));
            est[t].push_back(std::move(b));
        }
    }
    const double ts = best_of(5, [&] { ref::ospa_series(truth, est); });
    const double tp = best_of(5, [&] { ospa_series(truth, est); });
    std::printf("\nospa_series (%d frames x %d points)\n", frames, perSet);
    std::printf("%-12s %12.3f %12.3f %8.2fx\n", "", ts * 1e3, tp * 1e3, ts / tp);
}

void bench_campaign() {
    ExperimentConfig config = builtin_experiment_config();
    config.runs = 8;
    config.workers = 1;
    const double t1 = best_of(1, [&] { run_campaign(config); });
#ifdef _OPENMP
    config.workers = 0;
    const double tn = best_of(1, [&] { run_campaign(config); });
    std::printf("\ncampaign, %d runs: 1 worker %.2f s, %d workers %.2f s, %.2fx\n", config.runs,
                t1, omp_get_max_threads(), tn, t1 / tn);
#else
    std::printf("\ncampaign, %d runs: 1 worker %.2f s (built without OpenMP)\n", config.runs, t1);
#endif
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP, everything runs serial\n\n");
#endif
    bench_phd_update();
    bench_ospa_series();
    bench_campaign();
    return 0;
}
