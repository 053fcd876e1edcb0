#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "imfphd/errors.hpp"
#include "imfphd/ospa.hpp"
#include "imfphd/reference.hpp"
#include "imfphd/rng.hpp"

using namespace imfphd;

namespace {

PointSet scalars(std::initializer_list<double> xs) {
    PointSet out;
    for (double x : xs) out.push_back(Vector::Constant(1, x));
    return out;
}

PointSet random_set(int n, int dim, Rng& rng, double span = 100.0) {
    PointSet out;
    for (int i = 0; i < n; ++i) {
        Vector v(dim);
        for (int d = 0; d < dim; ++d) v[d] = rng.uniform(0.0, span);
        out.push_back(std::move(v));
    }
    return out;
}

// Independent oracle: minimum over every permutation.  The final combination
// mirrors the library's association exactly so optimal values compare equal.
double ospa_brute(const PointSet& x, const PointSet& y, const OspaParams& params) {
    const auto m = std::min(x.size(), y.size());
    const auto n = std::max(x.size(), y.size());
    if (n == 0) return 0.0;
    const PointSet& a = (x.size() <= y.size()) ? x : y;
    const PointSet& b = (x.size() <= y.size()) ? y : x;
    const double cp = std::pow(params.cutoff, params.order);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double bestLoc = std::numeric_limits<double>::infinity();
    do {
        double loc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double d = (a[i] - b[perm[i]]).norm();
            loc += std::pow(std::min(params.cutoff, d), params.order);
        }
        bestLoc = std::min(bestLoc, loc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double cardSum = cp * static_cast<double>(n - m);
    return std::pow((bestLoc + cardSum) * (1.0 / static_cast<double>(n)), 1.0 / params.order);
}

}  // namespace

TEST_CASE("distance is zero between identical sets") {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const PointSet x = random_set(1 + static_cast<int>(rng.uniform_index(5)), 2, rng);
        CHECK(ospa(x, x, {}).distance == 0.0);
    }
    CHECK(ospa({}, {}, {}).distance == 0.0);
}

TEST_CASE("hand-computed scalar cases") {
    const OspaParams params{10.0, 1.0};
    CHECK(ospa({}, scalars({5.0}), params).distance == doctest::Approx(10.0));
    CHECK(ospa(scalars({0.0}), scalars({3.0}), params).distance == doctest::Approx(3.0));
    const auto r = ospa(scalars({0.0}), scalars({0.0, 100.0}), params);
    CHECK(r.distance == doctest::Approx(5.0));
    CHECK(r.localization == doctest::Approx(0.0));
    CHECK(r.cardinality == doctest::Approx(5.0));
    // order 2: sqrt((0 + 100) / 2)
    CHECK(ospa(scalars({0.0}), scalars({0.0, 100.0}), {10.0, 2.0}).distance ==
          doctest::Approx(std::sqrt(50.0)));
}

TEST_CASE("solver optimum equals brute-force enumeration") {
    Rng rng(7);
    const OspaParams params{50.0, 1.0};
    for (int trial = 0; trial < 200; ++trial) {
        const int nx = static_cast<int>(rng.uniform_index(7));
        const int ny = static_cast<int>(rng.uniform_index(7));
        const PointSet x = random_set(nx, 2, rng);
        const PointSet y = random_set(ny, 2, rng);
        if (nx == 0 && ny == 0) continue;
        CHECK(ospa(x, y, params).distance == ospa_brute(x, y, params));
    }
}

TEST_CASE("metric axioms on random sets") {
    Rng rng(13);
    const OspaParams params{20.0, 2.0};
    for (int trial = 0; trial < 100; ++trial) {
        const PointSet x = random_set(static_cast<int>(rng.uniform_index(6)), 2, rng, 40.0);
        const PointSet y = random_set(static_cast<int>(rng.uniform_index(6)), 2, rng, 40.0);
        const PointSet z = random_set(static_cast<int>(rng.uniform_index(6)), 2, rng, 40.0);
        const double dxy = ospa(x, y, params).distance;
        CHECK(std::abs(dxy - ospa(y, x, params).distance) < 1e-12);
        CHECK(dxy <= params.cutoff + 1e-12);
        CHECK(dxy <= ospa(x, z, params).distance + ospa(z, y, params).distance + 1e-9);
    }
}

TEST_CASE("distance decomposes into localization and cardinality") {
    Rng rng(29);
    for (const double order : {1.0, 2.0}) {
        const OspaParams params{30.0, order};
        for (int trial = 0; trial < 50; ++trial) {
            const PointSet x = random_set(1 + static_cast<int>(rng.uniform_index(6)), 2, rng);
            const PointSet y = random_set(1 + static_cast<int>(rng.uniform_index(6)), 2, rng);
            const auto r = ospa(x, y, params);
            const double lhs = std::pow(r.distance, order);
            const double rhs = std::pow(r.localization, order) + std::pow(r.cardinality, order);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("series of identical frames is all zero") {
    Rng rng(31);
    std::vector<PointSet> frames;
    for (int t = 0; t < 20; ++t) frames.push_back(random_set(3, 4, rng));
    for (const auto& r : ospa_series(frames, frames)) CHECK(r.distance == 0.0);
}

TEST_CASE("constant x offset gives constant distance") {
    Rng rng(37);
    std::vector<PointSet> truth, est;
    for (int t = 0; t < 25; ++t) {
        PointSet frame = random_set(3, 4, rng);
        PointSet shifted = frame;
        for (auto& s : shifted) s[0] += 1.0;
        truth.push_back(std::move(frame));
        est.push_back(std::move(shifted));
    }
    for (const auto& r : ospa_series(truth, est, {10.0, 1.0})) {
        CHECK(r.distance == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.cardinality == 0.0);
    }
}

TEST_CASE("series equals per-frame recomputation") {
    Rng rng(41);
    std::vector<PointSet> truth, est;
    for (int t = 0; t < 30; ++t) {
        truth.push_back(random_set(static_cast<int>(rng.uniform_index(5)), 4, rng));
        est.push_back(random_set(static_cast<int>(rng.uniform_index(5)), 4, rng));
    }
    const auto series = ospa_series(truth, est);
    const auto serial = ref::ospa_series(truth, est);
    REQUIRE(series.size() == serial.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        CHECK(series[t].distance == serial[t].distance);
        CHECK(series[t].localization == serial[t].localization);
        CHECK(series[t].cardinality == serial[t].cardinality);
    }
}

TEST_CASE("input validation") {
    Rng rng(1);
    CHECK_THROWS_AS(ospa(scalars({0.0}), random_set(1, 2, rng), {}), InputError);
    CHECK_THROWS_AS(ospa(scalars({0.0}), scalars({1.0}), {-1.0, 1.0}), InputError);
    CHECK_THROWS_AS(ospa(scalars({0.0}), scalars({1.0}), {1.0, 0.5}), InputError);
    std::vector<PointSet> a(3), b(4);
    CHECK_THROWS_AS(ospa_series(a, b), InputError);
}
