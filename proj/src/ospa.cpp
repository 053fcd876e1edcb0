#include "imfphd/ospa.hpp"

#include <algorithm>
#include <cmath>

#include "imfphd/assignment.hpp"
#include "imfphd/errors.hpp"

namespace imfphd {

namespace {

void check_params(const OspaParams& params) {
    if (!(params.cutoff > 0.0)) throw InputError("ospa: cutoff must be > 0");
    if (!(params.order >= 1.0)) throw InputError("ospa: order must be >= 1");
}

void check_dims(const PointSet& set, Eigen::Index& dim) {
    for (const auto& v : set) {
        if (dim < 0)
            dim = v.size();
        else if (v.size() != dim)
            throw InputError("ospa: inconsistent point dimensions");
    }
}

}  // namespace

OspaResult ospa(const PointSet& x, const PointSet& y, const OspaParams& params) {
    check_params(params);
    Eigen::Index dim = -1;
    check_dims(x, dim);
    check_dims(y, dim);

    const auto m = std::min(x.size(), y.size());
    const auto n = std::max(x.size(), y.size());
    OspaResult r;
    if (n == 0) return r;

    const double c = params.cutoff;
    const double p = params.order;
    const double cp = std::pow(c, p);

    double locSum = 0.0;
    if (m > 0) {
        // Rows: the smaller set padded with dummy rows of cost c^p each.
        const PointSet& a = (x.size() <= y.size()) ? x : y;
        const PointSet& b = (x.size() <= y.size()) ? y : x;
        Matrix cost(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i < m) {
                    const double d = (a[i] - b[j]).norm();
                    cost(i, j) = std::pow(std::min(c, d), p);
                } else {
                    cost(i, j) = cp;
                }
            }
        }
        const auto rowToCol = solve_assignment(cost);
        for (std::size_t i = 0; i < m; ++i) locSum += cost(i, rowToCol[i]);
    }

    const double cardSum = cp * static_cast<double>(n - m);
    const double inv = 1.0 / static_cast<double>(n);
    r.distance = std::pow((locSum + cardSum) * inv, 1.0 / p);
    r.localization = std::pow(locSum * inv, 1.0 / p);
    r.cardinality = std::pow(cardSum * inv, 1.0 / p);
    return r;
}

std::vector<OspaResult> ospa_series(const std::vector<PointSet>& truthFrames,
                                    const std::vector<PointSet>& estimateFrames,
                                    const OspaParams& params,
                                    const std::vector<int>& positionIndices) {
    check_params(params);
    if (truthFrames.size() != estimateFrames.size())
        throw InputError("ospa_series: frame counts differ");
    if (positionIndices.empty())
        throw InputError("ospa_series: positionIndices must be non-empty");

    const auto extract = [&](const PointSet& states) {
        PointSet out;
        out.reserve(states.size());
        for (const auto& s : states) {
            Vector pos(positionIndices.size());
            for (std::size_t d = 0; d < positionIndices.size(); ++d) {
                const int idx = positionIndices[d];
                if (idx < 0 || idx >= s.size())
                    throw InputError("ospa_series: position index out of range");
                pos[static_cast<Eigen::Index>(d)] = s[idx];
            }
            out.push_back(std::move(pos));
        }
        return out;
    };

    const auto nFrames = truthFrames.size();
    std::vector<OspaResult> out(nFrames);
    std::exception_ptr err;
#pragma omp parallel for schedule(static) if (nFrames > 8)
    for (std::size_t t = 0; t < nFrames; ++t) {
        try {
            out[t] = ospa(extract(truthFrames[t]), extract(estimateFrames[t]), params);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

}  // namespace imfphd
