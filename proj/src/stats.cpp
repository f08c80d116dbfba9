#include "microdim/stats.hpp"

#include "microdim/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace microdim::stats {

double mean(std::span<const double> v) {
    if (v.empty()) throw ValidationError("mean of an empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ValidationError("correlation needs two equal samples of size >= 2");
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
        i = j + 1;
    }
    return r;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    return pearson(ra, rb);
}

std::vector<double> affine_fit(const RealMatrix& x, std::span<const double> y) {
    if (x.rows != y.size()) throw ValidationError("affine fit: row count mismatch");
    Eigen::MatrixXd design(static_cast<Eigen::Index>(x.rows), static_cast<Eigen::Index>(x.cols + 1));
    Eigen::VectorXd target(static_cast<Eigen::Index>(x.rows));
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j);
        design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(x.cols)) = 1.0;
        target(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::VectorXd fitted = design * design.colPivHouseholderQr().solve(target);
    return {fitted.data(), fitted.data() + fitted.size()};
}

std::vector<double> column(const RealMatrix& m, std::size_t c) {
    std::vector<double> out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) out[i] = m(i, c);
    return out;
}

} // namespace microdim::stats
