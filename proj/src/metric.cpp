#include "microdim/metric.hpp"

#include "microdim/error.hpp"
#include "microdim/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace microdim {

MinkowskiOrder::MinkowskiOrder(double p) : p_(p) {
    if (!std::isfinite(p) || p < 1.0) {
        throw ValidationError("Minkowski order must be finite and >= 1, got " + io::format_real(p));
    }
}

double minkowski_distance(std::span<const double> a, std::span<const double> b, MinkowskiOrder order) {
    if (a.size() != b.size()) {
        throw ValidationError("minkowski_distance: length mismatch " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    }
    const double p = order.value();
    if (p == 1.0) {
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
        return sum;
    }
    double largest = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) largest = std::max(largest, std::abs(a[i] - b[i]));
    if (largest == 0.0) return 0.0;
    double sum = 0.0;
    if (p == 2.0) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double r = (a[i] - b[i]) / largest;
            sum += r * r;
        }
        return largest * std::sqrt(sum);
    }
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::pow(std::abs(a[i] - b[i]) / largest, p);
    return largest * std::pow(sum, 1.0 / p);
}

namespace {

void check_kmax(std::size_t count, std::size_t kmax) {
    if (kmax < 1 || kmax >= count) {
        throw ValidationError("kmax must satisfy 1 <= kmax < count (kmax=" + std::to_string(kmax) +
                              ", count=" + std::to_string(count) + ")");
    }
}

/// Selects the kmax smallest keys per row of a symmetric key matrix.
/// `finalize` maps a key (monotone in distance) to the distance.
template <class Finalize>
NeighborTable select_neighbors(const std::vector<double>& keys, std::size_t n, std::size_t kmax, double p,
                               Finalize finalize) {
    NeighborTable table;
    table.count = n;
    table.kmax = kmax;
    table.p = p;
    table.distances.resize(n * kmax);
    table.indices.resize(n * kmax);

#pragma omp parallel
    {
        std::vector<std::pair<double, std::uint32_t>> row;
        row.reserve(n);
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < n; ++i) {
            row.clear();
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) row.emplace_back(keys[i * n + j], static_cast<std::uint32_t>(j));
            }
            std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(kmax), row.end());
            for (std::size_t k = 0; k < kmax; ++k) {
                table.distances[i * kmax + k] = finalize(row[k].first);
                table.indices[i * kmax + k] = row[k].second;
            }
        }
    }
    return table;
}

struct Span {
    int lo;
    int hi; ///< inclusive; lo > hi means empty
};

struct SparseImage {
    const Pixel* pixels;
    int first_row;
    int last_row;
    std::vector<Span> spans; ///< one per row
    double power_sum;
};

} // namespace

NeighborTable knn_table(const RealMatrix& points, MinkowskiOrder p, std::size_t kmax) {
    const std::size_t n = points.rows;
    check_kmax(n, kmax);
    std::vector<double> keys(n * n, 0.0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = minkowski_distance(points.row(i), points.row(j), p);
            keys[i * n + j] = d;
            keys[j * n + i] = d;
        }
    }
    return select_neighbors(keys, n, kmax, p.value(), [](double d) { return d; });
}

NeighborTable knn_table(const PointCloud& cloud, MinkowskiOrder p, std::size_t kmax) {
    return knn_table(cloud.points, p, kmax);
}

NeighborTable knn_table(const ImageDataset& ds, MinkowskiOrder order, std::size_t kmax) {
    const std::size_t n = ds.count();
    check_kmax(n, kmax);
    const double p = order.value();
    const int w = ds.width, h = ds.height;

    const Pixel largest = ds.pixels.empty() ? Pixel{0} : *std::max_element(ds.pixels.begin(), ds.pixels.end());
    const double scale = std::max<double>(largest, 1.0);
    const bool binary = largest <= 1;
    // |a - b|^p / scale^p for every integer difference that can occur
    std::vector<double> power(static_cast<std::size_t>(largest) + 1);
    for (std::size_t d = 0; d < power.size(); ++d) power[d] = std::pow(static_cast<double>(d) / scale, p);

    std::vector<SparseImage> images(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& img = images[i];
        img.pixels = ds.pixels.data() + i * ds.pixel_count();
        img.spans.resize(static_cast<std::size_t>(h));
        img.first_row = h;
        img.last_row = -1;
        img.power_sum = 0.0;
        for (int y = 0; y < h; ++y) {
            const Pixel* row = img.pixels + static_cast<std::size_t>(y) * w;
            Span s{w, -1};
            for (int x = 0; x < w; ++x) {
                if (row[x] != 0) {
                    s.lo = std::min(s.lo, x);
                    s.hi = x;
                    img.power_sum += power[row[x]];
                }
            }
            img.spans[static_cast<std::size_t>(y)] = s;
            if (s.lo <= s.hi) {
                img.first_row = std::min(img.first_row, y);
                img.last_row = y;
            }
        }
    }

    std::vector<double> keys(n * n, 0.0);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = images[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& b = images[j];
            // outside the common support |a - b|^p = a^p + b^p
            double key = a.power_sum + b.power_sum;
            const int y0 = std::max(a.first_row, b.first_row);
            const int y1 = std::min(a.last_row, b.last_row);
            if (binary) {
                long long both = 0;
                for (int y = y0; y <= y1; ++y) {
                    const int lo = std::max(a.spans[static_cast<std::size_t>(y)].lo, b.spans[static_cast<std::size_t>(y)].lo);
                    const int hi = std::min(a.spans[static_cast<std::size_t>(y)].hi, b.spans[static_cast<std::size_t>(y)].hi);
                    const Pixel* ra = a.pixels + static_cast<std::size_t>(y) * w;
                    const Pixel* rb = b.pixels + static_cast<std::size_t>(y) * w;
                    int acc = 0;
                    for (int x = lo; x <= hi; ++x) acc += ra[x] & rb[x];
                    both += acc;
                }
                // for 0/1 pixels |a-b|^p - a^p - b^p = -2ab
                key -= 2.0 * static_cast<double>(both);
            } else {
                double corr = 0.0;
                for (int y = y0; y <= y1; ++y) {
                    const int lo = std::max(a.spans[static_cast<std::size_t>(y)].lo, b.spans[static_cast<std::size_t>(y)].lo);
                    const int hi = std::min(a.spans[static_cast<std::size_t>(y)].hi, b.spans[static_cast<std::size_t>(y)].hi);
                    const Pixel* ra = a.pixels + static_cast<std::size_t>(y) * w;
                    const Pixel* rb = b.pixels + static_cast<std::size_t>(y) * w;
                    for (int x = lo; x <= hi; ++x) {
                        const Pixel va = ra[x], vb = rb[x];
                        if ((va | vb) == 0) continue;
                        const Pixel diff = va > vb ? static_cast<Pixel>(va - vb) : static_cast<Pixel>(vb - va);
                        corr += power[diff] - power[va] - power[vb];
                    }
                }
                key += corr;
            }
            key = std::max(key, 0.0);
            keys[i * n + j] = key;
            keys[j * n + i] = key;
        }
    }

    const double inv_p = 1.0 / p;
    return select_neighbors(keys, n, kmax, p, [scale, p, inv_p](double key) {
        if (p == 1.0) return scale * key;
        if (p == 2.0) return scale * std::sqrt(key);
        return scale * std::pow(key, inv_p);
    });
}

double mean_kth_distance(const NeighborTable& table, std::size_t k) {
    if (k < 1 || k > table.kmax) {
        throw ValidationError("k=" + std::to_string(k) + " outside [1, " + std::to_string(table.kmax) + "]");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < table.count; ++i) sum += table.distance(i, k);
    return sum / static_cast<double>(table.count);
}

namespace {

template <class Data>
RatioCurve ratio_curve_impl(const Data& data, std::size_t j, std::size_t k, const std::vector<double>& p_list) {
    if (j < 1 || j > k) throw ValidationError("ratio_curve needs 1 <= j <= k");
    const auto unique = deduplicate(data).data;
    RatioCurve curve;
    for (double p : p_list) {
        const auto table = knn_table(unique, MinkowskiOrder(p), k);
        curve.push_back({p, mean_kth_distance(table, j) / mean_kth_distance(table, k)});
    }
    return curve;
}

} // namespace

RatioCurve ratio_curve(const PointCloud& cloud, std::size_t j, std::size_t k, const std::vector<double>& p_list) {
    return ratio_curve_impl(cloud, j, k, p_list);
}

RatioCurve ratio_curve(const ImageDataset& ds, std::size_t j, std::size_t k, const std::vector<double>& p_list) {
    return ratio_curve_impl(ds, j, k, p_list);
}

void write_neighbor_csv(const NeighborTable& table, const std::filesystem::path& path) {
    io::CsvWriter csv({"point", "k", "distance", "neighbor_index"});
    for (std::size_t i = 0; i < table.count; ++i) {
        for (std::size_t k = 1; k <= table.kmax; ++k) {
            csv.cell(i).cell(k).cell(table.distance(i, k)).cell(static_cast<std::size_t>(table.neighbor(i, k))).end_row();
        }
    }
    csv.save(path);
}

} // namespace microdim
