#pragma once

#include "microdim/datamodel.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace microdim {

/// Minkowski order p >= 1; the triangle inequality holds only there.
class MinkowskiOrder {
public:
    explicit MinkowskiOrder(double p);

    double value() const { return p_; }

private:
    double p_;
};

/// d_p(a, b) = (sum |a_i - b_i|^p)^(1/p), factored by max |a_i - b_i| so large p cannot overflow.
double minkowski_distance(std::span<const double> a, std::span<const double> b, MinkowskiOrder p);

/**
 * Sorted k-nearest-neighbor distances T_1 <= ... <= T_kmax for every point.
 *
 * Row i never contains i itself. Ties are broken by the lower neighbor index.
 */
struct NeighborTable {
    std::size_t count = 0;
    std::size_t kmax = 0;
    double p = 2.0;
    std::vector<double> distances; ///< count x kmax
    std::vector<std::uint32_t> indices; ///< count x kmax

    /// k is 1-based.
    double distance(std::size_t point, std::size_t k) const { return distances[point * kmax + (k - 1)]; }
    std::uint32_t neighbor(std::size_t point, std::size_t k) const { return indices[point * kmax + (k - 1)]; }
    std::span<const double> row(std::size_t point) const { return {distances.data() + point * kmax, kmax}; }
};

/// Exact k-NN by full pairwise computation over the rows of `points`.
NeighborTable knn_table(const RealMatrix& points, MinkowskiOrder p, std::size_t kmax);
NeighborTable knn_table(const PointCloud& cloud, MinkowskiOrder p, std::size_t kmax);

/**
 * Exact k-NN over the images of a dataset, with raw integer intensities as coordinates.
 *
 * Images are mostly background, so each pair only visits the rows and column
 * spans where both images are nonzero; elsewhere |a - b|^p = a^p + b^p and the
 * per-image power sums cover it. Powers of integer differences come from a
 * lookup table scaled by the largest intensity.
 */
NeighborTable knn_table(const ImageDataset& ds, MinkowskiOrder p, std::size_t kmax);

/// Mean of T_k over all points; k is 1-based.
double mean_kth_distance(const NeighborTable& table, std::size_t k);

struct RatioPoint {
    double p;
    double ratio; ///< mean T_j / mean T_k
};

using RatioCurve = std::vector<RatioPoint>;

RatioCurve ratio_curve(const PointCloud& cloud, std::size_t j, std::size_t k, const std::vector<double>& p_list);
RatioCurve ratio_curve(const ImageDataset& ds, std::size_t j, std::size_t k, const std::vector<double>& p_list);

/// CSV `point,k,distance,neighbor_index`.
void write_neighbor_csv(const NeighborTable& table, const std::filesystem::path& path);

} // namespace microdim
