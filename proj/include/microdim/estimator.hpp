#pragma once

#include "microdim/datamodel.hpp"
#include "microdim/metric.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace microdim {

struct EstimatorConfig {
    double p = 1.0;
    std::size_t k_min = 8; ///< averaging / regression range [k_min, k_max]
    std::size_t k_max = 20;
    double bin_width = 0.1; ///< histogram bin width for per-point estimates

    /// Throws unless 3 <= k_min < k_max < count.
    void validate(std::size_t count) const;
};

/**
 * Per-point, per-k MLE dimension estimates.
 *
 * Entry (i, k) is (k - 2) / sum_{j<k} log(T_k / T_j). Entries with a zero or
 * non-finite denominator are stored as NaN and counted in `invalid_count`.
 */
struct DimensionEstimateMatrix {
    std::size_t points = 0;
    std::size_t k_min = 0;
    std::size_t k_max = 0;
    double p = 1.0;
    std::vector<double> values; ///< points x (k_max - k_min + 1), row-major by point
    std::size_t invalid_count = 0;

    std::size_t k_count() const { return k_max - k_min + 1; }
    double at(std::size_t point, std::size_t k) const { return values[point * k_count() + (k - k_min)]; }
};

struct Histogram {
    std::vector<double> edges; ///< bins + 1 edges
    std::vector<std::size_t> counts;
};

struct DimensionSummary {
    double p = 1.0;
    std::size_t k_min = 0;
    std::size_t k_max = 0;
    double mean = 0.0; ///< grand mean over valid matrix entries
    double std = 0.0; ///< std over valid matrix entries
    double point_std = 0.0; ///< std of per-point mean estimates
    std::size_t invalid_count = 0;
    std::size_t points = 0;
    std::vector<double> point_means; ///< NaN where a point has no valid entry
    Histogram histogram; ///< of per-point means
};

/// Volume of the unit p-ball in R^mu: 2^mu Gamma(1/p + 1)^mu / Gamma(mu/p + 1).
double unit_ball_volume(double mu, MinkowskiOrder p);
double log_unit_ball_volume(double mu, MinkowskiOrder p);

DimensionEstimateMatrix mle_point_estimates(const NeighborTable& table, const EstimatorConfig& cfg);

DimensionSummary summarize(const DimensionEstimateMatrix& matrix, double bin_width = 0.1);

/// Least-squares slope of log k against log mean(T_k) over [k_min, k_max].
double nn_regression_estimate(const NeighborTable& table, const EstimatorConfig& cfg);

/// Two-point form: log(k_b / k_a) / log(T_b / T_a).
double two_point_estimate(double k_a, double mean_t_a, double k_b, double mean_t_b);

/// Locally homogeneous Poisson process: expected count within radius r is c * r^mu.
struct PoissonModel {
    double mu;
    double c; ///< density times unit-ball volume, f(m) V(mu, p)

    PoissonModel(double mu, double c);

    /// Model for point density `density` under the p-norm.
    static PoissonModel from_density(double mu, double density, MinkowskiOrder p);

    /// theta = log f(m) = log(c / V(mu, p)).
    double theta(MinkowskiOrder p) const;
    /// lambda(r) = d/dr (c r^mu).
    double rate(double r) const;
    /// Density of the distance to the k-th neighbor.
    double kth_distance_density(std::size_t k, double r) const;
};

/// E_k = c^{-1/mu} Gamma(k + 1/mu) / Gamma(k).
double expected_kth_distance(const PoissonModel& model, std::size_t k);

struct MonteCarloResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;
    bool enlarged = false; ///< region had to grow for at least one trial
};

/**
 * Simulates a homogeneous Poisson process of `density` in a mu-cube around a
 * test point at the origin and averages the p-distance to the k-th nearest point.
 */
MonteCarloResult simulate_poisson_knn(int mu, double density, MinkowskiOrder p, std::size_t k, std::size_t trials,
                                      std::uint64_t seed);

struct SweepEntry {
    double p;
    DimensionSummary summary;
};

/// MLE summaries for each p after a single shared deduplication.
std::vector<SweepEntry> sweep_minkowski(const ImageDataset& ds, const std::vector<double>& p_list,
                                        const EstimatorConfig& cfg);
std::vector<SweepEntry> sweep_minkowski(const PointCloud& cloud, const std::vector<double>& p_list,
                                        const EstimatorConfig& cfg);

/// Dedup, k-NN, MLE and summary in one call.
DimensionSummary estimate_dimension(const ImageDataset& ds, const EstimatorConfig& cfg);
DimensionSummary estimate_dimension(const PointCloud& cloud, const EstimatorConfig& cfg);

/// CSV `point,k,mu` (invalid entries omitted).
void write_estimate_csv(const DimensionEstimateMatrix& matrix, const std::filesystem::path& path);
/// CSV `bin_lo,bin_hi,count`.
void write_histogram_csv(const Histogram& hist, const std::filesystem::path& path);
/// Text record {p, k_min, k_max, mean, std, invalid_count}.
std::string format_summary(const DimensionSummary& s);
/// CSV `p,mean_mu,std_mu`.
void write_sweep_csv(const std::vector<SweepEntry>& sweep, const std::filesystem::path& path);

} // namespace microdim
