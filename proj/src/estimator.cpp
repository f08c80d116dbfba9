#include "microdim/estimator.hpp"

#include "microdim/error.hpp"
#include "microdim/io.hpp"
#include "microdim/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace microdim {

void EstimatorConfig::validate(std::size_t count) const {
    if (k_min < 3 || k_min >= k_max || k_max >= count) {
        throw ValidationError("estimator needs 3 <= k_min < k_max < count (k_min=" + std::to_string(k_min) +
                              ", k_max=" + std::to_string(k_max) + ", count=" + std::to_string(count) + ")");
    }
    if (!(bin_width > 0.0)) throw ValidationError("histogram bin width must be > 0");
    MinkowskiOrder{p};
}

double log_unit_ball_volume(double mu, MinkowskiOrder p) {
    if (!(mu > 0.0) || !std::isfinite(mu)) {
        throw ValidationError("unit ball volume needs mu > 0, got " + io::format_real(mu));
    }
    const double inv_p = 1.0 / p.value();
    return mu * std::log(2.0) + mu * std::lgamma(inv_p + 1.0) - std::lgamma(mu * inv_p + 1.0);
}

double unit_ball_volume(double mu, MinkowskiOrder p) {
    return std::exp(log_unit_ball_volume(mu, p));
}

namespace {
constexpr double kTieTolerance = 1e-9;
} // namespace

DimensionEstimateMatrix mle_point_estimates(const NeighborTable& table, const EstimatorConfig& cfg) {
    if (cfg.k_min < 3 || cfg.k_min >= cfg.k_max || cfg.k_max > table.kmax) {
        throw ValidationError("mle needs 3 <= k_min < k_max <= table kmax (" + std::to_string(table.kmax) + ")");
    }
    DimensionEstimateMatrix m;
    m.points = table.count;
    m.k_min = cfg.k_min;
    m.k_max = cfg.k_max;
    m.p = table.p;
    m.values.resize(m.points * m.k_count());

    for (std::size_t i = 0; i < table.count; ++i) {
        for (std::size_t k = cfg.k_min; k <= cfg.k_max; ++k) {
            const double tk = table.distance(i, k);
            double denom = 0.0;
            for (std::size_t j = 1; j < k; ++j) {
                const double ratio = tk / table.distance(i, j);
                // ratios this close to 1 are ties blurred by rounding in the distance sums
                if (ratio - 1.0 > kTieTolerance) denom += std::log(ratio);
            }
            double mu = static_cast<double>(k - 2) / denom;
            if (!std::isfinite(denom) || !(denom > 0.0) || !std::isfinite(mu) || !(mu > 0.0)) {
                mu = std::numeric_limits<double>::quiet_NaN();
                ++m.invalid_count;
            }
            m.values[i * m.k_count() + (k - cfg.k_min)] = mu;
        }
    }
    return m;
}

DimensionSummary summarize(const DimensionEstimateMatrix& matrix, double bin_width) {
    if (!(bin_width > 0.0)) throw ValidationError("histogram bin width must be > 0");
    DimensionSummary s;
    s.p = matrix.p;
    s.k_min = matrix.k_min;
    s.k_max = matrix.k_max;
    s.invalid_count = matrix.invalid_count;
    s.points = matrix.points;

    double sum = 0.0, sum_sq = 0.0;
    std::size_t valid = 0;
    s.point_means.assign(matrix.points, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> means;
    for (std::size_t i = 0; i < matrix.points; ++i) {
        double row_sum = 0.0;
        std::size_t row_valid = 0;
        for (std::size_t c = 0; c < matrix.k_count(); ++c) {
            const double v = matrix.values[i * matrix.k_count() + c];
            if (std::isnan(v)) continue;
            row_sum += v;
            ++row_valid;
        }
        if (row_valid == 0) continue;
        sum += row_sum;
        valid += row_valid;
        s.point_means[i] = row_sum / static_cast<double>(row_valid);
        means.push_back(s.point_means[i]);
    }
    if (valid == 0) throw NumericalError("dimension estimate matrix has no valid entries");

    s.mean = sum / static_cast<double>(valid);
    for (double v : matrix.values) {
        if (!std::isnan(v)) sum_sq += (v - s.mean) * (v - s.mean);
    }
    s.std = std::sqrt(sum_sq / static_cast<double>(valid));

    const double pm = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double pv = 0.0;
    for (double v : means) pv += (v - pm) * (v - pm);
    s.point_std = std::sqrt(pv / static_cast<double>(means.size()));

    const auto [lo_it, hi_it] = std::minmax_element(means.begin(), means.end());
    const double lo = std::floor(*lo_it / bin_width) * bin_width;
    // a handful of near-degenerate points can sit far out; they share one open-ended last bin
    constexpr double kMaxBins = 2000.0;
    const double span_bins = std::floor((*hi_it - lo) / bin_width) + 1.0;
    const bool clipped = span_bins > kMaxBins;
    const auto bins = static_cast<std::size_t>(clipped ? kMaxBins : span_bins);
    s.histogram.counts.assign(bins, 0);
    for (std::size_t b = 0; b <= bins; ++b) s.histogram.edges.push_back(lo + static_cast<double>(b) * bin_width);
    if (clipped) s.histogram.edges.back() = *hi_it;
    for (double v : means) {
        auto b = static_cast<std::size_t>(std::floor((v - lo) / bin_width));
        s.histogram.counts[std::min(b, bins - 1)]++;
    }
    return s;
}

double nn_regression_estimate(const NeighborTable& table, const EstimatorConfig& cfg) {
    if (cfg.k_min < 1 || cfg.k_min >= cfg.k_max || cfg.k_max > table.kmax) {
        throw ValidationError("regression needs 1 <= k_min < k_max <= table kmax");
    }
    std::vector<double> x, y;
    for (std::size_t k = cfg.k_min; k <= cfg.k_max; ++k) {
        x.push_back(std::log(mean_kth_distance(table, k)));
        y.push_back(std::log(static_cast<double>(k)));
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !std::isfinite(sxx)) {
        throw NumericalError("nn regression is degenerate: mean k-th distances are constant over the k range");
    }
    return sxy / sxx;
}

double two_point_estimate(double k_a, double mean_t_a, double k_b, double mean_t_b) {
    const double denom = std::log(mean_t_b / mean_t_a);
    if (!std::isfinite(denom) || denom == 0.0) {
        throw NumericalError("two-point estimate is degenerate: equal mean distances");
    }
    return std::log(k_b / k_a) / denom;
}

// ---------------------------------------------------------------------------

PoissonModel::PoissonModel(double mu_, double c_) : mu(mu_), c(c_) {
    if (!(mu > 0.0) || !(c > 0.0) || !std::isfinite(mu) || !std::isfinite(c)) {
        throw ValidationError("Poisson model needs mu > 0 and c > 0");
    }
}

PoissonModel PoissonModel::from_density(double mu, double density, MinkowskiOrder p) {
    return PoissonModel(mu, density * unit_ball_volume(mu, p));
}

double PoissonModel::theta(MinkowskiOrder p) const { return std::log(c) - log_unit_ball_volume(mu, p); }

double PoissonModel::rate(double r) const { return c * mu * std::pow(r, mu - 1.0); }

double PoissonModel::kth_distance_density(std::size_t k, double r) const {
    if (r <= 0.0) return 0.0;
    const double kd = static_cast<double>(k);
    const double x = c * std::pow(r, mu);
    return std::exp((kd - 1.0) * std::log(x) - x - std::lgamma(kd)) * c * mu * std::pow(r, mu - 1.0);
}

double expected_kth_distance(const PoissonModel& model, std::size_t k) {
    if (k < 1) throw ValidationError("expected_kth_distance needs k >= 1");
    const double kd = static_cast<double>(k);
    return std::pow(model.c, -1.0 / model.mu) * std::exp(std::lgamma(kd + 1.0 / model.mu) - std::lgamma(kd));
}

namespace {

// |x|_p^p with multiplication for the common integer orders
double power_norm(const double* x, int dim, double p) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double a = std::abs(x[d]);
        if (p == 1.0) {
            s += a;
        } else if (p == 2.0) {
            s += a * a;
        } else if (p == 3.0) {
            s += a * a * a;
        } else {
            s += std::pow(a, p);
        }
    }
    return s;
}

} // namespace

MonteCarloResult simulate_poisson_knn(int mu, double density, MinkowskiOrder order, std::size_t k, std::size_t trials,
                                      std::uint64_t seed) {
    if (mu < 1 || mu > 3) throw ValidationError("simulate_poisson_knn supports mu in {1, 2, 3}");
    if (!(density > 0.0)) throw ValidationError("simulate_poisson_knn needs density > 0");
    if (k < 1) throw ValidationError("simulate_poisson_knn needs k >= 1");
    if (trials < 10000) throw ValidationError("simulate_poisson_knn needs at least 10^4 trials");

    const double p = order.value();
    const double kd = static_cast<double>(k);
    // the p-ball of radius R sits inside the cube [-R, R]^mu for every p >= 1;
    // size R so the ball expects k + 10 sqrt(k) + 10 points
    const double target = kd + 10.0 * std::sqrt(kd) + 10.0;
    const double c = density * unit_ball_volume(mu, order);
    const double base_half_width = std::pow(target / c, 1.0 / mu);

    std::vector<double> results(trials);
    bool enlarged_any = false;
    bool overflow = false;

#pragma omp parallel reduction(|| : enlarged_any, overflow)
    {
        std::vector<double> norms;
        double pt[3];
#pragma omp for schedule(static)
        for (std::size_t t = 0; t < trials; ++t) {
            Rng rng = Rng::substream(seed, t);
            norms.clear();
            double inner = 0.0;
            double half = base_half_width;
            while (true) {
                // Poisson points in [-half, half]^mu minus the already simulated [-inner, inner]^mu
                const double volume = std::pow(2.0 * half, mu);
                const auto n = rng.poisson(density * volume);
                for (std::uint64_t q = 0; q < n; ++q) {
                    bool in_inner = inner > 0.0;
                    for (int d = 0; d < mu; ++d) {
                        pt[d] = rng.uniform(-half, half);
                        in_inner = in_inner && std::abs(pt[d]) < inner;
                    }
                    if (in_inner) continue;
                    norms.push_back(power_norm(pt, mu, p));
                }
                const double limit = std::pow(half, p);
                if (norms.size() >= k) {
                    std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(k - 1), norms.end());
                    if (norms[k - 1] <= limit) break;
                }
                inner = half;
                half *= 2.0;
                enlarged_any = true;
                if (density * std::pow(2.0 * half, mu) > 1e7) {
                    overflow = true;
                    break;
                }
            }
            results[t] = norms.size() >= k ? std::pow(norms[k - 1], 1.0 / p) : 0.0;
        }
    }

    if (overflow) throw NumericalError("Poisson simulation region grew too large; lower k or raise density");

    MonteCarloResult r;
    r.trials = trials;
    r.enlarged = enlarged_any;
    r.mean = std::accumulate(results.begin(), results.end(), 0.0) / static_cast<double>(trials);
    double var = 0.0;
    for (double v : results) var += (v - r.mean) * (v - r.mean);
    var /= static_cast<double>(trials - 1);
    r.std_error = std::sqrt(var / static_cast<double>(trials));
    return r;
}

// ---------------------------------------------------------------------------

namespace {

template <class Data>
std::vector<SweepEntry> sweep_impl(const Data& data, const std::vector<double>& p_list, const EstimatorConfig& cfg) {
    if (p_list.empty()) throw ValidationError("sweep needs a nonempty p list");
    const auto unique = deduplicate(data).data;
    std::vector<SweepEntry> out;
    for (double p : p_list) {
        EstimatorConfig c = cfg;
        c.p = p;
        c.validate(unique.count());
        const auto table = knn_table(unique, MinkowskiOrder(p), c.k_max);
        out.push_back({p, summarize(mle_point_estimates(table, c), c.bin_width)});
    }
    return out;
}

template <class Data>
DimensionSummary estimate_impl(const Data& data, const EstimatorConfig& cfg) {
    const auto unique = deduplicate(data).data;
    cfg.validate(unique.count());
    const auto table = knn_table(unique, MinkowskiOrder(cfg.p), cfg.k_max);
    return summarize(mle_point_estimates(table, cfg), cfg.bin_width);
}

} // namespace

std::vector<SweepEntry> sweep_minkowski(const ImageDataset& ds, const std::vector<double>& p_list,
                                        const EstimatorConfig& cfg) {
    return sweep_impl(ds, p_list, cfg);
}

std::vector<SweepEntry> sweep_minkowski(const PointCloud& cloud, const std::vector<double>& p_list,
                                        const EstimatorConfig& cfg) {
    return sweep_impl(cloud, p_list, cfg);
}

DimensionSummary estimate_dimension(const ImageDataset& ds, const EstimatorConfig& cfg) {
    return estimate_impl(ds, cfg);
}

DimensionSummary estimate_dimension(const PointCloud& cloud, const EstimatorConfig& cfg) {
    return estimate_impl(cloud, cfg);
}

void write_estimate_csv(const DimensionEstimateMatrix& matrix, const std::filesystem::path& path) {
    io::CsvWriter csv({"point", "k", "mu"});
    for (std::size_t i = 0; i < matrix.points; ++i) {
        for (std::size_t k = matrix.k_min; k <= matrix.k_max; ++k) {
            const double v = matrix.at(i, k);
            if (!std::isnan(v)) csv.cell(i).cell(k).cell(v).end_row();
        }
    }
    csv.save(path);
}

void write_histogram_csv(const Histogram& hist, const std::filesystem::path& path) {
    io::CsvWriter csv({"bin_lo", "bin_hi", "count"});
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        csv.cell(hist.edges[b]).cell(hist.edges[b + 1]).cell(hist.counts[b]).end_row();
    }
    csv.save(path);
}

std::string format_summary(const DimensionSummary& s) {
    std::ostringstream os;
    os << "p " << io::format_real(s.p) << "\n"
       << "k_min " << s.k_min << "\n"
       << "k_max " << s.k_max << "\n"
       << "mean " << io::format_real(s.mean) << "\n"
       << "std " << io::format_real(s.std) << "\n"
       << "point_std " << io::format_real(s.point_std) << "\n"
       << "points " << s.points << "\n"
       << "invalid_count " << s.invalid_count << "\n";
    return os.str();
}

void write_sweep_csv(const std::vector<SweepEntry>& sweep, const std::filesystem::path& path) {
    io::CsvWriter csv({"p", "mean_mu", "std_mu"});
    for (const auto& e : sweep) csv.cell(e.p).cell(e.summary.mean).cell(e.summary.std).end_row();
    csv.save(path);
}

} // namespace microdim
