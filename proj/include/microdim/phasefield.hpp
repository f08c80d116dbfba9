#pragma once

#include "microdim/datamodel.hpp"

#include <cstdint>
#include <vector>

/**
 * @file phasefield.hpp
 *
 * @brief Multi-order-parameter Allen-Cahn grain growth on a periodic square grid.
 *
 * Each grain orientation i carries an order parameter eta_i. The bulk free
 * energy density is
 *
 *     f = sum_i (-alpha/2 eta_i^2 + beta/4 eta_i^4) + gamma sum_i sum_{j>i} eta_i^2 eta_j^2
 *
 * and every field relaxes by d eta_i / dt = -L (df/d eta_i - kappa lap eta_i),
 * integrated with explicit Euler and a 5-point periodic Laplacian (grid spacing 1).
 */

namespace microdim::phasefield {

struct PhaseFieldConfig {
    int grid = 128;
    int num_order_params = 16;
    double mobility = 1.0;
    double kappa = 2.0;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double dt = 0.1;
    int transient_steps = 200; ///< discarded before the first snapshot
    int steps = 2000; ///< simulated after the transient
    int snapshot_every = 20;
    double boundary_threshold = 0.9; ///< boundary where sum eta_i^2 < threshold
    double init_amplitude = 0.01;
    std::uint64_t seed = 0;
    /// Run-specific noise added right after snapshot 0; zero disables it.
    double perturbation_amplitude = 0.0;
    std::uint64_t perturbation_seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
};

class OrderParameterField {
public:
    OrderParameterField() = default;
    OrderParameterField(int grid, int q) : grid_(grid), q_(q), values_(static_cast<std::size_t>(grid) * grid * q, 0.0) {}

    int grid() const { return grid_; }
    int order_params() const { return q_; }

    double& at(int i, int x, int y) { return values_[index(i, x, y)]; }
    double at(int i, int x, int y) const { return values_[index(i, x, y)]; }

    /// Field i as a contiguous grid-major slice.
    std::span<double> field(int i) { return {values_.data() + static_cast<std::size_t>(i) * grid_ * grid_, cells()}; }
    std::span<const double> field(int i) const {
        return {values_.data() + static_cast<std::size_t>(i) * grid_ * grid_, cells()};
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool all_finite() const;

    friend bool operator==(const OrderParameterField&, const OrderParameterField&) = default;

private:
    std::size_t cells() const { return static_cast<std::size_t>(grid_) * grid_; }
    std::size_t index(int i, int x, int y) const {
        return static_cast<std::size_t>(i) * grid_ * grid_ + static_cast<std::size_t>(y) * grid_ + x;
    }

    int grid_ = 0;
    int q_ = 0;
    std::vector<double> values_;
};

/// Uniform noise in [-init_amplitude, init_amplitude] for every field.
OrderParameterField init_random_grains(const PhaseFieldConfig& cfg);

/// Total discrete free energy: bulk density plus kappa/2 |grad eta_i|^2 with forward differences.
double free_energy(const OrderParameterField& field, const PhaseFieldConfig& cfg);

/// Advances `field` by one explicit step, using `scratch` as the output buffer (swapped in).
void advance(OrderParameterField& field, OrderParameterField& scratch, const PhaseFieldConfig& cfg);

/// One explicit Euler step; throws NumericalError on divergence.
OrderParameterField step(const OrderParameterField& field, const PhaseFieldConfig& cfg);

/// Binary image: 1 where sum_i eta_i^2 < threshold.
Image extract_boundary_image(const OrderParameterField& field, double threshold);

struct Trajectory {
    ImageDataset images; ///< one per snapshot; coords = snapshot time index
    std::vector<double> energies; ///< free energy at each snapshot
};

/// floor(steps / snapshot_every) snapshots, the first taken right after the transient.
Trajectory run_trajectory(const PhaseFieldConfig& cfg);

/// Several runs sharing one initial state; run r uses perturbation_seed + r.
/// Coordinates are (run, time index).
ImageDataset run_trajectories(const PhaseFieldConfig& cfg, int runs);

} // namespace microdim::phasefield
