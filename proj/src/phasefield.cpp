#include "microdim/phasefield.hpp"

#include "microdim/error.hpp"
#include "microdim/random.hpp"

#include <algorithm>
#include <cmath>

namespace microdim::phasefield {

void PhaseFieldConfig::validate() const {
    if (grid < 3) throw ValidationError("phase field grid must be >= 3");
    if (num_order_params < 2) throw ValidationError("phase field needs at least 2 order parameters");
    if (!(dt > 0.0) || !(mobility > 0.0) || !(kappa >= 0.0)) {
        throw ValidationError("phase field needs dt > 0, mobility > 0, kappa >= 0");
    }
    if (snapshot_every < 1 || steps < snapshot_every || transient_steps < 0) {
        throw ValidationError("phase field needs snapshot_every >= 1, steps >= snapshot_every, transient >= 0");
    }
}

nlohmann::json PhaseFieldConfig::to_json() const {
    return {{"grid", grid},
            {"num_order_params", num_order_params},
            {"mobility", mobility},
            {"kappa", kappa},
            {"alpha", alpha},
            {"beta", beta},
            {"gamma", gamma},
            {"dt", dt},
            {"transient_steps", transient_steps},
            {"steps", steps},
            {"snapshot_every", snapshot_every},
            {"boundary_threshold", boundary_threshold},
            {"init_amplitude", init_amplitude},
            {"seed", seed},
            {"perturbation_amplitude", perturbation_amplitude},
            {"perturbation_seed", perturbation_seed}};
}

bool OrderParameterField::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

OrderParameterField init_random_grains(const PhaseFieldConfig& cfg) {
    cfg.validate();
    OrderParameterField field(cfg.grid, cfg.num_order_params);
    Rng rng(cfg.seed);
    for (double& v : field.values()) v = rng.uniform(-cfg.init_amplitude, cfg.init_amplitude);
    return field;
}

namespace {

std::vector<double> squared_sum(const OrderParameterField& field) {
    const std::size_t cells = static_cast<std::size_t>(field.grid()) * field.grid();
    std::vector<double> s(cells, 0.0);
    for (int i = 0; i < field.order_params(); ++i) {
        const auto f = field.field(i);
        for (std::size_t c = 0; c < cells; ++c) s[c] += f[c] * f[c];
    }
    return s;
}

} // namespace

double free_energy(const OrderParameterField& field, const PhaseFieldConfig& cfg) {
    const int n = field.grid();
    const auto sum_sq = squared_sum(field);
    double energy = 0.0;
    for (int i = 0; i < field.order_params(); ++i) {
        const auto f = field.field(i);
        for (int y = 0; y < n; ++y) {
            const int yn = (y + 1) % n;
            for (int x = 0; x < n; ++x) {
                const int xn = (x + 1) % n;
                const std::size_t c = static_cast<std::size_t>(y) * n + x;
                const double e = f[c];
                const double e2 = e * e;
                const double gx = f[static_cast<std::size_t>(y) * n + xn] - e;
                const double gy = f[static_cast<std::size_t>(yn) * n + x] - e;
                // pair term: each unordered pair counted once via half of sum_{j != i}
                energy += -0.5 * cfg.alpha * e2 + 0.25 * cfg.beta * e2 * e2 +
                          0.5 * cfg.gamma * e2 * (sum_sq[c] - e2) + 0.5 * cfg.kappa * (gx * gx + gy * gy);
            }
        }
    }
    return energy;
}

void advance(OrderParameterField& field, OrderParameterField& scratch, const PhaseFieldConfig& cfg) {
    const int n = field.grid();
    if (scratch.grid() != n || scratch.order_params() != field.order_params()) {
        scratch = OrderParameterField(n, field.order_params());
    }
    const auto sum_sq = squared_sum(field);
    const double rate = cfg.mobility * cfg.dt;
    double check = 0.0;
    for (int i = 0; i < field.order_params(); ++i) {
        const auto f = field.field(i);
        auto out = scratch.field(i);
        for (int y = 0; y < n; ++y) {
            const std::size_t row = static_cast<std::size_t>(y) * n;
            const std::size_t up = static_cast<std::size_t>((y + n - 1) % n) * n;
            const std::size_t down = static_cast<std::size_t>((y + 1) % n) * n;
            for (int x = 0; x < n; ++x) {
                const int xl = x == 0 ? n - 1 : x - 1;
                const int xr = x == n - 1 ? 0 : x + 1;
                const double e = f[row + x];
                const double lap = f[row + xl] + f[row + xr] + f[up + x] + f[down + x] - 4.0 * e;
                const double others = sum_sq[row + x] - e * e;
                const double dfde = -cfg.alpha * e + cfg.beta * e * e * e + 2.0 * cfg.gamma * e * others;
                const double v = e - rate * (dfde - cfg.kappa * lap);
                out[row + x] = v;
                check += v;
            }
        }
    }
    if (!std::isfinite(check)) {
        throw NumericalError("phase field diverged (non-finite order parameter); reduce dt below " +
                             std::to_string(cfg.dt));
    }
    std::swap(field, scratch);
}

OrderParameterField step(const OrderParameterField& field, const PhaseFieldConfig& cfg) {
    OrderParameterField next = field;
    OrderParameterField scratch;
    advance(next, scratch, cfg);
    return next;
}

Image extract_boundary_image(const OrderParameterField& field, double threshold) {
    const int n = field.grid();
    const auto sum_sq = squared_sum(field);
    Image img(n, n);
    for (std::size_t c = 0; c < sum_sq.size(); ++c) img.pixels[c] = sum_sq[c] < threshold ? 1 : 0;
    return img;
}

namespace {

// Relative slack for round-off in the energy comparison.
constexpr double kEnergySlack = 1e-10;

void check_energy(double previous, double current, const PhaseFieldConfig& cfg, int step_index) {
    if (current > previous + kEnergySlack * std::max(1.0, std::abs(previous))) {
        throw NumericalError("phase field free energy increased at step " + std::to_string(step_index) + " (" +
                             std::to_string(previous) + " -> " + std::to_string(current) + "); reduce dt below " +
                             std::to_string(cfg.dt));
    }
}

} // namespace

Trajectory run_trajectory(const PhaseFieldConfig& cfg) {
    cfg.validate();
    auto field = init_random_grains(cfg);
    OrderParameterField scratch(cfg.grid, cfg.num_order_params);

    double energy = free_energy(field, cfg);
    int step_index = 0;
    for (; step_index < cfg.transient_steps; ++step_index) {
        advance(field, scratch, cfg);
        if ((step_index + 1) % cfg.snapshot_every == 0) {
            const double e = free_energy(field, cfg);
            check_energy(energy, e, cfg, step_index + 1);
            energy = e;
        }
    }
    energy = free_energy(field, cfg);

    const int snapshots = cfg.steps / cfg.snapshot_every;
    Trajectory traj;
    traj.images = ImageDataset("phasefield", cfg.grid, cfg.grid, 1);
    traj.images.coord_names = {"time"};
    traj.images.generator_coords = RealMatrix(static_cast<std::size_t>(snapshots), 1);

    for (int s = 0; s < snapshots; ++s) {
        if (s > 0) {
            for (int k = 0; k < cfg.snapshot_every; ++k, ++step_index) advance(field, scratch, cfg);
            const double e = free_energy(field, cfg);
            check_energy(energy, e, cfg, step_index);
            energy = e;
        }
        traj.images.push_back(extract_boundary_image(field, cfg.boundary_threshold));
        traj.images.generator_coords(static_cast<std::size_t>(s), 0) = s;
        traj.energies.push_back(energy);

        if (s == 0 && cfg.perturbation_amplitude > 0.0) {
            Rng rng(cfg.perturbation_seed);
            for (double& v : field.values()) v += rng.uniform(-cfg.perturbation_amplitude, cfg.perturbation_amplitude);
            energy = free_energy(field, cfg);
        }
    }

    traj.images.provenance.generator = "phasefield";
    traj.images.provenance.seed = cfg.seed;
    traj.images.provenance.params = cfg.to_json();
    return traj;
}

ImageDataset run_trajectories(const PhaseFieldConfig& cfg, int runs) {
    if (runs < 1) throw ValidationError("need at least one phase field run");
    ImageDataset all("phasefield-" + std::to_string(runs) + "runs", cfg.grid, cfg.grid, 1);
    all.coord_names = {"run", "time"};
    std::vector<double> coords;
    for (int r = 0; r < runs; ++r) {
        PhaseFieldConfig run_cfg = cfg;
        run_cfg.perturbation_seed = cfg.perturbation_seed + static_cast<std::uint64_t>(r);
        const auto traj = run_trajectory(run_cfg);
        all.pixels.insert(all.pixels.end(), traj.images.pixels.begin(), traj.images.pixels.end());
        for (std::size_t s = 0; s < traj.images.count(); ++s) {
            coords.push_back(r);
            coords.push_back(traj.images.generator_coords(s, 0));
        }
    }
    all.generator_coords.rows = coords.size() / 2;
    all.generator_coords.cols = 2;
    all.generator_coords.data = std::move(coords);
    all.provenance.generator = "phasefield";
    all.provenance.seed = cfg.seed;
    all.provenance.params = cfg.to_json();
    all.provenance.params["runs"] = runs;
    return all;
}

} // namespace microdim::phasefield
