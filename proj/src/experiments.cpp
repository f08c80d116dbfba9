#include "microdim/experiments.hpp"

#include "microdim/autoencoder.hpp"
#include "microdim/error.hpp"
#include "microdim/estimator.hpp"
#include "microdim/io.hpp"
#include "microdim/phasefield.hpp"
#include "microdim/stats.hpp"
#include "microdim/svg.hpp"
#include "microdim/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace microdim::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

bool Report::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass || c.informational; });
}

std::string Report::text() const {
    std::ostringstream os;
    os << "figure " << figure << "\n";
    for (const auto& c : checks) {
        os << (c.informational ? "INFO " : c.pass ? "PASS " : "FAIL ") << c.name << ": observed " << c.observed << ", expected " << c.expected
           << "\n";
    }
    os << (all_passed() ? "all checks passed" : "some checks failed") << "\n";
    return os.str();
}

namespace {

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

Check in_range(std::string name, double v, double lo, double hi) {
    return {std::move(name), "[" + fmt(lo, 2) + ", " + fmt(hi, 2) + "]", fmt(v), v >= lo && v <= hi};
}

Check at_least(std::string name, double v, double lo) {
    return {std::move(name), ">= " + fmt(lo, 2), fmt(v), v >= lo};
}

EstimatorConfig estimator_config(const json& plan) {
    EstimatorConfig cfg;
    cfg.k_min = plan.value("k_min", cfg.k_min);
    cfg.k_max = plan.value("k_max", cfg.k_max);
    cfg.p = plan.value("p", cfg.p);
    return cfg;
}

ae::StackedAEConfig ae_config(const json& plan, std::size_t bottleneck) {
    ae::StackedAEConfig c;
    c.hidden_dim = plan.value("hidden", c.hidden_dim);
    c.bottleneck_dim = bottleneck;
    c.learning_rate = plan.value("learning_rate", c.learning_rate);
    c.finetune_learning_rate = plan.value("finetune_learning_rate", c.finetune_learning_rate);
    c.optimizer = ae::parse_optimizer(plan.value("optimizer", std::string(ae::to_string(c.optimizer))));
    c.batch_size = plan.value("batch_size", c.batch_size);
    if (plan.contains("epochs")) {
        const auto e = plan.at("epochs").get<std::vector<int>>();
        if (e.size() != 3) throw ValidationError("plan key 'epochs' needs three entries");
        c.epochs_stage1 = e[0];
        c.epochs_stage2 = e[1];
        c.epochs_finetune = e[2];
    }
    c.seed = plan.value("ae_seed", std::uint64_t{5});
    return c;
}

void save_svg(const fs::path& path, const std::string& svg) { io::write_text_atomic(path, svg); }

void save_histogram(const Histogram& h, const fs::path& dir, const std::string& stem, const std::string& title) {
    write_histogram_csv(h, dir / (stem + ".csv"));
    std::vector<double> counts(h.counts.begin(), h.counts.end());
    save_svg(dir / (stem + ".svg"), svg::histogram(h.edges, counts, {title, "estimated dimension", "points"}));
}

struct AeOutcome {
    ae::TrainedNetwork net;
    ae::LatentTable latent;
};

AeOutcome train_and_export(const ImageDataset& ds, const json& plan, std::size_t bottleneck,
                           const std::vector<std::string>& features, const fs::path& out, const std::string& tag,
                           const Logger& log) {
    auto cfg = ae_config(plan, bottleneck);
    if (log) log("training autoencoder " + tag + " (" + std::to_string(ds.count()) + " images, bottleneck " +
                 std::to_string(bottleneck) + ")");
    AeOutcome r;
    r.net = ae::train_stacked(ds, cfg, [&](const ae::LossRecord& rec) {
        if (log && rec.epoch % 50 == 0) {
            log("  " + std::string(ae::to_string(rec.stage)) + " epoch " + std::to_string(rec.epoch) + " loss " +
                fmt(rec.loss));
        }
    });
    r.latent = ae::encode_dataset(r.net, ds, features);
    ae::write_loss_csv(r.net.history, out / ("loss_" + tag + ".csv"));
    ae::write_latent_csv(r.latent, out / ("latent_" + tag + ".csv"));
    const auto& z = r.latent.latent;
    const auto z1 = stats::column(z, 0);
    const auto z2 = z.cols > 1 ? stats::column(z, 1) : std::vector<double>(z.rows, 0.0);
    std::vector<double> color;
    if (z.cols > 2) {
        color = stats::column(z, 2);
    } else if (r.latent.features.cols > 0) {
        color = stats::column(r.latent.features, 0);
    }
    std::vector<double> x = z1, y = z2;
    std::string xl = "z1", yl = z.cols > 1 ? "z2" : "";
    if (z.cols == 1 && r.latent.features.cols > 0) {
        x = stats::column(r.latent.features, 0);
        y = z1;
        xl = r.latent.feature_names[0];
        yl = "z1";
    }
    save_svg(out / ("latent_" + tag + ".svg"), svg::scatter(x, y, color, {"latent space " + tag, xl, yl}));
    return r;
}

double first_loss(const ae::TrainedNetwork& net) { return net.history.empty() ? NAN : net.history.front().loss; }
double final_loss(const ae::TrainedNetwork& net) { return net.history.empty() ? NAN : net.history.back().loss; }

// ---------------------------------------------------------------------------

Report fig2b(const json& plan, const fs::path& out, const Logger& log) {
    Report rep{"fig2b", {}};
    synth::ManifoldSpec spec;
    spec.kind = synth::ManifoldKind::SwissRoll;
    spec.sample_count = plan.at("points").get<std::size_t>();
    spec.seed = plan.at("seed").get<std::uint64_t>();
    const auto cloud = synth::gen_pointcloud(spec);
    const auto j = plan.at("j").get<std::size_t>(), k = plan.at("k").get<std::size_t>();
    const auto p_list = plan.at("p_list").get<std::vector<double>>();
    if (log) log("ratio curve on swiss roll (" + std::to_string(cloud.count()) + " points)");
    const auto curve = ratio_curve(cloud, j, k, p_list);

    io::CsvWriter csv({"dataset", "p", "ratio"});
    svg::Series s_cloud{"swiss roll", {}, {}};
    double lo = INFINITY, hi = -INFINITY, sum = 0.0;
    for (const auto& pt : curve) {
        csv.cell(std::string_view("swissroll")).cell(pt.p).cell(pt.ratio).end_row();
        s_cloud.x.push_back(pt.p);
        s_cloud.y.push_back(pt.ratio);
        lo = std::min(lo, pt.ratio);
        hi = std::max(hi, pt.ratio);
        sum += pt.ratio;
    }
    const double spread = (hi - lo) / (sum / static_cast<double>(curve.size()));
    rep.checks.push_back({"swiss roll T" + std::to_string(j) + "/T" + std::to_string(k) + " relative spread over p",
                          "< " + fmt(plan.at("max_spread").get<double>(), 2), fmt(spread),
                          spread < plan.at("max_spread").get<double>()});

    std::vector<svg::Series> series{s_cloud};
    const auto binary_count = plan.at("binary_count").get<std::size_t>();
    if (binary_count > 0) {
        if (log) log("ratio curve on binary circles (" + std::to_string(binary_count) + " images)");
        const auto ds = synth::gen_circles(synth::dataset2_case("2D"), binary_count, spec.seed);
        const auto bc = ratio_curve(ds, j, k, p_list);
        svg::Series s_bin{"binary circles 2D", {}, {}};
        double worst = 0.0;
        for (const auto& pt : bc) {
            csv.cell(std::string_view("circles2D")).cell(pt.p).cell(pt.ratio).end_row();
            s_bin.x.push_back(pt.p);
            s_bin.y.push_back(pt.ratio);
            const double predicted = std::pow(bc.front().ratio, bc.front().p / pt.p);
            worst = std::max(worst, std::abs(pt.ratio / predicted - 1.0));
        }
        series.push_back(s_bin);
        rep.checks.push_back({"binary ratio follows (ratio at p=1)^(1/p)", "relative error < 1e-9",
                              fmt(worst * 1e9, 3) + "e-9", worst < 1e-9});
    }
    csv.save(out / "ratio_curve.csv");
    save_svg(out / "ratio_curve.svg", svg::line_plot(series, {"ratio of mean k-NN distances", "p", "ratio"}));
    return rep;
}

Report fig3(const json& plan, const fs::path& out, const Logger& log) {
    Report rep{"fig3", {}};
    const auto cfg = estimator_config(plan);
    const auto p_list = plan.at("p_list").get<std::vector<double>>();
    io::CsvWriter csv({"manifold", "p", "mean_mu", "std_mu", "nnreg_mu"});
    std::vector<svg::Series> series;
    const std::map<std::string, std::pair<double, double>> bands{
        {"helix", {0.85, 1.15}}, {"broken-swissroll", {1.8, 2.2}}, {"swissroll", {1.8, 2.2}}};
    for (const auto& name : plan.at("manifolds").get<std::vector<std::string>>()) {
        synth::ManifoldSpec spec;
        spec.kind = synth::parse_manifold_kind(name);
        spec.sample_count = plan.at("points").get<std::size_t>();
        spec.seed = plan.at("seed").get<std::uint64_t>();
        const auto cloud = deduplicate(synth::gen_pointcloud(spec)).data;
        if (log) log("p-sweep on " + name);
        const auto sweep = sweep_minkowski(cloud, p_list, cfg);
        svg::Series s{name, {}, {}};
        const auto band = bands.count(name) ? bands.at(name) : std::pair<double, double>{0.0, INFINITY};
        for (const auto& e : sweep) {
            EstimatorConfig c = cfg;
            c.p = e.p;
            const double reg = nn_regression_estimate(knn_table(cloud, MinkowskiOrder(e.p), c.k_max), c);
            csv.cell(std::string_view(name)).cell(e.p).cell(e.summary.mean).cell(e.summary.std).cell(reg).end_row();
            s.x.push_back(e.p);
            s.y.push_back(e.summary.mean);
            rep.checks.push_back(in_range(name + " MLE at p=" + fmt(e.p, 1), e.summary.mean, band.first, band.second));
            if (name != "broken-swissroll") {
                const double rel = std::abs(reg - e.summary.mean) / e.summary.mean;
                rep.checks.push_back({name + " regression vs MLE at p=" + fmt(e.p, 1), "relative gap < 0.15",
                                      fmt(rel), rel < 0.15});
            }
        }
        series.push_back(s);
    }
    csv.save(out / "sweep.csv");
    save_svg(out / "sweep.svg", svg::line_plot(series, {"MLE dimension vs Minkowski p", "p", "mean dimension"}));
    return rep;
}

Report fig4a(const json& plan, const fs::path& out, const Logger& log) {
    Report rep{"fig4a", {}};
    const auto cfg = estimator_config(plan);
    const auto p_list = plan.at("p_list").get<std::vector<double>>();
    const auto count = plan.at("count").get<std::size_t>();
    const auto seed = plan.at("seed").get<std::uint64_t>();
    io::CsvWriter csv({"case", "kind", "p", "mean_mu", "std_mu", "gray_levels"});
    std::vector<svg::Series> bin_series, gray_series;
    std::vector<double> gaps;
    std::vector<std::size_t> levels;
    for (const auto& id : plan.at("cases").get<std::vector<std::string>>()) {
        const auto spec = synth::dataset2_case(id);
        if (log) log("binary circles " + id);
        const auto ds = synth::gen_circles(spec, count, seed);
        const auto sweep = sweep_minkowski(ds, p_list, cfg);
        svg::Series s{id + " binary", {}, {}};
        double base = NAN;
        double worst_scaling = 0.0;
        for (const auto& e : sweep) {
            csv.cell(std::string_view(id)).cell(std::string_view("binary")).cell(e.p).cell(e.summary.mean).cell(e.summary.std).cell(std::size_t{2}).end_row();
            s.x.push_back(e.p);
            s.y.push_back(e.summary.mean);
            if (e.p == 1.0) base = e.summary.mean;
        }
        for (const auto& e : sweep) {
            if (std::isfinite(base)) worst_scaling = std::max(worst_scaling, std::abs(e.summary.mean / (e.p * base) - 1.0));
        }
        bin_series.push_back(s);
        if (std::isfinite(base)) {
            rep.checks.push_back(in_range(id + " binary MLE at p=1", base, 1.8, 2.2));
            rep.checks.push_back({id + " binary mean scales as p", "relative error < 1e-9", fmt(worst_scaling * 1e9, 3) + "e-9",
                                  worst_scaling < 1e-9});
        }

        if (log) log("gaussian blobs " + id);
        const auto blobs = synth::gen_gaussian_blobs(spec, plan.at("sigma").get<double>(),
                                                     plan.at("quant_scale").get<int>(), count, seed);
        const auto gs = sweep_minkowski(blobs.dataset, {1.0, 2.0}, cfg);
        svg::Series g{id + " gray", {}, {}};
        for (const auto& e : gs) {
            csv.cell(std::string_view(id)).cell(std::string_view("gaussian")).cell(e.p).cell(e.summary.mean).cell(e.summary.std).cell(blobs.gray_levels).end_row();
            g.x.push_back(e.p);
            g.y.push_back(e.summary.mean);
        }
        gray_series.push_back(g);
        gaps.push_back(std::abs(gs[1].summary.mean - gs[0].summary.mean));
        levels.push_back(blobs.gray_levels);
    }
    csv.save(out / "sweep.csv");
    save_svg(out / "binary_sweep.svg", svg::line_plot(bin_series, {"binary circles", "p", "mean dimension"}));
    save_svg(out / "gray_sweep.svg", svg::line_plot(gray_series, {"gaussian blobs", "p", "mean dimension"}));

    bool decreasing = true, more_levels = true;
    std::string gap_text, level_text;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        gap_text += (i ? " > " : "") + fmt(gaps[i], 3);
        level_text += (i ? " < " : "") + std::to_string(levels[i]);
        if (i > 0 && !(gaps[i] < gaps[i - 1])) decreasing = false;
        if (i > 0 && !(levels[i] > levels[i - 1])) more_levels = false;
    }
    rep.checks.push_back({"gray-level count grows with radius", "strictly increasing", level_text, more_levels});
    rep.checks.push_back({"|mu(p=2) - mu(p=1)| shrinks with gray levels", "strictly decreasing", gap_text, decreasing});
    return rep;
}

Report fig5(const json& plan, const fs::path& out, const Logger& log) {
    Report rep{"fig5", {}};
    const auto cfg = estimator_config(plan);
    synth::ShapeOptions opt;
    opt.size_min = plan.at("size_min").get<int>();
    opt.size_max = plan.at("size_max").get<int>();
    const auto count = plan.at("count").get<std::size_t>();
    const auto seed = plan.at("seed").get<std::uint64_t>();
    const double tol = plan.at("tolerance").get<double>();
    io::CsvWriter csv({"case", "expected", "mean_mu", "std_mu", "point_std", "points", "invalid_count"});
    for (const char id : plan.at("cases").get<std::string>()) {
        const auto sc = synth::shape_case(id);
        if (log) log(std::string("shape case ") + id);
        const auto ds = synth::gen_shapes(sc, count, opt, seed + static_cast<std::uint64_t>(id));
        const auto s = estimate_dimension(ds, cfg);
        const int expected = sc.expected_dimension();
        csv.cell(std::string_view(&id, 1)).cell(expected).cell(s.mean).cell(s.std).cell(s.point_std).cell(s.points).cell(s.invalid_count).end_row();
        save_histogram(s.histogram, out, std::string("hist_") + id, std::string("case ") + id);
        rep.checks.push_back(in_range(std::string("case ") + id + " MLE mean", s.mean, expected - tol, expected + tol));
    }
    csv.save(out / "cases.csv");
    return rep;
}

Report fig6(const json& plan, const fs::path& out, const Logger& log) {
    Report rep{"fig6", {}};
    synth::ManifoldSpec spec;
    spec.kind = synth::ManifoldKind::SwissRoll;
    spec.sample_count = plan.at("count").get<std::size_t>();
    spec.seed = plan.at("seed").get<std::uint64_t>();
    const auto cloud = synth::gen_pointcloud(spec);
    const auto ds = synth::gen_manifold_circles(cloud, plan.at("image_size").get<int>(),
                                                synth::parse_mapping(plan.at("mapping").get<std::string>()));
    const auto bottleneck = plan.at("bottleneck").get<std::size_t>();
    const auto r = train_and_export(ds, plan, bottleneck, {"x", "y", "radius"}, out, "swissroll", log);

    io::CsvWriter csv({"coordinate", "affine_spearman", "best_raw_axis", "best_raw_spearman"});
    for (std::size_t g = 0; g < 3; ++g) {
        const auto coord = stats::column(ds.generator_coords, g);
        const auto fitted = stats::affine_fit(r.latent.latent, coord);
        const double rho = stats::spearman(fitted, coord);
        std::size_t best = 0;
        double best_rho = 0.0;
        for (std::size_t a = 0; a < r.latent.latent.cols; ++a) {
            const double v = std::abs(stats::spearman(stats::column(r.latent.latent, a), coord));
            if (v > best_rho) best_rho = v, best = a;
        }
        csv.cell(std::string_view(ds.coord_names[g])).cell(rho).cell(best + 1).cell(best_rho).end_row();
        rep.checks.push_back(at_least("generator " + ds.coord_names[g] + " |rank corr| after affine alignment",
                                      std::abs(rho), 0.8));
    }
    csv.save(out / "alignment.csv");
    const double ratio = final_loss(r.net) / first_loss(r.net);
    rep.checks.push_back({"final loss / first-epoch loss", "< 0.20", fmt(ratio), ratio < 0.2});
    return rep;
}

Report fig7(const json& plan, const fs::path& out, const Logger& log) {
    Report rep{"fig7", {}};
    synth::ManifoldSpec spec;
    spec.kind = synth::ManifoldKind::Helix;
    spec.sample_count = plan.at("count").get<std::size_t>();
    spec.seed = plan.at("seed").get<std::uint64_t>();
    const auto cloud = synth::gen_pointcloud(spec);
    const auto ds = synth::gen_manifold_circles(cloud, plan.at("image_size").get<int>(),
                                                synth::parse_mapping(plan.at("mapping").get<std::string>()));
    const auto r = train_and_export(ds, plan, plan.at("bottleneck").get<std::size_t>(), {"x", "y", "radius"}, out,
                                    "helix", log);
    PointCloud latent_cloud;
    latent_cloud.points = r.latent.latent;
    const auto unique = deduplicate(latent_cloud).data;
    const auto s = estimate_dimension(unique, estimator_config(plan));
    save_histogram(s.histogram, out, "latent_mle_hist", "latent MLE per point");
    rep.checks.push_back(in_range("MLE dimension of latent cloud", s.mean, 0.8, 1.3));
    return rep;
}

Report fig8(const json& plan, const fs::path& out, const Logger& log) {
    Report rep{"fig8", {}};
    phasefield::PhaseFieldConfig pf;
    pf.seed = plan.at("seed").get<std::uint64_t>();
    pf.steps = plan.at("steps").get<int>();
    pf.snapshot_every = plan.at("snapshot_every").get<int>();
    pf.transient_steps = plan.at("transient_steps").get<int>();
    if (log) log("phase-field trajectory");
    const auto traj = phasefield::run_trajectory(pf);
    {
        io::CsvWriter csv({"snapshot", "free_energy"});
        for (std::size_t i = 0; i < traj.energies.size(); ++i) csv.cell(i).cell(traj.energies[i]).end_row();
        csv.save(out / "energy.csv");
    }
    const auto s = estimate_dimension(traj.images, estimator_config(plan));
    save_histogram(s.histogram, out, "trajectory_mle_hist", "trajectory MLE per point");
    rep.checks.push_back(in_range("MLE dimension of trajectory images", s.mean, 0.8, 1.3));

    const auto r = train_and_export(traj.images, plan, 1, {"time"}, out, "d1", log);
    const double rho = stats::spearman(stats::column(r.latent.latent, 0), stats::column(traj.images.generator_coords, 0));
    rep.checks.push_back(at_least("|Spearman(latent, time)| with bottleneck 1", std::abs(rho), 0.95));

    for (const auto d : plan.at("extra_bottlenecks").get<std::vector<std::size_t>>()) {
        train_and_export(traj.images, plan, d, {"time"}, out, "d" + std::to_string(d), log);
    }
    return rep;
}

Report fig9(const json& plan, const fs::path& out, const Logger& log) {
    Report rep{"fig9", {}};
    phasefield::PhaseFieldConfig pf;
    pf.seed = plan.at("seed").get<std::uint64_t>();
    pf.steps = plan.at("steps").get<int>();
    pf.snapshot_every = plan.at("snapshot_every").get<int>();
    pf.transient_steps = plan.at("transient_steps").get<int>();
    pf.perturbation_amplitude = plan.at("perturbation_amplitude").get<double>();
    pf.perturbation_seed = plan.at("perturbation_seed").get<std::uint64_t>();
    const int runs = plan.at("runs").get<int>();
    if (log) log("phase-field trajectories x" + std::to_string(runs));
    const auto ds = phasefield::run_trajectories(pf, runs);
    const auto r = train_and_export(ds, plan, plan.at("bottleneck").get<std::size_t>(), {"run", "time"}, out, "runs",
                                    log);

    const auto& z = r.latent.latent;
    const std::size_t per = ds.count() / static_cast<std::size_t>(runs);
    auto dist = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t c = 0; c < z.cols; ++c) s += (z(a, c) - z(b, c)) * (z(a, c) - z(b, c));
        return std::sqrt(s);
    };
    std::vector<double> times(per);
    for (std::size_t t = 0; t < per; ++t) times[t] = static_cast<double>(t);

    io::CsvWriter csv({"run", "time", "distance_from_start"});
    for (int run = 0; run < runs; ++run) {
        const std::size_t base = static_cast<std::size_t>(run) * per;
        std::vector<double> d(per);
        for (std::size_t t = 0; t < per; ++t) {
            d[t] = dist(base + t, 0);
            csv.cell(run).cell(t).cell(d[t]).end_row();
        }
        rep.checks.push_back(at_least("run " + std::to_string(run) + " distance from shared start vs time (Spearman)",
                                      stats::spearman(d, times), 0.8));
    }
    csv.save(out / "branch_distance.csv");

    io::CsvWriter sep_csv({"run_a", "run_b", "time", "separation"});
    for (int a = 0; a < runs; ++a) {
        for (int b = a + 1; b < runs; ++b) {
            std::vector<double> sep(per);
            for (std::size_t t = 0; t < per; ++t) {
                sep[t] = dist(static_cast<std::size_t>(a) * per + t, static_cast<std::size_t>(b) * per + t);
                sep_csv.cell(a).cell(b).cell(t).cell(sep[t]).end_row();
            }
            auto info = at_least("runs " + std::to_string(a) + "," + std::to_string(b) +
                                     " separation vs time (Spearman)",
                                 stats::spearman(sep, times), 0.8);
            info.informational = true;
            rep.checks.push_back(info);
        }
    }
    sep_csv.save(out / "branch_separation.csv");
    return rep;
}

Report appendix1(const json& plan, const fs::path& out, const Logger& log) {
    Report rep{"appendix1", {}};
    const auto cfg = estimator_config(plan);
    synth::CircleSpec spec;
    spec.image_size = plan.at("image_size").get<int>();
    spec.radius = plan.at("radius_min").get<int>();
    spec.radius_max = plan.at("radius_max").get<int>();
    const auto count = plan.at("count").get<std::size_t>();
    const auto seed = plan.at("seed").get<std::uint64_t>();
    const double truth = plan.at("truth").get<double>();
    io::CsvWriter csv({"boundary", "mean_mu", "std_mu", "point_std", "points"});
    std::map<std::string, double> point_std;
    for (const auto& mode : plan.at("modes").get<std::vector<std::string>>()) {
        spec.boundary = synth::parse_boundary_mode(mode);
        if (log) log("circles, boundary mode " + mode);
        const auto s = estimate_dimension(synth::gen_circles(spec, count, seed), cfg);
        csv.cell(std::string_view(mode)).cell(s.mean).cell(s.std).cell(s.point_std).cell(s.points).end_row();
        save_histogram(s.histogram, out, "hist_" + mode, "boundary mode " + mode);
        point_std[mode] = s.point_std;
        rep.checks.push_back(in_range(mode + " MLE mean", s.mean, truth - 0.3, truth + 0.3));
    }
    csv.save(out / "summary.csv");
    if (point_std.count("avoid") && point_std.count("intersect")) {
        rep.checks.push_back({"per-point std: intersect > avoid", "intersect > avoid",
                              fmt(point_std["intersect"]) + " vs " + fmt(point_std["avoid"]),
                              point_std["intersect"] > point_std["avoid"]});
    }
    return rep;
}

using FigureFn = Report (*)(const json&, const fs::path&, const Logger&);

const std::map<std::string, FigureFn>& registry() {
    static const std::map<std::string, FigureFn> r{{"fig2b", fig2b}, {"fig3", fig3},   {"fig4a", fig4a},
                                                   {"fig5", fig5},   {"fig6", fig6},   {"fig7", fig7},
                                                   {"fig8", fig8},   {"fig9", fig9},   {"appendix1", appendix1}};
    return r;
}

// Images with thousands of lit pixels (helix circles, grain boundaries) saturate at the default rates.
json dense_image_ae_rates() { return {{"learning_rate", 0.01}, {"finetune_learning_rate", 1e-4}}; }

json ae_defaults() {
    const ae::StackedAEConfig c;
    return {{"hidden", c.hidden_dim},
            {"learning_rate", c.learning_rate},
            {"finetune_learning_rate", c.finetune_learning_rate},
            {"optimizer", ae::to_string(c.optimizer)},
            {"batch_size", c.batch_size},
            {"epochs", {c.epochs_stage1, c.epochs_stage2, c.epochs_finetune}},
            {"ae_seed", 5}};
}

} // namespace

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig2b", "fig3", "fig4a", "fig5", "fig6",
                                              "fig7",  "fig8", "fig9",  "appendix1"};
    return ids;
}

json default_plan(const std::string& id) {
    const EstimatorConfig est;
    json k{{"k_min", est.k_min}, {"k_max", est.k_max}};
    json plan;
    if (id == "fig2b") {
        plan = {{"points", 2000}, {"seed", 11}, {"j", 5}, {"k", 10}, {"max_spread", 0.05}, {"binary_count", 500},
                {"p_list", {1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 3.5, 4.0}}};
    } else if (id == "fig3") {
        plan = {{"points", 2000}, {"seed", 11}, {"manifolds", {"helix", "broken-swissroll", "swissroll"}},
                {"p_list", {1.0, 1.5, 2.0, 3.0, 4.0}}};
        plan.update(k);
    } else if (id == "fig4a") {
        plan = {{"count", 1500}, {"seed", 7}, {"cases", {"2A", "2B", "2C", "2D"}}, {"sigma", 20.0},
                {"quant_scale", 1000}, {"p_list", {1.0, 1.5, 2.0, 3.0, 4.0}}};
        plan.update(k);
    } else if (id == "fig5") {
        const synth::ShapeOptions opt;
        plan = {{"count", 1500}, {"seed", 100}, {"cases", "ABCDEFGHIJ"}, {"size_min", opt.size_min},
                {"size_max", opt.size_max}, {"tolerance", 0.3}, {"p", 1.0}};
        plan.update(k);
    } else if (id == "fig6" || id == "fig7") {
        plan = {{"count", 1000}, {"seed", 21}, {"image_size", 128}, {"mapping", "x,y,R"}, {"bottleneck", 3}};
        plan.update(ae_defaults());
        if (id == "fig7") plan.update(dense_image_ae_rates());
        plan.update(k);
    } else if (id == "fig8") {
        const phasefield::PhaseFieldConfig pf;
        plan = {{"seed", 3}, {"steps", pf.steps}, {"snapshot_every", pf.snapshot_every},
                {"transient_steps", pf.transient_steps}, {"extra_bottlenecks", {2, 3}}};
        plan.update(ae_defaults());
        plan.update(dense_image_ae_rates());
        plan.update(k);
    } else if (id == "fig9") {
        const phasefield::PhaseFieldConfig pf;
        plan = {{"seed", 3}, {"runs", 3}, {"steps", pf.steps}, {"snapshot_every", pf.snapshot_every},
                {"transient_steps", 0}, {"perturbation_amplitude", 0.01}, {"perturbation_seed", 100},
                {"bottleneck", 3}};
        plan.update(ae_defaults());
        plan.update(dense_image_ae_rates());
    } else if (id == "appendix1") {
        plan = {{"count", 3000}, {"seed", 5}, {"image_size", 128}, {"radius_min", 10}, {"radius_max", 30},
                {"modes", {"avoid", "intersect"}}, {"truth", 3.0}};
        plan.update(k);
    } else {
        std::string known;
        for (const auto& f : figure_ids()) known += " " + f;
        throw ValidationError("unknown figure id '" + id + "' (known:" + known + ")");
    }
    return plan;
}

Report run_figure(const std::string& id, const json& overrides, const fs::path& out, const Logger& log) {
    json plan = default_plan(id);
    if (!overrides.is_null()) {
        if (!overrides.is_object()) throw ValidationError("plan must be a JSON object");
        for (const auto& [key, value] : overrides.items()) {
            if (!plan.contains(key)) throw ValidationError("plan key '" + key + "' is not used by " + id);
            plan[key] = value;
        }
    }
    fs::create_directories(out);
    io::write_text_atomic(out / "plan.json", plan.dump(2) + "\n");
    Report rep;
    try {
        rep = registry().at(id)(plan, out, log);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad plan for " + id + ": " + e.what());
    }
    io::write_text_atomic(out / "report.txt", rep.text());
    return rep;
}

} // namespace microdim::experiments
