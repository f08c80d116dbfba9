#include "microdim/cli.hpp"

#include "microdim/autoencoder.hpp"
#include "microdim/error.hpp"
#include "microdim/estimator.hpp"
#include "microdim/experiments.hpp"
#include "microdim/io.hpp"
#include "microdim/phasefield.hpp"
#include "microdim/stats.hpp"
#include "microdim/svg.hpp"
#include "microdim/synthgen.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>

namespace microdim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags shared by every subcommand.
struct Common {
    std::uint64_t seed = 0;
    std::string plan;
    bool force = false;
};

struct GenerateArgs {
    std::string family, case_id, out, mapping = "x,y,R", boundary;
    std::size_t count = 0;
    int image_size = 0, radius = 0, radius_max = 0, size_min = 0, size_max = 0;
    double sigma = 20.0;
    int quant = 1000;
    int runs = 1, steps = 0, snapshot_every = 0, transient = -1;
    double perturbation = 0.0;
};

struct EstimateArgs {
    std::string in, out, method = "mle";
    double p = 1.0;
    std::size_t kmin = EstimatorConfig{}.k_min, kmax = EstimatorConfig{}.k_max;
    bool dedup = false;
    std::vector<double> p_list{1.0, 1.5, 2.0, 3.0, 4.0};
};

struct TrainArgs {
    std::string in, out, bottleneck_from, optimizer;
    std::size_t bottleneck = 0, hidden = 0, batch = 0;
    double lr = 0.0;
    double finetune_lr = 0.0;
    std::vector<int> epochs;
};

struct ExportArgs {
    std::string model, in, out;
    std::vector<std::string> features;
};

struct ReproduceArgs {
    std::string figure, out;
};

// An output directory must not already hold files unless --force is given.
void claim_output_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir) && !fs::is_directory(dir)) {
        throw ValidationError("output path " + dir.string() + " exists and is not a directory");
    }
    if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
        throw ValidationError("output directory " + dir.string() + " is not empty; pass --force to overwrite");
    }
    fs::create_directories(dir);
}

std::string json_to_flag_value(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string s;
        for (const auto& e : v) s += (s.empty() ? "" : ",") + json_to_flag_value(e);
        return s;
    }
    return v.dump();
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
        return a == flag || a.rfind(flag + "=", 0) == 0;
    });
}

std::optional<std::string> flag_value(const std::vector<std::string>& args, const std::string& flag) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind(flag + "=", 0) == 0) return args[i].substr(flag.size() + 1);
    }
    return std::nullopt;
}

json read_plan(const std::string& path) {
    json plan;
    try {
        plan = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("plan file " + path + " is not valid JSON: " + e.what());
    }
    if (!plan.is_object()) throw ValidationError("plan file " + path + " must hold a JSON object");
    return plan;
}

// Plan keys become flags unless the command line already sets them. For `reproduce`,
// keys that are not flags of that command are returned as experiment overrides.
json merge_plan(std::vector<std::string>& args, const CLI::App& app) {
    const auto path = flag_value(args, "--plan");
    if (!path) return nullptr;
    const json plan = read_plan(*path);
    const std::string sub = args.size() > 1 ? args[1] : "";
    const CLI::App* cmd = nullptr;
    for (const auto* s : app.get_subcommands([](const CLI::App*) { return true; })) {
        if (s->get_name() == sub) cmd = s;
    }
    json leftover = json::object();
    for (const auto& [key, value] : plan.items()) {
        const std::string flag = "--" + key;
        const bool known = cmd != nullptr && cmd->get_option_no_throw(flag) != nullptr;
        if (!known) {
            if (sub == "reproduce") {
                leftover[key] = value;
                continue;
            }
            throw ValidationError("plan key '" + key + "' is not a flag of '" + sub + "'");
        }
        if (has_flag(args, flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else {
            args.push_back(flag);
            args.push_back(json_to_flag_value(value));
        }
    }
    return leftover;
}

// ---------------------------------------------------------------------------

void cmd_generate(const GenerateArgs& a, const Common& c, std::ostream& out) {
    claim_output_dir(a.out, c.force);
    const std::string& fam = a.family;
    if (fam == "pointcloud") {
        synth::ManifoldSpec spec;
        spec.kind = synth::parse_manifold_kind(a.case_id.empty() ? "swissroll" : a.case_id);
        spec.sample_count = a.count ? a.count : 2000;
        spec.seed = c.seed;
        const auto cloud = synth::gen_pointcloud(spec);
        save_pointcloud(cloud, a.out);
        out << "wrote " << cloud.count() << " points (" << synth::to_string(spec.kind) << ") to " << a.out << "\n";
        return;
    }

    ImageDataset ds;
    if (fam == "shapes") {
        if (a.case_id.size() != 1) throw ValidationError("shapes need --case A..J");
        synth::ShapeOptions opt;
        if (a.image_size) opt.image_size = a.image_size;
        if (a.size_min) opt.size_min = a.size_min;
        if (a.size_max) opt.size_max = a.size_max;
        ds = synth::gen_shapes(synth::shape_case(a.case_id[0]), a.count ? a.count : 1500, opt, c.seed);
    } else if (fam == "circles" || fam == "gauss") {
        synth::CircleSpec spec = a.case_id.empty() ? synth::CircleSpec{} : synth::dataset2_case(a.case_id);
        if (a.image_size) spec.image_size = a.image_size;
        if (a.radius) spec.radius = a.radius;
        if (a.radius_max) spec.radius_max = a.radius_max;
        if (!a.boundary.empty()) spec.boundary = synth::parse_boundary_mode(a.boundary);
        const std::size_t n = a.count ? a.count : 1500;
        if (fam == "circles") {
            ds = synth::gen_circles(spec, n, c.seed);
        } else {
            auto r = synth::gen_gaussian_blobs(spec, a.sigma, a.quant, n, c.seed);
            out << "gray levels: " << r.gray_levels << "\n";
            ds = std::move(r.dataset);
        }
    } else if (fam == "swissroll-circles" || fam == "helix-circles") {
        synth::ManifoldSpec spec;
        spec.kind = fam == "helix-circles" ? synth::ManifoldKind::Helix : synth::ManifoldKind::SwissRoll;
        spec.sample_count = a.count ? a.count : 1000;
        spec.seed = c.seed;
        ds = synth::gen_manifold_circles(synth::gen_pointcloud(spec), a.image_size ? a.image_size : 128,
                                         synth::parse_mapping(a.mapping));
    } else if (fam == "phasefield") {
        phasefield::PhaseFieldConfig pf;
        pf.seed = c.seed;
        if (a.steps) pf.steps = a.steps;
        if (a.snapshot_every) pf.snapshot_every = a.snapshot_every;
        if (a.transient >= 0) pf.transient_steps = a.transient;
        if (a.image_size) pf.grid = a.image_size;
        pf.perturbation_amplitude = a.perturbation;
        pf.perturbation_seed = c.seed + 1;
        ds = a.runs > 1 ? phasefield::run_trajectories(pf, a.runs) : phasefield::run_trajectory(pf).images;
    } else {
        throw ValidationError("unknown family '" + fam + "'");
    }
    save_dataset(ds, a.out);
    out << "wrote " << ds.count() << " images " << ds.width << "x" << ds.height << " (" << ds.name << ") to " << a.out
        << "\n";
}

template <class Data>
Data maybe_dedup(const Data& data, bool dedup, std::ostream& err) {
    auto r = deduplicate(data);
    if (dedup) {
        if (!r.removed.empty()) err << "removed " << r.removed.size() << " duplicates\n";
        return std::move(r.data);
    }
    if (!r.removed.empty()) {
        err << "warning: " << r.removed.size() << " duplicates present; pass --dedup to drop them\n";
    }
    return data;
}

template <class Data>
void estimate_on(const Data& data, const EstimateArgs& a, const Common& c, std::ostream& out) {
    EstimatorConfig cfg;
    cfg.p = a.p;
    cfg.k_min = a.kmin;
    cfg.k_max = a.kmax;
    cfg.validate(data.count());
    const auto table = knn_table(data, MinkowskiOrder(a.p), cfg.k_max);
    const fs::path dir = a.out.empty() ? fs::path(a.in + "-estimate") : fs::path(a.out);
    claim_output_dir(dir, c.force);
    if (a.method == "nnreg") {
        const double mu = nn_regression_estimate(table, cfg);
        const std::string text = "method nnreg\np " + io::format_real(a.p) + "\nk_min " + std::to_string(a.kmin) +
                                 "\nk_max " + std::to_string(a.kmax) + "\nmean " + io::format_real(mu) + "\n";
        io::write_text_atomic(dir / "summary.txt", text);
        out << text;
        return;
    }
    const auto matrix = mle_point_estimates(table, cfg);
    const auto s = summarize(matrix, cfg.bin_width);
    write_estimate_csv(matrix, dir / "estimate.csv");
    write_histogram_csv(s.histogram, dir / "histogram.csv");
    std::vector<double> counts(s.histogram.counts.begin(), s.histogram.counts.end());
    io::write_text_atomic(dir / "histogram.svg",
                          svg::histogram(s.histogram.edges, counts, {"per-point MLE", "dimension", "points"}));
    const std::string text = format_summary(s);
    io::write_text_atomic(dir / "summary.txt", text);
    out << text;
}

void cmd_estimate(const EstimateArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
    if (a.method != "mle" && a.method != "nnreg") throw ValidationError("--method must be mle or nnreg");
    if (is_pointcloud_dir(a.in)) {
        estimate_on(maybe_dedup(load_pointcloud(a.in), a.dedup, err), a, c, out);
    } else {
        estimate_on(maybe_dedup(load_dataset(a.in), a.dedup, err), a, c, out);
    }
}

void cmd_sweep(const EstimateArgs& a, const Common& c, std::ostream& out) {
    EstimatorConfig cfg;
    cfg.k_min = a.kmin;
    cfg.k_max = a.kmax;
    const auto sweep = is_pointcloud_dir(a.in) ? sweep_minkowski(load_pointcloud(a.in), a.p_list, cfg)
                                               : sweep_minkowski(load_dataset(a.in), a.p_list, cfg);
    const fs::path dir = a.out.empty() ? fs::path(a.in + "-sweep") : fs::path(a.out);
    claim_output_dir(dir, c.force);
    write_sweep_csv(sweep, dir / "sweep.csv");
    svg::Series s{fs::path(a.in).filename().string(), {}, {}};
    for (const auto& e : sweep) {
        s.x.push_back(e.p);
        s.y.push_back(e.summary.mean);
        out << "p " << io::format_real(e.p) << "  mean " << io::format_real(e.summary.mean) << "  std "
            << io::format_real(e.summary.std) << "\n";
    }
    io::write_text_atomic(dir / "sweep.svg", svg::line_plot({s}, {"MLE dimension vs p", "p", "mean dimension"}));
}

void write_latent_artifacts(const ae::LatentTable& t, const fs::path& csv_path) {
    ae::write_latent_csv(t, csv_path);
    const auto& z = t.latent;
    std::vector<double> x = stats::column(z, 0), y, color;
    std::string xl = "z1", yl = "z2";
    if (z.cols > 1) {
        y = stats::column(z, 1);
    } else if (t.features.cols > 0) {
        y = x;
        x = stats::column(t.features, 0);
        xl = t.feature_names[0];
        yl = "z1";
    } else {
        y.assign(z.rows, 0.0);
    }
    if (z.cols > 2) {
        color = stats::column(z, 2);
    } else if (t.features.cols > 0) {
        color = stats::column(t.features, 0);
    }
    auto svg_path = csv_path;
    svg_path.replace_extension(".svg");
    io::write_text_atomic(svg_path, svg::scatter(x, y, color, {"latent space", xl, yl}));
}

void cmd_train(const TrainArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
    const auto ds = load_dataset(a.in);
    ae::StackedAEConfig cfg;
    cfg.seed = c.seed;
    if (a.hidden) cfg.hidden_dim = a.hidden;
    if (a.batch) cfg.batch_size = a.batch;
    if (a.lr > 0) cfg.learning_rate = a.lr;
    if (a.finetune_lr > 0) cfg.finetune_learning_rate = a.finetune_lr;
    if (!a.optimizer.empty()) cfg.optimizer = ae::parse_optimizer(a.optimizer);
    if (!a.epochs.empty()) {
        if (a.epochs.size() != 3) throw ValidationError("--epochs needs three comma-separated values");
        cfg.epochs_stage1 = a.epochs[0];
        cfg.epochs_stage2 = a.epochs[1];
        cfg.epochs_finetune = a.epochs[2];
    }
    if (a.bottleneck && !a.bottleneck_from.empty()) {
        throw ValidationError("give either --bottleneck or --bottleneck-from, not both");
    }
    if (a.bottleneck) {
        cfg.bottleneck_dim = a.bottleneck;
    } else if (a.bottleneck_from == "generator") {
        if (!ds.has_coords()) throw ValidationError("dataset has no generator coordinates");
        cfg.bottleneck_dim = ds.generator_coords.cols;
    } else if (a.bottleneck_from == "mle") {
        const double mu = estimate_dimension(ds, EstimatorConfig{}).mean;
        cfg.bottleneck_dim = static_cast<std::size_t>(std::max(1.0, std::round(mu)));
        err << "MLE dimension " << io::format_real(mu) << " -> bottleneck " << cfg.bottleneck_dim << "\n";
    } else if (!a.bottleneck_from.empty()) {
        throw ValidationError("--bottleneck-from must be mle or generator");
    }

    claim_output_dir(a.out, c.force);
    const auto net = ae::train_stacked(ds, cfg, [&](const ae::LossRecord& r) {
        if (r.epoch % 50 == 0) err << ae::to_string(r.stage) << " epoch " << r.epoch << " loss " << r.loss << "\n";
    });
    const fs::path dir = a.out;
    ae::save_model(net, dir / "model.bin");
    ae::write_loss_csv(net.history, dir / "loss.csv");
    svg::Series s{"loss", {}, {}};
    for (std::size_t i = 0; i < net.history.size(); ++i) {
        s.x.push_back(static_cast<double>(i + 1));
        s.y.push_back(net.history[i].loss);
    }
    io::write_text_atomic(dir / "loss.svg", svg::line_plot({s}, {"training loss", "epoch (all stages)", "loss"}));
    write_latent_artifacts(ae::encode_dataset(net, ds, ds.coord_names), dir / "latent.csv");
    out << "trained " << ds.count() << " images, bottleneck " << cfg.bottleneck_dim << ", final loss "
        << io::format_real(net.history.back().loss) << "; model in " << (dir / "model.bin").string() << "\n";
}

void cmd_export(const ExportArgs& a, const Common& c, std::ostream& out) {
    fs::path model = a.model;
    if (fs::is_directory(model)) model /= "model.bin";
    const auto net = ae::load_model(model);
    const auto ds = load_dataset(a.in);
    const auto table = ae::encode_dataset(net, ds, a.features);
    const fs::path path = a.out.empty() ? model.parent_path() / "exported_latent.csv" : fs::path(a.out);
    if (fs::exists(path) && !c.force) throw ValidationError(path.string() + " exists; pass --force to overwrite");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_latent_artifacts(table, path);
    out << "wrote " << table.latent.rows << " latent rows to " << path.string() << "\n";
}

void cmd_reproduce(const ReproduceArgs& a, const Common& c, bool seed_given, json overrides, std::ostream& out,
                   std::ostream& err) {
    const fs::path dir = a.out.empty() ? fs::path("reproduce-" + a.figure) : fs::path(a.out);
    if (overrides.is_null()) overrides = json::object();
    if (seed_given) {
        if (!experiments::default_plan(a.figure).contains("seed")) {
            throw ValidationError(a.figure + " has no seed to override");
        }
        overrides["seed"] = c.seed;
    }
    claim_output_dir(dir, c.force);
    const auto rep = experiments::run_figure(a.figure, overrides, dir, [&](const std::string& m) { err << m << "\n"; });
    out << rep.text();
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Intrinsic dimension estimation and state-variable discovery for image datasets", "microdim"};
    app.require_subcommand(1);
    Common common;
    GenerateArgs gen;
    EstimateArgs est;
    TrainArgs train;
    ExportArgs exp;
    ReproduceArgs rep;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "random seed");
        sub->add_option("--plan", common.plan, "JSON file of flag values; command-line flags win");
        sub->add_flag("--force", common.force, "allow writing into a non-empty output location");
    };

    auto* g = app.add_subcommand("generate", "generate a synthetic dataset");
    g->add_option("--family", gen.family, "shapes|circles|gauss|swissroll-circles|helix-circles|pointcloud|phasefield")
        ->required()
        ->check(CLI::IsMember(
            {"shapes", "circles", "gauss", "swissroll-circles", "helix-circles", "pointcloud", "phasefield"}));
    g->add_option("--case", gen.case_id, "A..J for shapes, 2A..2D for circles/gauss, manifold for pointcloud");
    g->add_option("--count", gen.count, "number of images or points");
    g->add_option("--out", gen.out, "output directory")->required();
    g->add_option("--image-size", gen.image_size, "image edge length (grid size for phasefield)");
    g->add_option("--radius", gen.radius, "circle radius");
    g->add_option("--radius-max", gen.radius_max, "upper radius for varying circles");
    g->add_option("--boundary", gen.boundary, "avoid|intersect|periodic");
    g->add_option("--size-min", gen.size_min, "smallest varying shape size");
    g->add_option("--size-max", gen.size_max, "largest varying shape size");
    g->add_option("--sigma", gen.sigma, "gaussian blob width");
    g->add_option("--quant", gen.quant, "gray-level quantization scale");
    g->add_option("--mapping", gen.mapping, "cloud axes feeding x,y,R, e.g. x,y,R or z,x,y");
    g->add_option("--runs", gen.runs, "phase-field runs sharing one initial state");
    g->add_option("--steps", gen.steps, "phase-field steps after the transient");
    g->add_option("--snapshot-every", gen.snapshot_every, "phase-field snapshot interval");
    g->add_option("--transient", gen.transient, "phase-field steps discarded before the first snapshot");
    g->add_option("--perturbation", gen.perturbation, "per-run noise amplitude after snapshot 0");
    add_common(g);

    auto add_estimator_flags = [&](CLI::App* sub) {
        sub->add_option("--in", est.in, "dataset or point-cloud directory")->required();
        sub->add_option("--out", est.out, "output directory");
        sub->add_option("--kmin", est.kmin, "smallest k averaged");
        sub->add_option("--kmax", est.kmax, "largest k averaged");
    };
    auto* e = app.add_subcommand("estimate", "estimate intrinsic dimension");
    add_estimator_flags(e);
    e->add_option("--p", est.p, "Minkowski order");
    e->add_option("--method", est.method, "mle|nnreg");
    e->add_flag("--dedup", est.dedup, "drop pixel-identical duplicates first");
    add_common(e);

    auto* sw = app.add_subcommand("sweep-p", "MLE dimension across Minkowski orders");
    add_estimator_flags(sw);
    sw->add_option("--p-list", est.p_list, "comma-separated orders")->delimiter(',');
    add_common(sw);

    auto* t = app.add_subcommand("train-ae", "train a stacked autoencoder");
    t->add_option("--in", train.in, "dataset directory")->required();
    t->add_option("--out", train.out, "model directory")->required();
    t->add_option("--bottleneck", train.bottleneck, "latent dimension");
    t->add_option("--bottleneck-from", train.bottleneck_from, "mle|generator");
    t->add_option("--hidden", train.hidden, "hidden layer width");
    t->add_option("--lr", train.lr, "pretraining learning rate");
    t->add_option("--finetune-lr", train.finetune_lr, "fine-tuning learning rate");
    t->add_option("--batch", train.batch, "minibatch size");
    t->add_option("--optimizer", train.optimizer, "momentum|adam");
    t->add_option("--epochs", train.epochs, "stage1,stage2,finetune epochs")->delimiter(',');
    add_common(t);

    auto* x = app.add_subcommand("export-latent", "encode a dataset with a trained model");
    x->add_option("--model", exp.model, "model directory or file")->required();
    x->add_option("--in", exp.in, "dataset directory")->required();
    x->add_option("--out", exp.out, "latent CSV path");
    x->add_option("--features", exp.features, "generator coordinates to attach")->delimiter(',');
    add_common(x);

    auto* r = app.add_subcommand("reproduce", "run a canned figure pipeline");
    std::string ids;
    for (const auto& id : experiments::figure_ids()) ids += (ids.empty() ? "" : "|") + id;
    r->add_option("figure", rep.figure, ids)->required()->check(CLI::IsMember(experiments::figure_ids()));
    r->add_option("--out", rep.out, "output directory");
    add_common(r);

    std::vector<std::string> args(argv, argv + argc);
    try {
        const json overrides = merge_plan(args, app);
        std::vector<const char*> cargs;
        for (const auto& s : args) cargs.push_back(s.c_str());
        try {
            app.parse(static_cast<int>(cargs.size()), cargs.data());
        } catch (const CLI::ParseError& pe) {
            const int code = app.exit(pe, out, err);
            return code == 0 ? kSuccess : kValidation;
        }

        if (g->parsed()) cmd_generate(gen, common, out);
        if (e->parsed()) cmd_estimate(est, common, out, err);
        if (sw->parsed()) cmd_sweep(est, common, out);
        if (t->parsed()) cmd_train(train, common, out, err);
        if (x->parsed()) cmd_export(exp, common, out);
        if (r->parsed()) cmd_reproduce(rep, common, r->get_option("--seed")->count() > 0, overrides, out, err);
        return kSuccess;
    } catch (const NumericalError& ex) {
        err << "numerical error: " << ex.what() << "\n";
        return kNumerical;
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return kValidation;
    } catch (const fs::filesystem_error& ex) {
        err << "error: " << ex.what() << "\n";
        return kValidation;
    }
}

} // namespace microdim::cli
