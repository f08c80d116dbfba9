// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if all pass.
// Usage: acceptance [--only 1,4,10] [--out DIR]

#include "microdim/autoencoder.hpp"
#include "microdim/estimator.hpp"
#include "microdim/experiments.hpp"
#include "microdim/random.hpp"
#include "microdim/synthgen.hpp"

#include "gradient_oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

using namespace microdim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

fs::path g_out;

Outcome unit_ball() {
    double worst = 0.0;
    for (int mu = 1; mu <= 10; ++mu) {
        const double exact = std::pow(std::numbers::pi, mu / 2.0) / std::tgamma(mu / 2.0 + 1.0);
        worst = std::max(worst, std::abs(unit_ball_volume(mu, MinkowskiOrder(2)) - exact) / exact);
    }
    bool exact_ok = unit_ball_volume(2, MinkowskiOrder(1)) == 2.0;
    for (double p : {1.0, 1.5, 2.0, 3.0, 4.0, 10.0}) exact_ok &= unit_ball_volume(1, MinkowskiOrder(p)) == 2.0;
    return {worst < 1e-12 && exact_ok, "max rel err " + sci(worst) + (exact_ok ? ", exact cases ok" : ", exact cases FAIL")};
}

Outcome poisson() {
    int ok = 0, total = 0;
    double worst_z = 0.0;
    std::uint64_t seed = 1000;
    for (int mu : {1, 2, 3}) {
        for (double p : {1.0, 2.0, 3.0}) {
            for (std::size_t k : {1u, 2u, 5u}) {
                const MinkowskiOrder order(p);
                const double expected = expected_kth_distance(PoissonModel::from_density(mu, 1.0, order), k);
                const auto mc = simulate_poisson_knn(mu, 1.0, order, k, 100000, seed++);
                const double z = std::abs(mc.mean - expected) / mc.std_error;
                worst_z = std::max(worst_z, z);
                ++total;
                ok += z < 3.0;
            }
        }
    }
    return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " within 3 SE, worst |z| " + fmt(worst_z, 2)};
}

Outcome binary_scaling() {
    const auto ds = deduplicate(synth::gen_circles(synth::dataset2_case("2D"), 1500, 7)).data;
    EstimatorConfig cfg;
    const auto m1 = mle_point_estimates(knn_table(ds, MinkowskiOrder(1), cfg.k_max), cfg);
    double worst = 0.0;
    std::size_t nan_mismatch = 0;
    for (double p : {2.0, 3.0, 4.0}) {
        cfg.p = p;
        const auto mp = mle_point_estimates(knn_table(ds, MinkowskiOrder(p), cfg.k_max), cfg);
        for (std::size_t i = 0; i < m1.values.size(); ++i) {
            if (std::isnan(m1.values[i]) != std::isnan(mp.values[i])) ++nan_mismatch;
            if (std::isnan(m1.values[i])) continue;
            worst = std::max(worst, std::abs(mp.values[i] / (p * m1.values[i]) - 1.0));
        }
    }
    return {worst < 1e-9 && nan_mismatch == 0,
            std::to_string(ds.count()) + " images, max rel dev " + sci(worst)};
}

Outcome fig3() {
    const std::vector<double> ps{1, 1.5, 2, 3, 4};
    std::string detail;
    bool pass = true;
    for (auto [kind, lo, hi] : {std::tuple{synth::ManifoldKind::Helix, 0.85, 1.15},
                                std::tuple{synth::ManifoldKind::BrokenSwissRoll, 1.8, 2.2}}) {
        synth::ManifoldSpec spec;
        spec.kind = kind;
        spec.sample_count = 2000;
        spec.seed = 11;
        detail += synth::to_string(kind) + ":";
        for (const auto& e : sweep_minkowski(synth::gen_pointcloud(spec), ps, EstimatorConfig{})) {
            pass &= e.summary.mean >= lo && e.summary.mean <= hi;
            detail += " " + fmt(e.summary.mean, 3);
        }
        detail += "  ";
    }
    return {pass, detail};
}

Outcome fig4a() {
    EstimatorConfig cfg;
    bool pass = true;
    std::string detail = "binary p=1:";
    std::vector<double> gaps;
    for (const char* id : {"2A", "2B", "2C", "2D"}) {
        const auto spec = synth::dataset2_case(id);
        const double b = estimate_dimension(synth::gen_circles(spec, 1500, 7), cfg).mean;
        pass &= b >= 1.8 && b <= 2.2;
        detail += " " + fmt(b, 3);
        const auto g = synth::gen_gaussian_blobs(spec, 20.0, 1000, 1500, 7);
        const auto sw = sweep_minkowski(g.dataset, {1.0, 2.0}, cfg);
        gaps.push_back(std::abs(sw[1].summary.mean - sw[0].summary.mean));
    }
    detail += "; gray |mu2-mu1|:";
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        detail += " " + fmt(gaps[i], 3);
        if (i > 0) pass &= gaps[i] < gaps[i - 1];
    }
    return {pass, detail};
}

Outcome fig5() {
    bool pass = true;
    std::string detail;
    for (const char id : std::string("ABCDEFGHIJ")) {
        const auto sc = synth::shape_case(id);
        const double m = estimate_dimension(synth::gen_shapes(sc, 1500, {}, 100 + static_cast<std::uint64_t>(id)),
                                            EstimatorConfig{})
                             .mean;
        pass &= std::abs(m - sc.expected_dimension()) <= 0.3;
        detail += std::string(1, id) + "=" + fmt(m, 2) + "(" + std::to_string(sc.expected_dimension()) + ") ";
    }
    return {pass, detail};
}

Outcome fig2b() {
    synth::ManifoldSpec spec;
    spec.sample_count = 2000;
    spec.seed = 11;
    std::vector<double> ps;
    for (double p = 1.0; p <= 4.0 + 1e-9; p += 0.25) ps.push_back(p);
    const auto curve = ratio_curve(synth::gen_pointcloud(spec), 5, 10, ps);
    double lo = INFINITY, hi = -INFINITY, sum = 0.0;
    for (const auto& pt : curve) {
        lo = std::min(lo, pt.ratio);
        hi = std::max(hi, pt.ratio);
        sum += pt.ratio;
    }
    const double spread = (hi - lo) / (sum / static_cast<double>(curve.size()));
    return {spread < 0.05, "relative spread " + fmt(100 * spread, 3) + "% over p in [1,4]"};
}

Outcome appendix1() {
    synth::CircleSpec spec;
    spec.image_size = 128;
    spec.radius = 10;
    spec.radius_max = 30;
    spec.boundary = synth::BoundaryMode::Avoid;
    const auto avoid = estimate_dimension(synth::gen_circles(spec, 3000, 5), EstimatorConfig{});
    spec.boundary = synth::BoundaryMode::Intersect;
    const auto inter = estimate_dimension(synth::gen_circles(spec, 3000, 5), EstimatorConfig{});
    const bool pass = inter.point_std > avoid.point_std && std::abs(avoid.mean - 3.0) <= 0.3 &&
                      std::abs(inter.mean - 3.0) <= 0.3;
    return {pass, "avoid mean " + fmt(avoid.mean, 3) + " std " + fmt(avoid.point_std, 3) + "; intersect mean " +
                      fmt(inter.mean, 3) + " std " + fmt(inter.point_std, 3)};
}

Outcome gradient_check() {
    ae::StackedAEConfig c;
    c.input_dim = 6;
    c.hidden_dim = 4;
    c.bottleneck_dim = 2;
    c.seed = 3;
    auto net = ae::init_network(c);
    Rng rng(17);
    for (auto& l : net.layers) {
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = rng.uniform(-0.5, 0.5);
    }
    ae::Matrix batch(6, 4);
    for (Eigen::Index j = 0; j < batch.cols(); ++j) {
        for (Eigen::Index i = 0; i < 6; ++i) batch(i, j) = rng.uniform();
    }
    const double worst = oracle::gradient_check_error(net, batch);
    return {worst < 1e-5, "max rel err " + sci(worst)};
}

// Runs a canned figure and keeps the checks whose names contain one of `keys`.
Outcome figure_checks(const std::string& id, const nlohmann::json& plan, const std::vector<std::string>& keys) {
    const auto rep = experiments::run_figure(id, plan, g_out / id, [](const std::string& m) { std::cerr << "  " << m << "\n"; });
    bool pass = true;
    std::string detail;
    int used = 0;
    for (const auto& c : rep.checks) {
        const bool wanted = std::any_of(keys.begin(), keys.end(), [&](const std::string& k) { return c.name.find(k) != std::string::npos; });
        if (!wanted) continue;
        ++used;
        pass &= c.pass;
        detail += (detail.empty() ? "" : "; ") + c.name + " = " + c.observed;
    }
    return {pass && used > 0, id + ": " + detail};
}

Outcome figs6_7() {
    const auto a = figure_checks("fig6", nullptr, {"after affine alignment"});
    const auto b = figure_checks("fig7", nullptr, {"latent cloud"});
    return {a.pass && b.pass, a.detail + " | " + b.detail};
}

Outcome fig8() { return figure_checks("fig8", {{"extra_bottlenecks", nlohmann::json::array()}}, {"Spearman", "trajectory images"}); }

Outcome fig9() { return figure_checks("fig9", nullptr, {"distance from shared start"}); }

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    g_out = fs::temp_directory_path() / "microdim-acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
        } else if (a == "--out" && i + 1 < argc) {
            g_out = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--only 1,2,...] [--out DIR]\n";
            return 2;
        }
    }
    fs::create_directories(g_out);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"unit-ball volume closed forms", unit_ball},
        {"Poisson k-NN distance: closed form vs simulation", poisson},
        {"binary images: MLE matrix scales with p", binary_scaling},
        {"point clouds: MLE flat in p (helix ~1, broken roll ~2)", fig3},
        {"circles: binary ~2 at p=1, grayscale p-gap shrinks", fig4a},
        {"shape cases A-J within 0.3 of expected", fig5},
        {"swiss roll: T5/T10 ratio independent of p", fig2b},
        {"boundary-intersecting circles have broader estimates", appendix1},
        {"autoencoder gradient check", gradient_check},
        {"autoencoder latent spaces (swiss roll, helix)", figs6_7},
        {"phase field: 1-d latent tracks time, MLE ~1", fig8},
        {"phase field: branches move away from shared start", fig9},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(n)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << criteria[i].first << " -- " << o.detail << " ("
                  << fmt(secs, 1) << " s)" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
