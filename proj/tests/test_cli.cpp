#include "microdim/cli.hpp"
#include "microdim/datamodel.hpp"
#include "microdim/io.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <sstream>

using namespace microdim;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "microdim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

double summary_value(const std::filesystem::path& file, const std::string& key) {
    std::istringstream in(io::read_file(file));
    std::string k;
    std::string v;
    while (in >> k >> v) {
        if (k == key) return std::stod(v);
    }
    FAIL("key not found: " << key);
    return 0.0;
}

} // namespace

TEST_CASE("generate writes reproducible datasets") {
    testutil::TempDir tmp("cli-gen");
    const auto a = (tmp / "a").string(), b = (tmp / "b").string();
    REQUIRE(run({"generate", "--family", "circles", "--case", "2D", "--count", "30", "--seed", "7", "--out", a}).code == 0);
    REQUIRE(run({"generate", "--family", "circles", "--case", "2D", "--count", "30", "--seed", "7", "--out", b}).code == 0);
    const auto ds = load_dataset(a);
    CHECK(ds.count() == 30);
    CHECK(ds.width == 256);
    CHECK(ds.provenance.params.at("radius") == 58);
    for (const char* f : {"manifest.json", "images.u8", "generator_coords.csv"}) {
        CHECK(io::read_file(tmp / "a" / f) == io::read_file(tmp / "b" / f));
    }

    const auto f = (tmp / "f").string();
    REQUIRE(run({"generate", "--family", "shapes", "--case", "F", "--count", "10", "--out", f}).code == 0);
    CHECK(load_dataset(f).generator_coords.cols == 2);

    // existing output needs --force
    CHECK(run({"generate", "--family", "shapes", "--case", "F", "--count", "10", "--out", f}).code == 1);
    CHECK(run({"generate", "--family", "shapes", "--case", "F", "--count", "12", "--out", f, "--force"}).code == 0);
    CHECK(load_dataset(f).count() == 12);

    CHECK(run({"generate", "--family", "shapes", "--case", "Q", "--out", (tmp / "q").string()}).code == 1);
    CHECK(run({"generate", "--family", "blobs", "--out", (tmp / "q").string()}).code == 1);
    CHECK(run({"generate", "--family", "pointcloud", "--case", "helix", "--count", "50", "--out",
               (tmp / "h").string()}).code == 0);
    CHECK(is_pointcloud_dir(tmp / "h"));
    CHECK(run({"generate", "--family", "phasefield", "--steps", "40", "--snapshot-every", "10", "--transient", "0",
               "--image-size", "32", "--runs", "2", "--perturbation", "0.01", "--out", (tmp / "pf").string()})
              .code == 0);
    CHECK(load_dataset(tmp / "pf").count() == 8);
}

TEST_CASE("estimate and sweep") {
    testutil::TempDir tmp("cli-est");
    const auto d = (tmp / "d").string();
    REQUIRE(run({"generate", "--family", "shapes", "--case", "E", "--count", "200", "--seed", "2", "--out", d}).code == 0);
    REQUIRE(run({"estimate", "--in", d, "--p", "1", "--dedup", "--out", (tmp / "e1").string()}).code == 0);
    REQUIRE(run({"estimate", "--in", d, "--p", "2", "--dedup", "--out", (tmp / "e2").string()}).code == 0);
    const double m1 = summary_value(tmp / "e1" / "summary.txt", "mean");
    const double m2 = summary_value(tmp / "e2" / "summary.txt", "mean");
    CHECK(m2 == doctest::Approx(2.0 * m1).epsilon(1e-9));
    CHECK(std::filesystem::exists(tmp / "e1" / "estimate.csv"));
    CHECK(std::filesystem::exists(tmp / "e1" / "histogram.csv"));

    CHECK(run({"estimate", "--in", d, "--kmin", "30", "--kmax", "20", "--out", (tmp / "bad").string()}).code == 1);
    CHECK(run({"estimate", "--in", (tmp / "nothing").string()}).code == 1);

    const auto h = (tmp / "h").string();
    REQUIRE(run({"generate", "--family", "pointcloud", "--case", "helix", "--count", "1000", "--seed", "3", "--out", h})
                .code == 0);
    REQUIRE(run({"estimate", "--in", h, "--method", "nnreg", "--out", (tmp / "nn").string()}).code == 0);
    CHECK(summary_value(tmp / "nn" / "summary.txt", "mean") == doctest::Approx(1.0).epsilon(0.15));

    REQUIRE(run({"sweep-p", "--in", h, "--p-list", "1,2,4", "--out", (tmp / "sw").string()}).code == 0);
    const auto csv = io::parse_csv(io::read_file(tmp / "sw" / "sweep.csv"));
    CHECK(csv.header == std::vector<std::string>{"p", "mean_mu", "std_mu"});
    CHECK(csv.rows.size() == 3);
    CHECK(std::filesystem::exists(tmp / "sw" / "sweep.svg"));
}

TEST_CASE("plan files fill unset flags") {
    testutil::TempDir tmp("cli-plan");
    io::write_text_atomic(tmp / "plan.json", R"({"family": "shapes", "case": "C", "count": 25, "seed": 4})");
    const auto plan = (tmp / "plan.json").string();
    REQUIRE(run({"generate", "--plan", plan, "--out", (tmp / "a").string()}).code == 0);
    REQUIRE(run({"generate", "--plan", plan, "--count", "9", "--out", (tmp / "b").string()}).code == 0);
    CHECK(load_dataset(tmp / "a").count() == 25);
    CHECK(load_dataset(tmp / "b").count() == 9);
    CHECK(load_dataset(tmp / "b").provenance.seed == 4);

    io::write_text_atomic(tmp / "bad.json", R"({"colour": "red"})");
    CHECK(run({"generate", "--plan", (tmp / "bad.json").string(), "--family", "shapes", "--out",
               (tmp / "c").string()}).code == 1);
    io::write_text_atomic(tmp / "broken.json", "{");
    CHECK(run({"generate", "--plan", (tmp / "broken.json").string(), "--family", "shapes", "--out",
               (tmp / "c").string()}).code == 1);
}

TEST_CASE("train and export") {
    testutil::TempDir tmp("cli-ae");
    const auto d = (tmp / "d").string();
    REQUIRE(run({"generate", "--family", "circles", "--radius", "3", "--image-size", "16", "--count", "40", "--out", d})
                .code == 0);
    const auto m = (tmp / "m").string();
    const auto r = run({"train-ae", "--in", d, "--bottleneck-from", "generator", "--hidden", "12", "--epochs", "3,3,3",
                        "--seed", "1", "--out", m});
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(tmp / "m" / "model.bin"));
    CHECK(io::parse_csv(io::read_file(tmp / "m" / "loss.csv")).rows.size() == 9);
    CHECK(io::parse_csv(io::read_file(tmp / "m" / "latent.csv")).header.size() == 1 + 2 + 2);

    const auto out = (tmp / "x" / "lat.csv").string();
    REQUIRE(run({"export-latent", "--model", m, "--in", d, "--features", "cx", "--out", out}).code == 0);
    CHECK(io::parse_csv(io::read_file(out)).header == std::vector<std::string>{"index", "z1", "z2", "cx"});
    CHECK(std::filesystem::exists(tmp / "x" / "lat.svg"));
    CHECK(run({"export-latent", "--model", m, "--in", d, "--features", "radius", "--out", out, "--force"}).code == 1);
    CHECK(run({"export-latent", "--model", (tmp / "none").string(), "--in", d}).code == 1);

    // a runaway learning rate is a numerical failure
    CHECK(run({"train-ae", "--in", d, "--bottleneck", "2", "--hidden", "12", "--epochs", "3,0,0", "--lr", "1e308", "--optimizer", "adam",
               "--out", (tmp / "m2").string()})
              .code == 2);
}

TEST_CASE("reproduce") {
    testutil::TempDir tmp("cli-rep");
    CHECK(run({"reproduce", "fig99"}).code == 1);
    io::write_text_atomic(tmp / "plan.json", R"({"points": 400, "binary_count": 60, "p_list": [1, 2, 4]})");
    const auto r = run({"reproduce", "fig2b", "--plan", (tmp / "plan.json").string(), "--out", (tmp / "f").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("binary ratio follows") != std::string::npos);
    CHECK(std::filesystem::exists(tmp / "f" / "ratio_curve.csv"));
    CHECK(std::filesystem::exists(tmp / "f" / "report.txt"));
    const auto plan = nlohmann::json::parse(io::read_file(tmp / "f" / "plan.json"));
    CHECK(plan.at("points") == 400);

    io::write_text_atomic(tmp / "bad.json", R"({"nonsense": 1})");
    CHECK(run({"reproduce", "fig2b", "--plan", (tmp / "bad.json").string(), "--out", (tmp / "g").string()}).code == 1);
}
