#include "microdim/datamodel.hpp"
#include "microdim/error.hpp"
#include "microdim/io.hpp"
#include "microdim/random.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <fstream>

using namespace microdim;

namespace {

ImageDataset random_binary(std::size_t count, int size, std::uint64_t seed) {
    ImageDataset ds("rand", size, size, 1);
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        Image img(size, size);
        for (auto& px : img.pixels) px = rng.uniform() < 0.3 ? 1 : 0;
        ds.push_back(img);
    }
    ds.provenance = {"test", {{"density", 0.3}}, seed};
    return ds;
}

} // namespace

TEST_CASE("binary dataset round trip") {
    testutil::TempDir tmp("dm");
    auto ds = random_binary(10, 128, 4);
    ds.generator_coords = RealMatrix(10, 3);
    for (std::size_t i = 0; i < 10; ++i) {
        ds.generator_coords(i, 0) = 0.1 * static_cast<double>(i);
        ds.generator_coords(i, 1) = 1.0 / 3.0 + static_cast<double>(i);
        ds.generator_coords(i, 2) = -7.25e-5 * static_cast<double>(i);
    }
    ds.coord_names = {"a", "b", "c"};
    save_dataset(ds, tmp / "d");
    const auto back = load_dataset(tmp / "d");
    CHECK(back == ds);
    CHECK(back.count() == 10);

    const auto manifest = nlohmann::json::parse(io::read_file(tmp / "d" / "manifest.json"));
    CHECK(manifest.at("count") == 10);
    const auto coords = io::parse_csv(io::read_file(tmp / "d" / "generator_coords.csv"));
    CHECK(coords.header.size() == 4);
    CHECK(coords.rows.size() == 10);
}

TEST_CASE("16-bit dataset round trip") {
    testutil::TempDir tmp("dm16");
    ImageDataset ds("gray", 5, 4, 10);
    Image img(5, 4);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<Pixel>(i * 50);
    ds.push_back(img);
    save_dataset(ds, tmp / "g");
    CHECK(std::filesystem::exists(tmp / "g" / "images.u16"));
    CHECK(load_dataset(tmp / "g") == ds);
}

TEST_CASE("corrupted datasets are rejected") {
    testutil::TempDir tmp("dmbad");
    const auto ds = random_binary(3, 8, 1);
    save_dataset(ds, tmp / "d");
    const auto tensor = tmp / "d" / "images.u8";

    SUBCASE("truncated tensor") {
        auto bytes = io::read_file(tensor);
        bytes.pop_back();
        io::write_binary_atomic(tensor, bytes);
        try {
            load_dataset(tmp / "d");
            FAIL("expected an error");
        } catch (const DatasetError& e) {
            CHECK(e.kind() == DatasetErrorKind::SizeMismatch);
        }
    }
    SUBCASE("pixel above bit depth") {
        auto bytes = io::read_file(tensor);
        bytes[5] = 7;
        io::write_binary_atomic(tensor, bytes);
        try {
            load_dataset(tmp / "d");
            FAIL("expected an error");
        } catch (const DatasetError& e) {
            CHECK(e.kind() == DatasetErrorKind::InvalidPixel);
        }
    }
    SUBCASE("missing directory") { CHECK_THROWS_AS(load_dataset(tmp / "nothing"), ValidationError); }
}

TEST_CASE("validate catches broken invariants") {
    auto ds = random_binary(2, 4, 2);
    CHECK_NOTHROW(ds.validate());
    ds.pixels[0] = 2;
    CHECK_THROWS_AS(ds.validate(), ValidationError);
    ds.pixels[0] = 1;
    ds.generator_coords = RealMatrix(3, 1);
    CHECK_THROWS_AS(ds.validate(), ValidationError);
    CHECK_THROWS_AS(ds.push_back(Image(5, 4)), ValidationError);
}

TEST_CASE("deduplicate keeps first occurrences") {
    ImageDataset ds("d", 2, 2, 1);
    const std::vector<std::vector<Pixel>> pix{{0, 0, 0, 1}, {0, 1, 0, 0}, {1, 1, 0, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}};
    ds.generator_coords = RealMatrix(5, 1);
    for (std::size_t i = 0; i < pix.size(); ++i) {
        Image img(2, 2);
        img.pixels = pix[i];
        ds.push_back(img);
        ds.generator_coords(i, 0) = static_cast<double>(i);
    }
    ds.coord_names = {"i"};
    const auto r = deduplicate(ds);
    CHECK(r.data.count() == 4);
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0] == 3); // 0-based: the fourth image repeats the second
    CHECK(r.data.generator_coords(3, 0) == 4.0);

    const auto distinct = deduplicate(r.data);
    CHECK(distinct.removed.empty());
    CHECK(distinct.data == r.data);
}

TEST_CASE("point cloud round trip and dedup") {
    testutil::TempDir tmp("pc");
    PointCloud c;
    c.points = RealMatrix(4, 2);
    c.points.data = {0.1, 0.2, 3.0, 4.0, 0.1, 0.2, 1e-17, -2.5};
    c.provenance.generator = "hand";
    save_pointcloud(c, tmp / "p");
    CHECK(is_pointcloud_dir(tmp / "p"));
    CHECK(load_pointcloud(tmp / "p") == c);
    const auto r = deduplicate(c);
    CHECK(r.data.count() == 3);
    CHECK(r.removed == std::vector<std::size_t>{2});
}

TEST_CASE("flatten") {
    Image img(2, 2);
    img.pixels = {0, 1, 1, 0};
    CHECK(flatten(img.view(), 1, false) == std::vector<double>{0, 1, 1, 0});
    CHECK(flatten(Image(3, 3).view(), 1, true) == std::vector<double>(9, 0.0));
    Image g(2, 1);
    g.pixels = {255, 51};
    const auto f = flatten(g.view(), 8, true);
    CHECK(f[0] == 1.0);
    CHECK(f[1] == doctest::Approx(0.2));
}

TEST_CASE("csv writer and parser agree") {
    io::CsvWriter w({"a", "b"});
    w.cell(0.1).cell(std::string_view("x")).end_row().cell(std::size_t{3}).cell(-2.5e-300).end_row();
    const auto t = io::parse_csv(w.str());
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(std::stod(t.rows[0][0]) == 0.1);
    CHECK(std::stod(t.rows[1][1]) == -2.5e-300);
}
