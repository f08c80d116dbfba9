#include "microdim/error.hpp"
#include "microdim/metric.hpp"
#include "microdim/random.hpp"
#include "microdim/synthgen.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace microdim;

namespace {

// plain textbook p-norm, no rescaling
double naive_distance(std::span<const double> a, std::span<const double> b, double p) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(std::abs(a[i] - b[i]), p);
    return std::pow(s, 1.0 / p);
}

RealMatrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
    RealMatrix m(n, d);
    Rng rng(seed);
    for (auto& v : m.data) v = rng.uniform(-3.0, 3.0);
    return m;
}

} // namespace

TEST_CASE("minkowski distance hand values") {
    const std::vector<double> a{0, 0}, b{1, 1};
    CHECK(minkowski_distance(a, b, MinkowskiOrder(1)) == doctest::Approx(2.0));
    CHECK(minkowski_distance(a, b, MinkowskiOrder(2)) == doctest::Approx(1.41421356));
    const std::vector<double> u{1, 1, 0}, v{0, 0, 1};
    for (double p : {1.0, 1.5, 2.0, 3.0, 7.0}) {
        CHECK(minkowski_distance(u, v, MinkowskiOrder(p)) == doctest::Approx(std::pow(3.0, 1.0 / p)).epsilon(1e-12));
    }
    CHECK(minkowski_distance(a, a, MinkowskiOrder(2.5)) == 0.0);
    CHECK_THROWS_AS(MinkowskiOrder(0.5), ValidationError);
}

TEST_CASE("large p does not overflow") {
    const std::vector<double> a{0, 0}, b{1e3, 2e3};
    CHECK(minkowski_distance(a, b, MinkowskiOrder(200)) == doctest::Approx(2e3).epsilon(1e-2));
}

TEST_CASE("metric axioms on random vectors") {
    const auto pts = random_points(40, 6, 9);
    for (double p : {1.0, 1.7, 2.0, 4.0}) {
        const MinkowskiOrder order(p);
        for (std::size_t i = 0; i < 40; i += 3) {
            for (std::size_t j = 1; j < 40; j += 5) {
                const double dij = minkowski_distance(pts.row(i), pts.row(j), order);
                CHECK(dij == doctest::Approx(minkowski_distance(pts.row(j), pts.row(i), order)));
                CHECK(dij == doctest::Approx(naive_distance(pts.row(i), pts.row(j), p)).epsilon(1e-12));
                for (std::size_t k = 2; k < 40; k += 7) {
                    const double dik = minkowski_distance(pts.row(i), pts.row(k), order);
                    const double dkj = minkowski_distance(pts.row(k), pts.row(j), order);
                    CHECK(dij <= dik + dkj + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("knn table on a line") {
    RealMatrix m(4, 2);
    m.data = {0, 0, 1, 0, 2, 0, 4, 0};
    const auto t = knn_table(m, MinkowskiOrder(2), 3);
    CHECK(t.distance(0, 1) == 1.0);
    CHECK(t.distance(0, 2) == 2.0);
    CHECK(t.distance(0, 3) == 4.0);
    CHECK(t.neighbor(0, 3) == 3);
    // point 1 has two neighbors at distance 1; lower index first
    CHECK(t.neighbor(1, 1) == 0);
    CHECK(t.neighbor(1, 2) == 2);
    CHECK(mean_kth_distance(t, 1) == doctest::Approx((1 + 1 + 1 + 2) / 4.0));
    CHECK_THROWS_AS(knn_table(m, MinkowskiOrder(2), 4), ValidationError);
}

TEST_CASE("knn table matches brute force and ignores input order") {
    const auto pts = random_points(60, 5, 3);
    const std::size_t kmax = 7;
    for (double p : {1.0, 2.5}) {
        const auto t = knn_table(pts, MinkowskiOrder(p), kmax);
        for (std::size_t i = 0; i < pts.rows; ++i) {
            std::vector<double> d;
            for (std::size_t j = 0; j < pts.rows; ++j) {
                if (j != i) d.push_back(naive_distance(pts.row(i), pts.row(j), p));
            }
            std::sort(d.begin(), d.end());
            for (std::size_t k = 1; k <= kmax; ++k) CHECK(t.distance(i, k) == doctest::Approx(d[k - 1]).epsilon(1e-12));
        }

        // reversed order: same per-point distances
        RealMatrix rev(pts.rows, pts.cols);
        for (std::size_t i = 0; i < pts.rows; ++i) {
            std::copy(pts.row(i).begin(), pts.row(i).end(), rev.row(pts.rows - 1 - i).begin());
        }
        const auto tr = knn_table(rev, MinkowskiOrder(p), kmax);
        for (std::size_t i = 0; i < pts.rows; ++i) {
            for (std::size_t k = 1; k <= kmax; ++k) CHECK(tr.distance(pts.rows - 1 - i, k) == t.distance(i, k));
        }
    }
}

TEST_CASE("image knn agrees with the dense path") {
    // grayscale blobs exercise the span bookkeeping and the power table
    synth::CircleSpec spec;
    spec.image_size = 40;
    spec.radius = 6;
    spec.boundary = synth::BoundaryMode::Intersect;
    const auto blobs = synth::gen_gaussian_blobs(spec, 4.0, 50, 30, 2).dataset;
    const auto bin = synth::gen_circles(spec, 30, 5);
    for (const ImageDataset* ds : {&blobs, &bin}) {
        RealMatrix dense(ds->count(), ds->pixel_count());
        for (std::size_t i = 0; i < ds->count(); ++i) {
            const auto img = ds->image(i);
            for (std::size_t j = 0; j < ds->pixel_count(); ++j) dense(i, j) = img.pixels[j];
        }
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            const auto a = knn_table(*ds, MinkowskiOrder(p), 5);
            const auto b = knn_table(dense, MinkowskiOrder(p), 5);
            for (std::size_t i = 0; i < a.distances.size(); ++i) {
                CHECK(a.distances[i] == doctest::Approx(b.distances[i]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("binary images: d_p equals d_1^(1/p)") {
    const auto ds = synth::gen_circles(synth::dataset2_case("2A"), 40, 1);
    const auto t1 = knn_table(ds, MinkowskiOrder(1), 6);
    for (double p : {2.0, 3.0, 4.0}) {
        const auto tp = knn_table(ds, MinkowskiOrder(p), 6);
        for (std::size_t i = 0; i < t1.distances.size(); ++i) {
            CHECK(tp.distances[i] == doctest::Approx(std::pow(t1.distances[i], 1.0 / p)).epsilon(1e-12));
        }
    }
}

TEST_CASE("ratio curve") {
    synth::ManifoldSpec spec;
    spec.kind = synth::ManifoldKind::Helix;
    spec.sample_count = 300;
    spec.seed = 1;
    const auto cloud = synth::gen_pointcloud(spec);
    const auto same = ratio_curve(cloud, 4, 4, {1.0, 2.0, 3.0});
    for (const auto& pt : same) CHECK(pt.ratio == doctest::Approx(1.0));
    const auto c = ratio_curve(cloud, 2, 8, {1.0, 2.0});
    const auto t = knn_table(cloud, MinkowskiOrder(2), 8);
    CHECK(c[1].ratio == doctest::Approx(mean_kth_distance(t, 2) / mean_kth_distance(t, 8)));
    CHECK(c[1].ratio < 1.0);
}
