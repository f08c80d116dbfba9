#include "microdim/synthgen.hpp"

#include "microdim/error.hpp"
#include "microdim/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace microdim::synth {

ManifoldKind parse_manifold_kind(const std::string& name) {
    if (name == "helix") return ManifoldKind::Helix;
    if (name == "swissroll") return ManifoldKind::SwissRoll;
    if (name == "broken-swissroll") return ManifoldKind::BrokenSwissRoll;
    throw ValidationError("unknown manifold kind '" + name + "' (expected helix, swissroll, broken-swissroll)");
}

std::string to_string(ManifoldKind kind) {
    switch (kind) {
    case ManifoldKind::Helix: return "helix";
    case ManifoldKind::SwissRoll: return "swissroll";
    case ManifoldKind::BrokenSwissRoll: return "broken-swissroll";
    }
    return "unknown";
}

std::array<double, 3> helix_point(double eta) {
    const double t = 2.0 * std::numbers::pi * eta;
    const double ring = 2.0 + std::cos(8.0 * t);
    return {5.0 * (13.0 + ring * std::cos(t)), 5.0 * (13.0 + ring * std::sin(t)), 9.0 * (4.0 + std::sin(8.0 * t))};
}

std::array<double, 3> swiss_roll_point(double eta1, double eta2, const std::array<double, 3>& translation) {
    const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * eta1);
    return {t * std::cos(t) + translation[0], 30.0 * eta2 + translation[1], t * std::sin(t) + translation[2]};
}

PointCloud gen_pointcloud(const ManifoldSpec& spec) {
    if (spec.sample_count < 2) {
        throw ValidationError("manifold sample_count must be >= 2");
    }
    if (spec.kind == ManifoldKind::BrokenSwissRoll && !(spec.gap_lo < spec.gap_hi && spec.gap_hi - spec.gap_lo < 1.0)) {
        throw ValidationError("broken swiss roll gap must be a proper sub-interval of [0, 1]");
    }
    Rng rng(spec.seed);
    PointCloud cloud;
    cloud.points = RealMatrix(spec.sample_count, 3);
    for (std::size_t i = 0; i < spec.sample_count; ++i) {
        std::array<double, 3> p{};
        switch (spec.kind) {
        case ManifoldKind::Helix:
            p = helix_point(rng.uniform());
            break;
        case ManifoldKind::SwissRoll: {
            const double eta1 = rng.uniform();
            const double eta2 = rng.uniform();
            p = swiss_roll_point(eta1, eta2, spec.translation);
            break;
        }
        case ManifoldKind::BrokenSwissRoll: {
            double eta1 = 0.0;
            do {
                eta1 = rng.uniform();
            } while (eta1 > spec.gap_lo && eta1 < spec.gap_hi);
            const double eta2 = rng.uniform();
            p = swiss_roll_point(eta1, eta2, spec.translation);
            break;
        }
        }
        std::copy(p.begin(), p.end(), cloud.points.row(i).begin());
    }
    cloud.provenance.generator = to_string(spec.kind);
    cloud.provenance.seed = spec.seed;
    cloud.provenance.params = {{"kind", to_string(spec.kind)},
                               {"sample_count", spec.sample_count},
                               {"translation", spec.translation}};
    if (spec.kind == ManifoldKind::BrokenSwissRoll) {
        cloud.provenance.params["gap"] = {spec.gap_lo, spec.gap_hi};
    }
    return cloud;
}

// ---------------------------------------------------------------------------

int ShapeCase::expected_dimension() const {
    int placement_dims = placement == Placement::Random ? 2 : placement == Placement::Centerline ? 1 : 0;
    int size_dims = size_mode == SizeMode::Fixed ? 0 : shape == ShapeKind::Square ? 1 : 2;
    return placement_dims + size_dims;
}

ShapeCase shape_case(char id) {
    using enum ShapeKind;
    using enum Placement;
    using enum SizeMode;
    switch (id) {
    case 'A': return {'A', Square, Random, Varying};
    case 'B': return {'B', Rectangle, Random, Varying};
    case 'C': return {'C', Square, Centerline, Varying};
    case 'D': return {'D', Rectangle, Centerline, Varying};
    case 'E': return {'E', Square, Centered, Varying};
    case 'F': return {'F', Square, Random, Fixed};
    case 'G': return {'G', Rectangle, Random, Fixed};
    case 'H': return {'H', Square, Centerline, Fixed};
    case 'I': return {'I', Rectangle, Centerline, Fixed};
    case 'J': return {'J', Rectangle, Centered, Varying};
    default: break;
    }
    throw ValidationError(std::string("unknown shape case '") + id + "' (expected A..J)");
}

ImageDataset gen_shapes(const ShapeCase& sc, std::size_t count, const ShapeOptions& opt, std::uint64_t seed) {
    const int n = opt.image_size;
    const int largest = sc.size_mode == SizeMode::Varying
                            ? opt.size_max
                            : (sc.shape == ShapeKind::Square ? opt.fixed_square
                                                             : std::max(opt.fixed_rect_width, opt.fixed_rect_height));
    const int smallest = sc.size_mode == SizeMode::Varying
                             ? opt.size_min
                             : (sc.shape == ShapeKind::Square ? opt.fixed_square
                                                              : std::min(opt.fixed_rect_width, opt.fixed_rect_height));
    // one background pixel on every side keeps the shape off the image boundary
    if (smallest < 1 || opt.size_min > opt.size_max || largest + 2 > n) {
        throw ValidationError("shape size range [" + std::to_string(smallest) + ", " + std::to_string(largest) +
                              "] is infeasible for image size " + std::to_string(n));
    }

    ImageDataset ds(std::string("shapes-") + sc.id, n, n, 1);
    const bool random = sc.placement == Placement::Random;
    const bool centerline = sc.placement == Placement::Centerline;
    if (random || centerline) ds.coord_names.push_back("cx");
    if (random) ds.coord_names.push_back("cy");
    if (sc.size_mode == SizeMode::Varying) {
        if (sc.shape == ShapeKind::Square) {
            ds.coord_names.push_back("size");
        } else {
            ds.coord_names.insert(ds.coord_names.end(), {"width", "height"});
        }
    }
    if (!ds.coord_names.empty()) ds.generator_coords = RealMatrix(count, ds.coord_names.size());

    Rng rng(seed);
    ds.pixels.reserve(count * ds.pixel_count());
    for (std::size_t i = 0; i < count; ++i) {
        int w = 0, h = 0;
        if (sc.size_mode == SizeMode::Varying) {
            w = static_cast<int>(rng.uniform_int(opt.size_min, opt.size_max));
            h = sc.shape == ShapeKind::Square ? w : static_cast<int>(rng.uniform_int(opt.size_min, opt.size_max));
        } else if (sc.shape == ShapeKind::Square) {
            w = h = opt.fixed_square;
        } else {
            w = opt.fixed_rect_width;
            h = opt.fixed_rect_height;
        }
        const int x0 = sc.placement == Placement::Centered ? (n - w) / 2 : static_cast<int>(rng.uniform_int(1, n - 1 - w));
        const int y0 = random ? static_cast<int>(rng.uniform_int(1, n - 1 - h)) : (n - h) / 2;

        Image img(n, n);
        for (int y = y0; y < y0 + h; ++y) {
            for (int x = x0; x < x0 + w; ++x) img.at(x, y) = 1;
        }
        ds.push_back(img);

        if (ds.has_coords()) {
            auto row = ds.generator_coords.row(i);
            std::size_t c = 0;
            if (random || centerline) row[c++] = x0 + (w - 1) / 2.0;
            if (random) row[c++] = y0 + (h - 1) / 2.0;
            if (sc.size_mode == SizeMode::Varying) {
                row[c++] = w;
                if (sc.shape == ShapeKind::Rectangle) row[c++] = h;
            }
        }
    }

    ds.provenance.generator = "shapes";
    ds.provenance.seed = seed;
    ds.provenance.params = {{"case", std::string(1, sc.id)},
                            {"shape", sc.shape == ShapeKind::Square ? "square" : "rectangle"},
                            {"placement", random ? "random" : centerline ? "centerline" : "centered"},
                            {"size_mode", sc.size_mode == SizeMode::Varying ? "varying" : "fixed"},
                            {"expected_dimension", sc.expected_dimension()},
                            {"image_size", n},
                            {"size_range", {opt.size_min, opt.size_max}},
                            {"fixed_square", opt.fixed_square},
                            {"fixed_rect", {opt.fixed_rect_width, opt.fixed_rect_height}},
                            {"count", count}};
    return ds;
}

// ---------------------------------------------------------------------------

BoundaryMode parse_boundary_mode(const std::string& name) {
    if (name == "avoid") return BoundaryMode::Avoid;
    if (name == "intersect") return BoundaryMode::Intersect;
    if (name == "periodic") return BoundaryMode::Periodic;
    throw ValidationError("unknown boundary mode '" + name + "' (expected avoid, intersect, periodic)");
}

std::string to_string(BoundaryMode mode) {
    switch (mode) {
    case BoundaryMode::Avoid: return "avoid";
    case BoundaryMode::Intersect: return "intersect";
    case BoundaryMode::Periodic: return "periodic";
    }
    return "unknown";
}

CircleSpec dataset2_case(const std::string& id) {
    static const std::array<std::pair<const char*, int>, 4> radii{{{"2A", 24}, {"2B", 36}, {"2C", 48}, {"2D", 58}}};
    for (const auto& [name, r] : radii) {
        if (id == name) return CircleSpec{256, r, 0, BoundaryMode::Avoid};
    }
    throw ValidationError("unknown circle case '" + id + "' (expected 2A, 2B, 2C, 2D)");
}

std::array<int, 2> center_range(const CircleSpec& spec, int r) {
    if (spec.boundary == BoundaryMode::Avoid) return {r + 1, spec.image_size - 2 - r};
    return {0, spec.image_size - 1};
}

void draw_disc(Image& img, int cx, int cy, int r, Pixel value, bool periodic) {
    const long long r2 = static_cast<long long>(r) * r;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            if (static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy > r2) continue;
            int x = cx + dx, y = cy + dy;
            if (periodic) {
                x = ((x % img.width) + img.width) % img.width;
                y = ((y % img.height) + img.height) % img.height;
            } else if (x < 0 || y < 0 || x >= img.width || y >= img.height) {
                continue;
            }
            img.at(x, y) = value;
        }
    }
}

namespace {

void check_circle_spec(const CircleSpec& spec) {
    if (spec.radius < 1 || spec.image_size < 3) {
        throw ValidationError("circle radius must be >= 1 and image size >= 3");
    }
    if (spec.radius_max != 0 && spec.radius_max < spec.radius) {
        throw ValidationError("radius_max must be 0 or >= radius");
    }
    auto range = center_range(spec, spec.largest_radius());
    if (range[0] > range[1]) {
        throw ValidationError("radius " + std::to_string(spec.largest_radius()) + " does not fit inside a " +
                              std::to_string(spec.image_size) + " pixel image without touching the boundary");
    }
}

struct CircleDraw {
    int cx, cy, r;
};

// Shared sampler so circles and Gaussian blobs with equal seeds get equal placements.
CircleDraw sample_circle(const CircleSpec& spec, Rng& rng) {
    const int r = spec.varying_radius() ? static_cast<int>(rng.uniform_int(spec.radius, spec.radius_max)) : spec.radius;
    const auto range = center_range(spec, r);
    const int cx = static_cast<int>(rng.uniform_int(range[0], range[1]));
    const int cy = static_cast<int>(rng.uniform_int(range[0], range[1]));
    return {cx, cy, r};
}

void init_circle_coords(ImageDataset& ds, const CircleSpec& spec, std::size_t count) {
    ds.coord_names = {"cx", "cy"};
    if (spec.varying_radius()) ds.coord_names.push_back("radius");
    ds.generator_coords = RealMatrix(count, ds.coord_names.size());
}

void record_circle(ImageDataset& ds, std::size_t i, const CircleDraw& c) {
    auto row = ds.generator_coords.row(i);
    row[0] = c.cx;
    row[1] = c.cy;
    if (row.size() > 2) row[2] = c.r;
}

nlohmann::json circle_params(const CircleSpec& spec, std::size_t count) {
    return {{"image_size", spec.image_size},
            {"radius", spec.radius},
            {"radius_max", spec.radius_max},
            {"boundary", to_string(spec.boundary)},
            {"count", count}};
}

} // namespace

ImageDataset gen_circles(const CircleSpec& spec, std::size_t count, std::uint64_t seed) {
    check_circle_spec(spec);
    ImageDataset ds("circles-r" + std::to_string(spec.radius) + "-" + to_string(spec.boundary), spec.image_size,
                    spec.image_size, 1);
    init_circle_coords(ds, spec, count);
    ds.pixels.reserve(count * ds.pixel_count());
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const auto c = sample_circle(spec, rng);
        Image img(spec.image_size, spec.image_size);
        draw_disc(img, c.cx, c.cy, c.r, 1, spec.boundary == BoundaryMode::Periodic);
        ds.push_back(img);
        record_circle(ds, i, c);
    }
    ds.provenance = {"circles", circle_params(spec, count), seed};
    return ds;
}

GaussianBlobResult gen_gaussian_blobs(const CircleSpec& spec, double sigma, int quant_scale, std::size_t count,
                                      std::uint64_t seed) {
    check_circle_spec(spec);
    if (!(sigma > 0.0)) throw ValidationError("gaussian sigma must be > 0");
    if (quant_scale < 1 || quant_scale > 65535) throw ValidationError("quant_scale must lie in [1, 65535]");

    int bit_depth = 1;
    while ((1 << bit_depth) - 1 < quant_scale) ++bit_depth;

    GaussianBlobResult result;
    auto& ds = result.dataset;
    ds = ImageDataset("gauss-r" + std::to_string(spec.radius), spec.image_size, spec.image_size, bit_depth);
    init_circle_coords(ds, spec, count);
    ds.pixels.reserve(count * ds.pixel_count());

    const int rmax = spec.largest_radius();
    std::vector<Pixel> profile(static_cast<std::size_t>(rmax) * rmax + 1);
    for (std::size_t d2 = 0; d2 < profile.size(); ++d2) {
        profile[d2] = static_cast<Pixel>(std::lround(quant_scale * std::exp(-static_cast<double>(d2) / (2.0 * sigma * sigma))));
    }

    std::set<Pixel> levels;
    Rng rng(seed);
    const bool periodic = spec.boundary == BoundaryMode::Periodic;
    for (std::size_t i = 0; i < count; ++i) {
        const auto c = sample_circle(spec, rng);
        Image img(spec.image_size, spec.image_size);
        for (int dy = -c.r; dy <= c.r; ++dy) {
            for (int dx = -c.r; dx <= c.r; ++dx) {
                const int d2 = dx * dx + dy * dy;
                if (d2 > c.r * c.r) continue;
                int x = c.cx + dx, y = c.cy + dy;
                if (periodic) {
                    x = ((x % img.width) + img.width) % img.width;
                    y = ((y % img.height) + img.height) % img.height;
                } else if (x < 0 || y < 0 || x >= img.width || y >= img.height) {
                    continue;
                }
                img.at(x, y) = profile[static_cast<std::size_t>(d2)];
            }
        }
        levels.insert(img.pixels.begin(), img.pixels.end());
        ds.push_back(img);
        record_circle(ds, i, c);
    }
    result.gray_levels = levels.size();
    auto params = circle_params(spec, count);
    params["sigma"] = sigma;
    params["quant_scale"] = quant_scale;
    params["gray_levels"] = result.gray_levels;
    ds.provenance = {"gauss", params, seed};
    return result;
}

CoordinateMapping parse_mapping(const std::string& text) {
    // text names the role of each cloud axis in order, e.g. "x,y,R" or "R,x,y"
    CoordinateMapping mapping{-1, -1, -1};
    std::stringstream ss(text);
    std::string token;
    int axis = 0;
    while (std::getline(ss, token, ',')) {
        int target = token == "x" ? 0 : token == "y" ? 1 : (token == "R" || token == "r") ? 2 : -1;
        if (target < 0 || axis > 2 || mapping[target] != -1) {
            throw ValidationError("mapping must be a permutation of x,y,R; got '" + text + "'");
        }
        mapping[target] = axis++;
    }
    if (axis != 3) throw ValidationError("mapping must name three axes; got '" + text + "'");
    return mapping;
}

ImageDataset gen_manifold_circles(const PointCloud& cloud, int image_size, const CoordinateMapping& mapping) {
    if (cloud.dim() != 3) throw ValidationError("manifold circles need a 3-D point cloud");
    {
        auto sorted = mapping;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != CoordinateMapping{0, 1, 2}) throw ValidationError("coordinate mapping is not a permutation");
    }
    ImageDataset ds(cloud.provenance.generator + "-circles", image_size, image_size, 1);
    ds.generator_coords = cloud.points;
    ds.coord_names.assign(3, "");
    ds.coord_names[static_cast<std::size_t>(mapping[0])] = "x";
    ds.coord_names[static_cast<std::size_t>(mapping[1])] = "y";
    ds.coord_names[static_cast<std::size_t>(mapping[2])] = "radius";
    ds.pixels.reserve(cloud.count() * ds.pixel_count());

    for (std::size_t i = 0; i < cloud.count(); ++i) {
        const auto p = cloud.points.row(i);
        const auto cx = std::lround(p[static_cast<std::size_t>(mapping[0])]);
        const auto cy = std::lround(p[static_cast<std::size_t>(mapping[1])]);
        const auto r = std::lround(p[static_cast<std::size_t>(mapping[2])]);
        if (r < 1 || cx - r < 1 || cy - r < 1 || cx + r > image_size - 2 || cy + r > image_size - 2) {
            throw ValidationError("cloud point " + std::to_string(i) + " maps to circle (x=" + std::to_string(cx) +
                                  ", y=" + std::to_string(cy) + ", R=" + std::to_string(r) + ") outside a " +
                                  std::to_string(image_size) + " pixel image");
        }
        Image img(image_size, image_size);
        draw_disc(img, static_cast<int>(cx), static_cast<int>(cy), static_cast<int>(r), 1, false);
        ds.push_back(img);
    }
    ds.provenance.generator = "manifold-circles";
    ds.provenance.seed = cloud.provenance.seed;
    ds.provenance.params = {{"cloud", cloud.provenance.generator},
                            {"cloud_params", cloud.provenance.params},
                            {"image_size", image_size},
                            {"mapping", mapping}};
    return ds;
}

} // namespace microdim::synth
