#pragma once

#include "microdim/datamodel.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace microdim::synth {

// ---------------------------------------------------------------------------
// Point-cloud manifolds

enum class ManifoldKind { Helix, SwissRoll, BrokenSwissRoll };

ManifoldKind parse_manifold_kind(const std::string& name);
std::string to_string(ManifoldKind kind);

struct ManifoldSpec {
    ManifoldKind kind = ManifoldKind::SwissRoll;
    std::size_t sample_count = 1000;
    std::uint64_t seed = 0;
    std::array<double, 3> translation{62.0, 50.0, 20.0}; ///< swiss-roll offsets (c1, c2, c3)
    double gap_lo = 0.4; ///< broken roll rejects eta1 in (gap_lo, gap_hi)
    double gap_hi = 0.6;
};

/// Helix point for eta in [0, 1]; t = 2*pi*eta.
std::array<double, 3> helix_point(double eta);

/// Swiss-roll point for eta1, eta2 in [0, 1]; t = (3*pi/2)(1 + 2*eta1).
std::array<double, 3> swiss_roll_point(double eta1, double eta2, const std::array<double, 3>& translation);

PointCloud gen_pointcloud(const ManifoldSpec& spec);

// ---------------------------------------------------------------------------
// Rectangles and squares in a matrix

enum class ShapeKind { Square, Rectangle };
enum class Placement { Random, Centerline, Centered };
enum class SizeMode { Varying, Fixed };

struct ShapeCase {
    char id = 'A';
    ShapeKind shape = ShapeKind::Square;
    Placement placement = Placement::Random;
    SizeMode size_mode = SizeMode::Varying;

    /// Free placement coordinates plus free size parameters.
    int expected_dimension() const;
};

/// Cases A..J.
ShapeCase shape_case(char id);

struct ShapeOptions {
    int image_size = 128;
    int size_min = 15; ///< inclusive integer range for varying sizes
    int size_max = 45;
    int fixed_square = 24;
    int fixed_rect_width = 32;
    int fixed_rect_height = 16;
};

ImageDataset gen_shapes(const ShapeCase& shape_case, std::size_t count, const ShapeOptions& options,
                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Circles

enum class BoundaryMode { Avoid, Intersect, Periodic };

BoundaryMode parse_boundary_mode(const std::string& name);
std::string to_string(BoundaryMode mode);

struct CircleSpec {
    int image_size = 256;
    int radius = 24;
    int radius_max = 0; ///< > radius samples radii uniformly from [radius, radius_max]
    BoundaryMode boundary = BoundaryMode::Avoid;

    bool varying_radius() const { return radius_max > radius; }
    int largest_radius() const { return varying_radius() ? radius_max : radius; }
};

/// Constant-radius cases 2A..2D at 256x256 (radii 24, 36, 48, 58).
CircleSpec dataset2_case(const std::string& id);

/// Inclusive range of admissible integer center coordinates for radius r.
std::array<int, 2> center_range(const CircleSpec& spec, int r);

/// Sets pixels with (x-cx)^2 + (y-cy)^2 <= r^2 to `value`; periodic wraps, otherwise clips.
void draw_disc(Image& img, int cx, int cy, int r, Pixel value, bool periodic);

ImageDataset gen_circles(const CircleSpec& spec, std::size_t count, std::uint64_t seed);

struct GaussianBlobResult {
    ImageDataset dataset;
    std::size_t gray_levels = 0; ///< distinct intensities realized across the dataset
};

/// Disc whose intensity is round(quant_scale * exp(-d^2 / (2 sigma^2))), zero beyond the radius.
GaussianBlobResult gen_gaussian_blobs(const CircleSpec& spec, double sigma, int quant_scale, std::size_t count,
                                      std::uint64_t seed);

/// For each of (x, y, R): which cloud axis feeds it. Default {0, 1, 2}.
using CoordinateMapping = std::array<int, 3>;

CoordinateMapping parse_mapping(const std::string& text);

ImageDataset gen_manifold_circles(const PointCloud& cloud, int image_size, const CoordinateMapping& mapping = {0, 1, 2});

} // namespace microdim::synth
