#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

/**
 * @file datamodel.hpp
 *
 * @brief Portable representations of image datasets and point clouds.
 *
 * An image dataset is a stack of equally sized single-channel images stored
 * image-major and row-major in one contiguous buffer. Datasets with a bit depth
 * of at most 8 are written as one byte per pixel (`images.u8`); deeper
 * datasets (quantized grayscale) use two little-endian bytes (`images.u16`).
 */

namespace microdim {

using Pixel = std::uint16_t;

/// Dense row-major matrix of reals.
struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    bool empty() const { return rows == 0; }

    friend bool operator==(const RealMatrix&, const RealMatrix&) = default;
};

/// Where a dataset came from: generator name, its parameters, and the seed.
struct Provenance {
    std::string generator;
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t seed = 0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Non-owning view of one image inside a dataset.
struct ImageView {
    int width = 0;
    int height = 0;
    std::span<const Pixel> pixels;

    Pixel at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// A single image, row-major; `at(x, y)` addresses column x of row y.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Pixel> pixels;

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

    Pixel& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    Pixel at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    ImageView view() const { return {width, height, pixels}; }

    friend bool operator==(const Image&, const Image&) = default;
};

struct ImageDataset {
    std::string name;
    int width = 0;
    int height = 0;
    int bit_depth = 1;
    std::vector<Pixel> pixels; ///< count x height x width
    RealMatrix generator_coords; ///< empty, or one row per image
    std::vector<std::string> coord_names;
    Provenance provenance;

    ImageDataset() = default;
    ImageDataset(std::string n, int w, int h, int depth)
        : name(std::move(n)), width(w), height(h), bit_depth(depth) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t count() const { return pixel_count() == 0 ? 0 : pixels.size() / pixel_count(); }
    bool has_coords() const { return !generator_coords.empty(); }
    Pixel max_value() const { return static_cast<Pixel>((1u << bit_depth) - 1u); }

    ImageView image(std::size_t i) const {
        return {width, height, std::span<const Pixel>(pixels).subspan(i * pixel_count(), pixel_count())};
    }

    /// Appends an image; its shape must match the dataset.
    void push_back(const Image& img);

    /// Throws ValidationError if any invariant is broken.
    void validate() const;

    friend bool operator==(const ImageDataset&, const ImageDataset&) = default;
};

struct PointCloud {
    RealMatrix points;
    Provenance provenance;

    std::size_t count() const { return points.rows; }
    std::size_t dim() const { return points.cols; }

    void validate() const;

    friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

void save_dataset(const ImageDataset& ds, const std::filesystem::path& dir);
ImageDataset load_dataset(const std::filesystem::path& dir);

void save_pointcloud(const PointCloud& cloud, const std::filesystem::path& dir);
PointCloud load_pointcloud(const std::filesystem::path& dir);

/// True if `dir` holds a point cloud rather than an image dataset.
bool is_pointcloud_dir(const std::filesystem::path& dir);

template <class Data>
struct DedupResult {
    Data data;
    std::vector<std::size_t> removed; ///< 0-based indices into the input
};

/// Removes exact duplicates, keeping the first occurrence.
DedupResult<ImageDataset> deduplicate(const ImageDataset& ds);
DedupResult<PointCloud> deduplicate(const PointCloud& cloud);

/// Row-major flattening; with `normalize` values are divided by 2^bit_depth - 1.
std::vector<double> flatten(ImageView img, int bit_depth, bool normalize);

} // namespace microdim
