#include "microdim/datamodel.hpp"

#include "microdim/error.hpp"
#include "microdim/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string_view>
#include <unordered_map>

namespace microdim {

namespace fs = std::filesystem;

void ImageDataset::push_back(const Image& img) {
    if (img.width != width || img.height != height) {
        throw ValidationError("image shape " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                              " does not match dataset " + std::to_string(width) + "x" + std::to_string(height));
    }
    pixels.insert(pixels.end(), img.pixels.begin(), img.pixels.end());
}

void ImageDataset::validate() const {
    if (width <= 0 || height <= 0) {
        throw ValidationError("dataset '" + name + "' has non-positive image size");
    }
    if (bit_depth < 1 || bit_depth > 16) {
        throw ValidationError("dataset '" + name + "' has bit depth outside [1, 16]");
    }
    if (pixels.size() % pixel_count() != 0) {
        throw ValidationError("dataset '" + name + "' pixel buffer is not a whole number of images");
    }
    const Pixel maxv = max_value();
    if (std::any_of(pixels.begin(), pixels.end(), [maxv](Pixel v) { return v > maxv; })) {
        throw ValidationError("dataset '" + name + "' has pixel values above 2^bit_depth - 1");
    }
    if (has_coords() && generator_coords.rows != count()) {
        throw ValidationError("dataset '" + name + "' has " + std::to_string(generator_coords.rows) +
                              " coordinate rows for " + std::to_string(count()) + " images");
    }
    if (!coord_names.empty() && coord_names.size() != generator_coords.cols) {
        throw ValidationError("dataset '" + name + "' coordinate names do not match coordinate width");
    }
}

void PointCloud::validate() const {
    if (points.cols < 1) {
        throw ValidationError("point cloud must have dim >= 1");
    }
    if (std::any_of(points.data.begin(), points.data.end(), [](double v) { return !std::isfinite(v); })) {
        throw ValidationError("point cloud contains non-finite coordinates");
    }
}

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kCoords = "generator_coords.csv";
constexpr const char* kPoints = "points.csv";

const char* tensor_name(int bit_depth) { return bit_depth <= 8 ? "images.u8" : "images.u16"; }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw DatasetError(DatasetErrorKind::Io, dir.string(), "cannot create directory");
    }
}

nlohmann::json read_manifest(const fs::path& dir) {
    const auto path = dir / kManifest;
    if (!fs::exists(path)) {
        throw DatasetError(DatasetErrorKind::MissingFile, path.string(), "manifest not found");
    }
    try {
        return nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(DatasetErrorKind::Malformed, path.string(), e.what());
    }
}

template <class T>
T field(const nlohmann::json& j, const char* key, const fs::path& path) {
    if (!j.contains(key)) {
        throw DatasetError(DatasetErrorKind::Malformed, path.string(), std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(DatasetErrorKind::Malformed, path.string(),
                           std::string("bad field '") + key + "': " + e.what());
    }
}

double parse_real(const std::string& s, const fs::path& path) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DatasetError(DatasetErrorKind::Malformed, path.string(), "bad real '" + s + "'");
    }
    return v;
}

std::string matrix_csv(const RealMatrix& m, const std::string& prefix) {
    std::vector<std::string> header{"index"};
    for (std::size_t c = 0; c < m.cols; ++c) header.push_back(prefix + std::to_string(c + 1));
    io::CsvWriter csv(header);
    for (std::size_t r = 0; r < m.rows; ++r) {
        csv.cell(r);
        for (double v : m.row(r)) csv.cell(v);
        csv.end_row();
    }
    return csv.str();
}

RealMatrix read_matrix_csv(const fs::path& path) {
    auto table = io::parse_csv(io::read_file(path));
    if (table.header.empty() || table.header.front() != "index") {
        throw DatasetError(DatasetErrorKind::Malformed, path.string(), "expected header starting with 'index'");
    }
    RealMatrix m(table.rows.size(), table.header.size() - 1);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) {
            throw DatasetError(DatasetErrorKind::Malformed, path.string(), "ragged row " + std::to_string(r));
        }
        for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = parse_real(row[c + 1], path);
    }
    return m;
}

nlohmann::json provenance_json(const Provenance& p) {
    return {{"generator", p.generator}, {"generator_params", p.params}, {"seed", p.seed}};
}

} // namespace

void save_dataset(const ImageDataset& ds, const fs::path& dir) {
    ds.validate();
    ensure_dir(dir);

    nlohmann::json manifest = provenance_json(ds.provenance);
    manifest["name"] = ds.name;
    manifest["width"] = ds.width;
    manifest["height"] = ds.height;
    manifest["bit_depth"] = ds.bit_depth;
    manifest["count"] = ds.count();
    if (!ds.coord_names.empty()) manifest["coord_names"] = ds.coord_names;

    std::string bytes;
    if (ds.bit_depth <= 8) {
        bytes.resize(ds.pixels.size());
        std::transform(ds.pixels.begin(), ds.pixels.end(), bytes.begin(),
                       [](Pixel v) { return static_cast<char>(static_cast<unsigned char>(v)); });
    } else {
        bytes.resize(ds.pixels.size() * 2);
        for (std::size_t i = 0; i < ds.pixels.size(); ++i) {
            bytes[2 * i] = static_cast<char>(ds.pixels[i] & 0xFF);
            bytes[2 * i + 1] = static_cast<char>(ds.pixels[i] >> 8);
        }
    }
    io::write_binary_atomic(dir / tensor_name(ds.bit_depth), bytes);

    std::error_code ec;
    if (ds.has_coords()) {
        io::write_text_atomic(dir / kCoords, matrix_csv(ds.generator_coords, "g"));
    } else {
        fs::remove(dir / kCoords, ec);
    }
    io::write_text_atomic(dir / kManifest, manifest.dump(2) + "\n");
}

ImageDataset load_dataset(const fs::path& dir) {
    const auto manifest_path = dir / kManifest;
    const auto manifest = read_manifest(dir);
    if (manifest.value("kind", std::string("images")) != "images") {
        throw DatasetError(DatasetErrorKind::Malformed, manifest_path.string(), "not an image dataset");
    }

    ImageDataset ds(field<std::string>(manifest, "name", manifest_path), field<int>(manifest, "width", manifest_path),
                    field<int>(manifest, "height", manifest_path), field<int>(manifest, "bit_depth", manifest_path));
    const auto count = field<std::size_t>(manifest, "count", manifest_path);
    ds.provenance.generator = field<std::string>(manifest, "generator", manifest_path);
    ds.provenance.params = field<nlohmann::json>(manifest, "generator_params", manifest_path);
    ds.provenance.seed = field<std::uint64_t>(manifest, "seed", manifest_path);
    if (manifest.contains("coord_names")) {
        ds.coord_names = field<std::vector<std::string>>(manifest, "coord_names", manifest_path);
    }
    if (ds.width <= 0 || ds.height <= 0 || ds.bit_depth < 1 || ds.bit_depth > 16) {
        throw DatasetError(DatasetErrorKind::Malformed, manifest_path.string(), "invalid shape or bit depth");
    }

    const auto tensor_path = dir / tensor_name(ds.bit_depth);
    if (!fs::exists(tensor_path)) {
        throw DatasetError(DatasetErrorKind::MissingFile, tensor_path.string(), "pixel tensor not found");
    }
    const auto bytes = io::read_file(tensor_path);
    const std::size_t bytes_per_pixel = ds.bit_depth <= 8 ? 1 : 2;
    const std::size_t expected = count * ds.pixel_count() * bytes_per_pixel;
    if (bytes.size() != expected) {
        throw DatasetError(DatasetErrorKind::SizeMismatch, tensor_path.string(),
                           "expected " + std::to_string(expected) + " bytes, found " + std::to_string(bytes.size()));
    }
    ds.pixels.resize(count * ds.pixel_count());
    for (std::size_t i = 0; i < ds.pixels.size(); ++i) {
        if (bytes_per_pixel == 1) {
            ds.pixels[i] = static_cast<unsigned char>(bytes[i]);
        } else {
            ds.pixels[i] = static_cast<Pixel>(static_cast<unsigned char>(bytes[2 * i]) |
                                              (static_cast<unsigned char>(bytes[2 * i + 1]) << 8));
        }
    }
    const Pixel maxv = ds.max_value();
    for (std::size_t i = 0; i < ds.pixels.size(); ++i) {
        if (ds.pixels[i] > maxv) {
            throw DatasetError(DatasetErrorKind::InvalidPixel, tensor_path.string(),
                               "value " + std::to_string(ds.pixels[i]) + " at offset " + std::to_string(i) +
                                   " exceeds bit depth " + std::to_string(ds.bit_depth));
        }
    }

    const auto coords_path = dir / kCoords;
    if (fs::exists(coords_path)) {
        ds.generator_coords = read_matrix_csv(coords_path);
        if (ds.generator_coords.rows != count) {
            throw DatasetError(DatasetErrorKind::SizeMismatch, coords_path.string(),
                               std::to_string(ds.generator_coords.rows) + " rows for " + std::to_string(count) +
                                   " images");
        }
    }
    if (!ds.coord_names.empty() && ds.coord_names.size() != ds.generator_coords.cols) {
        throw DatasetError(DatasetErrorKind::Malformed, manifest_path.string(), "coord_names width mismatch");
    }
    return ds;
}

void save_pointcloud(const PointCloud& cloud, const fs::path& dir) {
    cloud.validate();
    ensure_dir(dir);
    nlohmann::json manifest = provenance_json(cloud.provenance);
    manifest["kind"] = "pointcloud";
    manifest["name"] = cloud.provenance.generator;
    manifest["dim"] = cloud.dim();
    manifest["count"] = cloud.count();
    io::write_text_atomic(dir / kPoints, matrix_csv(cloud.points, "x"));
    io::write_text_atomic(dir / kManifest, manifest.dump(2) + "\n");
}

PointCloud load_pointcloud(const fs::path& dir) {
    const auto manifest_path = dir / kManifest;
    const auto manifest = read_manifest(dir);
    if (manifest.value("kind", std::string()) != "pointcloud") {
        throw DatasetError(DatasetErrorKind::Malformed, manifest_path.string(), "not a point cloud");
    }
    PointCloud cloud;
    cloud.provenance.generator = field<std::string>(manifest, "generator", manifest_path);
    cloud.provenance.params = field<nlohmann::json>(manifest, "generator_params", manifest_path);
    cloud.provenance.seed = field<std::uint64_t>(manifest, "seed", manifest_path);
    const auto points_path = dir / kPoints;
    if (!fs::exists(points_path)) {
        throw DatasetError(DatasetErrorKind::MissingFile, points_path.string(), "points not found");
    }
    cloud.points = read_matrix_csv(points_path);
    if (cloud.points.rows != field<std::size_t>(manifest, "count", manifest_path) ||
        cloud.points.cols != field<std::size_t>(manifest, "dim", manifest_path)) {
        throw DatasetError(DatasetErrorKind::SizeMismatch, points_path.string(), "shape disagrees with manifest");
    }
    cloud.validate();
    return cloud;
}

bool is_pointcloud_dir(const fs::path& dir) {
    return read_manifest(dir).value("kind", std::string()) == "pointcloud";
}

namespace {

// FNV-1a over raw bytes
std::uint64_t hash_bytes(const void* data, std::size_t n) {
    auto p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

template <class T>
std::vector<std::size_t> duplicate_rows(const std::vector<T>& flat, std::size_t row_len) {
    const std::size_t rows = row_len == 0 ? 0 : flat.size() / row_len;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
    std::vector<std::size_t> removed;
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = flat.data() + r * row_len;
        auto& bucket = seen[hash_bytes(row, row_len * sizeof(T))];
        bool dup = std::any_of(bucket.begin(), bucket.end(), [&](std::size_t other) {
            return std::equal(row, row + row_len, flat.data() + other * row_len);
        });
        if (dup) {
            removed.push_back(r);
        } else {
            bucket.push_back(r);
        }
    }
    return removed;
}

template <class T>
std::vector<T> drop_rows(const std::vector<T>& flat, std::size_t row_len, const std::vector<std::size_t>& removed) {
    std::vector<T> out;
    out.reserve(flat.size() - removed.size() * row_len);
    std::size_t next = 0;
    const std::size_t rows = row_len == 0 ? 0 : flat.size() / row_len;
    for (std::size_t r = 0; r < rows; ++r) {
        if (next < removed.size() && removed[next] == r) {
            ++next;
            continue;
        }
        out.insert(out.end(), flat.begin() + r * row_len, flat.begin() + (r + 1) * row_len);
    }
    return out;
}

RealMatrix drop_rows(const RealMatrix& m, const std::vector<std::size_t>& removed) {
    RealMatrix out;
    out.cols = m.cols;
    out.data = drop_rows(m.data, m.cols, removed);
    out.rows = m.rows - removed.size();
    return out;
}

} // namespace

DedupResult<ImageDataset> deduplicate(const ImageDataset& ds) {
    DedupResult<ImageDataset> result;
    result.removed = duplicate_rows(ds.pixels, ds.pixel_count());
    result.data = ds;
    if (result.removed.empty()) return result;
    result.data.pixels = drop_rows(ds.pixels, ds.pixel_count(), result.removed);
    if (ds.has_coords()) result.data.generator_coords = drop_rows(ds.generator_coords, result.removed);
    return result;
}

DedupResult<PointCloud> deduplicate(const PointCloud& cloud) {
    DedupResult<PointCloud> result;
    result.removed = duplicate_rows(cloud.points.data, cloud.points.cols);
    result.data = cloud;
    if (!result.removed.empty()) result.data.points = drop_rows(cloud.points, result.removed);
    return result;
}

std::vector<double> flatten(ImageView img, int bit_depth, bool normalize) {
    const double scale = normalize ? 1.0 / static_cast<double>((1u << bit_depth) - 1u) : 1.0;
    std::vector<double> out(img.pixels.size());
    std::transform(img.pixels.begin(), img.pixels.end(), out.begin(),
                   [scale](Pixel v) { return static_cast<double>(v) * scale; });
    return out;
}

} // namespace microdim
