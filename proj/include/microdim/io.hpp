#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace microdim::io {

/// Shortest round-trippable text for a real (at least 9 significant digits).
std::string format_real(double v);

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);
void write_binary_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Builds a CSV document with a header row and LF line endings.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header);

    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::string_view s);
    CsvWriter& end_row();

    const std::string& str() const { return out_; }
    void save(const std::filesystem::path& path) const { write_text_atomic(path, out_); }

private:
    void sep();

    std::string out_;
    bool row_open_ = false;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(std::string_view text);

} // namespace microdim::io
