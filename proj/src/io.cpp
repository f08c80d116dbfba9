#include "microdim/io.hpp"

#include "microdim/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace microdim::io {

std::string format_real(double v) {
    // shortest representation that round-trips; always >= 9 digits of precision
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

void write_atomic(const std::filesystem::path& path, std::string_view bytes, std::ios::openmode mode) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, mode | std::ios::trunc);
        if (!out) {
            throw DatasetError(DatasetErrorKind::Io, tmp.string(), "cannot open for writing");
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw DatasetError(DatasetErrorKind::Io, tmp.string(), "write failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw DatasetError(DatasetErrorKind::Io, path.string(), "rename failed: " + ec.message());
    }
}

} // namespace

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
    write_atomic(path, content, std::ios::out);
}

void write_binary_atomic(const std::filesystem::path& path, std::string_view bytes) {
    write_atomic(path, bytes, std::ios::out | std::ios::binary);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError(DatasetErrorKind::MissingFile, path.string(), "cannot open");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ += ',';
        out_ += header[i];
    }
    out_ += '\n';
}

void CsvWriter::sep() {
    if (row_open_) out_ += ',';
    row_open_ = true;
}

CsvWriter& CsvWriter::cell(double v) {
    sep();
    out_ += format_real(v);
    return *this;
}

CsvWriter& CsvWriter::cell(long long v) {
    sep();
    out_ += std::to_string(v);
    return *this;
}

CsvWriter& CsvWriter::cell(std::string_view s) {
    sep();
    out_ += s;
    return *this;
}

CsvWriter& CsvWriter::end_row() {
    out_ += '\n';
    row_open_ = false;
    return *this;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    bool first = true;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        auto line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto comma = line.find(',', start);
            fields.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

} // namespace microdim::io
