#include "persist/io.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "persist/errors.hpp"

namespace persist {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        if (text == "inf") return std::numeric_limits<double>::infinity();
        if (text == "-inf") return -std::numeric_limits<double>::infinity();
        throw DataError("not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::int64_t parse_int(std::string_view text) {
    std::int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw DataError("not an integer: '" + std::string(text) + "'");
    }
    return v;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw ConfigError("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw DataError("CSV has no column '" + std::string(name) + "'");
}

std::string CsvTable::meta(std::string_view key) const {
    for (const auto& [k, v] : metadata) {
        if (k == key) return v;
    }
    return {};
}

namespace {

void append_row(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += ',';
        out += fields[i];
    }
    out += '\n';
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::string to_csv(const CsvTable& table) {
    std::string out;
    for (const auto& [k, v] : table.metadata) {
        out += "# " + k + "=" + v + "\n";
    }
    append_row(out, table.columns);
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) throw DataError("CSV row width does not match the header");
        append_row(out, row);
    }
    return out;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    bool header = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            line.remove_prefix(1);
            if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                table.metadata.emplace_back(std::string(line), "");
            } else {
                table.metadata.emplace_back(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
            }
            continue;
        }
        auto fields = split(line);
        if (!header) {
            table.columns = std::move(fields);
            header = true;
        } else {
            if (fields.size() != table.columns.size()) throw DataError("CSV row width does not match the header");
            table.rows.push_back(std::move(fields));
        }
    }
    if (!header) throw DataError("CSV has no header row");
    return table;
}

}  // namespace persist
