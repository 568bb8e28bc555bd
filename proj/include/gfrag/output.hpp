#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "gfrag/error.hpp"

namespace gfrag {

/// %.17g for finite values, "inf" / "-inf" / "nan" otherwise.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Comma-separated table with '#' comment lines before the header row.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void comment(const std::string& key, const std::string& value) { comments_.emplace_back(key, value); }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size()) fail(ErrorCode::InvalidArgument, "CSV row width mismatch");
        rows_.push_back(cells);
    }

    void row(std::initializer_list<double> values) {
        std::vector<std::string> cells;
        for (const double v : values) cells.push_back(format_double(v));
        row(cells);
    }

    std::string str() const {
        std::string out;
        for (const auto& [k, v] : comments_) out += "# " + k + ": " + v + "\n";
        append_line(out, columns_);
        for (const auto& r : rows_) append_line(out, r);
        return out;
    }

    std::size_t size() const noexcept { return rows_.size(); }

private:
    static void append_line(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> columns_;
    std::vector<std::pair<std::string, std::string>> comments_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes through a temporary file in the target directory and renames it.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::ConfigError, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) fail(ErrorCode::ConfigError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        fail(ErrorCode::ConfigError, "cannot move output into place: " + path);
    }
}

}  // namespace gfrag
