#include "pergarch/csv.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace pergarch::csv {

std::string format(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc{}) {
        throw std::runtime_error("could not format a double");
    }
    return std::string(buf, res.ptr);
}

std::string format(std::uint64_t value) {
    return std::to_string(value);
}

Writer::Writer(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    bool first = true;
    for (auto h : header) {
        if (!first) {
            out_ << ',';
        }
        out_ << h;
        first = false;
    }
    out_ << '\n';
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        out_ << (i ? "," : "") << header[i];
    }
    out_ << '\n';
}

void Writer::row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) {
        throw std::logic_error("csv row has the wrong number of fields");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        out_ << (i ? "," : "") << fields[i];
    }
    out_ << '\n';
}

void Writer::close() {
    out_.close();
}

Table read_numeric(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    Table table;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path.string() + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            table.header.push_back(cell);
        }
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            const std::size_t comma = std::min(line.find(',', start), line.size());
            double v = 0.0;
            const char* b = line.data() + start;
            const char* e = line.data() + comma;
            const auto res = std::from_chars(b, e, v);
            if (res.ec != std::errc{} || res.ptr != e) {
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": non-numeric field '" +
                                         std::string(b, e) + "'");
            }
            row.push_back(v);
            start = comma + 1;
        }
        if (row.size() != table.header.size()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(table.header.size()) + " fields");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace pergarch::csv
