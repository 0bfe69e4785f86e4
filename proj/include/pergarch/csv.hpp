#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace pergarch::csv {

/// Shortest decimal text that parses back to the same double.
std::string format(double value);
std::string format(std::uint64_t value);

/// Comma-separated writer with `\n` line ends and a fixed header.
class Writer {
public:
    Writer(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
    Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

    void row(const std::vector<std::string>& fields);
    void close();

private:
    std::ofstream out_;
    std::size_t columns_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Numeric CSV with a header line. Throws std::runtime_error on malformed input.
Table read_numeric(const std::filesystem::path& path);

}  // namespace pergarch::csv
