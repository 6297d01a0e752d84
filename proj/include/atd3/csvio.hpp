#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace atd3::csv {

// Shortest round-trip formatting so that emitted CSVs are bit-reproducible
// and parse back to the identical double.
inline std::string fmt(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("csv: to_chars failed");
    return std::string(buf, p);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error("csv: bad number '" + std::string(s) + "'");
    return v;
}

inline long parse_long(std::string_view s) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error("csv: bad integer '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split_line(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline Table read_table(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("csv: cannot open " + file.string());
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: empty file " + file.string());
    t.header = split_line(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_line(line));
        if (t.rows.back().size() != t.header.size())
            throw std::runtime_error("csv: ragged row in " + file.string());
    }
    return t;
}

}  // namespace atd3::csv
