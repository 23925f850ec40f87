#include "slowfast/io.hpp"

#include <openssl/evp.h>

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace slowfast::io {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    return fmt::format("{:.17g}", v);
}

double parse_num(const std::string& s) {
    if (s == "inf" || s == "+inf" || s == "Infinity") return kInf;
    if (s == "-inf" || s == "-Infinity") return -kInf;
    if (s == "nan" || s == "NA" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("not a number: '{}'", s));
    }
    if (used != s.size()) throw ConfigError(fmt::format("not a number: '{}'", s));
    return v;
}

std::string sha256_hex(const std::string& data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header)
    : os_(os), width_(header.size()) {
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os_ << ',';
        os_ << cells[i];
    }
    os_ << '\n';
}

void CsvWriter::row_numbers(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double v : cells) s.push_back(num(v));
    row(s);
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {
std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(0, 1);
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}
}  // namespace

CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size())
                throw ConfigError(fmt::format("csv row {} has {} cells, header has {}", t.rows.size() + 1,
                                              cells.size(), t.header.size()));
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw ConfigError("csv input is empty");
    return t;
}

std::vector<std::string> indexed(const std::string& prefix, int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(fmt::format("{}_{}", prefix, i));
    return out;
}

}  // namespace slowfast::io
