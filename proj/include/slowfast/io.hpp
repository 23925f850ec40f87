#pragma once

#include "slowfast/common.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace slowfast::io {

/// Round-trippable text for a double; infinities as "inf"/"-inf".
[[nodiscard]] std::string num(double v);

/// Parses output of num(); accepts "inf", "+inf", "-inf", "nan".
[[nodiscard]] double parse_num(const std::string& s);

/// Lowercase hex SHA-256 of `data`.
[[nodiscard]] std::string sha256_hex(const std::string& data);

/// Minimal CSV: a header row, then rows of already-formatted cells.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    void row_numbers(const std::vector<double>& cells);

private:
    std::ostream& os_;
    std::size_t width_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] int column(const std::string& name) const;  // -1 when absent
};

[[nodiscard]] CsvTable read_csv(std::istream& is);

/// Column names like prefix_1 .. prefix_n.
[[nodiscard]] std::vector<std::string> indexed(const std::string& prefix, int n);

}  // namespace slowfast::io
