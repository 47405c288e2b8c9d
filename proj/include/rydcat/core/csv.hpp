#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

#include "error.hpp"

namespace rydcat {

/// Minimal CSV writer. Numbers are printed with %.10g so output is byte-stable
/// for identical inputs.
class CsvWriter {
  public:
    CsvWriter(std::ostream& os, std::vector<std::string> header)
        : os_(os), columns_(header.size()) {
        write_strings(header);
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_) throw Error("csv row width does not match header");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) os_ << ',';
            os_ << format(values[i]);
        }
        os_ << '\n';
    }

    void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

    /// Row with mixed content, already formatted.
    void raw_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw Error("csv row width does not match header");
        write_strings(cells);
    }

    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return buf;
    }

  private:
    void write_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i];
        }
        os_ << '\n';
    }

    std::ostream& os_;
    std::size_t columns_;
};

} // namespace rydcat
