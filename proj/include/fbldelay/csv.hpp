// Copyright 2026 The fbldelay Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file csv.hpp
 * @brief Small CSV conventions shared by every table writer.
 *
 * Tables start with `# key=value` comment lines echoing the parameters that
 * produced them, followed by a header row. Numbers use a period decimal
 * separator; probabilities below 1e-3 are written in scientific notation.
 */

#pragma once

#include "fbldelay/errors.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fbldelay::csv {

using Meta = std::vector<std::pair<std::string, std::string>>;

inline std::string real(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline std::string probability(double p)
{
    if (std::isfinite(p) && p != 0.0 && std::abs(p) < 1e-3) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9e", p);
        return buf;
    }
    return real(p);
}

inline std::string integer(long long v) { return std::to_string(v); }

inline void write_meta(std::ostream& os, const Meta& meta)
{
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
}

inline void write_row(std::ostream& os, const std::vector<std::string>& cells)
{
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

inline std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    return out;
}

/// Parsed table: comment metadata, header names and numeric rows.
struct Table {
    Meta meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }

    const std::string* find_meta(const std::string& key) const
    {
        for (const auto& [k, v] : meta)
            if (k == key) return &v;
        return nullptr;
    }
};

inline Table read_table(std::istream& is)
{
    Table t;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
            const auto eq = body.find('=');
            if (eq != std::string::npos) t.meta.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        auto cells = split(line);
        if (t.columns.empty()) {
            t.columns = std::move(cells);
            continue;
        }
        if (cells.size() != t.columns.size())
            throw domain_error(detail::concat("csv line ", line_no, ": expected ", t.columns.size(),
                                              " cells, got ", cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != c.size() || c.empty())
                throw domain_error(detail::concat("csv line ", line_no, ": not a number: '", c, "'"));
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace fbldelay::csv
