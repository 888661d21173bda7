#include "trimfmr_app/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "trimfmr/error.hpp"

namespace trimfmr::app {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    s = s.substr(first, last - first + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (const char c : line) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
            out.push_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(trim(field));
    return out;
}

}  // namespace

CsvData parse_csv(const std::string& text, const std::string& response, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!trim(line).empty()) header = split(line);
    }
    if (header.empty()) throw DataError(fmt::format("{}: no header row", source));
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c].empty()) throw DataError(fmt::format("{}:{}: column {} has an empty name", source, line_no, c + 1));
        if (std::count(header.begin(), header.end(), header[c]) > 1) {
            throw DataError(fmt::format("{}:{}: duplicate column name '{}'", source, line_no, header[c]));
        }
    }
    const auto resp_it = std::find(header.begin(), header.end(), response);
    if (resp_it == header.end()) {
        throw DataError(fmt::format("{}: response column '{}' not found in header", source, response));
    }
    const auto resp_col = static_cast<std::size_t>(resp_it - header.begin());

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line);
        if (fields.size() != header.size()) {
            throw DataError(fmt::format("{}:{}: expected {} fields, found {}", source, line_no, header.size(),
                                        fields.size()));
        }
        std::vector<double> values(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto& f = fields[c];
            const char* begin = f.data();
            const char* end = f.data() + f.size();
            if (begin != end && *begin == '+') ++begin;
            const auto [ptr, ec] = std::from_chars(begin, end, values[c]);
            if (f.empty() || ec != std::errc() || ptr != end || !std::isfinite(values[c])) {
                throw DataError(fmt::format("{}:{}: column '{}' holds a non-numeric value '{}'", source, line_no,
                                            header[c], f));
            }
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw DataError(fmt::format("{}: no data rows", source));

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(header.size() - 1);
    Vector y(n);
    Matrix cov(n, p);
    CsvData out;
    out.response = response;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != resp_col) out.covariates.push_back(header[c]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        y(i) = r[resp_col];
        Eigen::Index k = 0;
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c != resp_col) cov(i, k++) = r[c];
        }
    }
    out.data = Dataset::from_covariates(std::move(y), cov);
    return out;
}

CsvData read_csv(const std::string& path, const std::string& response) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open data file '{}'", path));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), response, path);
}

}  // namespace trimfmr::app
