#pragma once

#include <string>
#include <vector>

#include "trimfmr/types.hpp"

namespace trimfmr::app {

struct CsvData {
    Dataset data;
    std::string response;
    std::vector<std::string> covariates;  // design columns after the intercept
};

/// Reads a comma-separated file with a mandatory header. The response column
/// is chosen by name; every other column becomes a covariate. Throws
/// DataError naming the line (1-based, header = line 1) or the column.
CsvData read_csv(const std::string& path, const std::string& response);
CsvData parse_csv(const std::string& text, const std::string& response, const std::string& source = "<input>");

}  // namespace trimfmr::app
