#pragma once

// Calibrating a population from a dataset: CSV load, fixed-effect
// demeaning, and the sample covariance treated as the population one.

#include "covsamp/projection.hpp"

#include <optional>
#include <string>
#include <vector>

namespace covsamp {

struct DatasetSpec {
    std::string path;
    std::string outcome;
    std::string treatment;
    std::vector<std::string> covariates;
    std::vector<std::string> fixed_effects;
    std::optional<std::string> weight;
};

/// Column-major numeric table of the role columns. Fixed-effect columns
/// are kept as strings and interpreted as categories.
struct Table {
    std::vector<std::string> names;          // numeric columns: Y, X, covariates
    std::vector<std::vector<double>> columns;
    std::vector<std::vector<std::string>> groups;  // one per fixed effect
    std::vector<double> weights;              // empty when unweighted
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;
    std::vector<std::string> warnings;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// RFC 4180 parser: header row, comma delimiter, quoted fields with ""
/// escapes, CRLF or LF line ends.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Complete cases of the named columns. A blank cell in any role column
/// drops the row; a non-numeric cell in a numeric role is a ParseError
/// naming the row (1-based data row) and column.
Table load_table(const DatasetSpec& spec);
Table load_table_from_string(const DatasetSpec& spec, const std::string& text);

/// Demeans every numeric column within the cells of the full interaction
/// of the fixed-effect columns (weighted if weights are present).
Table project_out_fixed_effects(Table table);

/// Sample covariance of (Y, X, W...) in spec order with denominator n - 1
/// (weighted: sum w (.)(.) / sum w * n / (n - 1)).
CovarianceModel empirical_covariance(const Table& table, const DatasetSpec& spec);

/// load_table, project_out_fixed_effects, empirical_covariance.
CovarianceModel calibrate(const DatasetSpec& spec, std::vector<std::string>* warnings = nullptr);

}  // namespace covsamp
