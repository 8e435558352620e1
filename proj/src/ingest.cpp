#include "covsamp/ingest.hpp"

#include "covsamp/error.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace covsamp {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        // A trailing empty line is not a row.
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (field_started || !field.empty())
                    fail(ErrorCode::ParseError, "unexpected quote on line " + std::to_string(line));
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_row();
                ++line;
                break;
            case '\n':
                end_row();
                ++line;
                break;
            default:
                field.push_back(ch);
        }
    }
    if (in_quotes) fail(ErrorCode::ParseError, "unterminated quoted field");
    if (!field.empty() || !row.empty() || field_started) end_row();
    return rows;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::ConfigError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

Table load_table_from_string(const DatasetSpec& spec, const std::string& text) {
    require(!spec.covariates.empty(), ErrorCode::ConfigError, "dataset spec needs covariates");
    require(!spec.outcome.empty() && !spec.treatment.empty(), ErrorCode::ConfigError,
            "dataset spec needs outcome and treatment");
    auto rows = parse_csv(text);
    require(!rows.empty(), ErrorCode::ParseError, "empty file");
    std::unordered_map<std::string, std::size_t> header;
    for (std::size_t c = 0; c < rows[0].size(); ++c) header[trim(rows[0][c])] = c;

    std::vector<std::string> numeric{spec.outcome, spec.treatment};
    numeric.insert(numeric.end(), spec.covariates.begin(), spec.covariates.end());
    std::vector<std::string> roles = numeric;
    roles.insert(roles.end(), spec.fixed_effects.begin(), spec.fixed_effects.end());
    if (spec.weight) roles.push_back(*spec.weight);
    {
        std::unordered_map<std::string, int> seen;
        for (const auto& r : roles)
            require(++seen[r] == 1, ErrorCode::ConfigError, "column '" + r + "' has more than one role");
    }
    auto locate = [&](const std::string& name) {
        auto it = header.find(name);
        require(it != header.end(), ErrorCode::MissingColumn, "column '" + name + "' not in header");
        return it->second;
    };
    std::vector<std::size_t> num_idx, fe_idx;
    for (const auto& n : numeric) num_idx.push_back(locate(n));
    for (const auto& n : spec.fixed_effects) fe_idx.push_back(locate(n));
    const std::optional<std::size_t> w_idx = spec.weight ? std::optional(locate(*spec.weight)) : std::nullopt;

    Table t;
    t.names = numeric;
    t.columns.resize(numeric.size());
    t.groups.resize(spec.fixed_effects.size());
    std::vector<double> values(numeric.size());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        ++t.rows_read;
        auto cell = [&](std::size_t c) { return c < row.size() ? trim(row[c]) : std::string(); };
        bool complete = true;
        for (std::size_t c : num_idx) complete = complete && !cell(c).empty();
        for (std::size_t c : fe_idx) complete = complete && !cell(c).empty();
        if (w_idx) complete = complete && !cell(*w_idx).empty();
        if (!complete) {
            ++t.rows_dropped;
            continue;
        }
        for (std::size_t j = 0; j < num_idx.size(); ++j) {
            require(parse_number(cell(num_idx[j]), values[j]), ErrorCode::ParseError,
                    "row " + std::to_string(r) + ", column '" + numeric[j] + "': not a number");
        }
        for (std::size_t j = 0; j < num_idx.size(); ++j) t.columns[j].push_back(values[j]);
        for (std::size_t j = 0; j < fe_idx.size(); ++j) t.groups[j].push_back(cell(fe_idx[j]));
        if (w_idx) {
            double w = 0.0;
            require(parse_number(cell(*w_idx), w), ErrorCode::ParseError,
                    "row " + std::to_string(r) + ", column '" + *spec.weight + "': not a number");
            require(w > 0.0, ErrorCode::ParseError,
                    "row " + std::to_string(r) + ", column '" + *spec.weight + "': weight must be positive");
            t.weights.push_back(w);
        }
    }
    if (t.rows_dropped > 0)
        t.warnings.push_back("dropped " + std::to_string(t.rows_dropped) + " incomplete rows of " +
                             std::to_string(t.rows_read));
    return t;
}

Table load_table(const DatasetSpec& spec) { return load_table_from_string(spec, read_file(spec.path)); }

Table project_out_fixed_effects(Table table) {
    if (table.groups.empty()) return table;
    const std::size_t n = table.rows();
    // Cell id for the full interaction of all fixed effects.
    std::map<std::vector<std::string>, std::size_t> ids;
    std::vector<std::size_t> cell(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> key;
        for (const auto& g : table.groups) key.push_back(g[i]);
        cell[i] = ids.emplace(std::move(key), ids.size()).first->second;
    }
    const bool weighted = !table.weights.empty();
    std::vector<double> mass(ids.size(), 0.0);
    std::vector<std::size_t> size(ids.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        mass[cell[i]] += weighted ? table.weights[i] : 1.0;
        ++size[cell[i]];
    }
    std::size_t singletons = 0;
    for (auto s : size) singletons += s == 1;
    if (singletons > 0)
        table.warnings.push_back(std::to_string(singletons) + " singleton fixed-effect groups residualize to 0");

    for (auto& col : table.columns) {
        std::vector<double> sum(ids.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) sum[cell[i]] += (weighted ? table.weights[i] : 1.0) * col[i];
        for (std::size_t i = 0; i < n; ++i) col[i] -= sum[cell[i]] / mass[cell[i]];
    }
    return table;
}

CovarianceModel empirical_covariance(const Table& table, const DatasetSpec& spec) {
    const std::size_t n = table.rows();
    const auto p = static_cast<Index>(table.columns.size());
    require(p == static_cast<Index>(spec.covariates.size() + 2), ErrorCode::InvalidArgument,
            "table does not match the dataset spec");
    require(n >= spec.covariates.size() + 3, ErrorCode::InvalidArgument,
            "need at least K + 3 complete rows, have " + std::to_string(n));
    const bool weighted = !table.weights.empty();
    Eigen::MatrixXd data(static_cast<Index>(n), p);
    for (Index j = 0; j < p; ++j)
        for (std::size_t i = 0; i < n; ++i) data(static_cast<Index>(i), j) = table.columns[static_cast<std::size_t>(j)][i];
    Eigen::VectorXd w = weighted ? Eigen::Map<const Eigen::VectorXd>(table.weights.data(), static_cast<Index>(n)).eval()
                                 : Eigen::VectorXd::Ones(static_cast<Index>(n));
    const double wsum = w.sum();
    const Eigen::RowVectorXd mean = (w.transpose() * data) / wsum;
    const Eigen::MatrixXd centered = data.rowwise() - mean;
    const double nn = static_cast<double>(n);
    Eigen::MatrixXd sigma = centered.transpose() * w.asDiagonal() * centered / wsum * (nn / (nn - 1.0));
    sigma = 0.5 * (sigma + sigma.transpose());

    std::vector<std::string> labels{spec.outcome, spec.treatment};
    labels.insert(labels.end(), spec.covariates.begin(), spec.covariates.end());
    return CovarianceModel(std::move(labels), std::move(sigma));
}

CovarianceModel calibrate(const DatasetSpec& spec, std::vector<std::string>* warnings) {
    Table t = project_out_fixed_effects(load_table(spec));
    if (warnings) warnings->insert(warnings->end(), t.warnings.begin(), t.warnings.end());
    return empirical_covariance(t, spec);
}

}  // namespace covsamp
