#pragma once

// JSON and CSV forms of specs, covariance models and summaries.

#include "covsamp/dgp.hpp"
#include "covsamp/engine.hpp"
#include "covsamp/ingest.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace covsamp {

using Json = nlohmann::ordered_json;

Json to_json(const DgpSpec& spec);
DgpSpec dgp_from_json(const Json& j);

Json to_json(const CovarianceModel& cov);
CovarianceModel covariance_from_json(const Json& j);

DatasetSpec dataset_from_json(const Json& j);

/// Finite doubles as numbers, NaN/inf as null.
Json number(double v);

Json to_json(const DistributionSummary& s);
Json to_json(const AssumptionReport& report);
Json to_json(const ConvergencePoint& p);

/// Shortest round-trip decimal, '.' separator, no locale.
std::string format_double(double v);

/// Long format: param,d1,bin,lower,upper,count.
void write_histograms_csv(std::ostream& out, const std::vector<DistributionSummary>& summaries);
/// param,d1,frac_leq_benchmark,successes.
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace covsamp
