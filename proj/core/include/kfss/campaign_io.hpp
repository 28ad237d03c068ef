#pragma once

// Serialization of campaign artifacts.
//
//   records.jsonl   first line {"type":"config",...}, then one
//                   {"type":"record",...} per system, sorted by index
//   summary.csv     index,r,r_old,r_new,certified,greedy_cost,opt_cost
//   histogram.csv   bucket,count over [1,2),[2,4),...,[10,inf)
//   table.csv       both readings (cumulative and per-bin) of the b(i)/a(10)
//                   buckets
//
// CSV numbers use 17 significant digits and omit timing, so the summary is
// byte-identical for a given (seed, config) regardless of worker count.

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kfss/bound_engine.hpp"
#include "kfss/experiment.hpp"

namespace kfss {

std::string config_to_json(const GeneratorConfig& cfg);
/// Missing keys keep their defaults.
GeneratorConfig config_from_json(const std::string& text);

void write_records_jsonl(std::ostream& out, const GeneratorConfig& cfg,
                         const std::vector<SystemRecord>& records);

struct RecordsFile {
  std::optional<GeneratorConfig> config;
  std::vector<SystemRecord> records;
};
RecordsFile read_records_jsonl(std::istream& in);

std::string summary_csv(const std::vector<SystemRecord>& records);
std::string histogram_csv(const CampaignStats& stats);
std::string table_csv(const CampaignStats& stats);

std::string stats_to_json(const CampaignStats& stats);
std::string audit_to_json(const AuditReport& report);
std::string bound_report_to_json(const BoundReport& report);
std::string certificate_to_json(const OptimalityCertificate& cert);
std::string greedy_trace_to_json(const GreedyTrace& trace);

/// %.17g formatting shared by every CSV writer.
std::string format_double(double x);

}  // namespace kfss
