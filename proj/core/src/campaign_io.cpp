#include "kfss/campaign_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace kfss {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

json config_json(const GeneratorConfig& cfg) {
  return {{"n", cfg.n},
          {"sensors", cfg.sensor_count},
          {"q", cfg.q},
          {"radius_lo", cfg.radius_lo},
          {"radius_hi", cfg.radius_hi},
          {"w_regularizer", cfg.w_regularizer},
          {"v_lo", cfg.v_lo},
          {"v_hi", cfg.v_hi},
          {"seed", cfg.seed}};
}

GeneratorConfig config_from(const json& j) {
  GeneratorConfig cfg;
  cfg.n = j.value("n", cfg.n);
  cfg.sensor_count = j.value("sensors", cfg.sensor_count);
  cfg.q = j.value("q", cfg.q);
  cfg.radius_lo = j.value("radius_lo", cfg.radius_lo);
  cfg.radius_hi = j.value("radius_hi", cfg.radius_hi);
  cfg.w_regularizer = j.value("w_regularizer", cfg.w_regularizer);
  cfg.v_lo = j.value("v_lo", cfg.v_lo);
  cfg.v_hi = j.value("v_hi", cfg.v_hi);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

json record_json(const SystemRecord& r) {
  json j = {{"type", "record"},
            {"index", r.index},
            {"ok", r.ok},
            {"seconds", r.seconds},
            {"over_budget", r.over_budget}};
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  j["r"] = r.r;
  j["r_old"] = r.r_old;
  j["r_new"] = r.r_new ? json(*r.r_new) : json(nullptr);
  j["r_corollary"] = r.r_corollary;
  j["certified"] = r.certified;
  j["greedy_cost"] = r.greedy_cost;
  j["opt_cost"] = r.opt_cost;
  j["trace_sigma0"] = r.trace_sigma0;
  j["greedy_picks"] = r.greedy_picks;
  j["opt_picks"] = r.opt_picks;
  return j;
}

SystemRecord record_from(const json& j) {
  SystemRecord r;
  r.index = j.at("index").get<std::uint64_t>();
  r.ok = j.at("ok").get<bool>();
  r.seconds = j.value("seconds", 0.0);
  r.over_budget = j.value("over_budget", false);
  if (!r.ok) {
    r.error = j.value("error", std::string());
    return r;
  }
  r.r = j.at("r").get<double>();
  r.r_old = j.at("r_old").get<double>();
  if (j.contains("r_new") && !j["r_new"].is_null()) r.r_new = j["r_new"].get<double>();
  r.r_corollary = j.value("r_corollary", 0.0);
  r.certified = j.value("certified", false);
  r.greedy_cost = j.value("greedy_cost", 0.0);
  r.opt_cost = j.value("opt_cost", 0.0);
  r.trace_sigma0 = j.value("trace_sigma0", 0.0);
  r.greedy_picks = j.value("greedy_picks", std::vector<int>{});
  r.opt_picks = j.value("opt_picks", std::vector<int>{});
  return r;
}

json optional_json(const std::optional<double>& x) {
  return x ? json(*x) : json(nullptr);
}

}  // namespace

std::string config_to_json(const GeneratorConfig& cfg) {
  return config_json(cfg).dump(2) + "\n";
}

GeneratorConfig config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("campaign config: ") + e.what());
  }
}

void write_records_jsonl(std::ostream& out, const GeneratorConfig& cfg,
                         const std::vector<SystemRecord>& records) {
  json header = config_json(cfg);
  header["type"] = "config";
  out << header.dump() << "\n";
  for (const SystemRecord& r : records) out << record_json(r).dump() << "\n";
}

RecordsFile read_records_jsonl(std::istream& in) {
  RecordsFile file;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.value("type", std::string("record"));
      if (type == "config") {
        file.config = config_from(j);
      } else {
        file.records.push_back(record_from(j));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  "records line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return file;
}

std::string summary_csv(const std::vector<SystemRecord>& records) {
  std::ostringstream os;
  os << "index,r,r_old,r_new,certified,greedy_cost,opt_cost\n";
  for (const SystemRecord& r : records) {
    if (!r.ok) continue;
    os << r.index << ',' << format_double(r.r) << ',' << format_double(r.r_old) << ','
       << (r.r_new ? format_double(*r.r_new) : std::string()) << ','
       << (r.certified ? 1 : 0) << ',' << format_double(r.greedy_cost) << ','
       << format_double(r.opt_cost) << '\n';
  }
  return os.str();
}

std::string histogram_csv(const CampaignStats& s) {
  static const char* kLabels[5] = {"[1,2)", "[2,4)", "[4,6)", "[6,8)", "[8,10)"};
  std::ostringstream os;
  os << "bucket,count\n";
  for (int k = 0; k < 5; ++k) os << kLabels[k] << ',' << s.bins[k] << '\n';
  os << "[10,inf)," << s.above_10 << '\n';
  return os.str();
}

std::string table_csv(const CampaignStats& s) {
  std::ostringstream os;
  os << "reading,b(2),b(4),b(6),b(8),b(10),a(10)\n";
  os << "cumulative";
  for (auto v : s.b) os << ',' << v;
  os << ',' << s.above_10 << '\n';
  os << "per_bin";
  for (auto v : s.bins) os << ',' << v;
  os << ',' << s.above_10 << '\n';
  return os.str();
}

std::string stats_to_json(const CampaignStats& s) {
  json j = {{"num_systems", s.num_systems},
            {"num_failed", s.num_failed},
            {"mean_ratio", s.mean_ratio},
            {"cv_ratio", s.cv_ratio},
            {"max_ratio", s.max_ratio},
            {"certificate_hits", s.certificate_hits},
            {"rnew_violations", s.rnew_violations},
            {"rold_violations", s.rold_violations},
            {"a10", s.above_10}};
  json cumulative = json::object();
  json per_bin = json::object();
  for (int k = 0; k < 5; ++k) {
    const std::string key = "b(" + std::to_string(CampaignStats::kThresholds[k]) + ")";
    cumulative[key] = s.b[k];
    per_bin[key] = s.bins[k];
  }
  j["cumulative"] = cumulative;
  j["per_bin"] = per_bin;
  return j.dump(2) + "\n";
}

std::string audit_to_json(const AuditReport& r) {
  json j = {{"num_records", r.num_records},
            {"rold_violations", r.rold_violations},
            {"rnew_violations", r.rnew_violations},
            {"rnew_above_rold", r.rnew_above_rold},
            {"rnew_available", r.rnew_available},
            {"rnew_violation_rate", r.rnew_violation_rate()},
            {"rnew_le_rold_rate", r.rnew_le_rold_rate()},
            {"rold_offenders", r.rold_offenders},
            {"rnew_offenders", r.rnew_offenders},
            {"ordering_offenders", r.ordering_offenders}};
  return j.dump(2) + "\n";
}

std::string bound_report_to_json(const BoundReport& r) {
  json j = {{"m_mode", std::string(to_string(r.m_mode))},
            {"q", r.q},
            {"trace_sigma0", r.trace_sigma0},
            {"eq8_upper", r.eq8_upper},
            {"opt_lower", r.opt_lower},
            {"r_old", r.r_old},
            {"r_old_formula", r.r_old_formula},
            {"m_trace", r.m_trace},
            {"u", r.u},
            {"c", r.c},
            {"c_literal", optional_json(r.c_literal)},
            {"b", r.b},
            {"lambda1_max", r.lambda1_max},
            {"lambda1_surrogate", r.lambda1_surrogate},
            {"greedy_upper", r.greedy_upper},
            {"r_new", optional_json(r.r_new)},
            {"r_new_assembled", optional_json(r.r_new_assembled)},
            {"r_new_discrepancy", r.r_new_discrepancy},
            {"r_corollary", r.r_corollary},
            {"corollary_degenerate", r.corollary_degenerate},
            {"singular_a", r.singular_a}};
  return j.dump(2) + "\n";
}

std::string certificate_to_json(const OptimalityCertificate& c) {
  json j = {{"applies", c.applies},
            {"reasons", c.reasons},
            {"singular_ratios", c.singular_ratios},
            {"ratio_order", c.ratio_order},
            {"totally_ordered", c.totally_ordered}};
  return j.dump(2) + "\n";
}

std::string greedy_trace_to_json(const GreedyTrace& t) {
  json candidates = json::array();
  for (const auto& step : t.candidate_costs) {
    json row = json::array();
    for (const auto& cc : step) row.push_back({{"sensor", cc.sensor}, {"cost", cc.cost}});
    candidates.push_back(std::move(row));
  }
  json j = {{"picks", t.picks},
            {"step_costs", t.step_costs},
            {"deltas", t.deltas},
            {"greedy_cost", greedy_cost(t)},
            {"candidate_costs", std::move(candidates)}};
  return j.dump(2) + "\n";
}

}  // namespace kfss
