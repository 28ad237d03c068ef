// kfss: command-line front end for sensor selection, bounds and campaigns.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 infeasible model.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kfss/bound_engine.hpp"
#include "kfss/campaign_io.hpp"
#include "kfss/experiment.hpp"
#include "kfss/greedy_selector.hpp"
#include "kfss/model_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitInfeasible = 3;

int default_workers() {
  if (const char* env = std::getenv("KFSS_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (...) {
    }
  }
  return 1;
}

int exit_code_for(kfss::ErrorCode code) {
  using kfss::ErrorCode;
  switch (code) {
    case ErrorCode::kUnstable:
    case ErrorCode::kInfeasible:
    case ErrorCode::kNotPositiveDefiniteW:
    case ErrorCode::kNotPositiveDefiniteV:
    case ErrorCode::kUndetectable:
    case ErrorCode::kUnstabilizable:
    case ErrorCode::kCorrelatedNoise:
      return kExitInfeasible;
    case ErrorCode::kNonFinite:
    case ErrorCode::kNoConvergence:
    case ErrorCode::kSingularCovariance:
    case ErrorCode::kSingularUpdate:
    case ErrorCode::kNotRankOne:
    case ErrorCode::kCampaignFailed:
      return kExitNumerical;
    default:
      return kExitUsage;
  }
}

json matrix_rows(const kfss::Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw kfss::Error(kfss::ErrorCode::kParse, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw kfss::Error(kfss::ErrorCode::kParse, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct GeneratorFlags {
  std::string config_file;
  kfss::GeneratorConfig cfg;
};

void add_generator_flags(CLI::App* cmd, GeneratorFlags& flags) {
  cmd->add_option("--config", flags.config_file, "JSON generator config (flags override)");
  cmd->add_option("--n", flags.cfg.n, "state dimension");
  cmd->add_option("--q", flags.cfg.q, "sensor budget");
  cmd->add_option("--sensors", flags.cfg.sensor_count, "number of candidate sensors");
  cmd->add_option("--seed", flags.cfg.seed, "campaign seed");
  cmd->add_option("--radius-lo", flags.cfg.radius_lo, "lower spectral radius");
  cmd->add_option("--radius-hi", flags.cfg.radius_hi, "upper spectral radius");
  cmd->add_option("--w-reg", flags.cfg.w_regularizer, "ridge added to W");
  cmd->add_option("--v-lo", flags.cfg.v_lo, "lower sensor noise variance");
  cmd->add_option("--v-hi", flags.cfg.v_hi, "upper sensor noise variance");
}

// Config file first, then any flag given explicitly on the command line.
kfss::GeneratorConfig resolve_config(CLI::App* cmd, const GeneratorFlags& flags) {
  kfss::GeneratorConfig cfg;
  if (!flags.config_file.empty()) cfg = kfss::config_from_json(read_text(flags.config_file));
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--n")) cfg.n = flags.cfg.n;
  if (given("--q")) cfg.q = flags.cfg.q;
  if (given("--sensors")) cfg.sensor_count = flags.cfg.sensor_count;
  if (given("--seed")) cfg.seed = flags.cfg.seed;
  if (given("--radius-lo")) cfg.radius_lo = flags.cfg.radius_lo;
  if (given("--radius-hi")) cfg.radius_hi = flags.cfg.radius_hi;
  if (given("--w-reg")) cfg.w_regularizer = flags.cfg.w_regularizer;
  if (given("--v-lo")) cfg.v_lo = flags.cfg.v_lo;
  if (given("--v-hi")) cfg.v_hi = flags.cfg.v_hi;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kalman filter sensor selection: greedy, exact optimum, bounds, campaigns"};
  app.require_subcommand(1);

  std::string model_path;
  std::string select;
  int q = 1;
  int workers = default_workers();
  std::string m_mode = "lyapunov";
  std::uint64_t cap = kfss::kEnumerationCap;

  auto* solve = app.add_subcommand("solve", "Sigma(z) and J(z) for a selection");
  solve->add_option("--model", model_path, "model file")->required();
  solve->add_option("--select", select, "comma-separated sensor indices (empty = none)");

  auto* greedy = app.add_subcommand("greedy", "run greedy selection");
  greedy->add_option("--model", model_path, "model file")->required();
  greedy->add_option("--q", q, "budget")->required();
  greedy->add_option("--workers", workers, "threads per greedy round");

  auto* bounds = app.add_subcommand("bounds", "performance-ratio bounds");
  bounds->add_option("--model", model_path, "model file")->required();
  bounds->add_option("--q", q, "budget")->required();
  bounds->add_option("--m-mode", m_mode, "lyapunov | enumerate_first_pick")
      ->check(CLI::IsMember({"lyapunov", "enumerate_first_pick"}));
  bounds->add_option("--cap", cap, "enumeration cap for lambda1_max");

  auto* certify = app.add_subcommand("certify", "greedy-optimality certificate");
  certify->add_option("--model", model_path, "model file")->required();

  auto* optimal = app.add_subcommand("optimal", "brute-force optimal selection");
  optimal->add_option("--model", model_path, "model file")->required();
  optimal->add_option("--q", q, "budget")->required();
  optimal->add_option("--cap", cap, "enumeration cap");

  GeneratorFlags campaign_flags;
  int systems = 600;
  std::string out_dir = "campaign_out";
  auto* campaign = app.add_subcommand("campaign", "Monte Carlo campaign");
  add_generator_flags(campaign, campaign_flags);
  campaign->add_option("--systems", systems, "number of random systems");
  campaign->add_option("--workers", workers, "worker threads (default $KFSS_WORKERS or 1)");
  campaign->add_option("--out", out_dir, "output directory");

  GeneratorFlags generate_flags;
  std::uint64_t gen_index = 0;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "write one random system as a model file");
  add_generator_flags(generate, generate_flags);
  generate->add_option("--index", gen_index, "system index within the seed's stream");
  generate->add_option("--out", gen_out, "output model file (default stdout)");

  std::string records_path;
  std::string audit_out;
  auto* audit = app.add_subcommand("audit", "audit bound validity over campaign records");
  audit->add_option("--records", records_path, "records.jsonl from a campaign")->required();
  audit->add_option("--out", audit_out, "directory for audit.json and offending models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) {
      const kfss::SystemModel model = kfss::read_model_file(model_path);
      const kfss::Selection sel =
          kfss::Selection::from_indices(model.sensor_count(), parse_index_list(select));
      const kfss::CostedSelection cs = kfss::evaluate_cost(model, sel);
      json j = {{"selection", sel.order()},
                {"cost", cs.cost},
                {"sigma", matrix_rows(cs.sigma)},
                {"iterations", cs.diagnostics.iterations},
                {"residual", cs.diagnostics.residual},
                {"converged", cs.diagnostics.converged}};
      std::cout << j.dump(2) << "\n";
    } else if (*greedy) {
      const kfss::SystemModel model = kfss::read_model_file(model_path);
      kfss::CostEvaluator evaluator(model);
      std::cout << kfss::greedy_trace_to_json(kfss::greedy_select(evaluator, q, workers));
    } else if (*bounds) {
      const kfss::SystemModel model = kfss::read_model_file(model_path);
      const kfss::MMode mode = m_mode == "lyapunov" ? kfss::MMode::kLyapunov
                                                    : kfss::MMode::kEnumerateFirstPick;
      std::cout << kfss::bound_report_to_json(kfss::improved_ratio_bound(model, q, mode, cap));
    } else if (*certify) {
      const kfss::SystemModel model = kfss::read_model_file(model_path);
      std::cout << kfss::certificate_to_json(kfss::optimality_certificate(model));
    } else if (*optimal) {
      const kfss::SystemModel model = kfss::read_model_file(model_path);
      const kfss::OptimalResult opt = kfss::brute_force_optimal(model, q, cap);
      json j = {{"selection", opt.selection.indices()}, {"cost", opt.cost}};
      std::cout << j.dump(2) << "\n";
    } else if (*generate) {
      const kfss::GeneratorConfig cfg = resolve_config(generate, generate_flags);
      const std::string text =
          kfss::to_model_text(kfss::generate_random_system(cfg, gen_index));
      if (gen_out.empty()) {
        std::cout << text;
      } else {
        write_text(gen_out, text);
      }
    } else if (*campaign) {
      const kfss::GeneratorConfig cfg = resolve_config(campaign, campaign_flags);
      fs::create_directories(out_dir);
      const kfss::CampaignResult result = kfss::collect_campaign(cfg, systems, workers);
      {
        std::ofstream rec(fs::path(out_dir) / "records.jsonl");
        kfss::write_records_jsonl(rec, cfg, result.records);
      }
      write_text(fs::path(out_dir) / "summary.csv", kfss::summary_csv(result.records));
      write_text(fs::path(out_dir) / "histogram.csv", kfss::histogram_csv(result.stats));
      write_text(fs::path(out_dir) / "table.csv", kfss::table_csv(result.stats));
      write_text(fs::path(out_dir) / "stats.json", kfss::stats_to_json(result.stats));
      write_text(fs::path(out_dir) / "config.json", kfss::config_to_json(cfg));
      std::cout << kfss::stats_to_json(result.stats);
      if (result.failed()) {
        std::cerr << "kfss: " << result.stats.num_failed << " of " << systems
                  << " systems failed (more than 1%)\n";
        return kExitNumerical;
      }
    } else if (*audit) {
      std::ifstream in(records_path);
      if (!in) throw kfss::Error(kfss::ErrorCode::kParse, "cannot open " + records_path);
      const kfss::RecordsFile file = kfss::read_records_jsonl(in);
      const kfss::AuditReport report = kfss::bound_audit(file.records);
      const std::string text = kfss::audit_to_json(report);
      if (!audit_out.empty()) {
        fs::create_directories(audit_out);
        write_text(fs::path(audit_out) / "audit.json", text);
        std::vector<std::uint64_t> offenders = report.rold_offenders;
        offenders.insert(offenders.end(), report.rnew_offenders.begin(),
                         report.rnew_offenders.end());
        offenders.insert(offenders.end(), report.ordering_offenders.begin(),
                         report.ordering_offenders.end());
        std::sort(offenders.begin(), offenders.end());
        offenders.erase(std::unique(offenders.begin(), offenders.end()), offenders.end());
        if (!offenders.empty() && !file.config) {
          std::cerr << "kfss: records carry no config line; offending models not written\n";
        }
        if (file.config) {
          const fs::path models = fs::path(audit_out) / "models";
          if (!offenders.empty()) fs::create_directories(models);
          for (std::uint64_t idx : offenders) {
            kfss::write_model_file(models / ("system_" + std::to_string(idx) + ".json"),
                                   kfss::generate_random_system(*file.config, idx));
          }
        }
      }
      std::cout << text;
    }
  } catch (const kfss::Error& e) {
    std::cerr << "kfss: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::invalid_argument& e) {
    std::cerr << "kfss: bad argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "kfss: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
