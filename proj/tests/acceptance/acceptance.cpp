// Acceptance suite: one PASS/FAIL line per criterion.
//
//   kfss_acceptance                     run every criterion
//   kfss_acceptance --criterion 5       run one (repeatable)
//   kfss_acceptance --artifacts DIR     where audit files and cell tables go
//
// Exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "kfss/bound_engine.hpp"
#include "kfss/campaign_io.hpp"
#include "kfss/experiment.hpp"
#include "kfss/greedy_selector.hpp"
#include "kfss/matrix_kernel.hpp"
#include "kfss/model_io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using kfss::Matrix;

namespace {

// ---- pinned tolerances and budgets ----
constexpr double kScalarRelTol = 1e-10;
constexpr double kResidualTol = 1e-9;
constexpr double kMillerTol = 1e-9;
constexpr double kLemmaCongruenceTol = 1e-10;
constexpr double kLemmaProductTol = 1e-10;
constexpr double kLemmaLoewnerTol = 1e-10;
constexpr double kLemmaInverseTol = 1e-8;
constexpr double kLemmaCommutingTol = 1e-10;
constexpr double kChainTol = 1e-9;
constexpr double kCertifiedTol = 1e-9;
constexpr double kUncertifiedGap = 1e-3;
constexpr double kRatioTol = 1e-6;

constexpr double kLimitC1 = 1.0;
constexpr double kLimitC2 = 30.0;
constexpr double kLimitC3 = 5.0;
constexpr double kLimitC4 = 60.0;
constexpr double kLimitC5 = 600.0;
constexpr double kLimitC6 = 300.0;
constexpr double kLimitC7 = 1800.0;
constexpr double kLimitC8 = 600.0;
constexpr double kLimitC9 = 300.0;

constexpr std::uint64_t kSeed = 20240601;
constexpr int kTrendSystems = 600;
constexpr int kTrendCells[] = {10, 20, 30};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path artifacts;
  int workers = 2;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

kfss::GeneratorConfig chain_config() {
  kfss::GeneratorConfig cfg;
  cfg.n = 5;
  cfg.sensor_count = 8;
  cfg.q = 3;
  cfg.seed = kSeed + 5;
  return cfg;
}

kfss::GeneratorConfig trend_config(int sensors) {
  kfss::GeneratorConfig cfg;
  cfg.n = 5;
  cfg.q = 4;
  cfg.sensor_count = sensors;
  cfg.seed = kfss::cell_seed(kSeed, sensors);
  return cfg;
}

// ---- criteria ----

Outcome scalar_dare_exactness(const Context&) {
  std::mt19937_64 rng(kSeed + 1);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double a = oracle::uniform(rng, -0.999, 0.999);
    const double w = oracle::uniform(rng, 0.01, 10.0);
    const double c = oracle::uniform(rng, 0.01, 10.0);
    const double v = oracle::uniform(rng, 0.01, 10.0);
    const auto sol = kfss::solve_dare(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, w),
                                      Matrix::Constant(1, 1, c), Matrix::Constant(1, 1, v));
    const double ref = oracle::scalar_dare(a, w, c * c / v);
    worst = std::max(worst, std::abs(sol.sigma(0, 0) - ref) / ref);
  }
  return {worst <= kScalarRelTol, "max relative error " + fmt(worst) + " over 100 instances"};
}

Outcome dare_residuals(const Context&) {
  double worst = 0.0;
  int solves = 0;
  bool psd = true;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    kfss::GeneratorConfig cfg;
    cfg.n = 1 + static_cast<int>(i % 8);
    cfg.sensor_count = 1 + static_cast<int>((i / 8) % 6);
    cfg.q = 1;
    cfg.seed = kSeed + 2;
    const auto model = kfss::generate_random_system(cfg, i);
    const int total = model.sensor_count();
    for (std::uint32_t m = 0; m < (1u << total); ++m) {
      std::vector<bool> mask(static_cast<std::size_t>(total));
      for (int k = 0; k < total; ++k) mask[static_cast<std::size_t>(k)] = (m >> k) & 1u;
      const auto sel = kfss::Selection::from_mask(mask, std::max(1, std::popcount(m)));
      const auto cs = kfss::evaluate_cost(model, sel);
      Matrix c_z, v_z;
      kfss::stacked_measurement(model, sel, c_z, v_z);
      worst = std::max(worst, kfss::dare_residual(model.a(), model.w(), c_z, v_z, cs.sigma));
      psd = psd && cs.sigma == cs.sigma.transpose() && oracle::min_sym_eig(cs.sigma) > 0.0;
      ++solves;
    }
  }
  return {worst <= kResidualTol && psd,
          "max residual " + fmt(worst) + " over " + std::to_string(solves) +
              " solves on 1000 systems" + (psd ? "" : "; non-PSD solution seen")};
}

Outcome miller_equivalence(const Context&) {
  std::mt19937_64 rng(kSeed + 3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 4 + i % 5;
    const int k = 1 + i % 10;
    const Matrix base = oracle::random_spd(n, rng, 1.0);
    Matrix inv = oracle::dense_inverse(base);
    Matrix sum = base;
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd v = oracle::random_matrix(n, 1, rng);
      const Matrix b = v * v.transpose();
      inv = kfss::miller_rank_one_update(inv, b);
      sum += b;
    }
    worst = std::max(worst, (inv - oracle::dense_inverse(sum)).cwiseAbs().maxCoeff());
  }
  return {worst <= kMillerTol, "max abs deviation " + fmt(worst) + " over 1000 sequences"};
}

Outcome matrix_lemmas(const Context&) {
  std::mt19937_64 rng(kSeed + 4);
  constexpr int kTrials = 10000;
  int v_congruence = 0, v_commuting = 0, v_product = 0, v_loewner = 0, v_inverse = 0;
  for (int t = 0; t < kTrials; ++t) {
    const int n = 2 + t % 7;
    {
      const Matrix a = oracle::random_matrix(n, n, rng);
      const Matrix diff = oracle::random_psd_rank(n, 1 + t % n, rng);
      if ((a * diff * a.transpose()).trace() < -kLemmaCongruenceTol) ++v_congruence;
    }
    {
      const Eigen::HouseholderQR<Matrix> qr(oracle::random_matrix(n, n, rng));
      const Matrix u = qr.householderQ();
      Eigen::VectorXd b(n), a(n), d(n), c(n);
      for (int i = 0; i < n; ++i) {
        b(i) = oracle::uniform(rng, 0.01, 2.0);
        a(i) = b(i) + oracle::uniform(rng, 0.0, 2.0);
        d(i) = oracle::uniform(rng, 0.01, 2.0);
        c(i) = d(i) + oracle::uniform(rng, 0.0, 2.0);
      }
      auto lift = [&](const Eigen::VectorXd& x) -> Matrix {
        return u * x.asDiagonal() * u.transpose();
      };
      const Matrix gap = lift(a) * lift(c) - lift(b) * lift(d);
      if (oracle::min_sym_eig(gap) < -kLemmaCommutingTol) ++v_commuting;
    }
    {
      const Matrix a = oracle::random_spd(n, rng);
      const Matrix b = oracle::random_spd(n, rng);
      const double prod = (a * b).eigenvalues().cwiseAbs().minCoeff();
      if (kfss::min_eigenvalue(a) * kfss::min_eigenvalue(b) > prod + kLemmaProductTol) {
        ++v_product;
      }
    }
    {
      const Matrix b = oracle::random_spd(n, rng);
      const Matrix a = b + oracle::random_psd_rank(n, 1 + t % n, rng);
      if (kfss::min_eigenvalue(a) < kfss::min_eigenvalue(b) - kLemmaLoewnerTol) ++v_loewner;
    }
    {
      const Matrix b = oracle::random_spd(n, rng, 0.5);
      const Matrix a = b + oracle::random_psd_rank(n, 1 + t % n, rng);
      const Matrix gap = oracle::dense_inverse(b) - oracle::dense_inverse(a);
      if (kfss::psd_compare(gap, Matrix::Zero(n, n), kLemmaInverseTol) ==
          kfss::PsdOrdering::kIncomparable) {
        ++v_inverse;
      } else if (oracle::min_sym_eig(gap) < -kLemmaInverseTol) {
        ++v_inverse;
      }
    }
  }
  const int total = v_congruence + v_commuting + v_product + v_loewner + v_inverse;
  std::ostringstream os;
  os << "violations per " << kTrials << " trials: congruence " << v_congruence
     << ", commuting product " << v_commuting << ", min-eig product " << v_product
     << ", Loewner min-eig " << v_loewner << ", inverse order " << v_inverse;
  return {total == 0, os.str()};
}

struct ChainEnsemble {
  std::vector<kfss::SystemRecord> records;
  int chain_violations = 0;
  std::vector<std::uint64_t> chain_offenders;
};

ChainEnsemble run_chain_ensemble() {
  const auto cfg = chain_config();
  ChainEnsemble out;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto model = kfss::generate_random_system(cfg, i);
    kfss::CostEvaluator ev(model);
    const auto ratio = kfss::performance_ratio(ev, cfg.q);
    const auto rep = kfss::improved_ratio_bound(ev, cfg.q);
    const double greedy = kfss::greedy_cost(ratio.greedy);
    const double opt = ratio.optimal.cost;
    auto le = [](double x, double y) { return x <= y + kChainTol * std::max(1.0, std::abs(y)); };
    const bool ok = le(rep.opt_lower, opt) && le(opt, greedy) && le(greedy, rep.trace_sigma0) &&
                    le(rep.trace_sigma0, rep.eq8_upper);
    if (!ok) {
      ++out.chain_violations;
      out.chain_offenders.push_back(i);
    }
    kfss::SystemRecord rec;
    rec.index = i;
    rec.ok = true;
    rec.r = ratio.ratio;
    rec.r_old = rep.r_old;
    rec.r_new = rep.r_new;
    rec.r_corollary = rep.r_corollary;
    rec.greedy_cost = greedy;
    rec.opt_cost = opt;
    rec.trace_sigma0 = rep.trace_sigma0;
    rec.greedy_picks = ratio.greedy.picks;
    rec.opt_picks = ratio.optimal.selection.indices();
    out.records.push_back(std::move(rec));
  }
  return out;
}

Outcome bound_chain(const Context&) {
  const ChainEnsemble ens = run_chain_ensemble();
  const auto audit = kfss::bound_audit(ens.records, kRatioTol);
  std::ostringstream os;
  os << "chain violations " << ens.chain_violations << "/1000, r_old violations "
     << audit.rold_violations << "/1000";
  return {ens.chain_violations == 0 && audit.rold_violations == 0, os.str()};
}

Outcome certificate(const Context&) {
  std::mt19937_64 rng(kSeed + 6);
  int certified_fail = 0;
  int not_applied = 0;
  double worst_gap = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto model = oracle::colinear_model(5, 6, rng);
    if (!kfss::optimality_certificate(model).applies) ++not_applied;
    const int q = 2 + i % 2;
    const auto ratio = kfss::performance_ratio(model, q);
    const double gap = std::abs(kfss::greedy_cost(ratio.greedy) - ratio.optimal.cost);
    worst_gap = std::max(worst_gap, gap);
    if (gap > kCertifiedTol * std::max(1.0, ratio.optimal.cost)) ++certified_fail;
  }
  kfss::GeneratorConfig cfg;
  cfg.n = 5;
  cfg.sensor_count = 6;
  cfg.seed = kSeed + 60;
  int uncertified = 0;
  int nontrivial = 0;
  double max_r = 1.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto model = kfss::generate_random_system(cfg, i);
    if (kfss::optimality_certificate(model).applies) continue;
    ++uncertified;
    cfg.q = 2 + static_cast<int>(i % 2);
    const double r = kfss::performance_ratio(model, cfg.q).ratio;
    max_r = std::max(max_r, r);
    if (r > 1.0 + kUncertifiedGap) ++nontrivial;
  }
  std::ostringstream os;
  os << "certified: " << certified_fail << "/200 greedy != optimum (max gap " << fmt(worst_gap)
     << ", certificate missed " << not_applied << "); uncertified: " << nontrivial << "/"
     << uncertified << " with r > 1+1e-3 (max r " << fmt(max_r) << ")";
  return {certified_fail == 0 && not_applied == 0 && uncertified == 200 && nontrivial > 0,
          os.str()};
}

Outcome trend(const Context& ctx) {
  std::vector<kfss::CampaignStats> cells;
  std::ostringstream os;
  bool runtime_ok = true;
  for (int sensors : kTrendCells) {
    const auto cfg = trend_config(sensors);
    const auto res = kfss::run_campaign(cfg, kTrendSystems, ctx.workers);
    cells.push_back(res.stats);
    for (const auto& rec : res.records) runtime_ok = runtime_ok && !rec.over_budget;
    const fs::path dir = ctx.artifacts / ("trend_Q" + std::to_string(sensors));
    fs::create_directories(dir);
    std::ofstream(dir / "table.csv") << kfss::table_csv(res.stats);
    std::ofstream(dir / "histogram.csv") << kfss::histogram_csv(res.stats);
    std::ofstream(dir / "summary.csv") << kfss::summary_csv(res.records);
    std::ofstream(dir / "stats.json") << kfss::stats_to_json(res.stats);
    os << "|Q|=" << sensors << ": mu_r " << fmt(res.stats.mean_ratio) << ", Cv "
       << fmt(res.stats.cv_ratio) << ", max " << fmt(res.stats.max_ratio) << ", a(10) "
       << res.stats.above_10 << "; ";
  }
  const bool mean_up =
      cells[0].mean_ratio < cells[1].mean_ratio && cells[1].mean_ratio < cells[2].mean_ratio;
  const bool max_up =
      cells[0].max_ratio <= cells[1].max_ratio && cells[1].max_ratio <= cells[2].max_ratio;
  const bool mean_range = cells[0].mean_ratio >= 1.0 && cells[0].mean_ratio <= 10.0;
  const bool tail = cells[2].above_10 > 0;
  os << "mean increasing " << (mean_up ? "yes" : "NO") << ", max non-decreasing "
     << (max_up ? "yes" : "NO") << ", mu_r(10) in [1,10] " << (mean_range ? "yes" : "NO")
     << ", a(10)>0 at |Q|=30 " << (tail ? "yes" : "NO")
     << (runtime_ok ? "" : ", per-system budget exceeded");
  return {mean_up && max_up && mean_range && tail && runtime_ok, os.str()};
}

Outcome improved_bound_audit(const Context& ctx) {
  const ChainEnsemble ens = run_chain_ensemble();
  const auto audit = kfss::bound_audit(ens.records, kRatioTol);
  const fs::path dir = ctx.artifacts / "bound_audit";
  fs::create_directories(dir);
  std::ofstream(dir / "audit.json") << kfss::audit_to_json(audit);
  {
    std::ofstream rec(dir / "records.jsonl");
    kfss::write_records_jsonl(rec, chain_config(), ens.records);
  }
  std::vector<std::uint64_t> offenders = audit.rnew_offenders;
  offenders.insert(offenders.end(), audit.ordering_offenders.begin(),
                   audit.ordering_offenders.end());
  offenders.insert(offenders.end(), audit.rold_offenders.begin(), audit.rold_offenders.end());
  std::sort(offenders.begin(), offenders.end());
  offenders.erase(std::unique(offenders.begin(), offenders.end()), offenders.end());
  bool artifacts_ok = true;
  if (!offenders.empty()) {
    fs::create_directories(dir / "models");
    for (std::uint64_t idx : offenders) {
      const fs::path file = dir / "models" / ("system_" + std::to_string(idx) + ".json");
      kfss::write_model_file(file, kfss::generate_random_system(chain_config(), idx));
      artifacts_ok = artifacts_ok && fs::exists(file);
    }
  }
  std::ostringstream os;
  os << "r <= r_new violated on " << audit.rnew_violations << "/" << audit.rnew_available
     << " (" << fmt(100.0 * audit.rnew_violation_rate()) << "%), r_new <= r_old holds on "
     << fmt(100.0 * audit.rnew_le_rold_rate()) << "%; audit in " << dir.string();
  if (!offenders.empty()) os << " with " << offenders.size() << " model files";
  return {audit.rnew_le_rold_rate() == 1.0 && artifacts_ok, os.str()};
}

Outcome determinism(const Context& ctx) {
  const auto cfg = trend_config(kTrendCells[0]);
  const int many = std::max(2, ctx.workers);
  const auto serial = kfss::run_campaign(cfg, kTrendSystems, 1);
  const auto parallel = kfss::run_campaign(cfg, kTrendSystems, many);
  const std::string a = kfss::summary_csv(serial.records);
  const std::string b = kfss::summary_csv(parallel.records);
  const bool same = a == b && kfss::table_csv(serial.stats) == kfss::table_csv(parallel.stats);
  return {same, "summary.csv " + std::string(same ? "byte-identical" : "DIFFERS") +
                    " for workers 1 vs " + std::to_string(many) + " (" +
                    std::to_string(a.size()) + " bytes)"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome(const Context&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "scalar DARE exactness", kLimitC1, scalar_dare_exactness},
      {2, "DARE/Lyapunov residuals", kLimitC2, dare_residuals},
      {3, "rank-one update equivalence", kLimitC3, miller_equivalence},
      {4, "matrix inequality properties", kLimitC4, matrix_lemmas},
      {5, "bound chain validity", kLimitC5, bound_chain},
      {6, "greedy-optimality certificate", kLimitC6, certificate},
      {7, "difficulty trend over |Q|", kLimitC7, trend},
      {8, "improved-bound audit", kLimitC8, improved_bound_audit},
      {9, "campaign determinism", kLimitC9, determinism},
  };
  return list;
}

int default_workers() {
  if (const char* env = std::getenv("KFSS_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return std::max(2, static_cast<int>(std::thread::hardware_concurrency()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kfss acceptance suite"};
  std::vector<int> selected;
  Context ctx;
  ctx.workers = default_workers();
  std::string artifacts = "acceptance_artifacts";
  app.add_option("--criterion", selected, "criterion id(s) to run (default: all)");
  app.add_option("--artifacts", artifacts, "output directory for audit files and tables");
  app.add_option("--workers", ctx.workers, "campaign worker threads");
  CLI11_PARSE(app, argc, argv);
  ctx.artifacts = artifacts;
  fs::create_directories(ctx.artifacts);

  int failures = 0;
  for (const Criterion& c : criteria()) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run(ctx);
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::ostringstream line;
    line << (pass ? "PASS" : "FAIL") << "  C" << c.id << "  " << c.name << ": " << out.detail
         << " [" << fmt(secs) << " s, limit " << fmt(c.limit_seconds) << " s"
         << (in_time ? "" : ", OVER TIME") << "]";
    std::cout << line.str() << std::endl;
    std::ofstream(ctx.artifacts / ("C" + std::to_string(c.id) + ".txt")) << line.str() << "\n";
  }
  return failures == 0 ? 0 : 1;
}
