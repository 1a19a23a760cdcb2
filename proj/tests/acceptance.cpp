// Acceptance checks, one per criterion. Usage: glt_acceptance [N]
// Exit codes: 0 pass, 1 fail, 77 skipped (data not available).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "ace_oracle.hpp"
#include "bridge_fixture.hpp"
#include "cli.hpp"
#include "glt/analytics.hpp"
#include "glt/search.hpp"
#include "gradcheck.hpp"
#include "imp_oracle.hpp"
#include "support.hpp"

using namespace glt;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skipped };

struct Outcome {
  Status status;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

/// Directory from the environment holding a native-format dataset, or empty.
fs::path dataset_dir(const char* var) {
  const char* dir = std::getenv(var);
  if (!dir || !*dir) return {};
  return fs::path(dir);
}

Outcome gradients() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (Backbone b : {Backbone::GCN, Backbone::GIN})
    for (bool pruned : {false, true})
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto r = test::check_loss_gradients(b, pruned, seed);
        worst = std::max(worst, r.max_rel_error);
        checked += r.checked;
      }
  const std::string detail = std::to_string(checked) + " gradient entries, max relative error " + sci(worst);
  return {worst < 1e-4 && checked > 0 ? Status::Pass : Status::Fail, detail};
}

Outcome dense_baseline() {
  const fs::path dir = dataset_dir("GLT_CORA_DIR");
  if (dir.empty()) return {Status::Skipped, "GLT_CORA_DIR is not set (Cora in native format is required)"};
  LoadOptions options;
  options.row_normalize_features = true;
  const GraphDataset ds = load_dataset(dir, options);
  const ModelState model = ModelState::for_dataset(ds, 128, Backbone::GCN, 1);
  TrainConfig train;
  cli::apply_preset("cora", train);
  train.seed = 1;
  const auto eval = evaluate_ticket(ds, model, BinaryMasks::full(ds, model), train);
  return {eval.test_accuracy >= 0.78 ? Status::Pass : Status::Fail,
          "best-val test accuracy " + fmt(eval.test_accuracy) + " (threshold 0.78)"};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome ace_beats_ugs() {
  const fs::path dir = dataset_dir("GLT_CITESEER_DIR");
  if (dir.empty()) return {Status::Skipped, "GLT_CITESEER_DIR is not set (Citeseer in native format is required)"};
  LoadOptions options;
  options.row_normalize_features = true;
  const GraphDataset ds = load_dataset(dir, options);
  std::vector<double> ace, ugs;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ModelState model = ModelState::for_dataset(ds, 128, Backbone::GCN, seed);
    for (Method m : {Method::UGS, Method::ACE}) {
      SearchConfig cfg;
      cfg.method = m;
      cfg.fixed = fixed_side_from_string("graph@0.05");
      cfg.glt_tolerance = 1.0;
      cli::apply_preset("citeseer", cfg.train);
      cfg.train.seed = seed;
      const auto result = search(ds, model, cfg, seed);
      const GltSummary best = max_glt_sparsity(result.records);
      (m == Method::ACE ? ace : ugs).push_back(best.found ? best.model_sparsity : 0.0);
    }
  }
  const double gap = 100.0 * (median(ace) - median(ugs));
  return {gap >= 5.0 ? Status::Pass : Status::Fail,
          "median max-GLT model sparsity ACE " + fmt(median(ace)) + " vs UGS " + fmt(median(ugs)) + " (gap " +
              fmt(gap, 2) + " points, need 5)"};
}

/// One-sided exact sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p(int wins, int losses) {
  const int n = wins + losses;
  double p = 0.0;
  for (int k = wins; k <= n; ++k) p += std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1) - n * std::log(2.0));
  return n == 0 ? 1.0 : p;
}

Outcome ablation_ordering() {
  test::BridgeOptions fixture;
  fixture.core_per_class = 200;
  fixture.orphans_per_class = 80;
  fixture.p_in = 0.025;
  fixture.p_out = 0.015;
  TrainConfig train;
  train.epochs = 100;
  train.lr = 0.05;
  train.lambda1 = 1e-3;
  train.lambda2 = 1e-3;

  struct Variant {
    const char* name;
    bool resample, adaptive_k;
  };
  const std::vector<Variant> variants{{"full", true, true}, {"resample", true, false}, {"adaptive", false, true},
                                      {"neither", false, false}};
  std::vector<double> mean(variants.size(), 0.0);
  int wins = 0, losses = 0;
  const int seeds = 10;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto f = test::planted_bridge(static_cast<std::uint64_t>(seed), fixture);
    const ModelState model = ModelState::for_dataset(f.ds, 16, Backbone::GCN, static_cast<std::uint64_t>(seed));
    const BinaryMasks start = test::rigged_ticket(f, model, 0.1, 0.1, static_cast<std::uint64_t>(seed));
    std::vector<double> acc;
    for (const auto& v : variants) {
      AceConfig cfg;
      cfg.rounds = 5;
      cfg.k_init = 200;
      cfg.similarity_threshold = 0.1;
      cfg.resample = v.resample;
      cfg.adaptive_k = v.adaptive_k;
      Rng rng = Rng::stream(static_cast<std::uint64_t>(seed), 0xace);
      const AceResult refined = ace_refine(f.ds, model, start, cfg, train, rng);
      acc.push_back(evaluate_ticket(f.ds, model, refined.masks, train).test_accuracy);
    }
    for (std::size_t i = 0; i < acc.size(); ++i) mean[i] += acc[i] / seeds;
    if (acc.front() > acc.back()) ++wins;
    else if (acc.front() < acc.back()) ++losses;
  }
  const double p = sign_test_p(wins, losses);
  const bool ordered = mean[0] >= mean[1] && mean[0] >= mean[2] && mean[1] >= mean[3] && mean[2] >= mean[3];
  std::string detail = "mean ticket accuracy";
  for (std::size_t i = 0; i < variants.size(); ++i) detail += std::string(" ") + variants[i].name + " " + fmt(mean[i]);
  detail += "; full vs neither " + std::to_string(wins) + " wins, " + std::to_string(losses) + " losses, p=" + fmt(p);
  return {ordered && wins > losses && p < 0.1 ? Status::Pass : Status::Fail, detail};
}

Outcome gumbel_fidelity() {
  const std::vector<std::vector<double>> fixtures{{0.1, 0.2, 0.3, 0.4}, {1.0, 1.0, 1.0, 1.0}, {0.05, 0.9, 0.5, 2.0}};
  double worst = 0.0;
  std::uint64_t seed = 11;
  for (const auto& mags : fixtures)
    for (Direction dir : {Direction::Most, Direction::Least})
      worst = std::max(worst, test::gumbel_frequency_error(mags, dir, 100000, seed++));
  return {worst < 0.01 ? Status::Pass : Status::Fail, "max frequency error " + fmt(worst, 5) + " (limit 0.01)"};
}

Outcome swap_neutrality() {
  const auto stats = test::run_swap_trials(10000, 2024);
  return {stats.violations == 0 ? Status::Pass : Status::Fail,
          std::to_string(stats.trials) + " trials, " + std::to_string(stats.violations) + " violations"};
}

Outcome imp_oracle() {
  const auto stats = test::run_imp_oracle_trials(1000, 7);
  return {stats.mismatches == 0 ? Status::Pass : Status::Fail,
          std::to_string(stats.trials) + " trials, " + std::to_string(stats.mismatches) + " mismatches"};
}

std::string results_without_timestamp(const fs::path& p) {
  static const std::regex stamp(R"(\n\s*"timestamp": "[^"]*",?)");
  return std::regex_replace(test::slurp(p), stamp, "");
}

Outcome determinism() {
  const fs::path data = test::temp_dir("acceptance_det_data");
  save_dataset(synth_sbm(3, 20, 0.3, 0.05, 6, 5), data);
  const fs::path out = test::temp_dir("acceptance_det_out");
  const std::vector<std::string> args{"search", "--dataset", data.string(), "--method", "ace", "--hidden", "8",
                                      "--epochs", "20", "--refine-epochs", "5", "--T", "3", "--sA", "0.15",
                                      "--sW", "0.6", "--seeds", "3", "--out", out.string()};
  std::vector<std::string> runs;
  for (int i = 0; i < 2; ++i) {
    std::ostringstream sink_out, sink_err;
    if (cli::run(args, sink_out, sink_err) != 0) return {Status::Fail, "search exited non-zero: " + sink_err.str()};
    runs.push_back(results_without_timestamp(out / "ace_seed3" / "results.json"));
  }
  const bool same = runs[0] == runs[1] && !runs[0].empty() && runs[0].find("\"timestamp\"") == std::string::npos;
  return {same ? Status::Pass : Status::Fail,
          same ? "results.json identical across runs (" + std::to_string(runs[0].size()) + " bytes, timestamp excluded)"
               : "results.json differs between runs"};
}

struct SpreadCheck {
  bool intermediate_nonzero = true;
  bool final_zero = true;
  double min_spread = 1.0;
};

SpreadCheck check_spread(const FluctuationProfile& p) {
  SpreadCheck c;
  for (const auto* summary : {&p.edge_summary, &p.weight_summary}) {
    if (summary->empty()) continue;
    for (std::size_t s = 0; s + 1 < summary->size(); ++s) {
      const double spread = (*summary)[s].q90 - (*summary)[s].q10;
      c.min_spread = std::min(c.min_spread, spread);
      c.intermediate_nonzero = c.intermediate_nonzero && spread > 0.0;
    }
    const auto& last = summary->back();
    c.final_zero = c.final_zero && last.q10 == 0.0 && last.q90 == 0.0;
  }
  return c;
}

FluctuationProfile ugs_fluctuation(const GraphDataset& ds, Index hidden, const TrainConfig& train, double target_model) {
  const ModelState model = ModelState::for_dataset(ds, hidden, Backbone::GCN, 1);
  SearchConfig cfg;
  cfg.method = Method::UGS;
  cfg.target_model = target_model;
  cfg.train = train;
  cfg.train.seed = 1;
  const auto result = search(ds, model, cfg, 1);
  return fluctuation(result.stages, result.records.back().masks);
}

Outcome fluctuation_shape() {
  const fs::path dir = dataset_dir("GLT_CORA_DIR");
  if (dir.empty()) {
    // proxy on a synthetic graph, reported but never counted as a pass
    TrainConfig train;
    train.epochs = 50;
    train.lr = 0.05;
    train.lambda1 = 1e-3;
    train.lambda2 = 1e-3;
    const auto c = check_spread(ugs_fluctuation(synth_sbm(3, 40, 0.2, 0.03, 8, 2), 16, train, 0.7));
    return {Status::Skipped, std::string("GLT_CORA_DIR is not set; synthetic proxy: intermediate spread ") +
                                 (c.intermediate_nonzero ? "non-zero" : "ZERO somewhere") + ", final stage " +
                                 (c.final_zero ? "exactly zero" : "NOT zero")};
  }
  LoadOptions options;
  options.row_normalize_features = true;
  const GraphDataset ds = load_dataset(dir, options);
  TrainConfig train;
  cli::apply_preset("cora", train);
  const auto profile = ugs_fluctuation(ds, 128, train, 0.9);
  const auto c = check_spread(profile);
  return {c.intermediate_nonzero && c.final_zero && profile.edge_summary.size() > 1 ? Status::Pass : Status::Fail,
          std::to_string(profile.edge_summary.size()) + " stages, smallest intermediate q90-q10 " +
              fmt(c.min_spread, 6) + ", final stage " + (c.final_zero ? "exactly zero" : "not zero")};
}

const std::vector<std::function<Outcome()>>& criteria() {
  static const std::vector<std::function<Outcome()>> all{gradients,       dense_baseline,  ace_beats_ugs,
                                                         ablation_ordering, gumbel_fidelity, swap_neutrality,
                                                         imp_oracle,      determinism,     fluctuation_shape};
  return all;
}

int run_one(int n) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = criteria()[static_cast<std::size_t>(n - 1)]();
  } catch (const std::exception& e) {
    o = {Status::Fail, std::string("error: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char* label = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIPPED";
  std::cout << "criterion " << n << ": " << label << " - " << o.detail << " [" << fmt(secs, 1) << " s]"
            << std::endl;
  return o.status == Status::Pass ? 0 : o.status == Status::Fail ? 1 : 77;
}

}  // namespace

int main(int argc, char** argv) {
  const int count = static_cast<int>(criteria().size());
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > count) {
      std::cerr << "usage: glt_acceptance [1-" << count << "]\n";
      return 2;
    }
    return run_one(n);
  }
  bool failed = false;
  for (int n = 1; n <= count; ++n) failed = run_one(n) == 1 || failed;
  return failed ? 1 : 0;
}
