#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "glt/search.hpp"

namespace glt {

inline constexpr const char* kEngineVersion = "glt-workbench 1.0.0";

/// Everything a batch run needs; echoed into results.json.
struct RunConfig {
  std::string dataset;
  bool row_normalize = false;
  Backbone backbone = Backbone::GCN;
  Index hidden = 128;
  std::vector<std::uint64_t> seeds{1};
  int jobs = 1;
  std::string out = "runs";
  SearchConfig search;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws InvalidArgument on any violated constraint.
void validate(const RunConfig& cfg);

nlohmann::ordered_json to_json(const RunConfig& cfg);
/// Missing keys keep defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

nlohmann::ordered_json to_json(const TicketRecord& rec);
TicketRecord ticket_from_json(const nlohmann::json& j);

/// results.json body. The timestamp is the only non-deterministic field.
nlohmann::ordered_json results_json(const RunConfig& cfg, std::uint64_t seed, const SearchResult& result,
                                    const GraphDataset& ds, const ModelState& model, const std::string& timestamp);

std::string summary_csv(const SearchResult& result, const GraphDataset& ds, const ModelState& model);

struct SummaryRow {
  std::string method;
  std::uint64_t seed = 0;
  int round = 0;
  double graph_sparsity = 0.0;
  double model_sparsity = 0.0;
  double test_accuracy = 0.0;
  double dense_baseline_accuracy = 0.0;
  bool is_glt = false;
};

std::vector<SummaryRow> parse_summary_csv(const std::string& text);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population (ddof = 0)
  std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& values);

/// One row per method, aggregated over seeds. Sparsity/accuracy columns of
/// the max-GLT ticket only average seeds where a GLT was found.
struct ReportRow {
  std::string method;
  std::size_t seeds = 0;
  std::size_t glt_found = 0;
  MeanStd max_graph_sparsity;
  MeanStd max_model_sparsity;
  MeanStd glt_accuracy;
  MeanStd highest_accuracy;
  MeanStd highest_glt_accuracy;
  MeanStd baseline_accuracy;
};

std::vector<ReportRow> aggregate(const std::vector<SummaryRow>& rows);
std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_table(const std::vector<ReportRow>& rows);

}  // namespace glt
