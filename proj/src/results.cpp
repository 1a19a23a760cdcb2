#include "glt/results.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "glt/error.hpp"

namespace glt {

using nlohmann::json;
using nlohmann::ordered_json;

void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  const auto& s = cfg.search;
  if (cfg.hidden < 1) fail("hidden must be >= 1");
  if (cfg.seeds.empty()) fail("at least one seed is required");
  if (cfg.jobs < 1) fail("jobs must be >= 1");
  if (!(s.target_graph >= 0.0 && s.target_graph < 1.0)) fail("sA must be in [0, 1)");
  if (!(s.target_model >= 0.0 && s.target_model < 1.0)) fail("sW must be in [0, 1)");
  if (!(s.ratios.graph >= 0.0 && s.ratios.graph < 1.0)) fail("pa must be in [0, 1)");
  if (!(s.ratios.model >= 0.0 && s.ratios.model < 1.0)) fail("pw must be in [0, 1)");
  if (s.glt_tolerance < 0.0) fail("delta must be >= 0");
  if (s.train.epochs < 1) fail("epochs must be >= 1");
  if (s.train.lr <= 0.0) fail("lr must be > 0");
  if (s.train.weight_decay < 0.0) fail("weight decay must be >= 0");
  if (s.train.lambda1 < 0.0 || s.train.lambda2 < 0.0) fail("lambdas must be >= 0");
  if (s.ace.rounds < 1) fail("T must be >= 1");
  if (s.ace.k_init && *s.ace.k_init < 1) fail("k-init must be >= 1");
  if (!(s.ace.similarity_threshold >= 0.0 && s.ace.similarity_threshold <= 1.0)) fail("sim-threshold must be in [0, 1]");
  if (s.ace.refine_epochs < 1) fail("refine epochs must be >= 1");
  if (s.fixed.kind != FixedSide::Kind::None) {
    if (!(s.fixed.value >= 0.0 && s.fixed.value < 1.0)) fail("fixed sparsity must be in [0, 1)");
    rounds_to_reach(s.fixed.kind == FixedSide::Kind::Graph ? s.ratios.graph : s.ratios.model, s.fixed.value);
  }
}

namespace {

const char* fixed_kind_name(FixedSide::Kind k) {
  switch (k) {
    case FixedSide::Kind::None: return "none";
    case FixedSide::Kind::Graph: return "graph";
    case FixedSide::Kind::Model: return "model";
  }
  return "none";
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + where + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

ordered_json to_json(const RunConfig& cfg) {
  const auto& s = cfg.search;
  ordered_json j;
  j["dataset"] = cfg.dataset;
  j["row_normalize"] = cfg.row_normalize;
  j["backbone"] = to_string(cfg.backbone);
  j["hidden"] = cfg.hidden;
  j["seeds"] = cfg.seeds;
  j["jobs"] = cfg.jobs;
  j["out"] = cfg.out;
  ordered_json search;
  search["method"] = to_string(s.method);
  search["target_graph"] = s.target_graph;
  search["target_model"] = s.target_model;
  search["p_graph"] = s.ratios.graph;
  search["p_model"] = s.ratios.model;
  search["fix"] = ordered_json{{"side", fixed_kind_name(s.fixed.kind)}, {"value", s.fixed.value}};
  search["delta"] = s.glt_tolerance;
  search["per_layer_pooling"] = s.per_layer_pooling;
  j["search"] = search;
  ordered_json train;
  train["epochs"] = s.train.epochs;
  train["lr"] = s.train.lr;
  train["weight_decay"] = s.train.weight_decay;
  train["lambda1"] = s.train.lambda1;
  train["lambda2"] = s.train.lambda2;
  train["norm_grad_through_degree"] = s.train.norm_grad_through_degree;
  j["train"] = train;
  ordered_json ace;
  ace["rounds"] = s.ace.rounds;
  ace["k_init"] = s.ace.k_init ? json(*s.ace.k_init) : json(nullptr);
  ace["similarity_threshold"] = s.ace.similarity_threshold;
  ace["refine_epochs"] = s.ace.refine_epochs;
  ace["equalize_swap"] = s.ace.equalize_swap;
  ace["resample"] = s.ace.resample;
  ace["adaptive_k"] = s.ace.adaptive_k;
  j["ace"] = ace;
  return j;
}

RunConfig run_config_from_json(const json& j, RunConfig cfg) {
  reject_unknown(j, {"dataset", "row_normalize", "backbone", "hidden", "seeds", "jobs", "out", "search", "train", "ace"}, "");
  read(j, "dataset", cfg.dataset);
  read(j, "row_normalize", cfg.row_normalize);
  if (j.contains("backbone")) {
    std::string b;
    read(j, "backbone", b);
    cfg.backbone = backbone_from_string(b);
  }
  read(j, "hidden", cfg.hidden);
  read(j, "seeds", cfg.seeds);
  read(j, "jobs", cfg.jobs);
  read(j, "out", cfg.out);
  auto& s = cfg.search;
  if (j.contains("search")) {
    const json& sj = j.at("search");
    reject_unknown(sj, {"method", "target_graph", "target_model", "p_graph", "p_model", "fix", "delta", "per_layer_pooling"},
                   "search.");
    if (sj.contains("method")) {
      std::string m;
      read(sj, "method", m);
      s.method = method_from_string(m);
    }
    read(sj, "target_graph", s.target_graph);
    read(sj, "target_model", s.target_model);
    read(sj, "p_graph", s.ratios.graph);
    read(sj, "p_model", s.ratios.model);
    read(sj, "delta", s.glt_tolerance);
    read(sj, "per_layer_pooling", s.per_layer_pooling);
    if (sj.contains("fix")) {
      const json& fj = sj.at("fix");
      if (fj.is_string()) {
        s.fixed = fixed_side_from_string(fj.get<std::string>());
      } else {
        reject_unknown(fj, {"side", "value"}, "search.fix.");
        std::string side = "none";
        read(fj, "side", side);
        read(fj, "value", s.fixed.value);
        if (side == "none") s.fixed.kind = FixedSide::Kind::None;
        else if (side == "graph") s.fixed.kind = FixedSide::Kind::Graph;
        else if (side == "model") s.fixed.kind = FixedSide::Kind::Model;
        else throw Error(ErrorCode::InvalidArgument, "search.fix.side must be none, graph or model");
      }
    }
  }
  if (j.contains("train")) {
    const json& tj = j.at("train");
    reject_unknown(tj, {"epochs", "lr", "weight_decay", "lambda1", "lambda2", "norm_grad_through_degree"}, "train.");
    read(tj, "epochs", s.train.epochs);
    read(tj, "lr", s.train.lr);
    read(tj, "weight_decay", s.train.weight_decay);
    read(tj, "lambda1", s.train.lambda1);
    read(tj, "lambda2", s.train.lambda2);
    read(tj, "norm_grad_through_degree", s.train.norm_grad_through_degree);
  }
  if (j.contains("ace")) {
    const json& aj = j.at("ace");
    reject_unknown(aj, {"rounds", "k_init", "similarity_threshold", "refine_epochs", "equalize_swap", "resample", "adaptive_k"},
                   "ace.");
    read(aj, "rounds", s.ace.rounds);
    if (aj.contains("k_init")) {
      if (aj.at("k_init").is_null()) {
        s.ace.k_init.reset();
      } else {
        std::size_t k = 0;
        read(aj, "k_init", k);
        s.ace.k_init = k;
      }
    }
    read(aj, "similarity_threshold", s.ace.similarity_threshold);
    read(aj, "refine_epochs", s.ace.refine_epochs);
    read(aj, "equalize_swap", s.ace.equalize_swap);
    read(aj, "resample", s.ace.resample);
    read(aj, "adaptive_k", s.ace.adaptive_k);
  }
  return cfg;
}

ordered_json to_json(const TicketRecord& rec) {
  ordered_json j;
  j["round_index"] = rec.round_index;
  j["method"] = to_string(rec.method);
  j["seed"] = rec.seed;
  j["graph_sparsity"] = rec.graph_sparsity;
  j["model_sparsity"] = rec.model_sparsity;
  j["test_accuracy"] = rec.test_accuracy;
  j["val_accuracy"] = rec.val_accuracy;
  j["dense_baseline_accuracy"] = rec.dense_baseline_accuracy;
  j["glt_tolerance"] = rec.glt_tolerance;
  j["is_glt"] = rec.is_glt;
  ordered_json masks;
  masks["adj_size"] = rec.masks.adj.size();
  masks["adj"] = rec.masks.adj.to_hex();
  masks["weights"] = ordered_json::array();
  for (const auto& w : rec.masks.weights) masks["weights"].push_back(ordered_json{{"size", w.size()}, {"bits", w.to_hex()}});
  j["masks"] = masks;
  return j;
}

TicketRecord ticket_from_json(const json& j) {
  TicketRecord rec;
  try {
    rec.round_index = j.at("round_index").get<int>();
    rec.method = method_from_string(j.at("method").get<std::string>());
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.graph_sparsity = j.at("graph_sparsity").get<double>();
    rec.model_sparsity = j.at("model_sparsity").get<double>();
    rec.test_accuracy = j.at("test_accuracy").get<double>();
    rec.val_accuracy = j.at("val_accuracy").get<double>();
    rec.dense_baseline_accuracy = j.at("dense_baseline_accuracy").get<double>();
    rec.glt_tolerance = j.at("glt_tolerance").get<double>();
    rec.is_glt = j.at("is_glt").get<bool>();
    const json& m = j.at("masks");
    rec.masks.adj = BitMask::from_hex(m.at("adj").get<std::string>(), m.at("adj_size").get<std::size_t>());
    for (const auto& w : m.at("weights"))
      rec.masks.weights.push_back(BitMask::from_hex(w.at("bits").get<std::string>(), w.at("size").get<std::size_t>()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("ticket record: ") + e.what());
  }
  return rec;
}

ordered_json results_json(const RunConfig& cfg, std::uint64_t seed, const SearchResult& result, const GraphDataset& ds,
                          const ModelState& model, const std::string& timestamp) {
  ordered_json j;
  j["engine_version"] = kEngineVersion;
  j["timestamp"] = timestamp;
  j["config"] = to_json(cfg);
  j["seed"] = seed;
  j["method"] = to_string(cfg.search.method);
  j["dense_baseline_accuracy"] = result.dense_baseline_accuracy;
  j["dense_inference_macs"] = inference_macs(BinaryMasks::full(ds, model), ds, model);
  j["records"] = ordered_json::array();
  for (const auto& r : result.records) {
    auto rj = to_json(r);
    rj["inference_macs"] = inference_macs(r.masks, ds, model);
    j["records"].push_back(std::move(rj));
  }
  ordered_json summary;
  if (!result.records.empty()) {
    const GltSummary best = max_glt_sparsity(result.records);
    summary["glt_found"] = best.found;
    summary["max_glt_graph_sparsity"] = best.found ? json(best.graph_sparsity) : json(nullptr);
    summary["max_glt_model_sparsity"] = best.found ? json(best.model_sparsity) : json(nullptr);
    summary["max_glt_accuracy"] = best.found ? json(best.accuracy) : json(nullptr);
    summary["max_glt_round"] = best.found ? json(best.round_index) : json(nullptr);
    double highest = 0.0, highest_glt = -1.0;
    for (const auto& r : result.records) {
      highest = std::max(highest, r.test_accuracy);
      if (r.is_glt) highest_glt = std::max(highest_glt, r.test_accuracy);
    }
    summary["highest_accuracy"] = highest;
    summary["highest_glt_accuracy"] = highest_glt >= 0.0 ? json(highest_glt) : json(nullptr);
  } else {
    summary["glt_found"] = false;
  }
  j["summary"] = summary;
  return j;
}

std::string summary_csv(const SearchResult& result, const GraphDataset& ds, const ModelState& model) {
  std::ostringstream out;
  out.precision(17);
  out << "method,seed,round,graph_sparsity,model_sparsity,test_accuracy,val_accuracy,dense_baseline_accuracy,is_glt,"
         "inference_macs\n";
  for (const auto& r : result.records) {
    out << to_string(r.method) << ',' << r.seed << ',' << r.round_index << ',' << r.graph_sparsity << ','
        << r.model_sparsity << ',' << r.test_accuracy << ',' << r.val_accuracy << ',' << r.dense_baseline_accuracy << ','
        << (r.is_glt ? 1 : 0) << ',' << inference_macs(r.masks, ds, model) << '\n';
  }
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<SummaryRow> parse_summary_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"method", "seed", "round", "graph_sparsity", "model_sparsity", "test_accuracy",
                           "dense_baseline_accuracy", "is_glt"})
    if (!col.count(need)) throw Error(ErrorCode::ParseError, std::string("summary.csv lacks column ") + need);
  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw Error(ErrorCode::ParseError, "summary.csv line " + std::to_string(line_no));
    try {
      SummaryRow r;
      r.method = cells[col["method"]];
      r.seed = std::stoull(cells[col["seed"]]);
      r.round = std::stoi(cells[col["round"]]);
      r.graph_sparsity = std::stod(cells[col["graph_sparsity"]]);
      r.model_sparsity = std::stod(cells[col["model_sparsity"]]);
      r.test_accuracy = std::stod(cells[col["test_accuracy"]]);
      r.dense_baseline_accuracy = std::stod(cells[col["dense_baseline_accuracy"]]);
      r.is_glt = std::stoi(cells[col["is_glt"]]) != 0;
      rows.push_back(r);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "summary.csv line " + std::to_string(line_no));
    }
  }
  return rows;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  m.n = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(sq / static_cast<double>(values.size()));
  return m;
}

std::vector<ReportRow> aggregate(const std::vector<SummaryRow>& rows) {
  // method -> seed -> rows
  std::map<std::string, std::map<std::uint64_t, std::vector<SummaryRow>>> grouped;
  for (const auto& r : rows) grouped[r.method][r.seed].push_back(r);

  std::vector<ReportRow> out;
  for (const auto& [method, seeds] : grouped) {
    ReportRow rep;
    rep.method = method;
    rep.seeds = seeds.size();
    std::vector<double> graph, model, glt_acc, highest, highest_glt, baseline;
    for (const auto& [seed, seed_rows] : seeds) {
      std::vector<TicketRecord> records;
      double best = 0.0, best_glt = -1.0;
      for (const auto& r : seed_rows) {
        TicketRecord t;
        t.graph_sparsity = r.graph_sparsity;
        t.model_sparsity = r.model_sparsity;
        t.test_accuracy = r.test_accuracy;
        t.is_glt = r.is_glt;
        t.round_index = r.round;
        records.push_back(t);
        best = std::max(best, r.test_accuracy);
        if (r.is_glt) best_glt = std::max(best_glt, r.test_accuracy);
      }
      highest.push_back(best);
      baseline.push_back(seed_rows.front().dense_baseline_accuracy);
      if (best_glt >= 0.0) highest_glt.push_back(best_glt);
      const GltSummary g = max_glt_sparsity(records);
      if (g.found) {
        ++rep.glt_found;
        graph.push_back(g.graph_sparsity);
        model.push_back(g.model_sparsity);
        glt_acc.push_back(g.accuracy);
      }
    }
    rep.max_graph_sparsity = mean_std(graph);
    rep.max_model_sparsity = mean_std(model);
    rep.glt_accuracy = mean_std(glt_acc);
    rep.highest_accuracy = mean_std(highest);
    rep.highest_glt_accuracy = mean_std(highest_glt);
    rep.baseline_accuracy = mean_std(baseline);
    out.push_back(rep);
  }
  return out;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "method,seeds,glt_found,max_graph_sparsity_mean,max_graph_sparsity_std,max_model_sparsity_mean,"
         "max_model_sparsity_std,glt_accuracy_mean,glt_accuracy_std,highest_accuracy_mean,highest_accuracy_std,"
         "highest_glt_accuracy_mean,highest_glt_accuracy_std,baseline_accuracy_mean,baseline_accuracy_std\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.seeds << ',' << r.glt_found;
    for (const MeanStd* m : {&r.max_graph_sparsity, &r.max_model_sparsity, &r.glt_accuracy, &r.highest_accuracy,
                             &r.highest_glt_accuracy, &r.baseline_accuracy}) {
      if (m->n == 0) out << ",,";
      else out << ',' << m->mean << ',' << m->std;
    }
    out << '\n';
  }
  return out.str();
}

std::string report_table(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  auto cell = [](const MeanStd& m) {
    if (m.n == 0) return std::string("-");
    std::ostringstream c;
    c << std::fixed << std::setprecision(2) << 100.0 * m.mean << " ± " << 100.0 * m.std;
    return c.str();
  };
  out << std::left << std::setw(8) << "method" << std::setw(22) << "graph sparsity %" << std::setw(22)
      << "model sparsity %" << std::setw(22) << "GLT accuracy %" << "highest accuracy %\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(8) << r.method << std::setw(22) << cell(r.max_graph_sparsity) << std::setw(22)
        << cell(r.max_model_sparsity) << std::setw(22) << cell(r.glt_accuracy) << cell(r.highest_accuracy) << '\n';
  }
  return out.str();
}

}  // namespace glt
