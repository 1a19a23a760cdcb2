#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "glt/error.hpp"
#include "glt/planetoid.hpp"

namespace glt::cli {

namespace fs = std::filesystem;

namespace {

// Anything that should end with exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + p.string());
}

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + p.string() + ": " + ec.message());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      seeds.push_back(std::stoull(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || item.front() == '-') throw ConfigError("bad seed list '" + text + "'");
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

// Flag storage; an option only overrides the config when it was given.
struct Flags {
  std::string config, preset, dataset, backbone, method, fix, k_init, seeds, out;
  Index hidden = 0;
  double pa = 0, pw = 0, sA = 0, sW = 0, sim = 0, delta = 0, lr = 0, wd = 0, lambda1 = 0, lambda2 = 0;
  int rounds = 0, jobs = 0, epochs = 0, refine_epochs = 0;
  bool row_normalize = false, per_layer = false, no_degree_grad = false;
  bool no_equalize = false, no_resample = false, no_adaptive_k = false;

  std::map<std::string, CLI::Option*> opts;
  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_common_flags(CLI::App* app, Flags& f) {
  f.opts["config"] = app->add_option("--config", f.config, "JSON run config; flags override it");
  f.opts["preset"] = app->add_option("--preset", f.preset, "hyperparameter preset: cora|citeseer|pubmed");
  f.opts["dataset"] = app->add_option("--dataset", f.dataset, "native dataset directory");
  f.opts["row-normalize"] = app->add_flag("--row-normalize", f.row_normalize, "L1-normalize feature rows on load");
  f.opts["backbone"] = app->add_option("--backbone", f.backbone, "gcn|gin");
  f.opts["hidden"] = app->add_option("--hidden", f.hidden, "hidden width");
  f.opts["seeds"] = app->add_option("--seeds", f.seeds, "comma-separated seeds, e.g. 1,2,3");
  f.opts["jobs"] = app->add_option("--jobs", f.jobs, "seeds run in parallel");
  f.opts["out"] = app->add_option("--out", f.out, "output root directory");
  f.opts["epochs"] = app->add_option("--epochs", f.epochs, "training epochs per phase");
  f.opts["lr"] = app->add_option("--lr", f.lr, "Adam learning rate");
  f.opts["wd"] = app->add_option("--wd", f.wd, "weight decay");
  f.opts["lambda1"] = app->add_option("--lambda1", f.lambda1, "edge-mask l1 coefficient");
  f.opts["lambda2"] = app->add_option("--lambda2", f.lambda2, "weight-mask l1 coefficient");
  f.opts["no-degree-grad"] =
      app->add_flag("--no-degree-grad", f.no_degree_grad, "treat the degree normalization as a constant");
}

void add_search_flags(CLI::App* app, Flags& f) {
  f.opts["method"] = app->add_option("--method", f.method, "ace|ugs|random");
  f.opts["fix"] = app->add_option("--fix", f.fix, "graph@F|model@F|none");
  f.opts["pa"] = app->add_option("--pa", f.pa, "graph pruning ratio per round");
  f.opts["pw"] = app->add_option("--pw", f.pw, "weight pruning ratio per round");
  f.opts["sA"] = app->add_option("--sA", f.sA, "target graph sparsity");
  f.opts["sW"] = app->add_option("--sW", f.sW, "target model sparsity");
  f.opts["T"] = app->add_option("--T", f.rounds, "adversary rounds");
  f.opts["k-init"] = app->add_option("--k-init", f.k_init, "sampling budget K, or auto");
  f.opts["sim-threshold"] = app->add_option("--sim-threshold", f.sim, "similarity gate threshold");
  f.opts["refine-epochs"] = app->add_option("--refine-epochs", f.refine_epochs, "epochs per adversarial phase");
  f.opts["no-equalize"] = app->add_flag("--no-equalize", f.no_equalize, "allow unequal swap sizes");
  f.opts["no-resample"] = app->add_flag("--no-resample", f.no_resample, "no redraw when the gate trips");
  f.opts["no-adaptive-k"] = app->add_flag("--no-adaptive-k", f.no_adaptive_k, "keep K fixed when the gate trips");
  f.opts["delta"] = app->add_option("--delta", f.delta, "GLT tolerance in accuracy points");
  f.opts["per-layer"] = app->add_flag("--per-layer", f.per_layer, "per-layer weight pruning quantile");
}

RunConfig resolve(const Flags& f, RunConfig cfg) {
  try {
    if (f.given("config")) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_text(f.config));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + f.config + ": " + e.what());
      }
      cfg = run_config_from_json(j, cfg);
    }
    auto& s = cfg.search;
    if (f.given("preset")) apply_preset(f.preset, s.train);
    if (f.given("dataset")) cfg.dataset = f.dataset;
    if (f.given("row-normalize")) cfg.row_normalize = true;
    if (f.given("backbone")) cfg.backbone = backbone_from_string(f.backbone);
    if (f.given("hidden")) cfg.hidden = f.hidden;
    if (f.given("seeds")) cfg.seeds = parse_seeds(f.seeds);
    if (f.given("jobs")) cfg.jobs = f.jobs;
    if (f.given("out")) cfg.out = f.out;
    if (f.given("epochs")) s.train.epochs = f.epochs;
    if (f.given("lr")) s.train.lr = f.lr;
    if (f.given("wd")) s.train.weight_decay = f.wd;
    if (f.given("lambda1")) s.train.lambda1 = f.lambda1;
    if (f.given("lambda2")) s.train.lambda2 = f.lambda2;
    if (f.given("no-degree-grad")) s.train.norm_grad_through_degree = false;
    if (f.given("method")) s.method = method_from_string(f.method);
    if (f.given("fix")) s.fixed = fixed_side_from_string(f.fix);
    if (f.given("pa")) s.ratios.graph = f.pa;
    if (f.given("pw")) s.ratios.model = f.pw;
    if (f.given("sA")) s.target_graph = f.sA;
    if (f.given("sW")) s.target_model = f.sW;
    if (f.given("T")) s.ace.rounds = f.rounds;
    if (f.given("k-init")) {
      if (f.k_init == "auto") {
        s.ace.k_init.reset();
      } else {
        std::size_t used = 0;
        long long k = -1;
        try {
          k = std::stoll(f.k_init, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != f.k_init.size() || k < 1) throw ConfigError("--k-init must be a positive integer or auto");
        s.ace.k_init = static_cast<std::size_t>(k);
      }
    }
    if (f.given("sim-threshold")) s.ace.similarity_threshold = f.sim;
    if (f.given("refine-epochs")) s.ace.refine_epochs = f.refine_epochs;
    if (f.given("no-equalize")) s.ace.equalize_swap = false;
    if (f.given("no-resample")) s.ace.resample = false;
    if (f.given("no-adaptive-k")) s.ace.adaptive_k = false;
    if (f.given("delta")) s.glt_tolerance = f.delta;
    if (f.given("per-layer")) s.per_layer_pooling = true;
    if (cfg.dataset.empty()) throw ConfigError("--dataset is required");
    validate(cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingFile) throw ConfigError(e.what());
    if (e.code() == ErrorCode::InvalidArgument) throw ConfigError(e.what());
    throw;
  }
  return cfg;
}

// Runs `body` once per seed on up to cfg.jobs threads. Returns the number of failed seeds.
template <typename Body>
int for_each_seed(const RunConfig& cfg, std::ostream& err, Body body) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  std::mutex err_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      const std::uint64_t seed = cfg.seeds[i];
      try {
        body(seed);
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard lock(err_mutex);
        err << "seed " << seed << ": " << e.what() << '\n';
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), cfg.seeds.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return failures.load();
}

GraphDataset load(const RunConfig& cfg) {
  LoadOptions options;
  options.row_normalize_features = cfg.row_normalize;
  return load_dataset(cfg.dataset, options);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const GraphDataset ds = load(cfg);
  std::mutex out_mutex;
  const int failed = for_each_seed(cfg, err, [&](std::uint64_t seed) {
    const ModelState model = ModelState::for_dataset(ds, cfg.hidden, cfg.backbone, seed);
    TrainConfig train = cfg.search.train;
    train.seed = seed;
    TicketEvaluation dense;
    try {
      dense = evaluate_ticket(ds, model, BinaryMasks::full(ds, model), train);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFiniteLoss) throw Error(ErrorCode::BaselineDivergence, e.what());
      throw;
    }
    const fs::path dir = fs::path(cfg.out) / ("train_seed" + std::to_string(seed));
    make_dir(dir);
    nlohmann::ordered_json j;
    j["engine_version"] = kEngineVersion;
    j["timestamp"] = utc_timestamp();
    j["config"] = to_json(cfg);
    j["seed"] = seed;
    j["dense_baseline_accuracy"] = dense.test_accuracy;
    j["val_accuracy"] = dense.val_accuracy;
    j["best_epoch"] = dense.trace.best_epoch;
    j["inference_macs"] = inference_macs(BinaryMasks::full(ds, model), ds, model);
    write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
    write_text(dir / "results.json", j.dump(2) + "\n");
    write_text(dir / "baseline_trace.csv", trace_to_csv(dense.trace));
    std::lock_guard lock(out_mutex);
    out << "seed " << seed << ": test accuracy " << dense.test_accuracy << " (val " << dense.val_accuracy
        << ", epoch " << dense.trace.best_epoch << ") -> " << dir.string() << '\n';
  });
  return failed ? 1 : 0;
}

int cmd_search(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const GraphDataset ds = load(cfg);
  std::mutex out_mutex;
  const int failed = for_each_seed(cfg, err, [&](std::uint64_t seed) {
    const ModelState model = ModelState::for_dataset(ds, cfg.hidden, cfg.backbone, seed);
    SearchConfig sc = cfg.search;
    sc.train.seed = seed;
    const SearchResult result = search(ds, model, sc, seed);
    const fs::path dir = fs::path(cfg.out) / (lower(to_string(sc.method)) + "_seed" + std::to_string(seed));
    make_dir(dir);
    write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
    write_text(dir / "results.json", results_json(cfg, seed, result, ds, model, utc_timestamp()).dump(2) + "\n");
    write_text(dir / "summary.csv", summary_csv(result, ds, model));
    write_text(dir / "baseline_trace.csv", trace_to_csv(result.baseline_trace));
    for (std::size_t r = 0; r < result.ticket_traces.size(); ++r)
      write_text(dir / ("ticket_trace_round" + std::to_string(r) + ".csv"), trace_to_csv(result.ticket_traces[r]));
    for (std::size_t r = 0; r < result.ace_traces.size(); ++r)
      write_text(dir / ("ace_trace_round" + std::to_string(r) + ".csv"), ace_trace_to_csv(result.ace_traces[r]));

    std::lock_guard lock(out_mutex);
    out << to_string(sc.method) << " seed " << seed << ": baseline " << result.dense_baseline_accuracy << ", "
        << result.records.size() << " rounds";
    if (!result.records.empty()) {
      const GltSummary best = max_glt_sparsity(result.records);
      if (best.found)
        out << ", max GLT graph " << best.graph_sparsity << " model " << best.model_sparsity << " acc "
            << best.accuracy;
      else
        out << ", GLT not found";
    }
    out << " -> " << dir.string() << '\n';
  });
  return failed ? 1 : 0;
}

std::string edge_importance_csv(const GraphDataset& ds, const MaskSnapshot& final_stage, const BinaryMasks& winner) {
  std::ostringstream out;
  out.precision(17);
  out << "edge_id,u,v,importance,in_winner\n";
  const auto& edges = ds.adjacency().edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    out << e << ',' << edges[e].u << ',' << edges[e].v << ',' << final_stage.edge_values[static_cast<Index>(e)] << ','
        << (winner.adj.test(e) ? 1 : 0) << '\n';
  return out.str();
}

int cmd_fluctuation(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const GraphDataset ds = load(cfg);
  std::mutex out_mutex;
  const int failed = for_each_seed(cfg, err, [&](std::uint64_t seed) {
    const ModelState model = ModelState::for_dataset(ds, cfg.hidden, cfg.backbone, seed);
    SearchConfig sc = cfg.search;
    sc.train.seed = seed;
    const SearchResult result = search(ds, model, sc, seed);
    if (result.records.empty() || result.stages.empty())
      throw Error(ErrorCode::EmptyRecords, "search produced no pruning stages");
    // The final ticket of the trajectory is the winner; the last stage is the reference.
    const BinaryMasks& winner = result.records.back().masks;
    const FluctuationProfile profile = fluctuation(result.stages, winner);
    const fs::path dir =
        fs::path(cfg.out) / ("fluctuation_" + lower(to_string(sc.method)) + "_seed" + std::to_string(seed));
    make_dir(dir);
    write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
    write_text(dir / "fluctuation.csv", fluctuation_to_csv(profile));
    write_text(dir / "edge_importance.csv", edge_importance_csv(ds, result.stages.back(), winner));
    std::lock_guard lock(out_mutex);
    out << "seed " << seed << ": " << result.stages.size() << " stages -> " << dir.string() << '\n';
  });
  return failed ? 1 : 0;
}

std::vector<fs::path> find_summaries(const std::vector<std::string>& inputs) {
  std::vector<fs::path> found;
  for (const auto& in : inputs) {
    const fs::path root(in);
    if (fs::is_regular_file(root)) {
      found.push_back(root);
      continue;
    }
    if (!fs::is_directory(root)) throw ConfigError("no such run directory: " + in);
    if (fs::is_regular_file(root / "summary.csv")) {
      found.push_back(root / "summary.csv");
      continue;
    }
    std::vector<fs::path> nested;
    for (const auto& entry : fs::recursive_directory_iterator(root))
      if (entry.is_regular_file() && entry.path().filename() == "summary.csv") nested.push_back(entry.path());
    std::sort(nested.begin(), nested.end());
    found.insert(found.end(), nested.begin(), nested.end());
  }
  if (found.empty()) throw ConfigError("no summary.csv found under the given directories");
  return found;
}

}  // namespace

void apply_preset(const std::string& name, TrainConfig& train) {
  const std::string key = lower(name);
  train.epochs = 200;
  if (key == "cora") {
    train.weight_decay = 6e-5;
    train.lambda1 = 2e-3;
    train.lambda2 = 2e-3;
    train.lr = 6e-2;
  } else if (key == "citeseer") {
    train.weight_decay = 5e-4;
    train.lambda1 = 1e-6;
    train.lambda2 = 1e-4;
    train.lr = 1e-2;
  } else if (key == "pubmed") {
    train.weight_decay = 5e-4;
    train.lambda1 = 1e-2;
    train.lambda2 = 1e-2;
    train.lr = 1e-2;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown preset '" + name + "' (cora|citeseer|pubmed)");
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph lottery ticket workbench"};
  app.name("glt");
  app.require_subcommand(1);

  Flags train_flags, search_flags, fluct_flags;
  auto* train_cmd = app.add_subcommand("train", "dense baseline");
  add_common_flags(train_cmd, train_flags);

  auto* search_cmd = app.add_subcommand("search", "iterative ticket search (ace|ugs|random)");
  add_common_flags(search_cmd, search_flags);
  add_search_flags(search_cmd, search_flags);

  auto* fluct_cmd = app.add_subcommand("fluctuation", "importance-rank fluctuation along a pruning trajectory");
  add_common_flags(fluct_cmd, fluct_flags);
  add_search_flags(fluct_cmd, fluct_flags);

  std::string content, cites, convert_out;
  std::uint64_t convert_seed = 0;
  PlanetoidOptions planetoid;
  auto* convert_cmd = app.add_subcommand("convert", "LINQS Planetoid text release to the native format");
  convert_cmd->add_option("--content", content, "<name>.content")->required();
  convert_cmd->add_option("--cites", cites, "<name>.cites")->required();
  convert_cmd->add_option("--out", convert_out, "output dataset directory")->required();
  convert_cmd->add_option("--seed", convert_seed, "split seed");
  convert_cmd->add_option("--train-per-class", planetoid.train_per_class, "training nodes per class");
  convert_cmd->add_option("--val", planetoid.num_val, "validation nodes");
  convert_cmd->add_option("--test", planetoid.num_test, "test nodes");

  std::vector<std::string> report_inputs;
  std::string report_out = ".";
  auto* report_cmd = app.add_subcommand("report", "aggregate summary.csv files across seeds");
  report_cmd->add_option("runs", report_inputs, "run directories or roots to scan")->required();
  report_cmd->add_option("--out", report_out, "directory for report.csv");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(resolve(train_flags, {}), out, err);
    if (*search_cmd) return cmd_search(resolve(search_flags, {}), out, err);
    if (*fluct_cmd) {
      RunConfig base;
      base.search.method = Method::UGS;
      return cmd_fluctuation(resolve(fluct_flags, base), out, err);
    }
    if (*convert_cmd) {
      planetoid.seed = convert_seed;
      PlanetoidReport rep;
      const GraphDataset ds = convert_linqs(content, cites, planetoid, &rep);
      save_dataset(ds, convert_out);
      out << "nodes " << ds.num_nodes() << ", features " << ds.num_features() << ", classes " << ds.num_classes()
          << ", edges " << ds.num_edges() << " (cites " << rep.cites_read << ", unknown ids " << rep.unknown_endpoint
          << ", self " << rep.self_cites << ", duplicates " << rep.duplicate_cites << ") -> " << convert_out << '\n';
      return 0;
    }
    if (*report_cmd) {
      std::vector<SummaryRow> rows;
      for (const auto& p : find_summaries(report_inputs)) {
        auto part = parse_summary_csv(read_text(p));
        rows.insert(rows.end(), part.begin(), part.end());
      }
      const auto report = aggregate(rows);
      make_dir(report_out);
      write_text(fs::path(report_out) / "report.csv", report_csv(report));
      out << report_table(report);
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace glt::cli
