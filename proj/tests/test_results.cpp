#include <doctest.h>

#include <cmath>

#include "glt/error.hpp"
#include "glt/results.hpp"
#include "support.hpp"

using namespace glt;

TEST_SUITE("results") {
  TEST_CASE("run config survives a JSON round trip") {
    RunConfig cfg;
    cfg.dataset = "data/cora";
    cfg.backbone = Backbone::GIN;
    cfg.hidden = 64;
    cfg.seeds = {1, 2, 3};
    cfg.jobs = 3;
    cfg.search.method = Method::RANDOM;
    cfg.search.fixed = fixed_side_from_string("graph@0.05");
    cfg.search.glt_tolerance = 1.0;
    cfg.search.train.lr = 0.06;
    cfg.search.train.lambda1 = 2e-3;
    cfg.search.ace.k_init = 17;
    cfg.search.ace.resample = false;
    cfg.search.train.norm_grad_through_degree = false;
    const auto j = to_json(cfg);
    const RunConfig back = run_config_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back == cfg);

    RunConfig auto_k = cfg;
    auto_k.search.ace.k_init.reset();
    CHECK(run_config_from_json(nlohmann::json::parse(to_json(auto_k).dump())) == auto_k);
  }

  TEST_CASE("partial configs keep defaults; unknown keys are rejected") {
    const auto j = nlohmann::json::parse(R"({"dataset":"x","search":{"method":"ugs"},"ace":{"rounds":5}})");
    const RunConfig cfg = run_config_from_json(j);
    CHECK(cfg.search.method == Method::UGS);
    CHECK(cfg.search.ace.rounds == 5);
    CHECK(cfg.hidden == RunConfig{}.hidden);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"hiden":3})")), Error);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"train":{"epoch":3}})")), Error);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"hidden":"big"})")), Error);
  }

  TEST_CASE("validation rejects out-of-range values") {
    RunConfig cfg;
    cfg.dataset = "x";
    CHECK_NOTHROW(validate(cfg));
    cfg.search.target_model = 1.0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = RunConfig{};
    cfg.search.fixed = {FixedSide::Kind::Model, 0.3};  // not on the 0.2 schedule
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = RunConfig{};
    cfg.search.ace.similarity_threshold = 1.5;
    CHECK_THROWS_AS(validate(cfg), Error);
  }

  TEST_CASE("ticket records round trip through JSON") {
    TicketRecord r;
    r.masks.adj = BitMask::from_indices(13, {0, 5, 12});
    r.masks.weights = {BitMask::from_indices(6, {1}), BitMask(9, true)};
    r.graph_sparsity = 10.0 / 13.0;
    r.model_sparsity = 5.0 / 15.0;
    r.test_accuracy = 0.8123;
    r.val_accuracy = 0.79;
    r.dense_baseline_accuracy = 0.81;
    r.glt_tolerance = 1.0;
    r.is_glt = true;
    r.method = Method::ACE;
    r.seed = 42;
    r.round_index = 3;
    CHECK(ticket_from_json(nlohmann::json::parse(to_json(r).dump())) == r);
  }

  TEST_CASE("report aggregation on a three-seed fixture") {
    const std::string csv =
        "method,seed,round,graph_sparsity,model_sparsity,test_accuracy,val_accuracy,dense_baseline_accuracy,is_glt,"
        "inference_macs\n"
        "ugs,1,0,0.05,0.2,0.8,0.7,0.8,1,100\n"
        "ugs,2,0,0.05,0.36,0.7,0.7,0.72,0,100\n"
        "ugs,3,0,0.1,0.4,0.9,0.7,0.89,1,100\n";
    const auto rows = parse_summary_csv(csv);
    REQUIRE(rows.size() == 3);
    const auto rep = aggregate(rows);
    REQUIRE(rep.size() == 1);
    const ReportRow& r = rep[0];
    CHECK(r.method == "ugs");
    CHECK(r.seeds == 3);
    CHECK(r.glt_found == 2);
    // hand-computed population statistics
    CHECK(r.max_graph_sparsity.mean == doctest::Approx(0.075));
    CHECK(r.max_graph_sparsity.std == doctest::Approx(0.025));
    CHECK(r.max_model_sparsity.mean == doctest::Approx(0.30));
    CHECK(r.max_model_sparsity.std == doctest::Approx(0.10));
    CHECK(r.glt_accuracy.mean == doctest::Approx(0.85));
    CHECK(r.glt_accuracy.std == doctest::Approx(0.05));
    CHECK(r.highest_accuracy.mean == doctest::Approx(0.8));
    CHECK(r.highest_accuracy.std == doctest::Approx(std::sqrt(0.02 / 3)));
    CHECK(r.highest_glt_accuracy.mean == doctest::Approx(0.85));
    CHECK(r.baseline_accuracy.mean == doctest::Approx(2.41 / 3));
    const std::string out = report_csv(rep);
    CHECK(out.find("ugs,3,2,0.075") != std::string::npos);
    CHECK(report_table(rep).find("7.50 ± 2.50") != std::string::npos);
  }

  TEST_CASE("max GLT per seed picks the sparsest GLT row") {
    const std::string csv =
        "method,seed,round,graph_sparsity,model_sparsity,test_accuracy,dense_baseline_accuracy,is_glt\n"
        "ace,1,0,0.05,0.2,0.81,0.8,1\n"
        "ace,1,1,0.05,0.36,0.82,0.8,1\n"
        "ace,1,2,0.05,0.488,0.7,0.8,0\n";
    const auto rep = aggregate(parse_summary_csv(csv));
    CHECK(rep[0].max_model_sparsity.mean == doctest::Approx(0.36));
    CHECK(rep[0].highest_accuracy.mean == doctest::Approx(0.82));
  }

  TEST_CASE("malformed summary rows are ParseErrors") {
    CHECK_THROWS_AS(parse_summary_csv("method,seed\nugs,1\n"), Error);
    CHECK_THROWS_AS(
        parse_summary_csv("method,seed,round,graph_sparsity,model_sparsity,test_accuracy,dense_baseline_accuracy,is_glt\n"
                          "ugs,x,0,0,0,0,0,0\n"),
        Error);
  }

  TEST_CASE("results.json carries engine version, config echo and records") {
    const GraphDataset ds = synth_sbm(2, 10, 0.5, 0.1, 3, 1);
    const ModelState model = ModelState::for_dataset(ds, 4, Backbone::GCN, 1);
    RunConfig cfg;
    cfg.dataset = "x";
    cfg.search.method = Method::UGS;
    cfg.search.train.epochs = 5;
    cfg.search.target_graph = 0.1;
    const SearchResult r = search(ds, model, cfg.search, 1);
    const auto j = results_json(cfg, 1, r, ds, model, "T");
    CHECK(j["engine_version"] == kEngineVersion);
    CHECK(run_config_from_json(j["config"]) == cfg);
    CHECK(j["records"].size() == r.records.size());
    CHECK(ticket_from_json(j["records"][0]) == r.records[0]);
    const auto rows = parse_summary_csv(summary_csv(r, ds, model));
    CHECK(rows.size() == r.records.size());
    CHECK(rows[0].test_accuracy == r.records[0].test_accuracy);
    CHECK(rows[0].graph_sparsity == r.records[0].graph_sparsity);
  }
}
