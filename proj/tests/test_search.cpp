#include <doctest.h>

#include <random>

#include "glt/error.hpp"
#include "glt/search.hpp"
#include "support.hpp"

using namespace glt;

namespace {

SearchConfig small_config(Method m) {
  SearchConfig cfg;
  cfg.method = m;
  cfg.train.epochs = 8;
  cfg.train.lr = 0.05;
  cfg.ace.refine_epochs = 3;
  cfg.ace.rounds = 2;
  cfg.target_graph = 0.2;
  cfg.target_model = 0.5;
  return cfg;
}

}  // namespace

TEST_SUITE("search") {
  TEST_CASE("zero targets never enter the loop") {
    const GraphDataset ds = synth_sbm(2, 10, 0.5, 0.1, 3, 1);
    const ModelState model = ModelState::for_dataset(ds, 4, Backbone::GCN, 1);
    SearchConfig cfg = small_config(Method::UGS);
    cfg.target_graph = 0.0;
    cfg.target_model = 0.0;
    const SearchResult r = search(ds, model, cfg, 1);
    CHECK(r.records.empty());
    CHECK(r.baseline_trace.epochs.size() == 8);
    CHECK_THROWS_AS(max_glt_sparsity(r.records), Error);
  }

  TEST_CASE("UGS compounds model sparsity by floor counts and stops at the target") {
    const GraphDataset ds = synth_sbm(2, 10, 0.5, 0.1, 3, 1);
    const ModelState model = ModelState::for_dataset(ds, 4, Backbone::GCN, 1);
    SearchConfig cfg = small_config(Method::UGS);
    const SearchResult r = search(ds, model, cfg, 1);
    REQUIRE(!r.records.empty());
    std::size_t edges = static_cast<std::size_t>(ds.num_edges()), weights = model.num_weights();
    for (const auto& rec : r.records) {
      edges -= edges / 20;  // floor(0.05 e) for integer e
      weights -= prune_count(0.2, weights);
      CHECK(rec.masks.adj.count() == edges);
      CHECK(rec.masks.weight_count() == weights);
      // stored sparsities equal the recomputed ones exactly
      CHECK(rec.graph_sparsity == sparsity(rec.masks).graph);
      CHECK(rec.model_sparsity == sparsity(rec.masks).model);
      CHECK(rec.is_glt == (rec.test_accuracy >= rec.dense_baseline_accuracy - rec.glt_tolerance / 100.0));
    }
    const auto& last = r.records.back();
    CHECK((last.graph_sparsity >= 0.2 || last.model_sparsity >= 0.5));
    if (r.records.size() > 1) {
      const auto& prev = r.records[r.records.size() - 2];
      CHECK(prev.graph_sparsity < 0.2);
      CHECK(prev.model_sparsity < 0.5);
    }
    CHECK(r.stages.size() == r.records.size());
    CHECK(r.ticket_traces.size() == r.records.size());
    CHECK(r.ace_traces.empty());
  }

  TEST_CASE("UGS equals a hand-rolled reference IMP loop record for record") {
    const GraphDataset ds = synth_sbm(2, 10, 0.5, 0.1, 3, 2);
    const ModelState model = ModelState::for_dataset(ds, 4, Backbone::GCN, 2);
    const SearchConfig cfg = small_config(Method::UGS);
    const SearchResult r = search(ds, model, cfg, 7);

    const double baseline = evaluate_ticket(ds, model, BinaryMasks::full(ds, model), cfg.train).test_accuracy;
    CHECK(baseline == r.dense_baseline_accuracy);
    BinaryMasks active = BinaryMasks::full(ds, model);
    std::size_t round = 0;
    while (sparsity(active).graph < cfg.target_graph && sparsity(active).model < cfg.target_model) {
      ModelState m = model;
      m.rewind();
      const PruneResult p = magnitude_prune(ds, m, active, cfg.ratios, cfg.train);
      const TicketEvaluation ev = evaluate_ticket(ds, model, p.binary, cfg.train);
      REQUIRE(round < r.records.size());
      CHECK(r.records[round].masks == p.binary);
      CHECK(r.records[round].test_accuracy == ev.test_accuracy);
      CHECK(r.records[round].round_index == static_cast<int>(round));
      active = p.binary;
      ++round;
    }
    CHECK(round == r.records.size());
  }

  TEST_CASE("rewind fidelity: the caller's init is untouched and reruns are identical") {
    const GraphDataset ds = synth_sbm(2, 10, 0.5, 0.1, 3, 2);
    const ModelState model = ModelState::for_dataset(ds, 4, Backbone::GCN, 2);
    const auto w0 = model.weights();
    const SearchConfig cfg = small_config(Method::ACE);
    const SearchResult a = search(ds, model, cfg, 3);
    CHECK(model.weights() == w0);
    CHECK(model.init_snapshot() == w0);
    const SearchResult b = search(ds, model, cfg, 3);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i] == b.records[i]);
    CHECK(a.ace_traces.size() == a.records.size());
  }

  TEST_CASE("RANDOM cardinalities equal magnitude cardinalities round for round") {
    const GraphDataset ds = synth_sbm(2, 10, 0.5, 0.1, 3, 2);
    const ModelState model = ModelState::for_dataset(ds, 4, Backbone::GCN, 2);
    const SearchResult ugs = search(ds, model, small_config(Method::UGS), 4);
    const SearchResult rnd = search(ds, model, small_config(Method::RANDOM), 4);
    REQUIRE(ugs.records.size() == rnd.records.size());
    for (std::size_t i = 0; i < ugs.records.size(); ++i) {
      CHECK(ugs.records[i].masks.adj.count() == rnd.records[i].masks.adj.count());
      CHECK(ugs.records[i].masks.weight_count() == rnd.records[i].masks.weight_count());
      CHECK(rnd.records[i].method == Method::RANDOM);
    }
  }

  TEST_CASE("ACE keeps per-round sparsities on the IMP schedule") {
    const GraphDataset ds = synth_sbm(2, 10, 0.5, 0.1, 3, 2);
    const ModelState model = ModelState::for_dataset(ds, 4, Backbone::GCN, 2);
    const SearchResult ace = search(ds, model, small_config(Method::ACE), 4);
    const SearchResult ugs = search(ds, model, small_config(Method::UGS), 4);
    REQUIRE(ace.records.size() == ugs.records.size());
    for (std::size_t i = 0; i < ace.records.size(); ++i) {
      CHECK(ace.records[i].graph_sparsity == ugs.records[i].graph_sparsity);
      CHECK(ace.records[i].model_sparsity == ugs.records[i].model_sparsity);
    }
  }

  TEST_CASE("graph side pinned at its first-round value") {
    const GraphDataset ds = synth_sbm(2, 12, 0.6, 0.1, 3, 2);
    const ModelState model = ModelState::for_dataset(ds, 4, Backbone::GCN, 2);
    SearchConfig cfg = small_config(Method::UGS);
    cfg.fixed = fixed_side_from_string("graph@0.05");
    cfg.target_graph = 0.95;
    cfg.target_model = 0.6;
    const SearchResult r = search(ds, model, cfg, 1);
    REQUIRE(r.records.size() >= 3);
    for (const auto& rec : r.records) {
      CHECK(rec.graph_sparsity == r.records.front().graph_sparsity);
      CHECK(rec.masks.adj == r.records.front().masks.adj);
    }
    for (std::size_t i = 1; i < r.records.size(); ++i)
      CHECK(r.records[i].model_sparsity > r.records[i - 1].model_sparsity);
  }

  TEST_CASE("model side pinned after two rounds") {
    const GraphDataset ds = synth_sbm(2, 12, 0.6, 0.1, 3, 2);
    const ModelState model = ModelState::for_dataset(ds, 4, Backbone::GCN, 2);
    SearchConfig cfg = small_config(Method::UGS);
    cfg.fixed = fixed_side_from_string("model@0.36");
    cfg.target_graph = 0.2;
    cfg.target_model = 0.95;
    const SearchResult r = search(ds, model, cfg, 1);
    REQUIRE(r.records.size() >= 3);
    for (std::size_t i = 2; i < r.records.size(); ++i) CHECK(r.records[i].masks.weights == r.records[1].masks.weights);
    CHECK(r.records[0].model_sparsity < r.records[1].model_sparsity);
  }

  TEST_CASE("fixed side strings and reachability") {
    CHECK(fixed_side_from_string("none").kind == FixedSide::Kind::None);
    const FixedSide f = fixed_side_from_string("model@0.2");
    CHECK(f.kind == FixedSide::Kind::Model);
    CHECK(f.value == 0.2);
    CHECK(to_string(f) == "model@0.2");
    CHECK_THROWS_AS(fixed_side_from_string("edges@0.1"), Error);
    CHECK_THROWS_AS(fixed_side_from_string("graph@x"), Error);
    CHECK(rounds_to_reach(0.2, 0.36) == 2);
    CHECK(rounds_to_reach(0.05, 0.05) == 1);
    CHECK(rounds_to_reach(0.2, 0.0) == 0);
    CHECK_THROWS_AS(rounds_to_reach(0.2, 0.3), Error);
    CHECK(method_from_string("ace") == Method::ACE);
    CHECK(method_from_string("UGS") == Method::UGS);
    CHECK_THROWS_AS(method_from_string("gebt"), Error);
  }

  TEST_CASE("is_glt uses points") {
    CHECK(is_glt(0.80, 0.81, 1.0));
    CHECK(!is_glt(0.79, 0.81, 1.0));
    CHECK(is_glt(0.81, 0.81, 0.0));
    CHECK(!is_glt(0.8099, 0.81, 0.0));
  }

  TEST_CASE("max GLT sparsity against a brute-force scan") {
    CHECK(!max_glt_sparsity({TicketRecord{}}).found);
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<TicketRecord> recs;
      const int n = 1 + static_cast<int>(gen() % 8);
      for (int i = 0; i < n; ++i) {
        TicketRecord r;
        r.graph_sparsity = static_cast<double>(gen() % 5) / 10.0;
        r.model_sparsity = static_cast<double>(gen() % 5) / 10.0;
        r.test_accuracy = static_cast<double>(gen() % 100) / 100.0;
        r.is_glt = gen() % 2;
        r.round_index = i;
        recs.push_back(r);
      }
      int best = -1;
      for (int i = 0; i < n; ++i) {
        if (!recs[i].is_glt) continue;
        const double kept = (1 - recs[i].graph_sparsity) * (1 - recs[i].model_sparsity);
        if (best < 0 || kept < (1 - recs[best].graph_sparsity) * (1 - recs[best].model_sparsity)) best = i;
      }
      const GltSummary s = max_glt_sparsity(recs);
      CHECK(s.found == (best >= 0));
      if (best >= 0) {
        CHECK(s.round_index == best);
        CHECK(s.accuracy == recs[best].test_accuracy);
      }
    }
  }

  TEST_CASE("divergent dense baseline raises BaselineDivergence") {
    const GraphDataset ds = synth_sbm(2, 10, 0.5, 0.1, 3, 2);
    std::vector<Matrix> w{Matrix::Constant(3, 4, 1e154), Matrix::Constant(4, 2, 1e154)};
    const ModelState model = ModelState::from_weights(w, Backbone::GCN);
    try {
      search(ds, model, small_config(Method::UGS), 1);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BaselineDivergence);
    }
  }
}
