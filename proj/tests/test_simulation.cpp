#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "pa/simulation.hpp"

using namespace pa;
using Catch::Approx;

namespace {

JointSource standard_source() { return make_bsc_source(0.5, 0.1); }
TypicalityParams standard_typ() { return {0.2, 0.1, TypicalityKind::entropy_ball}; }

}  // namespace

TEST_CASE("wilson intervals match hand-computed values") {
  // 80 successes in 100 trials, z = 1.959963984540054:
  // center = (0.8 + z^2/200) / (1 + z^2/100), half-width from the score form.
  const Estimate e = wilson_interval(80, 100);
  CHECK(e.p == Approx(0.8).margin(1e-15));
  CHECK(e.lo == Approx(0.711170).margin(1e-4));
  CHECK(e.hi == Approx(0.866633).margin(1e-4));

  // Degenerate corners stay inside [0, 1].
  const Estimate zero = wilson_interval(0, 50);
  CHECK(zero.p == 0.0);
  CHECK(zero.lo < 1e-12);  // exactly 0 up to float rounding
  CHECK(zero.hi > 0.0);
  CHECK(zero.hi < 0.1);
  const Estimate one = wilson_interval(50, 50);
  CHECK(one.hi == 1.0);
  CHECK(one.lo < 1.0);
  CHECK(one.lo > 0.9);

  CHECK_THROWS_AS(wilson_interval(1, 0), InvalidParams);
  CHECK_THROWS_AS(wilson_interval(5, 4), InvalidParams);
}

TEST_CASE("parallel trials are byte-identical across thread counts") {
  auto fn = [](uint64_t i) -> uint64_t {
    Rng rng(stream_seed(7, i, 3));
    return rng() ^ (i * 0x9E3779B97F4A7C15ull);
  };
  const auto seq = parallel_trials<uint64_t>(5000, 1, fn);
  const auto par2 = parallel_trials<uint64_t>(5000, 2, fn);
  const auto par8 = parallel_trials<uint64_t>(5000, 8, fn);
  CHECK(seq == par2);
  CHECK(seq == par8);
}

TEST_CASE("wilson intervals cover a known bernoulli rate") {
  // 100 seeded repetitions of a Bernoulli(1/100) stream of 1e5 trials; the
  // 95% interval must contain the true rate in at least 93 of them.
  const uint64_t trials = 100000;
  uint64_t covered = 0;
  for (uint64_t rep = 0; rep < 100; ++rep) {
    Rng rng(stream_seed(4242, rep));
    uint64_t hits = 0;
    for (uint64_t i = 0; i < trials; ++i) hits += uniform_below(rng, 100) == 0;
    const Estimate e = wilson_interval(hits, trials);
    covered += (e.lo <= 0.01 && 0.01 <= e.hi) ? 1 : 0;
  }
  CHECK(covered >= 93);
}

TEST_CASE("a single-trial estimate is valid but wide") {
  const FieldCtx ctx = FieldCtx::make(101, 1);
  const Estimate e = estimate_finite_completeness(ctx, 2, 1, 5);
  CHECK(e.trials == 1);
  CHECK(e.p == 0.0);
  CHECK(e.lo == 0.0);
  CHECK(e.hi > 0.5);  // one trial pins almost nothing down
}

TEST_CASE("parallel trials propagate worker exceptions") {
  auto fn = [](uint64_t i) -> int {
    if (i == 137) throw InvalidParams("boom");
    return static_cast<int>(i);
  };
  CHECK_THROWS_AS((parallel_trials<int>(1000, 4, fn)), InvalidParams);
}

TEST_CASE("finite completeness is perfect and privacy violations never occur") {
  const FieldCtx ctx = FieldCtx::make(101, 1);
  std::vector<TrialRecord> comp_rec;
  const Estimate pe1 = estimate_finite_completeness(ctx, 3, 2000, 11, 4, &comp_rec);
  CHECK(pe1.successes == 0);  // zero rejections
  CHECK(pe1.p == 0.0);
  // The honest prover is drawn uniformly from [K]; each user shows up often.
  std::array<uint64_t, 3> seen{};
  for (const auto& r : comp_rec) {
    REQUIRE(r.prover >= 1);
    REQUIRE(r.prover <= 3);
    ++seen[r.prover - 1];
  }
  for (const uint64_t count : seen) CHECK(count > 500);  // ~667 expected

  std::vector<TrialRecord> priv_rec;
  const Estimate pp = estimate_finite_privacy(ctx, 3, 2000, 11, 4, &priv_rec);
  CHECK(pp.successes == 0);
  CHECK(pp.trials == 2000);
  // All three provers answer each challenge; every response is scored against
  // the session secret and the records stay grouped by trial.
  REQUIRE(priv_rec.size() == 3 * 2000);
  for (size_t i = 0; i < priv_rec.size(); ++i) {
    const TrialRecord& r = priv_rec[i];
    CHECK(r.trial == i / 3);
    CHECK(r.prover == i % 3 + 1);
    CHECK(r.decision == (r.s == r.s_hat));
  }

  // Privacy is a comparison between provers: a single user is rejected.
  CHECK_THROWS_AS(estimate_finite_privacy(ctx, 1, 10, 11), ConfigInvalid);
}

TEST_CASE("finite soundness estimates sit at the blind guessing rate") {
  const FieldCtx ctx = FieldCtx::make(101, 1);
  const uint64_t trials = 20000;
  const double p = 1.0 / 101.0;
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(trials));

  const Estimate uni = estimate_finite_soundness(ctx, 2, AttackStrategy::uniform_finite(),
                                                 trials, 17, 4);
  CHECK(std::abs(uni.p - p) < 4 * sigma);
  CHECK(uni.lo < p);
  CHECK(p < uni.hi);

  const Estimate con = estimate_finite_soundness(
      ctx, 2, AttackStrategy::constant_finite(ctx.from_value(42)), trials, 19, 4);
  CHECK(std::abs(con.p - p) < 4 * sigma);
}

TEST_CASE("replay experiments separate cached from fresh challenges") {
  const FieldCtx ctx = FieldCtx::make(101, 1);

  SECTION("cached challenges starve the collector") {
    const auto runs = replay_experiment(ctx, 2, false, 10, 300, 23, 4);
    uint64_t wins = 0;
    for (const auto& r : runs) wins += r.succeeded;
    // Ten blind 1/101 guesses per run: expect ~9.5% lucky runs, never 100%.
    CHECK(wins < 60);
  }
  SECTION("fresh challenges fall by the second session") {
    const auto runs = replay_experiment(ctx, 2, true, 10, 300, 29, 4);
    for (const auto& r : runs) {
      REQUIRE(r.succeeded);
      CHECK(r.sessions <= 3);
    }
  }
}

TEST_CASE("binning completeness improves with block length") {
  const auto src = standard_source();
  const auto typ = standard_typ();
  const BinningRates rates = rates_from_dist(src, typ);

  const Codebook cb8 = make_codebook(src, 8, rates, 31);
  const Codebook cb16 = make_codebook(src, 16, rates, 37);
  const BinningCompleteness c8 = estimate_binning_completeness(cb8, typ, 4000, 41, 4);
  const BinningCompleteness c16 = estimate_binning_completeness(cb16, typ, 4000, 43, 4);

  CHECK(c16.error.p < c8.error.p);
  CHECK(c8.e1 + c8.e2 + c8.e3 > 0);
  // At n = 16 the encoder fallback rate is ~e^-4; check the diagnostics keep
  // seeing it but rarely.
  CHECK(c16.e1 > 0);
  CHECK(c16.e1 < 4000 * 0.05);
}

TEST_CASE("binning soundness: blind guessing hits 1/bin_size") {
  const auto src = standard_source();
  const auto typ = standard_typ();
  const Codebook cb = make_codebook(src, 12, rates_from_dist(src, typ), 47);
  REQUIRE(cb.bin_size() == 8);

  const uint64_t trials = 20000;
  const double p = 1.0 / 8.0;
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(trials));
  const Estimate e = estimate_binning_soundness(cb, typ, AttackStrategy::uniform_binning(),
                                                trials, 53, 4);
  CHECK(std::abs(e.p - p) < 4 * sigma);
}

TEST_CASE("binning privacy compares provers and records each response") {
  const auto src = standard_source();
  const auto typ = standard_typ();
  const Codebook cb = make_codebook(src, 12, rates_from_dist(src, typ), 73);
  std::vector<TrialRecord> rec;
  const Estimate pp = estimate_binning_privacy(cb, typ, 3, 400, 79, 2, &rec);
  CHECK(pp.trials == 400);
  CHECK(pp.lo <= pp.p);
  CHECK(pp.p <= pp.hi);
  REQUIRE(rec.size() == 3 * 400);
  uint64_t disagreements = 0;
  for (size_t i = 0; i < rec.size(); i += 3) {
    CHECK(rec[i].prover == 1);
    bool disagree = false;
    for (size_t k = 1; k < 3; ++k) {
      CHECK(rec[i + k].prover == k + 1);
      CHECK(rec[i + k].trial == rec[i].trial);
      CHECK(rec[i + k].decision == (rec[i + k].s == rec[i + k].s_hat));
      if (rec[i + k].s_hat != rec[i].s_hat) disagree = true;
    }
    disagreements += disagree ? 1 : 0;
  }
  // The reported frequency is exactly the per-trial disagreement count.
  CHECK(pp.successes == disagreements);

  // Privacy is a comparison between provers: a single user is rejected.
  CHECK_THROWS_AS(estimate_binning_privacy(cb, typ, 1, 10, 79), ConfigInvalid);
}

TEST_CASE("soundness estimators reject strategies from the other regime") {
  const FieldCtx ctx = FieldCtx::make(101, 1);
  CHECK_THROWS_AS(estimate_finite_soundness(ctx, 2, AttackStrategy::uniform_binning(), 10, 3),
                  WrongRegime);

  const auto src = standard_source();
  const auto typ = standard_typ();
  const Codebook cb = make_codebook(src, 8, rates_from_dist(src, typ), 83);
  CHECK_THROWS_AS(
      estimate_binning_soundness(cb, typ, AttackStrategy::uniform_finite(), 10, 3),
      WrongRegime);
}

TEST_CASE("estimators are reproducible and thread-count independent") {
  const FieldCtx ctx = FieldCtx::make(101, 1);

  std::vector<TrialRecord> t1, t4;
  const Estimate e1 = estimate_finite_soundness(ctx, 2, AttackStrategy::uniform_finite(), 3000,
                                                99, 1, &t1);
  const Estimate e4 = estimate_finite_soundness(ctx, 2, AttackStrategy::uniform_finite(), 3000,
                                                99, 4, &t4);
  CHECK(e1.successes == e4.successes);
  REQUIRE(t1.size() == t4.size());
  std::ostringstream s1, s4;
  write_jsonl(t1, s1);
  write_jsonl(t4, s4);
  CHECK(s1.str() == s4.str());  // byte-identical transcripts

  const auto src = standard_source();
  const auto typ = standard_typ();
  const Codebook cb = make_codebook(src, 12, rates_from_dist(src, typ), 61);
  const BinningCompleteness b1 = estimate_binning_completeness(cb, typ, 2000, 101, 1);
  const BinningCompleteness b3 = estimate_binning_completeness(cb, typ, 2000, 101, 3);
  CHECK(b1.error.successes == b3.error.successes);
  CHECK(b1.e1 == b3.e1);
  CHECK(b1.e2 == b3.e2);
  CHECK(b1.e3 == b3.e3);
}

TEST_CASE("transcript records carry the full session story") {
  const FieldCtx ctx = FieldCtx::make(101, 1);
  std::vector<TrialRecord> transcript;
  (void)estimate_finite_completeness(ctx, 2, 10, 7, 1, &transcript);
  REQUIRE(transcript.size() == 10);
  for (size_t i = 0; i < transcript.size(); ++i) {
    const TrialRecord& r = transcript[i];
    CHECK(r.regime == "finite");
    CHECK(r.hypothesis == "honest");
    CHECK(r.prover >= 1);
    CHECK(r.prover <= 2);
    CHECK(r.decision);
    CHECK(r.s == r.s_hat);
    CHECK(r.master_seed == 7);
    CHECK(r.trial == i);
  }
  const ordered_json line = trial_record_to_json(transcript[0]);
  CHECK(line.at("regime") == "finite");
  CHECK(line.at("decision") == true);
  const std::vector<std::string> keys = {"regime", "hypothesis", "prover",      "decision", "s",
                                         "s_hat",  "diag",       "master_seed", "trial"};
  size_t k = 0;
  for (auto it = line.begin(); it != line.end(); ++it, ++k) CHECK(it.key() == keys[k]);
}

TEST_CASE("binning leakage estimate is small for honest encodes") {
  const auto src = standard_source();
  const auto typ = standard_typ();
  const Codebook cb = make_codebook(src, 12, rates_from_dist(src, typ), 67);
  const BinningLeakage leak = estimate_binning_leakage(cb, typ, 5000, 71, 4);
  CHECK(leak.trials == 5000);
  CHECK(leak.mi_bits >= 0.0);
  CHECK(leak.normalized == Approx(leak.mi_bits / 12.0));
}

TEST_CASE("sweeps produce one well-formed row per axis value") {
  SECTION("binning axis n") {
    SweepConfig cfg;
    cfg.axis = SweepAxis::n;
    // Note 8 -> 16, not 8 -> 12: the entropy ball at xi = 0.2 admits only
    // single-flip corruptions until n = 16 widens it to one or two flips, so
    // completeness between 8 and 12 is NOT monotone. The doubling is.
    cfg.values = {8, 16};
    cfg.trials = 600;
    cfg.threads = 2;
    cfg.seed = 5;
    const auto rows = run_sweep(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].axis == "n");
    CHECK(rows[0].value == 8);
    CHECK(rows[1].value == 16);
    for (const auto& r : rows) {
      CHECK(r.trials == 600);
      CHECK(r.pe1.trials == 600);
      // Rate columns scale with the configured user count (default K = 2).
      CHECK(r.rate_achieved == Approx(2 * binary_entropy(0.1)).margin(1e-12));
      CHECK(r.rate_capacity == Approx(2.0).margin(1e-12));
      CHECK(r.pe1.lo <= r.pe1.p);
      CHECK(r.pe1.p <= r.pe1.hi);
      // The pp column is the cross-prover disagreement frequency.
      CHECK(r.pp.trials == 600);
      CHECK(r.pp.lo <= r.pp.p);
      CHECK(r.pp.p <= r.pp.hi);
    }
    // Larger blocks decode better.
    CHECK(rows[1].pe1.p < rows[0].pe1.p);
  }
  SECTION("finite axis K") {
    SweepConfig cfg;
    cfg.axis = SweepAxis::K;
    cfg.values = {2, 3, 4};
    cfg.trials = 300;
    cfg.seed = 6;
    const auto rows = run_sweep(cfg);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
      CHECK(r.axis == "K");
      CHECK(r.pe1.successes == 0);  // completeness is exact
      CHECK(r.pp.successes == 0);   // no privacy violations
    }
    // The finite rate grows with K.
    CHECK(rows[0].rate_achieved < rows[1].rate_achieved);
    CHECK(rows[1].rate_achieved < rows[2].rate_achieved);
  }
  SECTION("finite axis qL: soundness tracks 1/order and rate approaches K") {
    SweepConfig cfg;
    cfg.axis = SweepAxis::qL;
    cfg.values = {8, 64, 1024};  // 2^3, 2^6, 2^10: the K=3 floor and upward
    cfg.K = 3;
    cfg.trials = 2000;
    cfg.threads = 4;
    cfg.seed = 11;
    const auto rows = run_sweep(cfg);
    REQUIRE(rows.size() == 3);
    for (size_t i = 0; i < rows.size(); ++i) {
      const double target = 1.0 / rows[i].value;
      CHECK(rows[i].pe2.lo <= target);
      CHECK(target <= rows[i].pe2.hi);
    }
    CHECK(rows[0].rate_achieved < rows[1].rate_achieved);
    CHECK(rows[1].rate_achieved < rows[2].rate_achieved);
    CHECK(rows[2].rate_achieved < 3.0);
  }
  SECTION("finite axis qL accepts prime powers only") {
    SweepConfig cfg;
    cfg.axis = SweepAxis::qL;
    cfg.values = {101, 125};  // 101 prime, 125 = 5^3
    cfg.trials = 200;
    cfg.seed = 7;
    const auto rows = run_sweep(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].pe2.p < 0.05);  // blind guessing over 101 elements
    cfg.values = {100};           // 2^2 * 5^2: not a prime power
    CHECK_THROWS_AS(run_sweep(cfg), ConfigInvalid);
  }
  SECTION("config validation") {
    SweepConfig cfg;
    cfg.axis = SweepAxis::n;
    cfg.values = {};
    CHECK_THROWS_AS(run_sweep(cfg), ConfigInvalid);
    cfg.values = {8, 16, 12};  // not monotone
    CHECK_THROWS_AS(run_sweep(cfg), ConfigInvalid);
    cfg.values = {8.5};
    CHECK_THROWS_AS(run_sweep(cfg), ConfigInvalid);
    cfg.values = {40};
    CHECK_THROWS_AS(run_sweep(cfg), ConfigInvalid);
    cfg.axis = SweepAxis::xi;
    cfg.values = {1.5};
    CHECK_THROWS_AS(run_sweep(cfg), ConfigInvalid);
  }
}

TEST_CASE("sweep CSV uses the documented header verbatim") {
  SweepConfig cfg;
  cfg.axis = SweepAxis::K;
  cfg.values = {2};
  cfg.trials = 100;
  const auto rows = run_sweep(cfg);
  std::ostringstream csv;
  sweep_to_csv(rows, csv);
  const std::string text = csv.str();
  const std::string header = text.substr(0, text.find('\n'));
  CHECK(header ==
        "axis,value,pe1,pe1_lo,pe1_hi,pe2,pe2_lo,pe2_hi,pp,pp_lo,pp_hi,"
        "rate_achieved,rate_capacity,trials");
  // One data line per row, comma count matches the 14 columns.
  const std::string body = text.substr(text.find('\n') + 1);
  CHECK(std::count(body.begin(), body.end(), '\n') == 1);
  CHECK(std::count(body.begin(), body.end(), ',') == 13);

  const ordered_json mirror = sweep_to_json(rows);
  REQUIRE(mirror.is_array());
  REQUIRE(mirror.size() == 1);
  CHECK(mirror[0].at("axis") == "K");
  CHECK(mirror[0].at("pe1").contains("lo"));
}

TEST_CASE("simulation configs parse and validate") {
  const ordered_json good = ordered_json::parse(R"({
    "regime": "finite",
    "field": {"q": 101, "L": 1},
    "K": 3,
    "attacker": "uniform",
    "trials": 500,
    "threads": 2,
    "seed": 9
  })");
  const SimConfig cfg = sim_config_from_json(good);
  CHECK(cfg.regime == "finite");
  CHECK(cfg.q == 101);
  CHECK(cfg.K == 3);
  CHECK(cfg.attacker == "uniform");
  CHECK(cfg.trials == 500);
  REQUIRE(cfg.seed.has_value());
  CHECK(*cfg.seed == 9);

  CHECK_THROWS_AS(sim_config_from_json(ordered_json::parse(R"({"regime": "quantum"})")),
                  ConfigInvalid);
  CHECK_THROWS_AS(sim_config_from_json(ordered_json::parse(R"({})")), ConfigInvalid);
  CHECK_THROWS_AS(
      sim_config_from_json(ordered_json::parse(R"({"regime": "finite", "attacker": "x"})")),
      ConfigInvalid);
  CHECK_THROWS_AS(
      sim_config_from_json(ordered_json::parse(R"({"regime": "finite", "trials": 0})")),
      ConfigInvalid);
}

TEST_CASE("whole simulations run end to end from a config") {
  SECTION("finite: all three metrics from one run, default uniform attacker") {
    SimConfig cfg;
    cfg.regime = "finite";
    cfg.q = 101;
    cfg.K = 2;
    cfg.trials = 400;
    cfg.threads = 2;
    std::vector<TrialRecord> transcript;
    const ordered_json out = run_simulation(cfg, 1234, &transcript);
    CHECK(out.at("regime") == "finite");
    CHECK(out.at("attacker") == "finite_uniform_guess");
    CHECK(out.at("pe1").at("successes") == 0);
    CHECK(out.at("pp").at("successes") == 0);
    CHECK(out.at("pe2").at("trials") == 400);
    CHECK(out.at("pe2_analytic").get<double>() == Approx(1.0 / 101.0));
    // soundness acceptance is rare; its Wilson band must cover 1/101
    CHECK(out.at("pe2").at("lo").get<double>() <= 1.0 / 101.0);
    CHECK(out.at("rate").contains("rate"));
    // Phase order: 400 completeness, 400 soundness, then 400 privacy trials
    // with one record per prover (K = 2).
    REQUIRE(transcript.size() == 400 + 400 + 2 * 400);
    CHECK(transcript[0].hypothesis == "honest");
    CHECK(transcript[400].hypothesis == "finite_uniform_guess");
    CHECK(transcript[800].hypothesis == "honest");
    CHECK(transcript[800].prover == 1);
    CHECK(transcript[801].prover == 2);
    CHECK(transcript.back().trial == 399);
  }
  SECTION("finite replay, fresh challenges") {
    SimConfig cfg;
    cfg.regime = "finite";
    cfg.attacker = "replay";
    cfg.unsafe_fresh_challenges = true;
    cfg.sessions = 6;
    cfg.trials = 100;
    const ordered_json out = run_simulation(cfg, 77);
    CHECK(out.at("attacker") == "finite_replay_collector");
    // Cold-start soundness: one cached challenge is never enough points.
    CHECK(out.at("pe2").at("lo").get<double>() <= 1.0 / 101.0);
    // The stateful experiment breaks the scheme once challenges refresh.
    CHECK(out.at("replay").at("success").at("p").get<double>() == 1.0);
    CHECK(out.at("replay").at("mean_sessions_to_success").get<double>() < 3.0);
  }
  SECTION("binning honest and attacked") {
    SimConfig cfg;
    cfg.regime = "binning";
    cfg.K = 2;
    cfg.n = 12;
    cfg.trials = 500;
    cfg.threads = 2;
    const ordered_json honest = run_simulation(cfg, 55);
    CHECK(honest.at("attacker") == "bin_uniform_guess");
    CHECK(honest.at("pe1").at("trials") == 500);
    CHECK(honest.at("pe2").at("trials") == 500);
    CHECK(honest.at("pp").at("trials") == 500);
    CHECK(honest.at("diag").contains("E1"));
    CHECK(honest.at("rate").at("achieved").get<double>() ==
          Approx(2 * binary_entropy(0.1)).margin(1e-12));

    cfg.attacker = "bin_map";
    const ordered_json attacked = run_simulation(cfg, 55);
    CHECK(attacked.at("attacker") == "bin_empirical_map");
    // The trained MAP attack beats blind 1/8 guessing.
    CHECK(attacked.at("pe2").at("p").get<double>() > 0.125);
    // Completeness does not depend on the attacker choice.
    CHECK(attacked.at("pe1") == honest.at("pe1"));

    cfg.attacker = "replay";
    CHECK_THROWS_AS(run_simulation(cfg, 55), ConfigInvalid);

    // Privacy compares provers, so a single-user simulation is rejected.
    cfg.attacker = "";
    cfg.K = 1;
    CHECK_THROWS_AS(run_simulation(cfg, 55), ConfigInvalid);
  }
}
