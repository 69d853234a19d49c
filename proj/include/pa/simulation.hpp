#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pa/adversary.hpp"
#include "pa/serialization.hpp"

namespace pa {

// ---------------------------------------------------------------------------
// Deterministic parallel trial running. Each trial seeds its own generator
// from (master_seed, trial_index, stream_salt), and results land in a
// preallocated slot addressed by trial index, so the outcome is bit-identical
// regardless of how many worker threads ran or how they interleaved.
// ---------------------------------------------------------------------------

namespace salt {
inline constexpr uint64_t completeness = 1;
inline constexpr uint64_t soundness = 2;
inline constexpr uint64_t privacy = 3;
inline constexpr uint64_t training = 4;
inline constexpr uint64_t replay = 5;
inline constexpr uint64_t codebook = 6;
inline constexpr uint64_t leakage = 7;
}  // namespace salt

template <typename T, typename Fn>
std::vector<T> parallel_trials(uint64_t trials, uint32_t threads, Fn&& fn) {
  std::vector<T> results(trials);
  if (threads <= 1) {
    for (uint64_t i = 0; i < trials; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<uint64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (uint64_t i; (i = next.fetch_add(1, std::memory_order_relaxed)) < trials;) {
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(trials, std::memory_order_relaxed);  // drain remaining work
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (uint32_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

// ---------------------------------------------------------------------------
// Wilson score interval for a binomial proportion at 95% confidence.
// ---------------------------------------------------------------------------

inline constexpr double kWilsonZ = 1.959963984540054;

struct Estimate {
  double p = 0;
  double lo = 0;
  double hi = 0;
  uint64_t successes = 0;
  uint64_t trials = 0;
};

inline Estimate wilson_interval(uint64_t successes, uint64_t trials) {
  if (trials == 0) throw InvalidParams("an estimate needs at least one trial");
  if (successes > trials) throw InvalidParams("successes exceed trials");
  const double n = static_cast<double>(trials);
  const double p_hat = static_cast<double>(successes) / n;
  const double z2 = kWilsonZ * kWilsonZ;
  const double denom = 1.0 + z2 / n;
  const double center = (p_hat + z2 / (2 * n)) / denom;
  const double half =
      kWilsonZ * std::sqrt(p_hat * (1 - p_hat) / n + z2 / (4 * n * n)) / denom;
  Estimate e;
  e.p = p_hat;
  e.lo = std::max(0.0, center - half);
  e.hi = std::min(1.0, center + half);
  e.successes = successes;
  e.trials = trials;
  return e;
}

// ---------------------------------------------------------------------------
// Per-trial transcript records, one JSON object per line when written out.
// Error-event diagnostics for the binning regime: E1 = the encoder found no
// jointly typical codeword, E2 = the decoder's bin held none, E3 = it held
// more than one.
// ---------------------------------------------------------------------------

struct TrialRecord {
  std::string regime;      // "finite" | "binning"
  std::string hypothesis;  // "honest" or the attack name
  uint32_t prover = 0;     // 1-based user index; 0 for an adversary
  bool decision = false;   // verifier accepted / secret recovered
  uint64_t s = 0;          // the verifier-side secret (packed value / bin slot)
  uint64_t s_hat = 0;      // the response
  std::string diag;        // "", "E1", "E2", "E3"
  uint64_t master_seed = 0;
  uint64_t trial = 0;
};

inline ordered_json trial_record_to_json(const TrialRecord& r) {
  ordered_json j;
  j["regime"] = r.regime;
  j["hypothesis"] = r.hypothesis;
  j["prover"] = r.prover;
  j["decision"] = r.decision;
  j["s"] = r.s;
  j["s_hat"] = r.s_hat;
  j["diag"] = r.diag;
  j["master_seed"] = r.master_seed;
  j["trial"] = r.trial;
  return j;
}

inline void write_jsonl(const std::vector<TrialRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << trial_record_to_json(r).dump() << "\n";
}

// ---------------------------------------------------------------------------
// Finite-regime estimators. Every trial draws a fresh CA state so estimates
// average over the scheme's own randomness, not one lucky key draw.
// ---------------------------------------------------------------------------

/// Completeness: probability that an honest prover is REJECTED. The prover
/// index is drawn uniformly from [K] each trial, so every user's key gets
/// exercised.
inline Estimate estimate_finite_completeness(const FieldCtx& ctx, uint32_t K, uint64_t trials,
                                             uint64_t master_seed, uint32_t threads = 1,
                                             std::vector<TrialRecord>* transcript = nullptr) {
  auto run = [&](uint64_t trial) -> TrialRecord {
    Rng rng(stream_seed(master_seed, trial, salt::completeness));
    const CaOutput ca = ca_keygen(ctx, K, rng);
    const FiniteVerifier verifier(ca);
    const uint32_t prover = static_cast<uint32_t>(uniform_below(rng, K)) + 1;
    const Challenge ch = verifier.challenge(rng);
    const Response resp = prover_respond(user_key(ca, prover), ch);
    TrialRecord rec{"finite", "honest", prover, verifier.verify(resp),
                    verifier.secret().v, resp.s_hat.v, "", master_seed, trial};
    return rec;
  };
  auto records = parallel_trials<TrialRecord>(trials, threads, run);
  uint64_t rejections = 0;
  for (const auto& r : records) rejections += !r.decision;
  if (transcript) *transcript = std::move(records);
  return wilson_interval(rejections, trials);
}

/// Soundness: probability that the given attack is ACCEPTED against a fresh
/// CA draw. The strategy is copied per trial, so stateful collectors start
/// cold each time.
inline Estimate estimate_finite_soundness(const FieldCtx& ctx, uint32_t K,
                                          const AttackStrategy& strategy, uint64_t trials,
                                          uint64_t master_seed, uint32_t threads = 1,
                                          std::vector<TrialRecord>* transcript = nullptr) {
  auto run = [&](uint64_t trial) -> TrialRecord {
    Rng rng(stream_seed(master_seed, trial, salt::soundness));
    const CaOutput ca = ca_keygen(ctx, K, rng);
    const FiniteVerifier verifier(ca);
    const Challenge ch = verifier.challenge(rng);
    AttackStrategy local = strategy;
    const FieldElem guess = attack_finite(local, ch, ctx, rng);
    TrialRecord rec{"finite", attack_name(strategy.kind), 0,
                    verifier.verify(Response{ch.session_id, guess}),
                    verifier.secret().v, guess.v, "", master_seed, trial};
    return rec;
  };
  auto records = parallel_trials<TrialRecord>(trials, threads, run);
  uint64_t wins = 0;
  for (const auto& r : records) wins += r.decision;
  if (transcript) *transcript = std::move(records);
  return wilson_interval(wins, trials);
}

/// Privacy proxy: per trial, all K provers answer the SAME challenge under
/// the same CA draw, and the trial counts as a violation if any response
/// differs from prover 1's. Identically distributed responses are what keep
/// users indistinguishable, and in this scheme every prover interpolates the
/// same constant term, so the violation frequency is exactly zero. Needs at
/// least two users, as there is nothing to compare against otherwise. The
/// transcript gets one record per prover per trial; the trial-level verdict
/// is recovered by grouping records on the trial index.
inline Estimate estimate_finite_privacy(const FieldCtx& ctx, uint32_t K, uint64_t trials,
                                        uint64_t master_seed, uint32_t threads = 1,
                                        std::vector<TrialRecord>* transcript = nullptr) {
  if (K < 2) throw ConfigInvalid("privacy estimation compares provers: K must be at least 2");
  struct PrivacyTrial {
    std::vector<TrialRecord> records;
    bool disagree = false;
  };
  auto run = [&](uint64_t trial) -> PrivacyTrial {
    Rng rng(stream_seed(master_seed, trial, salt::privacy));
    const CaOutput ca = ca_keygen(ctx, K, rng);
    const FiniteVerifier verifier(ca);
    const Challenge ch = verifier.challenge(rng);
    PrivacyTrial out;
    out.records.reserve(K);
    uint64_t first = 0;
    for (uint32_t k = 1; k <= K; ++k) {
      const Response resp = prover_respond(user_key(ca, k), ch);
      if (k == 1) first = resp.s_hat.v;
      else if (resp.s_hat.v != first) out.disagree = true;
      out.records.push_back(TrialRecord{"finite", "honest", k, verifier.verify(resp),
                                        verifier.secret().v, resp.s_hat.v, "", master_seed,
                                        trial});
    }
    return out;
  };
  auto per_trial = parallel_trials<PrivacyTrial>(trials, threads, run);
  uint64_t violations = 0;
  for (const auto& t : per_trial) violations += t.disagree;
  if (transcript) {
    transcript->clear();
    transcript->reserve(trials * K);
    for (auto& t : per_trial) {
      for (auto& r : t.records) transcript->push_back(std::move(r));
    }
  }
  return wilson_interval(violations, trials);
}

/// One replay experiment: a fresh CA, then up to max_sessions authentication
/// rounds observed by a replay collector that answers each round.
struct ReplayRun {
  bool succeeded = false;
  uint32_t sessions = 0;  // sessions consumed until the first acceptance
};

inline std::vector<ReplayRun> replay_experiment(const FieldCtx& ctx, uint32_t K,
                                                bool unsafe_fresh_challenges,
                                                uint32_t max_sessions, uint64_t runs,
                                                uint64_t master_seed, uint32_t threads = 1) {
  auto run = [&](uint64_t idx) -> ReplayRun {
    Rng rng(stream_seed(master_seed, idx, salt::replay));
    const CaOutput ca = ca_keygen(ctx, K, rng);
    const FiniteVerifier verifier(ca, unsafe_fresh_challenges);
    AttackStrategy strat = AttackStrategy::replay_collector();
    ReplayRun out;
    for (uint32_t s = 1; s <= max_sessions; ++s) {
      const Challenge ch = verifier.challenge(rng);
      const FieldElem guess = attack_finite(strat, ch, ctx, rng);
      if (verifier.verify(Response{ch.session_id, guess})) {
        out.succeeded = true;
        out.sessions = s;
        break;
      }
    }
    return out;
  };
  return parallel_trials<ReplayRun>(runs, threads, run);
}

// ---------------------------------------------------------------------------
// Binning-regime estimators over a fixed public codebook.
// ---------------------------------------------------------------------------

struct BinningCompleteness {
  Estimate error;  // P(s_hat != s) for an honest prover
  uint64_t e1 = 0; // encoder fallbacks
  uint64_t e2 = 0; // decoder saw no typical candidate
  uint64_t e3 = 0; // decoder saw several typical candidates
};

inline BinningCompleteness estimate_binning_completeness(
    const Codebook& cb, const TypicalityParams& typ, uint64_t trials, uint64_t master_seed,
    uint32_t threads = 1, std::vector<TrialRecord>* transcript = nullptr) {
  auto run = [&](uint64_t trial) -> TrialRecord {
    Rng rng(stream_seed(master_seed, trial, salt::completeness));
    const CaRealization ca = ca_generate(cb.source, cb.n, 1, rng);
    const EncodeResult enc = verifier_encode(cb, ca.x, typ, rng);
    const DecodeResult dec = prover_decode(cb, enc.m, ca.y[0], typ, rng);
    std::string diag;
    if (enc.fallback) diag = "E1";
    else if (dec.dcase == DecodeCase::none_typical) diag = "E2";
    else if (dec.dcase == DecodeCase::multiple_typical) diag = "E3";
    TrialRecord rec{"binning", "honest", 1, dec.s_hat == enc.s,
                    enc.s, dec.s_hat, diag, master_seed, trial};
    return rec;
  };
  auto records = parallel_trials<TrialRecord>(trials, threads, run);
  BinningCompleteness out;
  uint64_t errors = 0;
  for (const auto& r : records) {
    errors += !r.decision;
    if (r.diag == "E1") ++out.e1;
    else if (r.diag == "E2") ++out.e2;
    else if (r.diag == "E3") ++out.e3;
  }
  if (transcript) *transcript = std::move(records);
  out.error = wilson_interval(errors, trials);
  return out;
}

/// Probability that the given binning attack recovers the in-bin secret of a
/// fresh honest encode from the public bin index alone.
inline Estimate estimate_binning_soundness(const Codebook& cb, const TypicalityParams& typ,
                                           const AttackStrategy& strategy, uint64_t trials,
                                           uint64_t master_seed, uint32_t threads = 1,
                                           std::vector<TrialRecord>* transcript = nullptr) {
  auto run = [&](uint64_t trial) -> TrialRecord {
    Rng rng(stream_seed(master_seed, trial, salt::soundness));
    const auto x = generate_x(cb.source, cb.n, rng);
    const EncodeResult enc = verifier_encode(cb, x, typ, rng);
    const uint64_t guess = attack_binning(strategy, enc.m, cb, rng);
    TrialRecord rec{"binning", attack_name(strategy.kind), 0, guess == enc.s,
                    enc.s, guess, enc.fallback ? "E1" : "", master_seed, trial};
    return rec;
  };
  auto records = parallel_trials<TrialRecord>(trials, threads, run);
  uint64_t wins = 0;
  for (const auto& r : records) wins += r.decision;
  if (transcript) *transcript = std::move(records);
  return wilson_interval(wins, trials);
}

/// Privacy across users: K provers with independently degraded observations
/// of the same x all decode the same public bin index. Estimates the
/// probability that at least one prover disagrees with prover 1; identical
/// (typically correct) answers are what keeps provers indistinguishable.
/// Needs at least two users. The transcript gets one record per prover per
/// trial, each scored against the encoded secret; the trial-level
/// disagreement verdict is recovered by grouping records on the trial index.
inline Estimate estimate_binning_privacy(const Codebook& cb, const TypicalityParams& typ,
                                         uint32_t K, uint64_t trials, uint64_t master_seed,
                                         uint32_t threads = 1,
                                         std::vector<TrialRecord>* transcript = nullptr) {
  if (K < 2) throw ConfigInvalid("privacy estimation compares provers: K must be at least 2");
  struct PrivacyTrial {
    std::vector<TrialRecord> records;
    bool disagree = false;
  };
  auto run = [&](uint64_t trial) -> PrivacyTrial {
    Rng rng(stream_seed(master_seed, trial, salt::privacy));
    const CaRealization ca = ca_generate(cb.source, cb.n, K, rng);
    const EncodeResult enc = verifier_encode(cb, ca.x, typ, rng);
    PrivacyTrial out;
    out.records.reserve(K);
    uint64_t first = 0;
    for (uint32_t k = 0; k < K; ++k) {
      const DecodeResult dec = prover_decode(cb, enc.m, ca.y[k], typ, rng);
      if (k == 0) first = dec.s_hat;
      else if (dec.s_hat != first) out.disagree = true;
      std::string diag;
      if (enc.fallback) diag = "E1";
      else if (dec.dcase == DecodeCase::none_typical) diag = "E2";
      else if (dec.dcase == DecodeCase::multiple_typical) diag = "E3";
      out.records.push_back(TrialRecord{"binning", "honest", k + 1, dec.s_hat == enc.s, enc.s,
                                        dec.s_hat, diag, master_seed, trial});
    }
    return out;
  };
  auto per_trial = parallel_trials<PrivacyTrial>(trials, threads, run);
  uint64_t disagreements = 0;
  for (const auto& t : per_trial) disagreements += t.disagree;
  if (transcript) {
    transcript->clear();
    transcript->reserve(trials * K);
    for (auto& t : per_trial) {
      for (auto& r : t.records) transcript->push_back(std::move(r));
    }
  }
  return wilson_interval(disagreements, trials);
}

/// Empirical leakage of the public bin index about the in-bin secret:
/// the plug-in mutual information of observed (s, m) pairs, raw and
/// normalized per source symbol.
struct BinningLeakage {
  double mi_bits = 0;
  double normalized = 0;  // mi_bits / n
  uint64_t trials = 0;
};

inline BinningLeakage estimate_binning_leakage(const Codebook& cb, const TypicalityParams& typ,
                                               uint64_t trials, uint64_t master_seed,
                                               uint32_t threads = 1) {
  auto run = [&](uint64_t trial) -> std::pair<uint64_t, uint64_t> {
    Rng rng(stream_seed(master_seed, trial, salt::leakage));
    const auto x = generate_x(cb.source, cb.n, rng);
    const EncodeResult enc = verifier_encode(cb, x, typ, rng);
    return {enc.s, enc.m};
  };
  const auto pairs = parallel_trials<std::pair<uint64_t, uint64_t>>(trials, threads, run);
  BinningLeakage out;
  out.mi_bits = plugin_mi_estimate(pairs);
  out.normalized = out.mi_bits / static_cast<double>(cb.n);
  out.trials = trials;
  return out;
}

// ---------------------------------------------------------------------------
// Parameter sweeps. One row per axis value; the CSV header is part of the
// tool's interface and is emitted verbatim by sweep_to_csv.
// ---------------------------------------------------------------------------

enum class SweepAxis { n, qL, K, xi };

inline const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::n: return "n";
    case SweepAxis::qL: return "qL";
    case SweepAxis::K: return "K";
    case SweepAxis::xi: return "xi";
  }
  return "?";
}

inline SweepAxis sweep_axis_from_name(const std::string& name) {
  if (name == "n") return SweepAxis::n;
  if (name == "qL") return SweepAxis::qL;
  if (name == "K") return SweepAxis::K;
  if (name == "xi") return SweepAxis::xi;
  throw ConfigInvalid("unknown sweep axis: " + name + " (expected n, qL, K, or xi)");
}

struct SweepConfig {
  SweepAxis axis = SweepAxis::n;
  std::vector<double> values;

  // Finite-regime base parameters (axes qL and K).
  uint64_t q = 101;
  uint32_t L = 1;
  uint32_t K = 2;

  // Binning-regime base parameters (axes n and xi).
  uint32_t n = 12;
  TypicalityParams typ{0.2, 0.1, TypicalityKind::entropy_ball};
  RateSlackKind slack = RateSlackKind::entropy_scaled;
  double p_x1 = 0.5;
  double eps = 0.1;
  uint32_t budget_exponent = 24;

  uint64_t trials = 1000;
  uint32_t threads = 1;
  uint64_t seed = 1;
};

struct SweepRow {
  std::string axis;
  double value = 0;
  Estimate pe1;  // completeness error
  Estimate pe2;  // blind attack success
  Estimate pp;   // informed attack success (finite: privacy violations)
  double rate_achieved = 0;
  double rate_capacity = 0;
  uint64_t trials = 0;
};

namespace detail {

inline uint64_t checked_integer(double v, const char* what) {
  if (!(v >= 1) || v != std::floor(v) || v > 9e15) {
    throw ConfigInvalid(std::string("sweep value for ") + what + " must be a positive integer");
  }
  return static_cast<uint64_t>(v);
}

/// Factors a claimed prime power q^L; rejects anything else.
inline std::pair<uint64_t, uint32_t> parse_prime_power(uint64_t v) {
  if (v < 2) throw ConfigInvalid("field order must be at least 2");
  uint64_t p = 0;
  if (v % 2 == 0) {
    p = 2;
  } else {
    for (uint64_t d = 3; d * d <= v; d += 2) {
      if (v % d == 0) {
        p = d;
        break;
      }
    }
    if (p == 0) p = v;  // v itself is prime
  }
  uint32_t l = 0;
  uint64_t rest = v;
  while (rest % p == 0) {
    rest /= p;
    ++l;
  }
  if (rest != 1) {
    throw ConfigInvalid("field order " + std::to_string(v) + " is not a prime power");
  }
  return {p, l};
}

inline SweepRow finite_sweep_row(const SweepConfig& cfg, double value, uint64_t q, uint32_t L,
                                 uint32_t K, uint64_t row_seed) {
  const FieldCtx ctx = FieldCtx::make(q, L);
  SweepRow row;
  row.axis = sweep_axis_name(cfg.axis);
  row.value = value;
  row.trials = cfg.trials;
  row.pe1 = estimate_finite_completeness(ctx, K, cfg.trials, row_seed, cfg.threads);
  const AttackStrategy blind = AttackStrategy::uniform_finite();
  row.pe2 = estimate_finite_soundness(ctx, K, blind, cfg.trials, row_seed, cfg.threads);
  row.pp = estimate_finite_privacy(ctx, K, cfg.trials, row_seed, cfg.threads);
  const FiniteRate rate = finite_key_rate(q, L, K);
  row.rate_achieved = rate.rate;
  row.rate_capacity = rate.upper_bound;
  return row;
}

inline SweepRow binning_sweep_row(const SweepConfig& cfg, double value, uint32_t n,
                                  const TypicalityParams& typ, uint64_t row_seed) {
  const JointSource src = make_bsc_source(cfg.p_x1, cfg.eps);
  const BinningRates rates = rates_from_dist(src, typ, cfg.slack);
  const Codebook cb = make_codebook(src, n, rates, stream_seed(row_seed, 0, salt::codebook),
                                    cfg.budget_exponent);
  SweepRow row;
  row.axis = sweep_axis_name(cfg.axis);
  row.value = value;
  row.trials = cfg.trials;
  row.pe1 = estimate_binning_completeness(cb, typ, cfg.trials, row_seed, cfg.threads).error;
  row.pe2 = estimate_binning_soundness(cb, typ, AttackStrategy::uniform_binning(), cfg.trials,
                                       row_seed, cfg.threads);
  row.pp = estimate_binning_privacy(cb, typ, cfg.K, cfg.trials, row_seed, cfg.threads);
  const AsymptoticRate rate = asymptotic_key_rate(src, cfg.K);
  row.rate_achieved = rate.achieved;
  row.rate_capacity = rate.capacity;
  return row;
}

}  // namespace detail

inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  if (cfg.values.empty()) throw ConfigInvalid("a sweep needs at least one axis value");
  if (cfg.trials < 1) throw ConfigInvalid("a sweep needs at least one trial per row");
  if (!std::is_sorted(cfg.values.begin(), cfg.values.end()) &&
      !std::is_sorted(cfg.values.rbegin(), cfg.values.rend())) {
    throw ConfigInvalid("sweep values must be monotone");
  }
  std::vector<SweepRow> rows;
  rows.reserve(cfg.values.size());
  for (size_t i = 0; i < cfg.values.size(); ++i) {
    const double v = cfg.values[i];
    const uint64_t row_seed = stream_seed(cfg.seed, i, 1000 + static_cast<uint64_t>(cfg.axis));
    switch (cfg.axis) {
      case SweepAxis::n: {
        const uint64_t n = detail::checked_integer(v, "n");
        if (n < 2 || n > 32) throw ConfigInvalid("sweep n values must lie in 2..32");
        rows.push_back(detail::binning_sweep_row(cfg, v, static_cast<uint32_t>(n), cfg.typ,
                                                 row_seed));
        break;
      }
      case SweepAxis::xi: {
        if (!(v > 0) || !(v < 1)) throw ConfigInvalid("sweep xi values must lie in (0, 1)");
        const TypicalityParams typ{v, v / 2, cfg.typ.kind};
        rows.push_back(detail::binning_sweep_row(cfg, v, cfg.n, typ, row_seed));
        break;
      }
      case SweepAxis::qL: {
        const uint64_t order = detail::checked_integer(v, "qL");
        const auto [q, L] = detail::parse_prime_power(order);
        rows.push_back(detail::finite_sweep_row(cfg, v, q, L, cfg.K, row_seed));
        break;
      }
      case SweepAxis::K: {
        const uint64_t K = detail::checked_integer(v, "K");
        if (K < 1 || K > 1u << 20) throw ConfigInvalid("sweep K values must lie in 1..2^20");
        rows.push_back(detail::finite_sweep_row(cfg, v, cfg.q, cfg.L, static_cast<uint32_t>(K),
                                                row_seed));
        break;
      }
    }
  }
  return rows;
}

inline void sweep_to_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "axis,value,pe1,pe1_lo,pe1_hi,pe2,pe2_lo,pe2_hi,pp,pp_lo,pp_hi,"
         "rate_achieved,rate_capacity,trials\n";
  const auto prev = out.precision(17);
  for (const auto& r : rows) {
    out << r.axis << ',' << r.value << ',' << r.pe1.p << ',' << r.pe1.lo << ',' << r.pe1.hi
        << ',' << r.pe2.p << ',' << r.pe2.lo << ',' << r.pe2.hi << ',' << r.pp.p << ','
        << r.pp.lo << ',' << r.pp.hi << ',' << r.rate_achieved << ',' << r.rate_capacity << ','
        << r.trials << "\n";
  }
  out.precision(prev);
}

inline ordered_json estimate_to_json(const Estimate& e) {
  ordered_json j;
  j["p"] = e.p;
  j["lo"] = e.lo;
  j["hi"] = e.hi;
  j["successes"] = e.successes;
  j["trials"] = e.trials;
  return j;
}

inline ordered_json sweep_to_json(const std::vector<SweepRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json j;
    j["axis"] = r.axis;
    j["value"] = r.value;
    j["pe1"] = estimate_to_json(r.pe1);
    j["pe2"] = estimate_to_json(r.pe2);
    j["pp"] = estimate_to_json(r.pp);
    j["rate_achieved"] = r.rate_achieved;
    j["rate_capacity"] = r.rate_capacity;
    j["trials"] = r.trials;
    arr.push_back(j);
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Whole-simulation configuration, as read from a JSON config file.
// ---------------------------------------------------------------------------

struct SimConfig {
  std::string regime;  // "finite" | "binning"

  // Finite regime.
  uint64_t q = 101;
  uint32_t L = 1;
  uint32_t K = 2;
  bool unsafe_fresh_challenges = false;
  uint32_t sessions = 8;  // replay experiment horizon

  // Binning regime.
  JointSource source = make_bsc_source(0.5, 0.1);
  uint32_t n = 12;
  TypicalityParams typ{0.2, 0.1, TypicalityKind::entropy_ball};
  RateSlackKind slack = RateSlackKind::entropy_scaled;
  uint32_t budget_exponent = 24;
  uint64_t train_samples = 0;  // 0: default 20 samples per bin

  // Common.
  std::string attacker;  // empty: honest completeness + privacy
  uint64_t trials = 1000;
  uint32_t threads = 1;
  std::optional<uint64_t> seed;
};

inline SimConfig sim_config_from_json(const ordered_json& j) {
  try {
    SimConfig cfg;
    cfg.regime = j.at("regime").get<std::string>();
    if (cfg.regime != "finite" && cfg.regime != "binning") {
      throw ConfigInvalid("regime must be \"finite\" or \"binning\"");
    }
    if (j.contains("field")) {
      cfg.q = j.at("field").at("q").get<uint64_t>();
      cfg.L = j.at("field").at("L").get<uint32_t>();
    }
    if (j.contains("q")) cfg.q = j.at("q").get<uint64_t>();
    if (j.contains("L")) cfg.L = j.at("L").get<uint32_t>();
    if (j.contains("K")) cfg.K = j.at("K").get<uint32_t>();
    if (j.contains("unsafe_fresh_challenges")) {
      cfg.unsafe_fresh_challenges = j.at("unsafe_fresh_challenges").get<bool>();
    }
    if (j.contains("sessions")) cfg.sessions = j.at("sessions").get<uint32_t>();
    if (j.contains("source")) cfg.source = source_from_json(j.at("source"));
    if (j.contains("n")) cfg.n = j.at("n").get<uint32_t>();
    if (j.contains("xi")) cfg.typ.xi = j.at("xi").get<double>();
    if (j.contains("xi_prime")) cfg.typ.xi_prime = j.at("xi_prime").get<double>();
    if (j.contains("typicality")) {
      const auto name = j.at("typicality").get<std::string>();
      if (name == "entropy_ball") cfg.typ.kind = TypicalityKind::entropy_ball;
      else if (name == "per_letter_robust") cfg.typ.kind = TypicalityKind::per_letter_robust;
      else throw ConfigInvalid("typicality must be \"entropy_ball\" or \"per_letter_robust\"");
    }
    if (j.contains("slack")) {
      const auto name = j.at("slack").get<std::string>();
      if (name == "entropy_scaled") cfg.slack = RateSlackKind::entropy_scaled;
      else if (name == "zero") cfg.slack = RateSlackKind::zero;
      else throw ConfigInvalid("slack must be \"entropy_scaled\" or \"zero\"");
    }
    if (j.contains("budget_exponent")) {
      cfg.budget_exponent = j.at("budget_exponent").get<uint32_t>();
    }
    if (j.contains("train_samples")) cfg.train_samples = j.at("train_samples").get<uint64_t>();
    if (j.contains("attacker")) {
      cfg.attacker = j.at("attacker").get<std::string>();
      if (!cfg.attacker.empty()) (void)attack_from_name(cfg.attacker);
    }
    if (j.contains("trials")) cfg.trials = j.at("trials").get<uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<uint32_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (cfg.trials < 1) throw ConfigInvalid("trials must be at least 1");
    return cfg;
  } catch (const ordered_json::exception& e) {
    throw ConfigInvalid(std::string("bad simulation config: ") + e.what());
  }
}

/// Runs the configured experiment and returns a JSON summary covering all
/// three protocol metrics: completeness (pe1), soundness against the
/// configured attacker (pe2), and privacy (pp). The attacker defaults to the
/// regime's uniform guesser when the config names none. Privacy compares
/// provers, so the config needs K >= 2. When a transcript sink is given,
/// every trial of every phase is appended to it, in the fixed order
/// completeness, soundness, privacy; the privacy phase emits one record per
/// prover per trial.
inline ordered_json run_simulation(const SimConfig& cfg, uint64_t master_seed,
                                   std::vector<TrialRecord>* transcript = nullptr) {
  ordered_json out;
  out["regime"] = cfg.regime;
  out["master_seed"] = master_seed;
  out["trials"] = cfg.trials;

  std::vector<TrialRecord> completeness_rec, soundness_rec, privacy_rec;
  auto sink = [&](std::vector<TrialRecord>& phase) {
    return transcript ? &phase : nullptr;
  };
  auto flush_transcript = [&]() {
    if (!transcript) return;
    transcript->clear();
    transcript->reserve(completeness_rec.size() + soundness_rec.size() + privacy_rec.size());
    for (auto* phase : {&completeness_rec, &soundness_rec, &privacy_rec}) {
      transcript->insert(transcript->end(), std::make_move_iterator(phase->begin()),
                         std::make_move_iterator(phase->end()));
    }
  };

  if (cfg.regime == "finite") {
    const AttackKind kind =
        cfg.attacker.empty() ? AttackKind::finite_uniform_guess : attack_from_name(cfg.attacker);
    if (!is_finite_attack(kind)) {
      throw ConfigInvalid("attacker " + cfg.attacker + " does not apply to the finite regime");
    }
    const FieldCtx ctx = FieldCtx::make(cfg.q, cfg.L);
    out["field"] = field_to_json(ctx);
    out["K"] = cfg.K;
    out["attacker"] = attack_name(kind);

    const Estimate pe1 = estimate_finite_completeness(ctx, cfg.K, cfg.trials, master_seed,
                                                      cfg.threads, sink(completeness_rec));
    AttackStrategy strat{kind};
    if (kind == AttackKind::finite_constant) {
      strat = AttackStrategy::constant_finite(ctx.zero());
    }
    const Estimate pe2 = estimate_finite_soundness(ctx, cfg.K, strat, cfg.trials, master_seed,
                                                   cfg.threads, sink(soundness_rec));
    const Estimate pp = estimate_finite_privacy(ctx, cfg.K, cfg.trials, master_seed,
                                                cfg.threads, sink(privacy_rec));
    out["pe1"] = estimate_to_json(pe1);
    out["pe2"] = estimate_to_json(pe2);
    out["pe2_analytic"] = 1.0 / static_cast<double>(ctx.order());
    out["pp"] = estimate_to_json(pp);

    // A replay collector is also exercised statefully: one verifier per run,
    // the strategy accumulating points session after session.
    if (kind == AttackKind::finite_replay_collector) {
      const auto runs = replay_experiment(ctx, cfg.K, cfg.unsafe_fresh_challenges, cfg.sessions,
                                          cfg.trials, master_seed, cfg.threads);
      uint64_t wins = 0, total_sessions = 0;
      for (const auto& r : runs) {
        wins += r.succeeded;
        if (r.succeeded) total_sessions += r.sessions;
      }
      ordered_json replay;
      replay["unsafe_fresh_challenges"] = cfg.unsafe_fresh_challenges;
      replay["max_sessions"] = cfg.sessions;
      replay["success"] = estimate_to_json(wilson_interval(wins, cfg.trials));
      replay["mean_sessions_to_success"] =
          wins ? static_cast<double>(total_sessions) / static_cast<double>(wins) : 0.0;
      out["replay"] = replay;
    }

    const FiniteRate rate = finite_key_rate(cfg.q, cfg.L, cfg.K);
    out["rate"] = finite_rate_to_json(rate);
    flush_transcript();
    return out;
  }

  // Binning regime: one codebook per simulation, derived from the master seed.
  const AttackKind kind =
      cfg.attacker.empty() ? AttackKind::bin_uniform_guess : attack_from_name(cfg.attacker);
  if (is_finite_attack(kind)) {
    throw ConfigInvalid("attacker " + cfg.attacker + " does not apply to the binning regime");
  }
  const BinningRates rates = rates_from_dist(cfg.source, cfg.typ, cfg.slack);
  const Codebook cb = make_codebook(cfg.source, cfg.n, rates,
                                    stream_seed(master_seed, 0, salt::codebook),
                                    cfg.budget_exponent);
  out["n"] = cfg.n;
  out["K"] = cfg.K;
  out["rates"] = binning_rates_to_json(rates);
  out["total_bits"] = cb.total_bits;
  out["bin_bits"] = cb.bin_bits;
  out["attacker"] = attack_name(kind);

  const BinningCompleteness comp = estimate_binning_completeness(
      cb, cfg.typ, cfg.trials, master_seed, cfg.threads, sink(completeness_rec));
  AttackStrategy strat = AttackStrategy::uniform_binning();
  if (kind == AttackKind::bin_empirical_map) {
    const uint64_t samples = cfg.train_samples ? cfg.train_samples : 20 * cb.num_bins();
    strat = train_empirical_map(cb, cfg.typ, samples,
                                stream_seed(master_seed, 0, salt::training));
  }
  const Estimate pe2 = estimate_binning_soundness(cb, cfg.typ, strat, cfg.trials, master_seed,
                                                  cfg.threads, sink(soundness_rec));
  const Estimate pp = estimate_binning_privacy(cb, cfg.typ, cfg.K, cfg.trials, master_seed,
                                               cfg.threads, sink(privacy_rec));
  const BinningLeakage leak =
      estimate_binning_leakage(cb, cfg.typ, cfg.trials, master_seed, cfg.threads);
  out["pe1"] = estimate_to_json(comp.error);
  out["diag"] = {{"E1", comp.e1}, {"E2", comp.e2}, {"E3", comp.e3}};
  out["pe2"] = estimate_to_json(pe2);
  out["pp"] = estimate_to_json(pp);
  out["leakage_bits"] = leak.mi_bits;
  out["leakage_per_symbol"] = leak.normalized;

  const AsymptoticRate rate = asymptotic_key_rate(cfg.source, cfg.K);
  out["rate"] = asymptotic_rate_to_json(rate);
  flush_transcript();
  return out;
}

}  // namespace pa
