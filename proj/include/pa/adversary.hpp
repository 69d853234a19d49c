#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pa/binning.hpp"
#include "pa/finite_scheme.hpp"
#include "pa/rng.hpp"

namespace pa {

/// Every attack strategy the toolkit models. The attack functions below are
/// the only interface between an adversary and a protocol run, and they are
/// deliberately narrow: a finite attacker sees the public challenge and the
/// field context, a binning attacker sees the public bin index and codebook.
/// Neither ever receives V, user keys, or source realizations.
enum class AttackKind {
  finite_uniform_guess,
  finite_constant,
  finite_replay_collector,
  bin_uniform_guess,
  bin_empirical_map,
};

inline bool is_finite_attack(AttackKind k) {
  return k == AttackKind::finite_uniform_guess || k == AttackKind::finite_constant ||
         k == AttackKind::finite_replay_collector;
}

inline const char* attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::finite_uniform_guess: return "finite_uniform_guess";
    case AttackKind::finite_constant: return "finite_constant";
    case AttackKind::finite_replay_collector: return "finite_replay_collector";
    case AttackKind::bin_uniform_guess: return "bin_uniform_guess";
    case AttackKind::bin_empirical_map: return "bin_empirical_map";
  }
  return "unknown";
}

/// Accepts both the full kind name and a short alias.
inline AttackKind attack_from_name(const std::string& name) {
  if (name == "finite_uniform_guess" || name == "uniform") {
    return AttackKind::finite_uniform_guess;
  }
  if (name == "finite_constant" || name == "constant") return AttackKind::finite_constant;
  if (name == "finite_replay_collector" || name == "replay") {
    return AttackKind::finite_replay_collector;
  }
  if (name == "bin_uniform_guess" || name == "bin_uniform") return AttackKind::bin_uniform_guess;
  if (name == "bin_empirical_map" || name == "bin_map") return AttackKind::bin_empirical_map;
  throw ConfigInvalid("unknown attacker name: " + name +
                      " (expected finite_uniform_guess, finite_constant, "
                      "finite_replay_collector, bin_uniform_guess, or bin_empirical_map)");
}

/// Identity of a codebook, used to refuse MAP tables trained elsewhere.
struct CodebookFingerprint {
  uint64_t seed = 0;
  uint32_t n = 0;
  uint32_t total_bits = 0;
  uint32_t bin_bits = 0;
  uint32_t u_alphabet = 0;

  static CodebookFingerprint of(const Codebook& cb) {
    return CodebookFingerprint{cb.seed, cb.n, cb.total_bits, cb.bin_bits, cb.u_alphabet};
  }
  friend bool operator==(const CodebookFingerprint&, const CodebookFingerprint&) = default;
};

struct AttackStrategy {
  AttackKind kind = AttackKind::finite_uniform_guess;

  // finite_constant: the fixed guess.
  FieldElem constant;

  // finite_replay_collector: merged challenge points across sessions, keyed
  // by abscissa (first-seen ordinate wins).
  std::map<uint64_t, uint64_t> collected;

  // bin_empirical_map: the trained per-bin argmax table.
  bool trained = false;
  CodebookFingerprint fingerprint;
  std::vector<uint32_t> map_table;

  static AttackStrategy uniform_finite() { return {AttackKind::finite_uniform_guess}; }
  static AttackStrategy constant_finite(FieldElem c) {
    AttackStrategy s{AttackKind::finite_constant};
    s.constant = c;
    return s;
  }
  static AttackStrategy replay_collector() { return {AttackKind::finite_replay_collector}; }
  static AttackStrategy uniform_binning() { return {AttackKind::bin_uniform_guess}; }
};

/// Runs one finite-regime attack against a challenge. The replay collector
/// mutates its state (merging the session's points); other kinds leave the
/// strategy untouched.
inline FieldElem attack_finite(AttackStrategy& strat, const Challenge& ch, const FieldCtx& ctx,
                               Rng& rng) {
  if (!is_finite_attack(strat.kind)) {
    throw WrongRegime("binning attack strategy cannot answer a finite challenge");
  }
  switch (strat.kind) {
    case AttackKind::finite_uniform_guess:
      return ctx.sample_uniform(rng);
    case AttackKind::finite_constant:
      ctx.from_value(strat.constant.v);
      return strat.constant;
    default:
      break;
  }
  // Replay collector: the polynomial has degree <= d where d is the number
  // of challenge points, so d+1 distinct transcript points recover f(0).
  for (const EvalPoint& pt : ch.points) strat.collected.emplace(pt.x.v, pt.y.v);
  const size_t need = ch.points.size() + 1;
  if (strat.collected.size() >= need) {
    std::vector<EvalPoint> pts;
    pts.reserve(need);
    for (const auto& [x, y] : strat.collected) {
      pts.push_back({FieldElem{x}, FieldElem{y}});
      if (pts.size() == need) break;
    }
    return eval_at_zero_direct(ctx, pts);
  }
  return ctx.sample_uniform(rng);
}

/// Runs one binning-regime attack against a public bin index.
inline uint64_t attack_binning(const AttackStrategy& strat, uint64_t m, const Codebook& cb,
                               Rng& rng) {
  if (is_finite_attack(strat.kind)) {
    throw WrongRegime("finite attack strategy cannot answer a binning challenge");
  }
  if (m >= cb.num_bins()) {
    throw BinIndexOutOfRange("bin index " + std::to_string(m) + " outside 0.." +
                             std::to_string(cb.num_bins() - 1));
  }
  if (strat.kind == AttackKind::bin_uniform_guess) {
    return uniform_below(rng, cb.bin_size());
  }
  if (!strat.trained) {
    throw UntrainedStrategy("the empirical MAP strategy must be trained before attacking");
  }
  if (!(strat.fingerprint == CodebookFingerprint::of(cb))) {
    throw CodebookMismatch("MAP table was trained against a different codebook");
  }
  return strat.map_table[m];
}

/// Trains the empirical MAP attacker: runs `samples` honest encodes of fresh
/// source draws and records, for each bin, the most frequent in-bin secret
/// (ties broken toward the lowest index; bins never observed guess 0).
/// Requires at least 10 samples per bin for the table to mean anything.
inline AttackStrategy train_empirical_map(const Codebook& cb, const TypicalityParams& typ,
                                          uint64_t samples, uint64_t seed) {
  typ.validate();
  if (samples < 10 * cb.num_bins()) {
    throw InvalidParams("MAP training needs at least 10 samples per bin (" +
                        std::to_string(10 * cb.num_bins()) + " total, got " +
                        std::to_string(samples) + ")");
  }
  std::vector<uint32_t> counts(cb.size(), 0);
  Rng rng(seed);
  for (uint64_t t = 0; t < samples; ++t) {
    const auto x = generate_x(cb.source, cb.n, rng);
    const EncodeResult enc = verifier_encode(cb, x, typ, rng);
    ++counts[enc.m * cb.bin_size() + enc.s];
  }
  AttackStrategy strat{AttackKind::bin_empirical_map};
  strat.map_table.assign(cb.num_bins(), 0);
  const uint64_t bin_size = cb.bin_size();
  for (uint64_t m = 0; m < cb.num_bins(); ++m) {
    uint32_t best_count = 0;
    uint32_t best_s = 0;
    for (uint64_t s = 0; s < bin_size; ++s) {
      const uint32_t c = counts[m * bin_size + s];
      if (c > best_count) {
        best_count = c;
        best_s = static_cast<uint32_t>(s);
      }
    }
    strat.map_table[m] = best_s;
  }
  strat.trained = true;
  strat.fingerprint = CodebookFingerprint::of(cb);
  return strat;
}

}  // namespace pa
