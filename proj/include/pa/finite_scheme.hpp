#pragma once

#include <gmp.h>
#include <mpfr.h>

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pa/field.hpp"
#include "pa/info_theory.hpp"
#include "pa/polynomial.hpp"
#include "pa/rng.hpp"

namespace pa {

/// One user's credential: a point on the authentication polynomial.
struct KeyPoint {
  FieldElem x;
  FieldElem y;
  friend constexpr auto operator<=>(const KeyPoint&, const KeyPoint&) = default;
};

/// Certificate authority output: the verifier's full state V. The secret is
/// s = f(0) = a0 where f is the unique polynomial of degree <= K through
/// (0, a0) and all K key points.
struct CaOutput {
  FieldCtx ctx;
  uint32_t K = 0;
  FieldElem a0;
  std::vector<KeyPoint> keys;
};

/// The credential handed to user k (1-based index).
struct UserKey {
  FieldCtx ctx;
  uint32_t K = 0;
  uint32_t k_index = 0;
  KeyPoint key;
};

/// A challenge: K fresh evaluation points of f at nonzero, non-key abscissas.
struct Challenge {
  uint64_t session_id = 0;
  std::vector<EvalPoint> points;
};

struct Response {
  uint64_t session_id = 0;
  FieldElem s_hat;
};

/// Draws the CA state: K distinct nonzero key abscissas, i.i.d. uniform
/// ordinates, and a uniform a0. Draw order (a0, abscissas, ordinates) is part
/// of the deterministic contract. Requires q^L >= 2K + 2 so that key and
/// challenge abscissas and zero can all be distinct.
inline CaOutput ca_keygen(const FieldCtx& ctx, uint32_t K, Rng& rng) {
  if (K < 1) throw InvalidParams("number of users K must be >= 1");
  if (ctx.order() < 2ull * K + 2) {
    throw FieldTooSmall("keygen requires q^L >= 2K+2 (need " + std::to_string(2ull * K + 2) +
                        ", field order is " + std::to_string(ctx.order()) + ")");
  }
  CaOutput out;
  out.ctx = ctx;
  out.K = K;
  out.a0 = ctx.sample_uniform(rng);
  const std::vector<FieldElem> zero_only{ctx.zero()};
  const auto xs = ctx.sample_distinct(rng, K, zero_only);
  out.keys.reserve(K);
  for (uint32_t k = 0; k < K; ++k) out.keys.push_back({xs[k], ctx.sample_uniform(rng)});
  return out;
}

/// Extracts user k's credential from the CA output (k is 1-based).
inline UserKey user_key(const CaOutput& ca, uint32_t k_index) {
  if (k_index < 1 || k_index > ca.K) {
    throw InvalidParams("user index " + std::to_string(k_index) + " outside 1.." +
                        std::to_string(ca.K));
  }
  return UserKey{ca.ctx, ca.K, k_index, ca.keys[k_index - 1]};
}

/// Verifier for the finite construction. The challenge point set M is a
/// deterministic function of V: its abscissas are drawn from an RNG seeded by
/// a hash chain over (q, L, reduction, K, a0, key points), so re-loading the
/// same V (in another process, or after a restart) reissues the same M.
/// Reusing M across sessions is what keeps the scheme zero-leakage; the
/// unsafe_fresh_challenges switch exists to demonstrate what goes wrong when
/// every session draws fresh points instead.
class FiniteVerifier {
 public:
  explicit FiniteVerifier(CaOutput v, bool unsafe_fresh_challenges = false)
      : v_(std::move(v)), unsafe_fresh_(unsafe_fresh_challenges) {
    validate_state();
    std::vector<EvalPoint> anchor{{v_.ctx.zero(), v_.a0}};
    for (const KeyPoint& kp : v_.keys) anchor.push_back({kp.x, kp.y});
    f_ = poly_interpolate(v_.ctx, anchor);
    derived_points_ = derive_challenge_points();
  }

  const CaOutput& state() const { return v_; }
  FieldElem secret() const { return v_.a0; }
  bool unsafe_fresh_challenges() const { return unsafe_fresh_; }

  /// Issues a challenge. session_id is drawn from the caller's RNG; the
  /// point set is the derived deterministic M unless fresh challenges were
  /// explicitly requested at construction.
  Challenge challenge(Rng& rng) const {
    Challenge ch;
    ch.session_id = rng();
    ch.points = unsafe_fresh_ ? sample_points(rng) : derived_points_;
    return ch;
  }

  /// Accepts iff the response equals the secret s = f(0) = a0.
  bool verify(const Response& r) const { return r.s_hat == v_.a0; }

 private:
  void validate_state() const {
    if (v_.K < 1 || v_.keys.size() != v_.K) {
      throw MalformedV("verifier state must carry exactly K >= 1 key points");
    }
    if (v_.ctx.order() < 2ull * v_.K + 2) {
      throw FieldTooSmall("verifier state requires q^L >= 2K+2 (need " +
                          std::to_string(2ull * v_.K + 2) + ", field order is " +
                          std::to_string(v_.ctx.order()) + ")");
    }
    const auto in_range = [this](FieldElem e) {
      try {
        v_.ctx.from_value(e.v);
      } catch (const MixedFieldContexts& err) {
        throw MalformedV(std::string("verifier state carries an invalid element: ") + err.what());
      }
    };
    in_range(v_.a0);
    for (size_t i = 0; i < v_.keys.size(); ++i) {
      in_range(v_.keys[i].x);
      in_range(v_.keys[i].y);
      if (v_.keys[i].x.v == 0) throw MalformedV("key abscissas must be nonzero");
      for (size_t j = i + 1; j < v_.keys.size(); ++j) {
        if (v_.keys[i].x == v_.keys[j].x) throw MalformedV("key abscissas must be distinct");
      }
    }
  }

  std::vector<EvalPoint> sample_points(Rng& rng) const {
    std::vector<FieldElem> exclude{v_.ctx.zero()};
    for (const KeyPoint& kp : v_.keys) exclude.push_back(kp.x);
    const auto xs = v_.ctx.sample_distinct(rng, v_.K, exclude);
    std::vector<EvalPoint> pts;
    pts.reserve(xs.size());
    for (const FieldElem& x : xs) pts.push_back({x, poly_eval(v_.ctx, f_, x)});
    return pts;
  }

  std::vector<EvalPoint> derive_challenge_points() const {
    uint64_t h = 0;
    const auto absorb = [&h](uint64_t x) { h = mix64(h + x); };
    absorb(v_.ctx.characteristic());
    absorb(v_.ctx.ext_degree());
    for (uint64_t c : v_.ctx.reduction()) absorb(c);
    absorb(v_.K);
    absorb(v_.a0.v);
    for (const KeyPoint& kp : v_.keys) {
      absorb(kp.x.v);
      absorb(kp.y.v);
    }
    Rng derived(h);
    return sample_points(derived);
  }

  CaOutput v_;
  bool unsafe_fresh_;
  Poly f_;
  std::vector<EvalPoint> derived_points_;
};

/// Prover: interpolates the K challenge points plus the user's own key point
/// (K + 2 points in total would over-determine f, so exactly these K + 1) and
/// returns f(0) via the direct evaluation formula.
inline Response prover_respond(const UserKey& key, const Challenge& ch) {
  if (ch.points.empty()) throw InvalidParams("challenge carries no points");
  std::vector<EvalPoint> pts = ch.points;
  pts.push_back({key.key.x, key.key.y});
  return Response{ch.session_id, eval_at_zero_direct(key.ctx, pts)};
}

/// Key-rate report for the finite construction, in q-ary symbols per key
/// symbol pair: rate = K/2 + log_q C(q^L, K) / (2L). The trivial upper bound
/// is K (each of the K users' credentials is two q^L-ary symbols).
struct FiniteRate {
  double rate = 0;
  double upper_bound = 0;
  double gap = 0;
};

/// Exact big-integer evaluation of the rate formula; q^L may exceed 64 bits
/// here (the binomial is computed over arbitrary-precision integers and its
/// logarithm at 128-bit precision).
inline FiniteRate finite_key_rate(uint64_t q, uint32_t L, uint32_t K) {
  if (!detail::is_prime_u64(q)) {
    throw NonPrimeCharacteristic("characteristic q = " + std::to_string(q) + " is not prime");
  }
  if (L < 1) throw DegreeOutOfRange("extension degree L must be >= 1");
  if (K < 1) throw InvalidParams("number of users K must be >= 1");

  mpz_t order, binom;
  mpz_init(order);
  mpz_init(binom);
  mpz_ui_pow_ui(order, q, L);
  if (mpz_cmp_ui(order, K) < 0) {
    mpz_clear(order);
    mpz_clear(binom);
    throw InvalidParams("rate formula needs q^L >= K");
  }
  mpz_bin_ui(binom, order, K);

  mpfr_t acc, logq;
  mpfr_init2(acc, 128);
  mpfr_init2(logq, 128);
  mpfr_set_z(acc, binom, MPFR_RNDN);
  mpfr_log2(acc, acc, MPFR_RNDN);
  mpfr_set_ui(logq, q, MPFR_RNDN);
  mpfr_log2(logq, logq, MPFR_RNDN);
  mpfr_div(acc, acc, logq, MPFR_RNDN);  // log_q C(q^L, K)
  const double logq_binom = mpfr_get_d(acc, MPFR_RNDN);
  mpfr_clear(acc);
  mpfr_clear(logq);
  mpz_clear(order);
  mpz_clear(binom);

  FiniteRate out;
  out.rate = static_cast<double>(K) / 2.0 + logq_binom / (2.0 * L);
  out.upper_bound = static_cast<double>(K);
  out.gap = out.upper_bound - out.rate;
  return out;
}

/// Exact nonnegative rational, reduced.
struct AuditRational {
  uint64_t num = 0;
  uint64_t den = 1;

  static AuditRational reduced(uint64_t n, uint64_t d) {
    const uint64_t g = std::gcd(n, d);
    return AuditRational{g == 0 ? 0 : n / g, g == 0 ? 1 : d / g};
  }
  friend bool operator==(const AuditRational&, const AuditRational&) = default;
};

/// One audited information quantity. When `proven_exact` is true the rational
/// is an exact integer-arithmetic result (e.g. a proven-independence zero);
/// otherwise it is a dyadic rendering (denominator 2^55) of the float value.
struct AuditQuantity {
  AuditRational value;
  double bits = 0;
  bool proven_exact = false;
};

struct FiniteAuditReport {
  uint64_t q = 0;
  uint32_t L = 0;
  uint32_t K = 0;
  uint64_t total_configs = 0;
  AuditQuantity i_s_m;              // I(S; M) over the full enumeration
  AuditQuantity h_ci_given_m_ck;    // H(c_2 | M, c_1)   (H(c_1 | M) when K = 1)
  AuditQuantity h_ci_given_ck;      // H(c_2 | c_1)      (H(c_1) when K = 1)
  bool uniform_attack_success = false;  // every deterministic g: M -> s hits 1/q^L
  AuditRational best_attack_success;
  AuditRational worst_attack_success;
  double lemma1_bound = 0;  // guessing bound at zero leakage: 1 / (L log2 q)
};

namespace detail {

inline AuditQuantity dyadic_quantity(double bits) {
  const uint64_t den = 1ull << 55;
  const double scaled = bits * static_cast<double>(den);
  AuditQuantity out;
  out.bits = bits;
  out.value = AuditRational::reduced(static_cast<uint64_t>(scaled + 0.5), den);
  out.proven_exact = false;
  return out;
}

template <typename Map>
double entropy_from_counts(const Map& counts, uint64_t total) {
  long double h = 0;
  const long double t = static_cast<long double>(total);
  for (const auto& [key, c] : counts) {
    if (c == 0) continue;
    const long double p = static_cast<long double>(c) / t;
    h -= p * std::log2(p);
  }
  return static_cast<double>(h);
}

}  // namespace detail

/// Exhaustively enumerates every equiprobable protocol configuration
/// (ordered distinct nonzero key abscissas, all ordinate combinations, all
/// secrets, ordered distinct fresh challenge abscissas) and measures leakage
/// by exact counting. Budget guard: the configuration count must not exceed
/// `budget`. Works on fields as small as q^L = 2K + 1, below the keygen
/// threshold, precisely so that leakage can be audited on tiny examples.
inline FiniteAuditReport exact_leakage_audit(uint64_t q, uint32_t L, uint32_t K,
                                             uint64_t budget = 10'000'000) {
  const FieldCtx ctx = FieldCtx::make(q, L);
  if (K < 1) throw InvalidParams("number of users K must be >= 1");
  const uint64_t order = ctx.order();
  const uint64_t nonzero = order - 1;
  if (nonzero < 2ull * K) {
    throw FieldTooSmall("leakage audit requires q^L >= 2K+1 (need " +
                        std::to_string(2ull * K + 1) + ", field order is " +
                        std::to_string(order) + ")");
  }

  // Config count: P(nonzero, K) * order^K * order * P(nonzero - K, K).
  long double projected = 1;
  for (uint64_t i = 0; i < K; ++i) projected *= static_cast<long double>(nonzero - i);
  for (uint64_t i = 0; i < K; ++i) projected *= static_cast<long double>(order);
  projected *= static_cast<long double>(order);
  for (uint64_t i = 0; i < K; ++i) projected *= static_cast<long double>(nonzero - K - i);
  if (projected > static_cast<long double>(budget)) {
    throw EnumerationBudgetExceeded(
        "exact audit would enumerate about " + std::to_string(static_cast<double>(projected)) +
        " configurations, over the budget of " + std::to_string(budget));
  }

  // Ordered-distinct odometers over nonzero field values.
  const auto next_tuple = [&](std::vector<uint64_t>& tuple,
                              const std::vector<uint64_t>& excluded) -> bool {
    const auto is_free = [&](uint64_t v, size_t upto) {
      for (uint64_t e : excluded) {
        if (e == v) return false;
      }
      for (size_t i = 0; i < upto; ++i) {
        if (tuple[i] == v) return false;
      }
      return true;
    };
    size_t pos = tuple.size();
    while (pos > 0) {
      --pos;
      uint64_t v = tuple[pos] + 1;
      while (v < order && !is_free(v, pos)) ++v;
      if (v < order) {
        tuple[pos] = v;
        for (size_t i = pos + 1; i < tuple.size(); ++i) {
          uint64_t w = 1;
          while (!is_free(w, i)) ++w;
          tuple[i] = w;
        }
        return true;
      }
    }
    return false;
  };
  const auto first_tuple = [&](std::vector<uint64_t>& tuple, const std::vector<uint64_t>& excluded) {
    const auto is_free = [&](uint64_t v, size_t upto) {
      for (uint64_t e : excluded) {
        if (e == v) return false;
      }
      for (size_t i = 0; i < upto; ++i) {
        if (tuple[i] == v) return false;
      }
      return true;
    };
    for (size_t i = 0; i < tuple.size(); ++i) {
      uint64_t w = 1;
      while (!is_free(w, i)) ++w;
      tuple[i] = w;
    }
  };

  std::map<std::vector<uint64_t>, uint64_t> m_intern;  // canonical M -> id
  std::vector<uint64_t> cnt_m;                         // by m id
  std::vector<uint64_t> cnt_s(order, 0);
  std::map<std::pair<uint64_t, uint64_t>, uint64_t> cnt_ms;  // (m id, s)
  // Conditional entropy bookkeeping for c_i = keys[i_idx], c_k = keys[0].
  std::map<std::pair<uint64_t, uint64_t>, uint64_t> cnt_mck;         // (m id, c_k)
  std::map<std::tuple<uint64_t, uint64_t, uint64_t>, uint64_t> cnt_ci_mck;  // (c_i, m id, c_k)
  std::map<uint64_t, uint64_t> cnt_ck;
  std::map<std::pair<uint64_t, uint64_t>, uint64_t> cnt_ci_ck;

  const size_t i_idx = (K >= 2) ? 1 : 0;  // audit c_2 given c_1, or c_1 alone
  uint64_t total = 0;

  std::vector<uint64_t> xs(K), ms(K);
  const std::vector<uint64_t> zero_excl{0};
  first_tuple(xs, zero_excl);
  do {
    std::vector<uint64_t> m_excl = xs;
    m_excl.push_back(0);
    std::vector<uint64_t> ys(K, 0);
    bool ys_more = true;
    while (ys_more) {
      for (uint64_t a0 = 0; a0 < order; ++a0) {
        // f through (0, a0) and the key points.
        std::vector<EvalPoint> anchor{{ctx.zero(), FieldElem{a0}}};
        for (uint32_t k = 0; k < K; ++k) {
          anchor.push_back({FieldElem{xs[k]}, FieldElem{ys[k]}});
        }
        const Poly f = poly_interpolate(ctx, anchor);

        first_tuple(ms, m_excl);
        do {
          // Canonical M: points sorted by abscissa, flattened (x1,y1,x2,y2,...).
          std::vector<std::pair<uint64_t, uint64_t>> pts;
          pts.reserve(K);
          for (uint32_t k = 0; k < K; ++k) {
            pts.emplace_back(ms[k], poly_eval(ctx, f, FieldElem{ms[k]}).v);
          }
          std::sort(pts.begin(), pts.end());
          std::vector<uint64_t> m_key;
          m_key.reserve(2 * K);
          for (const auto& [x, y] : pts) {
            m_key.push_back(x);
            m_key.push_back(y);
          }
          const auto [it, inserted] = m_intern.try_emplace(m_key, m_intern.size());
          const uint64_t m_id = it->second;
          if (inserted) cnt_m.push_back(0);

          ++cnt_m[m_id];
          ++cnt_s[a0];
          ++cnt_ms[{m_id, a0}];
          const uint64_t ci = xs[i_idx] * order + ys[i_idx];
          // With a single user there is no other credential to condition on:
          // c_k degenerates to a constant, so the quantities become H(c_1|M)
          // and H(c_1).
          const uint64_t ck = (K >= 2) ? xs[0] * order + ys[0] : 0;
          ++cnt_mck[{m_id, ck}];
          ++cnt_ci_mck[{ci, m_id, ck}];
          ++cnt_ck[ck];
          ++cnt_ci_ck[{ci, ck}];
          ++total;
        } while (next_tuple(ms, m_excl));
      }
      ys_more = false;
      for (size_t i = ys.size(); i-- > 0;) {
        if (++ys[i] < order) {
          ys_more = true;
          break;
        }
        ys[i] = 0;
      }
    }
  } while (next_tuple(xs, zero_excl));

  FiniteAuditReport report;
  report.q = q;
  report.L = L;
  report.K = K;
  report.total_configs = total;

  // Exact independence of (S, M): every cell must satisfy
  // cnt(m, s) * total == cnt(m) * cnt(s), including empty cells.
  bool independent = true;
  for (const auto& [m_key, m_id] : m_intern) {
    for (uint64_t s = 0; s < order && independent; ++s) {
      const auto it = cnt_ms.find({m_id, s});
      const uint64_t joint = (it == cnt_ms.end()) ? 0 : it->second;
      const __uint128_t lhs = static_cast<__uint128_t>(joint) * total;
      const __uint128_t rhs = static_cast<__uint128_t>(cnt_m[m_id]) * cnt_s[s];
      if (lhs != rhs) independent = false;
    }
    if (!independent) break;
  }
  if (independent) {
    report.i_s_m = AuditQuantity{AuditRational{0, 1}, 0.0, true};
  } else {
    std::map<uint64_t, uint64_t> s_support;
    for (uint64_t s = 0; s < order; ++s) {
      if (cnt_s[s] != 0) s_support[s] = cnt_s[s];
    }
    std::map<uint64_t, uint64_t> m_counts;
    for (uint64_t m = 0; m < cnt_m.size(); ++m) m_counts[m] = cnt_m[m];
    const double h_s = detail::entropy_from_counts(s_support, total);
    const double h_m = detail::entropy_from_counts(m_counts, total);
    const double h_ms = detail::entropy_from_counts(cnt_ms, total);
    report.i_s_m = detail::dyadic_quantity(h_s + h_m - h_ms);
  }

  // H(c_i | M, c_k) = H(c_i, M, c_k) - H(M, c_k); exact zero is provable when
  // each (M, c_k) group pins c_i to a single value.
  {
    bool pinned = true;
    std::map<std::pair<uint64_t, uint64_t>, uint64_t> seen;
    for (const auto& [key, c] : cnt_ci_mck) {
      (void)c;
      const auto group = std::make_pair(std::get<1>(key), std::get<2>(key));
      auto [it, inserted] = seen.try_emplace(group, std::get<0>(key));
      if (!inserted && it->second != std::get<0>(key)) {
        pinned = false;
        break;
      }
    }
    const double h = detail::entropy_from_counts(cnt_ci_mck, total) -
                     detail::entropy_from_counts(cnt_mck, total);
    report.h_ci_given_m_ck =
        pinned ? AuditQuantity{AuditRational{0, 1}, 0.0, true} : detail::dyadic_quantity(h);
    const double h_marg = detail::entropy_from_counts(cnt_ci_ck, total) -
                          detail::entropy_from_counts(cnt_ck, total);
    report.h_ci_given_ck = detail::dyadic_quantity(h_marg);
  }

  // Attack-success extremes over every deterministic guesser g: M -> s.
  // best = sum_m max_s cnt(m, s), worst = sum_m min_s cnt(m, s) (0 if any
  // secret never co-occurs with m). Conditional uniformity of S given M makes
  // every g's success exactly 1/q^L.
  {
    std::vector<uint64_t> best_per_m(cnt_m.size(), 0);
    std::vector<uint64_t> worst_per_m(cnt_m.size(), UINT64_MAX);
    for (uint64_t m = 0; m < cnt_m.size(); ++m) {
      for (uint64_t s = 0; s < order; ++s) {
        const auto it = cnt_ms.find({m, s});
        const uint64_t joint = (it == cnt_ms.end()) ? 0 : it->second;
        best_per_m[m] = std::max(best_per_m[m], joint);
        worst_per_m[m] = std::min(worst_per_m[m], joint);
      }
    }
    uint64_t best = 0, worst = 0;
    for (uint64_t m = 0; m < cnt_m.size(); ++m) {
      best += best_per_m[m];
      worst += worst_per_m[m];
    }
    report.best_attack_success = AuditRational::reduced(best, total);
    report.worst_attack_success = AuditRational::reduced(worst, total);
    bool uniform = true;
    for (uint64_t m = 0; m < cnt_m.size() && uniform; ++m) {
      for (uint64_t s = 0; s < order; ++s) {
        const auto it = cnt_ms.find({m, s});
        const uint64_t joint = (it == cnt_ms.end()) ? 0 : it->second;
        if (static_cast<__uint128_t>(joint) * order != static_cast<__uint128_t>(cnt_m[m])) {
          uniform = false;
          break;
        }
      }
    }
    report.uniform_attack_success = uniform;
  }

  const double log_card = static_cast<double>(L) * std::log2(static_cast<double>(q));
  report.lemma1_bound = fano_guess_bound(0.0, log_card, log_card);
  return report;
}

}  // namespace pa
