#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pa/errors.hpp"

namespace pa {

/// Probability vector over the alphabet {0, ..., p.size()-1}.
struct Dist {
  std::vector<double> p;
  size_t alphabet() const { return p.size(); }
};

inline void validate_dist(const Dist& d) {
  if (d.p.empty()) throw InvalidDistribution("distribution over an empty alphabet");
  long double sum = 0;
  for (double x : d.p) {
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidDistribution("probability outside [0, 1]");
    sum += x;
  }
  if (std::abs(static_cast<double>(sum) - 1.0) > 1e-9) {
    throw InvalidDistribution("probabilities sum to " + std::to_string(static_cast<double>(sum)) +
                              ", expected 1 within 1e-9");
  }
}

/// Shannon entropy in bits; 0 log 0 = 0.
inline double entropy_bits(const Dist& d) {
  validate_dist(d);
  long double h = 0;
  for (double x : d.p) {
    if (x > 0) h -= static_cast<long double>(x) * std::log2(static_cast<long double>(x));
  }
  return static_cast<double>(h);
}

/// Binary entropy h2(eps) in bits.
inline double binary_entropy(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidParams("binary_entropy argument outside [0, 1]");
  if (eps == 0.0 || eps == 1.0) return 0.0;
  return entropy_bits(Dist{{eps, 1.0 - eps}});
}

/// Joint distribution over {0..a-1} x {0..b-1}, row-major.
struct PairDist {
  size_t a = 0;
  size_t b = 0;
  std::vector<double> p;

  double at(size_t i, size_t j) const { return p[i * b + j]; }
};

inline void validate_pair(const PairDist& d) {
  if (d.a == 0 || d.b == 0 || d.p.size() != d.a * d.b) {
    throw InvalidDistribution("joint distribution dimensions do not match its table");
  }
  validate_dist(Dist{d.p});
}

inline double entropy_bits(const PairDist& d) {
  validate_pair(d);
  return entropy_bits(Dist{d.p});
}

inline Dist marginal_a(const PairDist& d) {
  validate_pair(d);
  Dist out{std::vector<double>(d.a, 0.0)};
  for (size_t i = 0; i < d.a; ++i) {
    long double s = 0;
    for (size_t j = 0; j < d.b; ++j) s += d.at(i, j);
    out.p[i] = static_cast<double>(s);
  }
  return out;
}

inline Dist marginal_b(const PairDist& d) {
  validate_pair(d);
  Dist out{std::vector<double>(d.b, 0.0)};
  for (size_t j = 0; j < d.b; ++j) {
    long double s = 0;
    for (size_t i = 0; i < d.a; ++i) s += d.at(i, j);
    out.p[j] = static_cast<double>(s);
  }
  return out;
}

/// I(A;B) in bits via the direct sum p(a,b) log2 [p(a,b) / (p(a)p(b))],
/// which returns exactly 0.0 on bit-exact product distributions.
inline double mutual_information_bits(const PairDist& d) {
  validate_pair(d);
  const Dist ma = marginal_a(d);
  const Dist mb = marginal_b(d);
  long double mi = 0;
  for (size_t i = 0; i < d.a; ++i) {
    for (size_t j = 0; j < d.b; ++j) {
      const double pij = d.at(i, j);
      if (pij <= 0) continue;
      const double denom = ma.p[i] * mb.p[j];
      if (pij == denom) continue;  // exact independence cell contributes 0
      mi += static_cast<long double>(pij) *
            (std::log2(static_cast<long double>(pij)) - std::log2(static_cast<long double>(denom)));
    }
  }
  return static_cast<double>(mi);
}

/// Memoryless source triple (X, U, Y) with the Markov structure U - X - Y:
/// p(x, u, y) = p(x) p(u|x) p(y|x). U is the auxiliary (codebook) variable,
/// Y the correlated observation handed to provers.
struct JointSource {
  Dist px;
  std::vector<std::vector<double>> pu_given_x;  // |X| rows of length |U|
  std::vector<std::vector<double>> py_given_x;  // |X| rows of length |Y|

  size_t x_alphabet() const { return px.alphabet(); }
  size_t u_alphabet() const { return pu_given_x.empty() ? 0 : pu_given_x[0].size(); }
  size_t y_alphabet() const { return py_given_x.empty() ? 0 : py_given_x[0].size(); }

  void validate() const {
    validate_dist(px);
    if (pu_given_x.size() != px.alphabet() || py_given_x.size() != px.alphabet()) {
      throw AlphabetMismatch("conditional rows must match the X alphabet size");
    }
    for (const auto& rows : {pu_given_x, py_given_x}) {
      const size_t width = rows[0].size();
      for (const auto& row : rows) {
        if (row.size() != width) throw AlphabetMismatch("ragged conditional distribution table");
        validate_dist(Dist{row});
      }
    }
  }

  PairDist pair_xu() const {
    PairDist d{x_alphabet(), u_alphabet(), {}};
    d.p.resize(d.a * d.b);
    for (size_t x = 0; x < d.a; ++x) {
      for (size_t u = 0; u < d.b; ++u) d.p[x * d.b + u] = px.p[x] * pu_given_x[x][u];
    }
    return d;
  }

  PairDist pair_xy() const {
    PairDist d{x_alphabet(), y_alphabet(), {}};
    d.p.resize(d.a * d.b);
    for (size_t x = 0; x < d.a; ++x) {
      for (size_t y = 0; y < d.b; ++y) d.p[x * d.b + y] = px.p[x] * py_given_x[x][y];
    }
    return d;
  }

  PairDist pair_uy() const {
    PairDist d{u_alphabet(), y_alphabet(), {}};
    d.p.assign(d.a * d.b, 0.0);
    for (size_t x = 0; x < x_alphabet(); ++x) {
      for (size_t u = 0; u < d.a; ++u) {
        const double pxu = px.p[x] * pu_given_x[x][u];
        if (pxu == 0) continue;
        for (size_t y = 0; y < d.b; ++y) d.p[u * d.b + y] += pxu * py_given_x[x][y];
      }
    }
    return d;
  }

  Dist dist_u() const { return marginal_b(pair_xu()); }
  Dist dist_y() const { return marginal_b(pair_xy()); }

  double i_xu() const { return mutual_information_bits(pair_xu()); }
  double i_uy() const { return mutual_information_bits(pair_uy()); }
  double i_xy() const { return mutual_information_bits(pair_xy()); }
  double h_y() const { return entropy_bits(dist_y()); }

  /// H(Y|X) = sum_x p(x) H(Y|X=x), computed row-wise for exactness on
  /// symmetric channels.
  double h_y_given_x() const {
    long double h = 0;
    for (size_t x = 0; x < x_alphabet(); ++x) {
      if (px.p[x] == 0) continue;
      h += static_cast<long double>(px.p[x]) * entropy_bits(Dist{py_given_x[x]});
    }
    return static_cast<double>(h);
  }

  /// True when U is a deterministic copy of X (identity conditional).
  bool u_copies_x() const {
    if (u_alphabet() != x_alphabet()) return false;
    for (size_t x = 0; x < x_alphabet(); ++x) {
      for (size_t u = 0; u < u_alphabet(); ++u) {
        if (pu_given_x[x][u] != (u == x ? 1.0 : 0.0)) return false;
      }
    }
    return true;
  }
};

/// X ~ Bernoulli(p_x1), Y = X through BSC(eps), U = X.
inline JointSource make_bsc_source(double p_x1, double eps) {
  JointSource s;
  s.px = Dist{{1.0 - p_x1, p_x1}};
  s.py_given_x = {{1.0 - eps, eps}, {eps, 1.0 - eps}};
  s.pu_given_x = {{1.0, 0.0}, {0.0, 1.0}};
  s.validate();
  return s;
}

/// Two notions of typicality are provided and never conflated:
///  - per_letter_robust: every symbol's empirical frequency lies within a
///    multiplicative band around its probability, |freq/n - p| <= xi * p.
///    Symbols of probability zero must not occur. This is the strict
///    per-letter test applied when callers ask about a single sequence.
///  - entropy_ball: the empirical per-symbol log-likelihood is close to the
///    source entropy, |-(1/n) sum log2 p(a_i) - H| <= xi (weak / AEP-style
///    typicality). This is the notion under which the asymptotic covering
///    and packing behavior of the binning construction is observable at
///    simulation-scale block lengths.
enum class TypicalityKind { per_letter_robust, entropy_ball };

namespace detail {

template <typename ProbAt>
bool typical_impl(std::span<const uint32_t> seq, size_t alphabet, ProbAt prob_at, double h_bits,
                  double xi, TypicalityKind kind) {
  if (seq.empty()) throw InvalidParams("typicality of an empty sequence is undefined");
  if (!(xi >= 0)) throw InvalidParams("typicality slack must be nonnegative");
  for (uint32_t s : seq) {
    if (s >= alphabet) throw AlphabetMismatch("sequence symbol outside the alphabet");
  }
  const double n = static_cast<double>(seq.size());
  if (kind == TypicalityKind::entropy_ball) {
    long double score = 0;
    for (uint32_t s : seq) {
      const double p = prob_at(s);
      if (p <= 0) return false;  // zero-probability symbols are never typical
      score -= std::log2(static_cast<long double>(p));
    }
    return std::abs(static_cast<double>(score) / n - h_bits) <= xi;
  }
  // per_letter_robust
  std::vector<uint64_t> counts(alphabet, 0);
  for (uint32_t s : seq) ++counts[s];
  for (size_t a = 0; a < alphabet; ++a) {
    const double p = prob_at(a);
    const double freq = static_cast<double>(counts[a]) / n;
    if (p == 0) {
      if (counts[a] != 0) return false;
      continue;
    }
    if (std::abs(freq - p) > xi * p) return false;
  }
  return true;
}

}  // namespace detail

/// Is `seq` xi-typical for `d` under the given notion?
inline bool is_typical(std::span<const uint32_t> seq, const Dist& d, double xi,
                       TypicalityKind kind = TypicalityKind::per_letter_robust) {
  validate_dist(d);
  const double h = (kind == TypicalityKind::entropy_ball) ? entropy_bits(d) : 0.0;
  return detail::typical_impl(
      seq, d.alphabet(), [&](size_t a) { return d.p[a]; }, h, xi, kind);
}

/// Is the pair of aligned sequences jointly xi-typical for `d`?
inline bool is_jointly_typical(std::span<const uint32_t> a, std::span<const uint32_t> b,
                               const PairDist& d, double xi,
                               TypicalityKind kind = TypicalityKind::per_letter_robust) {
  validate_pair(d);
  if (a.size() != b.size()) throw LengthMismatch("joint typicality needs equal-length sequences");
  std::vector<uint32_t> flat(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] >= d.a || b[i] >= d.b) throw AlphabetMismatch("sequence symbol outside the alphabet");
    flat[i] = static_cast<uint32_t>(a[i] * d.b + b[i]);
  }
  const double h = (kind == TypicalityKind::entropy_ball) ? entropy_bits(d) : 0.0;
  return detail::typical_impl(
      std::span<const uint32_t>(flat), d.a * d.b, [&](size_t idx) { return d.p[idx]; }, h, xi,
      kind);
}

/// Upper bound on any guesser's success probability at recovering U from an
/// observation M with leakage budget I(U;M) <= alpha (bits):
///   P_guess <= (1 + alpha + log2|U| - H(U)) / log2|U|, clamped to [0, 1].
inline double fano_guess_bound(double alpha, double log2_card_u, double h_u_bits) {
  if (!(alpha >= 0)) throw InvalidParams("leakage budget must be nonnegative");
  if (!(log2_card_u > 0)) throw InvalidParams("alphabet log-cardinality must be positive");
  if (!(h_u_bits >= 0) || h_u_bits > log2_card_u + 1e-9) {
    throw InvalidEntropy("entropy outside [0, log2 |U|]");
  }
  const double bound = (1.0 + alpha + log2_card_u - h_u_bits) / log2_card_u;
  return std::min(1.0, std::max(0.0, bound));
}

/// Plug-in (empirical frequency) mutual information estimate, in bits, from
/// paired samples. Exactly 0.0 when the empirical counts factorize.
inline double plugin_mi_estimate(std::span<const std::pair<uint64_t, uint64_t>> samples) {
  if (samples.empty()) throw InvalidParams("mutual information estimate needs samples");
  std::map<std::pair<uint64_t, uint64_t>, uint64_t> joint;
  std::map<uint64_t, uint64_t> left, right;
  for (const auto& s : samples) {
    ++joint[s];
    ++left[s.first];
    ++right[s.second];
  }
  const __uint128_t n = samples.size();
  long double mi = 0;
  for (const auto& [key, c] : joint) {
    const __uint128_t num = static_cast<__uint128_t>(c) * n;
    const __uint128_t den =
        static_cast<__uint128_t>(left[key.first]) * right[key.second];
    if (num == den) continue;  // exact independence cell
    mi += static_cast<long double>(c) / static_cast<long double>(samples.size()) *
          std::log2(static_cast<long double>(num) / static_cast<long double>(den));
  }
  return static_cast<double>(mi);
}

}  // namespace pa
