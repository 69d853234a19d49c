#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pa/info_theory.hpp"
#include "pa/rng.hpp"

namespace pa {

/// Typicality slacks for the binning construction: the verifier encodes with
/// the tighter slack xi_prime, provers decode with the looser xi. The strict
/// ordering 0 < xi_prime < xi is what separates covering from packing.
struct TypicalityParams {
  double xi = 0;
  double xi_prime = 0;
  TypicalityKind kind = TypicalityKind::entropy_ball;

  void validate() const {
    if (!(xi_prime > 0) || !(xi > xi_prime)) {
      throw InvalidParams("typicality slacks must satisfy 0 < xi_prime < xi");
    }
  }
};

/// How the finite-n rate slack phi is chosen. entropy_scaled uses
/// phi(slack) = slack * H(relevant pair); zero drops the slack terms
/// entirely (the pure asymptotic rates).
enum class RateSlackKind { entropy_scaled, zero };

struct BinningRates {
  double r_tilde = 0;      // codebook rate: I(U;X) + phi_cover(xi_prime)
  double r_prime = 0;      // bin rate: I(U;X) - I(U;Y) + phi_pack(xi) + phi_cover(xi_prime)
  double secret_rate = 0;  // r_tilde - r_prime = I(U;Y) - phi_pack(xi)
};

/// Evaluates the construction's rates for a source. Throws DegenerateSource
/// when the secret rate I(U;Y) - phi_pack(xi) is not positive.
inline BinningRates rates_from_dist(const JointSource& source, const TypicalityParams& typ,
                                    RateSlackKind slack = RateSlackKind::entropy_scaled) {
  source.validate();
  typ.validate();
  const double i_ux = source.i_xu();
  const double i_uy = source.i_uy();
  double phi_cover = 0, phi_pack = 0;
  if (slack == RateSlackKind::entropy_scaled) {
    phi_cover = typ.xi_prime * entropy_bits(source.pair_xu());
    phi_pack = typ.xi * entropy_bits(source.pair_uy());
  }
  if (i_uy - phi_pack <= 0) {
    throw DegenerateSource("secret rate I(U;Y) - phi(xi) = " + std::to_string(i_uy - phi_pack) +
                           " is not positive; the source cannot hide a secret");
  }
  BinningRates out;
  out.r_tilde = i_ux + phi_cover;
  out.r_prime = i_ux - i_uy + phi_pack + phi_cover;
  out.secret_rate = out.r_tilde - out.r_prime;
  return out;
}

/// Secret-key rates of the asymptotic construction with K users:
/// achieved K*H(Y|X) against the capacity K*H(Y); the gap is K*I(X;Y).
struct AsymptoticRate {
  double achieved = 0;
  double capacity = 0;
  double gap = 0;
};

inline AsymptoticRate asymptotic_key_rate(const JointSource& source, uint32_t K) {
  source.validate();
  if (K < 1) throw InvalidParams("number of users K must be >= 1");
  AsymptoticRate out;
  out.achieved = K * source.h_y_given_x();
  out.capacity = K * source.h_y();
  out.gap = out.capacity - out.achieved;
  return out;
}

namespace detail {

inline uint32_t ceil_rate_bits(double x) {
  if (x <= 0) return 0;
  // Tolerate float drift just above exact integers (e.g. 8.000000000000002).
  return static_cast<uint32_t>(std::ceil(x - 1e-9));
}

/// Typicality of a binary pair sequence summarized by its four cell counts.
/// `p` is the 2x2 pair distribution in row-major order matching the counts,
/// `h` its entropy (used by the entropy-ball notion).
inline bool typical_from_pair_counts(uint64_t n, const uint64_t counts[4], const double p[4],
                                     double h, double xi, TypicalityKind kind) {
  if (kind == TypicalityKind::entropy_ball) {
    long double score = 0;
    for (int c = 0; c < 4; ++c) {
      if (counts[c] == 0) continue;
      if (p[c] <= 0) return false;
      score -= static_cast<long double>(counts[c]) * std::log2(static_cast<long double>(p[c]));
    }
    return std::abs(static_cast<double>(score) / static_cast<double>(n) - h) <= xi;
  }
  for (int c = 0; c < 4; ++c) {
    const double freq = static_cast<double>(counts[c]) / static_cast<double>(n);
    if (p[c] == 0) {
      if (counts[c] != 0) return false;
      continue;
    }
    if (std::abs(freq - p[c]) > xi * p[c]) return false;
  }
  return true;
}

}  // namespace detail

/// The public codebook: 2^total_bits length-n rows drawn i.i.d. from P_U,
/// split into 2^bin_bits contiguous equal bins. Row `flat` lives in bin
/// m = flat / bin_size at in-bin index s = flat % bin_size, i.e.
/// flat = m * bin_size + s. Binary-alphabet codebooks with n <= 32 are stored
/// one bitmask per row; other alphabets one byte per symbol.
///
/// When U is a deterministic copy of X (the diagonal channel), a row is
/// jointly typical with x only if it equals x, so encoding reduces to an
/// exact-match lookup. For such sources (binary, n <= 24) construction also
/// builds a value-grouped index: value_order lists flat indices grouped by
/// row value (ascending within each group, exactly the order a linear scan
/// would produce) and value_starts[v] delimits group v.
struct Codebook {
  uint32_t n = 0;
  uint32_t u_alphabet = 0;
  uint32_t total_bits = 0;
  uint32_t bin_bits = 0;
  uint64_t seed = 0;
  JointSource source;

  bool packed = false;
  std::vector<uint32_t> rows_packed;
  std::vector<uint8_t> rows_bytes;

  bool has_value_index = false;
  std::vector<uint32_t> value_starts;
  std::vector<uint32_t> value_order;

  uint64_t size() const { return 1ull << total_bits; }
  uint64_t num_bins() const { return 1ull << bin_bits; }
  uint64_t bin_size() const { return 1ull << (total_bits - bin_bits); }

  uint32_t symbol(uint64_t flat, uint32_t pos) const {
    return packed ? ((rows_packed[flat] >> pos) & 1u) : rows_bytes[flat * n + pos];
  }

  std::vector<uint32_t> row(uint64_t flat) const {
    std::vector<uint32_t> out(n);
    for (uint32_t i = 0; i < n; ++i) out[i] = symbol(flat, i);
    return out;
  }

  bool rows_equal(const Codebook& other) const {
    return packed == other.packed && rows_packed == other.rows_packed &&
           rows_bytes == other.rows_bytes;
  }
};

namespace detail {

inline void build_value_index(Codebook& cb) {
  cb.has_value_index = false;
  if (!cb.packed || !cb.source.u_copies_x() || cb.n > 24 || cb.total_bits > 31) return;
  const uint64_t groups = 1ull << cb.n;
  const uint64_t size = cb.size();
  cb.value_starts.assign(groups + 1, 0);
  for (uint64_t flat = 0; flat < size; ++flat) ++cb.value_starts[cb.rows_packed[flat] + 1];
  for (uint64_t v = 0; v < groups; ++v) cb.value_starts[v + 1] += cb.value_starts[v];
  std::vector<uint32_t> cursor(cb.value_starts.begin(), cb.value_starts.end() - 1);
  cb.value_order.resize(size);
  for (uint64_t flat = 0; flat < size; ++flat) {
    cb.value_order[cursor[cb.rows_packed[flat]]++] = static_cast<uint32_t>(flat);
  }
  cb.has_value_index = true;
}

inline uint32_t draw_symbol(const Dist& d, Rng& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cum = 0;
  for (size_t a = 0; a + 1 < d.p.size(); ++a) {
    cum += d.p[a];
    if (u < cum) return static_cast<uint32_t>(a);
  }
  return static_cast<uint32_t>(d.p.size() - 1);
}

}  // namespace detail

/// Draws the codebook for a source at block length n with the given rates.
/// Regeneration from the same (source, n, rates, seed) is byte-identical.
/// Throws CodebookTooLarge when 2^total_bits would exceed 2^budget_exponent.
inline Codebook make_codebook(const JointSource& source, uint32_t n, const BinningRates& rates,
                              uint64_t seed, uint32_t budget_exponent = 24) {
  source.validate();
  if (n < 1) throw InvalidParams("block length n must be >= 1");
  Codebook cb;
  cb.n = n;
  cb.u_alphabet = static_cast<uint32_t>(source.u_alphabet());
  cb.total_bits = detail::ceil_rate_bits(static_cast<double>(n) * rates.r_tilde);
  cb.bin_bits = detail::ceil_rate_bits(static_cast<double>(n) * rates.r_prime);
  cb.seed = seed;
  cb.source = source;
  if (cb.total_bits < 1) cb.total_bits = 1;
  if (cb.bin_bits > cb.total_bits) {
    throw InvalidParams("bin rate exceeds codebook rate; rates are inconsistent");
  }
  if (cb.total_bits > budget_exponent) {
    throw CodebookTooLarge("codebook needs 2^" + std::to_string(cb.total_bits) +
                           " rows, over the budget of 2^" + std::to_string(budget_exponent) +
                           " (raise the budget exponent to allow this)");
  }

  const uint64_t size = cb.size();
  const Dist pu = source.dist_u();
  cb.packed = (cb.u_alphabet == 2 && n <= 32);
  Rng rng(seed);
  if (cb.packed) {
    cb.rows_packed.resize(size);
    const bool exactly_uniform = (pu.p[0] == 0.5 && pu.p[1] == 0.5);
    const uint64_t mask = (n == 64) ? ~0ull : ((1ull << n) - 1);
    if (exactly_uniform) {
      // One raw word per row; the low n bits are uniform.
      for (uint64_t flat = 0; flat < size; ++flat) {
        cb.rows_packed[flat] = static_cast<uint32_t>(rng() & mask);
      }
    } else {
      for (uint64_t flat = 0; flat < size; ++flat) {
        uint32_t row = 0;
        for (uint32_t i = 0; i < n; ++i) row |= detail::draw_symbol(pu, rng) << i;
        cb.rows_packed[flat] = row;
      }
    }
  } else {
    cb.rows_bytes.resize(size * n);
    for (uint64_t flat = 0; flat < size; ++flat) {
      for (uint32_t i = 0; i < n; ++i) {
        cb.rows_bytes[flat * n + i] = static_cast<uint8_t>(detail::draw_symbol(pu, rng));
      }
    }
  }
  detail::build_value_index(cb);
  return cb;
}

/// One certificate-authority draw for the binning regime: the verifier's
/// sequence x and the K provers' correlated observations y[k], each symbol
/// drawn from the channel conditioned on x_i. Draw order: x first, then each
/// user's sequence in turn.
struct CaRealization {
  std::vector<uint32_t> x;
  std::vector<std::vector<uint32_t>> y;
};

inline std::vector<uint32_t> generate_x(const JointSource& source, uint32_t n, Rng& rng) {
  std::vector<uint32_t> x(n);
  for (auto& s : x) s = detail::draw_symbol(source.px, rng);
  return x;
}

inline CaRealization ca_generate(const JointSource& source, uint32_t n, uint32_t K, Rng& rng) {
  source.validate();
  if (n < 1 || K < 1) throw InvalidParams("ca_generate needs n >= 1 and K >= 1");
  CaRealization out;
  out.x = generate_x(source, n, rng);
  out.y.resize(K);
  for (uint32_t k = 0; k < K; ++k) {
    out.y[k].resize(n);
    for (uint32_t i = 0; i < n; ++i) {
      out.y[k][i] = detail::draw_symbol(Dist{source.py_given_x[out.x[i]]}, rng);
    }
  }
  return out;
}

struct EncodeResult {
  uint64_t m = 0;          // bin index: the public challenge
  uint64_t s = 0;          // in-bin index: the shared secret
  bool fallback = false;   // no jointly typical codeword existed (error event E1)
  uint64_t candidates = 0; // how many rows were jointly typical with x
};

enum class DecodeCase { unique_typical, multiple_typical, none_typical };

struct DecodeResult {
  uint64_t s_hat = 0;
  DecodeCase dcase = DecodeCase::unique_typical;
  uint64_t candidates = 0;
};

namespace detail {

inline PairDist transpose_pair(const PairDist& d) {
  PairDist out{d.b, d.a, std::vector<double>(d.p.size())};
  for (size_t i = 0; i < d.a; ++i) {
    for (size_t j = 0; j < d.b; ++j) out.p[j * d.a + i] = d.at(i, j);
  }
  return out;
}

/// Scan-order candidate collection for packed binary codebooks, via the
/// (weight, overlap) summary table. The pair distribution must be oriented
/// (fixed sequence, scanned row).
class BinaryPairTable {
 public:
  BinaryPairTable(uint32_t n, const PairDist& pair, double xi, TypicalityKind kind,
                  uint32_t fixed_weight)
      : n_(n) {
    const double p[4] = {pair.at(0, 0), pair.at(0, 1), pair.at(1, 0), pair.at(1, 1)};
    const double h = entropy_bits(pair);
    valid_.assign((n + 1) * (n + 1), 0);
    for (uint32_t w = 0; w <= n; ++w) {
      for (uint32_t overlap = 0; overlap <= std::min(w, fixed_weight); ++overlap) {
        if (fixed_weight + w - overlap > n) continue;
        // counts indexed (first var, second var); first var has fixed_weight.
        const uint64_t counts[4] = {n - fixed_weight - w + overlap, w - overlap,
                                    fixed_weight - overlap, overlap};
        valid_[w * (n_ + 1) + overlap] =
            typical_from_pair_counts(n, counts, p, h, xi, kind) ? 1 : 0;
      }
    }
  }

  bool operator()(uint32_t fixed_mask, uint32_t row) const {
    const uint32_t w = static_cast<uint32_t>(std::popcount(row));
    const uint32_t overlap = static_cast<uint32_t>(std::popcount(row & fixed_mask));
    return valid_[w * (n_ + 1) + overlap] != 0;
  }

 private:
  uint32_t n_;
  std::vector<uint8_t> valid_;
};

inline uint32_t pack_mask(std::span<const uint32_t> seq) {
  uint32_t mask = 0;
  for (size_t i = 0; i < seq.size(); ++i) mask |= (seq[i] & 1u) << i;
  return mask;
}

inline void check_sequence(std::span<const uint32_t> seq, uint32_t n, size_t alphabet,
                           const char* what) {
  if (seq.size() != n) {
    throw LengthMismatch(std::string(what) + " sequence length " + std::to_string(seq.size()) +
                         " does not match block length " + std::to_string(n));
  }
  for (uint32_t s : seq) {
    if (s >= alphabet) throw AlphabetMismatch(std::string(what) + " symbol outside the alphabet");
  }
}

}  // namespace detail

/// Verifier encoding: collect every row jointly typical with x at slack
/// xi_prime, pick one uniformly; with no candidate fall back to a uniform row
/// (flagged as the E1 error event). Exactly one bounded RNG draw is consumed
/// either way. The diagonal fast path produces the same draw as the scan.
inline EncodeResult verifier_encode(const Codebook& cb, std::span<const uint32_t> x,
                                    const TypicalityParams& typ, Rng& rng) {
  typ.validate();
  detail::check_sequence(x, cb.n, cb.source.x_alphabet(), "x");
  const uint64_t size = cb.size();

  EncodeResult out;
  uint64_t chosen = 0;
  if (cb.has_value_index) {
    // u == x is the only possible candidate; joint typicality of (x, x)
    // reduces to marginal typicality of x.
    uint64_t lo = 0, hi = 0;
    if (is_typical(x, cb.source.px, typ.xi_prime, typ.kind)) {
      const uint32_t value = detail::pack_mask(x);
      lo = cb.value_starts[value];
      hi = cb.value_starts[value + 1];
    }
    out.candidates = hi - lo;
    if (out.candidates > 0) {
      chosen = cb.value_order[lo + uniform_below(rng, out.candidates)];
    } else {
      out.fallback = true;
      chosen = uniform_below(rng, size);
    }
  } else {
    std::vector<uint64_t> cands;
    if (cb.packed) {
      const uint32_t xmask = detail::pack_mask(x);
      const uint32_t wx = static_cast<uint32_t>(std::popcount(xmask));
      const detail::BinaryPairTable table(cb.n, cb.source.pair_xu(), typ.xi_prime, typ.kind, wx);
      for (uint64_t flat = 0; flat < size; ++flat) {
        if (table(xmask, cb.rows_packed[flat])) cands.push_back(flat);
      }
    } else {
      const PairDist pair = cb.source.pair_xu();
      for (uint64_t flat = 0; flat < size; ++flat) {
        if (is_jointly_typical(x, cb.row(flat), pair, typ.xi_prime, typ.kind)) {
          cands.push_back(flat);
        }
      }
    }
    out.candidates = cands.size();
    if (!cands.empty()) {
      chosen = cands[uniform_below(rng, cands.size())];
    } else {
      out.fallback = true;
      chosen = uniform_below(rng, size);
    }
  }
  out.m = chosen / cb.bin_size();
  out.s = chosen % cb.bin_size();
  return out;
}

/// Prover decoding: scan bin m for rows jointly typical with y at slack xi.
/// Exactly one candidate is the clean case; several trigger a uniform pick
/// among them, none a uniform guess within the bin (error events E3 / E2).
inline DecodeResult prover_decode(const Codebook& cb, uint64_t m, std::span<const uint32_t> y,
                                  const TypicalityParams& typ, Rng& rng) {
  typ.validate();
  detail::check_sequence(y, cb.n, cb.source.y_alphabet(), "y");
  if (m >= cb.num_bins()) {
    throw BinIndexOutOfRange("bin index " + std::to_string(m) + " outside 0.." +
                             std::to_string(cb.num_bins() - 1));
  }
  const uint64_t bin_size = cb.bin_size();
  const uint64_t base = m * bin_size;
  std::vector<uint64_t> cands;
  const PairDist pair = cb.source.pair_uy();
  if (cb.packed && cb.source.y_alphabet() == 2) {
    const uint32_t ymask = detail::pack_mask(y);
    const uint32_t wy = static_cast<uint32_t>(std::popcount(ymask));
    // The table wants (fixed, row) = (y, u); pair_uy is (u, y).
    const detail::BinaryPairTable table(cb.n, detail::transpose_pair(pair), typ.xi, typ.kind, wy);
    for (uint64_t s = 0; s < bin_size; ++s) {
      if (table(ymask, cb.rows_packed[base + s])) cands.push_back(s);
    }
  } else {
    for (uint64_t s = 0; s < bin_size; ++s) {
      if (is_jointly_typical(cb.row(base + s), y, pair, typ.xi, typ.kind)) cands.push_back(s);
    }
  }

  DecodeResult out;
  out.candidates = cands.size();
  if (cands.size() == 1) {
    out.s_hat = cands[0];
    out.dcase = DecodeCase::unique_typical;
  } else if (cands.size() > 1) {
    out.s_hat = cands[uniform_below(rng, cands.size())];
    out.dcase = DecodeCase::multiple_typical;
  } else {
    out.s_hat = uniform_below(rng, bin_size);
    out.dcase = DecodeCase::none_typical;
  }
  return out;
}

}  // namespace pa
