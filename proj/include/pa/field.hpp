#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "pa/errors.hpp"
#include "pa/rng.hpp"

namespace pa {

/// An element of GF(q^L), stored in canonical packed form: if the reduced
/// representative is c_0 + c_1 x + ... + c_{L-1} x^{L-1} with digits
/// 0 <= c_i < q, then v = sum_i c_i * q^i. The packing is a bijection between
/// elements and [0, q^L), so equal values mean equal elements and sampling a
/// uniform value samples a uniform element.
struct FieldElem {
  uint64_t v = 0;
  friend constexpr auto operator<=>(const FieldElem&, const FieldElem&) = default;
};

namespace detail {

inline uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m) {
  return static_cast<uint64_t>(static_cast<__uint128_t>(a) * b % m);
}

inline uint64_t powmod_u64(uint64_t base, uint64_t exp, uint64_t m) {
  uint64_t acc = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1) acc = mulmod_u64(acc, base, m);
    base = mulmod_u64(base, base, m);
    exp >>= 1;
  }
  return acc;
}

/// Deterministic Miller-Rabin for 64-bit integers. The fixed witness set is
/// sufficient for every n < 3.3e24, which covers all uint64_t inputs.
inline bool is_prime_u64(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// Dense polynomial arithmetic over Z_q used only by the irreducibility
/// search at field construction time. Coefficient vectors are ascending and
/// trimmed; the zero polynomial is the empty vector.
struct ZqPoly {
  std::vector<uint64_t> c;

  static ZqPoly x() { return ZqPoly{{0, 1}}; }
  bool is_zero() const { return c.empty(); }
  int degree() const { return static_cast<int>(c.size()) - 1; }
  void trim() {
    while (!c.empty() && c.back() == 0) c.pop_back();
  }
};

inline ZqPoly zq_mul(const ZqPoly& a, const ZqPoly& b, uint64_t q) {
  if (a.is_zero() || b.is_zero()) return {};
  ZqPoly out;
  out.c.assign(a.c.size() + b.c.size() - 1, 0);
  for (size_t i = 0; i < a.c.size(); ++i) {
    if (a.c[i] == 0) continue;
    for (size_t j = 0; j < b.c.size(); ++j) {
      out.c[i + j] = (out.c[i + j] + mulmod_u64(a.c[i], b.c[j], q)) % q;
    }
  }
  out.trim();
  return out;
}

/// Remainder of a modulo monic f.
inline ZqPoly zq_mod_monic(ZqPoly a, const ZqPoly& f, uint64_t q) {
  const int df = f.degree();
  while (a.degree() >= df) {
    const uint64_t lead = a.c.back();
    const int shift = a.degree() - df;
    if (lead != 0) {
      for (int j = 0; j <= df; ++j) {
        const uint64_t sub = mulmod_u64(lead, f.c[j], q);
        uint64_t& slot = a.c[j + shift];
        slot = (slot + q - sub) % q;
      }
    }
    a.c.pop_back();
    a.trim();
  }
  return a;
}

inline ZqPoly zq_mulmod(const ZqPoly& a, const ZqPoly& b, const ZqPoly& f, uint64_t q) {
  return zq_mod_monic(zq_mul(a, b, q), f, q);
}

/// base^exp mod (f, q) by square-and-multiply.
inline ZqPoly zq_powmod(ZqPoly base, uint64_t exp, const ZqPoly& f, uint64_t q) {
  ZqPoly acc{{1}};
  base = zq_mod_monic(std::move(base), f, q);
  while (exp != 0) {
    if (exp & 1) acc = zq_mulmod(acc, base, f, q);
    base = zq_mulmod(base, base, f, q);
    exp >>= 1;
  }
  return acc;
}

inline ZqPoly zq_sub(ZqPoly a, const ZqPoly& b, uint64_t q) {
  if (a.c.size() < b.c.size()) a.c.resize(b.c.size(), 0);
  for (size_t i = 0; i < b.c.size(); ++i) a.c[i] = (a.c[i] + q - b.c[i]) % q;
  a.trim();
  return a;
}

inline ZqPoly zq_gcd(ZqPoly a, ZqPoly b, uint64_t q) {
  a.trim();
  b.trim();
  while (!b.is_zero()) {
    // Scale b monic so zq_mod_monic applies.
    ZqPoly monic = b;
    const uint64_t inv_lead = powmod_u64(monic.c.back(), q - 2, q);
    for (auto& coef : monic.c) coef = mulmod_u64(coef, inv_lead, q);
    ZqPoly r = zq_mod_monic(std::move(a), monic, q);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

/// Rabin irreducibility test for monic f of degree L over Z_q:
/// f is irreducible iff x^(q^L) == x (mod f) and, for every prime p | L,
/// gcd(x^(q^(L/p)) - x, f) is constant.
inline bool zq_irreducible(const ZqPoly& f, uint64_t q) {
  const int L = f.degree();
  std::vector<int> prime_divisors;
  {
    int rem = L;
    for (int p = 2; p * p <= rem; ++p) {
      if (rem % p == 0) {
        prime_divisors.push_back(p);
        while (rem % p == 0) rem /= p;
      }
    }
    if (rem > 1) prime_divisors.push_back(rem);
  }

  // Walk the Frobenius orbit: frob[j] = x^(q^j) mod f.
  ZqPoly cur = zq_mod_monic(ZqPoly::x(), f, q);
  std::vector<ZqPoly> checkpoints;  // parallel to prime_divisors: x^(q^(L/p))
  checkpoints.resize(prime_divisors.size());
  for (int j = 1; j <= L; ++j) {
    cur = zq_powmod(std::move(cur), q, f, q);
    for (size_t i = 0; i < prime_divisors.size(); ++i) {
      if (j == L / prime_divisors[i]) checkpoints[i] = cur;
    }
  }
  const ZqPoly x_residue = zq_mod_monic(ZqPoly::x(), f, q);
  if (!(zq_sub(cur, x_residue, q).is_zero())) return false;
  for (const auto& cp : checkpoints) {
    ZqPoly g = zq_gcd(zq_sub(cp, x_residue, q), f, q);
    if (g.degree() > 0) return false;
  }
  return true;
}

}  // namespace detail

/// Arithmetic context for GF(q^L): q prime, L >= 1, with q^L required to fit
/// in a uint64_t so that all element and counting arithmetic stays exact.
/// For L >= 2 the reduction polynomial is the smallest monic irreducible of
/// degree L over Z_q, where candidates are ordered by their packed integer
/// value (equivalently: lexicographically by coefficient, highest degree
/// first). The choice is therefore a pure function of (q, L).
class FieldCtx {
 public:
  /// Builds GF(q^L). Throws NonPrimeCharacteristic, DegreeOutOfRange.
  static FieldCtx make(uint64_t q, uint32_t L) {
    if (!detail::is_prime_u64(q)) {
      throw NonPrimeCharacteristic("characteristic q = " + std::to_string(q) + " is not prime");
    }
    if (L < 1) throw DegreeOutOfRange("extension degree L must be >= 1");
    uint64_t order = 1;
    for (uint32_t i = 0; i < L; ++i) {
      if (order > UINT64_MAX / q) {
        throw DegreeOutOfRange("field order q^L = " + std::to_string(q) + "^" + std::to_string(L) +
                               " exceeds the exact 64-bit integer budget");
      }
      order *= q;
    }
    FieldCtx ctx;
    ctx.q_ = q;
    ctx.L_ = L;
    ctx.order_ = order;
    if (L >= 2) {
      // Non-leading parts in ascending packed order; the first irreducible
      // hit is the canonical reduction polynomial.
      detail::ZqPoly f;
      f.c.assign(L + 1, 0);
      f.c[L] = 1;
      bool found = false;
      for (uint64_t r = 0; r < order; ++r) {
        uint64_t rest = r;
        for (uint32_t i = 0; i < L; ++i) {
          f.c[i] = rest % q;
          rest /= q;
        }
        if (detail::zq_irreducible(f, q)) {
          found = true;
          break;
        }
      }
      if (!found) {
        // Unreachable: an irreducible of every degree exists over every Z_q.
        throw Error("no irreducible polynomial found for GF(" + std::to_string(q) + "^" +
                    std::to_string(L) + ")");
      }
      ctx.reduction_ = f.c;
    }
    return ctx;
  }

  uint64_t characteristic() const { return q_; }
  uint32_t ext_degree() const { return L_; }
  uint64_t order() const { return order_; }

  /// Monic reduction polynomial, ascending coefficients, length L+1.
  /// Empty for prime fields (L == 1), where no reduction is needed.
  const std::vector<uint64_t>& reduction() const { return reduction_; }

  bool operator==(const FieldCtx&) const = default;

  FieldElem zero() const { return FieldElem{0}; }
  FieldElem one() const { return FieldElem{1 % order_}; }

  /// Validates a packed value and wraps it. Out-of-range values indicate an
  /// element that belongs to a different context.
  FieldElem from_value(uint64_t v) const {
    check_range(FieldElem{v});
    return FieldElem{v};
  }

  /// Packs an ascending digit vector (length L, digits < q).
  FieldElem from_coeffs(std::span<const uint64_t> digits) const {
    if (digits.size() != L_) {
      throw MixedFieldContexts("coefficient vector length " + std::to_string(digits.size()) +
                               " does not match extension degree " + std::to_string(L_));
    }
    uint64_t v = 0;
    for (size_t i = digits.size(); i-- > 0;) {
      if (digits[i] >= q_) {
        throw MixedFieldContexts("coefficient " + std::to_string(digits[i]) +
                                 " is not a base-q digit for q = " + std::to_string(q_));
      }
      v = v * q_ + digits[i];
    }
    return FieldElem{v};
  }

  /// Unpacks the canonical digits, ascending, length L.
  std::vector<uint64_t> coeffs(FieldElem a) const {
    check_range(a);
    std::vector<uint64_t> digits(L_);
    uint64_t v = a.v;
    for (uint32_t i = 0; i < L_; ++i) {
      digits[i] = v % q_;
      v /= q_;
    }
    return digits;
  }

  FieldElem add(FieldElem a, FieldElem b) const {
    check_range(a);
    check_range(b);
    if (L_ == 1) {
      __uint128_t s = a.v;
      s += b.v;
      if (s >= q_) s -= q_;
      return FieldElem{static_cast<uint64_t>(s)};
    }
    uint64_t da[64], db[64];
    unpack(a.v, da);
    unpack(b.v, db);
    for (uint32_t i = 0; i < L_; ++i) {
      da[i] += db[i];
      if (da[i] >= q_) da[i] -= q_;
    }
    return FieldElem{pack(da)};
  }

  FieldElem neg(FieldElem a) const {
    check_range(a);
    if (L_ == 1) return FieldElem{a.v == 0 ? 0 : q_ - a.v};
    uint64_t da[64];
    unpack(a.v, da);
    for (uint32_t i = 0; i < L_; ++i) {
      if (da[i] != 0) da[i] = q_ - da[i];
    }
    return FieldElem{pack(da)};
  }

  FieldElem sub(FieldElem a, FieldElem b) const { return add(a, neg(b)); }

  FieldElem mul(FieldElem a, FieldElem b) const {
    check_range(a);
    check_range(b);
    if (L_ == 1) return FieldElem{detail::mulmod_u64(a.v, b.v, q_)};
    // For L >= 2, q <= 2^32, so digit products fit in uint64_t and sums of up
    // to L of them fit comfortably in __uint128_t.
    uint64_t da[64], db[64];
    unpack(a.v, da);
    unpack(b.v, db);
    __uint128_t conv[127] = {};
    for (uint32_t i = 0; i < L_; ++i) {
      if (da[i] == 0) continue;
      for (uint32_t j = 0; j < L_; ++j) {
        conv[i + j] += static_cast<__uint128_t>(da[i]) * db[j];
      }
    }
    uint64_t tmp[127];
    const uint32_t conv_len = 2 * L_ - 1;
    for (uint32_t i = 0; i < conv_len; ++i) tmp[i] = static_cast<uint64_t>(conv[i] % q_);
    // Reduce by the monic reduction polynomial: x^L = -(c_0 + ... + c_{L-1} x^{L-1}).
    for (uint32_t i = conv_len; i-- > L_;) {
      const uint64_t lead = tmp[i];
      if (lead == 0) continue;
      tmp[i] = 0;
      for (uint32_t j = 0; j < L_; ++j) {
        const uint64_t sub_term = detail::mulmod_u64(lead, reduction_[j], q_);
        uint64_t& slot = tmp[i - L_ + j];
        slot = (slot + q_ - sub_term) % q_;
      }
    }
    return FieldElem{pack(tmp)};
  }

  /// a^e for a 64-bit exponent, by square-and-multiply.
  FieldElem pow(FieldElem a, uint64_t e) const {
    check_range(a);
    FieldElem acc = one();
    FieldElem base = a;
    while (e != 0) {
      if (e & 1) acc = mul(acc, base);
      base = mul(base, base);
      e >>= 1;
    }
    return acc;
  }

  /// Multiplicative inverse via a^(q^L - 2). Throws ZeroInverse on 0.
  FieldElem inv(FieldElem a) const {
    check_range(a);
    if (a.v == 0) throw ZeroInverse("zero has no multiplicative inverse");
    return pow(a, order_ - 2);
  }

  FieldElem sample_uniform(Rng& rng) const { return FieldElem{uniform_below(rng, order_)}; }

  /// Samples k distinct elements outside `exclude`, by rejection. Draw order
  /// is part of the deterministic contract: elements appear in the order
  /// their first fresh draw occurred.
  std::vector<FieldElem> sample_distinct(Rng& rng, size_t k,
                                         std::span<const FieldElem> exclude = {}) const {
    std::unordered_set<uint64_t> taken;
    for (const FieldElem& e : exclude) {
      check_range(e);
      taken.insert(e.v);
    }
    if (k + taken.size() > order_) {
      throw FieldExhausted("cannot sample " + std::to_string(k) + " distinct elements with " +
                           std::to_string(taken.size()) + " excluded from a field of order " +
                           std::to_string(order_));
    }
    std::vector<FieldElem> out;
    out.reserve(k);
    while (out.size() < k) {
      const uint64_t v = uniform_below(rng, order_);
      if (taken.insert(v).second) out.push_back(FieldElem{v});
    }
    return out;
  }

 private:
  void check_range(FieldElem a) const {
    if (a.v >= order_) {
      throw MixedFieldContexts("element value " + std::to_string(a.v) +
                               " is outside GF(q^L) of order " + std::to_string(order_) +
                               " (element from a different field context?)");
    }
  }

  void unpack(uint64_t v, uint64_t* digits) const {
    for (uint32_t i = 0; i < L_; ++i) {
      digits[i] = v % q_;
      v /= q_;
    }
  }

  uint64_t pack(const uint64_t* digits) const {
    uint64_t v = 0;
    for (uint32_t i = L_; i-- > 0;) v = v * q_ + digits[i];
    return v;
  }

  uint64_t q_ = 0;
  uint32_t L_ = 0;
  uint64_t order_ = 0;
  std::vector<uint64_t> reduction_;
};

}  // namespace pa
