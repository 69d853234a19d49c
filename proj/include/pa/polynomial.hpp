#pragma once

#include <span>
#include <vector>

#include "pa/field.hpp"

namespace pa {

/// One (abscissa, ordinate) pair over a field context.
struct EvalPoint {
  FieldElem x;
  FieldElem y;
  friend constexpr auto operator<=>(const EvalPoint&, const EvalPoint&) = default;
};

/// Polynomial over a field context, ascending coefficients. Invariant: the
/// vector is trimmed (no zero leading coefficient); the zero polynomial is
/// the empty vector and has degree -1.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<FieldElem> coeffs) : c_(std::move(coeffs)) { trim(); }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<FieldElem>& coefficients() const { return c_; }

  friend bool operator==(const Poly&, const Poly&) = default;

 private:
  void trim() {
    while (!c_.empty() && c_.back().v == 0) c_.pop_back();
  }
  std::vector<FieldElem> c_;
};

namespace detail {

inline void require_distinct_abscissas(std::span<const EvalPoint> points) {
  for (size_t i = 0; i < points.size(); ++i) {
    for (size_t j = i + 1; j < points.size(); ++j) {
      if (points[i].x == points[j].x) {
        throw DuplicateAbscissa("duplicate abscissa value " + std::to_string(points[i].x.v));
      }
    }
  }
}

}  // namespace detail

/// Horner evaluation.
inline FieldElem poly_eval(const FieldCtx& ctx, const Poly& p, FieldElem x) {
  FieldElem acc = ctx.zero();
  const auto& c = p.coefficients();
  for (size_t i = c.size(); i-- > 0;) acc = ctx.add(ctx.mul(acc, x), c[i]);
  return acc;
}

/// Lagrange interpolation through n points with distinct abscissas; returns
/// the unique polynomial of degree <= n-1. O(n^2) via the master product
/// P(x) = prod (x - x_i) and synthetic division by each root.
inline Poly poly_interpolate(const FieldCtx& ctx, std::span<const EvalPoint> points) {
  if (points.empty()) throw InvalidParams("interpolation needs at least one point");
  detail::require_distinct_abscissas(points);
  const size_t n = points.size();

  // P = prod_i (x - x_i), ascending, degree n. Built one linear factor at a
  // time: new[j] = old[j-1] - x_i * old[j], walking top-down so each slot
  // still holds its old value when read.
  std::vector<FieldElem> master(n + 1, ctx.zero());
  master[0] = ctx.one();
  size_t deg = 0;
  for (const EvalPoint& pt : points) {
    const FieldElem neg_x = ctx.neg(pt.x);
    for (size_t j = deg + 2; j-- > 0;) {
      const FieldElem lower = (j == 0) ? ctx.zero() : master[j - 1];
      master[j] = ctx.add(ctx.mul(master[j], neg_x), lower);
    }
    ++deg;
  }

  std::vector<FieldElem> acc(n, ctx.zero());
  std::vector<FieldElem> quotient(n, ctx.zero());
  for (const EvalPoint& pt : points) {
    // quotient = master / (x - x_i) by synthetic division (exact: x_i is a root).
    FieldElem carry = master[n];
    for (size_t j = n; j-- > 0;) {
      quotient[j] = carry;
      carry = ctx.add(master[j], ctx.mul(carry, pt.x));
    }
    // denom = quotient(x_i) = prod_{j != i} (x_i - x_j)
    FieldElem denom = ctx.zero();
    for (size_t j = n; j-- > 0;) denom = ctx.add(ctx.mul(denom, pt.x), quotient[j]);
    const FieldElem scale = ctx.mul(pt.y, ctx.inv(denom));
    for (size_t j = 0; j < n; ++j) acc[j] = ctx.add(acc[j], ctx.mul(scale, quotient[j]));
  }
  return Poly(std::move(acc));
}

/// Evaluates the interpolating polynomial at x = 0 directly, without
/// materializing coefficients:
///   f(0) = sum_i y_i * prod_{j != i} x_j / (x_j - x_i).
/// Requires nonzero, distinct abscissas. This is an independent computation
/// route from poly_interpolate + poly_eval and is kept separate on purpose;
/// tests cross-check the two.
inline FieldElem eval_at_zero_direct(const FieldCtx& ctx, std::span<const EvalPoint> points) {
  if (points.empty()) throw InvalidParams("evaluation needs at least one point");
  detail::require_distinct_abscissas(points);
  for (const EvalPoint& pt : points) {
    if (pt.x.v == 0) throw ZeroAbscissa("direct f(0) evaluation requires nonzero abscissas");
  }
  FieldElem acc = ctx.zero();
  for (size_t i = 0; i < points.size(); ++i) {
    FieldElem num = ctx.one();
    FieldElem den = ctx.one();
    for (size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      num = ctx.mul(num, points[j].x);
      den = ctx.mul(den, ctx.sub(points[j].x, points[i].x));
    }
    acc = ctx.add(acc, ctx.mul(points[i].y, ctx.mul(num, ctx.inv(den))));
  }
  return acc;
}

}  // namespace pa
