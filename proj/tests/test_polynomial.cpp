#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "pa/polynomial.hpp"
#include "pa/serialization.hpp"

namespace {

pa::Poly random_poly(const pa::FieldCtx& ctx, int max_degree, pa::Rng& rng) {
  std::vector<pa::FieldElem> coeffs(max_degree + 1);
  for (auto& c : coeffs) c = ctx.sample_uniform(rng);
  return pa::Poly(std::move(coeffs));
}

}  // namespace

TEST_CASE("interpolating (1,2),(2,4) over GF(7) yields 2x") {
  const auto ctx = pa::FieldCtx::make(7, 1);
  const std::vector<pa::EvalPoint> pts{{{1}, {2}}, {{2}, {4}}};
  const auto f = pa::poly_interpolate(ctx, pts);
  CHECK(f.degree() == 1);
  CHECK(f.coefficients() == std::vector<pa::FieldElem>{{0}, {2}});
  CHECK(pa::poly_eval(ctx, f, {0}).v == 0);
  CHECK(pa::eval_at_zero_direct(ctx, pts).v == 0);
}

TEST_CASE("interpolation recovers a known quadratic") {
  const auto ctx = pa::FieldCtx::make(101, 1);
  const pa::Poly f(std::vector<pa::FieldElem>{{3}, {5}, {7}});
  std::vector<pa::EvalPoint> pts;
  for (uint64_t x : {2ull, 10ull, 30ull, 77ull}) {
    pts.push_back({{x}, pa::poly_eval(ctx, f, {x})});
  }
  CHECK(pa::poly_interpolate(ctx, pts) == f);
  CHECK(pa::eval_at_zero_direct(ctx, pts).v == 3);
}

TEST_CASE("interpolation round-trips random polynomials over GF(101)") {
  const auto ctx = pa::FieldCtx::make(101, 1);
  pa::Rng rng(31337);
  for (int iter = 0; iter < 500; ++iter) {
    const int max_degree = static_cast<int>(pa::uniform_below(rng, 7));
    const auto f = random_poly(ctx, max_degree, rng);
    const auto xs = ctx.sample_distinct(rng, static_cast<size_t>(max_degree) + 1);
    std::vector<pa::EvalPoint> pts;
    for (const auto& x : xs) pts.push_back({x, pa::poly_eval(ctx, f, x)});
    const auto back = pa::poly_interpolate(ctx, pts);
    REQUIRE(back == f);

    // Dual-route cross-check where the direct f(0) formula applies.
    bool has_zero_abscissa = false;
    for (const auto& pt : pts) has_zero_abscissa |= (pt.x.v == 0);
    if (!has_zero_abscissa) {
      CHECK(pa::eval_at_zero_direct(ctx, pts) == pa::poly_eval(ctx, back, {0}));
    }
  }
}

TEST_CASE("interpolation round-trips random polynomials over GF(2^3)") {
  const auto ctx = pa::FieldCtx::make(2, 3);
  pa::Rng rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    const int max_degree = static_cast<int>(pa::uniform_below(rng, 4));
    const auto f = random_poly(ctx, max_degree, rng);
    const auto xs = ctx.sample_distinct(rng, static_cast<size_t>(max_degree) + 1);
    std::vector<pa::EvalPoint> pts;
    for (const auto& x : xs) pts.push_back({x, pa::poly_eval(ctx, f, x)});
    REQUIRE(pa::poly_interpolate(ctx, pts) == f);
  }
}

TEST_CASE("a single point interpolates to a constant") {
  const auto ctx = pa::FieldCtx::make(7, 1);
  const std::vector<pa::EvalPoint> pts{{{5}, {3}}};
  const auto f = pa::poly_interpolate(ctx, pts);
  CHECK(f.degree() == 0);
  CHECK(pa::eval_at_zero_direct(ctx, pts).v == 3);
}

TEST_CASE("zero polynomial evaluates to zero") {
  const auto ctx = pa::FieldCtx::make(7, 1);
  const pa::Poly zero;
  CHECK(zero.degree() == -1);
  CHECK(pa::poly_eval(ctx, zero, {4}).v == 0);
}

TEST_CASE("polynomial preconditions are enforced") {
  const auto ctx = pa::FieldCtx::make(7, 1);
  const std::vector<pa::EvalPoint> dup{{{1}, {2}}, {{1}, {3}}};
  CHECK_THROWS_AS(pa::poly_interpolate(ctx, dup), pa::DuplicateAbscissa);
  CHECK_THROWS_AS(pa::eval_at_zero_direct(ctx, dup), pa::DuplicateAbscissa);

  const std::vector<pa::EvalPoint> with_zero{{{0}, {2}}, {{1}, {3}}};
  CHECK_THROWS_AS(pa::eval_at_zero_direct(ctx, with_zero), pa::ZeroAbscissa);
  CHECK_NOTHROW(pa::poly_interpolate(ctx, with_zero));

  const std::vector<pa::EvalPoint> empty;
  CHECK_THROWS_AS(pa::poly_interpolate(ctx, empty), pa::InvalidParams);
  CHECK_THROWS_AS(pa::eval_at_zero_direct(ctx, empty), pa::InvalidParams);
}

TEST_CASE("polynomials serialize as ascending coefficient lists") {
  const auto ctx = pa::FieldCtx::make(2, 3);
  pa::Rng rng(2024);
  const pa::Poly p = random_poly(ctx, 4, rng);

  const auto j = pa::poly_to_json(ctx, p);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == p.coefficients().size());
  // Each entry is the coefficient list (length L) of one field element,
  // lowest degree first.
  for (size_t d = 0; d < j.size(); ++d) {
    CHECK(j[d].get<std::vector<uint64_t>>() == ctx.coeffs(p.coefficients()[d]));
  }
  CHECK(pa::poly_from_json(ctx, j) == p);

  // Trailing zero coefficients trim away on the way back in.
  auto padded = j;
  padded.push_back(pa::ordered_json(std::vector<uint64_t>(3, 0)));
  CHECK(pa::poly_from_json(ctx, padded) == p);

  CHECK(pa::poly_to_json(ctx, pa::Poly{}).empty());
  CHECK_THROWS_AS(pa::poly_from_json(ctx, pa::ordered_json::parse("[1]")), pa::ConfigInvalid);
}
