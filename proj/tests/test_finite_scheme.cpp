#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "pa/finite_scheme.hpp"

using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("keygen draws a valid configuration over GF(101)") {
  const auto ctx = pa::FieldCtx::make(101, 1);
  pa::Rng rng(7);
  const auto ca = pa::ca_keygen(ctx, 5, rng);
  REQUIRE(ca.K == 5);
  REQUIRE(ca.keys.size() == 5);
  CHECK(ca.a0.v < 101);
  std::set<uint64_t> xs;
  for (const auto& kp : ca.keys) {
    CHECK(kp.x.v != 0);
    CHECK(kp.x.v < 101);
    CHECK(kp.y.v < 101);
    CHECK(xs.insert(kp.x.v).second);
  }

  pa::Rng a(123), b(123);
  const auto ca1 = pa::ca_keygen(ctx, 5, a);
  const auto ca2 = pa::ca_keygen(ctx, 5, b);
  CHECK(ca1.a0 == ca2.a0);
  CHECK(ca1.keys == ca2.keys);
}

TEST_CASE("keygen refuses fields below the 2K+2 threshold") {
  const auto small = pa::FieldCtx::make(5, 1);
  pa::Rng rng(1);
  CHECK_THROWS_MATCHES(pa::ca_keygen(small, 2, rng), pa::FieldTooSmall,
                       Catch::Matchers::MessageMatches(ContainsSubstring("2K+2")));
  CHECK_NOTHROW(pa::ca_keygen(pa::FieldCtx::make(7, 1), 2, rng));
  CHECK_THROWS_AS(pa::ca_keygen(small, 0, rng), pa::InvalidParams);
}

TEST_CASE("honest sessions accept for every user") {
  const auto ctx = pa::FieldCtx::make(101, 1);
  pa::Rng rng(20240101);
  const auto ca = pa::ca_keygen(ctx, 5, rng);
  const pa::FiniteVerifier verifier(ca);

  const auto ch = verifier.challenge(rng);
  REQUIRE(ch.points.size() == 5);
  std::set<uint64_t> key_xs;
  for (const auto& kp : ca.keys) key_xs.insert(kp.x.v);
  std::set<uint64_t> ch_xs;
  for (const auto& pt : ch.points) {
    CHECK(pt.x.v != 0);
    CHECK_FALSE(key_xs.contains(pt.x.v));
    CHECK(ch_xs.insert(pt.x.v).second);
  }

  for (uint32_t k = 1; k <= 5; ++k) {
    const auto key = pa::user_key(ca, k);
    const auto resp = pa::prover_respond(key, ch);
    CHECK(resp.session_id == ch.session_id);
    CHECK(resp.s_hat == ca.a0);
    CHECK(verifier.verify(resp));

    // Cross-check the direct f(0) route against interpolate-then-evaluate.
    std::vector<pa::EvalPoint> pts = ch.points;
    pts.push_back({key.key.x, key.key.y});
    const auto f = pa::poly_interpolate(ctx, pts);
    CHECK(pa::poly_eval(ctx, f, ctx.zero()) == resp.s_hat);
  }
}

TEST_CASE("challenge reuse and derivation are deterministic") {
  const auto ctx = pa::FieldCtx::make(101, 1);
  pa::Rng rng(5150);
  const auto ca = pa::ca_keygen(ctx, 3, rng);

  const pa::FiniteVerifier v1(ca);
  const pa::FiniteVerifier v2(ca);
  const auto c1 = v1.challenge(rng);
  const auto c2 = v1.challenge(rng);
  const auto c3 = v2.challenge(rng);
  CHECK(c1.points == c2.points);  // cached across sessions
  CHECK(c1.points == c3.points);  // re-derived from V alone
  CHECK(c1.session_id != c2.session_id);

  const pa::FiniteVerifier fresh(ca, /*unsafe_fresh_challenges=*/true);
  const auto f1 = fresh.challenge(rng);
  const auto f2 = fresh.challenge(rng);
  CHECK_FALSE(f1.points == f2.points);  // fresh abscissas w.h.p.
  // Honest provers still succeed against fresh challenges.
  const auto resp = pa::prover_respond(pa::user_key(ca, 2), f2);
  CHECK(fresh.verify(resp));
}

TEST_CASE("exhaustive fabricated-key oracle over GF(7), K=1") {
  // For every verifier state, exactly one fabricated ordinate per usable
  // abscissa lies on f, so a uniform forger wins with probability exactly 1/7.
  const auto ctx = pa::FieldCtx::make(7, 1);
  pa::Rng rng(9);
  for (uint64_t x1 = 1; x1 < 7; ++x1) {
    for (uint64_t y1 = 0; y1 < 7; ++y1) {
      for (uint64_t a0 = 0; a0 < 7; ++a0) {
        pa::CaOutput ca{ctx, 1, pa::FieldElem{a0}, {{pa::FieldElem{x1}, pa::FieldElem{y1}}}};
        const pa::FiniteVerifier verifier(ca);
        const auto ch = verifier.challenge(rng);
        REQUIRE(ch.points.size() == 1);
        for (uint64_t fx = 1; fx < 7; ++fx) {
          if (fx == ch.points[0].x.v) continue;  // abscissa collision is a separate case
          int accepted = 0;
          for (uint64_t fy = 0; fy < 7; ++fy) {
            const pa::UserKey fake{ctx, 1, 1, {pa::FieldElem{fx}, pa::FieldElem{fy}}};
            if (verifier.verify(pa::prover_respond(fake, ch))) ++accepted;
          }
          CHECK(accepted == 1);
        }
      }
    }
  }
}

TEST_CASE("prover input validation") {
  const auto ctx = pa::FieldCtx::make(101, 1);
  pa::Rng rng(77);
  const auto ca = pa::ca_keygen(ctx, 3, rng);
  const pa::FiniteVerifier verifier(ca);
  const auto ch = verifier.challenge(rng);

  pa::Challenge empty{ch.session_id, {}};
  CHECK_THROWS_AS(pa::prover_respond(pa::user_key(ca, 1), empty), pa::InvalidParams);

  // A challenge that repeats the prover's own abscissa cannot be interpolated.
  pa::Challenge clash = ch;
  clash.points[0].x = ca.keys[0].x;
  CHECK_THROWS_AS(pa::prover_respond(pa::user_key(ca, 1), clash), pa::DuplicateAbscissa);
}

TEST_CASE("malformed verifier states are rejected") {
  const auto ctx = pa::FieldCtx::make(101, 1);
  pa::Rng rng(3);
  auto ca = pa::ca_keygen(ctx, 3, rng);

  auto dup = ca;
  dup.keys[1].x = dup.keys[0].x;
  CHECK_THROWS_AS(pa::FiniteVerifier{dup}, pa::MalformedV);

  auto zero_x = ca;
  zero_x.keys[2].x = ctx.zero();
  CHECK_THROWS_AS(pa::FiniteVerifier{zero_x}, pa::MalformedV);

  auto out_of_range = ca;
  out_of_range.a0 = pa::FieldElem{400};
  CHECK_THROWS_AS(pa::FiniteVerifier{out_of_range}, pa::MalformedV);

  auto wrong_count = ca;
  wrong_count.keys.pop_back();
  CHECK_THROWS_AS(pa::FiniteVerifier{wrong_count}, pa::MalformedV);

  auto tiny = ca;
  tiny.ctx = pa::FieldCtx::make(5, 1);
  tiny.a0 = pa::FieldElem{1};
  tiny.keys = {{pa::FieldElem{1}, pa::FieldElem{2}},
               {pa::FieldElem{2}, pa::FieldElem{3}},
               {pa::FieldElem{3}, pa::FieldElem{4}}};
  tiny.K = 3;
  CHECK_THROWS_AS(pa::FiniteVerifier{tiny}, pa::FieldTooSmall);
}

TEST_CASE("finite key rate matches hand-evaluated formula values") {
  // GF(2^3), K = 2: rate = 1 + log2(C(8,2)) / 6 = 1 + log2(28)/6.
  const auto r = pa::finite_key_rate(2, 3, 2);
  CHECK(r.rate == Approx(1.0 + std::log2(28.0) / 6.0).epsilon(1e-12));
  CHECK(r.upper_bound == 2.0);
  CHECK(r.gap == Approx(2.0 - r.rate).margin(1e-15));

  // GF(101), K = 5: C(101,5) = 79208745.
  const auto r101 = pa::finite_key_rate(101, 1, 5);
  CHECK(r101.rate ==
        Approx(2.5 + std::log2(79208745.0) / std::log2(101.0) / 2.0).epsilon(1e-12));

  // GF(2^8), K = 3: C(256,3) = 2763520.
  const auto r256 = pa::finite_key_rate(2, 8, 3);
  CHECK(r256.rate == Approx(1.5 + std::log2(2763520.0) / 16.0).epsilon(1e-12));
}

TEST_CASE("finite key rate approaches the upper bound as L grows") {
  double prev = 0;
  for (uint32_t L : {8u, 16u, 32u, 64u}) {
    const auto r = pa::finite_key_rate(2, L, 3);
    CHECK(r.rate > prev);
    CHECK(r.rate < 3.0);
    prev = r.rate;
  }
  // q^L = 2^64 overflows element arithmetic but the rate stays computable.
  CHECK_THROWS_AS(pa::FieldCtx::make(2, 64), pa::DegreeOutOfRange);
  const auto r64 = pa::finite_key_rate(2, 64, 3);
  CHECK(r64.gap < 0.05);
  CHECK(r64.gap > 0.0);
}

TEST_CASE("finite key rate validates parameters") {
  CHECK_THROWS_AS(pa::finite_key_rate(6, 1, 2), pa::NonPrimeCharacteristic);
  CHECK_THROWS_AS(pa::finite_key_rate(2, 0, 2), pa::DegreeOutOfRange);
  CHECK_THROWS_AS(pa::finite_key_rate(2, 1, 0), pa::InvalidParams);
  CHECK_THROWS_AS(pa::finite_key_rate(2, 1, 3), pa::InvalidParams);  // C(2,3)
}

TEST_CASE("exact audit over GF(5), K=2: zero leakage, uniform attacks") {
  // Runs below the keygen threshold (5 < 2K+2 = 6) by design: the audit
  // enumerates its own configurations.
  pa::Rng rng(1);
  CHECK_THROWS_AS(pa::ca_keygen(pa::FieldCtx::make(5, 1), 2, rng), pa::FieldTooSmall);

  const auto report = pa::exact_leakage_audit(5, 1, 2);
  CHECK(report.total_configs == 3000);  // P(4,2) * 5^2 * 5 * P(2,2)

  CHECK(report.i_s_m.proven_exact);
  CHECK(report.i_s_m.value == pa::AuditRational{0, 1});
  CHECK(report.i_s_m.bits == 0.0);

  CHECK(report.uniform_attack_success);
  CHECK(report.best_attack_success == pa::AuditRational{1, 5});
  CHECK(report.worst_attack_success == pa::AuditRational{1, 5});

  // With only one fresh abscissa pair left, M and c_1 pin c_2 exactly.
  CHECK(report.h_ci_given_m_ck.proven_exact);
  CHECK(report.h_ci_given_m_ck.bits == 0.0);
  CHECK(report.h_ci_given_ck.bits == Approx(std::log2(15.0)).epsilon(1e-9));
  CHECK(report.lemma1_bound == Approx(1.0 / std::log2(5.0)).epsilon(1e-12));
}

TEST_CASE("exact audit over GF(7), K=2: challenges leak about other keys") {
  const auto report = pa::exact_leakage_audit(7, 1, 2);
  CHECK(report.total_configs == 123480);  // P(6,2) * 7^2 * 7 * P(4,2)

  CHECK(report.i_s_m.proven_exact);
  CHECK(report.i_s_m.bits == 0.0);
  CHECK(report.uniform_attack_success);
  CHECK(report.best_attack_success == pa::AuditRational{1, 7});
  CHECK(report.worst_attack_success == pa::AuditRational{1, 7});

  // Three candidate abscissas remain for c_2 once M and c_1 are known (the
  // ordinate is then pinned by f), against log2(5*7) bits unconditionally.
  CHECK_FALSE(report.h_ci_given_m_ck.proven_exact);
  CHECK(report.h_ci_given_m_ck.bits == Approx(std::log2(3.0)).epsilon(1e-9));
  CHECK(report.h_ci_given_ck.bits == Approx(std::log2(35.0)).epsilon(1e-9));
  CHECK(report.h_ci_given_m_ck.bits < report.h_ci_given_ck.bits);

  // Dyadic rendering round-trips to the float value.
  const auto& q = report.h_ci_given_ck;
  CHECK(static_cast<double>(q.value.num) / static_cast<double>(q.value.den) ==
        Approx(q.bits).epsilon(1e-12));
}

TEST_CASE("exact audit with a single user conditions on M alone") {
  const auto report = pa::exact_leakage_audit(5, 1, 1);
  CHECK(report.total_configs == 300);  // P(4,1) * 5 * 5 * P(3,1)
  CHECK(report.i_s_m.proven_exact);
  CHECK(report.uniform_attack_success);
  // Given M, the pair (a0, x1) stays free and determines y1: 15 outcomes.
  CHECK(report.h_ci_given_m_ck.bits == Approx(std::log2(15.0)).epsilon(1e-9));
  CHECK(report.h_ci_given_ck.bits == Approx(std::log2(20.0)).epsilon(1e-9));
}

TEST_CASE("audit preconditions and budget guard") {
  CHECK_THROWS_AS(pa::exact_leakage_audit(3, 1, 2), pa::FieldTooSmall);
  CHECK_THROWS_AS(pa::exact_leakage_audit(7, 1, 2, 100000), pa::EnumerationBudgetExceeded);
  CHECK_THROWS_AS(pa::exact_leakage_audit(101, 1, 2), pa::EnumerationBudgetExceeded);
  CHECK_THROWS_AS(pa::exact_leakage_audit(5, 1, 0), pa::InvalidParams);
}
