#include <doctest.h>

#include <algorithm>

#include "laps/errors.hpp"
#include "laps/evaluation.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace laps;

namespace {

Primitive prim(std::uint32_t a, std::uint32_t b, bool truncated = false, double fps = 30.0) {
  Primitive p;
  p.start_frame = a;
  p.end_frame = b;
  p.start_s = frame_to_seconds(a, fps);
  p.end_s = frame_to_seconds(b, fps);
  p.truncated = truncated;
  return p;
}

std::vector<double> sorted_times(Rng& rng, std::size_t n, double span) {
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform(0.0, span));
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_SUITE("extract boundaries") {
  TEST_CASE("one primitive [1 s, 2 s)") {
    const std::vector<Primitive> p{prim(30, 60)};
    CHECK(extract_boundaries(p) == std::vector<double>{1.0, 2.0});
  }

  TEST_CASE("shared boundary appears once") {
    const std::vector<Primitive> p{prim(30, 60), prim(60, 90)};
    CHECK(extract_boundaries(p) == std::vector<double>{1.0, 2.0, 3.0});
  }

  TEST_CASE("empty") { CHECK(extract_boundaries(std::vector<Primitive>{}).empty()); }

  TEST_CASE("stream start and truncated end are dropped unless asked for") {
    const std::vector<Primitive> p{prim(0, 30), prim(60, 90, true)};
    CHECK(extract_boundaries(p) == std::vector<double>{1.0, 2.0});
    CHECK(extract_boundaries(p, {.include_endpoints = true}) == std::vector<double>{0.0, 1.0, 2.0, 3.0});
  }
}

TEST_SUITE("boundary f1") {
  TEST_CASE("gt [10, 20] vs pred [10.5, 25] at tol 2") {
    const auto r = boundary_f1(std::vector<double>{10.5, 25}, std::vector<double>{10, 20}, 2.0);
    CHECK(r.tp == 1);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
    CHECK(r.f1 == doctest::Approx(0.5));
    CHECK(r.tolerance_s == 2.0);
  }

  TEST_CASE("identity is perfect at any tolerance") {
    const std::vector<double> g{0.5, 3.0, 7.25, 11.0};
    for (double tol : {1e-9, 0.1, 2.0, 100.0}) CHECK(boundary_f1(g, g, tol).f1 == 1.0);
  }

  TEST_CASE("empty prediction scores 0") {
    const auto r = boundary_f1(std::vector<double>{}, std::vector<double>{1.0, 2.0}, 2.0);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
    CHECK(r.fn == 2);
  }

  TEST_CASE("each prediction matches at most once") {
    const auto r = boundary_f1(std::vector<double>{5.0}, std::vector<double>{4.0, 6.0}, 2.0);
    CHECK(r.tp == 1);
    CHECK(r.fn == 1);
  }

  TEST_CASE("errors: unsorted input, non-positive tolerance") {
    CHECK_THROWS_AS(boundary_f1(std::vector<double>{2, 1}, std::vector<double>{1}, 1.0), DataError);
    CHECK_THROWS_AS(boundary_f1(std::vector<double>{1}, std::vector<double>{3, 2}, 1.0), DataError);
    CHECK_THROWS_AS(boundary_f1(std::vector<double>{1}, std::vector<double>{1}, 0.0), DataError);
  }

  TEST_CASE("greedy equals exhaustive maximum matching on small instances") {
    Rng rng(31);
    for (int trial = 0; trial < 2000; ++trial) {
      const auto pred = sorted_times(rng, rng.below(9), 20.0);
      const auto gt = sorted_times(rng, rng.below(9), 20.0);
      const double tol = rng.uniform(0.1, 4.0);
      const auto r = boundary_f1(pred, gt, tol);
      CHECK(r.tp == oracle::max_boundary_matches(pred, gt, tol));
    }
  }

  TEST_CASE("count identities, f1 formula and tolerance monotonicity") {
    Rng rng(32);
    for (int trial = 0; trial < 500; ++trial) {
      const auto pred = sorted_times(rng, rng.below(30), 100.0);
      const auto gt = sorted_times(rng, rng.below(30), 100.0);
      const auto a = boundary_f1(pred, gt, 2.0);
      const auto b = boundary_f1(pred, gt, 5.0);
      CHECK(a.tp + a.fp == pred.size());
      CHECK(a.tp + a.fn == gt.size());
      CHECK(a.tp <= std::min(pred.size(), gt.size()));
      const double expect = a.precision + a.recall > 0 ? 2 * a.precision * a.recall / (a.precision + a.recall) : 0.0;
      CHECK(a.f1 == doctest::Approx(expect).epsilon(1e-12));
      CHECK(b.tp >= a.tp);
      CHECK(b.f1 >= a.f1);
    }
  }
}
