#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "tailmean/errors.hpp"
#include "tailmean/gpd.hpp"

using namespace tailmean;
using doctest::Approx;

namespace {

// Composite Simpson rule; n must be even.
template <class F>
double simpson(F f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("params reject values outside the heavy-tail domain") {
  CHECK_THROWS_AS(GpdParams(0.0, 1.0), Error);
  CHECK_THROWS_AS(GpdParams(1.0, 1.0), Error);
  CHECK_THROWS_AS(GpdParams(-0.2, 1.0), Error);
  CHECK_THROWS_AS(GpdParams(0.5, 0.0), Error);
  CHECK_THROWS_AS(GpdParams(0.5, -1.0), Error);
  CHECK_THROWS_AS(GpdParams(std::nan(""), 1.0), Error);
  CHECK_THROWS_AS(Exceedance{-1e-9}, Error);
  CHECK_THROWS_AS(Exceedance{INFINITY}, Error);
  try {
    GpdParams(2.0, 1.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

TEST_CASE("log density at known points") {
  CHECK(gpd_log_pdf({0.5, 10.0}, Exceedance(0.0)) == Approx(std::log(0.1)).epsilon(1e-15));
  // log(0.1) - 3 log(1.5)
  CHECK(gpd_log_pdf({0.5, 10.0}, Exceedance(10.0)) == Approx(-3.5189804173185393).epsilon(1e-14));
  CHECK(gpd_log_pdf({0.2, 1.0}, Exceedance(0.0)) == 0.0);
}

TEST_CASE("log density keeps precision for tiny xi v / sigma") {
  // Second-order expansion of -(1/xi + 1) log1p(t), t = 1e-12.
  const GpdParams p(1e-6, 1.0);
  const double v = 1e-6;
  const double t = p.xi() * v;
  const double expected = -(1.0 / p.xi() + 1.0) * (t - t * t / 2.0);
  CHECK(gpd_log_pdf(p, Exceedance(v)) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("cdf at known points") {
  CHECK(gpd_cdf({0.5, 10.0}, Exceedance(0.0)) == 0.0);
  CHECK(gpd_cdf({0.5, 10.0}, Exceedance(10.0)) == Approx(5.0 / 9.0).epsilon(1e-15));
  CHECK(gpd_cdf({0.5, 1.0}, Exceedance(2.0)) == Approx(0.75).epsilon(1e-15));
  CHECK(gpd_cdf({0.5, 1.0}, Exceedance(1e300)) == Approx(1.0));
}

TEST_CASE("quantile at known points") {
  CHECK(gpd_quantile({0.5, 10.0}, 0.0) == 0.0);
  CHECK(gpd_quantile({0.5, 1.0}, 0.75) == Approx(2.0).epsilon(1e-14));
  CHECK(gpd_quantile({0.5, 10.0}, 5.0 / 9.0) == Approx(10.0).epsilon(1e-14));
  CHECK_THROWS_AS(gpd_quantile({0.5, 1.0}, 1.0), Error);
  CHECK_THROWS_AS(gpd_quantile({0.5, 1.0}, -0.1), Error);
}

TEST_CASE("mean exceedance") {
  CHECK(gpd_mean({0.5, 10.0}) == Approx(20.0));
  CHECK(gpd_mean({0.8, 10.0}) == Approx(50.0));
  CHECK(gpd_mean({0.2, 1.0}) == Approx(1.25));
}

TEST_CASE("cdf inverts quantile across parameters and probabilities") {
  for (double xi : {1e-4, 0.05, 0.2, 0.5, 0.8, 0.99}) {
    for (double sigma : {1e-3, 1.0, 10.0, 1e4}) {
      const GpdParams p(xi, sigma);
      for (int k = 1; k <= 999; ++k) {
        const double prob = k / 1000.0;
        CHECK(std::abs(gpd_cdf(p, Exceedance(gpd_quantile(p, prob))) - prob) < 1e-10);
      }
    }
  }
}

TEST_CASE("density integrates to one") {
  for (double xi : {0.1, 0.5, 0.8}) {
    const GpdParams p(xi, 3.0);
    // Substitute v = exp(s) - 1 to resolve the peak at zero and the long tail.
    const double hi = std::log1p(gpd_quantile(p, 0.9999));
    const double body = simpson(
        [&](double s) {
          const double v = std::expm1(s);
          return std::exp(gpd_log_pdf(p, Exceedance(v)) + s);
        },
        0.0, hi, 200000);
    CHECK(body + 1e-4 == Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("quantile is nondecreasing in xi") {
  for (double sigma : {0.5, 10.0}) {
    for (int k = 1; k < 1000; k += 7) {
      const double prob = k / 1000.0;
      double prev = 0.0;
      for (double xi = 0.01; xi < 1.0; xi += 0.01) {
        const double q = gpd_quantile({xi, sigma}, prob);
        CHECK(q >= prev);
        prev = q;
      }
    }
  }
}

TEST_CASE("sampling") {
  Rng rng(1);
  CHECK(gpd_sample({0.5, 10.0}, 0, rng).empty());

  Rng a(42), b(42);
  CHECK(gpd_sample({0.3, 2.0}, 1000, a) == gpd_sample({0.3, 2.0}, 1000, b));

  for (double xi : {0.1, 0.3, 0.45}) {
    Rng r(derive_seed(9, static_cast<std::uint64_t>(xi * 100)));
    const GpdParams p(xi, 10.0);
    const auto x = gpd_sample(p, 1000000, r);
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    CHECK(std::abs(mean - gpd_mean(p)) < 4.0 * sd / std::sqrt(n));
  }
}

TEST_CASE("sample mean for xi = 0.5 within three standard errors") {
  // Infinite variance: compare against the spread of independent batch means.
  Rng rng(2024);
  const GpdParams p(0.5, 10.0);
  const auto x = gpd_sample(p, 1000000, rng);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 1e6;
  std::vector<double> batch(100, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) batch[i / 10000] += x[i] / 10000.0;
  double ss = 0.0;
  for (double m : batch) ss += (m - mean) * (m - mean);
  const double se = std::sqrt(ss / 99.0) / 10.0;
  CHECK(std::abs(mean - 20.0) < 3.0 * se);
}
