#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "tailmean/gpd.hpp"
#include "tailmean/study.hpp"
#include "tailmean/threshold.hpp"

using namespace tailmean;
using doctest::Approx;
using support::kind_of;

namespace {

ThresholdDiagnostic diag(double u, double ratio) {
  ThresholdDiagnostic d;
  d.u = u;
  d.n = 100;
  d.fit = TailFitSummary{0.5, ratio * 0.5 * u, ratio, false};
  return d;
}

// Uniform(0, u*) bulk on a third of the points, u* + GPD(xi, xi u*) on the rest.
std::vector<double> gpd_above(double xi, double u_star, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const GpdParams p(xi, xi * u_star);
  std::vector<double> out(n);
  for (auto& z : out) z = rng.uniform() < 1.0 / 3.0 ? u_star * rng.uniform() : u_star + gpd_quantile(p, rng.uniform());
  return out;
}

}  // namespace

TEST_CASE("selection rule") {
  const std::vector<double> ratios{0.5, 0.8, 0.95, 1.05, 1.4};
  std::vector<ThresholdDiagnostic> d;
  for (std::size_t i = 0; i < ratios.size(); ++i) d.push_back(diag(10.0 * (i + 1), ratios[i]));
  const ThresholdChoice c = select_threshold(d);
  CHECK(c.u == 30.0);
  CHECK(c.index == 2);
  CHECK_FALSE(c.low_confidence);

  // The tolerance decides whether 0.9 counts as near one.
  std::vector<ThresholdDiagnostic> e{diag(1.0, 0.5), diag(2.0, 0.9), diag(3.0, 1.03), diag(4.0, 1.4)};
  CHECK(select_threshold(e).u == 2.0);
  const ThresholdChoice tight = select_threshold(e, SelectionRule{0.05});
  CHECK(tight.u == 3.0);
  CHECK_FALSE(tight.low_confidence);

  // Invalid entries are skipped when looking for the next ratio.
  std::vector<ThresholdDiagnostic> gaps{diag(1.0, 0.5), diag(2.0, 1.02), ThresholdDiagnostic{3.0, 2, {}, {}},
                                        diag(4.0, 1.1)};
  CHECK(select_threshold(gaps).u == 2.0);
}

TEST_CASE("selection falls back to the ratio closest to one") {
  std::vector<ThresholdDiagnostic> down;
  const std::vector<double> ratios{1.6, 1.3, 1.1, 0.7, 0.4};
  for (std::size_t i = 0; i < ratios.size(); ++i) down.push_back(diag(i + 1.0, ratios[i]));
  const ThresholdChoice c = select_threshold(down);
  CHECK(c.low_confidence);
  CHECK(c.u == 3.0);

  // Near one but never increasing afterwards.
  std::vector<ThresholdDiagnostic> flat{diag(1.0, 1.0), diag(2.0, 1.0)};
  CHECK(select_threshold(flat).low_confidence);
}

TEST_CASE("selection needs two valid diagnostics") {
  std::vector<ThresholdDiagnostic> one{diag(1.0, 1.0), ThresholdDiagnostic{2.0, 1, {}, {}}};
  CHECK(kind_of([&] { select_threshold(one); }) == ErrorKind::NoValidDiagnostics);
  CHECK(kind_of([] { select_threshold(std::vector<ThresholdDiagnostic>{}); }) == ErrorKind::NoValidDiagnostics);
}

TEST_CASE("asymptotic variance") {
  CHECK(johansson_variance(0.5, 10.0) == Approx(2400.0).epsilon(1e-14));
  CHECK(johansson_variance(1e-9, 3.0) == Approx(9.0).epsilon(1e-8));
  CHECK(johansson_variance(0.2, 1.0) == Approx(1.2 * 0.88 / std::pow(0.8, 4)).epsilon(1e-14));
  for (double xi = 0.05; xi < 0.95; xi += 0.05) {
    CHECK(johansson_variance(xi, 2.0) == Approx(4.0 * johansson_variance(xi, 1.0)).epsilon(1e-14));
    CHECK(johansson_variance(xi + 0.01, 1.0) > johansson_variance(xi, 1.0));
  }
}

TEST_CASE("asymptotic variance matches the spread of refitted lambda") {
  const GpdParams truth(0.5, 10.0);
  const std::size_t n = 10000;
  std::vector<double> lambda;
  for (std::uint64_t r = 0; r < 200; ++r) {
    Rng rng(derive_seed(77, r));
    lambda.push_back(gpd_mean(map_fit(BetaGammaPrior(), ExceedanceSample(gpd_sample(truth, n, rng))).params));
  }
  const double mean = std::accumulate(lambda.begin(), lambda.end(), 0.0) / 200.0;
  double ss = 0.0;
  for (double l : lambda) ss += (l - mean) * (l - mean);
  const double sd = std::sqrt(ss / 199.0);
  const double predicted = std::sqrt(johansson_variance(0.5, 10.0) / static_cast<double>(n));
  CHECK(sd / predicted == Approx(1.0).epsilon(0.3));
}

TEST_CASE("scan bookkeeping") {
  const std::vector<double> z{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
  CHECK(kind_of([&] { threshold_scan(z, std::vector<double>{}, BetaGammaPrior()); }) == ErrorKind::EmptyGrid);
  CHECK(kind_of([&] { threshold_scan(z, std::vector<double>{2.0, 2.0}, BetaGammaPrior()); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { threshold_scan(z, std::vector<double>{3.0, 2.0}, BetaGammaPrior()); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { threshold_scan(z, std::vector<double>{-1.0, 2.0}, BetaGammaPrior()); }) == ErrorKind::Domain);

  const std::vector<double> grid{1.5, 6.0, 7.5, 100.0};
  const auto d = threshold_scan(z, grid, BetaGammaPrior());
  REQUIRE(d.size() == 4);
  CHECK(d[0].n == 7);
  CHECK(d[0].valid());
  CHECK(d[1].n == 3);
  CHECK(d[2].n == 1);
  CHECK_FALSE(d[2].valid());
  CHECK_FALSE(d[2].q_n.has_value());
  CHECK(d[3].n == 0);
  CHECK_FALSE(d[3].valid());
  for (std::size_t i = 0; i < 4; ++i) CHECK(d[i].u == grid[i]);

  // A proper prior fits a single exceedance, but the scan still wants three.
  CHECK_FALSE(threshold_scan(z, grid, BetaGammaPrior(2.0, 2.0, 1.0, 1.0))[2].valid());
}

TEST_CASE("scan fields are consistent") {
  const auto z = gpd_above(0.5, 20.0, 20000, 3);
  const auto grid = make_threshold_grid(z, default_grid_levels());
  const auto d = threshold_scan(z, grid, BetaGammaPrior());
  for (const auto& x : d) {
    REQUIRE(x.valid());
    CHECK(x.fit->ratio == Approx(x.fit->sigma_hat / (x.fit->xi_hat * x.u)).epsilon(1e-15));
    CHECK(x.fit->ratio > 0.0);
    REQUIRE(x.q_n.has_value());
    CHECK(*x.q_n == johansson_variance(x.fit->xi_hat, x.fit->sigma_hat));
    const auto n = static_cast<std::size_t>(std::count_if(z.begin(), z.end(), [&](double v) { return v >= x.u; }));
    CHECK(x.n == n);
  }

  const auto par = threshold_scan(z, grid, BetaGammaPrior(), 4);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(par[i].fit->xi_hat == d[i].fit->xi_hat);
    CHECK(par[i].fit->sigma_hat == d[i].fit->sigma_hat);
  }
}

TEST_CASE("ratio is one at and above the GPD threshold") {
  const std::vector<double> grid{20.0, 30.0, 40.0};
  for (double xi : {0.3, 0.5, 0.8}) {
    const auto d = threshold_scan(gpd_above(xi, 20.0, 150000, derive_seed(5, xi * 10)), grid, BetaGammaPrior());
    CHECK(d[0].fit->ratio == Approx(1.0).epsilon(0.1));
  }

  // Averaged over seeds: threshold stability keeps sigma(u) = xi u above u*.
  std::vector<double> avg(grid.size(), 0.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto d = threshold_scan(gpd_above(0.5, 20.0, 30000, derive_seed(6, s)), grid, BetaGammaPrior());
    for (std::size_t i = 0; i < grid.size(); ++i) avg[i] += d[i].fit->ratio / 20.0;
  }
  for (double r : avg) CHECK(r == Approx(1.0).epsilon(0.05));
}

TEST_CASE("scale equivariance") {
  const auto z = gpd_above(0.4, 10.0, 5000, 9);
  const auto grid = make_threshold_grid(z, default_grid_levels());
  const double k = 37.5;
  std::vector<double> kz(z), kgrid(grid);
  for (auto& v : kz) v *= k;
  for (auto& v : kgrid) v *= k;
  const auto a = threshold_scan(z, grid, BetaGammaPrior());
  const auto b = threshold_scan(kz, kgrid, BetaGammaPrior());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].valid());
    REQUIRE(b[i].valid());
    CHECK(b[i].fit->xi_hat == Approx(a[i].fit->xi_hat).epsilon(1e-6));
    CHECK(b[i].fit->sigma_hat == Approx(k * a[i].fit->sigma_hat).epsilon(1e-6));
    CHECK(b[i].fit->ratio == Approx(a[i].fit->ratio).epsilon(1e-6));
  }
  CHECK(select_threshold(b).u == Approx(k * select_threshold(a).u).epsilon(1e-12));
}

TEST_CASE("ratio curve on the exponential plus GPD mixture") {
  // Starts above one, dips below, then climbs back above one.
  SimConfig config;
  config.xi = 0.8;
  Rng rng(derive_seed(31, 0));
  const auto z = simulate_dgp(config, rng);
  const auto grid = make_threshold_grid(z, study_grid_levels());
  const auto d = threshold_scan(z, grid, BetaGammaPrior());
  std::vector<double> r;
  for (const auto& x : d) {
    if (x.valid() && !x.fit->boundary) r.push_back(x.fit->ratio);
  }
  REQUIRE(r.size() >= 5);
  const auto low = std::min_element(r.begin(), r.end());
  CHECK(*low < 1.0);
  CHECK(std::any_of(r.begin(), low, [](double v) { return v > 1.0; }));
  CHECK(std::any_of(low, r.end(), [](double v) { return v > 1.0; }));
}

TEST_CASE("quantile grids") {
  const std::vector<double> z{5.0, 1.0, 4.0, 2.0, 3.0};
  const auto q = quantile_grid(z, std::vector<double>{0.0, 0.1, 0.5, 1.0});
  CHECK(q[0] == 1.0);
  CHECK(q[1] == Approx(1.4));
  CHECK(q[2] == 3.0);
  CHECK(q[3] == 5.0);
  CHECK(kind_of([&] { quantile_grid(z, std::vector<double>{1.5}); }) == ErrorKind::Domain);
  CHECK(kind_of([] { quantile_grid(std::vector<double>{}, std::vector<double>{0.5}); }) == ErrorKind::EmptySample);

  // Non-positive values are dropped and ties collapse.
  const std::vector<double> w{-3.0, 0.0, 2.0, 2.0, 2.0, 2.0, 8.0};
  const auto g = make_threshold_grid(w, std::vector<double>{0.1, 0.5, 0.9, 1.0});
  REQUIRE(g.size() == 3);
  CHECK(g[0] == 2.0);
  CHECK(g[1] == Approx(5.6));
  CHECK(g[2] == 8.0);
}

TEST_CASE("default levels") {
  const auto levels = default_grid_levels();
  REQUIRE(levels.size() == 13);
  CHECK(levels.front() == Approx(0.90));
  CHECK(levels.back() == Approx(0.999));
  CHECK(std::is_sorted(levels.begin(), levels.end()));
  CHECK(std::adjacent_find(levels.begin(), levels.end()) == levels.end());
}

TEST_CASE("selection ignores boundary fits when interior ones exist") {
  std::vector<ThresholdDiagnostic> d{diag(1.0, 1.5), diag(2.0, 1.3), diag(3.0, 1.0), diag(4.0, 1.2)};
  d[2].fit->boundary = true;
  const ThresholdChoice c = select_threshold(d);
  CHECK(c.index == 3);
  CHECK(c.low_confidence);

  // All at the boundary: use them anyway.
  for (auto& x : d) x.fit->boundary = true;
  CHECK(select_threshold(d).index == 2);
}
