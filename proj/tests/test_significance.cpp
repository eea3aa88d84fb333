#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "wte/infotheory.hpp"
#include "wte/significance.hpp"

using namespace wte;

TEST_CASE("percentiles interpolate between order statistics") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  REQUIRE(percentile_sorted(v, 0.0) == 1.0);
  REQUIRE(percentile_sorted(v, 1.0) == 5.0);
  REQUIRE(percentile_sorted(v, 0.5) == 3.0);
  REQUIRE(percentile_sorted(v, 0.25) == 2.0);
  REQUIRE(percentile_sorted(v, 0.1) == Catch::Approx(1.4).epsilon(1e-12));

  std::vector<double> ranks(100);
  for (std::size_t i = 0; i < ranks.size(); ++i)
    ranks[i] = static_cast<double>(i);
  REQUIRE(percentile_sorted(ranks, 0.95) ==
          Catch::Approx(94.05).epsilon(1e-12));

  REQUIRE_THROWS_AS(percentile_sorted({}, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(percentile_sorted(v, -0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(percentile_sorted(v, 1.1), std::invalid_argument);
}

TEST_CASE("independence limit for coherence follows the closed form") {
  // threshold 1 - (1 - level)^(1/(L-1)) for L averaged segments
  REQUIRE(coherence_cl(2, 0.95) == Catch::Approx(0.95).epsilon(1e-12));
  REQUIRE(coherence_cl(18, 0.95) ==
          Catch::Approx(0.16156591).epsilon(1e-6));
  REQUIRE(coherence_cl(100, 0.95) ==
          Catch::Approx(0.029806).epsilon(1e-4));
  // more segments always tighten the limit
  for (std::size_t l = 3; l < 40; ++l)
    REQUIRE(coherence_cl(l, 0.95) < coherence_cl(l - 1, 0.95));

  REQUIRE_THROWS_AS(coherence_cl(1, 0.95), std::invalid_argument);
  REQUIRE_THROWS_AS(coherence_cl(10, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(coherence_cl(10, 1.0), std::invalid_argument);
}

TEST_CASE("surrogate limits are deterministic across worker counts") {
  const PairStatistic stat = [](const TimeSeries& x, const TimeSeries& y) {
    return std::abs(correlation(x.samples, y.samples));
  };
  const auto d1 = surrogate_cl(stat, 1.0, 1.0, 256, 512.0, 200, 77, 0.95, 1,
                               "corr");
  const auto d4 = surrogate_cl(stat, 1.0, 1.0, 256, 512.0, 200, 77, 0.95, 4,
                               "corr");
  REQUIRE(d1.values == d4.values);
  REQUIRE(d1.seeds == d4.seeds);
  REQUIRE(d1.cl95 == d4.cl95);
  REQUIRE(d1.statistic == "corr");
  REQUIRE(d1.n == 200);
  REQUIRE(std::is_sorted(d1.values.begin(), d1.values.end()));
  REQUIRE(d1.cl95 == d1.percentile(0.95));

  // every recorded seed comes from the documented derivation
  std::set<std::uint64_t> expected;
  for (std::size_t s = 0; s < 200; ++s)
    expected.insert(derive_seed(77, 1, s));
  for (const auto s : d1.seeds) REQUIRE(expected.count(s) == 1);

  // null correlations of 256-sample pairs: the limit sits near 2/sqrt(n)
  REQUIRE(d1.cl95 > 0.05);
  REQUIRE(d1.cl95 < 0.25);
}

TEST_CASE("surrogate series honour the requested variance and rate") {
  const PairStatistic var_probe = [](const TimeSeries& x, const TimeSeries&) {
    return variance(x.samples);
  };
  const auto d = surrogate_cl(var_probe, 4.0, 1.0, 2048, 512.0, 100, 5);
  // sample variances concentrate around 4
  REQUIRE(d.percentile(0.5) == Catch::Approx(4.0).margin(0.3));

  const PairStatistic fs_probe = [](const TimeSeries& x, const TimeSeries&) {
    return x.fs;
  };
  const auto df = surrogate_cl(fs_probe, 1.0, 1.0, 128, 512.0, 100, 5);
  REQUIRE(df.cl95 == 512.0);

  REQUIRE_THROWS_AS(surrogate_cl(var_probe, 1.0, 1.0, 128, 512.0, 99, 5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(surrogate_cl(var_probe, 0.0, 1.0, 128, 512.0, 100, 5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(
      surrogate_cl(var_probe, 1.0, 1.0, 128, 512.0, 100, 5, 1.0),
      std::invalid_argument);
}

TEST_CASE("per-pair limits agree between diagonal and full grids") {
  const auto filters = build_iterated_filters(daubechies_d4(), 6);
  EmbeddingSpec espec;
  espec.base_delays = {{"delta_theta", 8}, {"alpha", 4}, {"beta", 2},
                       {"low_gamma", 1}};
  espec.scale = 1;
  espec.dim = 2;
  espec.interaction_delay = 2;
  KnnParams params;
  const std::vector<std::string> bands{"delta_theta", "low_gamma"};

  const auto diag = per_band_cls(filters, diagonal_band_pairs(bands), espec,
                                 params, 256, 1024.0, 1.0, 1.0, 100, 31);
  const auto full = per_band_cls(filters, bands, espec, params, 256, 1024.0,
                                 1.0, 1.0, 100, 31);
  REQUIRE(diag.size() == 2);
  REQUIRE(full.size() == 4);

  // the same seed stream drives both runs, so shared cells match exactly
  for (const auto& band : bands) {
    const BandPair cell{band, band};
    REQUIRE(full.at(cell).values == diag.at(cell).values);
    REQUIRE(full.at(cell).cl95 == diag.at(cell).cl95);
  }
  REQUIRE(full.at({"delta_theta", "low_gamma"}).statistic ==
          "te:delta_theta->low_gamma");

  // limits transfer onto a production matrix cell by cell
  Rng rng(8);
  std::vector<double> xs(1024), ys(1024);
  for (auto& v : xs) v = rng.gaussian();
  for (auto& v : ys) v = rng.gaussian();
  const auto dx = select_bands(
      swt_decompose(testutil::make_series(xs, 1024.0, "x"), filters), bands);
  const auto dy = select_bands(
      swt_decompose(testutil::make_series(ys, 1024.0, "y"), filters), bands);
  const auto schedule = delay_schedule(espec.base_delays, espec.scale);
  auto matrix = te_matrix(dx, dy, schedule, espec.dim,
                          espec.interaction_delay, params);
  attach_cls(matrix, full);
  REQUIRE(matrix.has_cl());
  REQUIRE(matrix.cl95.size() == 2);
  REQUIRE(matrix.cl95[0][0] == full.at({"delta_theta", "delta_theta"}).cl95);
  REQUIRE(matrix.cl95[1][0] == full.at({"delta_theta", "low_gamma"}).cl95);

  // a diagonal-only map cannot fill the off-diagonal cells
  REQUIRE_THROWS_WITH(attach_cls(matrix, diag),
                      Catch::Matchers::ContainsSubstring("missing"));

  // unknown bands and absent schedule entries are rejected up front
  REQUIRE_THROWS_WITH(
      per_band_cls(filters, std::vector<BandPair>{{"nope", "alpha"}}, espec,
                   params, 256, 1024.0, 1.0, 1.0, 100, 31),
      Catch::Matchers::ContainsSubstring("unknown band"));
  EmbeddingSpec missing = espec;
  missing.base_delays.erase("alpha");
  REQUIRE_THROWS_AS(
      per_band_cls(filters, std::vector<BandPair>{{"alpha", "alpha"}},
                   missing, params, 256, 1024.0, 1.0, 1.0, 100, 31),
      std::invalid_argument);
  REQUIRE_THROWS_AS(per_band_cls(filters, std::vector<BandPair>{}, espec,
                                 params, 256, 1024.0, 1.0, 1.0, 100, 31),
                    std::invalid_argument);
}

TEST_CASE("surrogate audit files list every draw with its seed") {
  testutil::TempDir tmp;
  SurrogateDistribution d;
  d.statistic = "te:a->b";
  d.values = {0.25, 0.5};
  d.seeds = {3, 4};
  d.n = 2;
  const auto path = tmp.path / "surrogates.csv";
  save_surrogates(path, {d});
  REQUIRE(testutil::slurp(path) ==
          "statistic,index,seed,value\nte:a->b,0,3,0.25\nte:a->b,1,4,0.5\n");
}
