#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "wte/embedding.hpp"
#include "wte/signal.hpp"
#include "wte/swt.hpp"

using namespace wte;

TEST_CASE("delay vectors read oldest-first and honour the valid range") {
  std::vector<double> x(100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 10.0 + static_cast<double>(i);

  // (x[t-1-3*tau], x[t-1-2*tau], x[t-1-tau], x[t-1]) at t = 9, tau = 2
  const auto v = embed(x, 2, 4, 9);
  REQUIRE(v == std::vector<double>{12.0, 14.0, 16.0, 18.0});

  // valid t runs from (d-1)*tau + 1 through the last index
  std::size_t valid = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    try {
      (void)embed(x, 2, 4, t);
      ++valid;
    } catch (const std::invalid_argument&) {
    }
  }
  REQUIRE(valid == 100 - 7);
  REQUIRE_THROWS_AS(embed(x, 2, 4, 6), std::invalid_argument);
  REQUIRE_NOTHROW(embed(x, 2, 4, 7));
  REQUIRE_THROWS_AS(embed(x, 2, 4, 100), std::invalid_argument);
  REQUIRE_THROWS_AS(embed(x, 0, 4, 9), std::invalid_argument);
  REQUIRE_THROWS_AS(embed(x, 2, 0, 9), std::invalid_argument);
}

TEST_CASE("te dataset rows match direct indexing") {
  const std::size_t L = 24;
  std::vector<double> src(L), dst(L);
  for (std::size_t t = 0; t < L; ++t) {
    src[t] = static_cast<double>(t);
    dst[t] = 100.0 + static_cast<double>(t);
  }
  PairEmbedding spec;
  spec.tau_src = 2;
  spec.dim_src = 3;
  spec.tau_dst = 3;
  spec.dim_dst = 2;
  spec.delay = 2;

  const auto ds = build_te_dataset(src, dst, spec);
  // t ranges over [max(2*2+1, 1*3-2+1), 24-1-2] = [5, 21]
  REQUIRE(ds.rows() == 17);
  REQUIRE(ds.joint.cols == 6);

  // first row, t = 5: source past (x[0], x[2], x[4]), target past anchored
  // to the predicted sample (y[3], y[6]), prediction target y[7]
  REQUIRE(ds.source_past(0, 0) == 0.0);
  REQUIRE(ds.source_past(0, 1) == 2.0);
  REQUIRE(ds.source_past(0, 2) == 4.0);
  REQUIRE(ds.target_past(0, 0) == 103.0);
  REQUIRE(ds.target_past(0, 1) == 106.0);
  REQUIRE(ds.target_next(0) == 107.0);

  // last row, t = 21
  REQUIRE(ds.source_past(16, 0) == 16.0);
  REQUIRE(ds.source_past(16, 2) == 20.0);
  REQUIRE(ds.target_past(16, 0) == 119.0);
  REQUIRE(ds.target_past(16, 1) == 122.0);
  REQUIRE(ds.target_next(16) == 123.0);
}

TEST_CASE("te dataset size and content match exhaustive enumeration") {
  Rng rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const auto L = static_cast<std::size_t>(30 + rng.uniform(0.0, 90.0));
    PairEmbedding spec;
    spec.tau_src = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
    spec.dim_src = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
    spec.tau_dst = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
    spec.dim_dst = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
    spec.delay = static_cast<int>(rng.uniform(0.0, 7.0));

    std::vector<double> src(L), dst(L);
    for (auto& v : src) v = rng.gaussian();
    for (auto& v : dst) v = rng.gaussian();

    // enumerate every t whose indices all stay inside the series
    std::vector<long> valid_t;
    for (long t = 0; t < static_cast<long>(L); ++t) {
      bool ok = t + spec.delay <= static_cast<long>(L) - 1;
      for (int j = 0; ok && j < spec.dim_src; ++j)
        if (t - 1 - static_cast<long>(spec.dim_src - 1 - j) * spec.tau_src < 0)
          ok = false;
      for (int j = 0; ok && j < spec.dim_dst; ++j)
        if (t + spec.delay - 1 -
                static_cast<long>(spec.dim_dst - 1 - j) * spec.tau_dst < 0)
          ok = false;
      if (ok) valid_t.push_back(t);
    }

    if (valid_t.empty()) {
      REQUIRE_THROWS_AS(build_te_dataset(src, dst, spec), std::runtime_error);
      continue;
    }
    const auto ds = build_te_dataset(src, dst, spec);
    REQUIRE(ds.rows() == valid_t.size());
    // spot-check the first and last rows coordinate by coordinate
    for (std::size_t pick : {std::size_t{0}, valid_t.size() - 1}) {
      const long t = valid_t[pick];
      for (int j = 0; j < spec.dim_src; ++j)
        REQUIRE(ds.source_past(pick, j) ==
                src[static_cast<std::size_t>(
                    t - 1 - static_cast<long>(spec.dim_src - 1 - j) *
                                spec.tau_src)]);
      for (int j = 0; j < spec.dim_dst; ++j)
        REQUIRE(ds.target_past(pick, j) ==
                dst[static_cast<std::size_t>(
                    t + spec.delay - 1 -
                    static_cast<long>(spec.dim_dst - 1 - j) * spec.tau_dst)]);
      REQUIRE(ds.target_next(pick) ==
              dst[static_cast<std::size_t>(t + spec.delay)]);
    }
  }

  std::vector<double> a(10, 0.0), b(9, 0.0);
  REQUIRE_THROWS_AS(build_te_dataset(a, b, PairEmbedding{}),
                    std::invalid_argument);
}

TEST_CASE("delay schedules scale dyadic band delays") {
  const std::map<std::string, int> base{{"delta_theta", 8},
                                        {"alpha", 4},
                                        {"beta", 2},
                                        {"low_gamma", 1}};
  const auto s4 = delay_schedule(base, 4);
  REQUIRE(s4.at("delta_theta") == 32);
  REQUIRE(s4.at("alpha") == 16);
  REQUIRE(s4.at("beta") == 8);
  REQUIRE(s4.at("low_gamma") == 4);
  const auto s1 = delay_schedule(base, 1);
  REQUIRE(s1 == base);

  // a single band has no dyadic pairing to violate
  const auto single = delay_schedule({{"x", 5}}, 2);
  REQUIRE(single.at("x") == 10);

  REQUIRE_THROWS_WITH(delay_schedule({{"a", 3}, {"b", 8}}, 1),
                      Catch::Matchers::ContainsSubstring("dyadic"));
  REQUIRE_THROWS_AS(delay_schedule(base, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(delay_schedule({}, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(delay_schedule({{"a", 0}}, 1), std::invalid_argument);
}

TEST_CASE("autocorrelation matches hand values and finds its first zero") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const auto a = acf(x, 3);
  REQUIRE(a[0] == Catch::Approx(1.0).epsilon(1e-15));
  REQUIRE(a[1] == Catch::Approx(0.25).epsilon(1e-12));
  REQUIRE(a[2] == Catch::Approx(-0.3).epsilon(1e-12));
  REQUIRE(a[3] == Catch::Approx(-0.45).epsilon(1e-12));
  REQUIRE(acf_first_zero(a) == 2);

  // a cosine of period 64 first crosses zero at a quarter period
  std::vector<double> c(1024);
  for (std::size_t t = 0; t < c.size(); ++t)
    c[t] = std::cos(2.0 * M_PI * static_cast<double>(t) / 64.0);
  const auto ac = acf(c, 100);
  REQUIRE(acf_first_zero(ac) == 16);

  // monotone-positive curves have no zero
  REQUIRE(!acf_first_zero(std::vector<double>{1.0, 0.9, 0.5, 0.1}));

  REQUIRE_THROWS_AS(acf(std::vector<double>{1.0}, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(acf(x, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(acf(std::vector<double>(32, 2.0), 4), std::runtime_error);
}

TEST_CASE("cao curve saturates at the attractor dimension") {
  // a clean sinusoid with an incommensurate period traces a closed curve,
  // so two delay coordinates always suffice
  const std::size_t n = 2000;
  std::vector<double> s(n);
  for (std::size_t t = 0; t < n; ++t)
    s[t] = std::sin(2.0 * M_PI * static_cast<double>(t) / 50.1234);
  const auto res = cao_e1(s, 12, 6);
  REQUIRE(res.e1.size() == 5);  // ratios for d = 1 .. d_max - 1
  REQUIRE(res.e1[0] < 0.5);           // one coordinate folds the curve
  REQUIRE(res.e1[1] > 0.9);           // two already unfold it
  REQUIRE(res.min_dim.has_value());
  REQUIRE(*res.min_dim == 2);

  // white noise never saturates within a reasonable dimension budget
  const auto noise = testutil::white_gaussian(2000, 88);
  const auto rn = cao_e1(noise, 1, 8);
  REQUIRE(!rn.min_dim.has_value());

  // near-constant input with duplicate-distance pairs must not divide by zero
  Rng rng(5);
  std::vector<double> flat(500, 1.0);
  for (auto& v : flat) v += 1e-9 * rng.gaussian();
  REQUIRE_NOTHROW(cao_e1(flat, 1, 3));

  REQUIRE_THROWS_AS(cao_e1(s, 0, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(cao_e1(s, 1, 1), std::invalid_argument);
}

TEST_CASE("local predictor error selects a compact embedding") {
  // nearly deterministic ar(1): past samples carry all the predictable
  // structure, so the scan settles on a compact low-dimensional embedding
  Rng rng(23);
  std::vector<double> ar(4000, 0.0);
  for (std::size_t t = 1; t < ar.size(); ++t)
    ar[t] = 0.9 * ar[t - 1] + 0.01 * rng.gaussian();
  const auto res = ragwitz_mspe(ar, {1, 2, 4}, {1, 2, 3, 4});
  REQUIRE(res.best_tau == 4);
  REQUIRE(res.best_dim == 2);
  REQUIRE(res.mspe.size() == 4);
  REQUIRE(res.mspe[0].size() == 3);

  // a noise-free sinusoid is predicted almost exactly once the embedding
  // spans the curve
  std::vector<double> s(3000);
  for (std::size_t t = 0; t < s.size(); ++t)
    s[t] = std::sin(2.0 * M_PI * static_cast<double>(t) / 64.0);
  const auto rs = ragwitz_mspe(s, {4, 8, 16}, {1, 2, 3});
  REQUIRE(rs.best_dim >= 2);
  REQUIRE(rs.best_mspe < 1e-20);
  for (std::size_t j = 0; j < rs.taus.size(); ++j) {
    REQUIRE(rs.mspe[1][j] < 1e-20);
    REQUIRE(rs.mspe[0][j] > rs.mspe[1][j]);
  }

  REQUIRE_THROWS_AS(ragwitz_mspe(ar, {}, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(ragwitz_mspe(ar, {1}, {1}, 0), std::invalid_argument);
}

TEST_CASE("subband decorrelation times halve with frequency on 1/f noise") {
  const auto pink = testutil::pink_noise(16384, 1024.0, 29);
  const auto filters = build_iterated_filters(daubechies_d4(), 6);
  const auto dec = swt_decompose(pink, filters);

  auto first_zero = [&](const char* band) {
    const auto z = zscored(dec.component(band).samples);
    return acf_first_zero(acf(z, 256));
  };

  const auto hg = first_zero("high_gamma");
  const auto lg = first_zero("low_gamma");
  const auto be = first_zero("beta");
  const auto al = first_zero("alpha");
  REQUIRE(hg.has_value());
  REQUIRE(lg.has_value());
  REQUIRE(be.has_value());
  REQUIRE(al.has_value());
  REQUIRE(*hg == 3);
  REQUIRE(*lg == 2 * *hg);
  REQUIRE(*be == 2 * *lg);
  REQUIRE(*al == 2 * *be);

  // the approximation band decorrelates more slowly than any detail band;
  // for 1/f input it has no zero crossing within this horizon at all
  const auto dt = first_zero("delta_theta");
  REQUIRE(!dt.has_value());
}
