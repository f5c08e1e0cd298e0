#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mtcpd/channel.hpp"
#include "oracles.hpp"

using namespace mtcpd;

TEST_CASE("steering vector closed forms") {
  const auto flat = steering_vector(4, 0.0);
  for (const auto& v : flat) CHECK(v == cplx(1, 0));

  const auto quarter = steering_vector(2, 0.25);
  CHECK(quarter[0] == cplx(1, 0));
  CHECK(std::abs(quarter[1] - cplx(0, 1)) < 1e-15);

  const auto half = steering_vector(3, -0.5);
  CHECK(std::abs(half[0] - cplx(1, 0)) < 1e-15);
  CHECK(std::abs(half[1] - cplx(-1, 0)) < 1e-15);
  CHECK(std::abs(half[2] - cplx(1, 0)) < 1e-15);
}

TEST_CASE("steering vector entries have unit modulus") {
  for (int g = 0; g < 16; ++g) {
    const double f = -0.5 + g / 16.0;
    for (const auto& v : steering_vector(33, f)) {
      CHECK(std::abs(std::abs(v) - 1.0) < 1e-14);
    }
  }
}

TEST_CASE("steering vector rejects out-of-range input") {
  CHECK_THROWS_AS(steering_vector(4, 0.5), std::domain_error);
  CHECK_THROWS_AS(steering_vector(4, -0.6), std::domain_error);
  CHECK_THROWS_AS(steering_vector(0, 0.0), std::invalid_argument);
}

TEST_CASE("wrap_frequency lands in [-1/2, 1/2)") {
  CHECK(wrap_frequency(0.5) == -0.5);
  CHECK(wrap_frequency(-0.5) == -0.5);
  CHECK(wrap_frequency(0.75) == doctest::Approx(-0.25));
  CHECK(wrap_frequency(1.25) == doctest::Approx(0.25));
  for (double f : {-3.2, -0.499, 0.0, 0.499, 7.77}) {
    const double w = wrap_frequency(f);
    CHECK(w >= -0.5);
    CHECK(w < 0.5);
  }
}

TEST_CASE("single all-zero-frequency path gives the all-ones tensor") {
  std::vector<PropagationPath> paths = {{cplx(1, 0), 0.0, 0.0, 0.0, 0.0}};
  const ComplexTensor h = synthesize_channel(paths, 2, 2, 2, 3);
  REQUIRE(h.dims() == std::vector<std::size_t>{4, 2, 3});
  for (const auto& v : h.data()) CHECK(std::abs(v - cplx(1, 0)) < 1e-14);
}

TEST_CASE("single path is rank-1 in every unfolding") {
  std::vector<PropagationPath> paths = {{cplx(0.7, -0.2), 0.13, -0.29, 0.41, -0.07}};
  const ComplexTensor h = synthesize_channel(paths, 4, 2, 2, 8);
  for (std::size_t mode = 0; mode < 3; ++mode) {
    const auto sv = oracle::singular_values(unfold(h, mode));
    REQUIRE(sv.size() >= 2);
    CHECK(sv[1] <= 1e-12 * sv[0]);
  }
}

TEST_CASE("two paths with on-grid delays give a rank-2 mode-K unfolding") {
  const std::size_t k = 8;
  std::vector<PropagationPath> paths = {
      {cplx(1, 0), 0.11, -0.23, 0.05, 0.0},
      {cplx(0.8, 0.3), -0.31, 0.17, -0.12, 2.0 / k},
  };
  const ComplexTensor h = synthesize_channel(paths, 2, 2, 2, k);
  const auto sv = oracle::singular_values(unfold(h, 2));
  REQUIRE(sv.size() >= 3);
  CHECK(sv[1] > 1e-6 * sv[0]);
  CHECK(sv[2] <= 1e-12 * sv[0]);
}

TEST_CASE("synthesize_channel rejects empty path list") {
  CHECK_THROWS_AS(synthesize_channel({}, 2, 2, 2, 4), std::invalid_argument);
}

TEST_CASE("channel equals the sum of per-path rank-1 tensors") {
  RandomStream rng(123);
  ScenarioConfig cfg;
  cfg.x = 2;
  cfg.y = 2;
  cfg.n = 2;
  cfg.k = 8;
  auto stream = rng.substream({1});
  const auto paths = sample_scenario(cfg, stream);
  const ComplexTensor h = synthesize_channel(paths, cfg.x, cfg.y, cfg.n, cfg.k);

  ComplexTensor sum({cfg.x * cfg.y, cfg.n, cfg.k});
  for (const auto& p : paths) {
    const std::vector<PropagationPath> one = {p};
    sum += synthesize_channel(one, cfg.x, cfg.y, cfg.n, cfg.k);
  }
  sum -= h;
  CHECK(frobenius_norm(sum) <= 1e-12 * frobenius_norm(h));
}

TEST_CASE("normalize_channel") {
  ComplexTensor ones({2, 2, 2});
  for (auto& v : ones.data()) v = cplx(1, 0);
  const ComplexTensor unit = normalize_channel(ones);
  for (const auto& v : unit.data()) {
    CHECK(std::abs(v - cplx(1.0 / std::sqrt(8.0), 0)) < 1e-15);
  }

  // idempotence
  const ComplexTensor twice = normalize_channel(unit);
  for (std::size_t i = 0; i < unit.size(); ++i) {
    CHECK(std::abs(twice[i] - unit[i]) < 1e-15);
  }

  RandomStream rng(5);
  ComplexTensor t = oracle::random_tensor({3, 2, 4}, rng);
  CHECK(frobenius_norm(normalize_channel(t)) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(normalize_channel(ComplexTensor({2, 2})), std::invalid_argument);
}

TEST_CASE("awgn sentinel and determinism") {
  RandomStream rng(17);
  ComplexTensor h = normalize_channel(oracle::random_tensor({2, 2, 4}, rng));

  auto s1 = rng.substream({9});
  const ComplexTensor same = add_awgn(h, kNoiselessSnrDb, s1);
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(same[i] == h[i]);

  auto s2 = rng.substream({10});
  auto s3 = rng.substream({10});
  const ComplexTensor a = add_awgn(h, -5.0, s2);
  const ComplexTensor b = add_awgn(h, -5.0, s3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("awgn energy matches the SNR definition (Monte Carlo)") {
  RandomStream rng(29);
  ComplexTensor h = normalize_channel(oracle::random_tensor({2, 2, 2}, rng));

  // snr 0 dB: E||Z||_F^2 = 1, averaged over 1e4 draws within 3%
  double acc = 0.0;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    auto stream = rng.substream({100, static_cast<std::uint64_t>(d)});
    ComplexTensor noisy = add_awgn(h, 0.0, stream);
    noisy -= h;
    const double nn = frobenius_norm(noisy);
    acc += nn * nn;
  }
  CHECK(acc / draws == doctest::Approx(1.0).epsilon(0.03));

  // snr -10 dB: E||Z||_F^2 = 10, over 1e3 draws within 5%
  acc = 0.0;
  for (int d = 0; d < 1000; ++d) {
    auto stream = rng.substream({200, static_cast<std::uint64_t>(d)});
    ComplexTensor noisy = add_awgn(h, -10.0, stream);
    noisy -= h;
    const double nn = frobenius_norm(noisy);
    acc += nn * nn;
  }
  CHECK(acc / 1000 == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("zero-spread single-cluster scenario collapses to one direction") {
  ScenarioConfig cfg;
  cfg.x = 2;
  cfg.y = 2;
  cfg.n = 2;
  cfg.k = 8;
  cfg.n_clusters = 1;
  cfg.subpaths_per_cluster = 4;
  cfg.angular_spread = 0.0;
  cfg.delay_spread = 0.0;
  RandomStream rng(31);
  auto stream = rng.substream({1});
  const auto paths = sample_scenario(cfg, stream);
  REQUIRE(paths.size() == 4);
  for (const auto& p : paths) {
    CHECK(p.alpha == paths[0].alpha);
    CHECK(p.beta == paths[0].beta);
    CHECK(p.gamma == paths[0].gamma);
    CHECK(p.tau == paths[0].tau);
  }
  const ComplexTensor h = synthesize_channel(paths, cfg.x, cfg.y, cfg.n, cfg.k);
  for (std::size_t mode = 0; mode < 3; ++mode) {
    const auto sv = oracle::singular_values(unfold(h, mode));
    CHECK(sv[1] <= 1e-10 * sv[0]);
  }
}

TEST_CASE("sampled paths stay in range and are deterministic") {
  ScenarioConfig cfg;
  cfg.n_clusters = 3;
  cfg.subpaths_per_cluster = 1;
  cfg.angular_spread = 0.3;  // large spread exercises wrapping
  cfg.delay_spread = 0.4;
  RandomStream rng(37);

  auto s1 = rng.substream({1});
  const auto a = sample_scenario(cfg, s1);
  REQUIRE(a.size() == 3);
  for (const auto& p : a) {
    CHECK(p.alpha >= -0.5);
    CHECK(p.alpha < 0.5);
    CHECK(p.beta >= -0.5);
    CHECK(p.beta < 0.5);
    CHECK(p.gamma >= -0.5);
    CHECK(p.gamma < 0.5);
    CHECK(p.tau >= -0.5);
    CHECK(p.tau < 0.5);
    CHECK(std::abs(p.gain) > 0.0);
  }

  auto s2 = rng.substream({1});
  const auto b = sample_scenario(cfg, s2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].gain == b[i].gain);
    CHECK(a[i].alpha == b[i].alpha);
    CHECK(a[i].tau == b[i].tau);
  }
}

TEST_CASE("scenario path gains follow the cluster power profile") {
  ScenarioConfig cfg;
  cfg.n_clusters = 2;
  cfg.subpaths_per_cluster = 2;
  cfg.power_decay_db = 3.0;
  RandomStream rng(41);
  auto stream = rng.substream({1});
  const auto paths = sample_scenario(cfg, stream);
  REQUIRE(paths.size() == 4);
  // total power across paths is 1; cluster 1 is 10^(-0.3) times cluster 0
  double p0 = std::norm(paths[0].gain) + std::norm(paths[1].gain);
  double p1 = std::norm(paths[2].gain) + std::norm(paths[3].gain);
  CHECK(p0 + p1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p1 / p0 == doctest::Approx(std::pow(10.0, -0.3)).epsilon(1e-12));
}

TEST_CASE("ue_slice and set_ue_slice round trip") {
  RandomStream rng(43);
  ComplexTensor h = oracle::random_tensor({4, 3, 5}, rng);
  ComplexTensor rebuilt({4, 3, 5});
  for (std::size_t n = 0; n < 3; ++n) set_ue_slice(rebuilt, n, ue_slice(h, n));
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(rebuilt[i] == h[i]);

  const ComplexMatrix sk = subcarrier_slice(h, 2);
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t m = 0; m < 4; ++m) {
      std::size_t idx[3] = {m, n, 2};
      CHECK(sk(m, n) == h.at(idx));
    }
  }
}

TEST_CASE("rng streams are reproducible and distinct") {
  RandomStream a(99);
  RandomStream b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  auto s1 = RandomStream(99).substream({1, 2});
  auto s2 = RandomStream(99).substream({1, 3});
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) {
    if (s1.next_u64() != s2.next_u64()) any_diff = true;
  }
  CHECK(any_diff);

  RandomStream u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("gaussian moments are roughly standard") {
  RandomStream rng(555);
  double mean = 0.0, var = 0.0;
  const int n = 50000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.gaussian();
  for (double x : xs) mean += x;
  mean /= n;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n - 1;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));

  // complex: E|z|^2 = 1
  double cvar = 0.0;
  for (int i = 0; i < n; ++i) cvar += std::norm(rng.complex_gaussian());
  CHECK(cvar / n == doctest::Approx(1.0).epsilon(0.03));
}
