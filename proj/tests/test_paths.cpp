#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qsa/brownian.hpp"
#include "qsa/parallel.hpp"
#include "qsa/path_io.hpp"
#include "qsa/rng.hpp"
#include "qsa/stats.hpp"

using namespace qsa;

TEST_CASE("uniform grid construction") {
  const GridPtr g = make_grid(1.0, 4);
  REQUIRE(g->points() == 5);
  CHECK(g->time(0) == 0.0);
  CHECK(g->time(1) == doctest::Approx(0.25));
  CHECK(g->time(4) == 1.0);
  CHECK(g->uniform());

  const GridPtr tiny = make_grid(1.0, 1);
  CHECK(tiny->points() == 2);
  CHECK(tiny->time(1) == 1.0);

  const GridPtr g2 = make_grid(2.0, 8);
  CHECK(g2->dt() == doctest::Approx(0.25));
  CHECK(g2->horizon() == 2.0);

  CHECK_THROWS_AS(make_grid(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(-1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1.0, 0), std::invalid_argument);
}

TEST_CASE("grid index lookup rejects off-grid times") {
  const GridPtr g = make_grid(1.0, 10);
  CHECK(g->index_of(0.3) == 3);
  CHECK_THROWS_AS(g->index_of(0.35), std::invalid_argument);
  CHECK_THROWS_AS(g->index_of(1.05), std::invalid_argument);
}

TEST_CASE("restrict truncates and is a projection") {
  const GridPtr g = make_grid(1.0, 8);
  Path p(g, 2);
  for (std::size_t k = 0; k < p.points(); ++k)
    for (std::size_t i = 0; i < 2; ++i)
      p.at(k, i) = static_cast<double>(k) + 10.0 * static_cast<double>(i);

  const Path full = restrict(p, 1.0);
  CHECK(full.points() == p.points());
  CHECK(full.values() == p.values());

  const Path half = restrict(p, 0.5);
  CHECK(half.points() == 5);
  CHECK(half.at(4, 1) == p.at(4, 1));

  // restrict(restrict(p, s), s) == restrict(p, s)
  const Path again = restrict(half, 0.5);
  CHECK(again.values() == half.values());

  // two-step restriction equals one-step
  const Path two_step = restrict(restrict(p, 0.75), 0.5);
  CHECK(two_step.values() == half.values());

  const Path origin = restrict(p, 0.0);
  CHECK(origin.points() == 1);
  CHECK(origin.value(0) == p.value(0));

  CHECK_THROWS_AS(restrict(p, 0.33), std::invalid_argument);
}

TEST_CASE("brownian terminal moments") {
  const std::size_t n = 100000;
  const PathEnsemble e = sample_brownian(make_grid(1.0, 16), 1, n, 2024);
  std::vector<double> terminal(n);
  for (std::size_t i = 0; i < n; ++i) terminal[i] = e.paths[i].value(16);
  const double m = mean(terminal);
  const double v = variance(terminal);
  CHECK(std::abs(m) <= 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(v == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("same seed gives bit-identical ensembles, any schedule") {
  const GridPtr g = make_grid(1.0, 64);
  const PathEnsemble a = sample_brownian(g, 2, 257, 7);
  const PathEnsemble b = sample_brownian(g, 2, 257, 7);
  const PathEnsemble serial = sample_brownian_serial(g, 2, 257, 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.paths[i].values() == b.paths[i].values());
    CHECK(a.paths[i].values() == serial.paths[i].values());
  }

  const int saved = max_threads();
  set_threads(1);
  const PathEnsemble single = sample_brownian(g, 2, 257, 7);
  set_threads(saved);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a.paths[i].values() == single.paths[i].values());

  const PathEnsemble other = sample_brownian(g, 2, 257, 8);
  CHECK(a.paths[0].values() != other.paths[0].values());
}

TEST_CASE("disjoint increments are uncorrelated") {
  const std::size_t n = 20000;
  const GridPtr g = make_grid(1.0, 32);
  const PathEnsemble e = sample_brownian(g, 1, n, 55);
  NormalStream pick(99, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto k1 = static_cast<std::size_t>(pick.next_uniform() * 32);
    auto k2 = static_cast<std::size_t>(pick.next_uniform() * 32);
    if (k1 == k2) k2 = (k2 + 1) % 32;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = e.paths[i].value(k1 + 1) - e.paths[i].value(k1);
      b[i] = e.paths[i].value(k2 + 1) - e.paths[i].value(k2);
    }
    const double ma = mean(a), mb = mean(b);
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) cov += (a[i] - ma) * (b[i] - mb);
    cov /= static_cast<double>(n);
    const double corr = cov / std::sqrt(variance(a) * variance(b));
    CHECK(std::abs(corr) <= 4.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("ensemble weights validate") {
  PathEnsemble e = sample_brownian(make_grid(1.0, 4), 1, 3, 1);
  CHECK_NOTHROW(e.validate());
  e.weights[0] += 1e-6;
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
}

TEST_CASE("binary round trip and csv shape") {
  const PathEnsemble e = sample_brownian(make_grid(1.0, 8), 2, 5, 42);

  std::stringstream bin;
  write_ensemble_binary(e, bin);
  const PathEnsemble back = read_ensemble_binary(bin);
  REQUIRE(back.size() == e.size());
  CHECK(back.seed == e.seed);
  for (std::size_t i = 0; i < e.size(); ++i)
    CHECK(back.paths[i].values() == e.paths[i].values());
  CHECK(back.weights == e.weights);

  std::stringstream csv;
  write_ensemble_csv(e, csv);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "path_id,t,x_1,x_2");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 5 * 9);
}

TEST_CASE("csv output is byte-stable") {
  const PathEnsemble e = sample_brownian(make_grid(1.0, 8), 1, 4, 9);
  std::stringstream a, b;
  write_ensemble_csv(e, a);
  write_ensemble_csv(e, b);
  CHECK(a.str() == b.str());
}
