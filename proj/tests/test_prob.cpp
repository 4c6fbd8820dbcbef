#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ecc3/prob.hpp"
#include "ecc3/rng.hpp"

using namespace ecc3;

namespace {

ProbVector random_simplex(Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  double sum = 0.0;
  for (auto& x : v) {
    x = rng.next_gamma(1.0);
    sum += x;
  }
  for (auto& x : v) x /= sum;
  return ProbVector::trusted(std::move(v));
}

}  // namespace

TEST_CASE("entropy basics") {
  CHECK(entropy(ProbVector::from({1.0, 0.0, 0.0})) == doctest::Approx(0.0));
  CHECK(entropy(ProbVector::from({0.25, 0.25, 0.25, 0.25})) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  // -0.5 ln 0.5 - 2 * 0.25 ln 0.25
  CHECK(entropy(ProbVector::from({0.5, 0.25, 0.25})) ==
        doctest::Approx(1.0397207708399179).epsilon(1e-12));
}

TEST_CASE("entropy rejects invalid simplex") {
  CHECK_THROWS_AS(ProbVector::from({0.5, 0.4}), Error);   // sums to 0.9
  CHECK_THROWS_AS(ProbVector::from({1.2, -0.2}), Error);  // out of range
  CHECK_THROWS_AS(ProbVector::from({1.0}), Error);        // K < 2
}

TEST_CASE("ProbVector renormalizes small drift only") {
  const ProbVector p = ProbVector::from({0.6, 0.399999});  // drift 1e-6
  double sum = 0.0;
  for (std::size_t k = 0; k < p.num_classes(); ++k) sum += p[k];
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("softmax with temperature") {
  const ProbVector even =
      softmax_with_temperature(LogitVector::from({0.0, 0.0}), 1.0);
  CHECK(even[0] == doctest::Approx(0.5).epsilon(1e-15));

  const ProbVector p =
      softmax_with_temperature(LogitVector::from({2.0, 0.0}), 1.0);
  const double expected = std::exp(2.0) / (std::exp(2.0) + 1.0);
  CHECK(p[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.880797).epsilon(1e-6));

  const ProbVector hot =
      softmax_with_temperature(LogitVector::from({2.0, 0.0}), 1000.0);
  CHECK(std::abs(hot[0] - 0.5) < 1e-3);

  CHECK_THROWS_AS(softmax_with_temperature(LogitVector::from({1.0, 0.0}), 0.0),
                  Error);
  CHECK_THROWS_AS(
      softmax_with_temperature(LogitVector::from({1.0, 0.0}), -1.0), Error);
  CHECK_THROWS_AS(LogitVector::from({1.0, std::nan("")}), Error);
}

TEST_CASE("sort_desc basics and ties") {
  const SortedProbs sp = sort_desc(ProbVector::from({0.2, 0.5, 0.3}));
  CHECK(sp.sorted == std::vector<double>{0.5, 0.3, 0.2});
  CHECK(sp.rank_of_class[1] == 0);
  CHECK(sp.class_at_rank[0] == 1);

  // tied entries keep ascending class index
  const SortedProbs tied = sort_desc(ProbVector::from({0.25, 0.25, 0.5}));
  CHECK(tied.rank_of_class[0] == 1);
  CHECK(tied.rank_of_class[1] == 2);
  CHECK(tied.rank_of_class[2] == 0);
}

TEST_CASE("sort_desc matches a reference sort on random vectors") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const ProbVector p = random_simplex(rng, 100);
    const SortedProbs sp = sort_desc(p);
    std::vector<double> reference(p.values());
    std::sort(reference.begin(), reference.end(), std::greater<>());
    CHECK(sp.sorted == reference);
    for (std::size_t k = 0; k < 100; ++k) {
      CHECK(sp.class_at_rank[sp.rank_of_class[k]] == k);
      CHECK(sp.sorted[sp.rank_of_class[k]] == p[k]);
    }
  }
}

TEST_CASE("sort_desc idempotent on sorted input") {
  const ProbVector p = ProbVector::from({0.5, 0.3, 0.15, 0.05});
  const SortedProbs sp = sort_desc(p);
  CHECK(sp.sorted == p.values());
  for (std::size_t k = 0; k < 4; ++k) CHECK(sp.rank_of_class[k] == k);
}

TEST_CASE("tempered-softmax entropy is non-decreasing in T") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> logits(8);
    for (auto& z : logits) z = 3.0 * rng.next_normal();
    const LogitVector z = LogitVector::from(logits);

    double prev_entropy = -1.0;
    std::size_t prev_argmax = 0;
    bool first = true;
    for (double t = 0.05; t <= 20.0; t *= 1.25) {
      const ProbVector p = softmax_with_temperature(z, t);
      const double h = entropy(p);
      std::size_t amax = 0;
      for (std::size_t k = 1; k < p.num_classes(); ++k)
        if (p[k] > p[amax]) amax = k;
      if (!first) {
        CHECK(h >= prev_entropy - 1e-9);
        CHECK(amax == prev_argmax);
      }
      prev_entropy = h;
      prev_argmax = amax;
      first = false;
    }
  }
}

TEST_CASE("entropy bounded by ln K, equality only at uniform") {
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 2 + rng.next_below(20);
    const ProbVector p = random_simplex(rng, k);
    const double h = entropy(p);
    const double cap = std::log(static_cast<double>(k));
    CHECK(h <= cap + 1e-9);
    if (std::abs(h - cap) < 1e-9) {
      for (std::size_t i = 0; i < k; ++i)
        CHECK(p[i] ==
              doctest::Approx(1.0 / static_cast<double>(k)).epsilon(1e-6));
    }
  }
  const ProbVector uniform = ProbVector::from(std::vector<double>(6, 1.0 / 6));
  CHECK(entropy(uniform) == doctest::Approx(std::log(6.0)).epsilon(1e-12));
}
