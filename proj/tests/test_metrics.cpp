#include <doctest.h>

#include <cmath>

#include "promissing/errors.hpp"
#include "promissing/metrics.hpp"
#include "test_util.hpp"

using namespace promissing;

namespace {

// Exhaustive pair count.
double auc_oracle(const std::vector<double>& s, const std::vector<double>& y) {
  double num = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1.0 || y[j] != 0.0) continue;
      pairs += 1;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return num / pairs;
}

}  // namespace

TEST_CASE("auc examples") {
  const std::vector<double> y{0, 0, 1, 1};
  CHECK(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y) == 1.0);
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y) == 0.0);
  CHECK(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y) == 0.5);
  CHECK(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y) == doctest::Approx(0.75));
}

TEST_CASE("auc matches the pair-count oracle") {
  auto g = testutil::rng(61);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + g() % 40;
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(g() % 7);  // plenty of ties
      y[i] = static_cast<double>(i % 2);
    }
    CHECK(auc(s, y) == doctest::Approx(auc_oracle(s, y)).epsilon(1e-12));
    // auc(-s) = 1 - auc(s)
    std::vector<double> neg(s);
    for (auto& v : neg) v = -v;
    CHECK(auc(neg, y) == doctest::Approx(1.0 - auc(s, y)).epsilon(1e-12));
  }
}

TEST_CASE("auc errors") {
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), MetricError);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1}, std::vector<double>{1, 0}), MetricError);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, std::nan("")}, std::vector<double>{1, 0}), MetricError);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<double>{2, 0}), MetricError);
}

TEST_CASE("smse") {
  const std::vector<double> t{1, 2, 3, 4};
  CHECK(smse(t, t) == 0.0);
  // predicting the mean gives 1
  CHECK(smse(std::vector<double>(4, 2.5), t) == doctest::Approx(1.0));
  // population variance 1.25, mse 1
  CHECK(smse(std::vector<double>{2, 3, 4, 5}, t) == doctest::Approx(0.8));
  CHECK_THROWS_AS(smse(std::vector<double>{1}, std::vector<double>{1}), MetricError);
  CHECK_THROWS_AS(smse(std::vector<double>{1, 2}, std::vector<double>{3, 3}), MetricError);
}

TEST_CASE("rank-sum test") {
  SUBCASE("hand example without ties") {
    const std::vector<double> a{1, 2, 3, 4, 5}, b{6, 7, 8, 9, 10};
    const auto r = rank_sum_test(a, b);
    CHECK(r.u == 0.0);
    // mu 12.5, sigma sqrt(25*11/12); |0-12.5|-0.5 = 12
    const double z = 12.0 / std::sqrt(25.0 * 11.0 / 12.0);
    CHECK(r.z == doctest::Approx(z));
    CHECK(r.p == doctest::Approx(std::erfc(z / std::sqrt(2.0))));
    CHECK(r.p < 0.05);
  }
  SUBCASE("identical samples") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    CHECK(rank_sum_test(a, a).p == 1.0);
  }
  SUBCASE("symmetry and range") {
    auto g = testutil::rng(62);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> a(5 + g() % 10), b(5 + g() % 10);
      for (auto& v : a) v = static_cast<double>(g() % 5);
      for (auto& v : b) v = static_cast<double>(g() % 6);
      const auto ab = rank_sum_test(a, b), ba = rank_sum_test(b, a);
      CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));
      CHECK(ab.u + ba.u == doctest::Approx(static_cast<double>(a.size() * b.size())));
      CHECK(ab.p > 0.0);
      CHECK(ab.p <= 1.0);
    }
  }
  CHECK_THROWS_AS(rank_sum_test(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 4, 5}),
                  MetricError);
}

TEST_CASE("evaluate and report validation") {
  const std::vector<double> y{0, 1, 0, 1};
  const auto r = evaluate(MetricKind::kAuc, std::vector<double>{0.1, 0.9, 0.2, 0.8}, y);
  CHECK(r.value == 1.0);
  CHECK(r.n == 4);
  CHECK_NOTHROW(r.validate());
  EvalReport bad;
  bad.kind = MetricKind::kAuc;
  bad.value = 1.5;
  CHECK_THROWS_AS(bad.validate(), MetricError);
  CHECK(parse_metric_kind(to_string(MetricKind::kSmse)) == MetricKind::kSmse);
}
