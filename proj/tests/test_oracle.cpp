#include <doctest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "crseg/oracle.hpp"
#include "crseg/tensor.hpp"
#include "oracle_helpers.hpp"

using namespace crseg;

namespace {

ProbMap two_class_map(float p_first) {
  ProbMap m(1, 1, 2);
  m.data[0] = p_first;
  m.data[1] = 1.0f - p_first;
  return m;
}

}  // namespace

TEST_CASE("query counter counts and enforces its limit") {
  QueryCounter c;
  CHECK(c.count() == 0);
  c.charge();
  c.charge();
  CHECK(c.count() == 2);
  c.reset();
  CHECK(c.count() == 0);

  QueryCounter capped(std::uint64_t{3});
  capped.charge();
  capped.charge();
  capped.charge();
  CHECK(capped.count() == 3);
  CHECK_THROWS_AS(capped.charge(), QueryBudgetExhausted);
  CHECK(capped.count() == 3);  // the failed charge never lands
}

TEST_CASE("query counter is safe under concurrent charges") {
  QueryCounter capped(std::uint64_t{1000});
  std::vector<std::thread> workers;
  std::atomic<int> throws{0};
  for (int t = 0; t < 4; ++t)
    workers.emplace_back([&] {
      for (int i = 0; i < 400; ++i) {
        try {
          capped.charge();
        } catch (const QueryBudgetExhausted&) {
          ++throws;
        }
      }
    });
  for (auto& w : workers) w.join();
  CHECK(capped.count() == 1000);
  CHECK(throws.load() == 600);
}

TEST_CASE("with_counter meters both views") {
  testoracle::ConstantOracle base(two_class_map(0.7f));
  auto wrapped = with_counter(base, std::nullopt);
  ImageTensor x(1, 1, 2, 0.5f);
  wrapped->predict(x);
  wrapped->predict(x);
  CHECK(wrapped->queries().count() == 2);
  CHECK(base.queries().count() == 2);
  base.predict(x);  // direct use only shows up on the base
  CHECK(wrapped->queries().count() == 2);
  CHECK(base.queries().count() == 3);
}

TEST_CASE("capped wrapper refuses before touching the base oracle") {
  testoracle::ConstantOracle base(two_class_map(0.7f));
  auto wrapped = with_counter(base, std::uint64_t{2});
  ImageTensor x(1, 1, 2, 0.5f);
  wrapped->predict(x);
  wrapped->predict(x);
  CHECK_THROWS_AS(wrapped->predict(x), QueryBudgetExhausted);
  CHECK(wrapped->queries().count() == 2);
  CHECK(base.queries().count() == 2);  // the refused call never reached it
}

TEST_CASE("attack_loss is one query of clipped cross entropy") {
  // Prediction is constant, so the loss is known exactly regardless of delta.
  float p = 0.25f;
  testoracle::ConstantOracle oracle(two_class_map(p));
  ImageTensor x(1, 1, 2);
  x.data = {0.9f, 0.1f};
  LabelMap y(1, 1, 0);
  std::vector<double> delta{0.5, -0.2};

  double loss = attack_loss(oracle, x, delta, y);
  CHECK(oracle.queries().count() == 1);
  CHECK(loss == doctest::Approx(-std::log(static_cast<double>(p))).epsilon(1e-6));

  WeightMap w;
  w.height = 1;
  w.width = 1;
  w.weights = {0.5};
  double wloss = attack_loss(oracle, x, delta, y, &w);
  CHECK(oracle.queries().count() == 2);
  CHECK(wloss == doctest::Approx(0.5 * loss).epsilon(1e-9));
}

TEST_CASE("attack_loss clips the probe point into the image box") {
  // A linear-logit model sees the clipped image, so a huge delta saturates at x=1.
  std::vector<double> w0{4.0};
  std::vector<double> w1{-4.0};
  testoracle::LinearLogitOracle oracle(w0, w1);
  ImageTensor x(1, 1, 1, 0.5f);
  LabelMap y(1, 1, 0);
  std::vector<double> big{100.0};
  double loss_big = attack_loss(oracle, x, big, y);

  ImageTensor saturated(1, 1, 1, 1.0f);
  ProbMap ref = oracle.eval(saturated);
  CHECK(loss_big == doctest::Approx(-std::log(static_cast<double>(ref.data[0]))).epsilon(1e-6));
}

TEST_CASE("attack_loss validates the delta length") {
  testoracle::ConstantOracle oracle(two_class_map(0.5f));
  ImageTensor x(1, 1, 2, 0.5f);
  LabelMap y(1, 1, 0);
  std::vector<double> wrong{0.1};
  CHECK_THROWS(attack_loss(oracle, x, wrong, y));
}
