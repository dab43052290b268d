#include <cmath>
#include <limits>

#include "doctest.h"
#include "dbaug/error.hpp"
#include "dbaug/numerics/tape.hpp"
#include "gradcases.hpp"

namespace nx = dbaug::nx;
using nx::Tape;
using nx::Tensor;

TEST_SUITE("numerics") {
  TEST_CASE("forward examples") {
    Tape t;
    auto s = nx::softmax(t.constant(Tensor::vector({0.0, 0.0})));
    CHECK(s.value()[0] == doctest::Approx(0.5));
    CHECK(s.value()[1] == doctest::Approx(0.5));

    auto eye = t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    auto col = t.constant(Tensor::matrix(2, 1, {3, 4}));
    auto prod = nx::matmul(eye, col);
    CHECK(prod.shape() == nx::Shape{2, 1});
    CHECK(prod.value()[0] == 3.0);
    CHECK(prod.value()[1] == 4.0);

    auto ls = nx::log_softmax(t.constant(Tensor::vector({1, 1, 1})));
    for (double v : ls.value().values()) CHECK(v == doctest::Approx(-std::log(3.0)).epsilon(1e-12));
  }

  TEST_CASE("backward examples") {
    Tape t;
    auto x = t.variable(Tensor::vector({1.0, 2.0}));
    t.backward(nx::sum(nx::mul(x, x)));
    auto g = t.grad(x);
    CHECK(g[0] == doctest::Approx(2.0));
    CHECK(g[1] == doctest::Approx(4.0));

    // softmax cross-entropy at logits [0, 0], class 0: q - onehot.
    Tape t2;
    auto logits = t2.variable(Tensor::matrix(1, 2, {0.0, 0.0}));
    auto target = t2.constant(Tensor::matrix(1, 2, {1.0, 0.0}));
    t2.backward(nx::scale(nx::sum(nx::mul(target, nx::log_softmax(logits))), -1.0));
    auto gl = t2.grad(logits);
    CHECK(gl[0] == doctest::Approx(-0.5));
    CHECK(gl[1] == doctest::Approx(0.5));
  }

  TEST_CASE("shape errors name the op and both shapes") {
    Tape t;
    auto a = t.constant(Tensor({2, 3}));
    auto b = t.constant(Tensor({2, 3}));
    try {
      nx::matmul(a, b);
      FAIL("expected ShapeError");
    } catch (const dbaug::ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("matmul") != std::string::npos);
      CHECK(msg.find(nx::shape_str({2, 3})) != std::string::npos);
    }
    CHECK_THROWS_AS(nx::add(a, t.constant(Tensor({3, 2}))), dbaug::ShapeError);
    CHECK_THROWS_AS(nx::add_row(a, t.constant(Tensor({2}))), dbaug::ShapeError);
    std::vector<nx::Var> parts{a, t.constant(Tensor({3, 3}))};
    CHECK_THROWS_AS(nx::concat(parts, 1), dbaug::ShapeError);
    CHECK_THROWS_AS(nx::embedding(a, std::vector<std::size_t>{5}), dbaug::Error);
  }

  TEST_CASE("non-finite values are rejected") {
    Tape t;
    Tensor bad = Tensor::vector({1.0, std::numeric_limits<double>::quiet_NaN()});
    CHECK_THROWS_AS(t.constant(bad), dbaug::NumericError);
    CHECK_THROWS_AS(t.variable(bad), dbaug::NumericError);
    auto big = t.constant(Tensor::vector({1e300}));
    CHECK_THROWS_AS(nx::mul(big, big), dbaug::NumericError);
  }

  TEST_CASE("non-scalar backward is an error") {
    Tape t;
    auto x = t.variable(Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(t.backward(nx::tanh(x)), dbaug::Error);
  }

  TEST_CASE("disconnected input gets a zero gradient") {
    Tape t;
    auto x = t.variable(Tensor::matrix(2, 2, {1, 2, 3, 4}));
    auto unused = t.variable(Tensor::matrix(3, 1, {5, 6, 7}));
    t.backward(nx::sum(x));
    auto g = t.grad(unused);
    CHECK(g.shape() == nx::Shape{3, 1});
    for (double v : g.values()) CHECK(v == 0.0);
  }

  TEST_CASE("backward is bit-deterministic") {
    std::mt19937_64 rng(3);
    auto gc = oracle::make_grad_case(0, rng);
    auto run = [&] {
      Tape t;
      std::vector<nx::Var> vars;
      for (const auto& in : gc.inputs) vars.push_back(t.variable(in));
      t.backward(gc.f(t, vars));
      std::vector<Tensor> g;
      for (auto v : vars) g.push_back(t.grad(v));
      return g;
    };
    CHECK(run() == run());
  }

  TEST_CASE("every primitive matches finite differences") {
    std::mt19937_64 rng(11);
    for (std::size_t i = 0; i < 34; ++i) {
      auto gc = oracle::make_grad_case(i, rng);
      CAPTURE(gc.name);
      CHECK(oracle::gradient_error(gc.f, gc.inputs) < 1e-4);
    }
  }

  TEST_CASE("plain kernels agree with the recorded ones") {
    std::vector<double> x{0.3, -1.2, 2.5, 0.0};
    Tape t;
    auto s = nx::softmax(t.constant(Tensor::vector(x)));
    auto plain = nx::softmax(x);
    auto ref = oracle::softmax(x);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(plain[i] == doctest::Approx(ref[i]).epsilon(1e-14));
      CHECK(s.value()[i] == doctest::Approx(ref[i]).epsilon(1e-14));
      sum += plain[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    auto ls = nx::log_softmax(x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(ls[i] == doctest::Approx(std::log(ref[i])));
  }
}
