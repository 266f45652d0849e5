#include <doctest.h>

#include <cmath>

#include "floodcast/errors.hpp"
#include "floodcast/nn/fcn.hpp"
#include "floodcast/tensor/grad_check.hpp"
#include "floodcast/tensor/ops.hpp"
#include "support.hpp"

using namespace floodcast;
using floodcast::test::random_tensor;

TEST_CASE("conv_block zero path") {
  ConvBlockParams p{Tensor(Shape{2, 3, 3}), Tensor(Shape{2}), Tensor(Shape{2}, 1.0), Tensor(Shape{2}),
                    BatchNormState::fresh(2)};
  RngState rng(1);
  Tape tape;
  ConvBlockVars v{tape.constant(p.kernels), tape.constant(p.bias), tape.constant(p.bn_gamma),
                  tape.constant(p.bn_beta)};
  const Tensor y = conv_block(v, p.bn, tape.constant(random_tensor({2, 3, 5}, rng)), Mode::Train).value();
  for (double x : y.storage()) CHECK(x == 0.0);
}

TEST_CASE("conv_block identity kernel in inference") {
  Tape tape;
  auto state = BatchNormState::fresh(1);
  ConvBlockVars v{tape.constant(Tensor(Shape{1, 1, 1}, 1.0)), tape.constant(Tensor(Shape{1})),
                  tape.constant(Tensor(Shape{1}, 1.0)), tape.constant(Tensor(Shape{1}))};
  const Tensor x(Shape{1, 1, 6}, {-2, -0.5, 0, 0.5, 1, 3});
  const Tensor y = conv_block(v, state, tape.constant(x), Mode::Infer).value();
  // Running variance 1 plus epsilon scales by 1/sqrt(1 + eps).
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(y[i] == doctest::Approx(std::max(x[i], 0.0) / std::sqrt(1.0 + kBatchNormEpsilon)).epsilon(1e-14));
  }
  CHECK(state.running_mean[0] == 0.0);
  CHECK(state.running_var[0] == 1.0);
}

TEST_CASE("conv_block gradients") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RngState rng(seed);
    auto p = init_conv_block(3, 4, 3, rng);
    p.bias = random_tensor({4}, rng);
    p.bn_beta = random_tensor({4}, rng);
    const Tensor X = random_tensor({2, 3, 8}, rng);
    auto f = [&](Tape& t, std::span<const Var> q) {
      auto state = BatchNormState::fresh(4);
      RngState r(seed + 20);
      auto y = conv_block(ConvBlockVars{q[0], q[1], q[2], q[3]}, state, q[4], Mode::Train);
      return sum(hadamard(y, t.constant(random_tensor(y.shape(), r))));
    };
    CHECK(grad_check(f, {p.kernels, p.bias, p.bn_gamma, p.bn_beta, X}, 1e-5) < 1e-4);
  }
}

TEST_CASE("conv_block preserves length and validates kernels") {
  RngState rng(2);
  auto p = init_conv_block(9, 16, 7, rng);
  Tape tape;
  ConvBlockVars v{tape.constant(p.kernels), tape.constant(p.bias), tape.constant(p.bn_gamma),
                  tape.constant(p.bn_beta)};
  CHECK(conv_block(v, p.bn, tape.constant(random_tensor({2, 9, 96}, rng)), Mode::Train).shape() == Shape{2, 16, 96});
  CHECK_THROWS_AS(init_conv_block(9, 16, 8, rng), ConfigError);
  for (double x : p.bn.running_var.storage()) CHECK(x >= 0.0);
}

TEST_CASE("global_avg_pool") {
  Tape tape;
  CHECK(global_avg_pool(tape.constant(Tensor(Shape{1, 2, 5}, 3.25))).value() == Tensor(Shape{1, 2}, 3.25));
  CHECK(global_avg_pool(tape.constant(Tensor(Shape{1, 1, 4}, {1, 2, 3, 4}))).value()[0] == 2.5);
  RngState rng(3);
  const Tensor X = random_tensor({3, 4, 11}, rng);
  const Tensor g = global_avg_pool(tape.constant(X)).value();
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t c = 0; c < 4; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < 11; ++t) s += X.at(b, c, t);
      CHECK(std::abs(g.at(b, c) * 11.0 - s) < 1e-12);
    }
}

TEST_CASE("dropout") {
  RngState rng(4);
  Tape tape;
  const Tensor X = random_tensor({4, 5}, rng);
  auto x = tape.constant(X);
  Tensor out = dropout(x, 0.5, Mode::Infer, rng).value();
  CHECK(out == X);
  out = dropout(x, 0.0, Mode::Train, rng).value();
  CHECK(out == X);
  CHECK_THROWS_AS(dropout(x, 1.0, Mode::Train, rng), ConfigError);

  RngState big(5);
  const Tensor y = dropout(tape.constant(Tensor(Shape{1000000}, 1.0)), 0.5, Mode::Train, big).value();
  double sum = 0.0;
  std::size_t zeros = 0, other = 0;
  for (double v : y.storage()) {
    sum += v;
    zeros += v == 0.0;
    other += v != 0.0 && v != 2.0;
  }
  CHECK(other == 0);
  CHECK(sum / 1e6 >= 0.99);
  CHECK(sum / 1e6 <= 1.01);
  CHECK(static_cast<double>(zeros) / 1e6 >= 0.497);
  CHECK(static_cast<double>(zeros) / 1e6 <= 0.503);
}

TEST_CASE("fcn branch shape, single dropout and deterministic inference") {
  RngState rng(6);
  std::vector<ConvBlockParams> blocks;
  const std::size_t ch[] = {128, 256, 128}, ks[] = {7, 5, 3};
  std::size_t in = 9;
  for (int i = 0; i < 3; ++i) {
    blocks.push_back(init_conv_block(in, ch[i], ks[i], rng));
    in = ch[i];
  }
  const Tensor X = random_tensor({2, 9, 96}, rng);
  auto run = [&](Mode mode, std::size_t* dropouts) {
    Tape tape;
    std::vector<ConvBlockVars> vars;
    std::vector<BatchNormState*> states;
    for (auto& b : blocks) {
      vars.push_back({tape.leaf(b.kernels), tape.leaf(b.bias), tape.leaf(b.bn_gamma), tape.leaf(b.bn_beta)});
      states.push_back(&b.bn);
    }
    RngState r(7);
    Tensor y = fcn_branch(vars, states, tape.constant(X), 0.5, mode, r).value();
    if (dropouts) {
      *dropouts = 0;
      for (std::size_t i = 0; i < tape.size(); ++i) *dropouts += tape.node(i).op == "dropout";
    }
    return y;
  };
  std::size_t n_dropout = 0;
  CHECK(run(Mode::Train, &n_dropout).shape() == Shape{2, 128});
  CHECK(n_dropout == 1);
  const Tensor a = run(Mode::Infer, nullptr), b = run(Mode::Infer, nullptr);
  CHECK(a == b);
}
