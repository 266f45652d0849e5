#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "floodcast/errors.hpp"
#include "floodcast/eval/metrics.hpp"
#include "floodcast/nn/loss.hpp"
#include "floodcast/nn/model.hpp"
#include "floodcast/nn/serialize.hpp"
#include "floodcast/nn/train.hpp"
#include "floodcast/tensor/binary_io.hpp"
#include "floodcast/tensor/grad_check.hpp"
#include "floodcast/tensor/ops.hpp"
#include "support.hpp"

using namespace floodcast;
using floodcast::test::random_tensor;
using floodcast::test::separable_toy;

namespace {

ModelConfig toy_config(Variant v = Variant::Hybrid) {
  ModelConfig c;
  c.variant = v;
  c.window = 12;
  c.hidden_size = 4;
  c.conv_channels = {4, 8, 4};
  c.kernel_sizes = {3, 3, 3};
  c.batch_size = 8;
  return c;
}

ModelParams randomized(const ModelConfig& cfg, std::uint64_t seed) {
  RngState rng(seed);
  auto p = init_model(cfg, rng);
  for (Tensor* t : parameter_tensors(p))
    for (auto& v : t->storage()) v += 0.3 * rng.normal();
  return p;
}

std::vector<int> labels_of(const Dataset& d) {
  std::vector<int> y;
  for (const auto& s : d) y.push_back(s.label);
  return y;
}

// Overlapping classes at 1 positive : `neg_per_pos` negatives.
Dataset noisy_imbalanced(std::size_t positives, std::size_t neg_per_pos, std::size_t window, std::uint64_t seed) {
  RngState rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < positives * (neg_per_pos + 1); ++i) {
    const int y = i % (neg_per_pos + 1) == 0 ? 1 : 0;
    Tensor f(Shape{kNumVariables, window});
    const double shift = y ? 0.6 : 0.0;
    for (auto& v : f.storage()) v = shift + rng.normal();
    d.push_back(Sample{f, y, "S", 0});
  }
  return d;
}

}  // namespace

TEST_CASE("forward produces distributions") {
  for (auto v : {Variant::Hybrid, Variant::FastGrnnOnly, Variant::FcnOnly}) {
    const auto cfg = toy_config(v);
    const auto p = randomized(cfg, 1);
    RngState rng(2);
    const Tensor P = predict_proba(p, cfg, random_tensor({5, 9, 12}, rng, -3, 3));
    CHECK(P.shape() == Shape{5, 2});
    for (std::size_t b = 0; b < 5; ++b) {
      CHECK(std::abs(P.at(b, 0) + P.at(b, 1) - 1.0) < 1e-12);
      CHECK(P.at(b, 1) > 0.0);
      CHECK(P.at(b, 1) < 1.0);
    }
  }
}

TEST_CASE("zero head gives uniform probabilities") {
  const auto cfg = toy_config();
  auto p = randomized(cfg, 3);
  p.head_w.fill(0.0);
  p.head_b.fill(0.0);
  RngState rng(4);
  const Tensor P = predict_proba(p, cfg, random_tensor({3, 9, 12}, rng));
  for (double v : P.storage()) CHECK(v == 0.5);
}

TEST_CASE("fastgrnn-only forward equals hand assembly") {
  const auto cfg = toy_config(Variant::FastGrnnOnly);
  const auto p = randomized(cfg, 5);
  RngState rng(6);
  const Tensor batch = random_tensor({2, 9, 12}, rng);
  const Tensor P = predict_proba(p, cfg, batch);
  for (std::size_t b = 0; b < 2; ++b) {
    Tensor x(Shape{9, 12});
    std::copy_n(batch.storage().begin() + b * 108, 108, x.storage().begin());
    const Tensor h = run_sequence(*p.fastgrnn, dimension_shuffle(x));
    double logit[2];
    for (std::size_t l = 0; l < 2; ++l) {
      logit[l] = p.head_b[l];
      for (std::size_t j = 0; j < 4; ++j) logit[l] += p.head_w.at(l, j) * h[j];
    }
    const double p1 = 1.0 / (1.0 + std::exp(logit[0] - logit[1]));
    CHECK(std::abs(P.at(b, 1) - p1) < 1e-12);
  }
}

TEST_CASE("variant heads see only their branch") {
  auto hybrid = toy_config(Variant::Hybrid), grnn = toy_config(Variant::FastGrnnOnly),
       fcn = toy_config(Variant::FcnOnly);
  CHECK(hybrid.head_inputs() == 4 + 4);
  CHECK(grnn.head_inputs() == 4);
  CHECK(fcn.head_inputs() == 4);
  RngState rng(1);
  CHECK(init_model(grnn, rng).fcn.empty());
  CHECK_FALSE(init_model(fcn, rng).fastgrnn.has_value());

  // The fcn-only output depends on the conv weights; the fastgrnn-only model
  // accepts the recurrent part of a hybrid model but not its conv blocks.
  auto p = randomized(fcn, 8);
  const Tensor batch = random_tensor({2, 9, 12}, rng);
  const Tensor a = predict_proba(p, fcn, batch);
  p.fcn[0].kernels[0] += 1.0;
  CHECK(predict_proba(p, fcn, batch) != a);

  const auto full = randomized(hybrid, 9);
  auto only = randomized(grnn, 9);
  only.fastgrnn = full.fastgrnn;
  CHECK_THROWS_AS(check_params(grnn, full), DimensionError);
  CHECK_NOTHROW(check_params(grnn, only));
}

TEST_CASE("full model gradient check") {
  auto cfg = toy_config();
  cfg.dropout_rate = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto layout = randomized(cfg, seed);
    RngState rng(seed + 100);
    const Tensor batch = random_tensor({2, 9, 12}, rng);
    const std::vector<int> y{1, 0};
    std::vector<Tensor> values;
    for (const Tensor* t : parameter_tensors(layout)) values.push_back(*t);
    values.push_back(batch);
    auto f = [&](Tape&, std::span<const Var> q) {
      ModelParams scratch = layout;
      const auto vars = vars_from_flat(layout, q.first(q.size() - 1));
      RngState r(0);
      return weighted_cross_entropy(forward(vars, scratch, cfg, q.back(), Mode::Train, r), y, 3.0);
    };
    CHECK(grad_check(f, values, 1e-5) < 1e-4);
  }
}

TEST_CASE("softmax probability is monotone in the logit difference") {
  const auto cfg = toy_config();
  auto p = randomized(cfg, 11);
  RngState rng(12);
  const Tensor batch = random_tensor({1, 9, 12}, rng);
  double prev = -1.0;
  for (int i = -40; i <= 40; ++i) {
    p.head_b[1] = 0.25 * i;
    const double v = predict_proba(p, cfg, batch).at(0, 1);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("weighted cross entropy values") {
  Tape tape;
  auto probs = tape.constant(Tensor::matrix(2, 2, {0, 1, 1, 0}));
  const std::vector<int> perfect{1, 0};
  CHECK(weighted_cross_entropy(probs, perfect, 1.0).value()[0] == 0.0);
  auto half = tape.constant(Tensor::matrix(1, 2, {0.5, 0.5}));
  const std::vector<int> one{1};
  CHECK(weighted_cross_entropy(half, one, 1.0).value()[0] == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(weighted_cross_entropy(half, one, 2.0).value()[0] == doctest::Approx(1.3863).epsilon(1e-4));
  CHECK(weighted_cross_entropy(half, one, 2.0).value()[0] == 2.0 * std::log(2.0));

  // Wrong with certainty: clamped, not infinite.
  auto wrong = tape.constant(Tensor::matrix(1, 2, {1, 0}));
  CHECK(weighted_cross_entropy(wrong, one, 1.0).value()[0] == doctest::Approx(-std::log(1e-12)));

  CHECK_THROWS(weighted_cross_entropy(half, one, 0.0));
  const std::vector<int> bad{2};
  CHECK_THROWS(weighted_cross_entropy(half, bad, 1.0));
}

TEST_CASE("weight one reduces to binary cross entropy") {
  RngState rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor P(Shape{6, 2});
    std::vector<int> y;
    double bce = 0.0;
    for (std::size_t b = 0; b < 6; ++b) {
      const double p = rng.uniform(0.01, 0.99);
      P.at(b, 0) = 1.0 - p;
      P.at(b, 1) = p;
      y.push_back(rng.uniform() < 0.5);
      bce += -(y.back() * std::log(p) + (1 - y.back()) * std::log(1.0 - p));
    }
    CHECK(weighted_cross_entropy_value(P, y, 1.0) == doctest::Approx(bce / 6.0).epsilon(1e-15));
  }
}

TEST_CASE("loss gradient") {
  RngState rng(4);
  Tensor P(Shape{4, 2});
  for (std::size_t b = 0; b < 4; ++b) {
    P.at(b, 1) = rng.uniform(0.1, 0.9);
    P.at(b, 0) = 1.0 - P.at(b, 1);
  }
  const std::vector<int> y{1, 0, 0, 1};
  auto f = [&](Tape&, std::span<const Var> q) { return weighted_cross_entropy(q[0], y, 4.0); };
  CHECK(grad_check(f, {P}, 1e-5) < 1e-6);
}

TEST_CASE("config validation and text round trip") {
  ModelConfig c = toy_config(Variant::FcnOnly);
  c.loss_weight = 12.5;
  c.sparsity = {0.5, 0.25};
  CHECK(ModelConfig::from_text(c.to_text()) == c);
  CHECK(c.to_text().find("variant=fcn-only") != std::string::npos);

  auto bad = [](auto mutate) {
    ModelConfig m;
    mutate(m);
    return m;
  };
  CHECK_THROWS_AS(bad([](ModelConfig& m) { m.patience = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](ModelConfig& m) { m.loss_weight = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](ModelConfig& m) { m.dropout_rate = 1.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](ModelConfig& m) { m.num_classes = 3; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](ModelConfig& m) { m.kernel_sizes = {8, 5, 3}; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](ModelConfig& m) { m.hidden_size = 0; }).validate(), ConfigError);
  ModelConfig m;
  CHECK(apply_model_key(m, "hidden_size", "16"));
  CHECK(m.hidden_size == 16);
  CHECK_FALSE(apply_model_key(m, "no_such_key", "1"));
  CHECK_THROWS_AS(apply_model_key(m, "hidden_size", "abc"), ConfigError);
}

TEST_CASE("input scaler") {
  Dataset d = separable_toy(9, 12, 2, 1);
  for (auto& s : d)
    for (std::size_t t = 0; t < 12; ++t) s.features.at(3, t) = 7.0;
  const auto sc = InputScaler::fit(d);
  CHECK(sc.scale[3] == 1.0);
  CHECK(sc.shift[3] == 7.0);
  CHECK(InputScaler::identity(9).is_identity());
  CHECK_FALSE(sc.is_identity());
}

TEST_CASE("adam first step") {
  AdamConfig a;
  Tensor w = Tensor::vector({1.0, -2.0});
  const Tensor g = Tensor::vector({0.5, -3.0});
  Adam opt(a, {&w});
  opt.step({&w}, {&g});
  // Bias-corrected moments equal g and g^2 after one step.
  CHECK(w[0] == doctest::Approx(1.0 - 1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(-2.0 + 1e-3 * 3.0 / (3.0 + 1e-8)).epsilon(1e-14));
  CHECK(opt.steps() == 1);
}

TEST_CASE("training configuration errors") {
  auto cfg = toy_config();
  const Dataset d = separable_toy(9, 12, 2, 1);
  cfg.patience = 0;
  CHECK_THROWS_AS(train(cfg, d, d), ConfigError);
  cfg.patience = 5;
  CHECK_THROWS_AS(train(cfg, Dataset{}, d), ConfigError);
  CHECK_THROWS_AS(train(cfg, d, Dataset{}), ConfigError);
  CHECK_THROWS_AS(train(cfg, separable_toy(9, 10, 2, 1), d), DimensionError);
}

TEST_CASE("non-finite data is reported as divergence") {
  auto cfg = toy_config();
  Dataset d = separable_toy(9, 12, 2, 1);
  d[0].features[5] = std::numeric_limits<double>::quiet_NaN();
  try {
    train(cfg, d, separable_toy(9, 12, 1, 2));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() == 1);
    CHECK(e.batch() == 1);
  }
}

TEST_CASE("separable data is learned and early stopping keeps the best epoch") {
  auto cfg = toy_config();
  cfg.hidden_size = 8;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  const Dataset d = separable_toy(9, 12, 8, 3);
  const Dataset val = separable_toy(9, 12, 2, 4);
  const auto r = train(cfg, d, val);
  CHECK(evaluate_loss(r.params, cfg, d).accuracy == 1.0);
  CHECK(r.report.stopped_epoch <= cfg.max_epochs);

  cfg.max_epochs = 40;
  cfg.patience = 3;
  const auto s = train(cfg, d, noisy_imbalanced(4, 1, 12, 9));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : s.report.epochs) best = std::min(best, e.val_loss);
  CHECK(s.report.best_val_loss == best);
  CHECK(evaluate_loss(s.params, cfg, noisy_imbalanced(4, 1, 12, 9)).loss == doctest::Approx(best).epsilon(1e-12));
  for (std::size_t i = 0; i < s.report.epochs.size(); ++i) CHECK(s.report.epochs[i].epoch == i + 1);
  CHECK(s.params.fastgrnn->zeta() > 0.0);
  CHECK(s.params.fastgrnn->zeta() < 1.0);
}

TEST_CASE("training is deterministic and resumable") {
  auto cfg = toy_config();
  cfg.max_epochs = 3;
  const Dataset d = separable_toy(9, 12, 4, 3);
  const auto a = train(cfg, d, d);
  const auto b = train(cfg, d, d);
  CHECK(encode_model({cfg, a.params}) == encode_model({cfg, b.params}));

  TrainOptions opt;
  opt.initial = &a.params;
  opt.epoch_offset = a.report.stopped_epoch;
  opt.fit_scaler = false;
  const auto c = train(cfg, d, d, opt);
  CHECK(c.report.epochs.front().epoch == a.report.stopped_epoch + 1);
  CHECK(c.params.scaler.shift == a.params.scaler.shift);
}

TEST_CASE("sparsity budget holds after training") {
  auto cfg = toy_config();
  cfg.sparsity = {0.25, 0.25};
  cfg.max_epochs = 5;
  const auto r = train(cfg, separable_toy(9, 12, 4, 3), separable_toy(9, 12, 1, 4));
  for (const Tensor* m : {&r.params.fastgrnn->W, &r.params.fastgrnn->U}) {
    std::size_t nnz = 0;
    for (double v : m->storage()) nnz += v != 0.0;
    CHECK(nnz <= static_cast<std::size_t>(std::ceil(0.25 * static_cast<double>(m->numel()))));
  }
}

TEST_CASE("larger weight raises recall on imbalanced data") {
  auto cfg = toy_config();
  cfg.max_epochs = 15;
  cfg.patience = 15;
  const Dataset tr = noisy_imbalanced(12, 4, 12, 1), val = noisy_imbalanced(4, 4, 12, 2),
                te = noisy_imbalanced(20, 4, 12, 3);
  const auto y = labels_of(te);
  int satisfied = 0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    cfg.seed = run;
    double recall[2];
    int k = 0;
    for (double w : {1.0, 100.0}) {
      cfg.loss_weight = w;
      const auto r = train(cfg, tr, val);
      recall[k++] = precision_recall(confusion_at(predict_scores(r.params, cfg, te), y, 0.5)).recall;
    }
    satisfied += recall[1] >= recall[0];
  }
  CHECK(satisfied > 5);
}

TEST_CASE("model files round trip bit for bit") {
  const auto cfg = toy_config(Variant::FcnOnly);
  SavedModel m{cfg, randomized(cfg, 7), 0.41, 12};
  m.params.scaler = InputScaler::fit(separable_toy(9, 12, 2, 5));
  m.params.fcn[1].bn.running_var[2] = 3.25;
  const auto bytes = encode_model(m);
  const auto back = decode_model(bytes);
  CHECK(encode_model(back) == bytes);
  CHECK(back.config == cfg);
  CHECK(back.config.variant == Variant::FcnOnly);
  CHECK(back.threshold == 0.41);
  CHECK(back.trained_epochs == 12);
  CHECK(back.params.fcn[1].bn.running_var[2] == 3.25);

  const auto dir = std::filesystem::temp_directory_path() / "floodcast_test_model";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "m.fcm").string();
  save_model(m, path);
  CHECK(encode_model(load_model(path)) == bytes);

  RngState rng(8);
  const Tensor batch = random_tensor({100, 9, 12}, rng, -2, 2);
  CHECK(predict_proba(back.params, back.config, batch) == predict_proba(m.params, m.config, batch));
}

TEST_CASE("corrupt model files fail loudly") {
  const auto cfg = toy_config();
  const auto bytes = encode_model({cfg, randomized(cfg, 1)});
  auto kind_of = [](std::vector<std::uint8_t> b) {
    try {
      decode_model(b);
    } catch (const LoadError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  CHECK(kind_of({bytes.begin(), bytes.begin() + bytes.size() / 2}) == static_cast<int>(LoadError::Kind::Truncated));
  CHECK(kind_of({bytes.begin(), bytes.begin() + 5}) == static_cast<int>(LoadError::Kind::Truncated));
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK(kind_of(flipped) == static_cast<int>(LoadError::Kind::ChecksumMismatch));
  auto magic = bytes;
  magic[0] = 'X';
  CHECK(kind_of(magic) == static_cast<int>(LoadError::Kind::BadMagic));
  auto version = bytes;
  version[8] = 99;
  CHECK(kind_of(version) == static_cast<int>(LoadError::Kind::VersionMismatch));

  // A file whose config promises a different shape than its blocks hold.
  // Encoded with hidden_size 5, then the config text is edited to say 4 and the checksum redone.
  auto other = cfg;
  other.hidden_size = 5;
  auto lie = encode_model({other, randomized(other, 1)});
  const std::string from = "hidden_size=5", to = "hidden_size=4";
  auto at = std::search(lie.begin(), lie.end(), from.begin(), from.end());
  REQUIRE(at != lie.end());
  std::copy(to.begin(), to.end(), at);
  lie.resize(lie.size() - 8);
  BinaryWriter w;
  w.raw(lie);
  w.seal();
  CHECK(kind_of(w.bytes()) == static_cast<int>(LoadError::Kind::ShapeInconsistent));
  CHECK_THROWS_AS(load_model("/nonexistent/dir/model.fcm"), IoError);
}
