#include <doctest.h>

#include <cmath>
#include <limits>

#include "gmc/model.hpp"
#include "gmc/rng.hpp"
#include "support.hpp"

using namespace gmc;

namespace {

ArchSpec make_arch(std::size_t in, std::vector<std::size_t> hidden,
                   std::size_t classes) {
  return ArchSpec{in, std::move(hidden), classes};
}

WeightedDataset random_dataset(const ArchSpec& arch, Eigen::Index n,
                               std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(arch.input_dim));
  std::vector<int> y;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    y.push_back(static_cast<int>(rng.below(arch.num_classes)));
  }
  return WeightedDataset::unit_weights(std::move(x), std::move(y));
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("parameter count for 4-3-2 architecture") {
  const auto arch = make_arch(4, {3}, 2);
  CHECK(arch.param_count() == 23);  // (4*3+3) + (3*2+2)
  CHECK(init_params(arch, {}).values.size() == 23);
}

TEST_CASE("initialization is deterministic in the seed") {
  const auto arch = make_arch(6, {8, 4}, 3);
  for (InitFamily family : {InitFamily::he_uniform, InitFamily::he_normal}) {
    const InitSpec init{family, 1.3, 99};
    const ParamVector a = init_params(arch, init);
    const ParamVector b = init_params(arch, init);
    CHECK(a.values == b.values);
    const ParamVector c = init_params(arch, {family, 1.3, 100});
    CHECK(a.values != c.values);
  }
}

TEST_CASE("scale zero gives all-zero parameters") {
  const auto arch = make_arch(5, {7}, 2);
  const ParamVector p = init_params(arch, {InitFamily::he_uniform, 0.0, 1});
  CHECK(p.values.isZero(0.0));
}

TEST_CASE("biases are zero, weights bounded by the He bound") {
  const auto arch = make_arch(10, {16}, 4);
  const double scale = 0.5;
  const ParamVector p = init_params(arch, {InitFamily::he_uniform, scale, 7});
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    const double bound = scale * std::sqrt(6.0 / static_cast<double>(arch.fan_in(l)));
    for (std::size_t i = 0; i < arch.fan_in(l) * arch.fan_out(l); ++i) {
      const double w = p.values(static_cast<Eigen::Index>(arch.weight_offset(l) + i));
      CHECK(std::abs(w) <= bound);
    }
    for (std::size_t i = 0; i < arch.fan_out(l); ++i)
      CHECK(p.values(static_cast<Eigen::Index>(arch.bias_offset(l) + i)) == 0.0);
  }
}

TEST_CASE("zero parameters produce zero logits") {
  const auto arch = make_arch(3, {5}, 4);
  ParamVector p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.param_count())), arch};
  const Eigen::MatrixXd logits = forward(p, Eigen::MatrixXd::Random(6, 3));
  CHECK(logits.rows() == 6);
  CHECK(logits.cols() == 4);
  CHECK(logits.isZero(0.0));
}

TEST_CASE("hand-computed one-hidden-unit network") {
  // x = [1], W1 = [2], b1 = 0, W2 = [[1], [-1]], b2 = 0 -> logits (2, -2)
  const auto arch = make_arch(1, {1}, 2);
  ParamVector p{Eigen::VectorXd::Zero(6), arch};
  p.values << 2.0, 0.0, 1.0, -1.0, 0.0, 0.0;
  Eigen::MatrixXd x(1, 1);
  x << 1.0;
  const Eigen::MatrixXd logits = forward(p, x);
  CHECK(logits(0, 0) == doctest::Approx(2.0));
  CHECK(logits(0, 1) == doctest::Approx(-2.0));
}

TEST_CASE("dimension mismatch is rejected") {
  const auto arch = make_arch(4, {3}, 2);
  const ParamVector p = init_params(arch, {});
  CHECK_THROWS_AS(forward(p, Eigen::MatrixXd::Random(2, 5)), ConfigError);
}

TEST_CASE("uniform prediction loses ln(2) on two classes") {
  const auto arch = make_arch(3, {2}, 2);
  ParamVector p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.param_count())), arch};
  const auto [loss, grad] = loss_and_grad(p, Eigen::Vector3d(1, 2, 3), 0, 1.0);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(grad.size() == p.values.size());
}

TEST_CASE("analytic gradient matches central finite differences") {
  const auto arch = make_arch(4, {6, 5}, 3);
  const ParamVector p = init_params(arch, {InitFamily::he_uniform, 1.0, 21});
  Rng rng(77);
  Eigen::VectorXd x(4);
  for (Eigen::Index i = 0; i < 4; ++i) x(i) = rng.normal();
  const int label = 2;

  const auto [loss, grad] = loss_and_grad(p, x, label, 1.0);
  (void)loss;
  const auto f = [&](const Eigen::VectorXd& theta) {
    return loss_and_grad(ParamVector{theta, arch}, x, label, 1.0).first;
  };
  const Eigen::VectorXd fd = oracle::fd_gradient(f, p.values, 1e-5);
  CHECK(oracle::max_relative_error(grad, fd) < 1e-4);
}

TEST_CASE("loss and gradient scale linearly in the weight") {
  const auto arch = make_arch(3, {4}, 3);
  const ParamVector p = init_params(arch, {InitFamily::he_normal, 1.0, 5});
  const Eigen::Vector3d x(0.3, -1.2, 0.7);
  const auto [l1, g1] = loss_and_grad(p, x, 1, 1.0);
  const auto [l2, g2] = loss_and_grad(p, x, 1, 2.0);
  CHECK(l2 == 2.0 * l1);  // exact: scaling by 2 is lossless
  CHECK(g2 == 2.0 * g1);
}

TEST_CASE("per-example gradients") {
  const auto arch = make_arch(4, {5}, 3);
  const ParamVector p = init_params(arch, {InitFamily::he_uniform, 1.0, 3});

  SUBCASE("duplicate rows give identical gradients") {
    WeightedDataset d = random_dataset(arch, 3, 11);
    d.features.row(2) = d.features.row(0);
    d.labels[2] = d.labels[0];
    const auto grads = per_example_grads(p, d, false);
    CHECK(grads[0] == grads[2]);
  }

  SUBCASE("sum of per-example gradients equals the batch gradient") {
    WeightedDataset d = random_dataset(arch, 7, 12);
    const auto grads = per_example_grads(p, d, false);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(p.values.size());
    for (const auto& g : grads) sum += g;

    std::vector<Eigen::Index> rows(7);
    std::iota(rows.begin(), rows.end(), 0);
    const auto [loss, batch_grad] = weighted_batch_grad(p, d, rows);
    (void)loss;
    // batch gradient is normalized by the weight sum (= 7 here)
    CHECK((sum / 7.0 - batch_grad).norm() < 1e-12 * std::max(1.0, sum.norm()));
  }

  SUBCASE("empty dataset gives an empty list") {
    WeightedDataset d;
    d.features.resize(0, 4);
    d.weights.resize(0);
    CHECK(per_example_grads(p, d, false).empty());
  }

  SUBCASE("weights flag applies dataset weights") {
    WeightedDataset d = random_dataset(arch, 2, 13);
    d.weights << 4.0, 0.5;  // powers of two: scaling is exact
    const auto unweighted = per_example_grads(p, d, false);
    const auto weighted = per_example_grads(p, d, true);
    CHECK(weighted[0] == 4.0 * unweighted[0]);
    CHECK(weighted[1] == 0.5 * unweighted[1]);
  }
}

TEST_CASE("last-layer gradients") {
  SUBCASE("equal the last-layer slice of full backprop") {
    const auto arch = make_arch(5, {6, 4}, 3);
    const ParamVector p = init_params(arch, {InitFamily::he_uniform, 1.0, 31});
    const WeightedDataset d = random_dataset(arch, 6, 32);
    const auto fast = last_layer_grads(p, d);
    const auto full = per_example_grads(p, d, false);
    const std::size_t off = arch.weight_offset(arch.layer_count() - 1);
    const std::size_t len = arch.fan_in(2) * arch.fan_out(2);
    for (std::size_t i = 0; i < fast.size(); ++i) {
      const Eigen::VectorXd slice =
          full[i].segment(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(len));
      CHECK((fast[i] - slice).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  SUBCASE("uniform softmax minus one-hot at zero logits") {
    // First layer passes a positive value through; output weights zero.
    const auto arch = make_arch(1, {2}, 2);
    ParamVector p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.param_count())), arch};
    p.values(0) = 1.0;  // W1 = [1; 0]
    WeightedDataset d = WeightedDataset::unit_weights(
        Eigen::MatrixXd::Constant(1, 1, 3.0), {0});
    const auto grads = last_layer_grads(p, d);
    // delta = (0.5, 0.5) - (1, 0) = (-0.5, 0.5); h = (3, 0)
    CHECK(grads[0](0) == doctest::Approx(-1.5));
    CHECK(grads[0](1) == doctest::Approx(0.0));
    CHECK(grads[0](2) == doctest::Approx(1.5));
    CHECK(grads[0](3) == doctest::Approx(0.0));
  }

  SUBCASE("one-hot penultimate activation touches a single column") {
    const auto arch = make_arch(2, {3}, 2);
    ParamVector p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.param_count())), arch};
    // W1 row 1 = (1, 0): unit 1 fires alone on x = (2, 0)
    p.values(2) = 1.0;
    WeightedDataset d = WeightedDataset::unit_weights(
        (Eigen::MatrixXd(1, 2) << 2.0, 0.0).finished(), {1});
    const auto grads = last_layer_grads(p, d);
    // C x H = 2 x 3 row-major; only column 1 is nonzero
    for (int c = 0; c < 2; ++c)
      for (int h = 0; h < 3; ++h) {
        const double v = grads[0](c * 3 + h);
        if (h == 1) CHECK(v != 0.0);
        else CHECK(v == 0.0);
      }
  }
}

TEST_CASE("training") {
  const auto arch = make_arch(2, {16}, 2);

  SUBCASE("zero epochs is a no-op") {
    const ParamVector p = init_params(arch, {InitFamily::he_uniform, 1.0, 8});
    TrainConfig cfg;
    cfg.epochs = 0;
    const WeightedDataset d = random_dataset(arch, 10, 40);
    const ParamVector trained = train(p, d, cfg);
    CHECK(trained.values == p.values);
  }

  SUBCASE("separable blobs reach training accuracy 1.0") {
    Rng rng(41);
    Eigen::MatrixXd x(60, 2);
    std::vector<int> y;
    for (Eigen::Index i = 0; i < 60; ++i) {
      const int c = i < 30 ? 0 : 1;
      x(i, 0) = (c == 0 ? -2.0 : 2.0) + 0.3 * rng.normal();
      x(i, 1) = (c == 0 ? 1.0 : -1.0) + 0.3 * rng.normal();
      y.push_back(c);
    }
    const WeightedDataset d = WeightedDataset::unit_weights(x, y);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.step_size = 1e-2;
    cfg.minibatch = 20;
    cfg.seed = 4;
    const ParamVector trained =
        train(init_params(arch, {InitFamily::he_uniform, 1.0, 9}), d, cfg);
    const Eigen::MatrixXd logits = forward(trained, x);
    int correct = 0;
    for (Eigen::Index i = 0; i < 60; ++i)
      if ((logits(i, 1) > logits(i, 0)) == (y[static_cast<std::size_t>(i)] == 1))
        ++correct;
    CHECK(correct == 60);
  }

  SUBCASE("all weight on one example fits that example") {
    WeightedDataset d = random_dataset(arch, 5, 42);
    d.weights.setZero();
    d.weights(2) = 1.0;
    TrainConfig cfg;
    cfg.epochs = 80;
    cfg.step_size = 1e-2;
    cfg.seed = 5;
    const ParamVector trained =
        train(init_params(arch, {InitFamily::he_uniform, 1.0, 10}), d, cfg);
    const Eigen::MatrixXd logits = forward(trained, d.features.row(2));
    Eigen::Index pred;
    logits.row(0).maxCoeff(&pred);
    CHECK(static_cast<int>(pred) == d.labels[2]);
  }

  SUBCASE("training is deterministic") {
    const WeightedDataset d = random_dataset(arch, 25, 43);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.minibatch = 8;
    cfg.seed = 77;
    const ParamVector p = init_params(arch, {InitFamily::he_normal, 1.0, 11});
    const ParamVector a = train(p, d, cfg);
    const ParamVector b = train(p, d, cfg);
    CHECK(a.values == b.values);
  }

  SUBCASE("label outside the class range is rejected") {
    WeightedDataset d = random_dataset(arch, 3, 44);
    d.labels[1] = 9;
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(train(init_params(arch, {}), d, cfg), ConfigError);
  }

  SUBCASE("divergence is reported as a numeric failure") {
    const WeightedDataset d = random_dataset(arch, 10, 45);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.step_size = 1e308;  // first update blows the parameters up
    CHECK_THROWS_AS(train(init_params(arch, {InitFamily::he_uniform, 1.0, 12}), d, cfg),
                    NumericError);
  }
}

TEST_CASE("non-finite parameters are reported with a layer index") {
  const auto arch = make_arch(3, {4, 5}, 2);
  ParamVector p = init_params(arch, {InitFamily::he_uniform, 1.0, 60});
  p.values(static_cast<Eigen::Index>(arch.weight_offset(1))) =
      std::numeric_limits<double>::infinity();
  try {
    forward(p, Eigen::MatrixXd::Random(2, 3));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

}  // TEST_SUITE
