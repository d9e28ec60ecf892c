#include <doctest.h>

#include "oracles.hpp"
#include "textclf/grad_check.hpp"
#include "textclf/layers.hpp"

using namespace textclf;

namespace {

Tensor<double> random_tensor(Shape shape, RngStream& rng, double lo = -1.0, double hi = 1.0) {
  auto t = Tensor<double>::zeros(std::move(shape));
  rng.fill_uniform(t.values_mut(), lo, hi);
  return t;
}

std::vector<double> to_vec(const Tensor<double>& t) {
  return {t.values().begin(), t.values().end()};
}

oracles::LstmWeights extract_weights(const nn::LSTMLayer<double>& layer) {
  oracles::LstmWeights w;
  w.wi = to_vec(layer.input.kernel);
  w.wf = to_vec(layer.forget.kernel);
  w.wg = to_vec(layer.cell.kernel);
  w.wo = to_vec(layer.output.kernel);
  w.ui = to_vec(layer.input.recurrent);
  w.uf = to_vec(layer.forget.recurrent);
  w.ug = to_vec(layer.cell.recurrent);
  w.uo = to_vec(layer.output.recurrent);
  w.bi = to_vec(layer.input.bias);
  w.bf = to_vec(layer.forget.bias);
  w.bg = to_vec(layer.cell.bias);
  w.bo = to_vec(layer.output.bias);
  return w;
}

}  // namespace

TEST_SUITE("layers") {

TEST_CASE("embedding dimension follows the fourth-root rule") {
  CHECK(nn::embedding_dim(20218) == 12);
  CHECK(nn::embedding_dim(16) == 2);
  CHECK(nn::embedding_dim(4096) == 8);
  CHECK(nn::embedding_dim(1) == 1);
  CHECK(nn::embedding_dim(2) == 1);   // 2^(1/4) = 1.19 rounds down
  CHECK(nn::embedding_dim(10) == 2);  // 10^(1/4) = 1.78 rounds up
  CHECK_THROWS_AS(nn::embedding_dim(0), std::invalid_argument);
}

TEST_CASE("embedding gathers rows and scatter-adds gradients") {
  auto table = Tensor<double>::from({3, 2}, {0.0, 0.1, 1.0, 1.1, 2.0, 2.1});
  table.set_requires_grad(true);
  const std::vector<std::int32_t> idx = {0, 2};
  auto out = nn::gather_rows(table, idx, 1, 2);
  CHECK(out.shape() == Shape{1, 2, 2});
  CHECK(out.values()[0] == 0.0);
  CHECK(out.values()[1] == 0.1);
  CHECK(out.values()[2] == 2.0);
  CHECK(out.values()[3] == 2.1);

  // Repeated index: upstream gradients g1 + g2 land on the same row.
  const std::vector<std::int32_t> repeated = {2, 2};
  auto weights = Tensor<double>::from({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
  backward(sum(mul(nn::gather_rows(table, repeated, 1, 2), weights)));
  CHECK(table.grad()[4] == doctest::Approx(4.0));  // 1 + 3
  CHECK(table.grad()[5] == doctest::Approx(6.0));  // 2 + 4

  const std::vector<std::int32_t> bad = {3};
  CHECK_THROWS_AS(nn::gather_rows(table, bad, 1, 1), std::invalid_argument);
}

TEST_CASE("embedding gather passes the finite-difference check") {
  RngStream rng(211);
  auto table = random_tensor({5, 3}, rng);
  const std::vector<std::int32_t> idx = {0, 2, 2, 4, 1, 0};
  auto weights = random_tensor({2, 3, 3}, rng);
  auto rep = grad_check(
      [&](const std::vector<Tensor<double>>& in) {
        return sum(mul(nn::gather_rows(in[0], idx, 2, 3), weights));
      },
      {table}, 1e-5, 1e-6);
  CHECK(rep.pass);
}

TEST_CASE("conv1d pointwise and hand-computed cases") {
  // k=1 identity mixing: one channel, kernel 1 -> copies the input.
  auto x = Tensor<double>::from({1, 3, 1}, {3, 5, 9});
  auto eye = Tensor<double>::from({1, 1, 1}, {1.0});
  auto zero_bias = Tensor<double>::zeros({1});
  auto copied = nn::conv1d_raw(x, eye, zero_bias);
  CHECK(copied.shape() == Shape{1, 3, 1});
  for (int i = 0; i < 3; ++i) {
    CHECK(copied.values()[static_cast<std::size_t>(i)] ==
          x.values()[static_cast<std::size_t>(i)]);
  }

  // Kernel [1, -1] on [3, 5, 9]: pre-activation differences [2, 4] with the
  // window-order convention out[t] = x[t]*k[0] + x[t+1]*k[1].
  auto edge = Tensor<double>::from({2, 1, 1}, {-1.0, 1.0});
  auto diffs = nn::conv1d_raw(x, edge, zero_bias);
  CHECK(diffs.shape() == Shape{1, 2, 1});
  CHECK(diffs.values()[0] == doctest::Approx(2.0));
  CHECK(diffs.values()[1] == doctest::Approx(4.0));

  auto wide = Tensor<double>::from({4, 1, 1}, {1, 1, 1, 1});
  CHECK_THROWS_AS(nn::conv1d_raw(x, wide, zero_bias), std::invalid_argument);
}

TEST_CASE("conv1d matches the scalar-loop oracle") {
  RngStream rng(223);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = 1 + rng.below(3);
    const std::int64_t k = 1 + rng.below(4);
    const std::int64_t len = k + rng.below(6);
    const std::int64_t c_in = 1 + rng.below(4);
    const std::int64_t c_out = 1 + rng.below(4);
    auto x = random_tensor({n, len, c_in}, rng);
    auto kernels = random_tensor({k, c_in, c_out}, rng);
    auto bias = random_tensor({c_out}, rng);
    auto out = nn::conv1d_raw(x, kernels, bias);
    auto expect = oracles::conv1d(to_vec(x), n, len, c_in, to_vec(kernels), k, c_out, to_vec(bias));
    REQUIRE(out.size() == static_cast<std::int64_t>(expect.size()));
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(std::abs(out.values()[i] - expect[i]) < 1e-12);
    }
  }
}

TEST_CASE("conv1d gradients pass the finite-difference check") {
  RngStream rng(227);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_tensor({2, 6, 3}, rng);
    auto kernels = random_tensor({2, 3, 2}, rng);
    auto bias = random_tensor({2}, rng);
    auto weights = random_tensor({2, 5, 2}, rng);
    auto rep = grad_check(
        [&](const std::vector<Tensor<double>>& in) {
          return sum(mul(nn::conv1d_raw(in[0], in[1], in[2]), weights));
        },
        {x, kernels, bias}, 1e-5, 1e-4);
    CHECK(rep.pass);
  }
}

TEST_CASE("separable conv degenerate forms") {
  RngStream rng(229);
  // Pointwise = identity: pure per-channel convolution.
  auto x = random_tensor({1, 5, 2}, rng);
  nn::SeparableConv1DLayer<double> layer;
  layer.depthwise = random_tensor({3, 2}, rng);
  layer.pointwise = Tensor<double>::from({2, 2}, {1, 0, 0, 1});
  layer.bias = Tensor<double>::zeros({2});
  layer.activation = nn::Activation::Linear;
  auto out = layer.forward(x);
  auto pure = nn::depthwise_conv1d_raw(x, layer.depthwise);
  for (std::int64_t i = 0; i < out.size(); ++i) {
    CHECK(out.values()[static_cast<std::size_t>(i)] ==
          doctest::Approx(pure.values()[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }

  // k=1 with all-ones depthwise: pure channel mixing.
  nn::SeparableConv1DLayer<double> mixer;
  mixer.depthwise = Tensor<double>::filled({1, 2}, 1.0);
  mixer.pointwise = random_tensor({2, 3}, rng);
  mixer.bias = Tensor<double>::zeros({3});
  mixer.activation = nn::Activation::Linear;
  auto mixed = mixer.forward(x);
  auto flat = reshape(x, {5, 2});
  auto direct = matmul(flat, mixer.pointwise);
  for (std::int64_t i = 0; i < mixed.size(); ++i) {
    CHECK(mixed.values()[static_cast<std::size_t>(i)] ==
          doctest::Approx(direct.values()[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("separable conv equals conv1d on the materialized factorized kernel") {
  RngStream rng(239);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = 1 + rng.below(3);
    const std::int64_t k = 1 + rng.below(4);
    const std::int64_t len = k + rng.below(6);
    const std::int64_t c_in = 1 + rng.below(4);
    const std::int64_t c_out = 1 + rng.below(4);
    auto x = random_tensor({n, len, c_in}, rng);
    nn::SeparableConv1DLayer<double> layer;
    layer.depthwise = random_tensor({k, c_in}, rng);
    layer.pointwise = random_tensor({c_in, c_out}, rng);
    layer.bias = random_tensor({c_out}, rng);
    layer.activation = nn::Activation::Linear;
    auto separable = layer.forward(x);

    auto materialized = Tensor<double>::zeros({k, c_in, c_out});
    {
      auto vals = materialized.values_mut();
      for (std::int64_t tau = 0; tau < k; ++tau) {
        for (std::int64_t c = 0; c < c_in; ++c) {
          for (std::int64_t j = 0; j < c_out; ++j) {
            vals[static_cast<std::size_t>((tau * c_in + c) * c_out + j)] =
                layer.depthwise.values()[static_cast<std::size_t>(tau * c_in + c)] *
                layer.pointwise.values()[static_cast<std::size_t>(c * c_out + j)];
          }
        }
      }
    }
    auto full = nn::conv1d_raw(x, materialized, layer.bias);
    REQUIRE(separable.size() == full.size());
    for (std::size_t i = 0; i < static_cast<std::size_t>(full.size()); ++i) {
      CHECK(std::abs(separable.values()[i] - full.values()[i]) < 1e-12);
    }
  }
}

TEST_CASE("separable conv gradients pass the finite-difference check") {
  RngStream rng(241);
  auto x = random_tensor({2, 6, 3}, rng);
  nn::SeparableConv1DLayer<double> layer;
  layer.depthwise = random_tensor({2, 3}, rng);
  layer.pointwise = random_tensor({3, 2}, rng);
  layer.bias = random_tensor({2}, rng);
  layer.activation = nn::Activation::Linear;
  auto weights = random_tensor({2, 5, 2}, rng);
  auto rep = grad_check(
      [&](const std::vector<Tensor<double>>& in) {
        nn::SeparableConv1DLayer<double> probe{in[1], in[2], in[3], nn::Activation::Linear};
        return sum(mul(probe.forward(in[0]), weights));
      },
      {x, layer.depthwise, layer.pointwise, layer.bias}, 1e-5, 1e-4);
  CHECK(rep.pass);
}

TEST_CASE("max pooling values, strides, and tie routing") {
  auto x = Tensor<double>::from({1, 3, 1}, {1, 9, 3});
  auto global = nn::global_maxpool(x);
  CHECK(global.shape() == Shape{1, 1});
  CHECK(global.values()[0] == 9.0);

  auto x2 = Tensor<double>::from({1, 4, 1}, {1, 2, 3, 4});
  auto pooled = nn::maxpool1d(x2, 2, 2);
  CHECK(pooled.shape() == Shape{1, 2, 1});
  CHECK(pooled.values()[0] == 2.0);
  CHECK(pooled.values()[1] == 4.0);

  // Tie [5, 5]: the whole gradient goes to the first maximal index.
  auto tie = Tensor<double>::from({1, 2, 1}, {5, 5});
  tie.set_requires_grad(true);
  backward(sum(nn::maxpool1d(tie, 2, 2)));
  CHECK(tie.grad()[0] == 1.0);
  CHECK(tie.grad()[1] == 0.0);

  CHECK_THROWS_AS(nn::maxpool1d(x, 4, 1), std::invalid_argument);
}

TEST_CASE("max pooling gradients pass the finite-difference check") {
  RngStream rng(251);
  auto x = random_tensor({2, 7, 3}, rng);
  auto weights = random_tensor({2, 3, 3}, rng);
  auto rep = grad_check(
      [&](const std::vector<Tensor<double>>& in) {
        return sum(mul(nn::maxpool1d(in[0], 3, 2), weights));
      },
      {x}, 1e-5, 1e-4);
  CHECK(rep.pass);
}

TEST_CASE("dropout: identity cases and survivor statistics") {
  RngStream rng(257);
  auto x = random_tensor({10}, rng);
  auto same_rate0 = nn::dropout(x, 0.0, true, &rng);
  auto same_eval = nn::dropout(x, 0.7, false, nullptr);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(same_rate0.values()[i] == x.values()[i]);
    CHECK(same_eval.values()[i] == x.values()[i]);
  }

  auto big = Tensor<double>::filled({1000000}, 1.0);
  auto dropped = nn::dropout(big, 0.2, true, &rng);
  std::int64_t kept = 0;
  double total = 0.0;
  for (const auto v : dropped.values()) {
    if (v != 0.0) ++kept;
    total += v;
  }
  const double kept_fraction = static_cast<double>(kept) / 1e6;
  CHECK(std::abs(kept_fraction - 0.8) <= 0.002);
  CHECK(std::abs(total / 1e6 - 1.0) <= 0.005);  // inverted scaling preserves the mean
}

TEST_CASE("lstm trivial forms") {
  RngStream rng(263);
  // All-zero parameters produce all-zero outputs.
  auto zero_layer = nn::LSTMLayer<double>::init(2, 3, 0.0, 0.0, rng);
  for (auto* gate : {&zero_layer.input, &zero_layer.forget, &zero_layer.cell, &zero_layer.output}) {
    std::fill(gate->kernel.values_mut().begin(), gate->kernel.values_mut().end(), 0.0);
    std::fill(gate->recurrent.values_mut().begin(), gate->recurrent.values_mut().end(), 0.0);
    std::fill(gate->bias.values_mut().begin(), gate->bias.values_mut().end(), 0.0);
  }
  auto x = random_tensor({2, 4, 2}, rng);
  auto out = zero_layer.forward(x, false, false, nullptr);
  for (const auto v : out.values()) CHECK(v == 0.0);

  // One timestep: h1 = o * tanh(i * g), every h0/c0 term dropped.
  auto layer = nn::LSTMLayer<double>::init(2, 2, 0.0, 0.0, rng);
  auto x1 = random_tensor({1, 1, 2}, rng);
  auto h1 = layer.forward(x1, false, false, nullptr);
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (std::int64_t u = 0; u < 2; ++u) {
    auto pre = [&](const nn::LstmGateParams<double>& p) {
      double acc = p.bias.values()[static_cast<std::size_t>(u)];
      for (std::int64_t c = 0; c < 2; ++c) {
        acc += x1.values()[static_cast<std::size_t>(c)] *
               p.kernel.values()[static_cast<std::size_t>(c * 2 + u)];
      }
      return acc;
    };
    const double gi = sig(pre(layer.input));
    const double gg = std::tanh(pre(layer.cell));
    const double go = sig(pre(layer.output));
    CHECK(h1.values()[static_cast<std::size_t>(u)] ==
          doctest::Approx(go * std::tanh(gi * gg)).epsilon(1e-12));
  }
}

TEST_CASE("lstm matches the per-timestep scalar oracle") {
  RngStream rng(269);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = 1 + rng.below(3);
    const std::int64_t len = 1 + rng.below(5);
    const std::int64_t c_in = 1 + rng.below(3);
    const std::int64_t h = 1 + rng.below(3);
    const bool sequences = rng.uniform() < 0.5;
    auto layer = nn::LSTMLayer<double>::init(c_in, h, 0.0, 0.0, rng);
    auto x = random_tensor({n, len, c_in}, rng);
    auto out = layer.forward(x, sequences, false, nullptr);
    auto expect = oracles::lstm(to_vec(x), n, len, c_in, h, extract_weights(layer), sequences);
    REQUIRE(out.size() == static_cast<std::int64_t>(expect.size()));
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(std::abs(out.values()[i] - expect[i]) < 1e-12);
    }
  }
}

TEST_CASE("lstm gradients pass the finite-difference check") {
  RngStream rng(271);
  auto layer = nn::LSTMLayer<double>::init(2, 2, 0.0, 0.0, rng);
  auto x = random_tensor({2, 3, 2}, rng);
  auto weights = random_tensor({2, 2}, rng);
  std::vector<Tensor<double>> inputs = {x};
  for (auto* gate : {&layer.input, &layer.forget, &layer.cell, &layer.output}) {
    inputs.push_back(gate->kernel);
    inputs.push_back(gate->recurrent);
    inputs.push_back(gate->bias);
  }
  auto rep = grad_check(
      [&](const std::vector<Tensor<double>>& in) {
        return sum(mul(layer.forward(in[0], false, false, nullptr), weights));
      },
      inputs, 1e-5, 1e-4);
  CHECK(rep.pass);
}

TEST_CASE("bidirectional wrapper composes two reversed runs") {
  RngStream rng(277);
  // Zero weights: zero output of width 2h.
  auto layer = nn::BidirectionalLSTM<double>::init(2, 3, 0.0, 0.0, rng);
  for (auto* lstm : {&layer.fwd, &layer.bwd}) {
    for (auto* gate : {&lstm->input, &lstm->forget, &lstm->cell, &lstm->output}) {
      std::fill(gate->kernel.values_mut().begin(), gate->kernel.values_mut().end(), 0.0);
      std::fill(gate->recurrent.values_mut().begin(), gate->recurrent.values_mut().end(), 0.0);
      std::fill(gate->bias.values_mut().begin(), gate->bias.values_mut().end(), 0.0);
    }
  }
  auto x = random_tensor({1, 4, 2}, rng);
  auto zeros = layer.forward(x, false, false, nullptr);
  CHECK(zeros.shape() == Shape{1, 6});
  for (const auto v : zeros.values()) CHECK(v == 0.0);

  // Palindromic input with tied weights: the two feature halves agree.
  auto tied = nn::BidirectionalLSTM<double>::init(1, 2, 0.0, 0.0, rng);
  tied.bwd = tied.fwd;
  auto palindrome = Tensor<double>::from({1, 3, 1}, {0.3, -0.7, 0.3});
  auto sym = tied.forward(palindrome, false, false, nullptr);
  CHECK(sym.values()[0] == doctest::Approx(sym.values()[2]).epsilon(1e-12));
  CHECK(sym.values()[1] == doctest::Approx(sym.values()[3]).epsilon(1e-12));

  // Compositional oracle: lstm on the reversed input, re-reversed, concatenated.
  auto generic = nn::BidirectionalLSTM<double>::init(2, 2, 0.0, 0.0, rng);
  auto input = random_tensor({2, 4, 2}, rng);
  auto joint = generic.forward(input, true, false, nullptr);
  auto fwd_out = generic.fwd.forward(input, true, false, nullptr);
  auto bwd_out = reverse_time(generic.bwd.forward(reverse_time(input), true, false, nullptr));
  auto expect = concat_last(fwd_out, bwd_out);
  REQUIRE(joint.size() == expect.size());
  for (std::size_t i = 0; i < static_cast<std::size_t>(joint.size()); ++i) {
    CHECK(joint.values()[i] == expect.values()[i]);
  }
}

TEST_CASE("lstm input dropout draws one mask per sequence, reused at every timestep") {
  RngStream rng(307);
  auto layer = nn::LSTMLayer<double>::init(3, 2, 0.5, 0.0, rng);
  auto x = random_tensor({2, 5, 3}, rng);

  // The layer draws its input mask first; replay the draw from an identical
  // stream, pre-mask the whole sequence with that single mask, and the
  // dropout-free oracle must reproduce the training-mode forward.
  RngStream stream(99);
  RngStream replay(99);
  auto mask = nn::dropout_mask<double>({2, 3}, 0.5, replay);
  auto out = layer.forward(x, true, true, &stream);

  std::vector<double> masked(x.values().begin(), x.values().end());
  for (std::int64_t s = 0; s < 2; ++s) {
    for (std::int64_t t = 0; t < 5; ++t) {
      for (std::int64_t c = 0; c < 3; ++c) {
        masked[static_cast<std::size_t>((s * 5 + t) * 3 + c)] *=
            mask.values()[static_cast<std::size_t>(s * 3 + c)];
      }
    }
  }
  auto expect = oracles::lstm(masked, 2, 5, 3, 2, extract_weights(layer), true);
  REQUIRE(out.size() == static_cast<std::int64_t>(expect.size()));
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK(out.values()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("bidirectional rejects mismatched hidden sizes") {
  RngStream rng(311);
  auto layer = nn::BidirectionalLSTM<double>::init(2, 3, 0.0, 0.0, rng);
  layer.bwd = nn::LSTMLayer<double>::init(2, 4, 0.0, 0.0, rng);
  auto x = Tensor<double>::zeros({1, 3, 2});
  CHECK_THROWS_WITH_AS(layer.forward(x, false, false, nullptr),
                       doctest::Contains("hidden size"), std::invalid_argument);
}

TEST_CASE("dense layer forms") {
  RngStream rng(281);
  nn::DenseLayer<double> identity;
  identity.weight = Tensor<double>::from({2, 2}, {1, 0, 0, 1});
  identity.bias = Tensor<double>::zeros({2});
  identity.activation = nn::Activation::Linear;
  auto x = random_tensor({3, 2}, rng);
  auto same = identity.forward(x);
  for (std::size_t i = 0; i < 6; ++i) CHECK(same.values()[i] == doctest::Approx(x.values()[i]));

  nn::DenseLayer<double> head;
  head.weight = Tensor<double>::zeros({2, 1});
  head.bias = Tensor<double>::zeros({1});
  head.activation = nn::Activation::Sigmoid;
  auto probs = head.forward(x);
  for (std::int64_t i = 0; i < 3; ++i) {
    CHECK(probs.values()[static_cast<std::size_t>(i)] == doctest::Approx(0.5));
  }

  auto layer = nn::DenseLayer<double>::init(3, 2, nn::Activation::Sigmoid, rng);
  auto input = random_tensor({2, 3}, rng);
  auto weights = random_tensor({2, 2}, rng);
  auto rep = grad_check(
      [&](const std::vector<Tensor<double>>& in) {
        nn::DenseLayer<double> probe{in[1], in[2], nn::Activation::Sigmoid};
        return sum(mul(probe.forward(in[0]), weights));
      },
      {input, layer.weight, layer.bias}, 1e-5, 1e-4);
  CHECK(rep.pass);
}

TEST_CASE("output shapes follow the declared formulas on random admissible shapes") {
  RngStream rng(283);
  for (int trial = 0; trial < 30; ++trial) {
    const std::int64_t n = 1 + rng.below(3);
    const std::int64_t k = 1 + rng.below(4);
    const std::int64_t len = k + 1 + rng.below(8);
    const std::int64_t c_in = 1 + rng.below(4);
    const std::int64_t c_out = 1 + rng.below(4);
    const std::int64_t h = 1 + rng.below(4);
    auto x = random_tensor({n, len, c_in}, rng);

    auto conv = nn::Conv1DLayer<double>::init(k, c_in, c_out, rng);
    CHECK(conv.forward(x).shape() == Shape{n, len - k + 1, c_out});

    auto sep = nn::SeparableConv1DLayer<double>::init(k, c_in, c_out, rng);
    CHECK(sep.forward(x).shape() == Shape{n, len - k + 1, c_out});

    const std::int64_t p = 1 + rng.below(static_cast<std::uint64_t>(len));
    const std::int64_t s = 1 + rng.below(3);
    CHECK(nn::maxpool1d(x, p, s).shape() == Shape{n, (len - p) / s + 1, c_in});
    CHECK(nn::global_maxpool(x).shape() == Shape{n, c_in});

    auto lstm = nn::LSTMLayer<double>::init(c_in, h, 0.0, 0.0, rng);
    CHECK(lstm.forward(x, true, false, nullptr).shape() == Shape{n, len, h});
    CHECK(lstm.forward(x, false, false, nullptr).shape() == Shape{n, h});

    auto bi = nn::BidirectionalLSTM<double>::init(c_in, h, 0.0, 0.0, rng);
    CHECK(bi.forward(x, true, false, nullptr).shape() == Shape{n, len, 2 * h});
    CHECK(bi.forward(x, false, false, nullptr).shape() == Shape{n, 2 * h});
  }
}

TEST_CASE("bidirectional gradients pass the finite-difference check") {
  RngStream rng(293);
  auto layer = nn::BidirectionalLSTM<double>::init(2, 2, 0.0, 0.0, rng);
  auto x = random_tensor({1, 3, 2}, rng);
  auto weights = random_tensor({1, 4}, rng);
  std::vector<Tensor<double>> inputs = {x};
  for (auto* lstm : {&layer.fwd, &layer.bwd}) {
    for (auto* gate : {&lstm->input, &lstm->forget, &lstm->cell, &lstm->output}) {
      inputs.push_back(gate->kernel);
      inputs.push_back(gate->recurrent);
      inputs.push_back(gate->bias);
    }
  }
  auto rep = grad_check(
      [&](const std::vector<Tensor<double>>& in) {
        return sum(mul(layer.forward(in[0], false, false, nullptr), weights));
      },
      inputs, 1e-5, 1e-4);
  CHECK(rep.pass);
}

}  // TEST_SUITE
