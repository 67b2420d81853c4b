#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gaitfuse/errors.hpp"
#include "gaitfuse/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace gaitfuse;
using gaitfuse::testing::check_gradients;
using gaitfuse::testing::random_tensor;
using gaitfuse::testing::weighted_sum;

namespace {

constexpr double kStep = 1e-3;
constexpr double kTolerance = 1e-4;

// Six nested loops, no im2col.
std::vector<double> conv_oracle(const Tensor& x, const Tensor& k, std::size_t stride,
                                std::size_t pad) {
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = k.dim(0), kk = k.dim(2);
  const std::size_t ho = (h + 2 * pad - kk) / stride + 1, wo = (w + 2 * pad - kk) / stride + 1;
  std::vector<double> y(n * cout * ho * wo, 0.0);
  const auto xv = x.values();
  const auto kv = k.values();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t r = 0; r < ho; ++r)
        for (std::size_t c = 0; c < wo; ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < cin; ++i)
            for (std::size_t p = 0; p < kk; ++p)
              for (std::size_t q = 0; q < kk; ++q) {
                const long yy = static_cast<long>(r * stride + p) - static_cast<long>(pad);
                const long xx = static_cast<long>(c * stride + q) - static_cast<long>(pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
                acc += xv[((b * cin + i) * h + yy) * w + xx] * kv[((o * cin + i) * kk + p) * kk + q];
              }
          y[((b * cout + o) * ho + r) * wo + c] = acc;
        }
  return y;
}

}  // namespace

TEST_CASE("shape bookkeeping") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.numel() == 6);
  CHECK(t.rank() == 2);
  CHECK(shape_string(t.shape()) == "[2x3]");
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);
  Tensor c = t.clone();
  c.values()[0] = 9.0;
  CHECK(t.values()[0] == 1.5);
  Tensor alias = t;
  CHECK(alias.same_storage(t));
}

TEST_CASE("affine forward cases") {
  Tape tape;
  Tensor x({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  Tensor eye({3, 3}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor zero({3}, 0.0);
  const Tensor y = affine(tape, x, eye, zero);
  for (std::size_t k = 0; k < 6; ++k) CHECK(y.values()[k] == x.values()[k]);
  Tensor b({2}, std::vector<double>{0.5, -1});
  const Tensor z = affine(tape, Tensor({4, 3}, 0.0), Tensor({3, 2}, 2.0), b);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(z.values()[2 * r] == 0.5);
    CHECK(z.values()[2 * r + 1] == -1.0);
  }
  CHECK(tape.nodes().empty());  // nothing tracked
  CHECK_THROWS_AS(affine(tape, x, Tensor({2, 3}), zero), ShapeError);
}

TEST_CASE("conv2d forward cases") {
  Tape tape;
  const Tensor ones({1, 1, 3, 3}, 1.0);
  const Tensor y = conv2d(tape, ones, Tensor({1, 1, 3, 3}, 1.0), 1, 0);
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.item() == 9.0);

  Rng rng(1);
  const Tensor x = random_tensor({2, 3, 4, 5}, rng);
  Tensor eye({3, 3, 1, 1}, 0.0);
  for (std::size_t c = 0; c < 3; ++c) eye.values()[c * 3 + c] = 1.0;
  const Tensor same = conv2d(tape, x, eye, 1, 0);
  for (std::size_t k = 0; k < x.numel(); ++k) CHECK(same.values()[k] == x.values()[k]);

  for (int seed = 0; seed < 30; ++seed) {
    Rng r(100 + seed);
    const std::size_t kk = 1 + 2 * uniform_index(r, 2);
    const std::size_t stride = 1 + uniform_index(r, 2);
    const std::size_t pad = uniform_index(r, kk / 2 + 1);
    const Tensor xin = random_tensor({1 + uniform_index(r, 3), 1 + uniform_index(r, 3), 6 + uniform_index(r, 4),
                                      5 + uniform_index(r, 4)}, r);
    const Tensor k = random_tensor({1 + uniform_index(r, 4), xin.dim(1), kk, kk}, r);
    const Tensor out = conv2d(tape, xin, k, stride, pad);
    const auto oracle = conv_oracle(xin, k, stride, pad);
    REQUIRE(out.numel() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(std::abs(out.values()[i] - oracle[i]) <= 1e-10);
  }
  CHECK_THROWS_AS(conv2d(tape, ones, Tensor({1, 1, 5, 5}, 1.0), 1, 0), ShapeError);
  CHECK_THROWS_AS(conv2d(tape, ones, Tensor({1, 2, 3, 3}, 1.0), 1, 0), ShapeError);
}

TEST_CASE("elementwise and reductions") {
  Tape tape;
  const Tensor x({2}, std::vector<double>{-1.0, 2.0});
  const Tensor r = relu(tape, x);
  CHECK(r.values()[0] == 0.0);
  CHECK(r.values()[1] == 2.0);
  CHECK(sigmoid(tape, Tensor({1}, 0.0)).item() == 0.5);
  const Tensor big = sigmoid(tape, Tensor({2}, std::vector<double>{-800.0, 800.0}));
  CHECK(big.values()[0] >= 0.0);
  CHECK(big.values()[1] <= 1.0);
  CHECK(std::isfinite(big.values()[0]));

  const Tensor pooled = global_avg_pool(tape, Tensor({2, 3, 4, 5}, 2.5));
  CHECK(pooled.shape() == Shape{2, 3});
  for (double v : pooled.values()) CHECK(v == 2.5);

  std::vector<Tensor> parts{Tensor({2, 3}, 1.0), Tensor({2, 5}, 2.0)};
  const Tensor cat = concat(tape, parts, 1);
  CHECK(cat.shape() == Shape{2, 8});
  CHECK(cat.values()[2] == 1.0);
  CHECK(cat.values()[3] == 2.0);
  CHECK_THROWS_AS(concat(tape, parts, 2), ShapeError);
  CHECK_THROWS_AS(concat(tape, parts, 0), ShapeError);
  CHECK_THROWS_AS(add(tape, parts[0], parts[1]), ShapeError);
}

TEST_CASE("concat backward partitions the upstream gradient exactly") {
  Rng rng(3);
  Tape tape;
  Tensor a = random_tensor({3, 2, 2}, rng, true);
  Tensor b = random_tensor({3, 4, 2}, rng, true);
  const Tensor w = random_tensor({3, 6, 2}, rng);
  std::vector<Tensor> parts{a, b};
  const Tensor cat = concat(tape, parts, 1);
  backward(weighted_sum(tape, cat, w), tape);
  const auto ga = a.grad();
  const auto gb = b.grad();
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t k = 0; k < 2; ++k) {
        const double up = w.values()[(n * 6 + c) * 2 + k];
        const double got = c < 2 ? ga[(n * 2 + c) * 2 + k] : gb[(n * 4 + (c - 2)) * 2 + k];
        CHECK(got == up);
      }
}

TEST_CASE("dropout") {
  Tape tape;
  Rng rng(9);
  const Tensor x = random_tensor({1000}, rng);
  const Tensor same = dropout(tape, x, 0.0, true, rng);
  const Tensor eval = dropout(tape, x, 0.9, false, rng);
  for (std::size_t k = 0; k < x.numel(); ++k) {
    CHECK(same.values()[k] == x.values()[k]);
    CHECK(eval.values()[k] == x.values()[k]);
  }
  const Tensor ones({100000}, 1.0);
  const Tensor d = dropout(tape, ones, 0.35, true, rng);
  std::size_t alive = 0;
  for (double v : d.values()) {
    if (v != 0.0) {
      ++alive;
      CHECK(v == doctest::Approx(1.0 / 0.65));
    }
  }
  const double frac = static_cast<double>(alive) / 100000.0;
  CHECK(std::abs(frac - 0.65) <= 0.01);
  CHECK_THROWS_AS(dropout(tape, x, 1.0, true, rng), ConfigError);
}

TEST_CASE("softmax cross entropy") {
  Tape tape;
  const std::vector<std::size_t> label{2};
  CHECK(softmax_cross_entropy(tape, Tensor({1, 4}, 0.0), label).item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  Tensor huge({1, 3}, std::vector<double>{0.0, 0.0, 1000.0});
  CHECK(softmax_cross_entropy(tape, huge, label).item() < 1e-12);
  const std::vector<std::size_t> bad{3};
  CHECK_THROWS_AS(softmax_cross_entropy(tape, huge, bad), DataError);

  Rng rng(5);
  Tensor logits = random_tensor({4, 5}, rng, true, 3.0);
  const std::vector<std::size_t> labels{0, 4, 2, 2};
  Tape t2;
  backward(softmax_cross_entropy(t2, logits, labels), t2);
  const auto p = softmax_rows(logits);
  for (std::size_t n = 0; n < 4; ++n) {
    double row = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      row += p[n * 5 + k];
      const double expect = (p[n * 5 + k] - (k == labels[n] ? 1.0 : 0.0)) / 4.0;
      CHECK(logits.grad()[n * 5 + k] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(std::abs(row - 1.0) <= 1e-6);
  }
}

TEST_CASE("backward basics") {
  Tensor x({3, 2}, 0.7, true);
  Tensor unused({4}, 1.0, true);
  Tape tape;
  backward(sum(tape, x), tape);
  for (double g : x.grad()) CHECK(g == 1.0);
  for (double g : unused.grad()) CHECK(g == 0.0);
  Tape t2;
  CHECK_THROWS_AS(backward(relu(t2, x), t2), ShapeError);
}

TEST_CASE("finite-difference checks of every operation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + uniform_index(rng, 4), c = 1 + uniform_index(rng, 8);
    const std::size_t h = 3 + uniform_index(rng, 4), w = 3 + uniform_index(rng, 4);

    Tensor x = random_tensor({n, c, h, w}, rng, true);
    Tensor k = random_tensor({2, c, 3, 3}, rng, true, 0.5);
    const Tensor wc = random_tensor({n, 2, (h - 1) / 2 + 1, (w - 1) / 2 + 1}, rng);
    auto conv = check_gradients([&](Tape& t) { return weighted_sum(t, conv2d(t, x, k, 2, 1), wc); },
                                {{"x", x}, {"k", k}}, kStep, rng);
    CHECK(conv.max_rel_error <= kTolerance);

    Tensor xa = random_tensor({n, c}, rng, true);
    Tensor wa = random_tensor({c, 3}, rng, true);
    Tensor ba = random_tensor({3}, rng, true);
    const Tensor wy = random_tensor({n, 3}, rng);
    auto aff = check_gradients([&](Tape& t) { return weighted_sum(t, affine(t, xa, wa, ba), wy); },
                               {{"x", xa}, {"w", wa}, {"b", ba}}, kStep, rng);
    CHECK(aff.max_rel_error <= kTolerance);

    const Tensor wx = random_tensor({n, c, h, w}, rng);
    auto rl = check_gradients([&](Tape& t) { return weighted_sum(t, relu(t, x), wx); }, {{"x", x}},
                              kStep, rng);
    CHECK(rl.max_rel_error <= kTolerance);
    auto sg = check_gradients([&](Tape& t) { return weighted_sum(t, sigmoid(t, x), wx); }, {{"x", x}},
                              kStep, rng);
    CHECK(sg.max_rel_error <= kTolerance);

    Tensor y = random_tensor({n, c, h, w}, rng, true);
    auto ad = check_gradients([&](Tape& t) { return weighted_sum(t, add(t, x, y), wx); },
                              {{"x", x}, {"y", y}}, kStep, rng);
    CHECK(ad.max_rel_error <= kTolerance);
    auto hd = check_gradients([&](Tape& t) { return weighted_sum(t, hadamard(t, x, y), wx); },
                              {{"x", x}, {"y", y}}, kStep, rng);
    CHECK(hd.max_rel_error <= kTolerance);
    auto hb = check_gradients([&](Tape& t) { return weighted_sum(t, hadamard(t, xa, x), wx); },
                              {{"e", xa}, {"x", x}}, kStep, rng);
    CHECK(hb.max_rel_error <= kTolerance);

    const Tensor wp = random_tensor({n, c}, rng);
    auto gp = check_gradients([&](Tape& t) { return weighted_sum(t, global_avg_pool(t, x), wp); },
                              {{"x", x}}, kStep, rng);
    CHECK(gp.max_rel_error <= kTolerance);

    const Tensor wcat = random_tensor({n, 2 * c, h, w}, rng);
    auto ct = check_gradients(
        [&](Tape& t) {
          std::vector<Tensor> parts{x, y};
          return weighted_sum(t, concat(t, parts, 1), wcat);
        },
        {{"x", x}, {"y", y}}, kStep, rng);
    CHECK(ct.max_rel_error <= kTolerance);

    auto dr = check_gradients(
        [&](Tape& t) {
          Rng mask(seed + 1000);
          return weighted_sum(t, dropout(t, x, 0.35, true, mask), wx);
        },
        {{"x", x}}, kStep, rng);
    CHECK(dr.max_rel_error <= kTolerance);

    Tensor logits = random_tensor({n, 5}, rng, true, 2.0);
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = uniform_index(rng, 5);
    auto ce = check_gradients([&](Tape& t) { return softmax_cross_entropy(t, logits, labels); },
                              {{"logits", logits}}, kStep, rng);
    CHECK(ce.max_rel_error <= kTolerance);

    auto mn = check_gradients([&](Tape& t) { return mean(t, hadamard(t, x, x)); }, {{"x", x}}, kStep, rng);
    CHECK(mn.max_rel_error <= kTolerance);
  }
}

TEST_CASE("parameter sets") {
  ParameterSet ps;
  Tensor w = ps.add("layer.weight", Tensor({2, 3}));
  CHECK(w.requires_grad());
  CHECK_THROWS_AS(ps.add("layer.weight", Tensor({1})), ConfigError);
  CHECK(ps.find("layer.weight") != nullptr);
  CHECK(ps.find("missing") == nullptr);
  CHECK_THROWS_AS(ps.get("missing"), DataError);
  CHECK(ps.scalar_count() == 6);
}

TEST_CASE("adam") {
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> zero{0.0, 0.0};
  AdamState st;
  adam_step(p, zero, st, 0.1, {});
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -2.0);

  std::vector<double> w{1.0};
  AdamState sw;
  const std::vector<double> g{2.0 * w[0]};
  adam_step(w, g, sw, 0.01, {});
  CHECK(std::abs(w[0]) < 1.0);
  CHECK(w[0] == doctest::Approx(0.99).epsilon(1e-6));

  const std::vector<double> short_grad{1.0};
  CHECK_THROWS_AS(adam_step(p, short_grad, st, 0.1, {}), ShapeError);

  auto run = [] {
    std::vector<double> q{0.3, -0.7, 1.1};
    AdamState s;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> grad(q.size());
      for (std::size_t k = 0; k < q.size(); ++k) grad[k] = std::sin(q[k] * (i + 1));
      adam_step(q, grad, s, decayed_learning_rate(0.05, 0.01, static_cast<std::size_t>(i)), {});
    }
    return q;
  };
  CHECK(run() == run());
  CHECK(decayed_learning_rate(1e-4, 0.01, 0) == 1e-4);
  CHECK(decayed_learning_rate(1e-4, 0.01, 100) == doctest::Approx(1e-4 * std::exp(-1.0)));
}
