#include <doctest.h>

#include <cmath>

#include "maskgen/errors.hpp"
#include "maskgen/kernels.hpp"
#include "oracles.hpp"

using namespace maskgen;

TEST_CASE("matmul variants agree with the triple loop") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(7), p = 1 + rng.below(7), q = 1 + rng.below(7);
    const Tensor a = oracle::random_tensor({n, p}, rng);
    const Tensor b = oracle::random_tensor({p, q}, rng);
    CHECK(oracle::max_abs_diff(kernels::matmul(a, b), oracle::matmul(a, b)) < 1e-12);

    Tensor bt({q, p});
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) bt.at(j, i) = b.at(i, j);
    CHECK(oracle::max_abs_diff(kernels::matmul_nt(a, bt), oracle::matmul(a, b)) < 1e-12);

    Tensor at({p, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) at.at(j, i) = a.at(i, j);
    CHECK(oracle::max_abs_diff(kernels::matmul_tn(at, b), oracle::matmul(a, b)) < 1e-12);
  }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  CHECK_THROWS_AS(kernels::matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST_CASE("gelu is the tanh form and stays near the erf form") {
  for (Scalar x = -6; x <= 6; x += 0.25) {
    CHECK(kernels::gelu(x) == doctest::Approx(oracle::gelu_tanh(x)).epsilon(1e-14));
    CHECK(std::abs(kernels::gelu(x) - oracle::gelu_erf(x)) < 1e-3);
    const Scalar h = 1e-6;
    const Scalar fd = (oracle::gelu_tanh(x + h) - oracle::gelu_tanh(x - h)) / (2 * h);
    CHECK(kernels::gelu_derivative(x) == doctest::Approx(fd).epsilon(1e-7));
  }
  CHECK(kernels::gelu(0.0) == 0.0);
}

TEST_CASE("softmax rows sum to one and survive large logits") {
  const Tensor x = Tensor::matrix({{1, 2, 3}, {1000, 1000, -1e9}});
  const Tensor s = kernels::softmax_rows(x);
  const auto ref = oracle::softmax(x.row(0));
  for (std::size_t j = 0; j < 3; ++j) CHECK(s.at(0, j) == doctest::Approx(ref[j]).epsilon(1e-14));
  CHECK(s.at(1, 0) == doctest::Approx(0.5));
  CHECK(s.at(1, 2) == 0.0);
  const Tensor ls = kernels::log_softmax_rows(x);
  CHECK(ls.at(0, 2) == doctest::Approx(std::log(ref[2])));
}

TEST_CASE("layer norm matches the row formula") {
  Rng rng(3);
  const Tensor x = oracle::random_tensor({4, 6}, rng, 3.0);
  const Tensor g = oracle::random_tensor({6}, rng);
  const Tensor b = oracle::random_tensor({6}, rng);
  const Tensor y = kernels::layer_norm(x, g, b);
  for (std::size_t r = 0; r < 4; ++r) {
    const auto ref = oracle::layer_norm(x.row(r), g.values(), b.values(), 1e-12);
    for (std::size_t c = 0; c < 6; ++c) CHECK(y.at(r, c) == doctest::Approx(ref[c]).epsilon(1e-12));
  }
}

TEST_CASE("cross entropy averages over kept rows") {
  const Tensor logits = Tensor::matrix({{0, 0}, {std::log(3.0), 0}, {5, 5}});
  const std::vector<TokenId> targets = {0, 0, -1};
  const Scalar expected = 0.5 * (std::log(2.0) + std::log(4.0 / 3.0));
  CHECK(kernels::cross_entropy(logits, targets, -1) == doctest::Approx(expected).epsilon(1e-14));

  const std::vector<TokenId> none = {-1, -1, -1};
  CHECK_THROWS_AS(kernels::cross_entropy(logits, none, -1), EmptyLossError);
}
