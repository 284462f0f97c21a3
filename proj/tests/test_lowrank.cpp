// SPDX-License-Identifier: Apache-2.0

#include "blrqr/lowrank.hpp"

#include <Eigen/SVD>

#include <utility>

#include "doctest.h"
#include "support.hpp"

using namespace blrqr;
using test::orth_defect;
using test::random_lowrank;
using test::random_matrix;
using test::rel_err;

TEST_CASE("ToleranceConfig validation") {
  CHECK_NOTHROW(ToleranceConfig{1e-10, 0.5}.validate());
  CHECK_THROWS(ToleranceConfig{0.0, 0.5}.validate());
  CHECK_THROWS(ToleranceConfig{1.0, 0.5}.validate());
  CHECK_THROWS(ToleranceConfig{1e-3, 0.0}.validate());
  CHECK_THROWS(ToleranceConfig{1e-3, 1.5}.validate());
}

TEST_CASE("thin_svd reconstructs and matches a Jacobi oracle") {
  std::mt19937_64 rng(20);
  for (auto [m, n] : {std::pair<Index, Index>{6, 4}, {4, 6}, {64, 64}, {128, 96}}) {
    const Matrix a = random_matrix(m, n, rng);
    const ThinSvd s = thin_svd(a);
    CHECK(rel_err(s.u * s.sigma.asDiagonal() * s.v.transpose(), a) <= 1e-13);
    CHECK(orth_defect(s.u) <= 1e-13);
    CHECK(orth_defect(s.v) <= 1e-13);
    Eigen::JacobiSVD<ColMatrix> oracle{ColMatrix(a)};
    CHECK((s.sigma - oracle.singularValues()).norm() <= 1e-13 * a.norm());
  }
  const Matrix low = random_lowrank(64, 64, 7, rng).to_dense();
  const Vector sigma = thin_svd(low).sigma;
  CHECK(sigma(6) > 1e-3);
  CHECK(sigma(7) <= 1e-13 * sigma(0));
}

TEST_CASE("compress_rrqr") {
  const ToleranceConfig cfg{1e-10, 0.5};
  std::mt19937_64 rng(21);

  SUBCASE("zero block") {
    const Block c = compress_rrqr(Matrix::Zero(8, 8), cfg);
    REQUIRE(c.is_low_rank());
    CHECK(c.rank() == 0);
  }
  SUBCASE("exact rank one") {
    const Matrix x = random_matrix(8, 1, rng), y = random_matrix(8, 1, rng);
    const Matrix a = x * y.transpose();
    const Block c = compress_rrqr(a, cfg);
    REQUIRE(c.is_low_rank());
    CHECK(c.rank() == 1);
    CHECK(rel_err(c.to_dense(), a) <= 1e-10);
    CHECK(orth_defect(c.low_rank().u) <= 1e-12);
  }
  SUBCASE("identity falls back to dense") {
    const Matrix a = Matrix::Identity(8, 8);
    const Block c = compress_rrqr(a, cfg);
    REQUIRE(c.is_dense());
    CHECK(c.dense() == a);
    // without a cutoff the full rank is needed
    CHECK(compress_lowrank(a, 1e-10).rank() == 8);
  }
  SUBCASE("rank matches the SVD oracle within a small margin and meets the bound") {
    for (int trial = 0; trial < 20; ++trial) {
      const Index r = 1 + trial % 6;
      Matrix a = random_lowrank(16, 16, r, rng).to_dense();
      a += 1e-12 * random_matrix(16, 16, rng);
      const Block c = compress_rrqr(a, ToleranceConfig{1e-8, 1.0});
      CHECK(rel_err(c.to_dense(), a) <= 1e-8);
      CHECK(c.rank() >= test::svd_rank(a, 1e-8));
      CHECK(c.rank() <= r);
    }
  }
  SUBCASE("rank idempotence") {
    Matrix a(12, 12);
    for (Index i = 0; i < 12; ++i)
      for (Index j = 0; j < 12; ++j) a(i, j) = 1.0 / (1.0 + i + 12 + j);
    const LowRankBlock c = compress_lowrank(a, 1e-6);
    const LowRankBlock again = compress_lowrank(c.to_dense(), 1e-6);
    CHECK(again.rank() <= c.rank());
  }
}

TEST_CASE("rounded_add") {
  const ToleranceConfig cfg{1e-10, 0.5};
  std::mt19937_64 rng(22);
  SUBCASE("rank-0 operand is the identity element") {
    const LowRankBlock a = random_lowrank(16, 16, 3, rng);
    const LowRankBlock z = LowRankBlock::zero(16, 16);
    CHECK(rel_err(rounded_add(a, z, cfg).to_dense(), a.to_dense()) <= 1e-14);
    CHECK(rel_err(rounded_add(z, a, cfg).to_dense(), a.to_dense()) <= 1e-14);
    CHECK(rounded_add(z, z, cfg).rank() == 0);
  }
  SUBCASE("exact cancellation") {
    const LowRankBlock a = random_lowrank(16, 16, 3, rng);
    const LowRankBlock neg{a.u, -a.v};
    CHECK(rounded_add(a, neg, cfg).rank() == 0);
  }
  SUBCASE("rank 2 plus rank 3") {
    const LowRankBlock a = random_lowrank(16, 16, 2, rng);
    const LowRankBlock b = random_lowrank(16, 16, 3, rng);
    const LowRankBlock c = rounded_add(a, b, cfg);
    const Matrix want = a.to_dense() + b.to_dense();
    CHECK(c.rank() <= 5);
    CHECK(c.rank() == test::svd_rank(want, 1e-10));
    CHECK((c.to_dense() - want).norm() <= 1e-10 * want.norm());
    CHECK(orth_defect(c.u) <= 1e-12);
  }
  SUBCASE("overlapping ranges are recompressed") {
    const LowRankBlock a = random_lowrank(16, 16, 2, rng);
    const LowRankBlock b{a.u, random_matrix(16, 2, rng)};
    CHECK(rounded_add(a, b, cfg).rank() == 2);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(rounded_add(LowRankBlock::zero(4, 4), LowRankBlock::zero(4, 5), cfg), std::invalid_argument);
  }
}

TEST_CASE("lr_add_into_dense") {
  std::mt19937_64 rng(23);
  const Matrix d = random_matrix(4, 4, rng);
  CHECK(lr_add_into_dense(d, LowRankBlock::zero(4, 4)) == d);
  const LowRankBlock xy = random_lowrank(4, 4, 1, rng);
  CHECK(rel_err(lr_add_into_dense(Matrix::Zero(4, 4), xy), xy.to_dense()) <= 1e-15);
  const LowRankBlock a = random_lowrank(4, 4, 2, rng);
  CHECK(rel_err(lr_add_into_dense(d, a), d + a.u * a.v.transpose()) <= 1e-14);
}

TEST_CASE("lr_times_dense") {
  std::mt19937_64 rng(24);
  const LowRankBlock a = random_lowrank(8, 8, 2, rng);
  const Matrix d = random_matrix(8, 8, rng);
  SUBCASE("identity") {
    for (Side side : {Side::Left, Side::Right})
      CHECK(rel_err(lr_times_dense(a, Matrix::Identity(8, 8), side).to_dense(), a.to_dense()) <= 1e-14);
  }
  SUBCASE("rank 0") {
    CHECK(lr_times_dense(LowRankBlock::zero(8, 8), d, Side::Right).rank() == 0);
    CHECK(lr_times_dense(LowRankBlock::zero(8, 8), d, Side::Left).rank() == 0);
  }
  SUBCASE("dense oracle") {
    const LowRankBlock right = lr_times_dense(a, d, Side::Right);
    const LowRankBlock left = lr_times_dense(a, d, Side::Left);
    CHECK(rel_err(right.to_dense(), a.to_dense() * d) <= 1e-13);
    CHECK(rel_err(left.to_dense(), d * a.to_dense()) <= 1e-13);
    CHECK(right.rank() == 2);
    CHECK(left.rank() == 2);
    CHECK(right.u == a.u);
    CHECK(orth_defect(left.u) <= 1e-12);
  }
}

TEST_CASE("lr_times_lr") {
  std::mt19937_64 rng(25);
  SUBCASE("rank 0 operand") {
    const LowRankBlock a = random_lowrank(8, 8, 2, rng);
    CHECK(lr_times_lr(a, LowRankBlock::zero(8, 8)).rank() == 0);
    CHECK(lr_times_lr(LowRankBlock::zero(8, 8), a).rank() == 0);
  }
  SUBCASE("square of a symmetric rank one") {
    const Matrix u = test::orthonormal_columns(8, 1, rng);
    const LowRankBlock a{u, u};
    const Matrix d = a.to_dense();
    CHECK(rel_err(lr_times_lr(a, a).to_dense(), d * d) <= 1e-14);
  }
  SUBCASE("rank 2 times rank 3 and back") {
    const LowRankBlock a = random_lowrank(8, 8, 2, rng);
    const LowRankBlock b = random_lowrank(8, 8, 3, rng);
    const LowRankBlock ab = lr_times_lr(a, b);
    const LowRankBlock ba = lr_times_lr(b, a);
    CHECK(rel_err(ab.to_dense(), a.to_dense() * b.to_dense()) <= 1e-13);
    CHECK(rel_err(ba.to_dense(), b.to_dense() * a.to_dense()) <= 1e-13);
    CHECK(ab.rank() == 2);
    CHECK(ba.rank() == 2);
    CHECK(orth_defect(ba.u) <= 1e-12);
  }
}

TEST_CASE("block multiply and accumulate") {
  const ToleranceConfig cfg{1e-12, 0.5};
  std::mt19937_64 rng(26);
  const Block d(random_matrix(6, 6, rng));
  const Block l(random_lowrank(6, 6, 2, rng));
  for (const Block* x : {&d, &l}) {
    for (const Block* y : {&d, &l}) {
      for (Op op : {Op::NoTrans, Op::Trans}) {
        const Block p = multiply(*x, op, *y);
        const Matrix xd = op == Op::Trans ? Matrix(x->to_dense().transpose()) : x->to_dense();
        CHECK(rel_err(p.to_dense(), xd * y->to_dense()) <= 1e-13);
        CHECK(p.is_dense() == (x->is_dense() && y->is_dense()));
        if (p.is_low_rank()) CHECK(orth_defect(p.low_rank().u) <= 1e-12);
      }
      Block t = *x;
      accumulate(t, *y, -0.5, cfg);
      CHECK(t.is_dense() == x->is_dense());
      const Matrix want = x->to_dense() - 0.5 * y->to_dense();
      CHECK((t.to_dense() - want).norm() <= 1e-12 * want.norm() + 1e-15);
    }
  }
}
