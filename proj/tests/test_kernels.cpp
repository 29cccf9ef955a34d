#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>

#include "hoverid/kernels.hpp"
#include "support.hpp"

using namespace hoverid;

TEST(Kernels, GramMatchesNaiveAndIsSymmetric) {
  std::mt19937_64 g(1);
  const Matrix j = testsupport::random_matrix(g, 37, 9);
  const Matrix s = kernels::serial::gram(j);
  for (std::size_t a = 0; a < 9; ++a) {
    for (std::size_t b = 0; b < 9; ++b) {
      double acc = 0.0;
      for (std::size_t r = 0; r < 37; ++r) acc += j(r, a) * j(r, b);
      EXPECT_NEAR(s(a, b), acc, 1e-12);
      EXPECT_EQ(s(a, b), s(b, a));
    }
  }
}

TEST(Kernels, ParallelIsBitwiseSerial) {
  std::mt19937_64 g(2);
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{1, 1}, {50, 7}, {1203, 64}, {333, 129}}) {
    const Matrix j = testsupport::random_matrix(g, rows, cols);
    const Vector r = testsupport::random_vector(g, rows);
    EXPECT_EQ(kernels::serial::gram(j), kernels::parallel::gram(j));
    EXPECT_EQ(kernels::serial::transpose_times(j, r), kernels::parallel::transpose_times(j, r));
  }
}

TEST(Kernels, TransposeTimesShapeCheck) {
  EXPECT_THROW(kernels::transpose_times(Matrix(3, 2), Vector(4, 0.0)), Error);
}

TEST(Kernels, ForEachIndexVisitsAll) {
  std::vector<int> hits(1000, 0);
  kernels::for_each_index(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  std::vector<int> serial_hits(10, 0);
  kernels::serial::for_each_index(10, [&](std::size_t i) { serial_hits[i] = static_cast<int>(i); });
  EXPECT_EQ(serial_hits[9], 9);
}

TEST(Kernels, ForEachIndexRethrowsLowestIndex) {
  for (auto run : {&kernels::serial::for_each_index, &kernels::parallel::for_each_index}) {
    try {
      run(100, [](std::size_t i) {
        if (i == 17 || i == 63) throw std::runtime_error(std::to_string(i));
      });
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}

TEST(Kernels, ThreadsReported) { EXPECT_GE(kernels::max_threads(), 1); }
