#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "pipescan/linalg.h"

using namespace pipescan;

namespace {

CMatrix random_cmatrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMatrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = {u(eng), u(eng)};
  return m;
}

}  // namespace

TEST_CASE("svd_econ reconstructs the input") {
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{12, 7},
                      {7, 12},
                      {20, 20}}) {
    const CMatrix a = random_cmatrix(r, c, 1000 + r * 31 + c);
    const SvdResult svd = svd_econ(a);
    const std::size_t k = std::min(r, c);
    REQUIRE(svd.s.size() == k);

    // singular values descending and nonnegative
    for (std::size_t i = 1; i < k; ++i) CHECK(svd.s[i] <= svd.s[i - 1]);
    CHECK(svd.s.back() >= 0.0);

    // reconstruct
    CMatrix rec(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        cplx acc{0.0, 0.0};
        for (std::size_t n = 0; n < k; ++n) acc += svd.u(i, n) * svd.s[n] * svd.vh(n, j);
        rec(i, j) = acc;
      }
    rec -= a;
    CHECK(fro_norm(rec) <= 1e-12 * fro_norm(a));

    // U columns orthonormal
    for (std::size_t n = 0; n < k; ++n)
      for (std::size_t m = 0; m <= n; ++m) {
        cplx dot{0.0, 0.0};
        for (std::size_t i = 0; i < r; ++i) dot += std::conj(svd.u(i, m)) * svd.u(i, n);
        CHECK(std::abs(dot - (m == n ? 1.0 : 0.0)) < 1e-12);
      }
  }
}

TEST_CASE("svd_econ of a diagonal matrix returns the diagonal magnitudes") {
  CMatrix a(3, 3);
  a(0, 0) = {3.0, 0.0};
  a(1, 1) = {0.0, -2.0};  // magnitude 2
  a(2, 2) = {1.0, 0.0};
  const SvdResult svd = svd_econ(a);
  CHECK(svd.s[0] == doctest::Approx(3.0));
  CHECK(svd.s[1] == doctest::Approx(2.0));
  CHECK(svd.s[2] == doctest::Approx(1.0));
}

TEST_CASE("matvec and Frobenius helpers") {
  const CMatrix a = random_cmatrix(5, 4, 99);
  std::vector<cplx> x(4, cplx{1.0, -1.0});
  const auto y = matvec(a, x);
  REQUIRE(y.size() == 5);
  cplx expect{0.0, 0.0};
  for (std::size_t j = 0; j < 4; ++j) expect += a(2, j) * x[j];
  CHECK(std::abs(y[2] - expect) < 1e-14);

  // <A,A> = ||A||_F^2
  const cplx self = fro_inner(a, a);
  CHECK(self.real() == doctest::Approx(fro_norm(a) * fro_norm(a)));
  CHECK(std::abs(self.imag()) < 1e-12);

  CHECK_THROWS_AS(matvec(a, std::vector<cplx>(3)), std::invalid_argument);
}

TEST_CASE("subtract_rank1 removes exactly one component's energy") {
  const CMatrix a = random_cmatrix(10, 6, 7);
  const SvdResult svd = svd_econ(a);
  CMatrix residual = a;
  subtract_rank1(residual, svd, 0);
  const double before = fro_norm(a) * fro_norm(a);
  const double after = fro_norm(residual) * fro_norm(residual);
  CHECK(after == doctest::Approx(before - svd.s[0] * svd.s[0]).epsilon(1e-10));
}
