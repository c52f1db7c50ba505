#include "pipescan/linalg.h"

#include <cmath>
#include <stdexcept>
#include <string>

#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace pipescan {

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("CMatrix: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("CMatrix: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

SvdResult svd_econ(const CMatrix& a) {
  const auto m = static_cast<lapack_int>(a.rows());
  const auto n = static_cast<lapack_int>(a.cols());
  if (m == 0 || n == 0) throw std::invalid_argument("svd_econ: empty matrix");
  const lapack_int k = std::min(m, n);

  CMatrix work = a;  // zgesdd destroys its input
  SvdResult out;
  out.u = CMatrix(a.rows(), static_cast<std::size_t>(k));
  out.s.resize(static_cast<std::size_t>(k));
  out.vh = CMatrix(static_cast<std::size_t>(k), a.cols());

  lapack_int info = LAPACKE_zgesdd(LAPACK_ROW_MAJOR, 'S', m, n, work.data(), n, out.s.data(),
                                   out.u.data(), k, out.vh.data(), n);
  if (info != 0)
    throw std::runtime_error("svd_econ: zgesdd failed, info=" + std::to_string(info));
  return out;
}

std::vector<cplx> matvec(const CMatrix& a, const std::vector<cplx>& x) {
  if (x.size() != a.cols()) throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<cplx> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const cplx* r = a.row(i);
    cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < a.cols(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

double fro_norm(const CMatrix& a) {
  double acc = 0.0;
  const cplx* p = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(p[i]);
  return std::sqrt(acc);
}

cplx fro_inner(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("fro_inner: shape mismatch");
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a.data()[i]) * b.data()[i];
  return acc;
}

void subtract_rank1(CMatrix& a, const SvdResult& svd, std::size_t n) {
  const double sigma = svd.s[n];
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const cplx ui = sigma * svd.u(i, n);
    const cplx* vh = svd.vh.row(n);
    cplx* r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) r[j] -= ui * vh[j];
  }
}

bool all_finite(const CMatrix& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const cplx v = a.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

double vec_norm(const std::vector<cplx>& v) {
  double acc = 0.0;
  for (const cplx& x : v) acc += std::norm(x);
  return std::sqrt(acc);
}

}  // namespace pipescan
