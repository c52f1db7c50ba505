#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace pipescan {

using cplx = std::complex<double>;

// Dense row-major complex matrix. Small convenience container; heavy
// factorizations are delegated to LAPACK.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }
  cplx* row(std::size_t i) { return data_.data() + i * cols_; }
  const cplx* row(std::size_t i) const { return data_.data() + i * cols_; }

  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<cplx> data_;
};

// Economy SVD A = U diag(s) Vh with s descending. U is m x k, Vh is k x n,
// k = min(m, n).
struct SvdResult {
  CMatrix u;
  std::vector<double> s;
  CMatrix vh;
};

SvdResult svd_econ(const CMatrix& a);

std::vector<cplx> matvec(const CMatrix& a, const std::vector<cplx>& x);

double fro_norm(const CMatrix& a);
// Frobenius inner product <A,B> = sum conj(a_ij) b_ij.
cplx fro_inner(const CMatrix& a, const CMatrix& b);

// a -= sigma * u v^H  (u: column `col` of us, v^H: row `row` of vh)
void subtract_rank1(CMatrix& a, const SvdResult& svd, std::size_t n);

bool all_finite(const CMatrix& a);

double vec_norm(const std::vector<cplx>& v);

}  // namespace pipescan
