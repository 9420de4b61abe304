#include "qefctl/detail/dense_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qefctl/error.hpp"

// Fortran LAPACK entry points (provided by OpenBLAS).
extern "C" {
void dsyevd_(const char* jobz, const char* uplo, const int* n, double* a, const int* lda,
             double* w, double* work, const int* lwork, int* iwork, const int* liwork,
             int* info);
void dgemm_(const char* ta, const char* tb, const int* m, const int* n, const int* k,
            const double* alpha, const double* a, const int* lda, const double* b,
            const int* ldb, const double* beta, double* c, const int* ldc);
void zheevd_(const char* jobz, const char* uplo, const int* n, std::complex<double>* a,
             const int* lda, double* w, std::complex<double>* work, const int* lwork,
             double* rwork, const int* lrwork, int* iwork, const int* liwork, int* info);
}

namespace qefctl::detail {
namespace {

int checked_dim(Eigen::Index n) {
  if (n > 46000) fail(ErrorCategory::kNumerical, "eigensolver: matrix too large");
  return static_cast<int>(n);
}

// Some OpenBLAS builds pick a kernel that returns wrong products on CPUs
// they misdetect. One product against Eigen catches this before any result
// is trusted.
void verify_blas_once() {
  static const bool ok = [] {
    const int n = 256;
    RMatrix a(n, n), b(n, n), c(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        a(i, j) = std::sin(0.37 * i + 1.3 * j);
        b(i, j) = std::cos(0.11 * i - 0.7 * j);
      }
    }
    const double one = 1.0, zero = 0.0;
    dgemm_("N", "N", &n, &n, &n, &one, a.data(), &n, b.data(), &n, &zero, c.data(), &n);
    const RMatrix ref = a.lazyProduct(b);
    return (c - ref).cwiseAbs().maxCoeff() <= 1e-10 * n;
  }();
  if (!ok) {
    fail(ErrorCategory::kNumerical,
         "the linked BLAS returns wrong matrix products on this CPU; set "
         "OPENBLAS_CORETYPE (for example Haswell) and rerun");
  }
}

}  // namespace

SymmetricEigen symmetric_eigen(RMatrix a, bool with_vectors) {
  const int n = checked_dim(a.rows());
  verify_blas_once();
  SymmetricEigen out;
  out.values.resize(n);
  if (n == 0) return out;
  const char jobz = with_vectors ? 'V' : 'N';
  const char uplo = 'L';
  int info = 0;
  int lwork = -1, liwork = -1;
  double wq = 0.0;
  int iwq = 0;
  dsyevd_(&jobz, &uplo, &n, a.data(), &n, out.values.data(), &wq, &lwork, &iwq, &liwork,
          &info);
  lwork = std::max(1, static_cast<int>(wq));
  liwork = std::max(1, iwq);
  std::vector<double> work(lwork);
  std::vector<int> iwork(liwork);
  dsyevd_(&jobz, &uplo, &n, a.data(), &n, out.values.data(), work.data(), &lwork,
          iwork.data(), &liwork, &info);
  if (info != 0) {
    fail(ErrorCategory::kNumerical, "dsyevd failed with info " + std::to_string(info));
  }
  if (with_vectors) out.vectors = std::move(a);
  return out;
}

Eigen::VectorXd hermitian_eigenvalues(CMatrix a) {
  const int n = checked_dim(a.rows());
  verify_blas_once();
  Eigen::VectorXd w(n);
  if (n == 0) return w;
  const char jobz = 'N';
  const char uplo = 'L';
  int info = 0;
  int lwork = -1, lrwork = -1, liwork = -1;
  std::complex<double> wq;
  double rwq = 0.0;
  int iwq = 0;
  zheevd_(&jobz, &uplo, &n, a.data(), &n, w.data(), &wq, &lwork, &rwq, &lrwork, &iwq,
          &liwork, &info);
  lwork = std::max(1, static_cast<int>(wq.real()));
  lrwork = std::max(1, static_cast<int>(rwq));
  liwork = std::max(1, iwq);
  std::vector<std::complex<double>> work(lwork);
  std::vector<double> rwork(lrwork);
  std::vector<int> iwork(liwork);
  zheevd_(&jobz, &uplo, &n, a.data(), &n, w.data(), work.data(), &lwork, rwork.data(),
          &lrwork, iwork.data(), &liwork, &info);
  if (info != 0) {
    fail(ErrorCategory::kNumerical, "zheevd failed with info " + std::to_string(info));
  }
  return w;
}

}  // namespace qefctl::detail
