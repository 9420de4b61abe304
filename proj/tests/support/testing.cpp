#include "testing.hpp"

#include <algorithm>

namespace qefctl::testing {

PlantSpec canonical_spec() {
  PlantSpec p;
  p.n = 2;
  p.m = 2;
  p.d = 1;
  p.r = 1;
  p.Theta = RMatrix{{0.0, 1.0}, {-1.0, 0.0}};
  p.R = RMatrix::Identity(2, 2);
  p.M = RMatrix::Identity(2, 2);
  p.N = RMatrix{{1.0, 0.0}};
  p.D = RMatrix{{1.0, 0.0}};
  return p;
}

Weights canonical_weights() {
  Weights w;
  w.S = RMatrix{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}};
  w.K = RMatrix{{0.0}, {0.0}, {1.0}};
  return w;
}

ControllerParams canonical_offset_controller() {
  ControllerParams k;
  k.a = RMatrix{{-2.1, 1.9}, {-2.3, -1.8}};
  k.b = RMatrix{{0.3}, {0.2}};
  k.c = RMatrix{{0.4, -0.5}};
  return k;
}

RMatrix random_real(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::normal_distribution<double> dist(0.0, scale);
  RMatrix out(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) out(i, j) = dist(rng);
  }
  return out;
}

CMatrix random_complex(std::mt19937_64& rng, int rows, int cols, double scale) {
  const RMatrix re = random_real(rng, rows, cols, scale);
  const RMatrix im = random_real(rng, rows, cols, scale);
  return re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
}

RMatrix random_stable(std::mt19937_64& rng, int n, double margin) {
  RMatrix a = random_real(rng, n, n);
  const double shift =
      a.eigenvalues().real().maxCoeff() + margin;
  a.diagonal().array() -= shift;
  return a;
}

namespace {

LCMatrix widen(const CMatrix& m) {
  LCMatrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out(i, j) = LComplex(m(i, j).real(), m(i, j).imag());
    }
  }
  return out;
}

CMatrix narrow(const LCMatrix& m) {
  CMatrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out(i, j) = Complex(static_cast<double>(m(i, j).real()),
                          static_cast<double>(m(i, j).imag()));
    }
  }
  return out;
}

// sum_k coeff(k) m^k until the terms vanish.
CMatrix power_series(const CMatrix& m, const std::function<long double(int)>& coeff,
                     int stride, int first) {
  const LCMatrix x = widen(m);
  const Eigen::Index n = m.rows();
  LCMatrix step = LCMatrix::Identity(n, n);
  for (int s = 0; s < stride; ++s) step = step * x;
  LCMatrix term = LCMatrix::Identity(n, n);
  for (int s = 0; s < first; ++s) term = term * x;
  LCMatrix sum = LCMatrix::Zero(n, n);
  for (int k = first; k < 400; k += stride) {
    const LCMatrix add = coeff(k) * term;
    sum += add;
    long double mag = 0.0L;
    for (Eigen::Index i = 0; i < add.size(); ++i) mag = std::max(mag, std::abs(add(i)));
    if (k > 8 && mag < 1e-30L) break;
    term = term * step;
  }
  return narrow(sum);
}

long double factorial(int k) {
  long double f = 1.0L;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

CMatrix series_exp(const CMatrix& m) {
  return power_series(m, [](int k) { return 1.0L / factorial(k); }, 1, 0);
}

CMatrix series_cos(const CMatrix& m) {
  return power_series(
      m, [](int k) { return ((k / 2) % 2 == 0 ? 1.0L : -1.0L) / factorial(k); }, 2, 0);
}

CMatrix series_sin(const CMatrix& m) {
  return power_series(
      m, [](int k) { return (((k - 1) / 2) % 2 == 0 ? 1.0L : -1.0L) / factorial(k); }, 2, 1);
}

CMatrix series_sinc(const CMatrix& m) {
  // sin z / z = sum (-1)^j z^{2j} / (2j+1)!
  return power_series(
      m, [](int k) { return ((k / 2) % 2 == 0 ? 1.0L : -1.0L) / factorial(k + 1); }, 2, 0);
}

RMatrix kronecker_lyapunov(const RMatrix& a, const RMatrix& w) {
  const Eigen::Index n = a.rows();
  RMatrix op = RMatrix::Zero(n * n, n * n);
  // vec(A X) = (I kron A) vec X, vec(X A^T) = (A kron I) vec X.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        op(i * n + j, i * n + k) += a(j, k);
        op(i * n + j, k * n + j) += a(i, k);
      }
    }
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(w.data(), n * n);
  const Eigen::VectorXd x = op.fullPivLu().solve(-rhs);
  return Eigen::Map<const RMatrix>(x.data(), n, n);
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

CMatrix central_difference(const std::function<CMatrix(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace qefctl::testing
