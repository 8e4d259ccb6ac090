#include "qcompat/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace qcompat::linalg {

namespace {

std::vector<long> strides_of(const DimTuple& dims) {
  std::vector<long> strides(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) {
    strides[k] = strides[k + 1] * dims[k + 1];
  }
  return strides;
}

// Offsets into the full index space for every multi-index over `subset`,
// enumerated row-major in the order `subset` lists the subsystems.
std::vector<long> subset_offsets(const DimTuple& dims,
                                 const std::vector<long>& strides,
                                 const std::vector<int>& subset) {
  std::vector<long> offsets{0};
  for (int s : subset) {
    std::vector<long> next;
    next.reserve(offsets.size() * dims[s]);
    for (long base : offsets) {
      for (int i = 0; i < dims[s]; ++i) next.push_back(base + i * strides[s]);
    }
    offsets = std::move(next);
  }
  return offsets;
}

void check_square(const CMatrix& a, const DimTuple& dims, const char* what) {
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument(std::string(what) + ": non-positive dimension");
  }
  const long n = dim_product(dims);
  if (a.rows() != n || a.cols() != n) {
    throw std::invalid_argument(std::string(what) + ": matrix is " +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " but dims give " +
                                std::to_string(n));
  }
}

std::vector<int> complement(int count, const std::vector<int>& keep) {
  std::vector<bool> kept(count, false);
  for (int k : keep) {
    if (k < 0 || k >= count || kept[k]) {
      throw std::invalid_argument("subsystem index out of range or repeated");
    }
    kept[k] = true;
  }
  std::vector<int> rest;
  for (int k = 0; k < count; ++k) {
    if (!kept[k]) rest.push_back(k);
  }
  return rest;
}

}  // namespace

int dim_product(const DimTuple& dims) {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
}

CMatrix identity(int d) { return CMatrix::Identity(d, d); }

CMatrix zeros(int rows, int cols) { return CMatrix::Zero(rows, cols); }

CMatrix matrix_unit(int d, int i, int j) {
  CMatrix m = CMatrix::Zero(d, d);
  m(i, j) = 1.0;
  return m;
}

CVector basis_vector(int d, int i) {
  CVector v = CVector::Zero(d);
  v(i) = 1.0;
  return v;
}

CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

CMatrix pauli_y() {
  CMatrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

CMatrix pauli_z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix kron_all(const std::vector<CMatrix>& factors) {
  CMatrix out = CMatrix::Ones(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

CMatrix partial_trace(const CMatrix& a, const DimTuple& dims,
                      const std::vector<int>& keep) {
  check_square(a, dims, "partial_trace");
  const auto strides = strides_of(dims);
  const auto traced = complement(static_cast<int>(dims.size()), keep);
  const auto kept_off = subset_offsets(dims, strides, keep);
  const auto traced_off = subset_offsets(dims, strides, traced);
  const long n = static_cast<long>(kept_off.size());
  CMatrix out = CMatrix::Zero(n, n);
  for (long r = 0; r < n; ++r) {
    for (long c = 0; c < n; ++c) {
      cplx acc = 0.0;
      for (long s : traced_off) acc += a(kept_off[r] + s, kept_off[c] + s);
      out(r, c) = acc;
    }
  }
  return out;
}

CMatrix permute_subsystems(const CMatrix& a, const DimTuple& dims,
                           const std::vector<int>& perm) {
  check_square(a, dims, "permute_subsystems");
  if (perm.size() != dims.size() ||
      !complement(static_cast<int>(dims.size()), perm).empty()) {
    throw std::invalid_argument("permute_subsystems: not a permutation");
  }
  const auto strides = strides_of(dims);
  const auto map = subset_offsets(dims, strides, perm);
  const long n = static_cast<long>(map.size());
  CMatrix out(n, n);
  for (long r = 0; r < n; ++r) {
    for (long c = 0; c < n; ++c) out(r, c) = a(map[r], map[c]);
  }
  return out;
}

CMatrix partial_transpose(const CMatrix& a, const DimTuple& dims,
                          const std::vector<int>& which) {
  check_square(a, dims, "partial_transpose");
  const auto strides = strides_of(dims);
  const auto rest = complement(static_cast<int>(dims.size()), which);
  const auto t_off = subset_offsets(dims, strides, which);
  const auto r_off = subset_offsets(dims, strides, rest);
  CMatrix out(a.rows(), a.cols());
  for (long ra : r_off) {
    for (long ta : t_off) {
      for (long rb : r_off) {
        for (long tb : t_off) out(ra + ta, rb + tb) = a(ra + tb, rb + ta);
      }
    }
  }
  return out;
}

CMatrix embed_identity(const CMatrix& a, const DimTuple& dims,
                       const std::vector<int>& keep) {
  const auto strides = strides_of(dims);
  const auto traced = complement(static_cast<int>(dims.size()), keep);
  const auto kept_off = subset_offsets(dims, strides, keep);
  const auto traced_off = subset_offsets(dims, strides, traced);
  const long n = static_cast<long>(kept_off.size());
  if (a.rows() != n || a.cols() != n) {
    throw std::invalid_argument("embed_identity: operand does not match kept subsystems");
  }
  const long full = dim_product(dims);
  CMatrix out = CMatrix::Zero(full, full);
  for (long r = 0; r < n; ++r) {
    for (long c = 0; c < n; ++c) {
      const cplx v = a(r, c);
      if (v == cplx(0.0)) continue;
      for (long s : traced_off) out(kept_off[r] + s, kept_off[c] + s) = v;
    }
  }
  return out;
}

CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

double hermiticity_error(const CMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

cplx trace(const CMatrix& a) { return a.trace(); }

double frobenius_distance(const CMatrix& a, const CMatrix& b) {
  return (a - b).norm();
}

double real_trace_product(const CMatrix& a, const CMatrix& b) {
  return a.transpose().cwiseProduct(b).sum().real();
}

EigenDecomposition eigh(const CMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigh: matrix not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (hermiticity_error(a) > kHermitianTol * scale) {
    throw std::invalid_argument("eigh: matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(a));
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigh: eigensolver did not converge");
  }
  // Eigen returns ascending order.
  EigenDecomposition out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

RVector eigvalsh(const CMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigvalsh: matrix not square");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(a), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().reverse();
}

double min_eigenvalue(const CMatrix& a) {
  const RVector v = eigvalsh(a);
  return v(v.size() - 1);
}

double max_eigenvalue(const CMatrix& a) { return eigvalsh(a)(0); }

CMatrix clip_eigenvalues_below(const CMatrix& a, double floor) {
  const EigenDecomposition e = eigh(a);
  const RVector clipped = e.values.cwiseMax(floor);
  return e.vectors * clipped.asDiagonal() * e.vectors.adjoint();
}

CMatrix psd_projection(const CMatrix& a) { return clip_eigenvalues_below(a, 0.0); }

CMatrix psd_sqrt(const CMatrix& a) {
  const EigenDecomposition e = eigh(a);
  const RVector roots = e.values.cwiseMax(0.0).cwiseSqrt();
  return e.vectors * roots.asDiagonal() * e.vectors.adjoint();
}

std::vector<CMatrix> gell_mann_basis(int d) {
  std::vector<CMatrix> basis;
  basis.reserve(static_cast<size_t>(d) * d);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      CMatrix s = CMatrix::Zero(d, d);
      s(j, k) = inv_sqrt2;
      s(k, j) = inv_sqrt2;
      basis.push_back(std::move(s));
      CMatrix t = CMatrix::Zero(d, d);
      t(j, k) = cplx(0, -inv_sqrt2);
      t(k, j) = cplx(0, inv_sqrt2);
      basis.push_back(std::move(t));
    }
  }
  for (int l = 1; l < d; ++l) {
    CMatrix g = CMatrix::Zero(d, d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
    for (int m = 0; m < l; ++m) g(m, m) = norm;
    g(l, l) = -l * norm;
    basis.push_back(std::move(g));
  }
  basis.push_back(identity(d) / std::sqrt(static_cast<double>(d)));
  return basis;
}

CMatrix random_isometry(int d_from, int d_to, std::uint64_t seed) {
  if (d_from <= 0 || d_to < d_from) {
    throw std::invalid_argument("random_isometry: need 0 < d_from <= d_to");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix g(d_to, d_from);
  for (int c = 0; c < d_from; ++c) {
    for (int r = 0; r < d_to; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(r, c) = cplx(re, im);
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d_to, d_from);
  const CMatrix& r = qr.matrixQR();
  for (int k = 0; k < d_from; ++k) {
    const cplx rk = r(k, k);
    const double mag = std::abs(rk);
    if (mag > 0.0) q.col(k) *= rk / mag;
  }
  return q;
}

CMatrix random_density_matrix(int d, int rank, std::uint64_t seed) {
  if (rank < 1 || rank > d) throw std::invalid_argument("random_density_matrix: bad rank");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix g(d, rank);
  for (int c = 0; c < rank; ++c) {
    for (int r = 0; r < d; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(r, c) = cplx(re, im);
    }
  }
  CMatrix rho = g * g.adjoint();
  return hermitian_part(rho / rho.trace().real());
}

}  // namespace qcompat::linalg
