#pragma once

// Dense complex linear algebra used by the channel calculus and the
// feasibility solver.
//
// Tensor convention: for a DimTuple (d_0, d_1, ..., d_{k-1}) the composite
// basis index is row-major with subsystem 0 leftmost, i.e.
//   idx = ((i_0 * d_1 + i_1) * d_2 + i_2) ...
// which is the index order produced by kron(A_0, kron(A_1, ...)).

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace qcompat {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Subsystem dimensions of a tensor-product space.
using DimTuple = std::vector<int>;

namespace linalg {

inline constexpr double kHermitianTol = 1e-10;

int dim_product(const DimTuple& dims);

CMatrix identity(int d);
CMatrix zeros(int rows, int cols);
/// |i><j| in dimension d.
CMatrix matrix_unit(int d, int i, int j);
CVector basis_vector(int d, int i);

CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();

CMatrix kron(const CMatrix& a, const CMatrix& b);
CMatrix kron_all(const std::vector<CMatrix>& factors);

/// Trace over every subsystem not listed in `keep`. The kept subsystems
/// appear in the result in the order given by `keep`.
CMatrix partial_trace(const CMatrix& a, const DimTuple& dims,
                      const std::vector<int>& keep);

/// Reorders tensor factors: subsystem perm[k] of the input becomes
/// subsystem k of the output.
CMatrix permute_subsystems(const CMatrix& a, const DimTuple& dims,
                           const std::vector<int>& perm);

/// Transposes the listed subsystems in place.
CMatrix partial_transpose(const CMatrix& a, const DimTuple& dims,
                          const std::vector<int>& which);

/// Adjoint of partial_trace: embeds `a` (living on the kept factors, in
/// `keep` order) as a ⊗ I on the full space.
CMatrix embed_identity(const CMatrix& a, const DimTuple& dims,
                       const std::vector<int>& keep);

CMatrix hermitian_part(const CMatrix& a);
double hermiticity_error(const CMatrix& a);
cplx trace(const CMatrix& a);
double frobenius_distance(const CMatrix& a, const CMatrix& b);
/// Re tr[A B] without forming the product.
double real_trace_product(const CMatrix& a, const CMatrix& b);

struct EigenDecomposition {
  RVector values;   // descending
  CMatrix vectors;  // column k belongs to values[k]
};

/// Spectral decomposition of a Hermitian matrix. The input is symmetrized
/// first; throws std::invalid_argument if it is further than kHermitianTol
/// (relative to max(1, |A|)) from Hermitian.
EigenDecomposition eigh(const CMatrix& a);
RVector eigvalsh(const CMatrix& a);
double min_eigenvalue(const CMatrix& a);
double max_eigenvalue(const CMatrix& a);

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
CMatrix psd_projection(const CMatrix& a);
/// Nearest matrix with all eigenvalues >= floor.
CMatrix clip_eigenvalues_below(const CMatrix& a, double floor);
/// Principal square root of a PSD matrix; tiny negative eigenvalues are
/// treated as zero.
CMatrix psd_sqrt(const CMatrix& a);

/// Orthonormal Hermitian basis of d x d matrices under tr(A B): the
/// generalized Gell-Mann matrices followed by I/sqrt(d).
std::vector<CMatrix> gell_mann_basis(int d);

/// Isometry C^d_from -> C^d_to drawn from a seeded complex Gaussian
/// matrix, orthonormalized by QR with the R diagonal made positive.
CMatrix random_isometry(int d_from, int d_to, std::uint64_t seed);

/// Random density matrix of the given rank (Wishart style).
CMatrix random_density_matrix(int d, int rank, std::uint64_t seed);

}  // namespace linalg
}  // namespace qcompat
