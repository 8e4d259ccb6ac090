#include "qcompat/sdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <limits>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace qcompat::sdp {

const char* to_string(Status s) {
  switch (s) {
    case Status::kFeasible:
      return "Feasible";
    case Status::kInfeasible:
      return "Infeasible";
    case Status::kUndecided:
      return "Undecided";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Problem construction

SdpProblem::SdpProblem(std::vector<int> block_sizes) : block_sizes_(std::move(block_sizes)) {
  if (block_sizes_.empty()) throw std::invalid_argument("SdpProblem: no blocks");
  for (int n : block_sizes_) {
    if (n <= 0) throw std::invalid_argument("SdpProblem: block size must be positive");
  }
}

void SdpProblem::add_constraint(const CMatrix& f, double target, int block) {
  add_constraint(Constraint{{{block, f}}, target});
}

void SdpProblem::add_constraint(Constraint c) {
  for (auto& [block, f] : c.terms) {
    if (block < 0 || block >= num_blocks()) {
      throw std::invalid_argument("SdpProblem: constraint refers to a missing block");
    }
    if (f.rows() != block_sizes_[block] || f.cols() != block_sizes_[block]) {
      throw std::invalid_argument("SdpProblem: constraint matrix has wrong size for block " +
                                  std::to_string(block));
    }
    if (linalg::hermiticity_error(f) > 1e-10 * std::max(1.0, f.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("SdpProblem: constraint matrix is not Hermitian");
    }
    f = linalg::hermitian_part(f);
  }
  constraints_.push_back(std::move(c));
}

void SdpProblem::add_map_equality(const std::function<CMatrix(const CMatrix&)>& adjoint,
                                  const CMatrix& target, int block, std::string label) {
  if (target.rows() != target.cols()) {
    throw std::invalid_argument("add_map_equality: target not square");
  }
  groups_.emplace_back(num_constraints(), std::move(label));
  const CMatrix t = linalg::hermitian_part(target);
  for (const auto& g : linalg::gell_mann_basis(static_cast<int>(t.rows()))) {
    add_constraint(adjoint(g), linalg::real_trace_product(g, t), block);
  }
}

void SdpProblem::add_partial_trace_equality(const DimTuple& dims, const std::vector<int>& keep,
                                            const CMatrix& target, int block) {
  if (linalg::dim_product(dims) != block_sizes_.at(block)) {
    throw std::invalid_argument("add_partial_trace_equality: dims do not match block size");
  }
  std::string label = "partial_trace keep={";
  for (size_t k = 0; k < keep.size(); ++k) label += (k ? "," : "") + std::to_string(keep[k]);
  label += "}";
  add_map_equality([&](const CMatrix& g) { return linalg::embed_identity(g, dims, keep); },
                   target, block, std::move(label));
}

void SdpProblem::add_block_sum_equality(const std::vector<int>& blocks, const CMatrix& target) {
  groups_.emplace_back(num_constraints(), "block_sum");
  const CMatrix t = linalg::hermitian_part(target);
  for (const auto& g : linalg::gell_mann_basis(static_cast<int>(t.rows()))) {
    Constraint c;
    for (int b : blocks) c.terms.emplace_back(b, g);
    c.target = linalg::real_trace_product(g, t);
    add_constraint(std::move(c));
  }
}

double SdpProblem::affine_residual(const std::vector<CMatrix>& x) const {
  double worst = 0.0;
  for (const auto& c : constraints_) {
    double v = 0.0;
    for (const auto& [block, f] : c.terms) v += linalg::real_trace_product(f, x.at(block));
    worst = std::max(worst, std::abs(v - c.target));
  }
  return worst;
}

std::vector<CMatrix> SdpProblem::adjoint_apply(const RVector& y) const {
  std::vector<CMatrix> out;
  for (int n : block_sizes_) out.push_back(CMatrix::Zero(n, n));
  for (int k = 0; k < num_constraints(); ++k) {
    for (const auto& [block, f] : constraints_[k].terms) out[block] += y(k) * f;
  }
  return out;
}

RVector SdpProblem::targets() const {
  RVector b(num_constraints());
  for (int k = 0; k < num_constraints(); ++k) b(k) = constraints_[k].target;
  return b;
}

// ---------------------------------------------------------------------------
// Solver internals

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
// Interior-point fallback limits: iterations and flops per iteration.
constexpr int kInteriorMaxIter = 80;
constexpr double kInteriorBudget = 3e9;

// Isometric embedding of block-diagonal Hermitian matrices into R^N:
// diagonal entries as-is, strict upper triangle as sqrt(2) (Re, Im).
class Embedding {
 public:
  explicit Embedding(const std::vector<int>& sizes) : sizes_(sizes) {
    long off = 0;
    for (int n : sizes_) {
      offsets_.push_back(off);
      off += static_cast<long>(n) * n;
    }
    total_ = off;
  }

  long size() const { return total_; }
  const std::vector<int>& sizes() const { return sizes_; }

  void write_block(const CMatrix& m, int block, Eigen::Ref<RVector> out) const {
    const int n = sizes_[block];
    long p = offsets_[block];
    for (int i = 0; i < n; ++i) out(p++) = m(i, i).real();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const cplx v = 0.5 * (m(i, j) + std::conj(m(j, i)));
        out(p++) = kSqrt2 * v.real();
        out(p++) = kSqrt2 * v.imag();
      }
    }
  }

  CMatrix read_block(const RVector& v, int block) const {
    const int n = sizes_[block];
    CMatrix m(n, n);
    long p = offsets_[block];
    for (int i = 0; i < n; ++i) m(i, i) = v(p++);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double re = v(p++) / kSqrt2;
        const double im = v(p++) / kSqrt2;
        m(i, j) = cplx(re, im);
        m(j, i) = cplx(re, -im);
      }
    }
    return m;
  }

  RVector to_vec(const std::vector<CMatrix>& blocks) const {
    RVector v(total_);
    for (int b = 0; b < static_cast<int>(sizes_.size()); ++b) write_block(blocks[b], b, v);
    return v;
  }

  std::vector<CMatrix> to_blocks(const RVector& v) const {
    std::vector<CMatrix> out;
    for (int b = 0; b < static_cast<int>(sizes_.size()); ++b) out.push_back(read_block(v, b));
    return out;
  }

 private:
  std::vector<int> sizes_;
  std::vector<long> offsets_;
  long total_ = 0;
};

RMatrix constraint_matrix(const SdpProblem& p, const Embedding& emb) {
  RMatrix a = RMatrix::Zero(p.num_constraints(), emb.size());
  RVector row(emb.size());
  for (int k = 0; k < p.num_constraints(); ++k) {
    row.setZero();
    for (const auto& [block, f] : p.constraints()[k].terms) {
      RVector part = RVector::Zero(emb.size());
      emb.write_block(f, block, part);
      row += part;
    }
    a.row(k) = row;
  }
  return a;
}

// Orthogonal projection onto {x : A x = b} (or onto its least-squares
// relaxation when b is outside range(A)), via a rank-revealing
// factorization of the Gram matrix A A^T.
class AffineProjector {
 public:
  AffineProjector(const RMatrix& a, const RVector& b) : a_(a), b_(b) {
    const RMatrix gram = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
    const RVector& s = es.eigenvalues();
    const double smax = s.size() ? std::max(s.maxCoeff(), 0.0) : 0.0;
    std::vector<int> keep;
    for (int i = 0; i < s.size(); ++i) {
      if (s(i) > 1e-11 * smax) keep.push_back(i);
    }
    const int r = static_cast<int>(keep.size());
    u_.resize(a.rows(), r);
    inv_sqrt_.resize(r);
    for (int k = 0; k < r; ++k) {
      u_.col(k) = es.eigenvectors().col(keep[k]);
      inv_sqrt_(k) = 1.0 / std::sqrt(s(keep[k]));
    }
    w_ = inv_sqrt_.asDiagonal() * (u_.transpose() * a);
    c_ = inv_sqrt_.asDiagonal() * (u_.transpose() * b);
    b_null_ = b - u_ * (u_.transpose() * b);
    const double bscale = std::max(1.0, b.cwiseAbs().maxCoeff());
    inconsistent_ = b_null_.cwiseAbs().maxCoeff() > 1e-9 * bscale;
    x0_ = w_.transpose() * c_;
  }

  RVector project(const RVector& x) const { return x - w_.transpose() * (w_ * x - c_); }
  RVector project_subspace(const RVector& z) const { return w_.transpose() * (w_ * z); }

  /// Coefficients y with A^T y = -P_S(z).
  RVector farkas_coefficients(const RVector& z) const {
    return -(u_ * (inv_sqrt_.asDiagonal() * (w_ * z)));
  }

  /// Sigma^{-1/2} U_r^T: maps residuals in constraint space to the
  /// coordinates of a basis of linearly independent constraints.
  RMatrix whitening() const { return inv_sqrt_.asDiagonal() * u_.transpose(); }
  bool inconsistent() const { return inconsistent_; }
  const RVector& min_norm_solution() const { return x0_; }
  const RVector& b_null() const { return b_null_; }
  const RMatrix& a() const { return a_; }
  const RVector& b() const { return b_; }

 private:
  const RMatrix& a_;
  const RVector& b_;
  RMatrix u_;
  RVector inv_sqrt_;
  RMatrix w_;
  RVector c_;
  RVector b_null_;
  RVector x0_;
  bool inconsistent_ = false;
};

struct ConeProjection {
  RVector projected;
  std::vector<linalg::EigenDecomposition> eig;  // of the input, per block
};

ConeProjection project_psd(const Embedding& emb, const RVector& v) {
  ConeProjection out;
  out.projected.resize(v.size());
  for (int b = 0; b < static_cast<int>(emb.sizes().size()); ++b) {
    linalg::EigenDecomposition e = linalg::eigh(emb.read_block(v, b));
    const RVector clipped = e.values.cwiseMax(0.0);
    const CMatrix m = e.vectors * clipped.asDiagonal() * e.vectors.adjoint();
    emb.write_block(m, b, out.projected);
    out.eig.push_back(std::move(e));
  }
  return out;
}

double min_eigenvalue_blocks(const std::vector<CMatrix>& blocks) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) m = std::min(m, linalg::min_eigenvalue(b));
  return m;
}

double max_eigenvalue_blocks(const std::vector<CMatrix>& blocks) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) m = std::max(m, linalg::max_eigenvalue(b));
  return m;
}

bool primal_ok(const SdpProblem& p, const std::vector<CMatrix>& x, const Tolerances& tol,
               Diagnostics* d) {
  const double res = p.affine_residual(x);
  if (res > 0.5 * tol.feasibility) return false;
  const double lmin = min_eigenvalue_blocks(x);
  if (lmin < -0.5 * tol.psd_slack) return false;
  d->affine_residual = res;
  d->min_eigenvalue = lmin;
  return true;
}

// Factored refinement X_b = R_b R_b^dag started from the dominant
// eigenpairs of an approximate solution. The factorization keeps X exactly
// PSD, so driving the affine residual to zero with damped Gauss-Newton
// steps (minimum-norm form, m x m solves) gives a witness even when the
// feasible set has no interior and projections only converge sublinearly.
class Polisher {
 public:
  Polisher(const SdpProblem& p, const Tolerances& tol, RMatrix whitening)
      : p_(p), tol_(tol), white_(std::move(whitening)) {}

  std::optional<std::vector<CMatrix>> run(const std::vector<linalg::EigenDecomposition>& eig,
                                          Diagnostics* d) const {
    double lmax = 0.0;
    for (const auto& e : eig) lmax = std::max(lmax, e.values(0));
    if (lmax <= 0.0) return std::nullopt;
    std::vector<std::vector<int>> tried;
    for (double cut : {1e-2, 1e-4, 1e-6, 0.0}) {
      std::vector<int> ranks;
      for (const auto& e : eig) {
        int k = 0;
        while (k < e.values.size() && e.values(k) > cut * lmax) ++k;
        ranks.push_back(cut == 0.0 ? static_cast<int>(e.values.size()) : k);
      }
      if (std::find(tried.begin(), tried.end(), ranks) != tried.end()) continue;
      tried.push_back(ranks);
      std::vector<CMatrix> r;
      for (size_t b = 0; b < eig.size(); ++b) {
        const RVector roots = eig[b].values.head(ranks[b]).cwiseMax(0.0).cwiseSqrt();
        r.push_back(eig[b].vectors.leftCols(ranks[b]) * roots.asDiagonal());
      }
      if (auto x = refine(std::move(r), d)) return x;
    }
    return std::nullopt;
  }

 private:
  RVector residual(const std::vector<CMatrix>& x) const {
    RVector res(p_.num_constraints());
    for (int k = 0; k < p_.num_constraints(); ++k) {
      double v = 0.0;
      for (const auto& [block, f] : p_.constraints()[k].terms) {
        v += linalg::real_trace_product(f, x[block]);
      }
      res(k) = v - p_.constraints()[k].target;
    }
    return res;
  }

  static std::vector<CMatrix> gram(const std::vector<CMatrix>& r) {
    std::vector<CMatrix> x;
    for (const auto& rb : r) x.push_back(linalg::hermitian_part(rb * rb.adjoint()));
    return x;
  }

  std::optional<std::vector<CMatrix>> refine(std::vector<CMatrix> r, Diagnostics* d) const {
    const int m = p_.num_constraints();
    std::vector<long> offset;
    long n_params = 0;
    for (const auto& rb : r) {
      offset.push_back(n_params);
      n_params += 2 * rb.size();
    }
    if (n_params == 0) return std::nullopt;
    // Redundant constraints would make J J^T singular; work with an
    // independent set instead.
    auto whitened = [&](const std::vector<CMatrix>& x) { return RVector(white_ * residual(x)); };
    RVector res = whitened(gram(r));
    double mu = 1e-6 * std::max(1.0, res.squaredNorm());
    std::vector<double> history;
    for (int iter = 0; iter < 60; ++iter) {
      // Gauss-Newton should converge fast here; a stall means this rank
      // guess is wrong.
      history.push_back(res.norm());
      if (iter >= 8 && history[iter] > 0.5 * history[iter - 8]) break;
      {
        auto x = gram(r);
        if (residual(x).cwiseAbs().maxCoeff() <= 0.25 * tol_.feasibility &&
            primal_ok(p_, x, tol_, d)) {
          return x;
        }
      }
      // d tr[F (R R^dag)] = 2 Re tr[R^dag F dR]
      RMatrix jac = RMatrix::Zero(m, n_params);
      for (int k = 0; k < m; ++k) {
        for (const auto& [block, f] : p_.constraints()[k].terms) {
          const CMatrix fr = f * r[block];
          long q = offset[block];
          for (Eigen::Index j = 0; j < fr.cols(); ++j) {
            for (Eigen::Index i = 0; i < fr.rows(); ++i) {
              jac(k, q++) += 2.0 * fr(i, j).real();
              jac(k, q++) += 2.0 * fr(i, j).imag();
            }
          }
        }
      }
      jac = white_ * jac;
      const int mw = static_cast<int>(jac.rows());
      const RMatrix jjt = jac * jac.transpose();
      bool improved = false;
      for (int attempt = 0; attempt < 12 && !improved; ++attempt) {
        const RMatrix sys = jjt + mu * RMatrix::Identity(mw, mw);
        const RVector step = -(jac.transpose() * sys.ldlt().solve(res));
        std::vector<CMatrix> trial = r;
        for (size_t b = 0; b < r.size(); ++b) {
          long q = offset[b];
          for (Eigen::Index j = 0; j < trial[b].cols(); ++j) {
            for (Eigen::Index i = 0; i < trial[b].rows(); ++i) {
              trial[b](i, j) += cplx(step(q), step(q + 1));
              q += 2;
            }
          }
        }
        const RVector trial_res = whitened(gram(trial));
        if (trial_res.norm() < res.norm()) {
          r = std::move(trial);
          res = trial_res;
          mu = std::max(mu * 0.1, 1e-18);
          improved = true;
        } else {
          mu *= 10.0;
        }
      }
      if (!improved) break;
    }
    return std::nullopt;
  }

  const SdpProblem& p_;
  const Tolerances& tol_;
  RMatrix white_;
};

// Infeasible-start primal-dual interior point method (HKM direction) for
//   A(X) = b, X >= 0
// with zero objective, so the central path runs to the analytic center of
// the feasible set. Used when projections stall on thin feasible sets;
// iterates stay strictly PD and the primal residual shrinks with each
// accepted step. Works on a whitened, linearly independent constraint set.
class InteriorPoint {
 public:
  InteriorPoint(const SdpProblem& p, const Tolerances& tol, const AffineProjector& proj,
                const Embedding& emb)
      : p_(p), tol_(tol), proj_(proj), emb_(emb), white_(proj.whitening()) {}

  /// Rough flop count of one iteration, to skip problems that are too big.
  double cost() const {
    double n3 = 0.0;
    double n2 = 0.0;
    for (int n : p_.block_sizes()) {
      n3 += std::pow(n, 3.0);
      n2 += static_cast<double>(n) * n;
    }
    const double r = static_cast<double>(white_.rows());
    return r * n3 * 2.0 + r * r * n2 + r * p_.num_constraints() * n2;
  }

  std::optional<std::vector<CMatrix>> run(int max_iter, Diagnostics* d) {
    build();
    const int nb = p_.num_blocks();
    const int r = static_cast<int>(f_.size());
    if (r == 0) return std::nullopt;
    long total_dim = 0;
    for (int n : p_.block_sizes()) total_dim += n;
    const RVector& x0 = proj_.min_norm_solution();
    const double scale = std::max(1.0, 2.0 * x0.norm() / std::sqrt(double(total_dim)));
    std::vector<CMatrix> x, z;
    for (int n : p_.block_sizes()) {
      x.push_back(scale * linalg::identity(n));
      z.push_back(linalg::identity(n));
    }
    RVector y = RVector::Zero(r);

    for (int iter = 0; iter < max_iter; ++iter) {
      if (auto w = accept(x, d)) return w;
      // Residuals.
      const RVector rp = bw_ - apply(x);
      std::vector<CMatrix> rd(nb);
      for (int blk = 0; blk < nb; ++blk) rd[blk] = -z[blk];
      for (int i = 0; i < r; ++i) {
        for (int blk = 0; blk < nb; ++blk) rd[blk] -= y(i) * f_[i][blk];
      }
      double mu = 0.0;
      for (int blk = 0; blk < nb; ++blk) mu += linalg::real_trace_product(x[blk], z[blk]);
      mu /= static_cast<double>(total_dim);

      std::vector<CMatrix> zinv(nb);
      for (int blk = 0; blk < nb; ++blk) {
        zinv[blk] = linalg::hermitian_part(z[blk].llt().solve(linalg::identity(z[blk].rows())));
      }
      // Schur complement M_ij = Re tr(F_i X F_j Z^-1).
      std::vector<std::vector<CMatrix>> g(r, std::vector<CMatrix>(nb));
      for (int j = 0; j < r; ++j) {
        for (int blk = 0; blk < nb; ++blk) g[j][blk] = x[blk] * f_[j][blk] * zinv[blk];
      }
      RMatrix m(r, r);
      for (int i = 0; i < r; ++i) {
        for (int j = i; j < r; ++j) {
          double v = 0.0;
          for (int blk = 0; blk < nb; ++blk) {
            v += f_[i][blk].transpose().cwiseProduct(g[j][blk]).sum().real();
          }
          m(i, j) = v;
          m(j, i) = v;
        }
      }
      const double reg = 1e-14 * std::max(1.0, m.diagonal().maxCoeff());
      m.diagonal().array() += reg;
      const Eigen::LDLT<RMatrix> ldlt(m);
      if (ldlt.info() != Eigen::Success) return std::nullopt;

      const double sigma = 0.2;
      // dX = sigma mu Z^-1 - X - X dZ Z^-1, dZ = rd - A^T dy, A(dX) = rp.
      std::vector<CMatrix> base(nb);
      for (int blk = 0; blk < nb; ++blk) {
        base[blk] = sigma * mu * zinv[blk] - x[blk] - x[blk] * rd[blk] * zinv[blk];
      }
      const RVector rhs = rp - apply(base);
      const RVector dy = ldlt.solve(rhs);
      std::vector<CMatrix> dz(nb), dx(nb);
      for (int blk = 0; blk < nb; ++blk) {
        dz[blk] = rd[blk];
        for (int i = 0; i < r; ++i) dz[blk] -= dy(i) * f_[i][blk];
        dz[blk] = linalg::hermitian_part(dz[blk]);
        dx[blk] = linalg::hermitian_part(sigma * mu * zinv[blk] - x[blk] - x[blk] * dz[blk] * zinv[blk]);
      }
      const double ap = std::min(1.0, 0.95 * max_step(x, dx));
      const double ad = std::min(1.0, 0.95 * max_step(z, dz));
      if (ap < 1e-10 && ad < 1e-10) return std::nullopt;
      for (int blk = 0; blk < nb; ++blk) {
        x[blk] = linalg::hermitian_part(x[blk] + ap * dx[blk]);
        z[blk] = linalg::hermitian_part(z[blk] + ad * dz[blk]);
      }
      y += ad * dy;
      if (d) ++d->interior_iterations;
    }
    return accept(x, d);
  }

 private:
  void build() {
    bw_ = white_ * p_.targets();
    const int r = static_cast<int>(white_.rows());
    f_.assign(r, {});
    for (int i = 0; i < r; ++i) {
      for (int n : p_.block_sizes()) f_[i].push_back(CMatrix::Zero(n, n));
    }
    for (int k = 0; k < p_.num_constraints(); ++k) {
      for (const auto& [block, f] : p_.constraints()[k].terms) {
        for (int i = 0; i < r; ++i) {
          if (white_(i, k) != 0.0) f_[i][block] += white_(i, k) * f;
        }
      }
    }
  }

  RVector apply(const std::vector<CMatrix>& x) const {
    RVector out(f_.size());
    for (size_t i = 0; i < f_.size(); ++i) {
      double v = 0.0;
      for (size_t blk = 0; blk < x.size(); ++blk) v += linalg::real_trace_product(f_[i][blk], x[blk]);
      out(i) = v;
    }
    return out;
  }

  // Largest a with X + a dX still PD.
  static double max_step(const std::vector<CMatrix>& x, const std::vector<CMatrix>& dx) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t blk = 0; blk < x.size(); ++blk) {
      const Eigen::LLT<CMatrix> llt(x[blk]);
      if (llt.info() != Eigen::Success) return 0.0;
      const CMatrix l_inv = llt.matrixL().solve(linalg::identity(x[blk].rows()));
      const double lmin = linalg::min_eigenvalue(linalg::hermitian_part(l_inv * dx[blk] * l_inv.adjoint()));
      if (lmin < 0.0) best = std::min(best, -1.0 / lmin);
    }
    return best;
  }

  // The iterate itself, or its minimum-norm affine correction, if either
  // passes the primal checks.
  std::optional<std::vector<CMatrix>> accept(const std::vector<CMatrix>& x, Diagnostics* d) const {
    if (primal_ok(p_, x, tol_, d)) return x;
    const auto corrected = emb_.to_blocks(proj_.project(emb_.to_vec(x)));
    if (primal_ok(p_, corrected, tol_, d)) return corrected;
    return std::nullopt;
  }

  const SdpProblem& p_;
  const Tolerances& tol_;
  const AffineProjector& proj_;
  const Embedding& emb_;
  RMatrix white_;
  RVector bw_;
  std::vector<std::vector<CMatrix>> f_;  // whitened constraints, per block
};

}  // namespace

// ---------------------------------------------------------------------------
// solve_feasibility

SdpVerdict solve_feasibility(const SdpProblem& problem, const SolverOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  SdpVerdict verdict;
  Diagnostics& diag = verdict.diagnostics;
  const Tolerances& tol = options.tol;
  auto finish = [&]() -> SdpVerdict {
    diag.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return verdict;
  };

  const Embedding emb(problem.block_sizes());
  const RVector b = problem.targets();
  std::vector<CMatrix> zero_blocks;
  for (int n : problem.block_sizes()) zero_blocks.push_back(CMatrix::Zero(n, n));
  if (problem.num_constraints() == 0 || b.cwiseAbs().maxCoeff() == 0.0) {
    verdict.status = Status::kFeasible;
    verdict.witness = zero_blocks;
    diag.affine_residual = 0.0;
    diag.min_eigenvalue = 0.0;
    return finish();
  }

  const RMatrix a = constraint_matrix(problem, emb);
  const AffineProjector proj(a, b);
  diag.affine_inconsistent = proj.inconsistent();
  const Polisher polisher(problem, tol, proj.whitening());
  InteriorPoint interior(problem, tol, proj, emb);
  bool interior_tried = false;

  // Primal iterate: alternating projections between the affine set and the
  // PSD cone, started from the seeded-perturbed least-norm solution.
  RVector x = proj.min_norm_solution();
  {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = 1e-3 * std::max(1e-12, x.norm() / std::sqrt(double(x.size())));
    for (long i = 0; i < x.size(); ++i) x(i) += scale * normal(rng);
    x = proj.project(x);
  }
  double last_distance = std::numeric_limits<double>::infinity();
  ConeProjection last_cone;

  // Farkas iterate: z in S = range(A^T) on the normalizing hyperplane
  // <x0, z> = -1 (dropped when b is outside range(A)), pushed into the PSD
  // cone by the same alternating projections.
  const RVector& x0 = proj.min_norm_solution();
  const double x0_sq = x0.squaredNorm();
  auto project_farkas_affine = [&](const RVector& z) -> RVector {
    RVector out = proj.project_subspace(z);
    if (!proj.inconsistent() && x0_sq > 0.0) out -= ((x0.dot(out) + 1.0) / x0_sq) * x0;
    return out;
  };
  RVector identity_vec(emb.size());
  for (int blk = 0; blk < problem.num_blocks(); ++blk) {
    emb.write_block(linalg::identity(problem.block_sizes()[blk]), blk, identity_vec);
  }
  // A positive definite direction inside S, if any, lets near-certificates
  // be pushed strictly into the cone.
  const RVector repair_dir = proj.project_subspace(identity_vec);
  const double repair_lmin = min_eigenvalue_blocks(emb.to_blocks(repair_dir));
  RVector z = project_farkas_affine(identity_vec);

  auto try_certificate = [&](const RVector& zin) -> bool {
    RVector zc = project_farkas_affine(zin);
    double lmin = min_eigenvalue_blocks(emb.to_blocks(zc));
    if (lmin < 10.0 * tol.margin && repair_lmin > 1e-12) {
      zc += ((10.0 * tol.margin - lmin) / repair_lmin) * repair_dir;
    }
    RVector y = proj.farkas_coefficients(zc);
    if (proj.inconsistent()) {
      const RVector& bn = proj.b_null();
      y += ((1.0 - b.dot(y)) / bn.squaredNorm()) * bn;
    }
    const auto m = problem.adjoint_apply(y);
    const double lam = max_eigenvalue_blocks(m);
    const double obj = b.dot(y);
    if (!(lam < 0.0 && obj > 0.0)) return false;
    const double s = 1.0 / std::min(-lam, obj);
    if (-lam * s < tol.margin || obj * s < tol.margin) return false;
    verdict.status = Status::kInfeasible;
    verdict.certificate = s * y;
    diag.certificate_lambda_max = lam * s;
    diag.certificate_objective = obj * s;
    return true;
  };

  const int chunk = std::max(1, options.check_every);
  int next_polish = 4 * chunk;
  const bool run_primal = !proj.inconsistent();
  int iter = 0;
  while (iter < options.max_iter) {
    const int steps = std::min(chunk, options.max_iter - iter);
    if (run_primal) {
      for (int s = 0; s < steps; ++s) {
        last_cone = project_psd(emb, x);
        const RVector& c = last_cone.projected;
        const RVector xn = proj.project(c);
        const double dist = (c - xn).norm();
        if (std::isfinite(last_distance)) {
          diag.max_distance_increase = std::max(diag.max_distance_increase, dist - last_distance);
        }
        last_distance = dist;
        x = xn;
      }
      diag.iterations += steps;
      diag.primal_distance = last_distance;
      // x is affine-exact; its distance to the cone bounds -lambda_min.
      const RVector& c = last_cone.projected;
      const auto cb = emb.to_blocks(c);
      if (primal_ok(problem, cb, tol, &diag)) {
        verdict.status = Status::kFeasible;
        verdict.witness = cb;
        return finish();
      }
      const auto xb = emb.to_blocks(x);
      if ((x - c).norm() < tol.psd_slack && primal_ok(problem, xb, tol, &diag)) {
        verdict.status = Status::kFeasible;
        verdict.witness = xb;
        return finish();
      }
    }
    for (int s = 0; s < steps; ++s) {
      const ConeProjection cp = project_psd(emb, z);
      z = project_farkas_affine(cp.projected);
    }
    diag.farkas_iterations += steps;
    if (try_certificate(z)) return finish();
    iter += steps;

    if (run_primal && iter >= next_polish) {
      next_polish *= 2;
      if (auto w = polisher.run(last_cone.eig, &diag)) {
        verdict.status = Status::kFeasible;
        verdict.witness = std::move(*w);
        diag.polished = true;
        return finish();
      }
      if (!interior_tried && interior.cost() < kInteriorBudget) {
        interior_tried = true;
        if (auto w = interior.run(kInteriorMaxIter, &diag)) {
          verdict.status = Status::kFeasible;
          verdict.witness = std::move(*w);
          return finish();
        }
      }
    }
  }
  if (run_primal && !last_cone.eig.empty()) {
    if (auto w = polisher.run(last_cone.eig, &diag)) {
      verdict.status = Status::kFeasible;
      verdict.witness = std::move(*w);
      diag.polished = true;
      return finish();
    }
  }
  verdict.status = Status::kUndecided;
  return finish();
}

// ---------------------------------------------------------------------------
// certify

bool certify(const SdpVerdict& verdict, const SdpProblem& problem, const Tolerances& tol) {
  switch (verdict.status) {
    case Status::kFeasible: {
      if (static_cast<int>(verdict.witness.size()) != problem.num_blocks()) return false;
      for (int blk = 0; blk < problem.num_blocks(); ++blk) {
        const auto& w = verdict.witness[blk];
        const int n = problem.block_sizes()[blk];
        if (w.rows() != n || w.cols() != n || !w.allFinite()) return false;
        if (linalg::hermiticity_error(w) > 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff())) {
          return false;
        }
        if (linalg::min_eigenvalue(w) < -tol.psd_slack) return false;
      }
      return problem.affine_residual(verdict.witness) <= tol.feasibility;
    }
    case Status::kInfeasible: {
      if (verdict.certificate.size() != problem.num_constraints()) return false;
      if (!verdict.certificate.allFinite()) return false;
      const auto m = problem.adjoint_apply(verdict.certificate);
      for (const auto& blk : m) {
        if (linalg::max_eigenvalue(blk) > -tol.margin) return false;
      }
      return problem.targets().dot(verdict.certificate) >= tol.margin;
    }
    case Status::kUndecided:
      return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// dump_json

void dump_json(const SdpProblem& problem, const std::string& path) {
  using nlohmann::json;
  auto encode = [](const CMatrix& m) {
    json entries = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        entries.push_back({m(i, j).real(), m(i, j).imag()});
      }
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
  };
  json doc;
  doc["block_sizes"] = problem.block_sizes();
  json groups = json::array();
  for (const auto& [first, label] : problem.groups()) {
    groups.push_back({{"first_constraint", first}, {"label", label}});
  }
  doc["groups"] = groups;
  json cons = json::array();
  for (const auto& c : problem.constraints()) {
    json terms = json::array();
    for (const auto& [block, f] : c.terms) {
      terms.push_back({{"block", block}, {"matrix", encode(f)}});
    }
    cons.push_back({{"terms", terms}, {"target", c.target}});
  }
  doc["constraints"] = cons;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_json: cannot open " + path);
  out << doc.dump(1) << "\n";
}

}  // namespace qcompat::sdp
