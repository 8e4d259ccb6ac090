#include "qcompat/channel.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qcompat {

using linalg::dim_product;

namespace {

DimTuple prepend(int d, const DimTuple& rest) {
  DimTuple out{d};
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void require_same_dim(const CMatrix& x, int d, const char* what) {
  if (x.rows() != d || x.cols() != d) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(d) + "x" +
                                std::to_string(d) + " operand, got " +
                                std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Channel

Channel::Channel(int d_in, DimTuple out_dims, CMatrix choi, double tol)
    : d_in_(d_in), out_dims_(std::move(out_dims)), choi_(std::move(choi)) {
  if (auto err = check(d_in_, out_dims_, choi_, tol)) {
    throw std::invalid_argument("invalid channel: " + *err);
  }
  choi_ = linalg::hermitian_part(choi_);
}

std::optional<std::string> Channel::check(int d_in, const DimTuple& out_dims,
                                          const CMatrix& choi, double tol) {
  if (d_in <= 0) return "input dimension must be positive";
  if (out_dims.empty()) return "output dimensions are empty";
  for (int d : out_dims) {
    if (d <= 0) return "output dimensions must be positive";
  }
  const long n = static_cast<long>(d_in) * dim_product(out_dims);
  if (choi.rows() != n || choi.cols() != n) {
    return "Choi matrix is " + std::to_string(choi.rows()) + "x" +
           std::to_string(choi.cols()) + ", expected " + std::to_string(n) + "x" +
           std::to_string(n);
  }
  if (!choi.allFinite()) return "Choi matrix has non-finite entries";
  const double herm = linalg::hermiticity_error(choi);
  if (herm > tol) return "Choi matrix is not Hermitian (deviation " + fmt_double(herm) + ")";
  const double lmin = linalg::min_eigenvalue(choi);
  if (lmin < -tol) {
    return "Choi matrix is not positive semidefinite (eigenvalue " + fmt_double(lmin) + ")";
  }
  const CMatrix tp = linalg::partial_trace(choi, {d_in, static_cast<int>(n / d_in)}, {0});
  const double tp_err = (tp - linalg::identity(d_in)).cwiseAbs().maxCoeff();
  if (tp_err > tol) {
    return "not trace preserving (|Tr_out J - I| = " + fmt_double(tp_err) + ")";
  }
  return std::nullopt;
}

Channel Channel::from_approximate_choi(int d_in, DimTuple out_dims, const CMatrix& choi) {
  const int d_out = dim_product(out_dims);
  const CMatrix psd = linalg::psd_projection(linalg::hermitian_part(choi));
  const CMatrix t = linalg::hermitian_part(linalg::partial_trace(psd, {d_in, d_out}, {0}));
  const linalg::EigenDecomposition e = linalg::eigh(t);
  if (e.values.minCoeff() <= 1e-12) {
    throw std::invalid_argument("from_approximate_choi: input marginal is singular");
  }
  const RVector inv_sqrt = e.values.cwiseSqrt().cwiseInverse();
  const CMatrix a = e.vectors * inv_sqrt.asDiagonal() * e.vectors.adjoint();
  const CMatrix lift = linalg::kron(a, linalg::identity(d_out));
  CMatrix fixed = linalg::hermitian_part(lift * psd * lift.adjoint());
  return Channel(d_in, std::move(out_dims), std::move(fixed), 1e-7);
}

DimTuple Channel::choi_dims() const { return prepend(d_in_, out_dims_); }

CMatrix Channel::schrodinger(const CMatrix& rho) const {
  require_same_dim(rho, d_in_, "schrodinger");
  const int d_out = this->d_out();
  CMatrix out = CMatrix::Zero(d_out, d_out);
  for (int i = 0; i < d_in_; ++i) {
    for (int j = 0; j < d_in_; ++j) {
      const cplx r = rho(i, j);
      if (r == cplx(0.0)) continue;
      out += r * choi_.block(i * d_out, j * d_out, d_out, d_out);
    }
  }
  return out;
}

CMatrix Channel::heisenberg(const CMatrix& t) const {
  const int d_out = this->d_out();
  require_same_dim(t, d_out, "heisenberg");
  CMatrix out(d_in_, d_in_);
  // Lambda(T)_{ji} = sum_{ab} J_{(i,a),(j,b)} T_{ba}
  for (int i = 0; i < d_in_; ++i) {
    for (int j = 0; j < d_in_; ++j) {
      out(j, i) = choi_.block(i * d_out, j * d_out, d_out, d_out)
                      .cwiseProduct(t.transpose())
                      .sum();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Observable

Observable::Observable(std::vector<CMatrix> effects, std::vector<int> outcomes,
                       std::vector<int> shape, double tol)
    : effects_(std::move(effects)), outcomes_(std::move(outcomes)), shape_(std::move(shape)) {
  if (effects_.empty()) throw std::invalid_argument("observable: no effects");
  const int k = static_cast<int>(effects_.size());
  if (outcomes_.empty()) {
    outcomes_.resize(k);
    std::iota(outcomes_.begin(), outcomes_.end(), 0);
  }
  if (static_cast<int>(outcomes_.size()) != k) {
    throw std::invalid_argument("observable: outcome labels do not match effect count");
  }
  if (shape_.empty()) shape_ = {k};
  if (dim_product(shape_) != k) {
    throw std::invalid_argument("observable: outcome shape does not match effect count");
  }
  const auto d = effects_.front().rows();
  CMatrix sum = CMatrix::Zero(d, d);
  for (size_t x = 0; x < effects_.size(); ++x) {
    auto& e = effects_[x];
    if (e.rows() != d || e.cols() != d) {
      throw std::invalid_argument("observable: effect " + std::to_string(x) +
                                  " has inconsistent dimension");
    }
    if (linalg::hermiticity_error(e) > tol) {
      throw std::invalid_argument("observable: effect " + std::to_string(x) +
                                  " is not Hermitian");
    }
    e = linalg::hermitian_part(e);
    const double lmin = linalg::min_eigenvalue(e);
    if (lmin < -tol) {
      throw std::invalid_argument("observable: effect " + std::to_string(x) +
                                  " is not positive (eigenvalue " + fmt_double(lmin) + ")");
    }
    sum += e;
  }
  const double norm_err = (sum - linalg::identity(static_cast<int>(d))).cwiseAbs().maxCoeff();
  if (norm_err > tol) {
    throw std::invalid_argument("observable: effects do not sum to identity (deviation " +
                                fmt_double(norm_err) + ")");
  }
}

Observable Observable::marginal(int axis) const {
  if (axis < 0 || axis >= static_cast<int>(shape_.size())) {
    throw std::invalid_argument("observable marginal: axis out of range");
  }
  std::vector<long> strides(shape_.size(), 1);
  for (int k = static_cast<int>(shape_.size()) - 2; k >= 0; --k) {
    strides[k] = strides[k + 1] * shape_[k + 1];
  }
  std::vector<CMatrix> out(shape_[axis], CMatrix::Zero(dim(), dim()));
  for (int flat = 0; flat < num_outcomes(); ++flat) {
    const int label = static_cast<int>((flat / strides[axis]) % shape_[axis]);
    out[label] += effects_[flat];
  }
  return Observable(std::move(out));
}

// ---------------------------------------------------------------------------
// Instrument

Instrument::Instrument(int d_in, DimTuple out_dims, std::vector<CMatrix> blocks,
                       std::vector<int> outcomes, double tol)
    : d_in_(d_in), out_dims_(std::move(out_dims)), blocks_(std::move(blocks)),
      outcomes_(std::move(outcomes)) {
  if (blocks_.empty()) throw std::invalid_argument("instrument: no outcomes");
  if (outcomes_.empty()) {
    outcomes_.resize(blocks_.size());
    std::iota(outcomes_.begin(), outcomes_.end(), 0);
  }
  if (outcomes_.size() != blocks_.size()) {
    throw std::invalid_argument("instrument: outcome labels do not match block count");
  }
  const long n = static_cast<long>(d_in_) * dim_product(out_dims_);
  CMatrix sum = CMatrix::Zero(n, n);
  for (size_t x = 0; x < blocks_.size(); ++x) {
    auto& b = blocks_[x];
    if (b.rows() != n || b.cols() != n) {
      throw std::invalid_argument("instrument: block " + std::to_string(x) + " has wrong size");
    }
    if (linalg::hermiticity_error(b) > tol) {
      throw std::invalid_argument("instrument: block " + std::to_string(x) + " is not Hermitian");
    }
    b = linalg::hermitian_part(b);
    if (linalg::min_eigenvalue(b) < -tol) {
      throw std::invalid_argument("instrument: block " + std::to_string(x) +
                                  " is not completely positive");
    }
    sum += b;
  }
  if (auto err = Channel::check(d_in_, out_dims_, sum, tol)) {
    throw std::invalid_argument("instrument: blocks do not sum to a channel: " + *err);
  }
}

CMatrix Instrument::apply(int k, const CMatrix& rho) const {
  require_same_dim(rho, d_in_, "instrument apply");
  const int d_out = dim_product(out_dims_);
  const CMatrix& b = blocks_.at(k);
  CMatrix out = CMatrix::Zero(d_out, d_out);
  for (int i = 0; i < d_in_; ++i) {
    for (int j = 0; j < d_in_; ++j) {
      out += rho(i, j) * b.block(i * d_out, j * d_out, d_out, d_out);
    }
  }
  return out;
}

Channel Instrument::total() const {
  const long n = static_cast<long>(d_in_) * dim_product(out_dims_);
  CMatrix sum = CMatrix::Zero(n, n);
  for (const auto& b : blocks_) sum += b;
  return Channel(d_in_, out_dims_, sum, 1e-8);
}

Observable Instrument::observable() const {
  const int d_out = dim_product(out_dims_);
  std::vector<CMatrix> effects;
  effects.reserve(blocks_.size());
  for (const auto& b : blocks_) {
    effects.push_back(linalg::partial_trace(b, {d_in_, d_out}, {0}).transpose());
  }
  return Observable(std::move(effects), outcomes_, {}, 1e-8);
}

// ---------------------------------------------------------------------------
// StochasticMatrix

StochasticMatrix::StochasticMatrix(RMatrix nu, double tol) : nu_(std::move(nu)) {
  if (nu_.size() == 0) throw std::invalid_argument("stochastic matrix: empty");
  if (nu_.minCoeff() < -tol) throw std::invalid_argument("stochastic matrix: negative entry");
  for (Eigen::Index y = 0; y < nu_.cols(); ++y) {
    if (std::abs(nu_.col(y).sum() - 1.0) > tol) {
      throw std::invalid_argument("stochastic matrix: column " + std::to_string(y) +
                                  " does not sum to 1");
    }
  }
  nu_ = nu_.cwiseMax(0.0);
}

// ---------------------------------------------------------------------------
// Representations

Channel choi_from_kraus(const KrausForm& k) {
  const int d_out = k.d_out();
  const long n = static_cast<long>(k.d_in) * d_out;
  CMatrix sum_kk = CMatrix::Zero(k.d_in, k.d_in);
  CMatrix choi = CMatrix::Zero(n, n);
  for (const auto& op : k.operators) {
    if (op.rows() != d_out || op.cols() != k.d_in) {
      throw std::invalid_argument("choi_from_kraus: Kraus operator has wrong shape");
    }
    sum_kk += op.adjoint() * op;
    // |k>> with entries (i, c) -> K[c, i]
    CVector vec(n);
    for (int i = 0; i < k.d_in; ++i) {
      for (int c = 0; c < d_out; ++c) vec(i * d_out + c) = op(c, i);
    }
    choi += vec * vec.adjoint();
  }
  const double err = (sum_kk - linalg::identity(k.d_in)).cwiseAbs().maxCoeff();
  if (err > kChannelTol) {
    throw std::invalid_argument("choi_from_kraus: sum K^dag K deviates from identity by " +
                                fmt_double(err));
  }
  return Channel(k.d_in, k.out_dims, std::move(choi));
}

KrausForm kraus_from_choi(const Channel& c, double rank_tol) {
  const linalg::EigenDecomposition e = linalg::eigh(c.choi());
  const double lmax = e.values(0);
  const int d_in = c.d_in();
  const int d_out = c.d_out();
  KrausForm out{d_in, c.out_dims(), {}};
  for (Eigen::Index a = 0; a < e.values.size(); ++a) {
    const double lam = e.values(a);
    if (lam <= rank_tol * lmax) break;
    CMatrix op(d_out, d_in);
    const double s = std::sqrt(lam);
    for (int i = 0; i < d_in; ++i) {
      for (int cc = 0; cc < d_out; ++cc) op(cc, i) = s * e.vectors(i * d_out + cc, a);
    }
    out.operators.push_back(std::move(op));
  }
  return out;
}

StinespringForm stinespring_from_kraus(const KrausForm& k) {
  const int d_out = k.d_out();
  const int r = static_cast<int>(k.operators.size());
  CMatrix v = CMatrix::Zero(static_cast<long>(d_out) * r, k.d_in);
  for (int a = 0; a < r; ++a) {
    for (int cc = 0; cc < d_out; ++cc) {
      for (int i = 0; i < k.d_in; ++i) v(cc * r + a, i) = k.operators[a](cc, i);
    }
  }
  return StinespringForm{k.d_in, k.out_dims, r, std::move(v)};
}

StinespringForm minimal_stinespring(const Channel& c) {
  return stinespring_from_kraus(kraus_from_choi(c));
}

Channel channel_from_stinespring(const StinespringForm& s) {
  const int d_out = s.d_out();
  KrausForm k{s.d_in, s.out_dims, {}};
  for (int a = 0; a < s.d_env; ++a) {
    CMatrix op(d_out, s.d_in);
    for (int cc = 0; cc < d_out; ++cc) {
      for (int i = 0; i < s.d_in; ++i) op(cc, i) = s.isometry(cc * s.d_env + a, i);
    }
    k.operators.push_back(std::move(op));
  }
  return choi_from_kraus(k);
}

Channel conjugate(const StinespringForm& s) {
  // Kraus operators of the complementary channel: L_c[a, i] = V[(c, a), i].
  const int d_out = s.d_out();
  KrausForm k{s.d_in, {s.d_env}, {}};
  for (int cc = 0; cc < d_out; ++cc) {
    k.operators.push_back(s.isometry.block(static_cast<long>(cc) * s.d_env, 0, s.d_env, s.d_in));
  }
  return choi_from_kraus(k);
}

Channel conjugate(const Channel& c) { return conjugate(minimal_stinespring(c)); }

CMatrix apply(const Channel& c, const CMatrix& x, Picture picture) {
  return picture == Picture::kSchrodinger ? c.schrodinger(x) : c.heisenberg(x);
}

CMatrix link_product(const CMatrix& earlier_choi, int d_in, int d_mid,
                     const CMatrix& later_choi, int d_out) {
  if (earlier_choi.rows() != static_cast<long>(d_in) * d_mid ||
      later_choi.rows() != static_cast<long>(d_mid) * d_out) {
    throw std::invalid_argument("link_product: interface dimensions do not match");
  }
  // J_{(i,c),(j,d)} = sum_{ab} E_{(i,a),(j,b)} L_{(a,c),(b,d)}
  CMatrix out = CMatrix::Zero(static_cast<long>(d_in) * d_out, static_cast<long>(d_in) * d_out);
  for (int i = 0; i < d_in; ++i) {
    for (int j = 0; j < d_in; ++j) {
      auto blk = out.block(i * d_out, j * d_out, d_out, d_out);
      for (int a = 0; a < d_mid; ++a) {
        for (int b = 0; b < d_mid; ++b) {
          const cplx e = earlier_choi(i * d_mid + a, j * d_mid + b);
          if (e == cplx(0.0)) continue;
          blk += e * later_choi.block(a * d_out, b * d_out, d_out, d_out);
        }
      }
    }
  }
  return out;
}

CMatrix link_product_adjoint(const CMatrix& earlier_choi, int d_in, int d_mid,
                             const CMatrix& g, int d_out) {
  // F_{(b,d),(a,c)} = sum_{ij} G_{(j,d),(i,c)} E_{(i,a),(j,b)}
  CMatrix out = CMatrix::Zero(static_cast<long>(d_mid) * d_out, static_cast<long>(d_mid) * d_out);
  for (int i = 0; i < d_in; ++i) {
    for (int j = 0; j < d_in; ++j) {
      const auto gblk = g.block(j * d_out, i * d_out, d_out, d_out);
      for (int a = 0; a < d_mid; ++a) {
        for (int b = 0; b < d_mid; ++b) {
          const cplx e = earlier_choi(i * d_mid + a, j * d_mid + b);
          if (e == cplx(0.0)) continue;
          out.block(b * d_out, a * d_out, d_out, d_out) += e * gblk;
        }
      }
    }
  }
  return out;
}

Channel concatenate(const Channel& later, const Channel& earlier) {
  if (earlier.d_out() != later.d_in()) {
    throw std::invalid_argument("concatenate: output dimension " +
                                std::to_string(earlier.d_out()) +
                                " does not match input dimension " +
                                std::to_string(later.d_in()));
  }
  CMatrix j = link_product(earlier.choi(), earlier.d_in(), earlier.d_out(), later.choi(),
                           later.d_out());
  return Channel(earlier.d_in(), later.out_dims(), std::move(j));
}

Channel tensor_product(const Channel& c1, const Channel& c2) {
  const CMatrix k = linalg::kron(c1.choi(), c2.choi());
  const CMatrix j = linalg::permute_subsystems(
      k, {c1.d_in(), c1.d_out(), c2.d_in(), c2.d_out()}, {0, 2, 1, 3});
  DimTuple out = c1.out_dims();
  out.insert(out.end(), c2.out_dims().begin(), c2.out_dims().end());
  return Channel(c1.d_in() * c2.d_in(), std::move(out), j);
}

Channel mix(const std::vector<Channel>& channels, const std::vector<double>& weights) {
  if (channels.empty() || channels.size() != weights.size()) {
    throw std::invalid_argument("mix: need one weight per channel");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("mix: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mix: weights do not sum to 1");
  const Channel& first = channels.front();
  CMatrix j = CMatrix::Zero(first.choi().rows(), first.choi().cols());
  for (size_t k = 0; k < channels.size(); ++k) {
    if (channels[k].d_in() != first.d_in() || channels[k].out_dims() != first.out_dims()) {
      throw std::invalid_argument("mix: channels have different dimensions");
    }
    j += weights[k] * channels[k].choi();
  }
  return Channel(first.d_in(), first.out_dims(), std::move(j));
}

Channel marginal(const Channel& joint, const std::vector<int>& keep_outputs) {
  std::vector<int> keep{0};
  DimTuple out;
  for (int k : keep_outputs) {
    if (k < 0 || k >= static_cast<int>(joint.out_dims().size())) {
      throw std::invalid_argument("marginal: output index out of range");
    }
    keep.push_back(k + 1);
    out.push_back(joint.out_dims()[k]);
  }
  if (out.empty()) out = {1};
  CMatrix j = linalg::partial_trace(joint.choi(), joint.choi_dims(), keep);
  return Channel(joint.d_in(), std::move(out), std::move(j), 1e-7);
}

Channel permute_outputs(const Channel& c, const std::vector<int>& perm) {
  if (perm.size() != c.out_dims().size()) {
    throw std::invalid_argument("permute_outputs: permutation size mismatch");
  }
  std::vector<int> full{0};
  DimTuple out;
  for (int p : perm) {
    full.push_back(p + 1);
    out.push_back(c.out_dims().at(p));
  }
  CMatrix j = linalg::permute_subsystems(c.choi(), c.choi_dims(), full);
  return Channel(c.d_in(), std::move(out), std::move(j));
}

// ---------------------------------------------------------------------------
// Named channels

Channel identity_channel(int d) {
  return choi_from_kraus(KrausForm{d, {d}, {linalg::identity(d)}});
}

Channel constant_channel(const CMatrix& eta, int d_in) {
  if (eta.rows() != eta.cols() || eta.rows() == 0) {
    throw std::invalid_argument("constant_channel: state must be a square matrix");
  }
  if (linalg::hermiticity_error(eta) > kChannelTol ||
      linalg::min_eigenvalue(eta) < -kChannelTol ||
      std::abs(eta.trace() - cplx(1.0)) > kChannelTol) {
    throw std::invalid_argument("constant_channel: eta is not a density matrix");
  }
  const int d_out = static_cast<int>(eta.rows());
  return Channel(d_in, {d_out}, linalg::kron(linalg::identity(d_in), eta));
}

Channel pauli_channel(const std::array<double, 3>& p) {
  const double total = p[0] + p[1] + p[2];
  for (double v : p) {
    if (v < 0.0 || v > 1.0) throw std::invalid_argument("pauli_channel: probability out of range");
  }
  if (total > 1.0 + 1e-12) throw std::invalid_argument("pauli_channel: probabilities exceed 1");
  KrausForm k{2, {2}, {}};
  k.operators.push_back(std::sqrt(std::max(0.0, 1.0 - total)) * linalg::identity(2));
  k.operators.push_back(std::sqrt(p[0]) * linalg::pauli_x());
  k.operators.push_back(std::sqrt(p[1]) * linalg::pauli_y());
  k.operators.push_back(std::sqrt(p[2]) * linalg::pauli_z());
  return choi_from_kraus(k);
}

bool pauli_incompatibility_sufficient(const std::array<double, 3>& p,
                                      const std::array<double, 3>& q) {
  for (const auto* v : {&p, &q}) {
    const double total = (*v)[0] + (*v)[1] + (*v)[2];
    if ((*v)[0] < 0 || (*v)[1] < 0 || (*v)[2] < 0 || total > 1.0 + 1e-12) {
      throw std::invalid_argument("pauli_incompatibility_sufficient: invalid Pauli parameters");
    }
  }
  return p[1] * p[1] + p[2] * p[2] + q[0] * q[0] + q[2] * q[2] > 0.25;
}

Channel gamma_of_observable(const Observable& m) {
  const int d = m.dim();
  const int k = m.num_outcomes();
  CMatrix j = CMatrix::Zero(static_cast<long>(d) * k, static_cast<long>(d) * k);
  for (int x = 0; x < k; ++x) {
    const CMatrix& e = m.effect(x);
    for (int i = 0; i < d; ++i) {
      for (int jj = 0; jj < d; ++jj) j(i * k + x, jj * k + x) = e(jj, i);
    }
  }
  return Channel(d, {k}, std::move(j));
}

Observable transform_observable(const Channel& c, const Observable& m) {
  if (m.dim() != c.d_out()) {
    throw std::invalid_argument("transform_observable: observable lives on dimension " +
                                std::to_string(m.dim()) + ", channel output is " +
                                std::to_string(c.d_out()));
  }
  std::vector<CMatrix> effects;
  effects.reserve(m.num_outcomes());
  for (const auto& e : m.effects()) effects.push_back(c.heisenberg(e));
  return Observable(std::move(effects), m.outcomes(), m.shape(), 1e-8);
}

Channel postprocessing_channel(const StochasticMatrix& nu) {
  const int rows = nu.rows();
  const int cols = nu.cols();
  CMatrix j = CMatrix::Zero(static_cast<long>(cols) * rows, static_cast<long>(cols) * rows);
  for (int y = 0; y < cols; ++y) {
    for (int x = 0; x < rows; ++x) j(y * rows + x, y * rows + x) = nu.matrix()(x, y);
  }
  return Channel(cols, {rows}, std::move(j));
}

StochasticMatrix extract_stochastic_matrix(const Channel& theta) {
  const int cols = theta.d_in();
  const int rows = theta.d_out();
  RMatrix nu(rows, cols);
  for (int y = 0; y < cols; ++y) {
    for (int x = 0; x < rows; ++x) nu(x, y) = theta.choi()(y * rows + x, y * rows + x).real();
  }
  return StochasticMatrix(std::move(nu), 1e-7);
}

Observable postprocess(const Observable& m, const StochasticMatrix& nu) {
  if (nu.cols() != m.num_outcomes()) {
    throw std::invalid_argument("postprocess: stochastic matrix has wrong column count");
  }
  std::vector<CMatrix> effects(nu.rows(), CMatrix::Zero(m.dim(), m.dim()));
  for (int x = 0; x < nu.rows(); ++x) {
    for (int y = 0; y < nu.cols(); ++y) effects[x] += nu.matrix()(x, y) * m.effect(y);
  }
  return Observable(std::move(effects));
}

LeastDisturbing naimark_least_disturbing(const Observable& m) {
  const int d = m.dim();
  const int k = m.num_outcomes();
  const int dk = d * k;
  CMatrix iso = CMatrix::Zero(dk, d);
  std::vector<CMatrix> sharp;
  KrausForm kraus{d, {d, k}, {}};
  for (int x = 0; x < k; ++x) {
    const CMatrix root = linalg::psd_sqrt(m.effect(x));
    CMatrix op = CMatrix::Zero(dk, d);
    for (int i = 0; i < d; ++i) {
      for (int jj = 0; jj < d; ++jj) {
        iso(i * k + x, jj) = root(i, jj);
        op(i * k + x, jj) = root(i, jj);
      }
    }
    kraus.operators.push_back(std::move(op));
    sharp.push_back(linalg::kron(linalg::identity(d), linalg::matrix_unit(k, x, x)));
  }
  return LeastDisturbing{NaimarkDilation{dk, Observable(std::move(sharp)), std::move(iso)},
                         choi_from_kraus(kraus)};
}

Channel copying_channel(int num_outcomes, int n) {
  if (num_outcomes < 1 || n < 1) throw std::invalid_argument("copying_channel: need n >= 1");
  const DimTuple out(n, num_outcomes);
  const long d_out = dim_product(out);
  CMatrix j = CMatrix::Zero(num_outcomes * d_out, num_outcomes * d_out);
  for (int x = 0; x < num_outcomes; ++x) {
    long idx = 0;
    for (int c = 0; c < n; ++c) idx = idx * num_outcomes + x;
    j(x * d_out + idx, x * d_out + idx) = 1.0;
  }
  return Channel(num_outcomes, out, std::move(j));
}

Instrument instrument_from_joint(const Channel& joint, int num_outcomes, double tol) {
  if (joint.out_dims().size() < 2 || joint.out_dims().front() != num_outcomes) {
    throw std::invalid_argument("instrument_from_joint: first output factor must be the pointer");
  }
  const int d_in = joint.d_in();
  const DimTuple rest(joint.out_dims().begin() + 1, joint.out_dims().end());
  const int d_out = dim_product(rest);
  const int k = num_outcomes;
  // The pointer marginal must be a measure-and-write channel.
  const CMatrix pointer = linalg::partial_trace(joint.choi(), {d_in, k, d_out}, {0, 1});
  for (int i = 0; i < d_in; ++i) {
    for (int jj = 0; jj < d_in; ++jj) {
      for (int x = 0; x < k; ++x) {
        for (int y = 0; y < k; ++y) {
          if (x != y && std::abs(pointer(i * k + x, jj * k + y)) > tol) {
            throw std::invalid_argument(
                "instrument_from_joint: pointer marginal is not of measure-and-write form");
          }
        }
      }
    }
  }
  std::vector<CMatrix> blocks;
  const long n = static_cast<long>(d_in) * d_out;
  for (int x = 0; x < k; ++x) {
    CMatrix b(n, n);
    for (int i = 0; i < d_in; ++i) {
      for (int jj = 0; jj < d_in; ++jj) {
        b.block(i * d_out, jj * d_out, d_out, d_out) = joint.choi().block(
            (static_cast<long>(i) * k + x) * d_out, (static_cast<long>(jj) * k + x) * d_out,
            d_out, d_out);
      }
    }
    blocks.push_back(std::move(b));
  }
  return Instrument(d_in, rest, std::move(blocks), {}, std::max(tol, 1e-8));
}

Channel joint_from_instrument(const Instrument& inst) {
  const int d_in = inst.d_in();
  const int k = inst.num_outcomes();
  const int d_out = dim_product(inst.out_dims());
  const long n = static_cast<long>(d_in) * k * d_out;
  CMatrix j = CMatrix::Zero(n, n);
  for (int x = 0; x < k; ++x) {
    const CMatrix& b = inst.blocks()[x];
    for (int i = 0; i < d_in; ++i) {
      for (int jj = 0; jj < d_in; ++jj) {
        j.block((static_cast<long>(i) * k + x) * d_out, (static_cast<long>(jj) * k + x) * d_out,
                d_out, d_out) = b.block(i * d_out, jj * d_out, d_out, d_out);
      }
    }
  }
  DimTuple out{k};
  out.insert(out.end(), inst.out_dims().begin(), inst.out_dims().end());
  return Channel(d_in, std::move(out), std::move(j), 1e-8);
}

Channel measure_prepare_channel(const Observable& f, const std::vector<CMatrix>& states) {
  if (static_cast<int>(states.size()) != f.num_outcomes()) {
    throw std::invalid_argument("measure_prepare_channel: need one state per outcome");
  }
  const int d_out = static_cast<int>(states.front().rows());
  const long n = static_cast<long>(f.dim()) * d_out;
  CMatrix j = CMatrix::Zero(n, n);
  for (int x = 0; x < f.num_outcomes(); ++x) {
    j += linalg::kron(f.effect(x).transpose(), states[x]);
  }
  return Channel(f.dim(), {d_out}, std::move(j));
}

// ---------------------------------------------------------------------------
// Samplers

Channel random_channel(int d_in, int d_out, int d_env, std::uint64_t seed) {
  if (d_env < 1) throw std::invalid_argument("random_channel: d_env must be >= 1");
  const CMatrix v = linalg::random_isometry(d_in, d_out * d_env, seed);
  return channel_from_stinespring(StinespringForm{d_in, {d_out}, d_env, v});
}

Observable random_observable(int d, int num_outcomes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<CMatrix> raw;
  CMatrix total = CMatrix::Zero(d, d);
  for (int x = 0; x < num_outcomes; ++x) {
    CMatrix g(d, d);
    for (int c = 0; c < d; ++c) {
      for (int r = 0; r < d; ++r) {
        const double re = normal(rng);
        const double im = normal(rng);
        g(r, c) = cplx(re, im);
      }
    }
    raw.push_back(g * g.adjoint());
    total += raw.back();
  }
  const linalg::EigenDecomposition e = linalg::eigh(total);
  const RVector inv_sqrt = e.values.cwiseSqrt().cwiseInverse();
  const CMatrix s = e.vectors * inv_sqrt.asDiagonal() * e.vectors.adjoint();
  std::vector<CMatrix> effects;
  for (const auto& g : raw) effects.push_back(linalg::hermitian_part(s * g * s));
  return Observable(std::move(effects));
}

StochasticMatrix random_stochastic_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  RMatrix nu(rows, cols);
  for (int y = 0; y < cols; ++y) {
    for (int x = 0; x < rows; ++x) nu(x, y) = expo(rng);
    nu.col(y) /= nu.col(y).sum();
  }
  return StochasticMatrix(std::move(nu));
}

}  // namespace qcompat
