#pragma once

// Quantum channels, observables and instruments in Choi form.
//
// A channel maps states on C^d_in to states on C^d_out (Schrodinger
// picture). Its Choi matrix is
//   J = sum_{ij} |i><j| (x) Lambda*(|i><j|)
// on C^d_in (x) C^d_out, input factor first and unnormalized, so tr J = d_in
// and trace preservation reads Tr_out J = I_in. The output may itself be a
// tensor product (d_1, ..., d_k); joint channels use this with the factor
// order equal to the order of the marginals.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcompat/linalg.hpp"

namespace qcompat {

inline constexpr double kChannelTol = 1e-9;
inline constexpr double kKrausRankTol = 1e-8;

enum class Picture { kSchrodinger, kHeisenberg };

class Channel {
 public:
  /// Validates complete positivity and trace preservation to `tol`;
  /// throws std::invalid_argument naming the violated invariant.
  Channel(int d_in, DimTuple out_dims, CMatrix choi, double tol = kChannelTol);

  /// Builds a channel from a Choi matrix that satisfies the invariants only
  /// approximately (e.g. a solver witness): Hermitian part, negative
  /// eigenvalues clipped, then renormalized so that Tr_out J = I exactly.
  static Channel from_approximate_choi(int d_in, DimTuple out_dims,
                                       const CMatrix& choi);

  int d_in() const { return d_in_; }
  int d_out() const { return linalg::dim_product(out_dims_); }
  const DimTuple& out_dims() const { return out_dims_; }
  const CMatrix& choi() const { return choi_; }
  /// (d_in, d_out_1, ..., d_out_k)
  DimTuple choi_dims() const;

  CMatrix schrodinger(const CMatrix& rho) const;
  CMatrix heisenberg(const CMatrix& t) const;

  /// Returns a description of the first violated invariant, if any.
  static std::optional<std::string> check(int d_in, const DimTuple& out_dims,
                                          const CMatrix& choi, double tol);

 private:
  int d_in_;
  DimTuple out_dims_;
  CMatrix choi_;
};

struct KrausForm {
  int d_in = 0;
  DimTuple out_dims;
  std::vector<CMatrix> operators;  // each d_out x d_in

  int d_out() const { return linalg::dim_product(out_dims); }
};

struct StinespringForm {
  int d_in = 0;
  DimTuple out_dims;
  int d_env = 0;
  CMatrix isometry;  // (d_out * d_env) x d_in, output factor first

  int d_out() const { return linalg::dim_product(out_dims); }
};

/// Finite-outcome POVM. Outcomes over a product set (joint observables) are
/// stored flat in row-major order together with their shape.
class Observable {
 public:
  Observable(std::vector<CMatrix> effects, std::vector<int> outcomes = {},
             std::vector<int> shape = {}, double tol = kChannelTol);

  int dim() const { return static_cast<int>(effects_.front().rows()); }
  int num_outcomes() const { return static_cast<int>(effects_.size()); }
  const std::vector<CMatrix>& effects() const { return effects_; }
  const CMatrix& effect(int k) const { return effects_.at(k); }
  const std::vector<int>& outcomes() const { return outcomes_; }
  const std::vector<int>& shape() const { return shape_; }

  /// Marginal over one axis of a product outcome set.
  Observable marginal(int axis) const;

 private:
  std::vector<CMatrix> effects_;
  std::vector<int> outcomes_;
  std::vector<int> shape_;
};

/// Outcome-indexed CP maps given by their (not trace preserving) Choi
/// blocks on C^d_in (x) C^d_out; the blocks sum to the Choi of a channel.
class Instrument {
 public:
  Instrument(int d_in, DimTuple out_dims, std::vector<CMatrix> blocks,
             std::vector<int> outcomes = {}, double tol = 1e-8);

  int d_in() const { return d_in_; }
  const DimTuple& out_dims() const { return out_dims_; }
  int num_outcomes() const { return static_cast<int>(blocks_.size()); }
  const std::vector<CMatrix>& blocks() const { return blocks_; }
  const std::vector<int>& outcomes() const { return outcomes_; }

  /// I(x, rho), unnormalized.
  CMatrix apply(int k, const CMatrix& rho) const;
  /// sum_x I(x, .)
  Channel total() const;
  /// The observable x -> I(x, .)^*(I).
  Observable observable() const;

 private:
  int d_in_;
  DimTuple out_dims_;
  std::vector<CMatrix> blocks_;
  std::vector<int> outcomes_;
};

/// Column-stochastic matrix: nu(x, y) >= 0 and sum_x nu(x, y) = 1.
/// Rows index the outcomes of the post-processed observable.
class StochasticMatrix {
 public:
  explicit StochasticMatrix(RMatrix nu, double tol = 1e-9);
  const RMatrix& matrix() const { return nu_; }
  int rows() const { return static_cast<int>(nu_.rows()); }
  int cols() const { return static_cast<int>(nu_.cols()); }

 private:
  RMatrix nu_;
};

// Representation changes.
Channel choi_from_kraus(const KrausForm& k);
KrausForm kraus_from_choi(const Channel& c, double rank_tol = kKrausRankTol);
StinespringForm minimal_stinespring(const Channel& c);
StinespringForm stinespring_from_kraus(const KrausForm& k);
Channel channel_from_stinespring(const StinespringForm& s);

CMatrix apply(const Channel& c, const CMatrix& x, Picture picture);

/// Schrodinger-order composition: first `earlier`, then `later`.
/// Heisenberg: (earlier o later).
Channel concatenate(const Channel& later, const Channel& earlier);

/// Choi of later o earlier from the two Choi matrices (index contraction
/// over the shared interface).
CMatrix link_product(const CMatrix& earlier_choi, int d_in, int d_mid,
                     const CMatrix& later_choi, int d_out);
/// Adjoint of X -> link_product(earlier_choi, d_in, d_mid, X, d_out) with
/// respect to the Hilbert-Schmidt inner product.
CMatrix link_product_adjoint(const CMatrix& earlier_choi, int d_in, int d_mid,
                             const CMatrix& g, int d_out);

Channel tensor_product(const Channel& c1, const Channel& c2);

/// Conjugate (complementary) channel from a minimal Stinespring form.
Channel conjugate(const Channel& c);
Channel conjugate(const StinespringForm& s);

Channel mix(const std::vector<Channel>& channels, const std::vector<double>& weights);

/// Marginal channel keeping the listed output factors (in that order).
Channel marginal(const Channel& joint, const std::vector<int>& keep_outputs);

/// Permutes output factors: output factor perm[k] becomes factor k.
Channel permute_outputs(const Channel& c, const std::vector<int>& perm);

Channel identity_channel(int d);
Channel constant_channel(const CMatrix& eta, int d_in);
Channel pauli_channel(const std::array<double, 3>& p);
/// Qubit sufficient test for incompatibility of two Pauli channels via the
/// transformed X and Y observables: p_y^2 + p_z^2 + q_x^2 + q_z^2 > 1/4.
bool pauli_incompatibility_sufficient(const std::array<double, 3>& p,
                                      const std::array<double, 3>& q);

/// Measure-and-write channel: rho -> sum_x tr[rho M(x)] |x><x|.
Channel gamma_of_observable(const Observable& m);
/// Effect-wise Heisenberg action; m lives on c's output space.
Observable transform_observable(const Channel& c, const Observable& m);

/// Theta with Theta*(|y><y|) = sum_x nu(x, y) |x><x|, so that
/// Gamma_N = concatenate(Theta, Gamma_M) for N = postprocess(M, nu).
Channel postprocessing_channel(const StochasticMatrix& nu);
/// nu(x, y) = <x| Theta*(|y><y|) |x>.
StochasticMatrix extract_stochastic_matrix(const Channel& theta);
/// N(x) = sum_y nu(x, y) M(y).
Observable postprocess(const Observable& m, const StochasticMatrix& nu);

struct NaimarkDilation {
  int d_k = 0;
  Observable sharp;  // I (x) |x><x| on C^d_in (x) C^|Omega|
  CMatrix isometry;  // K psi = sum_x (sqrt(M(x)) psi) (x) |x>
};

struct LeastDisturbing {
  NaimarkDilation naimark;
  Channel channel;  // rho -> sum_x Mhat(x) K rho K* Mhat(x)
};

LeastDisturbing naimark_least_disturbing(const Observable& m);

/// C*_n(rho) = sum_x <x|rho|x> |x...x><x...x| on (C^num_outcomes)^(x)n.
Channel copying_channel(int num_outcomes, int n);

Instrument instrument_from_joint(const Channel& joint, int num_outcomes,
                                 double tol = 1e-7);
Channel joint_from_instrument(const Instrument& inst);

/// Measure-prepare channel rho -> sum_x tr[rho F(x)] eta_x.
Channel measure_prepare_channel(const Observable& f, const std::vector<CMatrix>& states);

// Seeded samplers.
Channel random_channel(int d_in, int d_out, int d_env, std::uint64_t seed);
Observable random_observable(int d, int num_outcomes, std::uint64_t seed);
StochasticMatrix random_stochastic_matrix(int rows, int cols, std::uint64_t seed);

}  // namespace qcompat
