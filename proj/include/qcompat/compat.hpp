#pragma once

// Decision procedures for compatibility, the concatenation preorder and
// related channel properties. Each question is encoded as an SdpProblem;
// every verdict is tri-state and Undecided is passed through unchanged.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcompat/channel.hpp"
#include "qcompat/sdp.hpp"

namespace qcompat::compat {

enum class CompatStatus { kCompatible, kIncompatible, kUndecided };
enum class PreorderStatus { kLeq, kNotLeq, kUndecided };
enum class EbStatus { kEntanglementBreaking, kNotEntanglementBreaking, kInconclusive };

const char* to_string(CompatStatus s);
const char* to_string(PreorderStatus s);
const char* to_string(EbStatus s);

/// Witnessed joints must reproduce the given marginals to this (Frobenius
/// distance of Choi matrices).
inline constexpr double kWitnessTol = 1e-6;

struct CompatVerdict {
  CompatStatus status = CompatStatus::kUndecided;
  std::optional<Channel> joint;  // output factors in argument order
  /// S_n-averaged joint (self-compatibility only).
  std::optional<Channel> symmetric_joint;
  sdp::SdpVerdict solver;
  bool certified = false;  // sdp::certify on the solver verdict
  double marginal_residual = 0.0;
};

struct PreorderVerdict {
  PreorderStatus status = PreorderStatus::kUndecided;
  std::optional<Channel> theta;  // l1 = concatenate(theta, l2)
  sdp::SdpVerdict solver;
  bool certified = false;
  double residual = 0.0;  // ||choi(l1) - choi(theta after l2)||_F
};

struct EquivalenceVerdict {
  PreorderVerdict forward;   // l1 <= l2
  PreorderVerdict backward;  // l2 <= l1
  /// Leq means mutual Leq; NotLeq if either direction fails.
  PreorderStatus status() const;
};

struct JointMeasurabilityVerdict {
  CompatStatus status = CompatStatus::kUndecided;
  std::optional<Observable> joint;  // shape {|M|, |N|}
  sdp::SdpVerdict solver;
  bool certified = false;
  double marginal_residual = 0.0;
};

struct ObservableChannelVerdict {
  CompatStatus status = CompatStatus::kUndecided;
  std::optional<Instrument> instrument;
  CompatVerdict channel_verdict;  // for (Gamma_M, channel)
  double probability_residual = 0.0;  // max |tr[I(x,.)^*(1)] - M(x)|
  double total_residual = 0.0;        // ||sum_x I_x - channel||
};

struct EbVerdict {
  EbStatus status = EbStatus::kInconclusive;
  double min_pt_eigenvalue = 0.0;  // of the partially transposed Choi
  bool ppt_exact = false;
};

struct BreakingVerdict {
  /// Compatible means every tuple is compatible (phi is breaking).
  CompatStatus status = CompatStatus::kUndecided;
  std::vector<int> failing_tuple;  // first Incompatible (or Undecided) tuple
  int tuples_checked = 0;
  std::vector<CompatVerdict> verdicts;
};

struct Factorization {
  CompatStatus status = CompatStatus::kUndecided;
  std::optional<Channel> e2;
  std::optional<Channel> e3;
  double residual = 0.0;  // max over the two factorization equations
  std::string note;
};

struct ThresholdResult {
  double lo = 0.0;
  double hi = 0.0;
  CompatStatus status_lo = CompatStatus::kUndecided;
  CompatStatus status_hi = CompatStatus::kUndecided;
  bool converged = false;  // hi - lo <= tol
  std::vector<std::pair<double, CompatStatus>> probes;
  std::vector<CompatVerdict> endpoint_verdicts;  // final certified lo, hi
};

using Options = sdp::SolverOptions;
using PairFamily = std::function<std::pair<Channel, Channel>(double)>;

// SDP encodings.
sdp::SdpProblem compatibility_problem(const std::vector<Channel>& channels);
sdp::SdpProblem preorder_problem(const Channel& l1, const Channel& l2);
sdp::SdpProblem joint_measurability_problem(const Observable& m, const Observable& n);

/// Max Frobenius distance between the marginals of `joint` and `channels`.
double joint_marginal_residual(const Channel& joint, const std::vector<Channel>& channels);

PreorderVerdict preorder_leq(const Channel& l1, const Channel& l2, const Options& opt = {});
EquivalenceVerdict equivalent(const Channel& l1, const Channel& l2, const Options& opt = {});

CompatVerdict are_compatible(const Channel& l1, const Channel& l2, const Options& opt = {});
CompatVerdict are_compatible_n(const std::vector<Channel>& channels, const Options& opt = {});

JointMeasurabilityVerdict jointly_measurable(const Observable& m, const Observable& n,
                                             const Options& opt = {});

ObservableChannelVerdict observable_channel_compatible(const Observable& m, const Channel& l,
                                                       const Options& opt = {});

bool is_completely_depolarizing(const Channel& l, double tol = 1e-7);
EbVerdict is_entanglement_breaking(const Channel& l);

CompatVerdict is_self_compatible(const Channel& l, const Options& opt = {});
CompatVerdict is_n_self_compatible(const Channel& l, int n, const Options& opt = {});

/// Average of the joint over all permutations of its n output factors.
Channel symmetrize_joint(const Channel& joint);

/// Tests compatibility of (l_{i1} after phi, ..., l_{in} after phi) for
/// every multiset {i1 <= ... <= in} of indices into `set`.
BreakingVerdict incompatibility_breaking_on(const Channel& phi, const std::vector<Channel>& set,
                                            int n, const Options& opt = {});

/// For compatible (l1, l2, l3): E2, E3 compatible with l_k = E_k after conj(l1).
Factorization three_channel_factorize(const Channel& l1, const Channel& l2, const Channel& l3,
                                      const Options& opt = {});

/// Bisection between endpoints with opposite certified verdicts. Undecided
/// probes are retried at the quarter points; if those also fail, the
/// certified bracket is returned with converged = false.
ThresholdResult noise_threshold(const PairFamily& family, double lo, double hi, double tol,
                                const Options& opt = {});

/// Joint of (1/2 l1 + 1/2 const(eta1), 1/2 l2 + 1/2 const(eta2)):
/// rho -> 1/2 l1(rho) (x) eta2 + 1/2 eta1 (x) l2(rho).
Channel noisy_pair_joint(const Channel& l1, const CMatrix& eta1, const Channel& l2,
                         const CMatrix& eta2);

/// C*_n after Gamma*_M: the joint of n copies of Gamma_M.
Channel observable_copies_joint(const Observable& m, int n);

}  // namespace qcompat::compat
