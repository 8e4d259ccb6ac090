#pragma once

// Certified feasibility for affine-constrained PSD problems:
//
//   find X = diag(X_1, ..., X_B),  X_b Hermitian PSD,
//   such that  tr[F_k X] = b_k  for every scalar constraint k.
//
// A Feasible verdict carries a witness X, an Infeasible verdict a vector y
// with  sum_k y_k F_k <= -delta I  and  b.y >= delta  (no PSD X can satisfy
// the constraints then, since tr[X sum_k y_k F_k] = b.y would be both
// positive and non-positive). Either can be re-checked with certify().

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qcompat/linalg.hpp"

namespace qcompat::sdp {

enum class Status { kFeasible, kInfeasible, kUndecided };

const char* to_string(Status s);

struct Tolerances {
  double feasibility = 1e-7;  // max |tr[F_k X] - b_k|
  double psd_slack = 1e-9;    // lambda_min(X) >= -psd_slack
  double margin = 1e-9;       // certificate: lambda_max <= -margin, b.y >= margin
};

/// One scalar constraint tr[F X] = b, with F stored per touched block.
struct Constraint {
  std::vector<std::pair<int, CMatrix>> terms;  // (block index, F_block)
  double target = 0.0;
};

class SdpProblem {
 public:
  explicit SdpProblem(int n) : SdpProblem(std::vector<int>{n}) {}
  explicit SdpProblem(std::vector<int> block_sizes);

  const std::vector<int>& block_sizes() const { return block_sizes_; }
  int num_blocks() const { return static_cast<int>(block_sizes_.size()); }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  /// Human-readable origin of each constraint group, for the debug dump.
  const std::vector<std::pair<int, std::string>>& groups() const { return groups_; }

  void add_constraint(const CMatrix& f, double target, int block = 0);
  void add_constraint(Constraint c);

  /// Matrix equality M(X_block) = target for a Hermiticity-preserving linear
  /// map M, given through its adjoint. Expanded over the generalized
  /// Gell-Mann basis G_k of the target space: tr[M^dag(G_k) X] = tr[G_k T].
  void add_map_equality(const std::function<CMatrix(const CMatrix&)>& adjoint,
                        const CMatrix& target, int block = 0, std::string label = "map");

  /// Tr_{not keep} X_block = target, with X_block on `dims`.
  void add_partial_trace_equality(const DimTuple& dims, const std::vector<int>& keep,
                                  const CMatrix& target, int block = 0);

  /// sum_{b in blocks} X_b = target (all listed blocks the same size).
  void add_block_sum_equality(const std::vector<int>& blocks, const CMatrix& target);

  /// max_k |tr[F_k X] - b_k|
  double affine_residual(const std::vector<CMatrix>& x) const;
  /// sum_k y_k F_k, blockwise.
  std::vector<CMatrix> adjoint_apply(const RVector& y) const;
  RVector targets() const;

 private:
  std::vector<int> block_sizes_;
  std::vector<Constraint> constraints_;
  std::vector<std::pair<int, std::string>> groups_;  // (first constraint, label)
};

struct Diagnostics {
  int iterations = 0;           // primal iterations
  int farkas_iterations = 0;
  double affine_residual = 0.0;  // witness residual (Feasible)
  double min_eigenvalue = 0.0;   // witness lambda_min (Feasible)
  double certificate_lambda_max = 0.0;  // Infeasible
  double certificate_objective = 0.0;   // b.y (Infeasible)
  double primal_distance = 0.0;  // last dist(PSD iterate, affine set)
  double max_distance_increase = 0.0;  // over the primal loop
  bool polished = false;
  int interior_iterations = 0;  // interior-point fallback
  bool affine_inconsistent = false;
  double seconds = 0.0;
};

struct SdpVerdict {
  Status status = Status::kUndecided;
  std::vector<CMatrix> witness;  // blocks, when Feasible
  RVector certificate;           // y, when Infeasible
  Diagnostics diagnostics;
};

struct SolverOptions {
  int max_iter = 50000;
  std::uint64_t seed = 0;
  Tolerances tol;
  int check_every = 25;
};

SdpVerdict solve_feasibility(const SdpProblem& problem, const SolverOptions& options = {});

/// Re-validates a verdict against the problem from scratch.
bool certify(const SdpVerdict& verdict, const SdpProblem& problem,
             const Tolerances& tol = {});

/// Writes the problem (block sizes, every constraint as dense Hermitian
/// blocks with [re, im] entries row-major, and its target) as JSON.
void dump_json(const SdpProblem& problem, const std::string& path);

}  // namespace qcompat::sdp
