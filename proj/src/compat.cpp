#include "qcompat/compat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qcompat::compat {

const char* to_string(CompatStatus s) {
  switch (s) {
    case CompatStatus::kCompatible:
      return "Compatible";
    case CompatStatus::kIncompatible:
      return "Incompatible";
    case CompatStatus::kUndecided:
      return "Undecided";
  }
  return "?";
}

const char* to_string(PreorderStatus s) {
  switch (s) {
    case PreorderStatus::kLeq:
      return "Leq";
    case PreorderStatus::kNotLeq:
      return "NotLeq";
    case PreorderStatus::kUndecided:
      return "Undecided";
  }
  return "?";
}

const char* to_string(EbStatus s) {
  switch (s) {
    case EbStatus::kEntanglementBreaking:
      return "EB";
    case EbStatus::kNotEntanglementBreaking:
      return "NotEB";
    case EbStatus::kInconclusive:
      return "Inconclusive";
  }
  return "?";
}

PreorderStatus EquivalenceVerdict::status() const {
  if (forward.status == PreorderStatus::kNotLeq || backward.status == PreorderStatus::kNotLeq) {
    return PreorderStatus::kNotLeq;
  }
  if (forward.status == PreorderStatus::kLeq && backward.status == PreorderStatus::kLeq) {
    return PreorderStatus::kLeq;
  }
  return PreorderStatus::kUndecided;
}

namespace {

void require_same_input(const std::vector<Channel>& channels, const char* what) {
  for (const auto& c : channels) {
    if (c.d_in() != channels.front().d_in()) {
      throw std::invalid_argument(std::string(what) + ": channels have different input dimensions");
    }
  }
}

DimTuple joint_dims(const std::vector<Channel>& channels) {
  DimTuple dims{channels.front().d_in()};
  for (const auto& c : channels) dims.push_back(c.d_out());
  return dims;
}

// Turns a solver verdict for compatibility_problem into a CompatVerdict,
// re-checking the joint against the marginals.
CompatVerdict finish_compat(const std::vector<Channel>& channels, const sdp::SdpProblem& problem,
                            sdp::SdpVerdict v, const Options& opt) {
  CompatVerdict out;
  out.certified = sdp::certify(v, problem, opt.tol);
  if (v.status == sdp::Status::kInfeasible && out.certified) {
    out.status = CompatStatus::kIncompatible;
  } else if (v.status == sdp::Status::kFeasible && out.certified) {
    DimTuple out_dims;
    for (const auto& c : channels) out_dims.push_back(c.d_out());
    Channel joint = Channel::from_approximate_choi(channels.front().d_in(), out_dims,
                                                   v.witness.front());
    out.marginal_residual = joint_marginal_residual(joint, channels);
    if (out.marginal_residual <= kWitnessTol) {
      out.status = CompatStatus::kCompatible;
      out.joint = std::move(joint);
    }
  }
  out.solver = std::move(v);
  return out;
}

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Repairs a near-POVM: clips negative parts and renormalizes so the effects
// sum to the identity exactly.
std::vector<CMatrix> repair_povm(const std::vector<CMatrix>& effects) {
  std::vector<CMatrix> clipped;
  const int d = static_cast<int>(effects.front().rows());
  CMatrix total = CMatrix::Zero(d, d);
  for (const auto& e : effects) {
    clipped.push_back(linalg::psd_projection(linalg::hermitian_part(e)));
    total += clipped.back();
  }
  const linalg::EigenDecomposition t = linalg::eigh(linalg::hermitian_part(total));
  const RVector inv_sqrt = t.values.cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const CMatrix a = t.vectors * inv_sqrt.asDiagonal() * t.vectors.adjoint();
  for (auto& e : clipped) e = linalg::hermitian_part(a * e * a.adjoint());
  return clipped;
}

}  // namespace

// ---------------------------------------------------------------------------
// Encodings

sdp::SdpProblem compatibility_problem(const std::vector<Channel>& channels) {
  if (channels.size() < 2) throw std::invalid_argument("compatibility: need at least two channels");
  require_same_input(channels, "compatibility");
  const DimTuple dims = joint_dims(channels);
  sdp::SdpProblem p(linalg::dim_product(dims));
  for (int k = 0; k < static_cast<int>(channels.size()); ++k) {
    p.add_partial_trace_equality(dims, {0, k + 1}, channels[k].choi());
  }
  return p;
}

sdp::SdpProblem preorder_problem(const Channel& l1, const Channel& l2) {
  if (l1.d_in() != l2.d_in()) {
    throw std::invalid_argument("preorder: channels have different input dimensions");
  }
  const int d_in = l1.d_in();
  const int d_mid = l2.d_out();
  const int d_out = l1.d_out();
  // Variable: Choi of theta on C^d_mid (x) C^d_out.
  sdp::SdpProblem p(d_mid * d_out);
  p.add_partial_trace_equality({d_mid, d_out}, {0}, linalg::identity(d_mid));
  const CMatrix& j2 = l2.choi();
  p.add_map_equality(
      [&](const CMatrix& g) { return link_product_adjoint(j2, d_in, d_mid, g, d_out); },
      l1.choi(), 0, "link(l2, theta) = l1");
  return p;
}

sdp::SdpProblem joint_measurability_problem(const Observable& m, const Observable& n) {
  if (m.dim() != n.dim()) throw std::invalid_argument("jointly_measurable: dimension mismatch");
  const int km = m.num_outcomes();
  const int kn = n.num_outcomes();
  sdp::SdpProblem p(std::vector<int>(static_cast<size_t>(km) * kn, m.dim()));
  for (int x = 0; x < km; ++x) {
    std::vector<int> row;
    for (int y = 0; y < kn; ++y) row.push_back(x * kn + y);
    p.add_block_sum_equality(row, m.effect(x));
  }
  for (int y = 0; y < kn; ++y) {
    std::vector<int> col;
    for (int x = 0; x < km; ++x) col.push_back(x * kn + y);
    p.add_block_sum_equality(col, n.effect(y));
  }
  return p;
}

double joint_marginal_residual(const Channel& joint, const std::vector<Channel>& channels) {
  if (joint.out_dims().size() != channels.size()) {
    throw std::invalid_argument("joint_marginal_residual: output factor count mismatch");
  }
  const DimTuple dims = joint.choi_dims();
  double worst = 0.0;
  for (int k = 0; k < static_cast<int>(channels.size()); ++k) {
    const CMatrix m = linalg::partial_trace(joint.choi(), dims, {0, k + 1});
    if (m.rows() != channels[k].choi().rows()) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, linalg::frobenius_distance(m, channels[k].choi()));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Preorder

PreorderVerdict preorder_leq(const Channel& l1, const Channel& l2, const Options& opt) {
  const sdp::SdpProblem problem = preorder_problem(l1, l2);
  sdp::SdpVerdict v = sdp::solve_feasibility(problem, opt);
  PreorderVerdict out;
  out.certified = sdp::certify(v, problem, opt.tol);
  if (v.status == sdp::Status::kInfeasible && out.certified) {
    out.status = PreorderStatus::kNotLeq;
  } else if (v.status == sdp::Status::kFeasible && out.certified) {
    Channel theta = Channel::from_approximate_choi(l2.d_out(), l1.out_dims(), v.witness.front());
    out.residual = linalg::frobenius_distance(concatenate(theta, l2).choi(), l1.choi());
    if (out.residual <= kWitnessTol) {
      out.status = PreorderStatus::kLeq;
      out.theta = std::move(theta);
    }
  }
  out.solver = std::move(v);
  return out;
}

EquivalenceVerdict equivalent(const Channel& l1, const Channel& l2, const Options& opt) {
  return EquivalenceVerdict{preorder_leq(l1, l2, opt), preorder_leq(l2, l1, opt)};
}

// ---------------------------------------------------------------------------
// Compatibility

CompatVerdict are_compatible(const Channel& l1, const Channel& l2, const Options& opt) {
  return are_compatible_n({l1, l2}, opt);
}

CompatVerdict are_compatible_n(const std::vector<Channel>& channels, const Options& opt) {
  const sdp::SdpProblem problem = compatibility_problem(channels);
  return finish_compat(channels, problem, sdp::solve_feasibility(problem, opt), opt);
}

JointMeasurabilityVerdict jointly_measurable(const Observable& m, const Observable& n,
                                             const Options& opt) {
  const sdp::SdpProblem problem = joint_measurability_problem(m, n);
  sdp::SdpVerdict v = sdp::solve_feasibility(problem, opt);
  JointMeasurabilityVerdict out;
  out.certified = sdp::certify(v, problem, opt.tol);
  if (v.status == sdp::Status::kInfeasible && out.certified) {
    out.status = CompatStatus::kIncompatible;
  } else if (v.status == sdp::Status::kFeasible && out.certified) {
    Observable g(repair_povm(v.witness), {}, {m.num_outcomes(), n.num_outcomes()});
    const Observable gm = g.marginal(0);
    const Observable gn = g.marginal(1);
    double worst = 0.0;
    for (int x = 0; x < m.num_outcomes(); ++x) {
      worst = std::max(worst, linalg::frobenius_distance(gm.effect(x), m.effect(x)));
    }
    for (int y = 0; y < n.num_outcomes(); ++y) {
      worst = std::max(worst, linalg::frobenius_distance(gn.effect(y), n.effect(y)));
    }
    out.marginal_residual = worst;
    if (worst <= kWitnessTol) {
      out.status = CompatStatus::kCompatible;
      out.joint = std::move(g);
    }
  }
  out.solver = std::move(v);
  return out;
}

ObservableChannelVerdict observable_channel_compatible(const Observable& m, const Channel& l,
                                                       const Options& opt) {
  ObservableChannelVerdict out;
  out.channel_verdict = are_compatible(gamma_of_observable(m), l, opt);
  out.status = out.channel_verdict.status;
  if (out.status != CompatStatus::kCompatible) return out;
  Instrument inst = instrument_from_joint(*out.channel_verdict.joint, m.num_outcomes(), 1e-6);
  const Observable induced = inst.observable();
  double worst = 0.0;
  for (int x = 0; x < m.num_outcomes(); ++x) {
    worst = std::max(worst, linalg::frobenius_distance(induced.effect(x), m.effect(x)));
  }
  out.probability_residual = worst;
  out.total_residual = linalg::frobenius_distance(inst.total().choi(), l.choi());
  if (out.probability_residual > kWitnessTol || out.total_residual > kWitnessTol) {
    out.status = CompatStatus::kUndecided;
    return out;
  }
  out.instrument = std::move(inst);
  return out;
}

bool is_completely_depolarizing(const Channel& l, double tol) {
  const CMatrix out_part = linalg::partial_trace(l.choi(), {l.d_in(), l.d_out()}, {1});
  const CMatrix target = linalg::kron(linalg::identity(l.d_in()), out_part / double(l.d_in()));
  return linalg::frobenius_distance(l.choi(), target) <= tol;
}

EbVerdict is_entanglement_breaking(const Channel& l) {
  EbVerdict out;
  const CMatrix pt = linalg::partial_transpose(l.choi(), {l.d_in(), l.d_out()}, {0});
  out.min_pt_eigenvalue = linalg::min_eigenvalue(pt);
  out.ppt_exact = l.d_in() * l.d_out() <= 6;
  const double floor = -1e-9 * std::max(1.0, l.choi().cwiseAbs().maxCoeff());
  if (out.min_pt_eigenvalue < floor) {
    out.status = EbStatus::kNotEntanglementBreaking;
  } else {
    out.status = out.ppt_exact ? EbStatus::kEntanglementBreaking : EbStatus::kInconclusive;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Self-compatibility

Channel symmetrize_joint(const Channel& joint) {
  const int n = static_cast<int>(joint.out_dims().size());
  const auto perms = all_permutations(n);
  std::vector<Channel> permuted;
  for (const auto& p : perms) permuted.push_back(permute_outputs(joint, p));
  return mix(permuted, std::vector<double>(perms.size(), 1.0 / perms.size()));
}

CompatVerdict is_self_compatible(const Channel& l, const Options& opt) {
  return is_n_self_compatible(l, 2, opt);
}

CompatVerdict is_n_self_compatible(const Channel& l, int n, const Options& opt) {
  if (n < 2) throw std::invalid_argument("is_n_self_compatible: n must be at least 2");
  const std::vector<Channel> copies(n, l);
  CompatVerdict v = are_compatible_n(copies, opt);
  if (v.status == CompatStatus::kCompatible) {
    Channel sym = symmetrize_joint(*v.joint);
    const double res = joint_marginal_residual(sym, copies);
    if (res > kWitnessTol) {
      v.status = CompatStatus::kUndecided;
      v.joint.reset();
      return v;
    }
    v.marginal_residual = std::max(v.marginal_residual, res);
    v.symmetric_joint = std::move(sym);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Incompatibility breaking

BreakingVerdict incompatibility_breaking_on(const Channel& phi, const std::vector<Channel>& set,
                                            int n, const Options& opt) {
  if (set.empty()) throw std::invalid_argument("incompatibility_breaking_on: empty set");
  if (n < 2) throw std::invalid_argument("incompatibility_breaking_on: n must be at least 2");
  for (const auto& l : set) {
    if (l.d_in() != phi.d_out()) {
      throw std::invalid_argument("incompatibility_breaking_on: phi output does not feed the set");
    }
  }
  std::vector<Channel> composed;
  for (const auto& l : set) composed.push_back(concatenate(l, phi));

  BreakingVerdict out;
  out.status = CompatStatus::kCompatible;
  const int k = static_cast<int>(set.size());
  std::vector<int> idx(n, 0);
  while (true) {
    std::vector<Channel> tuple;
    for (int i : idx) tuple.push_back(composed[i]);
    CompatVerdict v = are_compatible_n(tuple, opt);
    ++out.tuples_checked;
    const CompatStatus s = v.status;
    out.verdicts.push_back(std::move(v));
    if (s == CompatStatus::kIncompatible) {
      out.status = s;
      out.failing_tuple = idx;
      return out;
    }
    if (s == CompatStatus::kUndecided && out.status == CompatStatus::kCompatible) {
      out.status = s;
      out.failing_tuple = idx;
    }
    // next non-decreasing tuple
    int pos = n - 1;
    while (pos >= 0 && idx[pos] == k - 1) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int j = pos + 1; j < n; ++j) idx[j] = idx[pos];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Three-channel factorization

Factorization three_channel_factorize(const Channel& l1, const Channel& l2, const Channel& l3,
                                      const Options& opt) {
  Factorization out;
  const CompatVerdict joint = are_compatible_n({l1, l2, l3}, opt);
  out.status = joint.status;
  if (joint.status != CompatStatus::kCompatible) {
    out.note = std::string("triple is ") + to_string(joint.status);
    return out;
  }
  const Channel l23 = marginal(*joint.joint, {1, 2});
  const Channel c1 = conjugate(l1);
  const PreorderVerdict pv = preorder_leq(l23, c1, opt);
  if (pv.status != PreorderStatus::kLeq) {
    out.status = CompatStatus::kUndecided;
    out.note = std::string("preorder step is ") + to_string(pv.status);
    return out;
  }
  Channel e2 = marginal(*pv.theta, {0});
  Channel e3 = marginal(*pv.theta, {1});
  out.residual = std::max(linalg::frobenius_distance(concatenate(e2, c1).choi(), l2.choi()),
                          linalg::frobenius_distance(concatenate(e3, c1).choi(), l3.choi()));
  if (out.residual > 1e-5) {
    out.status = CompatStatus::kUndecided;
    out.note = "factorization residual above 1e-5";
    return out;
  }
  out.e2 = std::move(e2);
  out.e3 = std::move(e3);
  return out;
}

// ---------------------------------------------------------------------------
// Thresholds

ThresholdResult noise_threshold(const PairFamily& family, double lo, double hi, double tol,
                                const Options& opt) {
  if (!(lo < hi) || !(tol > 0.0)) throw std::invalid_argument("noise_threshold: need lo < hi, tol > 0");
  ThresholdResult r;
  auto eval = [&](double t) {
    auto [a, b] = family(t);
    CompatVerdict v = are_compatible(a, b, opt);
    r.probes.emplace_back(t, v.status);
    return v;
  };
  CompatVerdict vlo = eval(lo);
  CompatVerdict vhi = eval(hi);
  if (vlo.status == CompatStatus::kUndecided || vhi.status == CompatStatus::kUndecided) {
    throw std::invalid_argument("noise_threshold: an endpoint verdict is Undecided");
  }
  if (vlo.status == vhi.status) {
    throw std::invalid_argument(std::string("noise_threshold: both endpoints are ") +
                                to_string(vlo.status));
  }
  r.lo = lo;
  r.hi = hi;
  while (r.hi - r.lo > tol) {
    const double width = r.hi - r.lo;
    std::optional<std::pair<double, CompatVerdict>> decided;
    for (double frac : {0.5, 0.25, 0.75}) {
      const double t = r.lo + frac * width;
      CompatVerdict v = eval(t);
      if (v.status != CompatStatus::kUndecided) {
        decided.emplace(t, std::move(v));
        break;
      }
    }
    if (!decided) break;
    if (decided->second.status == vlo.status) {
      r.lo = decided->first;
      vlo = std::move(decided->second);
    } else {
      r.hi = decided->first;
      vhi = std::move(decided->second);
    }
  }
  r.converged = r.hi - r.lo <= tol;
  r.status_lo = vlo.status;
  r.status_hi = vhi.status;
  r.endpoint_verdicts.push_back(std::move(vlo));
  r.endpoint_verdicts.push_back(std::move(vhi));
  return r;
}

// ---------------------------------------------------------------------------
// Closed-form joints

Channel noisy_pair_joint(const Channel& l1, const CMatrix& eta1, const Channel& l2,
                         const CMatrix& eta2) {
  if (l1.d_in() != l2.d_in()) throw std::invalid_argument("noisy_pair_joint: input mismatch");
  if (eta1.rows() != l1.d_out() || eta2.rows() != l2.d_out()) {
    throw std::invalid_argument("noisy_pair_joint: state dimension does not match output");
  }
  const int d = l1.d_in();
  const int o1 = l1.d_out();
  const int o2 = l2.d_out();
  const CMatrix first = linalg::kron(l1.choi(), eta2);
  // (in, o2, o1) -> (in, o1, o2)
  const CMatrix second =
      linalg::permute_subsystems(linalg::kron(l2.choi(), eta1), {d, o2, o1}, {0, 2, 1});
  return Channel(d, {o1, o2}, 0.5 * (first + second));
}

Channel observable_copies_joint(const Observable& m, int n) {
  const Channel copies = concatenate(copying_channel(m.num_outcomes(), n), gamma_of_observable(m));
  return copies;
}

}  // namespace qcompat::compat
