#include "qcompat/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "qcompat/compat.hpp"
#include "qcompat/io.hpp"

namespace qcompat::cli {

namespace {

using io::json;
using Clock = std::chrono::steady_clock;

const std::set<std::string> kCommands = {
    "check-compat", "check-compat-n", "check-preorder", "check-jm", "check-eb", "check-selfcompat",
    "conjugate",    "convert",        "sweep-pauli",    "threshold", "selftest"};

// Input problems detected before any solver runs.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 0;
  int max_iter = 50000;
  double tol = 1e-7;

  compat::Options options() const {
    compat::Options o;
    o.seed = seed;
    o.max_iter = max_iter;
    o.tol.feasibility = tol;
    return o;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Channel load_channel(const std::string& path) {
  try {
    return io::decode_channel(io::load_file(path));
  } catch (const io::DecodeError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
}

Observable load_observable(const std::string& path) {
  try {
    return io::decode_observable(io::load_file(path));
  } catch (const io::DecodeError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
}

void require_same_input(const std::vector<Channel>& cs) {
  for (size_t k = 1; k < cs.size(); ++k) {
    if (cs[k].d_in() != cs[0].d_in()) {
      throw InputError("dimension mismatch: input dimension " + std::to_string(cs[k].d_in()) +
                       " of argument " + std::to_string(k + 1) + " differs from " +
                       std::to_string(cs[0].d_in()));
    }
  }
}

std::vector<double> to_std(const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void fill_solver(io::VerdictReport& r, const sdp::SdpVerdict& v, bool certified) {
  r.diagnostics = v.diagnostics;
  r.certified = certified;
  if (v.status == sdp::Status::kInfeasible) r.certificate = to_std(v.certificate);
  r.residuals["affine_residual"] = v.diagnostics.affine_residual;
  r.residuals["min_eigenvalue"] = v.diagnostics.min_eigenvalue;
  if (v.status == sdp::Status::kInfeasible) {
    r.residuals["certificate_lambda_max"] = v.diagnostics.certificate_lambda_max;
    r.residuals["certificate_objective"] = v.diagnostics.certificate_objective;
  }
}

int emit(std::ostream& out, const io::VerdictReport& r, bool undecided) {
  out << io::to_json(r).dump(2) << "\n";
  return undecided ? kUndecided : kDecided;
}

io::VerdictReport compat_report(const std::string& command, const compat::CompatVerdict& v,
                                const std::vector<Channel>& inputs, Clock::time_point t0) {
  io::VerdictReport r;
  r.command = command;
  r.status = compat::to_string(v.status);
  fill_solver(r, v.solver, v.certified);
  if (v.joint) {
    r.witness = io::encode_channel(*v.joint);
    const double res = compat::joint_marginal_residual(*v.joint, inputs);
    r.residuals["marginal_residual"] = res;
    r.witness_verified = res <= compat::kWitnessTol;
  }
  r.wall_time = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------
// Self test

struct Check {
  std::string name;
  std::function<std::pair<bool, std::string>()> run;
};

std::vector<Check> selftest_checks(const compat::Options& opt) {
  using compat::CompatStatus;
  using compat::PreorderStatus;
  std::vector<Check> checks;
  checks.push_back({"partial_trace_of_max_entangled", [] {
                      CMatrix omega = CMatrix::Zero(4, 4);
                      for (int a : {0, 3}) {
                        for (int b : {0, 3}) omega(a, b) = 1.0;
                      }
                      const double e = linalg::frobenius_distance(
                          linalg::partial_trace(omega, {2, 2}, {0}), linalg::identity(2));
                      return std::make_pair(e < 1e-12, "error " + std::to_string(e));
                    }});
  checks.push_back({"kraus_stinespring_round_trip", [] {
                      double worst = 0.0;
                      for (std::uint64_t s = 0; s < 5; ++s) {
                        const Channel c = random_channel(3, 2, 3, s);
                        worst = std::max(worst, linalg::frobenius_distance(
                                                    choi_from_kraus(kraus_from_choi(c)).choi(), c.choi()));
                        worst = std::max(worst, linalg::frobenius_distance(
                                                    channel_from_stinespring(minimal_stinespring(c)).choi(),
                                                    c.choi()));
                      }
                      return std::make_pair(worst < 1e-7, "max error " + std::to_string(worst));
                    }});
  checks.push_back({"heisenberg_schrodinger_duality", [] {
                      const Channel c = random_channel(2, 3, 2, 7);
                      const CMatrix rho = linalg::random_density_matrix(2, 2, 8);
                      CMatrix t = linalg::random_density_matrix(3, 3, 9);
                      t(0, 1) += cplx(0.3, 0.1);
                      t(1, 0) += cplx(0.3, -0.1);
                      const double e = std::abs((rho * c.heisenberg(t)).trace() - (c.schrodinger(rho) * t).trace());
                      return std::make_pair(e < 1e-9, "error " + std::to_string(e));
                    }});
  checks.push_back({"no_broadcasting", [opt] {
                      const Channel id = identity_channel(2);
                      const auto v = compat::are_compatible(id, id, opt);
                      return std::make_pair(v.status == CompatStatus::kIncompatible && v.certified,
                                            std::string(compat::to_string(v.status)));
                    }});
  checks.push_back({"channel_and_conjugate_compatible", [opt] {
                      const Channel c = random_channel(2, 2, 2, 3);
                      const auto v = compat::are_compatible(c, conjugate(c), opt);
                      return std::make_pair(v.status == CompatStatus::kCompatible && v.certified,
                                            std::string(compat::to_string(v.status)));
                    }});
  checks.push_back({"noisy_pair_closed_form", [] {
                      const Channel a = random_channel(2, 2, 2, 11);
                      const Channel b = random_channel(2, 3, 2, 12);
                      const CMatrix e1 = linalg::random_density_matrix(2, 2, 13);
                      const CMatrix e2 = linalg::random_density_matrix(3, 3, 14);
                      const Channel j = compat::noisy_pair_joint(a, e1, b, e2);
                      const double res = compat::joint_marginal_residual(
                          j, {mix({a, constant_channel(e1, 2)}, {0.5, 0.5}),
                              mix({b, constant_channel(e2, 2)}, {0.5, 0.5})});
                      return std::make_pair(res < 1e-9, "residual " + std::to_string(res));
                    }});
  checks.push_back({"observable_copies", [] {
                      const Observable m = random_observable(2, 3, 5);
                      const Channel g = gamma_of_observable(m);
                      const double res = compat::joint_marginal_residual(
                          compat::observable_copies_joint(m, 3), {g, g, g});
                      return std::make_pair(res < 1e-9, "residual " + std::to_string(res));
                    }});
  checks.push_back({"entanglement_breaking", [] {
                      const Observable f = random_observable(2, 3, 21);
                      std::vector<CMatrix> states;
                      for (int x = 0; x < 3; ++x) states.push_back(linalg::random_density_matrix(3, 2, 30 + x));
                      const auto mp = compat::is_entanglement_breaking(measure_prepare_channel(f, states));
                      const auto id = compat::is_entanglement_breaking(identity_channel(2));
                      const bool ok = mp.status == compat::EbStatus::kEntanglementBreaking &&
                                      id.status == compat::EbStatus::kNotEntanglementBreaking;
                      return std::make_pair(ok, std::string(compat::to_string(mp.status)) + "/" +
                                                    compat::to_string(id.status));
                    }});
  checks.push_back({"depolarizing_self_compatibility", [opt] {
                      auto dep = [](double l) {
                        return mix({identity_channel(2), constant_channel(linalg::identity(2) / 2.0, 2)},
                                   {l, 1.0 - l});
                      };
                      const auto lo = compat::is_self_compatible(dep(0.6), opt);
                      const auto hi = compat::is_self_compatible(dep(0.75), opt);
                      const bool ok = lo.status == CompatStatus::kCompatible &&
                                      hi.status == CompatStatus::kIncompatible;
                      return std::make_pair(ok, std::string(compat::to_string(lo.status)) + "/" +
                                                    compat::to_string(hi.status));
                    }});
  checks.push_back({"constant_is_smallest", [opt] {
                      const Observable m = random_observable(2, 3, 40);
                      const Channel k = constant_channel(linalg::random_density_matrix(2, 1, 41), 2);
                      const auto a = compat::preorder_leq(k, gamma_of_observable(m), opt);
                      const auto b = compat::preorder_leq(identity_channel(2), k, opt);
                      const bool ok = a.status == PreorderStatus::kLeq && b.status == PreorderStatus::kNotLeq;
                      return std::make_pair(ok, std::string(compat::to_string(a.status)) + "/" +
                                                    compat::to_string(b.status));
                    }});
  checks.push_back({"sharp_x_y_not_jointly_measurable", [opt] {
                      auto sharp = [](const CMatrix& s) {
                        return Observable({(linalg::identity(2) + s) / 2.0, (linalg::identity(2) - s) / 2.0});
                      };
                      const auto v = compat::jointly_measurable(sharp(linalg::pauli_x()), sharp(linalg::pauli_y()), opt);
                      return std::make_pair(v.status == CompatStatus::kIncompatible,
                                            std::string(compat::to_string(v.status)));
                    }});
  checks.push_back({"pauli_sufficient_implies_incompatible", [opt] {
                      std::string bad;
                      for (int i = 0; i <= 20; ++i) {
                        const double t = 0.05 * i;
                        const std::array<double, 3> p{0.0, 0.0, t / 2.0};
                        if (!pauli_incompatibility_sufficient(p, p)) continue;
                        const auto v = compat::are_compatible(pauli_channel(p), pauli_channel(p), opt);
                        if (v.status == CompatStatus::kCompatible) {
                          std::ostringstream s;
                          s << "t=" << t << " is Compatible; ";
                          bad += s.str();
                        }
                      }
                      return std::make_pair(bad.empty(), bad.empty() ? std::string("ok") : bad);
                    }});
  return checks;
}

// ---------------------------------------------------------------------------
// Threshold families

compat::PairFamily family_by_name(const std::string& name) {
  if (name == "depolarizing") {
    return [](double l) {
      const Channel c = mix({identity_channel(2), constant_channel(linalg::identity(2) / 2.0, 2)},
                            {l, 1.0 - l});
      return std::make_pair(c, c);
    };
  }
  if (name == "pauli") {
    return [](double t) {
      const Channel c = pauli_channel({0.0, 0.0, t / 2.0});
      return std::make_pair(c, c);
    };
  }
  throw InputError("unknown family '" + name + "' (expected depolarizing or pauli)");
}

std::string csv_number(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << "error: no subcommand given\n";
    return kInputError;
  }
  if (args[0] != "--help" && args[0] != "-h" && !kCommands.count(args[0])) {
    err << "error: unknown subcommand '" << args[0] << "'\n";
    return kInputError;
  }

  CLI::App app{"Quantum channel compatibility and preorder decisions"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "solver seed");
    sub->add_option("--max-iter", common.max_iter, "solver iteration budget")->check(CLI::PositiveNumber);
    sub->add_option("--tol", common.tol, "feasibility residual tolerance")->check(CLI::PositiveNumber);
  };

  std::vector<std::string> files;
  std::string file_a, file_b, to_kind = "choi", family = "depolarizing";
  int n_copies = 2;
  int steps = 20;
  double lo = 0.0, hi = 1.0, width = 1e-3;

  auto* compat_cmd = app.add_subcommand("check-compat", "compatibility of two channels");
  compat_cmd->add_option("first", file_a)->required();
  compat_cmd->add_option("second", file_b)->required();
  auto* compat_n_cmd = app.add_subcommand("check-compat-n", "compatibility of n channels");
  compat_n_cmd->add_option("files", files)->required()->expected(2, -1);
  auto* preorder_cmd = app.add_subcommand("check-preorder", "is first <= second");
  preorder_cmd->add_option("first", file_a)->required();
  preorder_cmd->add_option("second", file_b)->required();
  auto* jm_cmd = app.add_subcommand("check-jm", "joint measurability of two observables");
  jm_cmd->add_option("first", file_a)->required();
  jm_cmd->add_option("second", file_b)->required();
  auto* eb_cmd = app.add_subcommand("check-eb", "entanglement breaking via PPT");
  eb_cmd->add_option("channel", file_a)->required();
  auto* self_cmd = app.add_subcommand("check-selfcompat", "n-self-compatibility");
  self_cmd->add_option("channel", file_a)->required();
  self_cmd->add_option("-n,--copies", n_copies, "number of copies")->check(CLI::Range(2, 6));
  auto* conj_cmd = app.add_subcommand("conjugate", "conjugate channel");
  conj_cmd->add_option("channel", file_a)->required();
  auto* convert_cmd = app.add_subcommand("convert", "re-encode a channel file");
  convert_cmd->add_option("channel", file_a)->required();
  convert_cmd->add_option("--to", to_kind, "choi or kraus")->check(CLI::IsMember({"choi", "kraus"}));
  auto* sweep_cmd = app.add_subcommand("sweep-pauli", "Pauli boundary family phase table (CSV)");
  sweep_cmd->add_option("--steps", steps, "grid intervals on t in [0, 1]")->check(CLI::Range(1, 1000));
  auto* threshold_cmd = app.add_subcommand("threshold", "bisect a compatibility boundary");
  threshold_cmd->add_option("--family", family, "depolarizing or pauli");
  threshold_cmd->add_option("--lo", lo);
  threshold_cmd->add_option("--hi", hi);
  threshold_cmd->add_option("--width", width, "target bracket width")->check(CLI::PositiveNumber);
  auto* selftest_cmd = app.add_subcommand("selftest", "run the invariant suite");
  for (auto* sub : {compat_cmd, compat_n_cmd, preorder_cmd, jm_cmd, eb_cmd, self_cmd, conj_cmd,
                    convert_cmd, sweep_cmd, threshold_cmd, selftest_cmd}) {
    add_common(sub);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kDecided;
  } catch (const CLI::ParseError& e) {
    err << "error: bad arguments: " << e.what() << "\n";
    return kInputError;
  }

  const auto t0 = Clock::now();
  const compat::Options opt = common.options();
  try {
    if (*compat_cmd || *compat_n_cmd) {
      const bool pair = static_cast<bool>(*compat_cmd);
      std::vector<Channel> cs;
      for (const auto& f : pair ? std::vector<std::string>{file_a, file_b} : files) {
        cs.push_back(load_channel(f));
      }
      require_same_input(cs);
      const auto v = compat::are_compatible_n(cs, opt);
      return emit(out, compat_report(pair ? "check-compat" : "check-compat-n", v, cs, t0),
                  v.status == compat::CompatStatus::kUndecided);
    }
    if (*preorder_cmd) {
      const Channel a = load_channel(file_a);
      const Channel b = load_channel(file_b);
      require_same_input({a, b});
      const auto v = compat::preorder_leq(a, b, opt);
      io::VerdictReport r;
      r.command = "check-preorder";
      r.status = compat::to_string(v.status);
      fill_solver(r, v.solver, v.certified);
      if (v.theta) {
        r.witness = io::encode_channel(*v.theta);
        const double res = linalg::frobenius_distance(concatenate(*v.theta, b).choi(), a.choi());
        r.residuals["concatenation_residual"] = res;
        r.witness_verified = res <= compat::kWitnessTol;
      }
      r.wall_time = seconds_since(t0);
      return emit(out, r, v.status == compat::PreorderStatus::kUndecided);
    }
    if (*jm_cmd) {
      const Observable m = load_observable(file_a);
      const Observable n = load_observable(file_b);
      if (m.dim() != n.dim()) {
        throw InputError("dimension mismatch: observables act on dimensions " +
                         std::to_string(m.dim()) + " and " + std::to_string(n.dim()));
      }
      const auto v = compat::jointly_measurable(m, n, opt);
      io::VerdictReport r;
      r.command = "check-jm";
      r.status = compat::to_string(v.status);
      fill_solver(r, v.solver, v.certified);
      if (v.joint) {
        r.witness = io::encode_observable(*v.joint);
        r.residuals["marginal_residual"] = v.marginal_residual;
        r.witness_verified = v.marginal_residual <= compat::kWitnessTol;
      }
      r.wall_time = seconds_since(t0);
      return emit(out, r, v.status == compat::CompatStatus::kUndecided);
    }
    if (*eb_cmd) {
      const Channel c = load_channel(file_a);
      const auto v = compat::is_entanglement_breaking(c);
      io::VerdictReport r;
      r.command = "check-eb";
      r.status = compat::to_string(v.status);
      r.residuals["min_pt_eigenvalue"] = v.min_pt_eigenvalue;
      r.extra["ppt_exact"] = v.ppt_exact;
      r.certified = v.status != compat::EbStatus::kInconclusive;
      r.wall_time = seconds_since(t0);
      return emit(out, r, v.status == compat::EbStatus::kInconclusive);
    }
    if (*self_cmd) {
      const Channel c = load_channel(file_a);
      const auto v = compat::is_n_self_compatible(c, n_copies, opt);
      io::VerdictReport r = compat_report("check-selfcompat", v,
                                          std::vector<Channel>(n_copies, c), t0);
      r.extra["copies"] = n_copies;
      if (v.symmetric_joint) r.extra["symmetric_joint"] = io::encode_channel(*v.symmetric_joint);
      return emit(out, r, v.status == compat::CompatStatus::kUndecided);
    }
    if (*conj_cmd) {
      const Channel c = conjugate(load_channel(file_a));
      if (compat::is_completely_depolarizing(c, 1e-12)) {
        const CMatrix eta = linalg::partial_trace(c.choi(), {c.d_in(), c.d_out()}, {1}) / double(c.d_in());
        out << io::encode_constant(linalg::hermitian_part(eta), c.d_in()).dump(2) << "\n";
      } else {
        out << io::encode_channel(c).dump(2) << "\n";
      }
      return kDecided;
    }
    if (*convert_cmd) {
      const Channel c = load_channel(file_a);
      out << (to_kind == "kraus" ? io::encode_kraus(kraus_from_choi(c)) : io::encode_channel(c)).dump(2)
          << "\n";
      return kDecided;
    }
    if (*sweep_cmd) {
      bool any_undecided = false;
      out << "p_x,p_y,p_z,q_x,q_y,q_z,analytic_sufficient,sdp_status\n";
      for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const std::array<double, 3> p{0.0, 0.0, t / 2.0};
        const bool suff = pauli_incompatibility_sufficient(p, p);
        const auto v = compat::are_compatible(pauli_channel(p), pauli_channel(p), opt);
        any_undecided |= v.status == compat::CompatStatus::kUndecided;
        out << csv_number(p[0]) << "," << csv_number(p[1]) << "," << csv_number(p[2]) << ","
            << csv_number(p[0]) << "," << csv_number(p[1]) << "," << csv_number(p[2]) << ","
            << (suff ? "true" : "false") << "," << compat::to_string(v.status) << "\n";
      }
      return any_undecided ? kUndecided : kDecided;
    }
    if (*threshold_cmd) {
      const auto fam = family_by_name(family);
      compat::ThresholdResult res;
      try {
        res = compat::noise_threshold(fam, lo, hi, width, opt);
      } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
      }
      json j{{"command", "threshold"},
             {"family", family},
             {"lo", res.lo},
             {"hi", res.hi},
             {"status_lo", compat::to_string(res.status_lo)},
             {"status_hi", compat::to_string(res.status_hi)},
             {"converged", res.converged},
             {"probes", json::array()},
             {"wall_time", seconds_since(t0)}};
      bool certified = true;
      for (const auto& v : res.endpoint_verdicts) certified = certified && v.certified;
      j["certified"] = certified;
      for (const auto& [t, s] : res.probes) j["probes"].push_back({t, compat::to_string(s)});
      out << j.dump(2) << "\n";
      return res.converged ? kDecided : kUndecided;
    }
    if (*selftest_cmd) {
      json j{{"command", "selftest"}, {"checks", json::array()}};
      int failed = 0;
      for (const auto& c : selftest_checks(opt)) {
        const auto [ok, detail] = c.run();
        failed += ok ? 0 : 1;
        j["checks"].push_back({{"name", c.name}, {"pass", ok}, {"detail", detail}});
        err << (ok ? "PASS " : "FAIL ") << c.name << ": " << detail << "\n";
      }
      j["failed"] = failed;
      j["wall_time"] = seconds_since(t0);
      out << j.dump(2) << "\n";
      return failed ? kSelftestFailed : kDecided;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid input: " << e.what() << "\n";
    return kInputError;
  }
  err << "error: no subcommand selected\n";
  return kInputError;
}

}  // namespace qcompat::cli
