#include "qcompat/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qcompat::io {

namespace {

std::string child(const std::string& pointer, const std::string& key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') {
      escaped += "~0";
    } else if (c == '/') {
      escaped += "~1";
    } else {
      escaped += c;
    }
  }
  return pointer + "/" + escaped;
}

std::string child(const std::string& pointer, size_t index) {
  return pointer + "/" + std::to_string(index);
}

void require_fields(const json& j, const std::string& pointer,
                    const std::set<std::string>& allowed) {
  if (!j.is_object()) throw DecodeError(pointer, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw DecodeError(child(pointer, key), "unknown field");
  }
  for (const auto& key : allowed) {
    if (key == "kind" || key == "outcomes" || key == "shape") continue;  // optional or checked
    if (!j.contains(key)) throw DecodeError(child(pointer, key), "missing field");
  }
}

const json& field(const json& j, const std::string& pointer, const std::string& key) {
  if (!j.contains(key)) throw DecodeError(child(pointer, key), "missing field");
  return j.at(key);
}

int positive_int(const json& j, const std::string& pointer) {
  if (!j.is_number_integer()) throw DecodeError(pointer, "expected an integer");
  const long v = j.get<long>();
  if (v <= 0 || v > 4096) throw DecodeError(pointer, "expected a positive dimension");
  return static_cast<int>(v);
}

double real_number(const json& j, const std::string& pointer) {
  if (!j.is_number()) throw DecodeError(pointer, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw DecodeError(pointer, "non-finite number");
  return v;
}

std::vector<int> int_list(const json& j, const std::string& pointer, bool positive) {
  if (!j.is_array()) throw DecodeError(pointer, "expected an array");
  std::vector<int> out;
  for (size_t k = 0; k < j.size(); ++k) {
    const std::string p = child(pointer, k);
    if (positive) {
      out.push_back(positive_int(j[k], p));
    } else {
      if (!j[k].is_number_integer()) throw DecodeError(p, "expected an integer");
      out.push_back(j[k].get<int>());
    }
  }
  return out;
}

std::vector<CMatrix> matrix_list(const json& j, const std::string& pointer, int rows, int cols) {
  if (!j.is_array()) throw DecodeError(pointer, "expected an array of matrices");
  std::vector<CMatrix> out;
  for (size_t k = 0; k < j.size(); ++k) out.push_back(decode_matrix(j[k], rows, cols, child(pointer, k)));
  return out;
}

template <typename F>
auto with_pointer(const std::string& pointer, F&& build) -> decltype(build()) {
  try {
    return build();
  } catch (const std::invalid_argument& e) {
    throw DecodeError(pointer, e.what());
  }
}

std::string kind_of(const json& j) {
  if (!j.is_object()) throw DecodeError("", "expected an object");
  if (!j.contains("kind")) throw DecodeError("/kind", "missing field");
  if (!j["kind"].is_string()) throw DecodeError("/kind", "expected a string");
  return j["kind"].get<std::string>();
}

Observable decode_povm_fields(const json& j) {
  const int dim = positive_int(field(j, "", "dim"), "/dim");
  const auto effects = matrix_list(field(j, "", "effects"), "/effects", dim, dim);
  if (effects.empty()) throw DecodeError("/effects", "no effects");
  std::vector<int> outcomes;
  if (j.contains("outcomes")) outcomes = int_list(j["outcomes"], "/outcomes", false);
  std::vector<int> shape;
  if (j.contains("shape")) shape = int_list(j["shape"], "/shape", true);
  return with_pointer("/effects", [&] { return Observable(effects, outcomes, shape); });
}

json diagnostics_json(const sdp::Diagnostics& d) {
  return json{{"iterations", d.iterations},
              {"farkas_iterations", d.farkas_iterations},
              {"affine_residual", d.affine_residual},
              {"min_eigenvalue", d.min_eigenvalue},
              {"certificate_lambda_max", d.certificate_lambda_max},
              {"certificate_objective", d.certificate_objective},
              {"primal_distance", d.primal_distance},
              {"max_distance_increase", d.max_distance_increase},
              {"polished", d.polished},
              {"affine_inconsistent", d.affine_inconsistent},
              {"seconds", d.seconds}};
}

sdp::Diagnostics diagnostics_from_json(const json& j) {
  sdp::Diagnostics d;
  d.iterations = j.at("iterations").get<int>();
  d.farkas_iterations = j.at("farkas_iterations").get<int>();
  d.affine_residual = j.at("affine_residual").get<double>();
  d.min_eigenvalue = j.at("min_eigenvalue").get<double>();
  d.certificate_lambda_max = j.at("certificate_lambda_max").get<double>();
  d.certificate_objective = j.at("certificate_objective").get<double>();
  d.primal_distance = j.at("primal_distance").get<double>();
  d.max_distance_increase = j.at("max_distance_increase").get<double>();
  d.polished = j.at("polished").get<bool>();
  d.affine_inconsistent = j.at("affine_inconsistent").get<bool>();
  d.seconds = j.at("seconds").get<double>();
  return d;
}

}  // namespace

json encode_matrix(const CMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back({m(i, j).real(), m(i, j).imag()});
  }
  return out;
}

CMatrix decode_matrix(const json& j, int rows, int cols, const std::string& pointer) {
  if (!j.is_array()) throw DecodeError(pointer, "expected an array of [re, im] pairs");
  const size_t expected = static_cast<size_t>(rows) * cols;
  if (j.size() != expected) {
    throw DecodeError(pointer, "expected " + std::to_string(expected) + " entries, got " +
                                   std::to_string(j.size()));
  }
  CMatrix m(rows, cols);
  for (size_t k = 0; k < expected; ++k) {
    const std::string p = child(pointer, k);
    const json& e = j[k];
    if (!e.is_array() || e.size() != 2) throw DecodeError(p, "expected an [re, im] pair");
    m(k / cols, k % cols) = cplx(real_number(e[0], child(p, 0)), real_number(e[1], child(p, 1)));
  }
  return m;
}

json encode_channel(const Channel& c) {
  return json{{"kind", "choi"},
              {"d_in", c.d_in()},
              {"d_out_dims", c.out_dims()},
              {"choi", encode_matrix(c.choi())}};
}

json encode_kraus(const KrausForm& k) {
  json ops = json::array();
  for (const auto& op : k.operators) ops.push_back(encode_matrix(op));
  return json{{"kind", "kraus"}, {"d_in", k.d_in}, {"d_out_dims", k.out_dims}, {"operators", ops}};
}

json encode_pauli(const std::array<double, 3>& p) {
  return json{{"kind", "pauli"}, {"p", {p[0], p[1], p[2]}}};
}

json encode_constant(const CMatrix& eta, int d_in) {
  return json{{"kind", "constant"},
              {"d_in", d_in},
              {"d_out", eta.rows()},
              {"eta", encode_matrix(eta)}};
}

json encode_gamma(const Observable& m) {
  json j = encode_observable(m);
  j["kind"] = "gamma";
  j.erase("shape");
  return j;
}

json encode_observable(const Observable& m) {
  json effects = json::array();
  for (const auto& e : m.effects()) effects.push_back(encode_matrix(e));
  json j{{"kind", "observable"}, {"dim", m.dim()}, {"outcomes", m.outcomes()}, {"effects", effects}};
  if (m.shape().size() > 1) j["shape"] = m.shape();
  return j;
}

Channel decode_channel(const json& j) {
  const std::string kind = kind_of(j);
  if (kind == "choi") {
    require_fields(j, "", {"kind", "d_in", "d_out_dims", "choi"});
    const int d_in = positive_int(j["d_in"], "/d_in");
    const DimTuple out = int_list(j["d_out_dims"], "/d_out_dims", true);
    if (out.empty()) throw DecodeError("/d_out_dims", "must not be empty");
    const int n = d_in * linalg::dim_product(out);
    const CMatrix choi = decode_matrix(j["choi"], n, n, "/choi");
    return with_pointer("/choi", [&] { return Channel(d_in, out, choi); });
  }
  if (kind == "kraus") {
    require_fields(j, "", {"kind", "d_in", "d_out_dims", "operators"});
    const int d_in = positive_int(j["d_in"], "/d_in");
    const DimTuple out = int_list(j["d_out_dims"], "/d_out_dims", true);
    if (out.empty()) throw DecodeError("/d_out_dims", "must not be empty");
    const auto ops = matrix_list(j["operators"], "/operators", linalg::dim_product(out), d_in);
    if (ops.empty()) throw DecodeError("/operators", "no Kraus operators");
    return with_pointer("/operators", [&] { return choi_from_kraus(KrausForm{d_in, out, ops}); });
  }
  if (kind == "pauli") {
    require_fields(j, "", {"kind", "p"});
    const json& p = j["p"];
    if (!p.is_array() || p.size() != 3) throw DecodeError("/p", "expected [p_x, p_y, p_z]");
    std::array<double, 3> v{};
    for (size_t k = 0; k < 3; ++k) v[k] = real_number(p[k], child("/p", k));
    return with_pointer("/p", [&] { return pauli_channel(v); });
  }
  if (kind == "constant") {
    require_fields(j, "", {"kind", "d_in", "d_out", "eta"});
    const int d_in = positive_int(j["d_in"], "/d_in");
    const int d_out = positive_int(j["d_out"], "/d_out");
    const CMatrix eta = decode_matrix(j["eta"], d_out, d_out, "/eta");
    return with_pointer("/eta", [&] { return constant_channel(eta, d_in); });
  }
  if (kind == "gamma") {
    require_fields(j, "", {"kind", "dim", "outcomes", "effects"});
    return gamma_of_observable(decode_povm_fields(j));
  }
  throw DecodeError("/kind", "unknown channel kind '" + kind + "'");
}

Observable decode_observable(const json& j) {
  const std::string kind = kind_of(j);
  if (kind == "observable") {
    require_fields(j, "", {"kind", "dim", "outcomes", "effects", "shape"});
    return decode_povm_fields(j);
  }
  if (kind == "gamma") {
    require_fields(j, "", {"kind", "dim", "outcomes", "effects"});
    return decode_povm_fields(j);
  }
  throw DecodeError("/kind", "expected an observable, got kind '" + kind + "'");
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DecodeError("", std::string("malformed JSON: ") + e.what());
  }
}

json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

json to_json(const VerdictReport& r) {
  json j{{"command", r.command},
         {"status", r.status},
         {"certificate", r.certificate},
         {"residuals", r.residuals},
         {"diagnostics", diagnostics_json(r.diagnostics)},
         {"certified", r.certified},
         {"witness_verified", r.witness_verified},
         {"wall_time", r.wall_time}};
  if (r.witness) j["witness"] = *r.witness;
  if (!r.extra.empty()) j["extra"] = r.extra;
  return j;
}

VerdictReport report_from_json(const json& j) {
  VerdictReport r;
  try {
    r.command = j.at("command").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.certificate = j.at("certificate").get<std::vector<double>>();
    r.residuals = j.at("residuals").get<std::map<std::string, double>>();
    r.diagnostics = diagnostics_from_json(j.at("diagnostics"));
    r.certified = j.at("certified").get<bool>();
    r.witness_verified = j.at("witness_verified").get<bool>();
    r.wall_time = j.at("wall_time").get<double>();
    if (j.contains("witness")) r.witness = j["witness"];
    if (j.contains("extra")) r.extra = j["extra"];
  } catch (const json::exception& e) {
    throw DecodeError("", std::string("bad verdict report: ") + e.what());
  }
  if (r.witness) {
    // Witness must decode to a valid object.
    const std::string kind = kind_of(*r.witness);
    if (kind == "observable") {
      decode_observable(*r.witness);
    } else {
      decode_channel(*r.witness);
    }
  }
  return r;
}

}  // namespace qcompat::io
