#pragma once

// JSON files for channels, observables and verdict reports.
//
// Complex numbers are [re, im] pairs, matrices are row-major flat lists.
// Channel files carry a "kind":
//   choi      {"d_in", "d_out_dims", "choi"}
//   kraus     {"d_in", "d_out_dims", "operators"}     (each d_out x d_in)
//   pauli     {"p": [p_x, p_y, p_z]}
//   constant  {"d_in", "d_out", "eta"}
//   gamma     {"dim", "outcomes", "effects"}          (Gamma of the POVM)
// Observable files use kind "observable" with {"dim", "outcomes",
// "effects"} (optionally "shape"); a gamma file is also accepted where an
// observable is expected. Unknown fields are errors.

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcompat/channel.hpp"
#include "qcompat/sdp.hpp"

namespace qcompat::io {

using nlohmann::json;

/// Schema or invariant violation; pointer() is a JSON pointer into the
/// offending document ("" for the root).
class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::string pointer, const std::string& message)
      : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + message),
        pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

json encode_matrix(const CMatrix& m);
CMatrix decode_matrix(const json& j, int rows, int cols, const std::string& pointer = "");

json encode_channel(const Channel& c);  // kind "choi"
json encode_kraus(const KrausForm& k);
json encode_pauli(const std::array<double, 3>& p);
json encode_constant(const CMatrix& eta, int d_in);
json encode_gamma(const Observable& m);
json encode_observable(const Observable& m);

Channel decode_channel(const json& j);
Observable decode_observable(const json& j);

/// Parses text (throws DecodeError with the parser's line/column message).
json parse(const std::string& text);
json load_file(const std::string& path);

struct VerdictReport {
  std::string command;
  std::string status;
  std::optional<json> witness;  // channel or observable file
  std::vector<double> certificate;
  std::map<std::string, double> residuals;
  sdp::Diagnostics diagnostics;
  bool certified = false;
  bool witness_verified = false;
  double wall_time = 0.0;
  json extra = json::object();  // command-specific fields
};

json to_json(const VerdictReport& r);
VerdictReport report_from_json(const json& j);

}  // namespace qcompat::io
