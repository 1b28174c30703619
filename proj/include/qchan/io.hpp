#pragma once

#include <nlohmann/json.hpp>

#include "qchan/membership.hpp"

namespace qchan::io {

using json = nlohmann::json;

inline const std::string kVersion = "1";

// ---------------------------------------------------------------------------
// Field access with path diagnostics

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) { throw ValidationError(path + ": " + what); }

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing field");
  return *it;
}

inline std::size_t get_count(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) fail(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

inline const json& get_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrices and layouts

inline json to_json(const ComplexMatrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back({m(r, c).real(), m(r, c).imag()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline ComplexMatrix matrix_from_json(const json& j, const std::string& path) {
  const std::size_t rows = detail::get_count(detail::field(j, "rows", path), path + ".rows");
  const std::size_t cols = detail::get_count(detail::field(j, "cols", path), path + ".cols");
  const json& data = detail::get_array(detail::field(j, "data", path), path + ".data");
  if (data.size() != rows * cols)
    detail::fail(path + ".data", "expected " + std::to_string(rows * cols) + " entries, found " + std::to_string(data.size()));
  ComplexMatrix m{Eigen::Index(rows), Eigen::Index(cols)};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string p = path + ".data[" + std::to_string(i) + "]";
    if (!data[i].is_array() || data[i].size() != 2) detail::fail(p, "expected [re, im] pair");
    m(Eigen::Index(i / cols), Eigen::Index(i % cols)) = Complex(detail::get_number(data[i][0], p + "[0]"), detail::get_number(data[i][1], p + "[1]"));
  }
  return m;
}

inline json to_json(const SystemLayout& l) {
  json a = json::array();
  for (const auto& s : l.subsystems()) a.push_back({{"label", s.label}, {"dim", s.dim}, {"role", role_name(s.role)}});
  return a;
}

inline SystemLayout layout_from_json(const json& j, const std::string& path) {
  std::vector<Subsystem> subs;
  const json& a = detail::get_array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    subs.push_back({detail::get_string(detail::field(a[i], "label", p), p + ".label"),
                    detail::get_count(detail::field(a[i], "dim", p), p + ".dim"),
                    role_from_name(detail::get_string(detail::field(a[i], "role", p), p + ".role"))});
  }
  return SystemLayout(subs);
}

inline std::vector<std::size_t> counts_from_json(const json& j, const std::string& path) {
  std::vector<std::size_t> out;
  const json& a = detail::get_array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(detail::get_count(a[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<ComplexMatrix> matrices_from_json(const json& j, const std::string& path) {
  std::vector<ComplexMatrix> out;
  const json& a = detail::get_array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(matrix_from_json(a[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline json matrices_to_json(const std::vector<ComplexMatrix>& ms) {
  json a = json::array();
  for (const auto& m : ms) a.push_back(to_json(m));
  return a;
}

// ---------------------------------------------------------------------------
// Payloads

inline json to_json(const Channel& ch) {
  return {{"inputs", to_json(ch.layout_in())}, {"outputs", to_json(ch.layout_out())}, {"choi", to_json(ch.choi())}};
}

inline Channel channel_from_json(const json& j, const std::string& path = "payload") {
  return Channel(layout_from_json(detail::field(j, "inputs", path), path + ".inputs"),
                 layout_from_json(detail::field(j, "outputs", path), path + ".outputs"),
                 matrix_from_json(detail::field(j, "choi", path), path + ".choi"));
}

inline json to_json(const CircuitChannel& c) {
  json gates = json::array();
  for (const auto& g : c.gates) gates.push_back({{"unitary", to_json(g.unitary)}, {"acts_on", g.acts_on}});
  json keep = json::array();
  for (const auto& k : c.keep) keep.push_back({{"label", k.label}, {"role", role_name(k.role)}, {"registers", k.registers}});
  return {{"registers", to_json(c.registers)}, {"ancilla_prep", to_json(c.ancilla_prep)}, {"gates", gates}, {"discard", c.discard},
          {"keep", keep}};
}

inline std::vector<std::string> strings_from_json(const json& j, const std::string& path) {
  std::vector<std::string> out;
  const json& a = detail::get_array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(detail::get_string(a[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline CircuitChannel circuit_from_json(const json& j, const std::string& path = "payload") {
  CircuitChannel c;
  c.registers = layout_from_json(detail::field(j, "registers", path), path + ".registers");
  c.ancilla_prep = matrix_from_json(detail::field(j, "ancilla_prep", path), path + ".ancilla_prep");
  const json& gates = detail::get_array(detail::field(j, "gates", path), path + ".gates");
  for (std::size_t i = 0; i < gates.size(); ++i) {
    const std::string p = path + ".gates[" + std::to_string(i) + "]";
    c.gates.push_back({matrix_from_json(detail::field(gates[i], "unitary", p), p + ".unitary"),
                       strings_from_json(detail::field(gates[i], "acts_on", p), p + ".acts_on")});
  }
  c.discard = strings_from_json(detail::field(j, "discard", path), path + ".discard");
  const json& keep = detail::get_array(detail::field(j, "keep", path), path + ".keep");
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const std::string p = path + ".keep[" + std::to_string(i) + "]";
    c.keep.push_back({detail::get_string(detail::field(keep[i], "label", p), p + ".label"),
                      role_from_name(detail::get_string(detail::field(keep[i], "role", p), p + ".role")),
                      strings_from_json(detail::field(keep[i], "registers", p), p + ".registers")});
  }
  c.validate();
  return c;
}

// Table entries in (x, a) order, x-major.
inline json to_json(const Correlation& c) {
  return {{"n_parties", c.n_parties}, {"m", c.m}, {"d", c.d}, {"table", c.table}};
}

inline Correlation correlation_from_json(const json& j, const std::string& path = "payload") {
  Correlation c(detail::get_count(detail::field(j, "n_parties", path), path + ".n_parties"),
                detail::get_count(detail::field(j, "m", path), path + ".m"), detail::get_count(detail::field(j, "d", path), path + ".d"));
  const json& t = detail::get_array(detail::field(j, "table", path), path + ".table");
  if (t.size() != c.table.size())
    detail::fail(path + ".table", "expected " + std::to_string(c.table.size()) + " entries, found " + std::to_string(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) c.table[i] = detail::get_number(t[i], path + ".table[" + std::to_string(i) + "]");
  c.validate();
  return c;
}

inline json to_json(const Assemblage& as) {
  return {{"n_untrusted", as.n_untrusted}, {"m", as.m}, {"d", as.d}, {"d_B", as.d_B}, {"elements", matrices_to_json(as.elements)}};
}

inline Assemblage assemblage_from_json(const json& j, const std::string& path = "payload") {
  Assemblage as(detail::get_count(detail::field(j, "n_untrusted", path), path + ".n_untrusted"),
                detail::get_count(detail::field(j, "m", path), path + ".m"), detail::get_count(detail::field(j, "d", path), path + ".d"),
                detail::get_count(detail::field(j, "d_B", path), path + ".d_B"));
  auto el = matrices_from_json(detail::field(j, "elements", path), path + ".elements");
  if (el.size() != as.elements.size())
    detail::fail(path + ".elements", "expected " + std::to_string(as.elements.size()) + " elements, found " + std::to_string(el.size()));
  as.elements = std::move(el);
  as.validate();
  return as;
}

inline json to_json(const DistributedMeasurement& dm) {
  return {{"input_dims", dm.input_dims}, {"d", dm.d}, {"elements", matrices_to_json(dm.elements)}};
}

inline DistributedMeasurement measurement_from_json(const json& j, const std::string& path = "payload") {
  DistributedMeasurement dm;
  dm.input_dims = counts_from_json(detail::field(j, "input_dims", path), path + ".input_dims");
  dm.d = detail::get_count(detail::field(j, "d", path), path + ".d");
  dm.elements = matrices_from_json(detail::field(j, "elements", path), path + ".elements");
  dm.validate();
  return dm;
}

inline json to_json(const Teleportage& t) {
  return {{"input_dims", t.input_dims}, {"d", t.d}, {"d_B", t.d_B}, {"elements", matrices_to_json(t.elements)}};
}

inline Teleportage teleportage_from_json(const json& j, const std::string& path = "payload") {
  Teleportage t;
  t.input_dims = counts_from_json(detail::field(j, "input_dims", path), path + ".input_dims");
  t.d = detail::get_count(detail::field(j, "d", path), path + ".d");
  t.d_B = detail::get_count(detail::field(j, "d_B", path), path + ".d_B");
  t.elements = matrices_from_json(detail::field(j, "elements", path), path + ".elements");
  t.validate();
  return t;
}

inline json to_json(const FeasibilityReport& r) {
  json j = {{"status", verdict_name(r.status)},
            {"residual", r.residual},
            {"iterations", r.iterations},
            {"tol", r.tol},
            {"method", r.method},
            {"reconstruction_error", r.reconstruction_error}};
  if (!r.weights.empty()) j["weights"] = r.weights;
  if (!r.states.empty()) j["states"] = matrices_to_json(r.states);
  if (r.moment) j["moment_matrix"] = to_json(*r.moment);
  return j;
}

// ---------------------------------------------------------------------------
// Documents

inline json document(const std::string& kind, json payload) {
  return {{"kind", kind}, {"version", kVersion}, {"payload", std::move(payload)}};
}

// Keys are sorted by the json object type, so dump() is canonical.
inline std::string serialize(const json& doc) { return doc.dump(2) + "\n"; }

struct Document {
  std::string kind;
  json payload;
};

inline Document parse_document(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("document: malformed JSON: ") + e.what());
  }
  const std::string kind = detail::get_string(detail::field(j, "kind", "document"), "document.kind");
  static const std::vector<std::string> kinds{"channel", "circuit", "correlation", "assemblage", "distributed-measurement",
                                              "teleportage", "report"};
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) detail::fail("document.kind", "unknown kind '" + kind + "'");
  const std::string version = detail::get_string(detail::field(j, "version", "document"), "document.version");
  if (version != kVersion) detail::fail("document.version", "unsupported version '" + version + "'");
  return {kind, detail::field(j, "payload", "document")};
}

// Any document that denotes a channel: a channel or a circuit compiled to one.
inline Channel channel_from_document(const Document& doc) {
  if (doc.kind == "channel") return channel_from_json(doc.payload);
  if (doc.kind == "circuit") return compile_circuit(circuit_from_json(doc.payload));
  throw ValidationError("document.kind: expected channel or circuit, found '" + doc.kind + "'");
}

// Canonical form of a document: parse into the typed object and serialize.
inline std::string canonical(const std::string& text) {
  const Document doc = parse_document(text);
  if (doc.kind == "channel") return serialize(document(doc.kind, to_json(channel_from_json(doc.payload))));
  if (doc.kind == "circuit") return serialize(document(doc.kind, to_json(circuit_from_json(doc.payload))));
  if (doc.kind == "correlation") return serialize(document(doc.kind, to_json(correlation_from_json(doc.payload))));
  if (doc.kind == "assemblage") return serialize(document(doc.kind, to_json(assemblage_from_json(doc.payload))));
  if (doc.kind == "distributed-measurement") return serialize(document(doc.kind, to_json(measurement_from_json(doc.payload))));
  if (doc.kind == "teleportage") return serialize(document(doc.kind, to_json(teleportage_from_json(doc.payload))));
  return serialize(document(doc.kind, doc.payload));
}

}  // namespace qchan::io
