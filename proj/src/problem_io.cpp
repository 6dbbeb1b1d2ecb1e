#include "dualqp/problem_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dualqp/error.hpp"
#include "json.hpp"

namespace dualqp {

namespace {

using nlohmann::json;

double parse_number(const json& v, const char* field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity") {
      return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  }
  throw DimensionError(std::string("field ") + field + ": expected a number or inf token");
}

Vector parse_array(const json& doc, const char* field, std::size_t expected) {
  if (!doc.contains(field)) throw DimensionError(std::string("missing field ") + field);
  const json& a = doc.at(field);
  if (!a.is_array()) throw DimensionError(std::string("field ") + field + " must be an array");
  if (a.size() != expected) {
    throw DimensionError(std::string("field ") + field + ": expected " +
                         std::to_string(expected) + " entries, got " +
                         std::to_string(a.size()));
  }
  Vector out;
  out.reserve(a.size());
  for (const auto& v : a) out.push_back(parse_number(v, field));
  return out;
}

json number_or_token(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json to_array(const Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_or_token(x));
  return a;
}

std::size_t parse_count(const json& doc, const char* field) {
  if (!doc.contains(field)) throw DimensionError(std::string("missing field ") + field);
  const json& v = doc.at(field);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw DimensionError(std::string("field ") + field + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

RawProblem parse_problem_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DimensionError(std::string("problem JSON: ") + e.what());
  }
  RawProblem raw;
  raw.n = parse_count(doc, "n");
  const std::size_t p = doc.contains("p_raw") ? parse_count(doc, "p_raw") : 0;
  raw.Q = parse_array(doc, "Q", raw.n * raw.n);
  raw.q = parse_array(doc, "q", raw.n);
  raw.G_raw = p > 0 || doc.contains("G_raw") ? parse_array(doc, "G_raw", p * raw.n) : Vector{};
  raw.g_raw = p > 0 || doc.contains("g_raw") ? parse_array(doc, "g_raw", p) : Vector{};
  raw.lbA = p > 0 || doc.contains("lbA") ? parse_array(doc, "lbA", p) : Vector{};
  raw.ubA = p > 0 || doc.contains("ubA") ? parse_array(doc, "ubA", p) : Vector{};
  raw.lb = parse_array(doc, "lb", raw.n);
  raw.ub = parse_array(doc, "ub", raw.n);
  return raw;
}

RawProblem read_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open problem file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem_json(ss.str());
}

std::string problem_to_json(const RawProblem& raw) {
  json doc;
  doc["n"] = raw.n;
  doc["p_raw"] = raw.p_raw();
  doc["Q"] = to_array(raw.Q);
  doc["q"] = to_array(raw.q);
  doc["G_raw"] = to_array(raw.G_raw);
  doc["g_raw"] = to_array(raw.g_raw);
  doc["lbA"] = to_array(raw.lbA);
  doc["ubA"] = to_array(raw.ubA);
  doc["lb"] = to_array(raw.lb);
  doc["ub"] = to_array(raw.ub);
  return doc.dump() + "\n";
}

void write_problem_file(const std::string& path, const RawProblem& raw) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write problem file " + path);
  out << problem_to_json(raw);
}

RawProblem to_raw(const QpProblem& prob) {
  RawProblem raw;
  raw.n = prob.n();
  raw.Q.assign(prob.Q().entries().begin(), prob.Q().entries().end());
  raw.q = prob.q();
  raw.G_raw.assign(prob.G().entries().begin(), prob.G().entries().end());
  raw.g_raw = prob.g();
  for (auto c : prob.cones()) {
    raw.lbA.push_back(c == ConeKind::kZero ? 0.0 : -std::numeric_limits<double>::infinity());
    raw.ubA.push_back(0.0);
  }
  raw.lb = prob.box().lb;
  raw.ub = prob.box().ub;
  return raw;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << kTraceHeader << '\n';
  for (const auto& r : trace) {
    os << r.k << ',' << format_double(r.dual_val) << ',' << format_double(r.f_last) << ','
       << format_double(r.f_avg) << ',' << format_double(r.infeas_last) << ','
       << format_double(r.infeas_avg) << ',' << r.inner_iters << ',' << r.cum_matvecs
       << '\n';
  }
}

}  // namespace dualqp
