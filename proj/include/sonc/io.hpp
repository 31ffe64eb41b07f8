#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sonc/bound.hpp"
#include "sonc/circuit.hpp"
#include "sonc/error.hpp"
#include "sonc/polynomial.hpp"

namespace sonc {

namespace detail {

using json = nlohmann::ordered_json;

inline std::vector<std::int64_t> readExponent(const json& j, std::size_t n, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::ParseError, where + ": exponent must be an array");
  std::vector<std::int64_t> e;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw Error(ErrorKind::ParseError, where + ": exponent entries must be integers");
    e.push_back(v.get<std::int64_t>());
  }
  if (n != 0 && e.size() != n)
    throw Error(ErrorKind::DimensionMismatch, where + ": exponent of length " + std::to_string(e.size()) + ", expected " +
                                                  std::to_string(n));
  return e;
}

inline double readNumber(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorKind::ParseError, where + ": expected a number");
  return j.get<double>();
}

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::ParseError, where + ": missing \"" + key + "\"");
  return j.at(key);
}

inline json parseText(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, where + ": " + e.what());
  }
}

inline json exponentJson(const Exponent& e) { return json(e.entries()); }

}  // namespace detail

inline SparsePolynomial polynomialFromJson(const std::string& text) {
  const auto j = detail::parseText(text, "polynomial");
  const auto& nj = detail::field(j, "n", "polynomial");
  if (!nj.is_number_integer() || nj.get<std::int64_t>() <= 0)
    throw Error(ErrorKind::ParseError, "polynomial: \"n\" must be a positive integer");
  const auto n = static_cast<std::size_t>(nj.get<std::int64_t>());
  const auto& terms = detail::field(j, "terms", "polynomial");
  if (!terms.is_array()) throw Error(ErrorKind::ParseError, "polynomial: \"terms\" must be an array");
  std::vector<RawTerm> raw;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string where = "term " + std::to_string(i);
    raw.push_back({detail::readExponent(detail::field(terms[i], "exp", where), n, where),
                   detail::readNumber(detail::field(terms[i], "coef", where), where)});
  }
  return SparsePolynomial::normalize(n, raw);
}

/// Terms in support order; the origin is written only when nonzero.
inline std::string polynomialToJson(const SparsePolynomial& p) {
  detail::json terms = detail::json::array();
  for (const auto& t : p.terms()) {
    if (t.exp.isZero() && t.coef == 0.0) continue;
    terms.push_back({{"exp", detail::exponentJson(t.exp)}, {"coef", t.coef}});
  }
  detail::json j = {{"n", p.dim()}, {"terms", terms}};
  return j.dump(2) + "\n";
}

inline std::string certificateToJson(const SoncCertificate& cert) {
  detail::json circuits = detail::json::array();
  for (const auto& t : cert.circuitTerms) {
    detail::json outer = detail::json::array();
    for (const auto& e : t.circuit.outer) outer.push_back(detail::exponentJson(e));
    circuits.push_back({{"outer", outer},
                        {"inner", detail::exponentJson(t.circuit.inner)},
                        {"lambda", t.circuit.lambda},
                        {"coefs", {{"outer", t.coeffs.outer}, {"inner", t.coeffs.inner}}}});
  }
  detail::json squares = detail::json::array();
  for (const auto& s : cert.squareTerms) squares.push_back({{"exp", detail::exponentJson(s.exp)}, {"coef", s.coef}});
  detail::json j = {{"gamma", cert.gamma},
                    {"bound", cert.bound()},
                    {"circuits", circuits},
                    {"squares", squares},
                    {"residual", cert.residual}};
  return j.dump(2) + "\n";
}

/// Lambda in the file is informational; verification recomputes it.
inline SoncCertificate certificateFromJson(const std::string& text) {
  const auto j = detail::parseText(text, "certificate");
  SoncCertificate cert;
  cert.gamma = detail::readNumber(detail::field(j, "gamma", "certificate"), "gamma");
  const auto& circuits = detail::field(j, "circuits", "certificate");
  const auto& squares = detail::field(j, "squares", "certificate");
  if (!circuits.is_array() || !squares.is_array())
    throw Error(ErrorKind::ParseError, "certificate: \"circuits\" and \"squares\" must be arrays");
  for (std::size_t i = 0; i < circuits.size(); ++i) {
    const std::string where = "circuit " + std::to_string(i);
    const auto& c = circuits[i];
    CircuitTerm term;
    const auto& inner = detail::readExponent(detail::field(c, "inner", where), 0, where);
    term.circuit.inner = Exponent::fromWide(inner);
    const auto& outer = detail::field(c, "outer", where);
    if (!outer.is_array()) throw Error(ErrorKind::ParseError, where + ": \"outer\" must be an array");
    for (const auto& e : outer) term.circuit.outer.push_back(Exponent::fromWide(detail::readExponent(e, inner.size(), where)));
    if (c.contains("lambda") && c.at("lambda").is_array()) {
      for (const auto& v : c.at("lambda")) term.circuit.lambda.push_back(detail::readNumber(v, where));
    }
    const auto& coefs = detail::field(c, "coefs", where);
    for (const auto& v : detail::field(coefs, "outer", where)) term.coeffs.outer.push_back(detail::readNumber(v, where));
    term.coeffs.inner = detail::readNumber(detail::field(coefs, "inner", where), where);
    cert.circuitTerms.push_back(std::move(term));
  }
  for (std::size_t i = 0; i < squares.size(); ++i) {
    const std::string where = "square " + std::to_string(i);
    cert.squareTerms.push_back({Exponent::fromWide(detail::readExponent(detail::field(squares[i], "exp", where), 0, where)),
                                detail::readNumber(detail::field(squares[i], "coef", where), where)});
  }
  if (j.contains("residual") && j.at("residual").is_number()) cert.residual = j.at("residual").get<double>();
  return cert;
}

/// One row per round: round, phase, nCircuits, bound, gap, millis.
inline std::string reportToCsv(const CgReport& report) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "round,phase,nCircuits,bound,gap,millis\n";
  for (std::size_t i = 0; i < report.rounds.size(); ++i) {
    const auto& r = report.rounds[i];
    os << i + 1 << ',' << to_string(r.phase) << ',' << r.circuits << ',' << r.bound << ',' << r.gap << ',' << r.millis
       << '\n';
  }
  return os.str();
}

inline std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Writes to a sibling temporary file, then renames over the target.
inline void writeFileAtomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

}  // namespace sonc
