#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sonc/bound.hpp"
#include "sonc/circuit.hpp"
#include "sonc/error.hpp"
#include "sonc/instances.hpp"
#include "sonc/io.hpp"
#include "sonc/polynomial.hpp"

namespace sonc::cli {

enum ExitCode { kOk = 0, kNoBound = 1, kUsage = 2, kNumerical = 3 };

enum class LogLevel { Quiet, Info, Debug };

struct RunConfig {
  std::string command;
  std::string input, cert, report, out, outDir;
  double gapTol = 1e-8;
  double violationTol = 1e-8;
  std::size_t maxRounds = 60;
  std::optional<double> phase1Shift;
  bool skipPhase1 = false;
  double verifyTol = kPolishTolerance;
  // gen / bench
  std::size_t n = 2, terms = 2, count = 1, replicates = 10, threads = 0;
  int d = 4;
  std::uint64_t seed = 0;
  // localmin
  std::size_t starts = 50;
  double box = 2.0;
  std::string inner;
  std::string logLevel = "info";
};

namespace detail {

inline LogLevel parseLevel(const std::string& s) {
  if (s == "quiet") return LogLevel::Quiet;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw Error(ErrorKind::InvalidArgument, "log level must be quiet, info or debug, got " + s);
}

inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline int exitFor(ErrorKind k) {
  switch (k) {
    case ErrorKind::LpNumericalFailure:
    case ErrorKind::MaxPivotsExceeded:
    case ErrorKind::StartNotFeasible:
    case ErrorKind::IterationLimit:
    case ErrorKind::NumericalFailure:
    case ErrorKind::NotConverged:
    case ErrorKind::PolishFailed:
      return kNumerical;
    default:
      return kUsage;
  }
}

inline SoncConfig soncConfig(const RunConfig& rc, LogLevel level, std::ostream& err) {
  SoncConfig cfg;
  cfg.gapTol = rc.gapTol;
  cfg.violationTol = rc.violationTol;
  cfg.maxRounds = rc.maxRounds;
  cfg.phase1Shift = rc.phase1Shift;
  cfg.skipPhase1 = rc.skipPhase1;
  if (level == LogLevel::Debug) cfg.ipm.log = &err;
  return cfg;
}

inline void requireFile(const std::string& path, const char* what) {
  if (path.empty()) throw Error(ErrorKind::InvalidArgument, std::string("--") + what + " is required");
  if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::IoError, std::string(what) + " not found: " + path);
}

inline void requireWritableDir(const std::string& path) {
  if (path.empty()) return;
  auto dir = std::filesystem::path(path).parent_path();
  if (!dir.empty() && !std::filesystem::is_directory(dir))
    throw Error(ErrorKind::IoError, "output directory does not exist: " + dir.string());
}

inline void emit(const RunConfig& rc, std::ostream& out, const std::string& text) {
  if (rc.out.empty())
    out << text;
  else
    writeFileAtomic(rc.out, text);
}

inline int cmdBound(const RunConfig& rc, LogLevel level, std::ostream& out, std::ostream& err) {
  requireFile(rc.input, "input");
  requireWritableDir(rc.cert);
  requireWritableDir(rc.report);
  const SparsePolynomial p = polynomialFromJson(readFile(rc.input));
  const SoncBoundResult r = soncBound(p, soncConfig(rc, level, err));
  if (level != LogLevel::Quiet) {
    for (std::size_t i = 0; i < r.report.rounds.size(); ++i) {
      const auto& rr = r.report.rounds[i];
      err << "round " << i + 1 << ' ' << to_string(rr.phase) << " circuits=" << rr.circuits << " value=" << rr.bound
          << " millis=" << rr.millis << '\n';
    }
  }
  if (!rc.report.empty()) writeFileAtomic(rc.report, reportToCsv(r.report));
  if (r.status == SoncStatus::NoSoncBound) {
    out << "status NoSoncBound\n";
    out << "reason " << r.evidence->reason << '\n';
    if (r.evidence->exponent) out << "exponent " << r.evidence->exponent->str() << '\n';
    return kNoBound;
  }
  if (!rc.cert.empty()) writeFileAtomic(rc.cert, certificateToJson(r.certificate));
  out << "status " << to_string(r.status) << '\n';
  out << "bound " << num(r.bound) << '\n';
  out << "rounds " << r.report.phase2Iterations << '\n';
  out << "circuits " << r.circuits.size() << '\n';
  return kOk;
}

inline int cmdVerify(const RunConfig& rc, std::ostream& out) {
  requireFile(rc.input, "input");
  requireFile(rc.cert, "cert");
  const SparsePolynomial p = polynomialFromJson(readFile(rc.input));
  const SoncCertificate cert = certificateFromJson(readFile(rc.cert));
  const VerifyReport rep = verifyCertificate(p, cert, rc.verifyTol * p.scale());
  out << (rep.valid ? "valid" : "invalid") << '\n';
  out << "residual " << num(rep.residual) << '\n';
  if (rep.valid) {
    out << "bound " << num(cert.bound()) << '\n';
    return kOk;
  }
  out << "reason " << rep.reason << '\n';
  for (const auto& d : rep.details) out << "detail " << d << '\n';
  return kNoBound;
}

inline GeneratorSpec genSpec(const RunConfig& rc, std::uint64_t seed) {
  GeneratorSpec g;
  g.n = rc.n;
  g.d = rc.d;
  g.termCount = rc.terms;
  g.seed = seed;
  return g;
}

inline int cmdGen(const RunConfig& rc, std::ostream& out) {
  if (rc.count <= 1 && rc.outDir.empty()) {
    requireWritableDir(rc.out);
    emit(rc, out, polynomialToJson(generate(genSpec(rc, rc.seed))));
    return kOk;
  }
  if (rc.outDir.empty()) throw Error(ErrorKind::InvalidArgument, "--out-dir is required with --count > 1");
  std::filesystem::create_directories(rc.outDir);
  std::ostringstream manifest;
  manifest << "file,seed,n,d,terms\n";
  for (std::size_t k = 0; k < rc.count; ++k) {
    const std::uint64_t seed = rc.seed + k;
    const std::string name = "instance_" + std::to_string(seed) + ".json";
    writeFileAtomic(std::filesystem::path(rc.outDir) / name, polynomialToJson(generate(genSpec(rc, seed))));
    manifest << name << ',' << seed << ',' << rc.n << ',' << rc.d << ',' << rc.terms << '\n';
  }
  writeFileAtomic(std::filesystem::path(rc.outDir) / "manifest.csv", manifest.str());
  out << "wrote " << rc.count << " instances to " << rc.outDir << '\n';
  return kOk;
}

inline Exponent parseExponent(const std::string& s) {
  std::vector<std::int64_t> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stoll(tok));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad exponent entry '" + tok + "'");
    }
  }
  return Exponent::fromWide(v);
}

inline int cmdEnumerate(const RunConfig& rc, std::ostream& out) {
  requireFile(rc.input, "input");
  const SparsePolynomial p = polynomialFromJson(readFile(rc.input));
  std::optional<Exponent> inner;
  if (!rc.inner.empty()) {
    inner = parseExponent(rc.inner);
    if (inner->dim() != p.dim()) throw Error(ErrorKind::DimensionMismatch, "--inner has the wrong length");
  }
  const auto circuits = enumerateCircuits(p, inner);
  std::ostringstream os;
  for (const auto& c : circuits) {
    for (std::size_t i = 0; i < c.size(); ++i) os << (i ? " " : "") << c.outer[i].str();
    os << " ; " << c.inner.str() << " ; lambda";
    for (double l : c.lambda) os << ' ' << num(l);
    os << '\n';
  }
  os << "count " << circuits.size() << '\n';
  emit(rc, out, os.str());
  return kOk;
}

inline int cmdOracle(const RunConfig& rc, std::ostream& out) {
  requireFile(rc.input, "input");
  const SparsePolynomial p = polynomialFromJson(readFile(rc.input));
  IpmOptions opt;
  opt.gapTol = rc.gapTol;
  const auto b = oracleBound(p, opt);
  if (!b) {
    out << "status NoSoncBound\n";
    return kNoBound;
  }
  out << "bound " << num(*b) << '\n';
  return kOk;
}

inline int cmdLocalMin(const RunConfig& rc, std::ostream& out) {
  requireFile(rc.input, "input");
  const SparsePolynomial p = polynomialFromJson(readFile(rc.input));
  LocalMinOptions opt;
  opt.starts = rc.starts;
  opt.seed = rc.seed;
  opt.box = rc.box;
  const auto r = localUpperBound(p, opt);
  if (!r.found) {
    out << "status Diverged\n";
    return kNoBound;
  }
  out << "value " << num(r.value) << '\n';
  out << "argmin";
  for (double v : r.argmin) out << ' ' << num(v);
  out << "\ndiverged " << r.diverged << '\n';
  return kOk;
}

struct BenchRow {
  std::string status;
  double bound = 0.0;
  std::optional<double> oracleGap;
  std::size_t rounds = 0, circuits = 0;
  double millis = 0.0;
};

inline BenchRow benchOne(const RunConfig& rc, std::uint64_t seed) {
  BenchRow row;
  const SparsePolynomial p = generate(genSpec(rc, seed));
  const auto t0 = std::chrono::steady_clock::now();
  try {
    SoncConfig cfg;
    cfg.gapTol = rc.gapTol;
    cfg.violationTol = rc.violationTol;
    cfg.maxRounds = rc.maxRounds;
    cfg.phase1Shift = rc.phase1Shift;
    cfg.skipPhase1 = rc.skipPhase1;
    const auto r = soncBound(p, cfg);
    row.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    row.status = to_string(r.status);
    row.bound = r.bound;
    row.rounds = r.report.phase2Iterations;
    row.circuits = r.circuits.size();
    if (r.status != SoncStatus::NoSoncBound && p.size() <= kOracleMaxSupport) {
      if (auto o = oracleBound(p)) row.oracleGap = *o - r.bound;
    }
  } catch (const Error& e) {
    row.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    row.status = to_string(e.kind());
  }
  return row;
}

inline int cmdBench(const RunConfig& rc, std::ostream& out) {
  requireWritableDir(rc.out);
  generate(genSpec(rc, rc.seed));  // surfaces generator errors before any work
  std::vector<BenchRow> rows(rc.replicates);
  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(rc.replicates, rc.threads ? rc.threads : std::thread::hardware_concurrency()));
  auto work = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) rows[k] = benchOne(rc, rc.seed + k);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  std::ostringstream os;
  os << "seed,status,bound,oracle_gap,rounds,circuits,millis\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    os << rc.seed + k << ',' << r.status << ',' << num(r.bound) << ',' << (r.oracleGap ? num(*r.oracleGap) : "") << ','
       << r.rounds << ',' << r.circuits << ',' << std::fixed << std::setprecision(3) << r.millis
       << std::defaultfloat << '\n';
  }
  emit(rc, out, os.str());
  return kOk;
}

}  // namespace detail

/// Parses argv, runs the subcommand and maps failures to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"SONC lower bounds by circuit generation", "sonc"};
  app.require_subcommand(1);
  app.add_option("--log", rc.logLevel, "quiet, info or debug (SONC_LOG overrides)");

  auto solverOptions = [&rc](CLI::App* s) {
    s->add_option("--gap-tol", rc.gapTol, "barrier gap tolerance")->check(CLI::PositiveNumber);
    s->add_option("--viol-tol", rc.violationTol, "pricing violation tolerance")->check(CLI::PositiveNumber);
    s->add_option("--max-rounds", rc.maxRounds, "circuit generation round cap")->check(CLI::PositiveNumber);
    s->add_option("--phase1-shift", rc.phase1Shift, "shift c for the existence problem")->check(CLI::PositiveNumber);
    s->add_flag("--skip-phase1", rc.skipPhase1, "start Phase2 from the initial circuits");
  };
  auto genOptions = [&rc](CLI::App* s) {
    s->add_option("--n", rc.n, "number of variables")->required()->check(CLI::PositiveNumber);
    s->add_option("--d", rc.d, "even degree")->required()->check(CLI::PositiveNumber);
    s->add_option("--terms", rc.terms, "interior terms")->required();
    s->add_option("--seed", rc.seed, "generator seed");
  };

  auto* bound = app.add_subcommand("bound", "certified SONC lower bound");
  bound->add_option("--input", rc.input, "polynomial JSON")->required();
  bound->add_option("--cert", rc.cert, "certificate JSON output");
  bound->add_option("--report", rc.report, "per-round CSV output");
  solverOptions(bound);

  auto* verify = app.add_subcommand("verify", "check a certificate against a polynomial");
  verify->add_option("--input", rc.input, "polynomial JSON")->required();
  verify->add_option("--cert", rc.cert, "certificate JSON")->required();
  verify->add_option("--tol", rc.verifyTol, "relative tolerance")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "random simplex-supported instances");
  genOptions(gen);
  gen->add_option("--count", rc.count, "instances (seeds seed..seed+count-1)")->check(CLI::PositiveNumber);
  gen->add_option("--out", rc.out, "output file (single instance)");
  gen->add_option("--out-dir", rc.outDir, "output directory (batch)");

  auto* enumerate = app.add_subcommand("enumerate", "all circuits on the support");
  enumerate->add_option("--input", rc.input, "polynomial JSON")->required();
  enumerate->add_option("--inner", rc.inner, "restrict to this inner exponent, e.g. 1,1");
  enumerate->add_option("--out", rc.out, "output file");

  auto* oracle = app.add_subcommand("oracle-bound", "bound from all circuits at once");
  oracle->add_option("--input", rc.input, "polynomial JSON")->required();
  oracle->add_option("--gap-tol", rc.gapTol, "barrier gap tolerance")->check(CLI::PositiveNumber);

  auto* localmin = app.add_subcommand("localmin", "multi-start local minimum (upper bound)");
  localmin->add_option("--input", rc.input, "polynomial JSON")->required();
  localmin->add_option("--starts", rc.starts, "number of starts")->check(CLI::PositiveNumber);
  localmin->add_option("--seed", rc.seed, "start seed");
  localmin->add_option("--box", rc.box, "start box half-width")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "solve generated instances, one CSV row each");
  genOptions(bench);
  solverOptions(bench);
  bench->add_option("--replicates", rc.replicates, "instances (seeds seed..)")->check(CLI::PositiveNumber);
  bench->add_option("--threads", rc.threads, "worker threads (default: cores)");
  bench->add_option("--out", rc.out, "CSV output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (const char* env = std::getenv("SONC_LOG"); env && *env) rc.logLevel = env;
    const LogLevel level = detail::parseLevel(rc.logLevel);
    if (bound->parsed()) return detail::cmdBound(rc, level, out, err);
    if (verify->parsed()) return detail::cmdVerify(rc, out);
    if (gen->parsed()) return detail::cmdGen(rc, out);
    if (enumerate->parsed()) return detail::cmdEnumerate(rc, out);
    if (oracle->parsed()) return detail::cmdOracle(rc, out);
    if (localmin->parsed()) return detail::cmdLocalMin(rc, out);
    if (bench->parsed()) return detail::cmdBench(rc, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return detail::exitFor(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace sonc::cli
