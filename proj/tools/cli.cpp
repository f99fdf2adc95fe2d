#include "cli.hpp"

#include "spgadmm/certificates.hpp"
#include "spgadmm/error.hpp"
#include "spgadmm/problem.hpp"
#include "spgadmm/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace spgadmm::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Bad flags, unreadable files and similar; always exit 2.
struct UsageError : Error {
  using Error::Error;
};

std::shared_ptr<spdlog::logger> make_logger() {
  auto log = std::make_shared<spdlog::logger>("spgadmm", std::make_shared<spdlog::sinks::stderr_sink_st>());
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("SPGADMM_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") {
    log->set_level(spdlog::level::debug);
  } else if (level == "info") {
    log->set_level(spdlog::level::info);
  } else {
    log->set_level(spdlog::level::err);
    if (level != "error") log->warn("unknown SPGADMM_LOG value '{}', using error", level);
  }
  return log;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Dims parse_dims(const std::string& text, const std::string& flag) {
  Dims dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    long long v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size())
      throw UsageError(flag + ": '" + item + "' is not an integer");
    if (v <= 0) throw UsageError(flag + ": block dimensions must be positive, got " + item);
    dims.push_back(static_cast<Index>(v));
  }
  if (dims.empty()) throw UsageError(flag + ": expected a comma-separated list of block dimensions");
  return dims;
}

json dims_json(const Dims& d) { return json(std::vector<Index>(d.begin(), d.end())); }

// NaN becomes null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_manifest(const std::string& path, const json& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  out << manifest.dump(2) << '\n';
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

struct GenArgs {
  std::uint64_t seed = 0;
  std::string family;
  std::string ydims, zdims = "50,50,50";
  long long xdim = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a, spdlog::logger& log) {
  const auto t0 = Clock::now();
  const Dims yd = parse_dims(a.ydims, "--ydims");
  const Dims zd = parse_dims(a.zdims, "--zdims");
  if (a.xdim <= 0) throw UsageError("--xdim: dimension must be positive, got " + std::to_string(a.xdim));
  const Family family = parse_family(a.family);
  log.info("generating {} instance, seed {}", to_string(family), a.seed);
  const GeneratedProblem gp = generate_with_known_kkt(a.seed, yd, zd, static_cast<Index>(a.xdim), family);
  save_instance(a.out, gp.instance, gp.solution);
  log.info("wrote {}", a.out);
  json m;
  m["command"] = "gen";
  m["seed"] = a.seed;
  m["family"] = to_string(family);
  m["y_dims"] = dims_json(yd);
  m["z_dims"] = dims_json(zd);
  m["x_dim"] = a.xdim;
  m["outputs"] = {{"instance", a.out}, {"manifest", manifest_path(a.out)}};
  m["timings"] = {{"total_seconds", seconds_since(t0)}};
  m["exit_status"] = kOk;
  write_manifest(manifest_path(a.out), m);
  return kOk;
}

struct SolveArgs {
  std::string instance;
  double sigma = 1.0;
  double rho = 1.6;
  double tol = 1e-8;
  int max_iters = 10000;
  std::string strategy = "majorized";
  std::string trace;
  bool certify = false;
};

void write_row(std::ostream& os, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
  os << '\n';
}

json constants_json(const RateConstants& rc) {
  json c = {{"rho", rc.rho}, {"l", rc.l},   {"h", rc.h},   {"m", rc.m},   {"n", rc.n},
            {"o", rc.o},     {"k1", rc.k1}, {"k2", rc.k2}, {"k3", rc.k3}, {"k4", rc.k4}};
  c["k5"] = rc.k5 ? number(*rc.k5) : json(nullptr);
  c["k6"] = rc.k6 ? number(*rc.k6) : json(nullptr);
  c["vartheta"] = rc.vartheta ? number(*rc.vartheta) : json(nullptr);
  return c;
}

int cmd_solve(const SolveArgs& a, spdlog::logger& log) {
  const auto t0 = Clock::now();
  LoadedProblem loaded = load_instance(a.instance);
  const double t_load = seconds_since(t0);
  if (a.certify && !loaded.solution)
    throw UsageError("--certify needs an instance with a known_solution");

  SolverConfig cfg;
  cfg.sigma = a.sigma;
  cfg.rho = a.rho;
  cfg.tol_kkt = a.tol;
  cfg.max_iters = a.max_iters;
  cfg.strategy = parse_strategy(a.strategy);
  if (cfg.strategy == ProxStrategy::explicit_terms)
    throw UsageError("--strategy explicit is only available through the library");
  cfg.validate();

  const auto t1 = Clock::now();
  Spgadmm solver(loaded.instance, cfg);
  const SolveTrace trace = solver.solve();
  const double t_solve = seconds_since(t1);
  log.info("solve finished: {} after {} iterations, ||R|| = {:.3e}", to_string(trace.status),
           trace.iterations(), trace.records.back().kkt_residual);
  if (trace.status == SolveStatus::failed) throw Error("solver failed: " + trace.error);

  std::ofstream out(a.trace, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + a.trace + "' for writing");
  const auto cols = trace_columns(a.certify);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';

  json m;
  int violations = 0;
  double t_cert = 0.0;
  if (a.certify) {
    const auto t2 = Clock::now();
    CertificateEngine engine(loaded.instance, cfg, solver.terms(), *loaded.solution);
    const auto certs = engine.evaluate(trace);
    for (std::size_t k = 0; k < certs.size(); ++k) {
      const CertificateRecord& c = certs[k];
      const IterationRecord& r = trace.records[k];
      if (!c.all_hold()) {
        ++violations;
        log.debug("certificate violation at k = {}", c.k);
      }
      write_row(out, {static_cast<double>(r.k), r.kkt_residual, r.primal_residual, c.phi, c.t,
                      c.lemma1[0].slack, c.lemma1[1].slack, c.lemma1[2].slack, c.lemma2.slack,
                      c.lemma3.slack, c.contraction.slack, c.dist_m_singleton, c.ratio});
    }
    m["constants"] = constants_json(engine.constants());
    m["lambda_max_mbar"] = engine.lambda_max_mbar();
    try {
      const RateReport rep = engine.check_rate(trace);
      m["kappa_emp"] = number(rep.kappa_emp);
      m["implied_vartheta"] = number(rep.implied_vartheta);
      m["degenerate_start"] = rep.degenerate;
    } catch (const InsufficientData& e) {
      log.info("no modulus estimate: {}", e.what());
      m["kappa_emp"] = nullptr;
      m["implied_vartheta"] = nullptr;
    }
    t_cert = seconds_since(t2);
    m["violations"] = violations;
  } else {
    for (const IterationRecord& r : trace.records)
      write_row(out, {static_cast<double>(r.k), r.kkt_residual, r.primal_residual});
  }
  out.close();
  if (!out) throw UsageError("write to '" + a.trace + "' failed");

  int code = trace.status == SolveStatus::converged ? kOk : kMaxIters;
  if (violations > 0) {
    log.error("{} iterations violate a certificate inequality", violations);
    code = kSlackViolation;
  }

  m["command"] = "solve";
  m["instance"] = a.instance;
  m["config"] = {{"sigma", cfg.sigma},         {"rho", cfg.rho},
                 {"tol", cfg.tol_kkt},         {"max_iters", cfg.max_iters},
                 {"strategy", to_string(cfg.strategy)}, {"certify", a.certify}};
  m["outputs"] = {{"trace", a.trace}, {"manifest", manifest_path(a.trace)}};
  m["status"] = to_string(trace.status);
  m["iterations"] = trace.iterations();
  m["final_kkt_residual"] = number(trace.records.back().kkt_residual);
  m["timings"] = {{"load_seconds", t_load},
                  {"solve_seconds", t_solve},
                  {"certify_seconds", t_cert},
                  {"total_seconds", seconds_since(t0)}};
  m["exit_status"] = code;
  write_manifest(manifest_path(a.trace), m);
  return code;
}

std::vector<double> parse_row(const std::string& line, std::size_t ncols, std::size_t lineno) {
  std::vector<double> row;
  row.reserve(ncols);
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = std::min(line.find(',', pos), line.size());
    const std::string_view cell(line.data() + pos, end - pos);
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
      throw ParseError("line " + std::to_string(lineno) + ": bad number '" + std::string(cell) + "'");
    row.push_back(v);
    if (end == line.size()) break;
    pos = end + 1;
  }
  if (row.size() != ncols)
    throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(ncols) +
                     " fields, got " + std::to_string(row.size()));
  return row;
}

int cmd_rate(const std::string& path, spdlog::logger& log) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header) || header.empty()) throw ParseError("empty trace file '" + path + "'");
  const auto cols = trace_columns(true);
  std::string expected;
  for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
  if (header != expected) {
    if (header.rfind("k,kkt_residual,primal_residual", 0) == 0)
      throw ParseError("trace has no certificate columns; rerun solve with --certify");
    throw ParseError("unrecognised trace header");
  }

  std::vector<std::vector<double>> rows;
  std::string line;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    auto row = parse_row(line, cols.size(), lineno);
    if (row[0] != static_cast<double>(rows.size()))
      throw ParseError("line " + std::to_string(lineno) + ": iteration counter out of sequence");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("trace has a header but no rows");
  const std::size_t iterations = rows.size() - 1;
  if (iterations < 20 && rows[0][11] > 0.0)
    throw InsufficientData("insufficient data: rate fit needs at least 20 iterations, trace has " +
                           std::to_string(iterations));

  // d2 is only known up to scale from the ratio column.
  std::vector<double> d2{1.0};
  for (std::size_t k = 0; k + 1 < rows.size() && std::isfinite(rows[k][12]); ++k)
    d2.push_back(d2.back() * rows[k][12]);
  if (d2.size() == 1 && rows.size() > 1) d2.front() = 0.0;
  log.debug("reconstructed {} d2 values from {} rows", d2.size(), rows.size());
  const RateReport rep = fit_rate(d2);

  double kappa = kNaN, vartheta = kNaN;
  std::ifstream min(manifest_path(path), std::ios::binary);
  if (min) {
    try {
      const json m = json::parse(min);
      if (m.contains("kappa_emp") && m["kappa_emp"].is_number()) {
        kappa = m["kappa_emp"].get<double>();
        RateConstants rc = rho_constants(m.at("constants").at("rho").get<double>());
        rc.k4 = m.at("constants").at("k4").get<double>();
        attach_modulus(rc, kappa, m.at("lambda_max_mbar").get<double>());
        vartheta = *rc.vartheta;
      }
    } catch (const std::exception& e) {
      log.info("ignoring manifest '{}': {}", manifest_path(path), e.what());
    }
  } else {
    log.info("no manifest next to the trace; modulus estimate unavailable");
  }

  std::cout << "iterations: " << iterations << '\n';
  if (rep.degenerate) {
    std::cout << "degenerate start: the first iterate is already a solution\n";
    return kOk;
  }
  std::cout << "max_tail_ratio: " << format_double(rep.max_tail_ratio) << '\n'
            << "slope: " << format_double(rep.slope) << '\n'
            << "r_squared: " << format_double(rep.r_squared) << '\n'
            << "kappa_emp: " << format_double(kappa) << '\n'
            << "implied_vartheta: " << format_double(vartheta) << '\n';
  return kOk;
}

}  // namespace

std::vector<std::string> trace_columns(bool certify) {
  std::vector<std::string> cols{"k", "kkt_residual", "primal_residual"};
  if (certify) {
    for (const char* c : {"phi", "t", "lemma1_slack_a", "lemma1_slack_b", "lemma1_slack_c", "lemma2_slack",
                          "lemma3_slack", "contraction_slack", "distM_singleton", "ratio"})
      cols.emplace_back(c);
  }
  return cols;
}

int run(int argc, const char* const* argv) {
  auto log = make_logger();

  CLI::App app{"Semi-proximal generalized ADMM solver"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate an instance with a known KKT point");
  g->add_option("--seed", gen.seed, "RNG seed")->required();
  g->add_option("--family", gen.family, "lasso, box-qp or random-plq")->required();
  g->add_option("--ydims", gen.ydims, "Comma-separated y block sizes")->required();
  g->add_option("--zdims", gen.zdims, "Comma-separated z block sizes")->capture_default_str();
  g->add_option("--xdim", gen.xdim, "Multiplier dimension")->required();
  g->add_option("--out", gen.out, "Output JSON path")->required();

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Run the solver on an instance file");
  s->add_option("--instance", solve.instance, "Instance JSON path")->required();
  s->add_option("--sigma", solve.sigma, "Penalty parameter")->capture_default_str();
  s->add_option("--rho", solve.rho, "Relaxation factor in (0,2)")->capture_default_str();
  s->add_option("--tol", solve.tol, "Stop when the KKT residual drops below this")->capture_default_str();
  s->add_option("--max-iters", solve.max_iters, "Iteration cap")->capture_default_str();
  s->add_option("--strategy", solve.strategy, "zero, majorized or sgs")->capture_default_str();
  s->add_option("--trace", solve.trace, "Trace CSV path")->required();
  s->add_flag("--certify", solve.certify, "Evaluate certificate inequalities (needs known_solution)");

  std::string rate_trace;
  auto* r = app.add_subcommand("rate", "Fit a linear rate to a certified trace");
  r->add_option("--trace", rate_trace, "Certified trace CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, *log);
    if (s->parsed()) return cmd_solve(solve, *log);
    return cmd_rate(rate_trace, *log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"spgadmm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace spgadmm::cli
