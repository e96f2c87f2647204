#pragma once

// JSON path files, generator specs, certificate serialization, CSV tables
// and run manifests with SHA-256 digests.

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "celkit/celcert.hpp"
#include "celkit/determinant.hpp"
#include "celkit/generators.hpp"
#include "celkit/logfactory.hpp"
#include "celkit/spectral.hpp"

namespace celkit {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Digests and files

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorKind::IoError, "SHA-256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << data;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

inline std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Matrices

inline json matrix_to_json(const CMat& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) rows.push_back({a(i, j).real(), a(i, j).imag()});
  return rows;
}

inline CMat matrix_from_json(const json& j, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n * n) {
    throw Error(ErrorKind::SchemaError, "matrix must have n*n [re, im] entries");
  }
  CMat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const json& e = j[static_cast<std::size_t>(i * n + k)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw Error(ErrorKind::SchemaError, "matrix entry must be [re, im]");
      }
      a(i, k) = cplx(e[0].get<double>(), e[1].get<double>());
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Generator specs

struct GenSpec {
  std::string kind;            // uniexam | ex2 | ex2ml | random-detone
  int n = 5;
  int m = 4;
  int k = 0;
  int stages = 0;
  std::uint64_t seed = 0;
  std::size_t grid = 257;
  std::vector<int> d{1};
};

inline json to_json(const GenSpec& g) {
  json j = {{"kind", g.kind}, {"n", g.n}, {"grid", g.grid}};
  if (g.kind == "ex2") {
    j["m"] = g.m;
    j["k"] = g.k;
  } else if (g.kind == "ex2ml") {
    j["d"] = g.d;
    j["k"] = g.k;
    j["stages"] = g.stages;
  } else if (g.kind == "random-detone") {
    j["seed"] = g.seed;
  }
  return j;
}

inline GenSpec genspec_from_json(const json& j) {
  try {
    GenSpec g;
    g.kind = j.at("kind").get<std::string>();
    g.n = j.at("n").get<int>();
    g.grid = j.at("grid").get<std::size_t>();
    if (j.contains("m")) g.m = j["m"].get<int>();
    if (j.contains("k")) g.k = j["k"].get<int>();
    if (j.contains("stages")) g.stages = j["stages"].get<int>();
    if (j.contains("seed")) g.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("d")) g.d = j["d"].get<std::vector<int>>();
    return g;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("generator spec: ") + e.what());
  }
}

struct Generated {
  UnitaryPath path;
  std::optional<ExpFactorization> factorization;
  json info = json::object();  // kind-specific facts (N, theta0, ranks)
};

inline Generated build_generated(const GenSpec& g) {
  if (g.grid < 2) throw Error(ErrorKind::InvalidParams, "grid must have at least 2 points");
  const Grid grid = Grid::uniform(g.grid);
  Generated out;
  if (g.kind == "uniexam") {
    auto ex = gen_uniexam({g.n, grid});
    out.path = ex.u;
    out.factorization = ex.F;
    out.info = {{"theta0", ex.theta0}};
  } else if (g.kind == "ex2") {
    auto ex = gen_ex2({g.n, g.m, g.k, std::nullopt, grid});
    out.path = ex.u;
    out.factorization = ex.F;
    out.info = {{"N", ex.N}, {"theta0", ex.theta0}, {"rank_p1", ex.rank_p1}, {"rank_p2", ex.rank_p2}};
  } else if (g.kind == "ex2ml") {
    std::vector<int> ks(g.d.size(), g.k);
    auto st = gen_ex2ml_stage(g.n, g.d, ks, g.stages, grid);
    if (!st.dense) {
      throw Error(ErrorKind::InvalidParams, "stage dimension " + std::to_string(st.dim) + " too large to write densely");
    }
    out.path = *st.dense;
    out.info = {{"N", st.dim},
                {"rank_p1", st.rank_p1},
                {"rank_p2", st.rank_p2},
                {"rank_defect", st.rank_defect},
                {"frozen_blocks", st.frozen_blocks},
                {"schedule", st.schedule}};
  } else if (g.kind == "random-detone") {
    out.path = gen_random_detone(g.n, g.seed, grid);
  } else {
    throw Error(ErrorKind::InvalidParams, "unknown generator kind '" + g.kind + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Path files

struct PathFile {
  UnitaryPath path;
  std::optional<GenSpec> generator;
  json manifest;
};

inline json path_to_json(const UnitaryPath& p, const std::optional<GenSpec>& gen, const json& manifest) {
  json samples = json::array();
  for (const CMat& s : p.samples()) samples.push_back(matrix_to_json(s));
  json j = {{"format", "celkit-path"},
            {"version", 1},
            {"n", p.n()},
            {"grid", p.grid().points()},
            {"samples", samples},
            {"manifest", manifest}};
  if (gen) j["generator"] = to_json(*gen);
  return j;
}

/// Parses and validates a path file; when generator metadata is present the
/// generator is re-attached (and its samples compared with the stored ones).
inline PathFile path_from_json(const json& j) {
  try {
    if (j.value("format", "") != "celkit-path") throw Error(ErrorKind::SchemaError, "not a celkit-path file");
    const auto n = j.at("n").get<Eigen::Index>();
    if (n < 1) throw Error(ErrorKind::SchemaError, "n must be >= 1");
    const auto pts = j.at("grid").get<std::vector<double>>();
    const json& s = j.at("samples");
    if (!s.is_array() || s.size() != pts.size()) throw Error(ErrorKind::SchemaError, "samples must match grid");
    std::vector<CMat> samples;
    samples.reserve(s.size());
    for (const auto& m : s) samples.push_back(matrix_from_json(m, n));
    PathFile out;
    out.manifest = j.value("manifest", json::object());
    Grid grid(pts);
    if (j.contains("generator")) {
      out.generator = genspec_from_json(j["generator"]);
      Generated g = build_generated(*out.generator);
      if (!(g.path.grid() == grid) || g.path.n() != n) {
        throw Error(ErrorKind::SchemaError, "generator metadata does not match the stored grid");
      }
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (op_norm(samples[i] - g.path[i]) > 1e-9) {
          throw Error(ErrorKind::SchemaError, "stored sample " + std::to_string(i) + " differs from its generator");
        }
      }
      out.path = UnitaryPath::from_parts(grid, std::move(samples), g.path.generator());
    } else {
      out.path = UnitaryPath::from_samples(grid, std::move(samples));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
}

inline PathFile load_path(const std::string& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, file + ": " + e.what());
  }
  return path_from_json(j);
}

// ---------------------------------------------------------------------------
// Reports and certificates

inline json to_json(const DetReport& r) {
  return {{"kind", "det-report"},
          {"value", r.value},
          {"lattice_modulus", r.lattice.modulus()},
          {"residue", r.residue},
          {"lattice_distance", r.lattice.distance(r.value)}};
}

inline json to_json(const TrivCheck& t) {
  return {{"kind", "triv-check"}, {"residual", t.residual}, {"rotation", t.rotation}, {"log_term", t.log_term}};
}

inline json to_json(const LogCertificateReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) v.push_back({{"kind", x.kind}, {"index", x.index}, {"value", x.value}});
  return {{"ok", r.ok},
          {"eps", r.eps},
          {"sup_norm", r.sup_norm},
          {"max_trace", r.max_trace},
          {"approx_error", r.approx_error},
          {"min_spread", r.min_spread},
          {"max_spread", r.max_spread},
          {"certified_length_bound", r.certified_length_bound},
          {"violations", v}};
}

/// Self-contained log certificate: input samples, h samples and the claims.
inline json log_certificate_json(const UnitaryPath& p, const LogPath& lp, const LogCertificateReport& rep) {
  json hs = json::array();
  for (const CMat& h : lp.h.samples()) hs.push_back(matrix_to_json(h));
  json ps = json::array();
  for (const CMat& s : p.samples()) ps.push_back(matrix_to_json(s));
  json traces = json::array();
  for (const CMat& h : lp.h.samples()) traces.push_back(h.trace().real());
  return {{"kind", "log-certificate"},
          {"n", p.n()},
          {"grid", p.grid().points()},
          {"eps", lp.eps},
          {"perturbation_applied", lp.perturbation_applied},
          {"perturbation_norm", lp.perturbation_norm},
          {"k", lp.selection.k},
          {"b", lp.selection.b},
          {"a", lp.selection.a},
          {"traces", traces},
          {"claims", to_json(rep)},
          {"path_samples", ps},
          {"h_samples", hs}};
}

struct LogCertCheck {
  bool ok = true;
  std::vector<std::string> problems;
  LogCertificateReport recomputed;
};

inline LogCertCheck verify_log_certificate_json(const json& j) {
  LogCertCheck out;
  try {
    const auto n = j.at("n").get<Eigen::Index>();
    const Grid grid(j.at("grid").get<std::vector<double>>());
    std::vector<CMat> ps, hs;
    for (const auto& m : j.at("path_samples")) ps.push_back(matrix_from_json(m, n));
    for (const auto& m : j.at("h_samples")) hs.push_back(matrix_from_json(m, n));
    const double eps = j.at("eps").get<double>();
    const auto p = UnitaryPath::from_samples(grid, std::move(ps));
    const auto h = HermitianPath::from_samples(grid, hs, 1e-6);
    out.recomputed = verify_log_certificate(p, h, eps);
    for (const auto& v : out.recomputed.violations) {
      out.problems.push_back(v.kind + " at grid index " + std::to_string(v.index) + " (t=" +
                             std::to_string(grid[v.index]) + "): " + std::to_string(v.value));
    }
    const auto traces = j.at("traces").get<std::vector<double>>();
    if (traces.size() != hs.size()) out.problems.push_back("traces length mismatch");
    for (std::size_t i = 0; i < traces.size() && i < hs.size(); ++i) {
      const double tr = hs[i].trace().real();
      if (std::abs(traces[i] - tr) > 1e-10 || std::abs(traces[i]) > 1e-10) {
        out.problems.push_back("trace at grid index " + std::to_string(i) + " (t=" + std::to_string(grid[i]) +
                               "): recorded " + std::to_string(traces[i]) + ", recomputed " + std::to_string(tr));
      }
    }
    const json& c = j.at("claims");
    if (std::abs(c.at("sup_norm").get<double>() - out.recomputed.sup_norm) > 1e-9) {
      out.problems.push_back("claimed sup_norm does not match");
    }
    if (std::abs(c.at("certified_length_bound").get<double>() - out.recomputed.certified_length_bound) > 1e-8) {
      out.problems.push_back("claimed length bound does not match");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
  out.ok = out.problems.empty();
  return out;
}

inline json to_json(const CelCertificate& c) {
  json st = json::array();
  for (const auto& s : c.stages) {
    st.push_back({{"s", s.s},
                  {"first", s.first},
                  {"last", s.last},
                  {"g_start", s.g_start},
                  {"g_min", s.g_min},
                  {"g_max", s.g_max},
                  {"g_absmax", s.g_absmax},
                  {"gap", s.gap},
                  {"increment", s.increment},
                  {"accumulated", s.accumulated},
                  {"remaining", s.remaining},
                  {"pi_reached", s.pi_reached}});
  }
  return {{"kind", "cel-certificate"},
          {"n", c.n},
          {"grid_size", c.grid_size},
          {"eps", c.eps},
          {"step_d", c.step_d},
          {"lipschitz", c.lipschitz},
          {"ds", c.ds},
          {"substeps", c.substeps},
          {"min_gap", c.min_gap},
          {"anchor", c.anchor},
          {"lower_bound", c.lower_bound},
          {"best_stage", c.best_stage},
          {"terminal_reason", c.terminal_reason},
          {"band_lost", c.band_lost},
          {"stages", st}};
}

inline CelCertificate cel_certificate_from_json(const json& j) {
  try {
    CelCertificate c;
    c.n = j.at("n").get<Eigen::Index>();
    c.grid_size = j.at("grid_size").get<std::size_t>();
    c.eps = j.at("eps").get<double>();
    c.step_d = j.at("step_d").get<double>();
    c.lipschitz = j.at("lipschitz").get<double>();
    c.ds = j.at("ds").get<double>();
    c.substeps = j.at("substeps").get<int>();
    c.min_gap = j.at("min_gap").get<double>();
    c.anchor = j.at("anchor").get<std::size_t>();
    c.lower_bound = j.at("lower_bound").get<double>();
    c.best_stage = j.at("best_stage").get<std::size_t>();
    c.terminal_reason = j.at("terminal_reason").get<std::string>();
    c.band_lost = j.at("band_lost").get<bool>();
    for (const auto& s : j.at("stages")) {
      CelStage st;
      st.s = s.at("s").get<double>();
      st.first = s.at("first").get<std::size_t>();
      st.last = s.at("last").get<std::size_t>();
      st.g_start = s.at("g_start").get<double>();
      st.g_min = s.at("g_min").get<double>();
      st.g_max = s.at("g_max").get<double>();
      st.g_absmax = s.at("g_absmax").get<double>();
      st.gap = s.at("gap").get<double>();
      st.increment = s.at("increment").get<double>();
      st.accumulated = s.at("accumulated").get<double>();
      st.remaining = s.at("remaining").get<double>();
      st.pi_reached = s.at("pi_reached").get<bool>();
      c.stages.push_back(st);
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
}

inline json to_json(const ObstructionReport& r) {
  json w = json::array();
  for (const auto& x : r.windows) {
    w.push_back({{"t", x.t},
                 {"trace_lo", x.trace_lo},
                 {"trace_hi", x.trace_hi},
                 {"L_over_N_lo", x.lo},
                 {"L_over_N_hi", x.hi},
                 {"feasible_L", x.feasible_L},
                 {"A1", x.a1},
                 {"A2", x.a2},
                 {"A3", x.a3},
                 {"straddling", x.straddling}});
  }
  return {{"kind", "obstruction-report"},
          {"n", r.n},
          {"N", r.N},
          {"eps", r.eps},
          {"delta", r.delta},
          {"rho", r.rho},
          {"cap", r.cap},
          {"windows", w},
          {"contradiction", r.contradiction},
          {"verdict", to_string(r.verdict)},
          {"reason", r.reason},
          {"threshold_delta", r.threshold_delta},
          {"worstcase_constants", {{"m0", r.worstcase_m0}, {"eps", r.worstcase_eps}, {"verdict", r.worstcase_verdict}}},
          {"h_norm", r.h_norm},
          {"h_residual", r.h_residual}};
}

inline json to_json(const ConcentrationReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows) {
    rows.push_back({{"t", x.t},
                    {"N", x.dim},
                    {"I_count", x.i_count},
                    {"J_count", x.j_count},
                    {"I_mass", x.i_mass},
                    {"J_mass", x.j_mass},
                    {"I_deviation", {x.i_dev_num, x.i_dev_den}},
                    {"J_deviation", {x.j_dev_num, x.j_dev_den}},
                    {"I_within", x.i_within},
                    {"J_within", x.j_within},
                    {"boundary", x.boundary}});
  }
  return {{"kind", "measure-report"},
          {"n", r.n},
          {"theta0", r.theta0},
          {"eps", r.eps},
          {"bound", r.bound},
          {"perturbation_norm", r.perturbation_norm},
          {"I_all_within", r.i_all_within},
          {"J_all_within", r.j_all_within},
          {"rows", rows}};
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(const std::vector<std::string>& row) {
    if (row.size() != header_.size()) throw Error(ErrorKind::InvalidParams, "CSV row width mismatch");
    rows_.push_back(row);
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ',';
        out += r[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// ---------------------------------------------------------------------------
// Run manifest

/// The run id is the digest of the manifest core (command, parameters,
/// inputs); every output embeds it and the manifest lists output digests.
class RunManifest {
 public:
  RunManifest(std::string command, json parameters) {
    core_ = {{"tool", "celkit"}, {"version", kVersion}, {"command", std::move(command)}, {"parameters", std::move(parameters)}};
    core_["inputs"] = json::array();
  }

  void add_input(const std::string& file) {
    core_["inputs"].push_back({{"file", file}, {"sha256", sha256_file(file)}});
  }

  std::string run_id() const { return sha256_hex(core_.dump()); }

  json reference() const { return {{"run_id", run_id()}, {"tool", "celkit"}, {"version", kVersion}}; }

  void add_output(const std::string& file) { outputs_.push_back({{"file", file}, {"sha256", sha256_file(file)}}); }

  json to_json() const {
    json j = core_;
    j["run_id"] = run_id();
    j["outputs"] = outputs_;
    return j;
  }

 private:
  json core_;
  json outputs_ = json::array();
};

}  // namespace celkit
