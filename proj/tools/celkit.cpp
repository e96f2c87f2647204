// celkit: generate example paths, run analyses and re-verify certificates.
//
// Exit codes: 0 ok, 1 usage, 2 validation, 3 numeric failure,
// 4 inconclusive certificate or verification failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "celkit/io.hpp"

using namespace celkit;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInconclusive = 4;

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidGrid:
    case ErrorKind::InvalidParams:
    case ErrorKind::InvalidDefect:
    case ErrorKind::InsufficientMultiplicity:
    case ErrorKind::SchemaError:
    case ErrorKind::IoError:
    case ErrorKind::NotHermitian:
    case ErrorKind::NotUnitary:
    case ErrorKind::NotDetOne:
    case ErrorKind::AliasedPath:
    case ErrorKind::EndpointMismatch:
    case ErrorKind::NonIntegerSum:
    case ErrorKind::DuplicateEntries:
    case ErrorKind::StartNotInSpectrum:
      return kExitValidation;
    default:
      return kExitNumeric;
  }
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("CELKIT_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

struct Outputs {
  RunManifest manifest;
  std::string prefix;

  void write_json(const std::string& suffix, json j) {
    j["run"] = manifest.reference();
    const std::string file = prefix + suffix;
    write_file(file, dump(j));
    manifest.add_output(file);
  }

  void write_text(const std::string& suffix, const std::string& text) {
    const std::string file = prefix + suffix;
    write_file(file, text);
    manifest.add_output(file);
  }

  void finish() {
    const std::string file = prefix + ".manifest.json";
    write_file(file, dump(manifest.to_json()));
    std::cout << "manifest " << file << " run_id " << manifest.run_id() << "\n";
  }
};

std::string default_prefix(const std::string& input, const std::string& task) {
  std::filesystem::path p(input);
  return (p.parent_path() / p.stem()).string() + "." + task;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  GenSpec spec;
  std::string out;
  int threads = 0;
};

int cmd_gen(const GenArgs& a) {
  const Generated g = build_generated(a.spec);
  json params = to_json(a.spec);
  params["threads"] = resolve_threads(a.threads);
  RunManifest manifest("gen " + a.spec.kind, params);
  const std::string out = a.out.empty() ? a.spec.kind + ".json" : a.out;
  json j = path_to_json(g.path, a.spec, manifest.reference());
  j["info"] = g.info;
  write_file(out, dump(j));
  manifest.add_output(out);
  const std::string mfile = out + ".manifest.json";
  write_file(mfile, dump(manifest.to_json()));
  std::cout << "wrote " << out << " (n=" << g.path.n() << ", " << g.path.size() << " samples)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string task;
  std::string input;
  std::string prefix;
  double eps = 0.1;
  std::optional<double> delta;
  std::uint64_t seed = 0;
  std::size_t budget = 10000;
  double perturb = 0.0;
  int threads = 0;
};

json analyze_parameters(const AnalyzeArgs& a) {
  json p = {{"task", a.task}, {"eps", a.eps}, {"seed", a.seed}, {"threads", resolve_threads(a.threads)}};
  if (a.task == "obstruction") p["budget"] = a.budget;
  if (a.delta) p["delta"] = *a.delta;
  if (a.task == "measure") p["perturb"] = a.perturb;
  return p;
}

int analyze_det(const PathFile& pf, Outputs& out) {
  const DetReport r = dls_determinant(pf.path);
  out.write_json(".json", to_json(r));
  CsvTable csv({"t", "det_partial"});
  for (std::size_t i = 0; i < r.cumulative.size(); ++i) {
    csv.add({format_number(pf.path.grid()[i]), format_number(r.cumulative[i])});
  }
  out.write_text(".csv", csv.str());
  std::cout << "Det " << format_number(r.value) << " residue " << format_number(r.residue) << "\n";
  return 0;
}

int analyze_log(const PathFile& pf, const AnalyzeArgs& a, Outputs& out) {
  const LogPath lp = trace_zero_log_path(pf.path, a.eps);
  const LogCertificateReport rep = verify_log_certificate(pf.path, lp.h, a.eps);
  out.write_json(".json", log_certificate_json(pf.path, lp, rep));
  CsvTable csv({"t", "norm", "trace", "spread", "approx_error"});
  for (std::size_t i = 0; i < pf.path.size(); ++i) {
    const HermEig e = herm_eig(lp.h[i]);
    const double err = op_norm(pf.path[i] - lp.u1[i]);
    csv.add({format_number(pf.path.grid()[i]), format_number(e.values.cwiseAbs().maxCoeff()),
             format_number(e.values.sum()), format_number(e.values.maxCoeff() - e.values.minCoeff()),
             format_number(err)});
  }
  out.write_text(".csv", csv.str());
  std::cout << "log certificate " << (rep.ok ? "ok" : "VIOLATED") << " sup_norm " << format_number(rep.sup_norm)
            << " max_trace " << format_number(rep.max_trace) << "\n";
  return rep.ok ? 0 : kExitInconclusive;
}

int analyze_cel(const PathFile& pf, const AnalyzeArgs& a, Outputs& out) {
  std::optional<ExpFactorization> f;
  std::string source = "generator";
  if (pf.generator) f = build_generated(*pf.generator).factorization;
  if (!f) {
    source = "trace-zero log";
    const LogPath lp = trace_zero_log_path(pf.path, std::min(1e-6, a.eps));
    std::vector<CMat> hs;
    for (const CMat& h : lp.h.samples()) hs.push_back(kTwoPi * h);
    f = ExpFactorization({HermitianPath::from_samples(pf.path.grid(), std::move(hs))});
  }
  const CelCertificate c = certify_length_lower_bound(*f, std::nullopt, a.eps);
  const CelVerifyReport v = verify_cel_certificate(c);
  json j = to_json(c);
  j["factorization_source"] = source;
  out.write_json(".json", j);
  CsvTable csv({"s", "accumulated", "remaining", "bound", "g_min", "g_max", "gap"});
  for (const auto& s : c.stages) {
    csv.add({format_number(s.s), format_number(s.accumulated), format_number(s.remaining),
             format_number(s.accumulated + s.remaining), format_number(s.g_min), format_number(s.g_max),
             format_number(s.gap)});
  }
  out.write_text(".csv", csv.str());
  std::cout << "certified length lower bound " << format_number(c.lower_bound) << " (" << c.terminal_reason
            << ")" << (v.ok ? "" : " VERIFY FAILED") << "\n";
  return v.ok ? 0 : kExitInconclusive;
}

int analyze_obstruction(const PathFile& pf, const AnalyzeArgs& a, Outputs& out) {
  if (!pf.generator || pf.generator->kind != "ex2") {
    throw Error(ErrorKind::InvalidParams, "obstruction needs an ex2 path file with generator metadata");
  }
  const ObstructionParams p{pf.generator->n, pf.generator->m, pf.generator->k, a.eps, std::nullopt};
  const double cap = obstruction_default_cap(p.n);
  const BestApprox best = best_exp_approx(pf.path, cap, a.budget, a.seed);
  const double delta = std::max(a.delta.value_or(0.0), best.residual);
  const ObstructionReport r = obstruction_check(pf.path, best.h, p, delta);
  json j = to_json(r);
  j["oracle"] = {{"residual", best.residual},
                 {"restarts", best.restarts},
                 {"iterations", best.iterations},
                 {"continuous", best.continuous},
                 {"history", best.history}};
  out.write_json(".json", j);
  CsvTable csv({"t", "L_over_N_lo", "L_over_N_hi", "A1", "A2", "A3", "straddling"});
  for (const auto& w : r.windows) {
    csv.add({format_number(w.t), format_number(w.lo), format_number(w.hi), std::to_string(w.a1),
             std::to_string(w.a2), std::to_string(w.a3), std::to_string(w.straddling)});
  }
  out.write_text(".csv", csv.str());
  std::cout << "verdict " << to_string(r.verdict) << " at delta " << format_number(delta) << " (threshold "
            << format_number(r.threshold_delta) << ")\n";
  return r.verdict == Verdict::Inconclusive ? kExitInconclusive : 0;
}

int analyze_measure(const PathFile& pf, const AnalyzeArgs& a, Outputs& out) {
  if (!pf.generator || pf.generator->kind != "ex2") {
    throw Error(ErrorKind::InvalidParams, "measure needs an ex2 path file with generator metadata");
  }
  const int n = pf.generator->n;
  UnitaryPath v = pf.path;
  double pnorm = 0.0;
  if (a.perturb > 0.0) {
    std::mt19937_64 rng(a.seed);
    const CMat w = mat_exp_i(random_traceless_hermitian(pf.path.n(), rng, a.perturb));
    pnorm = op_norm(w - CMat::Identity(pf.path.n(), pf.path.n()));
    v = multiply(pf.path, constant_path(w, pf.path.grid()));
  }
  std::vector<double> ts;
  const double t0 = 1.0 / static_cast<double>(n - 1);
  for (int i = 0; i <= 10; ++i) ts.push_back(t0 + (1.0 - t0) * i / 10.0);
  const ConcentrationReport r = measure_concentration_report(v, n, uniexam_theta0(n), ts, a.eps, pnorm);
  out.write_json(".json", to_json(r));
  CsvTable csv({"t", "arc", "arc_center", "arc_halfwidth", "mass", "deviation"});
  for (const auto& row : r.rows) {
    csv.add({format_number(row.t), "I", format_number(row.t * r.theta0), format_number(r.eps / 2.0),
             format_number(row.i_mass), format_number(row.i_dev)});
    csv.add({format_number(row.t), "J", format_number(-row.t * r.theta0 / (n - 1)), format_number(r.eps / 2.0),
             format_number(row.j_mass), format_number(row.j_dev)});
  }
  out.write_text(".csv", csv.str());
  std::cout << "I within bound: " << (r.i_all_within ? "yes" : "no")
            << ", J within bound: " << (r.j_all_within ? "yes" : "no") << "\n";
  return 0;
}

int analyze_triv(const PathFile& pf, const AnalyzeArgs& a, Outputs& out) {
  std::mt19937_64 rng(a.seed);
  const CMat w = random_unitary(pf.path.n(), rng);
  const TrivCheck t = check_triv_identity(pf.path[0], pf.path[pf.path.size() - 1], w, pf.path);
  json j = to_json(t);
  j["w_seed"] = a.seed;
  out.write_json(".json", j);
  const bool ok = t.residual < 1e-8;
  std::cout << "triv identity residual " << format_number(t.residual) << (ok ? "" : " (FAILED)") << "\n";
  return ok ? 0 : kExitInconclusive;
}

int cmd_analyze(const AnalyzeArgs& a) {
  const PathFile pf = load_path(a.input);
  Outputs out{RunManifest("analyze " + a.task, analyze_parameters(a)),
              a.prefix.empty() ? default_prefix(a.input, a.task) : a.prefix};
  out.manifest.add_input(a.input);
  int rc = 0;
  if (a.task == "det") rc = analyze_det(pf, out);
  else if (a.task == "log") rc = analyze_log(pf, a, out);
  else if (a.task == "cel-lower") rc = analyze_cel(pf, a, out);
  else if (a.task == "obstruction") rc = analyze_obstruction(pf, a, out);
  else if (a.task == "measure") rc = analyze_measure(pf, a, out);
  else if (a.task == "triv-check") rc = analyze_triv(pf, a, out);
  else throw Error(ErrorKind::InvalidParams, "unknown task " + a.task);
  out.finish();
  return rc;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const std::string& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
  const std::string kind = j.value("kind", "");
  json result = {{"file", file}, {"kind", kind}};
  bool ok = false;
  if (kind == "log-certificate") {
    const LogCertCheck c = verify_log_certificate_json(j);
    ok = c.ok;
    result["problems"] = c.problems;
    result["sup_norm"] = c.recomputed.sup_norm;
  } else if (kind == "cel-certificate") {
    const CelVerifyReport r = verify_cel_certificate(cel_certificate_from_json(j));
    ok = r.ok;
    result["problems"] = r.problems;
    result["lower_bound"] = r.recomputed_bound;
  } else {
    throw Error(ErrorKind::SchemaError, "no verifier for kind '" + kind + "'");
  }
  result["ok"] = ok;
  std::cout << result.dump(2) << "\n";
  return ok ? 0 : kExitInconclusive;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"celkit: unitary path analysis"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker cap (falls back to CELKIT_THREADS)");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate an example path file");
  g->add_option("kind", gen.spec.kind, "uniexam | ex2 | ex2ml | random-detone")
      ->required()
      ->check(CLI::IsMember({"uniexam", "ex2", "ex2ml", "random-detone"}));
  g->add_option("--n", gen.spec.n, "size parameter");
  g->add_option("--m", gen.spec.m, "ex2 multiplicity");
  g->add_option("--k", gen.spec.k, "defect size");
  g->add_option("--d", gen.spec.d, "ex2ml seed block multiplicities");
  g->add_option("--stages", gen.spec.stages, "ex2ml inductive stages");
  g->add_option("--seed", gen.spec.seed, "random seed");
  g->add_option("--grid", gen.spec.grid, "number of grid points");
  g->add_option("-o,--output", gen.out, "output path file");

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "run an analysis on a path file");
  a->add_option("task", an.task, "det | log | cel-lower | obstruction | measure | triv-check")
      ->required()
      ->check(CLI::IsMember({"det", "log", "cel-lower", "obstruction", "measure", "triv-check"}));
  a->add_option("input", an.input, "path file")->required();
  a->add_option("--eps", an.eps, "tolerance");
  a->add_option("--delta", an.delta, "obstruction residual");
  a->add_option("--seed", an.seed, "random seed");
  a->add_option("--budget", an.budget, "oracle iteration budget");
  a->add_option("--perturb", an.perturb, "measure: perturbation norm");
  a->add_option("-o,--output", an.prefix, "output prefix");

  std::string cert;
  auto* v = app.add_subcommand("verify", "re-verify a certificate from its stored data");
  v->add_option("certificate", cert)->required();

  CLI11_PARSE(app, argc, argv);
  gen.threads = threads;
  an.threads = threads;

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (a->parsed()) return cmd_analyze(an);
    if (v->parsed()) return cmd_verify(cert);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 1;
}
