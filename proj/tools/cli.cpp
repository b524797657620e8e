#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <string_view>

#include "tclgen/exact_oracle.hpp"
#include "tclgen/propagator.hpp"
#include "tclgen/term_algebra.hpp"

namespace tclgen::cli {

using nlohmann::json;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

const json& required(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + key + "' in " + where);
  return obj.at(key);
}

double number(const json& obj, const std::string& key, const std::string& where) {
  const json& v = required(obj, key, where);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

int integer(const json& obj, const std::string& key, const std::string& where) {
  const json& v = required(obj, key, where);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<int>();
}

double optional_beta(const json& obj, const std::string& where) {
  return obj.contains("beta") ? number(obj, "beta", where) : kInf;
}

Complex parse_pair(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(what + " entries must be [re, im] pairs");
  return {v[0].get<double>(), v[1].get<double>()};
}

BathSpec parse_bath(const json& b, const std::filesystem::path& base_dir) {
  const std::string where = "bath";
  const json& type_value = required(b, "type", where);
  if (!type_value.is_string()) throw ConfigError("bath.type must be a string");
  const std::string type = type_value.get<std::string>();

  if (type == "exact") {
    check_keys(b, where, {"type", "d_E", "H_E", "phi", "state"});
    const int d = integer(b, "d_E", where);
    if (d < 1) throw ConfigError("bath.d_E must be positive");
    return ExactBath(parse_matrix(required(b, "H_E", where), d, "bath.H_E"),
                     parse_matrix(required(b, "phi", where), d, "bath.phi"),
                     parse_matrix(required(b, "state", where), d, "bath.state"));
  }
  if (type == "gaussian") {
    check_keys(b, where, {"type", "builtin", "omega", "beta", "g", "csv"});
    if (b.contains("csv") == b.contains("builtin"))
      throw ConfigError("gaussian bath needs exactly one of 'builtin' or 'csv'");
    if (b.contains("csv")) {
      if (b.contains("omega") || b.contains("beta") || b.contains("g"))
        throw ConfigError("sampled gaussian bath takes no builtin parameters");
      const json& p = b.at("csv");
      if (!p.is_string()) throw ConfigError("bath.csv must be a path string");
      std::filesystem::path path(p.get<std::string>());
      if (path.is_relative()) path = base_dir / path;
      if (!std::filesystem::exists(path)) throw ConfigError("cannot open " + path.string());
      return sampled_two_point_file(path.string());
    }
    const json& name = b.at("builtin");
    if (!name.is_string() || name.get<std::string>() != "single-mode-thermal")
      throw ConfigError("unknown gaussian builtin; expected \"single-mode-thermal\"");
    const double g = b.contains("g") ? number(b, "g", where) : 1.0;
    return single_mode_thermal(number(b, "omega", where), optional_beta(b, where), g);
  }
  if (type == "boson-mode") {
    check_keys(b, where, {"type", "omega", "beta", "n_max", "alpha"});
    const int n_max = integer(b, "n_max", where);
    if (n_max < 1) throw ConfigError("bath.n_max must be >= 1");
    ExactBath mode = boson_mode_bath(number(b, "omega", where), optional_beta(b, where), n_max);
    if (!b.contains("alpha")) return mode;
    if (b.contains("beta")) throw ConfigError("bath.alpha and bath.beta are exclusive");
    return ExactBath(mode.hamiltonian(), mode.phi(), coherent_state(parse_pair(b.at("alpha"), "bath.alpha"), n_max));
  }
  if (type == "dephasing-qubit") {
    check_keys(b, where, {"type", "omega", "beta"});
    return qubit_bath(number(b, "omega", where), optional_beta(b, where));
  }
  throw ConfigError("unknown bath type '" + type + "'");
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream file(dir / name);
  if (!file) throw ConfigError("cannot write " + (dir / name).string());
  return file;
}

json rounded(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::strtod(format_double(x).c_str(), nullptr);
}

struct Options {
  std::string config;
  int order = 0;
  std::string kind = "schrodinger";
  std::string format = "text";
  std::string out_dir;
};

Kind parse_kind(const std::string& kind) { return kind == "adjoint" ? Kind::Adjoint : Kind::Schrodinger; }

int resolved_order(const Options& opt, const RunConfig& cfg) { return opt.order > 0 ? opt.order : cfg.order; }

RunConfig config_for(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("--config is required");
  return load_run_config(opt.config);
}

// Writes to DIR/name when --out is set, else to out.
template <class Fn>
void emit(const Options& opt, const std::string& name, std::ostream& out, Fn&& write) {
  if (opt.out_dir.empty()) {
    write(out);
  } else {
    std::ofstream file = open_output(opt.out_dir, name);
    write(file);
  }
}

void cmd_terms(const Options& opt, std::ostream& out) {
  const int n = opt.order > 0 ? opt.order : 1;
  if (n > kMaxSymbolicOrder) throw DomainError("order exceeds " + std::to_string(kMaxSymbolicOrder));
  const RenderFormat format = opt.format == "diagram" ? RenderFormat::DiagramAscii
                              : opt.format == "latex" ? RenderFormat::Latex
                                                      : RenderFormat::OperatorText;
  for (const auto& term : generator_terms(n, parse_kind(opt.kind)).list()) out << render_term(term, format) << '\n';
}

void cmd_count(const Options& opt, std::ostream& out) {
  const int max = opt.order > 0 ? opt.order : 4;
  if (max > kMaxSymbolicOrder) throw DomainError("order exceeds " + std::to_string(kMaxSymbolicOrder));
  out << "order,recursive_V,recursive_PM,vankampen\n";
  for (int n = 1; n <= max; ++n) {
    out << n << ',' << count_terms(n, CountMethod::RecursiveV) << ',' << count_terms(n, CountMethod::RecursivePM) << ',';
    if (n <= 4) out << count_terms(n, CountMethod::VanKampen);
    out << '\n';
  }
}

void cmd_evaluate(const Options& opt, std::ostream& out) {
  RunConfig cfg = config_for(opt);
  const int N = resolved_order(opt, cfg);
  cfg.model.adjoint = parse_kind(opt.kind) == Kind::Adjoint;
  cfg.quad.max_order = N;
  const GridContext ctx(cfg.model, cfg.quad);
  const auto table = generator_table(N, ctx);
  emit(opt, "evaluate.csv", out, [&](std::ostream& o) {
    o << "t,row,col,re,im\n";
    for (int i = 0; i < ctx.points(); ++i) {
      const CMatrix& L = table[i].matrix;
      for (int r = 0; r < L.rows(); ++r)
        for (int c = 0; c < L.cols(); ++c)
          o << format_double(ctx.times()[i]) << ',' << r << ',' << c << ',' << format_double(L(r, c).real()) << ','
            << format_double(L(r, c).imag()) << '\n';
    }
  });
}

const CMatrix& require_state(const RunConfig& cfg) {
  if (!cfg.rho0) throw ConfigError("config needs 'rho0' for this command");
  return *cfg.rho0;
}

void cmd_propagate(const Options& opt, std::ostream& out) {
  RunConfig cfg = config_for(opt);
  const int N = resolved_order(opt, cfg);
  cfg.quad.max_order = N;
  Trajectory traj;
  if (parse_kind(opt.kind) == Kind::Adjoint) {
    if (!cfg.observable) throw ConfigError("adjoint propagation needs 'observable'");
    traj = propagate_observable(cfg.model, *cfg.observable, cfg.quad, N);
  } else {
    traj = propagate_state(cfg.model, require_state(cfg), cfg.quad, N);
  }
  emit(opt, "propagate.csv", out, [&](std::ostream& o) { write_trajectory_csv(o, traj); });
}

void cmd_oracle(const Options& opt, std::ostream& out) {
  const RunConfig cfg = config_for(opt);
  const FullModel full(cfg.model, require_state(cfg));
  const Trajectory traj = exact_reduced_trajectory(full, cfg.quad.times());
  emit(opt, "oracle.csv", out, [&](std::ostream& o) { write_trajectory_csv(o, traj); });
}

void cmd_compare(const Options& opt, std::ostream& out) {
  RunConfig cfg = config_for(opt);
  const int N = resolved_order(opt, cfg);
  cfg.quad.max_order = N;
  const CMatrix& rho0 = require_state(cfg);
  const Trajectory tcl = propagate_state(cfg.model, rho0, cfg.quad, N);
  const Trajectory exact = exact_reduced_trajectory(FullModel(cfg.model, rho0), cfg.quad.times());

  std::vector<double> distance(tcl.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < tcl.size(); ++k) {
    distance[k] = trace_distance(tcl.payload[k], exact.payload[k]);
    worst = std::max(worst, distance[k]);
  }

  std::vector<double> couplings = cfg.couplings;
  if (couplings.empty() && cfg.model.g != 0.0) couplings = {cfg.model.g, cfg.model.g / 2};
  json scaling = json::array();
  if (couplings.size() >= 2) {
    for (const auto& row : scaling_probe(cfg.model, rho0, cfg.quad, N, couplings))
      scaling.push_back({{"g", rounded(row.g)}, {"err", rounded(row.err)}, {"ratio", rounded(row.ratio)}});
  }
  const json summary = {{"order", N}, {"max_error", rounded(worst)}, {"scaling", scaling}};

  out << summary.dump(2) << '\n';
  if (!opt.out_dir.empty()) {
    std::ofstream csv = open_output(opt.out_dir, "compare.csv");
    csv << "t,trace_distance\n";
    for (std::size_t k = 0; k < tcl.size(); ++k)
      csv << format_double(tcl.times[k]) << ',' << format_double(distance[k]) << '\n';
    open_output(opt.out_dir, "compare.json") << summary.dump(2) << '\n';
  }
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

CMatrix parse_matrix(const json& value, int d, const std::string& what) {
  if (!value.is_array() || static_cast<int>(value.size()) != d * d)
    throw ConfigError(what + " must list " + std::to_string(d * d) + " [re, im] pairs in row-major order");
  CMatrix m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = parse_pair(value[r * d + c], what);
  return m;
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, "config", {"model", "bath", "grid", "order", "rho0", "observable", "couplings"});
  RunConfig cfg;

  const json& m = required(doc, "model", "config");
  check_keys(m, "model", {"d_S", "H_S", "A", "g"});
  cfg.model.d_S = integer(m, "d_S", "model");
  if (cfg.model.d_S < 1) throw ConfigError("model.d_S must be positive");
  cfg.model.H_S = parse_matrix(required(m, "H_S", "model"), cfg.model.d_S, "model.H_S");
  cfg.model.A = parse_matrix(required(m, "A", "model"), cfg.model.d_S, "model.A");
  cfg.model.g = number(m, "g", "model");
  cfg.model.bath = parse_bath(required(doc, "bath", "config"), base_dir);
  cfg.model.validate();

  const json& grid = required(doc, "grid", "config");
  check_keys(grid, "grid", {"T", "M"});
  cfg.quad.T = number(grid, "T", "grid");
  cfg.quad.M = integer(grid, "M", "grid");

  if (doc.contains("order")) cfg.order = integer(doc, "order", "config");
  cfg.quad.max_order = cfg.order;
  cfg.quad.validate();

  if (doc.contains("rho0")) {
    cfg.rho0 = parse_matrix(doc.at("rho0"), cfg.model.d_S, "rho0");
    validate_density(*cfg.rho0);
  }
  if (doc.contains("observable")) {
    cfg.observable = parse_matrix(doc.at("observable"), cfg.model.d_S, "observable");
    if (hermiticity_residual(*cfg.observable) > 1e-10) throw ValidationError("observable is not Hermitian");
  }
  if (doc.contains("couplings")) {
    const json& c = doc.at("couplings");
    if (!c.is_array()) throw ConfigError("couplings must be an array of numbers");
    for (const auto& g : c) {
      if (!g.is_number()) throw ConfigError("couplings must be an array of numbers");
      cfg.couplings.push_back(g.get<double>());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-convolutionless generator toolkit", "tclgen"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "JSON run configuration");
  app.add_option("--order", opt.order, "Truncation order N (or maximum order for count)")->check(CLI::PositiveNumber);
  app.add_option("--kind", opt.kind, "Expansion kind")->check(CLI::IsMember({"schrodinger", "adjoint"}));
  app.add_option("--format", opt.format, "Term rendering")->check(CLI::IsMember({"text", "diagram", "latex"}));
  app.add_option("--out", opt.out_dir, "Output directory");

  auto* terms = app.add_subcommand("terms", "List the generator terms of one order");
  auto* count = app.add_subcommand("count", "Term counts per order and method");
  auto* evaluate = app.add_subcommand("evaluate", "Generator matrices on the time grid");
  auto* propagate = app.add_subcommand("propagate", "Integrate the truncated master equation");
  auto* oracle = app.add_subcommand("oracle", "Exact reduced dynamics");
  auto* compare = app.add_subcommand("compare", "Truncated vs exact dynamics with a coupling scan");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (terms->parsed()) cmd_terms(opt, out);
    else if (count->parsed()) cmd_count(opt, out);
    else if (evaluate->parsed()) cmd_evaluate(opt, out);
    else if (propagate->parsed()) cmd_propagate(opt, out);
    else if (oracle->parsed()) cmd_oracle(opt, out);
    else if (compare->parsed()) cmd_compare(opt, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}

}  // namespace tclgen::cli
