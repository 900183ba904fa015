#include "plateinv/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace plateinv {

namespace {

const char* const kConfigKeys[] = {"command", "case",    "domain", "element",
                                   "k",       "alpha",   "levels", "regions",
                                   "delta",   "seed",    "out",    "quad-degree"};

bool known_key(const std::string& key) {
  for (const char* k : kConfigKeys) {
    if (key == k) return true;
  }
  return false;
}

ElementKind element_from_string(const std::string& s) {
  if (s == "bfs") return ElementKind::BFS;
  if (s == "morley") return ElementKind::Morley;
  throw ConfigError("element: must be 'bfs' or 'morley'");
}

Domain domain_from_string(const std::string& s) {
  if (s == "square") return Domain::Square;
  if (s == "lshape") return Domain::LShape;
  throw ConfigError("domain: must be 'square' or 'lshape'");
}

std::string element_name(ElementKind kind) {
  return kind == ElementKind::BFS ? "bfs" : "morley";
}

std::string domain_name(Domain d) { return d == Domain::Square ? "square" : "lshape"; }

double parse_double(const std::string& field, const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field + ": '" + s + "' is not a number");
  }
}

long long parse_int(const std::string& field, const std::string& s) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field + ": '" + s + "' is not an integer");
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

// One merged setting: the values seen for a key, in order.
using KvMap = std::map<std::string, std::vector<std::string>>;

void apply_field(RunConfig& cfg, const std::string& key, const std::vector<std::string>& vals) {
  if (vals.empty()) return;
  const std::string& last = vals.back();
  if (key == "command") {
    cfg.command = last;
  } else if (key == "case") {
    cfg.case_name = last;
  } else if (key == "domain") {
    cfg.domain = domain_from_string(last);
  } else if (key == "element") {
    cfg.element = element_from_string(last);
  } else if (key == "k") {
    long long k = parse_int("k", last);
    if (k < 0 || k > 2) throw ConfigError("k: must be 0, 1, or 2");
    cfg.reg_k = static_cast<int>(k);
  } else if (key == "alpha") {
    cfg.alphas.clear();
    for (const std::string& v : vals) {
      for (const std::string& piece : split_commas(v)) {
        double a = parse_double("alpha", piece);
        if (!(a > 0.0)) throw ConfigError("alpha: must be positive");
        cfg.alphas.push_back(a);
      }
    }
  } else if (key == "levels") {
    long long l = parse_int("levels", last);
    if (l < 1 || l > 12) throw ConfigError("levels: must be between 1 and 12");
    cfg.levels = static_cast<int>(l);
  } else if (key == "regions") {
    std::vector<double> flat;
    for (const std::string& v : vals) {
      for (const std::string& piece : split_commas(v)) {
        flat.push_back(parse_double("regions", piece));
      }
    }
    if (flat.empty() || flat.size() % 4 != 0) {
      throw ConfigError("regions: expected groups of four numbers x0,y0,x1,y1");
    }
    cfg.regions.clear();
    for (std::size_t i = 0; i < flat.size(); i += 4) {
      RectRegion r{flat[i], flat[i + 1], flat[i + 2], flat[i + 3]};
      if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) {
        throw ConfigError("regions: rectangle " + std::to_string(i / 4 + 1) +
                          " must satisfy x0 < x1 and y0 < y1");
      }
      cfg.regions.push_back(r);
    }
  } else if (key == "delta") {
    double d = parse_double("delta", last);
    if (d < 0.0) throw ConfigError("delta: must be nonnegative");
    cfg.delta = d;
  } else if (key == "seed") {
    long long s = parse_int("seed", last);
    if (s < 0) throw ConfigError("seed: must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "out") {
    cfg.out_dir = last;
  } else if (key == "quad-degree") {
    long long q = parse_int("quad-degree", last);
    if (q < 1 || q > 30) throw ConfigError("quad-degree: must be between 1 and 30");
    cfg.quad_degree = static_cast<int>(q);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string json_scalar_to_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  std::ostringstream out;
  out.precision(17);
  if (v.is_number_integer()) {
    out << v.get<long long>();
  } else if (v.is_number_unsigned()) {
    out << v.get<unsigned long long>();
  } else {
    out << v.get<double>();
  }
  return out.str();
}

KvMap read_manifest_config(const nlohmann::json& doc) {
  if (!doc.contains("config") || !doc["config"].is_object()) {
    throw ConfigError("config: manifest has no 'config' object");
  }
  KvMap kv;
  for (const auto& [key, value] : doc["config"].items()) {
    if (!known_key(key)) throw ConfigError("unknown config key '" + key + "'");
    if (key == "regions" && value.is_array()) {
      for (const auto& rect : value) {
        if (!rect.is_array() || rect.size() != 4) {
          throw ConfigError("regions: expected arrays of four numbers");
        }
        std::string joined;
        for (const auto& coord : rect) {
          if (!joined.empty()) joined += ',';
          joined += json_scalar_to_string(coord);
        }
        kv[key].push_back(joined);
      }
    } else if (value.is_array()) {
      for (const auto& item : value) kv[key].push_back(json_scalar_to_string(item));
    } else {
      kv[key].push_back(json_scalar_to_string(value));
    }
  }
  return kv;
}

KvMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();

  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config: '" + path + "' is not valid JSON");
    return read_manifest_config(doc);
  }

  KvMap kv;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(lines, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!known_key(key)) throw ConfigError("unknown config key '" + key + "'");
    kv[key].push_back(value);
  }
  return kv;
}

void validate(RunConfig& cfg) {
  if (cfg.command.empty()) {
    throw ConfigError("command: one of forward, invert, study is required");
  }
  if (cfg.command != "forward" && cfg.command != "invert" && cfg.command != "study") {
    throw ConfigError("command: must be one of forward, invert, study");
  }
  ManufacturedCase mc = [&] {
    try {
      return case_by_name(cfg.case_name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  if (cfg.domain && *cfg.domain != mc.domain) {
    throw ConfigError("domain: case '" + cfg.case_name + "' runs on " + domain_name(mc.domain));
  }
  cfg.domain = mc.domain;
  if (cfg.levels == 0) cfg.levels = cfg.element == ElementKind::Morley ? 7 : 6;
  if (cfg.command == "study" && cfg.levels < 3) {
    throw ConfigError("levels: a study needs at least 3 levels");
  }
  if (cfg.alphas.empty()) cfg.alphas = {1e-3, 1e-5, 1e-7};
  for (std::size_t i = 0; i < cfg.regions.size(); ++i) {
    const RectRegion& r = cfg.regions[i];
    bool ok;
    if (*cfg.domain == Domain::Square) {
      ok = r.x0 >= 0.0 && r.y0 >= 0.0 && r.x1 <= 1.0 && r.y1 <= 1.0;
    } else {
      ok = r.x0 >= -1.0 && r.y0 >= -1.0 && r.x1 <= 1.0 && r.y1 <= 1.0 &&
           !(r.x1 > 0.0 && r.y0 < 0.0);
    }
    if (!ok) {
      throw ConfigError("regions: rectangle " + std::to_string(i + 1) +
                        " is not inside the " + domain_name(*cfg.domain) + " domain");
    }
  }
}

}  // namespace

RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"plateinv"};
  app.set_help_flag();

  std::string command, config_file;
  std::vector<std::string> raw_case, raw_domain, raw_element, raw_k, raw_alpha, raw_levels,
      raw_regions, raw_delta, raw_seed, raw_out, raw_quad;
  app.add_option("command", command);
  app.add_option("--config", config_file);
  app.add_option("--case", raw_case)->type_size(1)->allow_extra_args(false);
  app.add_option("--domain", raw_domain)->type_size(1)->allow_extra_args(false);
  app.add_option("--element", raw_element)->type_size(1)->allow_extra_args(false);
  app.add_option("--k", raw_k)->type_size(1)->allow_extra_args(false);
  app.add_option("--alpha", raw_alpha)->type_size(1)->allow_extra_args(false);
  app.add_option("--levels", raw_levels)->type_size(1)->allow_extra_args(false);
  app.add_option("--regions", raw_regions)->type_size(1)->allow_extra_args(false);
  app.add_option("--delta", raw_delta)->type_size(1)->allow_extra_args(false);
  app.add_option("--seed", raw_seed)->type_size(1)->allow_extra_args(false);
  app.add_option("--out", raw_out)->type_size(1)->allow_extra_args(false);
  app.add_option("--quad-degree", raw_quad)->type_size(1)->allow_extra_args(false);

  std::vector<const char*> argv;
  argv.push_back("plateinv");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  KvMap cli_kv;
  if (!command.empty()) cli_kv["command"] = {command};
  if (!raw_case.empty()) cli_kv["case"] = raw_case;
  if (!raw_domain.empty()) cli_kv["domain"] = raw_domain;
  if (!raw_element.empty()) cli_kv["element"] = raw_element;
  if (!raw_k.empty()) cli_kv["k"] = raw_k;
  if (!raw_alpha.empty()) cli_kv["alpha"] = raw_alpha;
  if (!raw_levels.empty()) cli_kv["levels"] = raw_levels;
  if (!raw_regions.empty()) cli_kv["regions"] = raw_regions;
  if (!raw_delta.empty()) cli_kv["delta"] = raw_delta;
  if (!raw_seed.empty()) cli_kv["seed"] = raw_seed;
  if (!raw_out.empty()) cli_kv["out"] = raw_out;
  if (!raw_quad.empty()) cli_kv["quad-degree"] = raw_quad;

  RunConfig cfg;
  if (!config_file.empty()) {
    for (const auto& [key, vals] : read_config_file(config_file)) {
      if (cli_kv.find(key) == cli_kv.end()) apply_field(cfg, key, vals);
    }
  }
  for (const char* key : kConfigKeys) {
    auto it = cli_kv.find(key);
    if (it != cli_kv.end()) apply_field(cfg, key, it->second);
  }
  validate(cfg);
  return cfg;
}

std::string usage_text() {
  return
      "usage: plateinv <command> [flags]\n"
      "\n"
      "commands:\n"
      "  forward   solve the clamped plate problem for the case's source and\n"
      "            report the region-average measurements at the chosen level\n"
      "  invert    reconstruct the source from the forward measurements for\n"
      "            each alpha at the chosen level\n"
      "  study     run the mesh-refinement study and report errors and orders\n"
      "\n"
      "flags:\n"
      "  --case NAME        square-poly | square-exp | lshape-singular | lshape-h1\n"
      "                     (default square-poly)\n"
      "  --domain NAME      square | lshape (defaults to the case's domain)\n"
      "  --element NAME     bfs | morley (default bfs)\n"
      "  --k K              regularization order 0, 1, or 2 (default 0)\n"
      "  --alpha LIST       comma-separated positive values (default 1e-3,1e-5,1e-7)\n"
      "  --levels L         refinement levels (default 6 for bfs, 7 for morley)\n"
      "  --regions X0,Y0,X1,Y1\n"
      "                     measurement rectangle, repeatable (defaults to the\n"
      "                     domain's built-in regions)\n"
      "  --delta D          noise level (default 0 = noiseless)\n"
      "  --seed S           noise seed (default 12345)\n"
      "  --out DIR          output directory (default ./out)\n"
      "  --quad-degree Q    load quadrature degree (default 10)\n"
      "  --config FILE      key=value file or a manifest.json from a prior run;\n"
      "                     command-line flags take precedence\n"
      "\n"
      "outputs: <out>/table.csv, <out>/table.txt, <out>/manifest.json\n";
}

namespace {

using Clock = std::chrono::steady_clock;

struct StageTimer {
  std::vector<std::pair<std::string, double>> entries;
  Clock::time_point mark = Clock::now();

  void lap(const std::string& stage) {
    Clock::time_point now = Clock::now();
    entries.emplace_back(stage,
                         std::chrono::duration<double, std::milli>(now - mark).count());
    mark = now;
  }
};

nlohmann::ordered_json config_json(const RunConfig& cfg, const MeasurementSet& ms,
                                   const std::vector<double>& alphas, int levels) {
  nlohmann::ordered_json j;
  j["command"] = cfg.command;
  j["case"] = cfg.case_name;
  j["domain"] = domain_name(*cfg.domain);
  j["element"] = element_name(cfg.element);
  j["k"] = cfg.reg_k;
  j["alpha"] = alphas;
  j["levels"] = levels;
  nlohmann::ordered_json regions = nlohmann::ordered_json::array();
  for (const RectRegion& r : ms.regions) {
    regions.push_back({r.x0, r.y0, r.x1, r.y1});
  }
  j["regions"] = regions;
  j["delta"] = cfg.delta;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir;
  j["quad-degree"] = cfg.quad_degree;
  return j;
}

void write_manifest(const std::filesystem::path& dir, const nlohmann::ordered_json& config,
                    const StageTimer& timer) {
  nlohmann::ordered_json j;
  j["config"] = config;
  j["versions"]["plateinv"] = "0.1.0";
  j["versions"]["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                           std::to_string(EIGEN_MAJOR_VERSION) + "." +
                           std::to_string(EIGEN_MINOR_VERSION);
  for (const auto& [stage, ms] : timer.entries) j["timings_ms"][stage] = ms;
  j["outputs"] = {"table.csv", "table.txt"};
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << "\n";
}

void write_text_file(const std::filesystem::path& path,
                     const std::function<void(std::ostream&)>& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  writer(out);
}

std::string csv_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int run_impl(const RunConfig& cfg, const char*& stage) {
  StageTimer timer;
  stage = "setup";
  ManufacturedCase mc = case_by_name(cfg.case_name);
  MeasurementSet ms =
      cfg.regions.empty() ? default_measurement_set(mc.domain) : MeasurementSet{cfg.regions};
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  int meas_degree = cfg.element == ElementKind::BFS ? 8 : 6;

  ForwardOptions opts;
  opts.load_degree = cfg.quad_degree;
  opts.corner_boost = mc.corner_quadrature_boost;
  if (opts.corner_degree < cfg.quad_degree) opts.corner_degree = cfg.quad_degree;
  timer.lap("setup");

  if (cfg.command == "study") {
    stage = "study";
    std::optional<NoiseSpec> noise;
    if (cfg.delta > 0.0) noise = NoiseSpec{cfg.delta, cfg.seed};
    StudyReport report =
        run_study(mc, cfg.element, cfg.reg_k, cfg.element, cfg.alphas, cfg.levels, ms, noise);
    timer.lap("study");
    stage = "report";
    write_text_file(dir / "table.csv", [&](std::ostream& o) { write_report_csv(report, o); });
    write_text_file(dir / "table.txt", [&](std::ostream& o) { write_report_table(report, o); });
    timer.lap("report");
    write_manifest(dir, config_json(cfg, ms, cfg.alphas, cfg.levels), timer);
    return 0;
  }

  stage = "mesh";
  std::shared_ptr<const Mesh> mesh = base_mesh(mc.domain, cfg.element);
  for (int i = 1; i < cfg.levels; ++i) {
    mesh = std::make_shared<const Mesh>(red_refine(*mesh));
  }
  timer.lap("mesh");
  stage = "solve";
  FemFunction u = solve_forward(mesh, cfg.element, mc.f, opts);
  timer.lap("solve");
  stage = "measure";
  DenseVector m = apply_measurement(ms, u, meas_degree);
  timer.lap("measure");

  if (cfg.command == "forward") {
    stage = "report";
    write_text_file(dir / "table.csv", [&](std::ostream& o) {
      o << "level,h,ndof";
      for (int i = 0; i < m.size(); ++i) o << ",m_" << i + 1;
      o << "\n" << cfg.levels << ',' << csv_num(mesh_size(*mesh)) << ',' << u.dof_map->n_free;
      for (int i = 0; i < m.size(); ++i) o << ',' << csv_num(m[i]);
      o << "\n";
    });
    write_text_file(dir / "table.txt", [&](std::ostream& o) {
      o << "level " << cfg.levels << ", h = " << csv_num(mesh_size(*mesh))
        << ", ndof = " << u.dof_map->n_free << "\n";
      for (int i = 0; i < m.size(); ++i) o << "m_" << i + 1 << " = " << csv_num(m[i]) << "\n";
    });
    timer.lap("report");
    write_manifest(dir, config_json(cfg, ms, cfg.alphas, cfg.levels), timer);
    return 0;
  }

  stage = "reconstruct";
  DenseVector data = add_noise(m, cfg.delta, cfg.seed);
  DenseMatrix w = build_w(mesh, cfg.element, cfg.element, ms);
  SparseMatrix c = assemble_regularizer(*mesh, cfg.element, regularization_from_k(cfg.reg_k));
  auto source_map = std::make_shared<DofMap>(build_dof_map(*mesh, cfg.element));
  struct InvRow {
    double alpha, misfit, penalty, source_norm;
  };
  std::vector<InvRow> rows;
  for (double alpha : cfg.alphas) {
    InverseProblem ip{w, c, data, alpha, mesh, cfg.element, source_map};
    FemFunction f = reconstruct(ip);
    double misfit = (w * f.coeffs - data).norm();
    double penalty = std::sqrt(f.coeffs.dot(DenseVector(c * f.coeffs)));
    rows.push_back({alpha, misfit, penalty, fem_norm(f, 0)});
  }
  timer.lap("reconstruct");
  stage = "report";
  write_text_file(dir / "table.csv", [&](std::ostream& o) {
    o << "alpha,misfit,penalty,source_norm\n";
    for (const InvRow& r : rows) {
      o << csv_num(r.alpha) << ',' << csv_num(r.misfit) << ',' << csv_num(r.penalty) << ','
        << csv_num(r.source_norm) << "\n";
    }
  });
  write_text_file(dir / "table.txt", [&](std::ostream& o) {
    o << "level " << cfg.levels << ", ndof = " << source_map->n_free << "\n";
    for (const InvRow& r : rows) {
      o << "alpha = " << csv_num(r.alpha) << "  misfit = " << csv_num(r.misfit)
        << "  penalty = " << csv_num(r.penalty) << "  |f|_0 = " << csv_num(r.source_norm)
        << "\n";
    }
  });
  timer.lap("report");
  write_manifest(dir, config_json(cfg, ms, cfg.alphas, cfg.levels), timer);
  return 0;
}

}  // namespace

int run(const RunConfig& config) {
  const char* stage = "setup";
  try {
    return run_impl(config, stage);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "plateinv: %s stage failed: %s\n", stage, e.what());
    return 1;
  }
}

}  // namespace plateinv
