#include "dmnls/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "dmnls/random.hpp"
#include "dmnls/snapshot.hpp"
#include "dmnls/stability.hpp"

namespace dmnls {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json* object_section(const json& j, const char* key) {
  const json* v = find(j, key);
  if (v && !v->is_object()) fail(key, "expected an object");
  return v;
}

double get_double(const json& j, const std::string& path, const char* key,
                  double def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number()) fail(path + "." + key, "expected a number");
  return v->get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
  return v->get<int>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       const std::string& def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_string()) fail(path + "." + key, "expected a string");
  return v->get<std::string>();
}

void parse_grid(const json& j, ExperimentConfig& c) {
  check_keys(j, "grid", {"L_box", "n_points"});
  c.L_box = get_double(j, "grid", "L_box", c.L_box);
  c.n_points = get_int(j, "grid", "n_points", c.n_points);
  if (!(c.L_box > 0.0)) fail("grid.L_box", "must be positive");
  if (c.n_points < 8 || c.n_points % 2 != 0)
    fail("grid.n_points", "must be even and at least 8");
}

void parse_nonlinearity(const json& j, ExperimentConfig& c) {
  check_keys(j, "nonlinearity", {"kind", "p", "delta", "kappa"});
  c.nl_kind = get_string(j, "nonlinearity", "kind", c.nl_kind);
  const bool has_p = find(j, "p"), has_delta = find(j, "delta"),
             has_kappa = find(j, "kappa");
  if (c.nl_kind == "kerr" || c.nl_kind == "saturating") {
    if (has_p || has_delta || has_kappa)
      fail("nonlinearity", "kind " + c.nl_kind + " takes no parameters");
  } else if (c.nl_kind == "power") {
    if (!has_p) fail("nonlinearity.p", "required for kind power");
    if (has_delta || has_kappa)
      fail("nonlinearity", "kind power takes only p");
    c.nl_p = get_double(j, "nonlinearity", "p", 0.0);
    if (!(c.nl_p > 0.0) || c.nl_p > 4.0)
      fail("nonlinearity.p", "must satisfy 0 < p <= 4");
  } else if (c.nl_kind == "oscillating") {
    if (!has_delta || !has_kappa)
      fail("nonlinearity", "kind oscillating needs delta and kappa");
    if (has_p) fail("nonlinearity.p", "derived for kind oscillating");
    c.nl_delta = get_double(j, "nonlinearity", "delta", 0.0);
    c.nl_kappa = get_double(j, "nonlinearity", "kappa", 0.0);
    if (!(c.nl_kappa > 0.0) || !(c.nl_delta > c.nl_kappa))
      fail("nonlinearity", "need 0 < kappa < delta");
  } else {
    fail("nonlinearity.kind",
         "must be kerr, power, saturating, or oscillating");
  }
}

void parse_dispersion(const json& root, ExperimentConfig& c) {
  const json* profile = object_section(root, "profile");
  const json* psi = object_section(root, "psi");
  if (profile && psi) fail("profile", "give either profile or psi, not both");

  bool d_av_set = false;
  if (const json* v = find(root, "d_av")) {
    if (!v->is_number()) fail("d_av", "expected a number");
    c.d_av = v->get<double>();
    d_av_set = true;
  }

  if (profile) {
    check_keys(*profile, "profile", {"d_av", "segments"});
    if (const json* v = find(*profile, "d_av")) {
      if (!v->is_number()) fail("profile.d_av", "expected a number");
      const double pd = v->get<double>();
      if (d_av_set && pd != c.d_av)
        fail("profile.d_av", "conflicts with top-level d_av");
      c.d_av = pd;
    }
    const json* segs = find(*profile, "segments");
    if (!segs || !segs->is_array() || segs->empty())
      fail("profile.segments", "expected a non-empty array of [tau, slope]");
    c.segments.clear();
    for (const json& s : *segs) {
      if (!s.is_array() || s.size() != 2 || !s[0].is_number() ||
          !s[1].is_number())
        fail("profile.segments", "each entry must be [tau, slope]");
      c.segments.push_back({s[0].get<double>(), s[1].get<double>()});
    }
  }
  if (psi) {
    check_keys(*psi, "psi", {"pieces"});
    const json* pieces = find(*psi, "pieces");
    if (!pieces || !pieces->is_array() || pieces->empty())
      fail("psi.pieces", "expected a non-empty array of [r_lo, r_hi, density]");
    c.use_psi = true;
    c.psi_pieces.clear();
    for (const json& p : *pieces) {
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() ||
          !p[1].is_number() || !p[2].is_number())
        fail("psi.pieces", "each entry must be [r_lo, r_hi, density]");
      c.psi_pieces.push_back(
          {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
  }

  // Validate the resulting measure here so errors carry a field path.
  if (c.use_psi) {
    PsiMeasure m;
    try {
      m = psi_from_pieces(c.psi_pieces);
    } catch (const std::invalid_argument& e) {
      fail("psi.pieces", e.what());
    }
    if (std::abs(m.total_mass - 1.0) > 1e-10) {
      std::ostringstream os;
      os << "total mass is " << m.total_mass
         << " but a probability density (mass 1) is required";
      fail("psi.pieces", os.str());
    }
  } else {
    try {
      make_profile(c.d_av, c.segments);
    } catch (const std::invalid_argument& e) {
      std::string what = e.what();
      if (what.rfind("profile: ", 0) == 0) what = what.substr(9);
      fail("profile.segments", what);
    }
  }
}

void parse_quadrature(const json& j, ExperimentConfig& c) {
  check_keys(j, "quadrature", {"rule", "nodes_per_piece"});
  c.quad_rule = get_string(j, "quadrature", "rule", c.quad_rule);
  try {
    quadrature_rule_from_name(c.quad_rule);
  } catch (const std::invalid_argument& e) {
    fail("quadrature.rule", e.what());
  }
  c.nodes_per_piece = get_int(j, "quadrature", "nodes_per_piece", c.nodes_per_piece);
  if (c.nodes_per_piece < 1) fail("quadrature.nodes_per_piece", "must be >= 1");
}

void parse_evolution(const json& j, ExperimentConfig& c) {
  check_keys(j, "evolution",
             {"dt", "t_end", "integrator", "stride", "blowup_threshold",
              "dealias", "snapshot_stride"});
  EvolutionConfig& e = c.evolution;
  e.dt = get_double(j, "evolution", "dt", e.dt);
  if (!(e.dt > 0.0)) fail("evolution.dt", "must be positive");
  e.t_end = get_double(j, "evolution", "t_end", e.t_end);
  if (!(e.t_end > 0.0)) fail("evolution.t_end", "must be positive");
  const std::string integ =
      get_string(j, "evolution", "integrator", integrator_name(e.integrator));
  try {
    e.integrator = integrator_from_name(integ);
  } catch (const std::invalid_argument& ex) {
    fail("evolution.integrator", ex.what());
  }
  e.stride = get_int(j, "evolution", "stride", e.stride);
  if (e.stride < 1) fail("evolution.stride", "must be >= 1");
  e.blowup_threshold =
      get_double(j, "evolution", "blowup_threshold", e.blowup_threshold);
  if (e.blowup_threshold < 0.0)
    fail("evolution.blowup_threshold", "must be >= 0 (0 = automatic)");
  if (const json* v = find(j, "dealias")) {
    if (!v->is_boolean()) fail("evolution.dealias", "expected a boolean");
    e.dealias = v->get<bool>();
  }
  e.snapshot_stride = get_int(j, "evolution", "snapshot_stride", e.snapshot_stride);
  if (e.snapshot_stride < 0) fail("evolution.snapshot_stride", "must be >= 0");
}

void parse_initial(const json& j, ExperimentConfig& c) {
  check_keys(j, "initial", {"kind", "amplitude", "width", "center", "chirp", "path"});
  InitialSpec& init = c.initial;
  init.kind = get_string(j, "initial", "kind", init.kind);
  if (init.kind == "gaussian") {
    if (find(j, "path")) fail("initial.path", "only valid for kind snapshot");
    init.amplitude = get_double(j, "initial", "amplitude", init.amplitude);
    init.width = get_double(j, "initial", "width", init.width);
    init.center = get_double(j, "initial", "center", init.center);
    init.chirp = get_double(j, "initial", "chirp", init.chirp);
    if (!(init.width > 0.0)) fail("initial.width", "must be positive");
    if (!(init.amplitude >= 0.0)) fail("initial.amplitude", "must be >= 0");
  } else if (init.kind == "snapshot") {
    init.path = get_string(j, "initial", "path", "");
    if (init.path.empty()) fail("initial.path", "required for kind snapshot");
    for (const char* k : {"amplitude", "width", "center", "chirp"})
      if (find(j, k))
        fail(std::string("initial.") + k, "only valid for kind gaussian");
  } else {
    fail("initial.kind", "must be gaussian or snapshot");
  }
}

void parse_groundstate(const json& j, ExperimentConfig& c) {
  check_keys(j, "groundstate", {"lambda", "tol", "max_iter", "init_width"});
  GroundStateConfig& g = c.groundstate;
  g.lambda = get_double(j, "groundstate", "lambda", g.lambda);
  if (!(g.lambda > 0.0)) fail("groundstate.lambda", "must be positive");
  g.tol = get_double(j, "groundstate", "tol", g.tol);
  if (!(g.tol > 0.0)) fail("groundstate.tol", "must be positive");
  g.max_iter = get_int(j, "groundstate", "max_iter", g.max_iter);
  if (g.max_iter < 1) fail("groundstate.max_iter", "must be >= 1");
  g.init_width = get_double(j, "groundstate", "init_width", g.init_width);
  if (g.init_width < 0.0)
    fail("groundstate.init_width", "must be >= 0 (0 = automatic)");
}

void parse_stability(const json& j, ExperimentConfig& c) {
  check_keys(j, "stability",
             {"delta", "kind", "mode_k", "t_end", "dt", "stride", "k_stab",
              "accept_residual", "groundstate_path"});
  StabilityConfig& s = c.stability;
  s.delta = get_double(j, "stability", "delta", s.delta);
  if (!(s.delta > 0.0)) fail("stability.delta", "must be positive");
  s.kind = get_string(j, "stability", "kind", s.kind);
  try {
    perturbation_from_name(s.kind);
  } catch (const std::invalid_argument& e) {
    fail("stability.kind", e.what());
  }
  s.mode_k = get_int(j, "stability", "mode_k", s.mode_k);
  s.t_end = get_double(j, "stability", "t_end", s.t_end);
  s.dt = get_double(j, "stability", "dt", s.dt);
  if (!(s.t_end > 0.0)) fail("stability.t_end", "must be positive");
  if (!(s.dt > 0.0)) fail("stability.dt", "must be positive");
  s.stride = get_int(j, "stability", "stride", s.stride);
  if (s.stride < 1) fail("stability.stride", "must be >= 1");
  s.k_stab = get_double(j, "stability", "k_stab", s.k_stab);
  if (!(s.k_stab > 0.0)) fail("stability.k_stab", "must be positive");
  s.accept_residual = get_double(j, "stability", "accept_residual", s.accept_residual);
  if (!(s.accept_residual > 0.0))
    fail("stability.accept_residual", "must be positive");
  s.groundstate_path = get_string(j, "stability", "groundstate_path", s.groundstate_path);
}

void parse_audit(const json& j, ExperimentConfig& c) {
  check_keys(j, "audit",
             {"assumptions", "a_min", "a_max", "n_samples", "p0", "p_table"});
  AuditConfig& a = c.audit;
  if (const json* v = find(j, "assumptions")) {
    if (!v->is_array()) fail("audit.assumptions", "expected an array");
    a.assumptions.clear();
    for (const json& id : *v) {
      if (!id.is_string()) fail("audit.assumptions", "entries must be strings");
      const std::string s = id.get<std::string>();
      if (s.size() != 2 || s[0] != 'A' || s[1] < '1' || s[1] > '6')
        fail("audit.assumptions", "unknown assumption id " + s);
      a.assumptions.push_back(s);
    }
    if (a.assumptions.empty()) fail("audit.assumptions", "must not be empty");
  }
  a.a_min = get_double(j, "audit", "a_min", a.a_min);
  a.a_max = get_double(j, "audit", "a_max", a.a_max);
  if (!(a.a_min > 0.0) || !(a.a_max > a.a_min))
    fail("audit.a_min", "need 0 < a_min < a_max");
  a.n_samples = get_int(j, "audit", "n_samples", a.n_samples);
  if (a.n_samples < 100) fail("audit.n_samples", "must be >= 100");
  a.p0 = get_double(j, "audit", "p0", a.p0);
  if (const json* v = find(j, "p_table")) {
    if (!v->is_array()) fail("audit.p_table", "expected an array of [a, p]");
    a.p_table.clear();
    for (const json& row : *v) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
          !row[1].is_number())
        fail("audit.p_table", "each entry must be [a, p]");
      a.p_table.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    for (size_t i = 0; i < a.p_table.size(); ++i) {
      if (!(a.p_table[i].second > 2.0))
        fail("audit.p_table", "p values must be > 2");
      if (i > 0 && !(a.p_table[i].first > a.p_table[i - 1].first))
        fail("audit.p_table", "a values must be increasing");
      if (i > 0 && a.p_table[i].second > a.p_table[i - 1].second)
        fail("audit.p_table", "p values must be decreasing");
    }
  }
  for (const std::string& id : a.assumptions) {
    if (id == "A4" && !(a.p0 > 2.0)) fail("audit.p0", "A4 needs p0 > 2");
    if (id == "A5" && a.p_table.empty())
      fail("audit.p_table", "A5 needs the decreasing exponent profile");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  check_keys(j, "",
             {"grid", "nonlinearity", "d_av", "profile", "psi", "quadrature",
              "evolution", "initial", "groundstate", "stability", "audit",
              "seed"});
  ExperimentConfig c;
  if (const json* v = object_section(j, "grid")) parse_grid(*v, c);
  if (const json* v = object_section(j, "nonlinearity")) parse_nonlinearity(*v, c);
  parse_dispersion(j, c);
  if (const json* v = object_section(j, "quadrature")) parse_quadrature(*v, c);
  if (const json* v = object_section(j, "evolution")) parse_evolution(*v, c);
  if (const json* v = object_section(j, "initial")) parse_initial(*v, c);
  if (const json* v = object_section(j, "groundstate")) parse_groundstate(*v, c);
  if (const json* v = object_section(j, "stability")) parse_stability(*v, c);
  if (const json* v = object_section(j, "audit")) parse_audit(*v, c);
  if (const json* v = find(j, "seed")) {
    if (!v->is_number_unsigned() && !v->is_number_integer())
      throw ConfigError("seed: expected a non-negative integer");
    if (v->is_number_integer() && v->get<int64_t>() < 0)
      throw ConfigError("seed: expected a non-negative integer");
    c.seed = v->get<uint64_t>();
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_echo_json(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"L_box", c.L_box}, {"n_points", c.n_points}};
  json nl = {{"kind", c.nl_kind}};
  if (c.nl_kind == "power") nl["p"] = c.nl_p;
  if (c.nl_kind == "oscillating") {
    nl["delta"] = c.nl_delta;
    nl["kappa"] = c.nl_kappa;
  }
  j["nonlinearity"] = nl;
  j["d_av"] = c.d_av;
  if (c.use_psi) {
    json pieces = json::array();
    for (const PsiPiece& p : c.psi_pieces)
      pieces.push_back({p.r_lo, p.r_hi, p.density});
    j["psi"] = {{"pieces", pieces}};
  } else {
    json segs = json::array();
    for (const DispersionSegment& s : c.segments)
      segs.push_back({s.tau, s.slope});
    j["profile"] = {{"segments", segs}};
  }
  j["quadrature"] = {{"rule", c.quad_rule},
                     {"nodes_per_piece", c.nodes_per_piece}};
  const bool dealias =
      c.evolution.dealias ? *c.evolution.dealias : (c.nl_kind == "kerr");
  j["evolution"] = {{"dt", c.evolution.dt},
                    {"t_end", c.evolution.t_end},
                    {"integrator", integrator_name(c.evolution.integrator)},
                    {"stride", c.evolution.stride},
                    {"blowup_threshold", c.evolution.blowup_threshold},
                    {"dealias", dealias},
                    {"snapshot_stride", c.evolution.snapshot_stride}};
  if (c.initial.kind == "gaussian") {
    j["initial"] = {{"kind", "gaussian"},
                    {"amplitude", c.initial.amplitude},
                    {"width", c.initial.width},
                    {"center", c.initial.center},
                    {"chirp", c.initial.chirp}};
  } else {
    j["initial"] = {{"kind", "snapshot"}, {"path", c.initial.path}};
  }
  j["groundstate"] = {{"lambda", c.groundstate.lambda},
                      {"tol", c.groundstate.tol},
                      {"max_iter", c.groundstate.max_iter},
                      {"init_width", c.groundstate.init_width}};
  json st = {{"delta", c.stability.delta},
             {"kind", c.stability.kind},
             {"mode_k", c.stability.mode_k},
             {"t_end", c.stability.t_end},
             {"dt", c.stability.dt},
             {"stride", c.stability.stride},
             {"k_stab", c.stability.k_stab},
             {"accept_residual", c.stability.accept_residual}};
  if (!c.stability.groundstate_path.empty())
    st["groundstate_path"] = c.stability.groundstate_path;
  j["stability"] = st;
  json au = {{"assumptions", c.audit.assumptions},
             {"a_min", c.audit.a_min},
             {"a_max", c.audit.a_max},
             {"n_samples", c.audit.n_samples},
             {"p0", c.audit.p0}};
  if (!c.audit.p_table.empty()) {
    json table = json::array();
    for (const auto& [a, p] : c.audit.p_table) table.push_back({a, p});
    au["p_table"] = table;
  }
  j["audit"] = au;
  j["seed"] = c.seed;
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string echo = config_echo_json(c);
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : echo) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

NonlinearitySpec build_nonlinearity(const ExperimentConfig& c) {
  if (c.nl_kind == "kerr") return kerr_nonlinearity();
  if (c.nl_kind == "power") return power_nonlinearity(c.nl_p);
  if (c.nl_kind == "saturating") return saturating_nonlinearity();
  return oscillating_nonlinearity(c.nl_delta, c.nl_kappa);
}

Experiment build_experiment(const ExperimentConfig& c) {
  Experiment ex;
  ex.grid = make_grid(c.L_box, c.n_points);
  ex.spec = build_nonlinearity(c);
  ex.psi = c.use_psi ? psi_from_pieces(c.psi_pieces)
                     : psi_from_profile(make_profile(c.d_av, c.segments));
  ex.quad =
      quadrature(ex.psi, c.nodes_per_piece, quadrature_rule_from_name(c.quad_rule));
  const bool dealias =
      c.evolution.dealias ? *c.evolution.dealias : (c.nl_kind == "kerr");
  ex.ctx = make_context(ex.grid, ex.spec, ex.quad, c.d_av, dealias);
  return ex;
}

Field build_initial(const ExperimentConfig& c, const GridPtr& grid) {
  if (c.initial.kind == "gaussian")
    return gaussian_field(grid, c.initial.amplitude, c.initial.width,
                          c.initial.center, c.initial.chirp);
  Snapshot snap;
  try {
    snap = read_snapshot(c.initial.path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(std::string("initial.path: ") + e.what());
  }
  if (snap.field.grid->n_points() != grid->n_points() ||
      snap.field.grid->half_width() != grid->half_width()) {
    std::ostringstream os;
    os << "initial.path: snapshot grid (L_box=" << snap.field.grid->half_width()
       << ", n_points=" << snap.field.grid->n_points()
       << ") does not match the configured grid";
    throw ConfigError(os.str());
  }
  return Field{grid, std::move(snap.field.values)};
}

}  // namespace dmnls
