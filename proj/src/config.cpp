#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "plurikit/cli.hpp"
#include "plurikit/errors.hpp"

namespace plurikit {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// A JSON object whose keys must all be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_->contains(key); }

  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(key_path(key), "missing required key");
    used_.insert(key);
    return j_->at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(raw(key), key_path(key));
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(key_path(key), "missing required key");
    return as<T>(raw(key), key_path(key));
  }

  Section child(const std::string& key) { return Section(raw(key), key_path(key)); }

  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

  template <class T>
  static T as(const json& v, const std::string& path) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(path, "expected a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path, "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path, "wrong type");
    }
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(Section::as<double>(v[i], index_path(path, i)));
  return out;
}

// Accepts "auto" (returns fallback) or a number.
double auto_or_number(Section& s, const std::string& key, double fallback) {
  if (!s.has(key)) return fallback;
  const json& v = s.raw(key);
  if (v.is_string() && v.get<std::string>() == "auto") return fallback;
  return Section::as<double>(v, s.key_path(key));
}

void positive(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

LatticePolytope parse_polytope(Section s) {
  if (s.has("segment")) {
    const auto seg = number_list(s.raw("segment"), s.key_path("segment"));
    if (seg.size() != 2 || seg[0] != std::floor(seg[0]) || seg[1] != std::floor(seg[1]) || !(seg[0] < seg[1])) {
      throw ConfigError(s.key_path("segment"), "expected integers [lo, hi] with lo < hi");
    }
    s.finish();
    return LatticePolytope::segment(static_cast<long>(seg[0]), static_cast<long>(seg[1]));
  }
  if (s.has("vertices")) {
    const std::string path = s.key_path("vertices");
    const json& v = s.raw("vertices");
    if (!v.is_array() || v.size() < 3) throw ConfigError(path, "expected at least three [x, y] integer points");
    std::vector<Lattice2> pts;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto p = number_list(v[i], index_path(path, i));
      if (p.size() != 2 || p[0] != std::floor(p[0]) || p[1] != std::floor(p[1])) {
        throw ConfigError(index_path(path, i), "expected an integer point [x, y]");
      }
      pts.push_back({static_cast<long>(p[0]), static_cast<long>(p[1])});
    }
    s.finish();
    try {
      return LatticePolytope::polygon(std::move(pts));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
  }
  throw ConfigError(s.key_path("segment"), "polytope needs `segment` or `vertices`");
}

std::vector<Bump> parse_bumps(const json& v, const std::string& path, int dim) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<Bump> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Section b(v[i], index_path(path, i));
    Bump bump;
    const auto c = number_list(b.raw("center"), b.key_path("center"));
    if (static_cast<int>(c.size()) != dim) {
      throw ConfigError(b.key_path("center"), "expected " + std::to_string(dim) + " coordinates");
    }
    bump.center = {c[0], dim == 2 ? c[1] : 0.0};
    bump.radius = b.require<double>("radius");
    bump.amplitude = b.require<double>("amplitude");
    bump.smoothness = b.get<int>("smoothness", 3);
    positive(bump.radius > 0.0, b.key_path("radius"), "must be positive");
    positive(bump.smoothness >= 3, b.key_path("smoothness"), "must be at least 3");
    b.finish();
    out.push_back(bump);
  }
  return out;
}

GridDomain default_grid(const WeightSpec& w, bool envelope) {
  if (!w.is_toric()) return GridDomain::chart(-3.0, 3.0, 96, 96);
  if (w.dimension() == 1) {
    return envelope ? GridDomain::vbox1(-14.0, 14.0, 2801) : GridDomain::vbox1(-12.0, 12.0, 2401);
  }
  return envelope ? GridDomain::vbox2({-10.0, -10.0}, {10.0, 10.0}, {201, 201})
                  : GridDomain::vbox2({-8.0, -8.0}, {8.0, 8.0}, {81, 81});
}

GridDomain parse_grid(Section s, const WeightSpec& w) {
  GridDomain d;
  if (!w.is_toric()) {
    const double s_min = s.require<double>("s_min");
    const double s_max = s.require<double>("s_max");
    const auto n_s = s.require<long>("n_s");
    const auto n_t = s.require<long>("n_theta");
    positive(s_min < s_max, s.key_path("s_max"), "must exceed s_min");
    positive(n_s >= 3, s.key_path("n_s"), "must be at least 3");
    positive(n_t >= 4, s.key_path("n_theta"), "must be at least 4");
    d = GridDomain::chart(s_min, s_max, static_cast<std::size_t>(n_s), static_cast<std::size_t>(n_t));
  } else if (w.dimension() == 1) {
    const double lo = s.require<double>("lo");
    const double hi = s.require<double>("hi");
    const auto n = s.require<long>("n");
    positive(lo < hi, s.key_path("hi"), "must exceed lo");
    positive(n >= 3, s.key_path("n"), "must be at least 3");
    d = GridDomain::vbox1(lo, hi, static_cast<std::size_t>(n));
  } else {
    const auto lo = number_list(s.raw("lo"), s.key_path("lo"));
    const auto hi = number_list(s.raw("hi"), s.key_path("hi"));
    const auto n = number_list(s.raw("n"), s.key_path("n"));
    if (lo.size() != 2 || hi.size() != 2 || n.size() != 2) throw ConfigError(s.key_path("lo"), "expected pairs");
    for (int a = 0; a < 2; ++a) {
      positive(lo[a] < hi[a], s.key_path("hi"), "must exceed lo");
      positive(n[a] >= 3 && n[a] == std::floor(n[a]), s.key_path("n"), "must be integers >= 3");
    }
    d = GridDomain::vbox2({lo[0], lo[1]}, {hi[0], hi[1]},
                          {static_cast<std::size_t>(n[0]), static_cast<std::size_t>(n[1])});
  }
  s.finish();
  return d;
}

TestFunction parse_test_function(Section s, TestFunction t) {
  t.s = s.get<double>("s", t.s);
  t.theta = s.get<double>("theta", t.theta);
  t.s_radius = s.get<double>("s_radius", t.s_radius);
  t.theta_radius = s.get<double>("theta_radius", t.theta_radius);
  positive(t.s_radius > 0.0, s.key_path("s_radius"), "must be positive");
  s.finish();
  return t;
}

void check_bump_reach(RunConfig& c) {
  const auto& bumps = c.weight.bumps();
  for (std::size_t i = 0; i < bumps.size(); ++i) {
    const Bump& b = bumps[i];
    const std::string key = "weight.bumps[" + std::to_string(i) + "]";
    if (c.weight.is_toric()) {
      for (const auto* g : {&c.envelope_grid, &c.eval_grid}) {
        for (int a = 0; a < g->dim; ++a) {
          if (b.center[a] - b.radius < g->lo[a] || b.center[a] + b.radius > g->hi[a]) {
            c.warnings.push_back(key + ": support overlaps the v-box edge of grid." +
                                 (g == &c.envelope_grid ? "envelope" : "eval"));
            break;
          }
        }
      }
    } else {
      const double reach = std::hypot(b.center[0], b.center[1]) + b.radius;
      if (reach > 0.5 * std::exp(c.envelope_grid.hi[0])) {
        c.warnings.push_back(key + ": support reaches beyond half the chart radius e^s_max");
      }
    }
  }
}

ojson grid_json(const GridDomain& d) {
  ojson g;
  if (d.kind == GridDomain::Kind::Chart) {
    g["s_min"] = d.lo[0];
    g["s_max"] = d.hi[0];
    g["n_s"] = d.count[0];
    g["n_theta"] = d.count[1];
  } else if (d.dim == 1) {
    g["lo"] = d.lo[0];
    g["hi"] = d.hi[0];
    g["n"] = d.count[0];
  } else {
    g["lo"] = {d.lo[0], d.lo[1]};
    g["hi"] = {d.hi[0], d.hi[1]};
    g["n"] = {d.count[0], d.count[1]};
  }
  return g;
}

ojson test_function_json(const TestFunction& t) {
  ojson j;
  j["s"] = t.s;
  j["theta"] = t.theta;
  j["s_radius"] = t.s_radius;
  j["theta_radius"] = t.theta_radius;
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }
  Section s(root, "");
  RunConfig c;
  c.name = s.get<std::string>("name", c.name);
  c.workers = s.get<int>("workers", c.workers);
  positive(c.workers >= 1, "workers", "must be at least 1");

  {
    Section w = s.child("weight");
    c.weight_kind = w.require<std::string>("kind");
    if (c.weight_kind == "toric" || c.weight_kind == "perturbed_toric") {
      const LatticePolytope p = parse_polytope(w.child("polytope"));
      if (c.weight_kind == "toric") {
        c.weight = WeightSpec::toric(p);
      } else {
        c.weight = WeightSpec::perturbed_toric(
            p, w.has("bumps") ? parse_bumps(w.raw("bumps"), w.key_path("bumps"), p.dimension()) : std::vector<Bump>{});
      }
    } else if (c.weight_kind == "fs_chart") {
      c.weight = WeightSpec::fs_chart();
    } else if (c.weight_kind == "perturbed_chart") {
      c.weight = WeightSpec::perturbed_chart(
          w.has("bumps") ? parse_bumps(w.raw("bumps"), w.key_path("bumps"), 2) : std::vector<Bump>{});
    } else {
      throw ConfigError("weight.kind", "expected toric, perturbed_toric, fs_chart or perturbed_chart");
    }
    w.finish();
  }

  c.envelope_grid = default_grid(c.weight, true);
  c.eval_grid = c.weight.is_toric() ? default_grid(c.weight, false) : c.envelope_grid;
  if (s.has("grid")) {
    Section g = s.child("grid");
    if (g.has("envelope")) c.envelope_grid = parse_grid(g.child("envelope"), c.weight);
    c.eval_grid = c.weight.is_toric() ? default_grid(c.weight, false) : c.envelope_grid;
    if (g.has("eval")) c.eval_grid = parse_grid(g.child("eval"), c.weight);
    g.finish();
  }

  c.k_list = {8, 16, 32, 64};
  if (s.has("k_list")) {
    const json& v = s.raw("k_list");
    if (!v.is_array() || v.empty()) throw ConfigError("k_list", "expected a non-empty array");
    c.k_list.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const long k = Section::as<long>(v[i], index_path("k_list", i));
      if (k < 1) throw ConfigError("k", "must be a positive integer (k_list[" + std::to_string(i) + "] = " +
                                            std::to_string(k) + ")");
      if (!c.k_list.empty() && k <= c.k_list.back()) throw ConfigError("k_list", "must be strictly increasing");
      c.k_list.push_back(k);
    }
  }

  if (s.has("tolerances")) {
    Section t = s.child("tolerances");
    c.quad.tol = t.get<double>("quad_tol", c.quad.tol);
    c.quad.gl_order = t.get<int>("gl_order", c.quad.gl_order);
    c.quad.max_doublings = t.get<int>("max_doublings", c.quad.max_doublings);
    c.quad.v0 = auto_or_number(t, "v0", c.quad.v0);
    c.quad.n_theta = t.get<int>("n_theta", c.quad.n_theta);
    c.envelope.dual_factor = t.get<int>("dual_factor", c.envelope.dual_factor);
    c.envelope.slope_tol = auto_or_number(t, "slope_tol", c.envelope.slope_tol);
    c.envelope.eps_D = auto_or_number(t, "eps_D", c.envelope.eps_D);
    c.envelope.sor_omega = t.get<double>("sor_omega", c.envelope.sor_omega);
    c.envelope.tol_sor = t.get<double>("tol_sor", c.envelope.tol_sor);
    c.envelope.max_iterations = t.get<long>("max_iterations", c.envelope.max_iterations);
    positive(c.quad.tol > 0.0, "tolerances.quad_tol", "must be positive");
    positive(c.quad.gl_order >= 2, "tolerances.gl_order", "must be at least 2");
    positive(c.quad.max_doublings >= 0, "tolerances.max_doublings", "must be non-negative");
    positive(c.quad.n_theta >= 0, "tolerances.n_theta", "must be non-negative");
    positive(c.envelope.dual_factor >= 4, "tolerances.dual_factor", "must be at least 4");
    positive(c.envelope.sor_omega > 0.0 && c.envelope.sor_omega < 2.0, "tolerances.sor_omega", "must lie in (0, 2)");
    positive(c.envelope.tol_sor > 0.0, "tolerances.tol_sor", "must be positive");
    positive(c.envelope.max_iterations > 0, "tolerances.max_iterations", "must be positive");
    t.finish();
  }

  if (s.has("tzc")) {
    Section t = s.child("tzc");
    if (t.has("window")) {
      const std::string path = t.key_path("window");
      const json& v = t.raw("window");
      if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected [lo, hi]");
      for (int e = 0; e < 2; ++e) {
        Vec2& target = e == 0 ? c.tzc.lo : c.tzc.hi;
        if (v[e].is_array()) {
          const auto p = number_list(v[e], index_path(path, e));
          if (p.size() != 2) throw ConfigError(index_path(path, e), "expected [x, y]");
          target = {p[0], p[1]};
        } else {
          const double x = Section::as<double>(v[e], index_path(path, e));
          target = {x, x};
        }
      }
    }
    c.tzc.nodes = static_cast<std::size_t>(t.get<long>("nodes", static_cast<long>(c.tzc.nodes)));
    positive(c.tzc.nodes >= 1, t.key_path("nodes"), "must be positive");
    if (t.has("k_list")) {
      const auto ks = number_list(t.raw("k_list"), t.key_path("k_list"));
      for (double k : ks) {
        if (k < 1 || k != std::floor(k)) throw ConfigError("k", "tzc.k_list entries must be positive integers");
        c.tzc.k_list.push_back(static_cast<long>(k));
      }
    }
    t.finish();
  }

  if (s.has("offdiag")) {
    Section o = s.child("offdiag");
    if (o.has("on")) c.offdiag.on = parse_test_function(o.child("on"), c.offdiag.on);
    if (o.has("off_f")) c.offdiag.off_f = parse_test_function(o.child("off_f"), c.offdiag.off_f);
    if (o.has("off_g")) c.offdiag.off_g = parse_test_function(o.child("off_g"), c.offdiag.off_g);
    c.offdiag.reproducing_points =
        static_cast<std::size_t>(o.get<long>("reproducing_points", static_cast<long>(c.offdiag.reproducing_points)));
    o.finish();
  }

  if (s.has("gates")) {
    Section g = s.child("gates");
    Gates& x = c.gates;
    x.mass_identity = g.get<double>("mass_identity", x.mass_identity);
    x.volume_rel = g.get<double>("volume_rel", x.volume_rel);
    x.off_contact_fraction = g.get<double>("off_contact_fraction", x.off_contact_fraction);
    x.l1_last = g.get<double>("l1_last", x.l1_last);
    x.volume_cdf = g.get<double>("volume_cdf", x.volume_cdf);
    x.metric_fit_levels = g.get<long>("metric_fit_levels", x.metric_fit_levels);
    x.tzc_spread = g.get<double>("tzc_spread", x.tzc_spread);
    x.tchebishev_rel = g.get<double>("tchebishev_rel", x.tchebishev_rel);
    x.decay_mid_rel = g.get<double>("decay_mid_rel", x.decay_mid_rel);
    x.decay_k = g.get<long>("decay_k", x.decay_k);
    x.offdiag_disjoint = g.get<double>("offdiag_disjoint", x.offdiag_disjoint);
    x.offdiag_on_rel = g.get<double>("offdiag_on_rel", x.offdiag_on_rel);
    x.reproducing = g.get<double>("reproducing", x.reproducing);
    positive(x.metric_fit_levels >= 1, "gates.metric_fit_levels", "must be positive");
    g.finish();
  }
  s.finish();

  if (c.weight.is_toric() && c.envelope_grid.dim != c.weight.dimension()) {
    throw ConfigError("grid.envelope", "dimension does not match the polytope");
  }
  check_bump_reach(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string echo_config(const RunConfig& c) {
  ojson cfg;
  cfg["name"] = c.name;
  cfg["workers"] = c.workers;
  ojson w;
  w["kind"] = c.weight_kind;
  if (c.weight.is_toric()) {
    const auto& p = c.weight.polytope();
    if (p.dimension() == 1) {
      w["polytope"]["segment"] = {p.vertices()[0][0], p.vertices()[1][0]};
    } else {
      ojson verts = ojson::array();
      for (const auto& v : p.vertices()) verts.push_back({v[0], v[1]});
      w["polytope"]["vertices"] = verts;
    }
  }
  if (c.weight_kind == "perturbed_toric" || c.weight_kind == "perturbed_chart") {
    ojson bumps = ojson::array();
    const int dim = c.weight.is_toric() ? c.weight.dimension() : 2;
    for (const auto& b : c.weight.bumps()) {
      ojson bj;
      bj["center"] = dim == 1 ? ojson{b.center[0]} : ojson{b.center[0], b.center[1]};
      bj["radius"] = b.radius;
      bj["amplitude"] = b.amplitude;
      bj["smoothness"] = b.smoothness;
      bumps.push_back(bj);
    }
    w["bumps"] = bumps;
  }
  cfg["weight"] = w;
  cfg["grid"]["envelope"] = grid_json(c.envelope_grid);
  cfg["grid"]["eval"] = grid_json(c.eval_grid);
  cfg["k_list"] = c.k_list;

  ojson t;
  t["quad_tol"] = c.quad.tol;
  t["gl_order"] = c.quad.gl_order;
  t["max_doublings"] = c.quad.max_doublings;
  t["v0"] = c.quad.v0 < 0.0 ? ojson("auto") : ojson(c.quad.v0);
  t["n_theta"] = c.quad.n_theta;
  t["dual_factor"] = c.envelope.dual_factor;
  t["slope_tol"] = c.envelope.slope_tol < 0.0 ? ojson("auto") : ojson(c.envelope.slope_tol);
  t["eps_D"] = c.envelope.eps_D < 0.0 ? ojson("auto") : ojson(c.envelope.eps_D);
  t["sor_omega"] = c.envelope.sor_omega;
  t["tol_sor"] = c.envelope.tol_sor;
  t["max_iterations"] = c.envelope.max_iterations;
  cfg["tolerances"] = t;

  ojson tz;
  tz["window"] = c.weight.is_toric() && c.weight.dimension() == 1
                     ? ojson{c.tzc.lo[0], c.tzc.hi[0]}
                     : ojson{ojson{c.tzc.lo[0], c.tzc.lo[1]}, ojson{c.tzc.hi[0], c.tzc.hi[1]}};
  tz["nodes"] = c.tzc.nodes;
  tz["k_list"] = c.tzc.k_list;
  cfg["tzc"] = tz;

  ojson od;
  od["on"] = test_function_json(c.offdiag.on);
  od["off_f"] = test_function_json(c.offdiag.off_f);
  od["off_g"] = test_function_json(c.offdiag.off_g);
  od["reproducing_points"] = c.offdiag.reproducing_points;
  cfg["offdiag"] = od;

  const Gates& g = c.gates;
  ojson gj;
  gj["mass_identity"] = g.mass_identity;
  gj["volume_rel"] = g.volume_rel;
  gj["off_contact_fraction"] = g.off_contact_fraction;
  gj["l1_last"] = g.l1_last;
  gj["volume_cdf"] = g.volume_cdf;
  gj["metric_fit_levels"] = g.metric_fit_levels;
  gj["tzc_spread"] = g.tzc_spread;
  gj["tchebishev_rel"] = g.tchebishev_rel;
  gj["decay_mid_rel"] = g.decay_mid_rel;
  gj["decay_k"] = g.decay_k;
  gj["offdiag_disjoint"] = g.offdiag_disjoint;
  gj["offdiag_on_rel"] = g.offdiag_on_rel;
  gj["reproducing"] = g.reproducing;
  cfg["gates"] = gj;

  ojson derived;
  derived["eps_D_rule"] = c.envelope.eps_D < 0.0 ? "max(10 * residual, h^2 * kappa / 2), kappa = max interior second difference of phi"
                                                 : "fixed";
  if (c.weight.is_toric()) {
    derived["slope_tol"] =
        c.envelope.slope_tol < 0.0 ? 1e-3 * c.weight.polytope().diameter() : c.envelope.slope_tol;
    derived["v0"] = c.quad.v0 < 0.0 ? toric_box_offset(c.weight) : c.quad.v0;
    ojson boxes = ojson::array();
    for (long k : c.k_list) {
      const std::size_t dim = lattice_points(c.weight.polytope(), k).size();
      ojson row;
      row["k"] = k;
      row["dim"] = dim;
      row["box_half_width"] = toric_box_half_width(c.weight, k, dim, c.quad);
      boxes.push_back(row);
    }
    derived["quadrature_boxes"] = boxes;
    derived["box_formula"] = "V = V0 + ln(k * dim / quad_tol)";
  } else {
    ojson thetas = ojson::array();
    for (long k : c.k_list) thetas.push_back(c.quad.n_theta > 0 ? c.quad.n_theta : 4 * k + 16);
    derived["chart_n_theta"] = thetas;
  }
  derived["envelope_spacing"] = c.envelope_grid.spacing(0);

  ojson out;
  out["config"] = cfg;
  out["derived"] = derived;
  out["warnings"] = c.warnings;
  return out.dump(2) + "\n";
}

}  // namespace plurikit
