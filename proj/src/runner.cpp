#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "plurikit/cli.hpp"
#include "plurikit/errors.hpp"
#include "plurikit/parallel.hpp"

namespace plurikit {

namespace {

using ojson = nlohmann::ordered_json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> coord_columns(const GridDomain& d) {
  if (d.kind == GridDomain::Kind::Chart) return {"s", "theta"};
  if (d.dim == 1) return {"v"};
  return {"v1", "v2"};
}

void push_coords(std::vector<CsvTable::Cell>& row, const GridDomain& d, std::size_t i) {
  const std::size_t i0 = i / d.count[1], i1 = i % d.count[1];
  row.emplace_back(d.coord(0, i0));
  if (d.kind == GridDomain::Kind::Chart || d.dim == 2) row.emplace_back(d.coord(1, i1));
}

std::vector<std::string> concat(std::vector<std::string> a, std::initializer_list<std::string> b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

GateResult gate(std::string name, double value, std::string relation, double threshold) {
  GateResult g;
  g.name = std::move(name);
  g.value = value;
  g.relation = relation;
  g.threshold = threshold;
  if (relation == "<") g.pass = value < threshold;
  else if (relation == "<=") g.pass = value <= threshold;
  else if (relation == ">=") g.pass = value >= threshold;
  else g.pass = value == threshold;
  return g;
}

void require_toric(const RunConfig& c, const std::string& command) {
  if (!c.weight.is_toric()) throw ConfigError("weight.kind", "command `" + command + "` needs a toric weight");
}

std::vector<BergmanModel> build_models(const RunConfig& c, const std::vector<long>& ks) {
  std::vector<BergmanModel> out;
  out.reserve(ks.size());
  for (long k : ks) out.emplace_back(HilbertSpaceSpec{c.weight, k, c.quad, std::nullopt});
  return out;
}

EnvelopeResult compute_envelope(const RunConfig& c, const GridField& phi) {
  if (c.weight.is_toric()) return toric_equilibrium(phi, c.weight.polytope(), c.envelope);
  return chart_equilibrium(c.weight, c.envelope_grid, c.envelope);
}

double exact_volume(const RunConfig& c) { return c.weight.is_toric() ? lattice_volume(c.weight.polytope()) : 1.0; }

int complex_dim(const RunConfig& c) { return c.weight.is_toric() ? c.weight.dimension() : 1; }

RunResult cmd_envelope(const RunConfig& c) {
  const GridDomain& d = c.envelope_grid;
  const GridField phi = eval_weight(c.weight, d);
  const EnvelopeResult env = compute_envelope(c, phi);
  const EquilibriumMeasure mu = equilibrium_measure(env, phi, c.weight);

  RunResult r;
  CsvTable field("envelope", concat(coord_columns(d), {"phi", "phi_e", "contact"}));
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<CsvTable::Cell> row;
    push_coords(row, d, i);
    row.emplace_back(phi[i]);
    row.emplace_back(env.phi_e[i]);
    row.emplace_back(static_cast<int>(env.contact.values[i]));
    field.row(row);
  }
  CsvTable stats("envelope_stats", {"method", "residual", "iterations", "eps_D", "contact_nodes", "mass",
                                    "off_contact_mass", "clamped_mass", "sandwich_gap"});
  stats.row({env.method, env.residual, env.iterations, env.eps_D, static_cast<long>(env.contact.count()), mu.mass,
             mu.off_contact_mass, mu.clamped_mass, env.sandwich_gap});

  r.gates.push_back(gate("off_contact_mass_fraction", mu.off_contact_mass / mu.mass, "<=", c.gates.off_contact_fraction));
  const double vol = exact_volume(c);
  r.gates.push_back(gate("equilibrium_mass_rel", std::abs(mu.mass - vol) / vol, "<=", c.gates.volume_rel));
  if (c.weight.is_toric() && d.dim == 1) {
    std::vector<double> xs(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) xs[i] = d.coord(0, i);
    const auto hull = convex_envelope_1d(xs, phi.values());
    double diff = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) diff = std::max(diff, std::abs(hull[i] - env.phi_e[i]));
    r.gates.push_back(gate("hull_cross_check", diff, "<=", 2.0 * d.spacing(0) * c.weight.polytope().diameter()));
  }
  if (!c.weight.is_toric() && c.weight.s1_invariant()) {
    const auto sw = radial_sandwich(c.weight, d);
    const double h = std::max(d.spacing(0), d.spacing(1));
    double diff = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      diff = std::max(diff, std::abs(env.phi_e[i] - sw.lower(2.0 * d.coord(0, i / d.count[1]))));
    }
    r.gates.push_back(gate("radial_cross_check", diff, "<=", 10.0 * h * h));
  }
  r.tables.push_back(std::move(field));
  r.tables.push_back(std::move(stats));
  return r;
}

RunResult cmd_bergman(const RunConfig& c) {
  const GridDomain& e = c.eval_grid;
  RunResult r;
  CsvTable mass("bergman_mass", {"k", "dim", "retained", "mass", "relative_error", "log10_condition", "refinements",
                                 "achieved_tol", "discarded"});
  std::vector<std::string> cols{"k"};
  for (const auto& s : coord_columns(e)) cols.push_back(s);
  cols.push_back("log_bergman");
  CsvTable values("bergman", cols);
  double worst = 0.0;
  for (long k : c.k_list) {
    const BergmanModel m(HilbertSpaceSpec{c.weight, k, c.quad, std::nullopt});
    const double mb = m.bergman_mass();
    const double rel = std::abs(mb - static_cast<double>(m.retained())) / static_cast<double>(m.retained());
    worst = std::max(worst, rel);
    mass.row({k, static_cast<long>(m.dimension()), static_cast<long>(m.retained()), mb, rel,
              m.factor().log10_condition, m.gram().refinements, m.gram().achieved_tol, m.factor().discarded});
    const GridField lb = log_bergman_function(m, e);
    for (std::size_t i = 0; i < e.size(); ++i) {
      std::vector<CsvTable::Cell> row{k};
      push_coords(row, e, i);
      row.emplace_back(lb[i]);
      values.row(row);
    }
  }
  r.gates.push_back(gate("mass_identity_rel", worst, "<=", c.gates.mass_identity));
  r.tables.push_back(std::move(mass));
  r.tables.push_back(std::move(values));
  return r;
}

EnvelopeView toric_view(const RunConfig& c) {
  const GridField phi = eval_weight(c.weight, c.envelope_grid);
  return {c.weight, toric_equilibrium(phi, c.weight.polytope(), c.envelope)};
}

RunResult cmd_converge(const RunConfig& c) {
  require_toric(c, "converge");
  const EnvelopeView view = toric_view(c);
  const auto models = build_models(c, c.k_list);
  const auto rows = convergence_table(models, view, c.eval_grid);
  const int n = complex_dim(c);

  RunResult r;
  CsvTable conv("convergence", {"k", "l1_error", "sup_ratio", "normalized_dim", "target_mass"});
  double worst_step = 0.0, worst_delta = -1.0, worst_consistency = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    conv.row({row.k, row.l1_error, row.sup_ratio, row.normalized_dim, row.target_mass});
    worst_consistency = std::max(worst_consistency, std::abs(row.normalized_dim - row.target_mass) - row.l1_error);
    if (i > 0) {
      worst_step = std::max(worst_step, row.l1_error / rows[i - 1].l1_error);
      worst_delta = std::max(worst_delta, row.sup_ratio - rows[i - 1].sup_ratio);
    }
  }
  if (rows.size() > 1) {
    r.gates.push_back(gate("l1_strictly_decreasing", worst_step, "<", 1.0));
    r.gates.push_back(gate("morse_delta_nonincreasing", worst_delta, "<=", 0.0));
  }
  r.gates.push_back(gate("l1_consistency", worst_consistency, "<=", 1e-9));
  if (c.gates.l1_last >= 0.0) r.gates.push_back(gate("l1_last", rows.back().l1_error, "<", c.gates.l1_last));

  CsvTable metric("metric", {"k", "sup_distance", "log_term", "volume_cdf", "volume_repairs"});
  std::vector<double> dist;
  double last_cdf = 0.0;
  for (const auto& m : models) {
    const GridField f = bergman_metric_field(m, c.eval_grid);
    dist.push_back(metric_distance(f, view));
    const double k = static_cast<double>(m.k());
    VolumeFormDistance vd;
    if (n == 1) vd = bergman_volume_distance(f, view);
    last_cdf = vd.sup_cdf;
    metric.row({m.k(), dist.back(), 2.0 * n * std::log(k) / k, vd.sup_cdf, static_cast<long>(vd.repaired)});
  }
  // One constant C, fitted on the first levels, must bound the later ones.
  const std::size_t fit = std::min<std::size_t>(static_cast<std::size_t>(c.gates.metric_fit_levels), dist.size());
  double C = 0.0;
  for (std::size_t i = 0; i < fit; ++i) {
    const double k = static_cast<double>(models[i].k());
    C = std::max(C, k * dist[i] - 2.0 * n * std::log(k));
  }
  if (fit < dist.size()) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = fit; i < dist.size(); ++i) {
      const double k = static_cast<double>(models[i].k());
      worst = std::max(worst, k * dist[i] - 2.0 * n * std::log(k));
    }
    r.gates.push_back(gate("metric_distance_fitted_C", worst, "<=", C));
  }
  if (c.gates.volume_cdf >= 0.0 && n == 1) r.gates.push_back(gate("volume_form_cdf", last_cdf, "<=", c.gates.volume_cdf));
  r.tables.push_back(std::move(conv));
  r.tables.push_back(std::move(metric));
  return r;
}

RunResult cmd_volume(const RunConfig& c) {
  const GridField phi = eval_weight(c.weight, c.envelope_grid);
  const EnvelopeResult env = compute_envelope(c, phi);
  const EquilibriumMeasure mu = equilibrium_measure(env, phi, c.weight);
  std::vector<std::size_t> dims;
  for (long k : c.k_list) {
    dims.push_back(c.weight.is_toric() ? lattice_points(c.weight.polytope(), k).size()
                                       : static_cast<std::size_t>(k + 1));
  }
  const VolumeReport rep = volume_report(complex_dim(c), exact_volume(c), mu.mass, c.k_list, dims, c.gates.volume_rel);
  RunResult r;
  CsvTable t("volume", {"k", "dim", "normalized_dim", "eq_mass", "volume", "gap"});
  for (const auto& row : rep.rows) t.row({row.k, static_cast<long>(row.dim), row.normalized_dim, row.mass, row.volume, row.gap});
  r.gates.push_back(gate("equilibrium_mass_rel", rep.relative_mass_error, "<=", c.gates.volume_rel));
  r.gates.push_back(gate("dimension_gap_decreasing", rep.monotone ? 1.0 : 0.0, "==", 1.0));
  r.tables.push_back(std::move(t));
  return r;
}

std::vector<long> dyadic_tail(const std::vector<long>& ks) {
  std::vector<long> out{ks.back()};
  for (std::size_t i = ks.size() - 1; i > 0 && ks[i - 1] * 2 == ks[i]; --i) out.insert(out.begin(), ks[i - 1]);
  return out;
}

RunResult cmd_expansion(const RunConfig& c) {
  require_toric(c, "expansion");
  const EnvelopeView view = toric_view(c);
  const std::vector<long> ks = c.tzc.k_list.empty() ? dyadic_tail(c.k_list) : c.tzc.k_list;
  if (ks.size() < 2) throw ConfigError("tzc.k_list", "needs at least two dyadic levels");
  const int n = c.weight.dimension();
  std::vector<Vec2> window;
  const std::size_t m = c.tzc.nodes;
  auto lin = [&](int a, std::size_t i) {
    return m == 1 ? c.tzc.lo[a] : c.tzc.lo[a] + (c.tzc.hi[a] - c.tzc.lo[a]) * static_cast<double>(i) / static_cast<double>(m - 1);
  };
  for (std::size_t i = 0; i < m; ++i) {
    if (n == 1) {
      window.push_back({lin(0, i), 0.0});
    } else {
      for (std::size_t j = 0; j < m; ++j) window.push_back({lin(0, i), lin(1, j)});
    }
  }
  const auto models = build_models(c, ks);
  TzcReport rep;
  try {
    rep = tzc_fit(models, view, window);
  } catch (const std::domain_error& e) {
    throw ConfigError("tzc.window", e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("tzc.k_list", e.what());
  }

  RunResult r;
  std::vector<std::string> cols{"k_lo", "k_hi"};
  cols.push_back(n == 1 ? "v" : "v1");
  if (n == 2) cols.push_back("v2");
  cols.push_back("b_hat");
  CsvTable t("tzc", cols);
  for (std::size_t p = 0; p < rep.b_hat.size(); ++p) {
    for (std::size_t i = 0; i < window.size(); ++i) {
      std::vector<CsvTable::Cell> row{rep.ks[p], rep.ks[p + 1], window[i][0]};
      if (n == 2) row.emplace_back(window[i][1]);
      row.emplace_back(rep.b_hat[p][i]);
      t.row(row);
    }
  }
  CsvTable s("tzc_summary", {"b1", "spread", "levels"});
  s.row({rep.b1, rep.spread, static_cast<long>(rep.ks.size())});
  r.gates.push_back(gate("tzc_spread", rep.spread, "<", c.gates.tzc_spread));
  r.tables.push_back(std::move(t));
  r.tables.push_back(std::move(s));
  return r;
}

RunResult cmd_capacity(const RunConfig& c) {
  require_toric(c, "capacity");
  const EnvelopeView view = toric_view(c);
  const auto models = build_models(c, c.k_list);
  const GridDomain& e = c.eval_grid;
  RunResult r;

  std::size_t mid = 0;
  double sup = -1.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double g = view.gap(e.point(i));
    if (g > sup) {
      sup = g;
      mid = i;
    }
  }
  const bool off_contact = !view.contact(e.point(mid));
  const long decay_k = c.gates.decay_k > 0 ? c.gates.decay_k : c.k_list.back();

  std::vector<std::string> cols{"k"};
  for (const auto& s : coord_columns(e)) cols.push_back(s);
  for (const char* s : {"profile", "gap", "scaled_bracket"}) cols.push_back(s);
  CsvTable decay("decay", cols);
  CsvTable dsum("decay_summary", {"k", "fitted_C", "excluded", "window_nodes", "mid_profile", "mid_gap"});
  bool decay_seen = false;
  for (const auto& m : models) {
    const auto dp = decay_profile(m, view, e);
    const double k = static_cast<double>(m.k());
    for (std::size_t i = 0; i < e.size(); ++i) {
      std::vector<CsvTable::Cell> row{m.k()};
      push_coords(row, e, i);
      row.emplace_back(dp.profile[i]);
      row.emplace_back(dp.gap[i]);
      row.emplace_back(k * (dp.profile[i] - dp.gap[i]));
      decay.row(row);
    }
    dsum.row({m.k(), dp.fitted_C, static_cast<long>(dp.excluded), static_cast<long>(dp.window_nodes), dp.profile[mid],
              dp.gap[mid]});
    if (m.k() == decay_k && off_contact) {
      decay_seen = true;
      r.gates.push_back(gate("decay_midpoint_rel", std::abs(dp.profile[mid] - dp.gap[mid]) / dp.gap[mid], "<=",
                             c.gates.decay_mid_rel));
    }
  }
  if (!decay_seen && off_contact) throw ConfigError("gates.decay_k", "is not in k_list");

  const auto tc = tchebishev_estimate(models, view, e);
  CsvTable cap("capacity", {"k", "estimate", "reference", "relative_gap"});
  for (const auto& row : tc.rows) {
    cap.row({row.k, row.estimate, tc.reference, std::abs(row.estimate - tc.reference) / tc.reference});
  }
  CsvTable csum("capacity_summary", {"extrapolated", "reference", "convention"});
  csum.row({tc.extrapolated, tc.reference, tc.convention});
  r.gates.push_back(gate("tchebishev_rel", tc.relative_gap, "<", c.gates.tchebishev_rel));
  r.tables.push_back(std::move(decay));
  r.tables.push_back(std::move(dsum));
  r.tables.push_back(std::move(cap));
  r.tables.push_back(std::move(csum));
  return r;
}

RunResult cmd_offdiag(const RunConfig& c) {
  if (c.weight.is_toric()) throw ConfigError("weight.kind", "command `offdiag` needs a chart weight");
  const GridDomain& d = c.envelope_grid;
  const GridField phi = eval_weight(c.weight, d);
  const EnvelopeResult env = chart_equilibrium(c.weight, d, c.envelope);
  const EquilibriumMeasure mu = equilibrium_measure(env, phi, c.weight);

  RunResult r;
  std::size_t outside = 0, support = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (c.offdiag.on(d.coord(0, i / d.count[1]), d.coord(1, i % d.count[1])) > 0.0) {
      ++support;
      if (!env.contact.values[i]) ++outside;
    }
  }
  r.gates.push_back(gate("on_support_outside_contact", static_cast<double>(outside), "==", 0.0));

  // Reproducing residual at evenly spread grid nodes.
  std::vector<std::size_t> probes;
  const std::size_t p = std::max<std::size_t>(1, c.offdiag.reproducing_points);
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t i0 = 1 + j * (d.count[0] - 2) / p;
    const std::size_t i1 = (j * 7) % d.count[1];
    probes.push_back(d.index(i0, i1));
  }

  CsvTable rep("reproducing", {"k", "x", "y", "bergman", "reproducing", "relative_error"});
  CsvTable off("offdiag", {"k", "case", "value", "oracle", "relative_error"});
  double worst_rep = 0.0, last_on = 0.0, last_off = 0.0;
  for (long k : c.k_list) {
    const BergmanModel m(HilbertSpaceSpec{c.weight, k, c.quad, std::nullopt});
    for (std::size_t i : probes) {
      const Vec2 x = d.point(i);
      const double b = m.bergman(x);
      const double ri = m.reproducing_integral(x);
      const double rel = std::abs(ri - b) / b;
      if (k == c.k_list.back()) worst_rep = std::max(worst_rep, rel);
      rep.row({k, x[0], x[1], b, ri, rel});
    }
    const auto on = offdiag_concentration(m, c.offdiag.on, c.offdiag.on, d, mu);
    const auto dis = offdiag_concentration(m, c.offdiag.off_f, c.offdiag.off_g, d, mu);
    last_on = std::abs(on.value / on.oracle - 1.0);
    last_off = dis.value;
    off.row({k, "on", on.value, on.oracle, last_on});
    off.row({k, "disjoint", dis.value, dis.oracle, dis.oracle > 0.0 ? std::abs(dis.value / dis.oracle - 1.0) : 0.0});
  }
  r.gates.push_back(gate("reproducing_rel", worst_rep, "<", c.gates.reproducing));
  r.gates.push_back(gate("offdiag_disjoint", last_off, "<", c.gates.offdiag_disjoint));
  r.gates.push_back(gate("offdiag_on_rel", last_on, "<=", c.gates.offdiag_on_rel));
  r.tables.push_back(std::move(rep));
  r.tables.push_back(std::move(off));
  return r;
}

}  // namespace

CsvTable::CsvTable(std::string table, std::vector<std::string> columns)
    : table_(std::move(table)), columns_(std::move(columns)) {}

void CsvTable::row(std::initializer_list<Cell> cells) { row(std::vector<Cell>(cells)); }

void CsvTable::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_.size()) throw std::invalid_argument("CsvTable: row width differs from the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) body_ += ',';
    const Cell& c = cells[i];
    switch (c.kind) {
      case Cell::Kind::Real: body_ += format_real(c.real); break;
      case Cell::Kind::Integer: body_ += std::to_string(c.integer); break;
      case Cell::Kind::Text: body_ += c.text; break;
    }
  }
  body_ += '\n';
}

std::string CsvTable::str() const {
  std::string out = "# schema=plurikit." + table_ + ".v1\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i];
  }
  out += '\n';
  return out + body_;
}

void CsvTable::write(const std::filesystem::path& dir) const {
  std::ofstream out(dir / (table_ + ".csv"), std::ios::binary);
  out << str();
  if (!out) throw std::runtime_error("cannot write " + (dir / (table_ + ".csv")).string());
}

std::string format_gate(const GateResult& g) {
  return std::string(g.pass ? "PASS " : "FAIL ") + g.name + " " + format_real(g.value) + " " + g.relation + " " +
         format_real(g.threshold);
}

RunResult execute(const std::string& command, const RunConfig& config) {
  if (command == "envelope") return cmd_envelope(config);
  if (command == "bergman") return cmd_bergman(config);
  if (command == "converge") return cmd_converge(config);
  if (command == "volume") return cmd_volume(config);
  if (command == "expansion") return cmd_expansion(config);
  if (command == "capacity") return cmd_capacity(config);
  if (command == "offdiag") return cmd_offdiag(config);
  throw std::invalid_argument("unknown command: " + command);
}

int run(const std::string& command, const std::filesystem::path& config_path, const std::filesystem::path& out,
        int workers, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  }
  if (workers > 0) config.workers = workers;
  set_workers(config.workers);
  for (const auto& w : config.warnings) log << "warning: " << w << "\n";

  RunResult result;
  try {
    result = execute(command, config);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    log << "numerical error in stage " << e.stage() << ": " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "numerical error: " << e.what() << "\n";
    return 3;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::filesystem::create_directories(out);
  ojson outputs = ojson::array();
  for (const auto& t : result.tables) {
    t.write(out);
    outputs.push_back(t.name() + ".csv");
  }
  bool pass = true;
  std::string summary;
  ojson gates = ojson::array();
  for (const auto& g : result.gates) {
    pass = pass && g.pass;
    summary += format_gate(g) + "\n";
    ojson gj;
    gj["name"] = g.name;
    gj["pass"] = g.pass;
    gj["value"] = g.value;
    gj["relation"] = g.relation;
    gj["threshold"] = g.threshold;
    gates.push_back(gj);
  }
  {
    std::ofstream s(out / "summary.txt", std::ios::binary);
    s << summary;
  }
  ojson manifest;
  manifest["tool"] = "plurikit";
  manifest["version"] = tool_version;
  manifest["command"] = command;
  manifest["config_path"] = config_path.string();
  manifest["resolved"] = ojson::parse(echo_config(config));
  manifest["outputs"] = outputs;
  manifest["gates"] = gates;
  manifest["timings"]["total_seconds"] = seconds;
  {
    std::ofstream m(out / "manifest.json", std::ios::binary);
    m << manifest.dump(2) << "\n";
  }
  log << summary;
  return pass ? 0 : 1;
}

}  // namespace plurikit
