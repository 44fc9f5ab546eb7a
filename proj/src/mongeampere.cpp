#include "plurikit/mongeampere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace plurikit {

namespace {

struct Curvature {
  GridField value;
  std::vector<std::uint8_t> trusted;
};

Curvature curvature(const GridField& u) {
  if (u.domain().kind == GridDomain::Kind::Chart) {
    auto l = laplacian_field(u);
    return {std::move(l.laplacian), std::move(l.trusted)};
  }
  auto h = hessian_field(u);
  return {std::move(h.det), std::move(h.trusted)};
}

}  // namespace

GridField ma_ratio(const GridField& u, const GridField& reference) {
  if (!(u.domain() == reference.domain())) throw std::invalid_argument("ma_ratio: domains differ");
  const auto cu = curvature(u);
  const auto cr = curvature(reference);
  const GridDomain& d = u.domain();
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (cr.value[i] > 0.0) {
      out[i] = cu.value[i] / cr.value[i];
    } else if (cr.trusted[i]) {
      std::ostringstream msg;
      msg << "ma_ratio: reference is degenerate at node (" << i / d.count[1] << ", " << i % d.count[1] << ")";
      throw std::domain_error(msg.str());
    } else {
      out[i] = 0.0;
    }
  }
  return {d, std::move(out)};
}

GridField reference_density(const WeightSpec& reference, const GridDomain& d) {
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Vec2 x = d.point(i);
    if (reference.is_toric()) {
      out[i] = reference.reference_hessian_det(x);
    } else {
      // Euclidean Laplacian times |zeta|^2 gives the (s, theta) Laplacian.
      out[i] = reference.reference_laplacian(x) * (x[0] * x[0] + x[1] * x[1]) * 0.25 / std::numbers::pi;
    }
  }
  return {d, std::move(out)};
}

GridField ma_ratio(const GridField& u, const WeightSpec& reference) {
  const GridDomain& d = u.domain();
  const auto cu = curvature(u);
  const GridField ref = reference_density(reference, d);
  const double scale = d.kind == GridDomain::Kind::Chart ? 0.25 / std::numbers::pi : 1.0;
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * cu.value[i] / ref[i];
  return {d, std::move(out)};
}

GridField reference_density(const GridField& reference) {
  const auto c = curvature(reference);
  if (reference.domain().kind == GridDomain::Kind::Chart) return c.value.scaled(0.25 / std::numbers::pi);
  return c.value;
}

namespace {

EquilibriumMeasure assemble(const EnvelopeResult& env, const GridField& rp, const GridField& re, const GridField& ref,
                            double match_tol) {
  const GridDomain& d = rp.domain();
  const auto w = trapezoid_weights(d);
  const auto& mask = env.contact.values;
  if (match_tol < 0.0) match_tol = 10.0 * std::max(d.spacing(0), d.dim == 2 ? d.spacing(1) : 0.0);

  // Interior contact: contact at every node within two steps along each axis.
  auto interior = [&](std::size_t i0, std::size_t i1) {
    for (int a = 0; a < d.dim; ++a) {
      const std::size_t n = d.count[a];
      const std::size_t c = a == 0 ? i0 : i1;
      for (int off = -2; off <= 2; ++off) {
        std::size_t m;
        if (d.periodic(a)) {
          m = (c + n + static_cast<std::size_t>(off + 2) - 2) % n;
        } else {
          const long cm = static_cast<long>(c) + off;
          if (cm < 1 || cm > static_cast<long>(n) - 2) return false;
          m = static_cast<std::size_t>(cm);
        }
        if (!mask[a == 0 ? d.index(m, i1) : d.index(i0, m)]) return false;
      }
    }
    return true;
  };

  EquilibriumMeasure out;
  std::vector<double> density(rp.size(), 0.0);
  std::size_t failures = 0;
  for (std::size_t i0 = 0; i0 < d.count[0]; ++i0) {
    for (std::size_t i1 = 0; i1 < d.count[1]; ++i1) {
      const std::size_t i = d.index(i0, i1);
      const double dm = w[i] * ref[i];
      if (mask[i]) {
        density[i] = std::max(rp[i], 0.0);
        out.mass += density[i] * dm;
        out.clamped_mass += std::max(-rp[i], 0.0) * dm;
        out.contact_l1_mismatch += std::abs(re[i] - rp[i]) * dm;
        if (interior(i0, i1)) {
          ++out.interior_contact_nodes;
          if (std::abs(re[i] - rp[i]) > match_tol) ++failures;
        }
      } else {
        out.off_contact_mass += std::abs(re[i]) * dm;
      }
    }
  }
  if (out.interior_contact_nodes > 0) {
    out.matching_failure_fraction =
        static_cast<double>(failures) / static_cast<double>(out.interior_contact_nodes);
  }
  out.density = GridField(d, std::move(density));
  return out;
}

void check_grids(const EnvelopeResult& env, const GridField& phi) {
  if (!(env.phi_e.domain() == phi.domain()) || !(env.contact.domain == phi.domain())) {
    throw std::invalid_argument("equilibrium_measure: envelope and weight must share one grid");
  }
}

}  // namespace

EquilibriumMeasure equilibrium_measure(const EnvelopeResult& env, const GridField& phi, const GridField& reference,
                                       double match_tol) {
  check_grids(env, phi);
  if (!(reference.domain() == phi.domain())) throw std::invalid_argument("equilibrium_measure: reference grid differs");
  return assemble(env, ma_ratio(phi, reference), ma_ratio(env.phi_e, reference), reference_density(reference),
                  match_tol);
}

EquilibriumMeasure equilibrium_measure(const EnvelopeResult& env, const GridField& phi, const WeightSpec& reference,
                                       double match_tol) {
  check_grids(env, phi);
  return assemble(env, ma_ratio(phi, reference), ma_ratio(env.phi_e, reference),
                  reference_density(reference, phi.domain()), match_tol);
}

VolumeReport volume_report(int n, double volume, double mass, const std::vector<long>& ks,
                           const std::vector<std::size_t>& dims, double rel_tol) {
  if (ks.size() != dims.size() || ks.empty()) throw std::invalid_argument("volume_report: k list and dims differ");
  VolumeReport rep;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    VolumeRow row;
    row.k = ks[i];
    row.dim = dims[i];
    row.normalized_dim = static_cast<double>(dims[i]) / std::pow(static_cast<double>(ks[i]), n);
    row.mass = mass;
    row.volume = volume;
    row.gap = row.normalized_dim - mass;
    rep.rows.push_back(row);
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (!(rep.rows[i].gap < rep.rows[i - 1].gap)) rep.monotone = false;
  }
  rep.relative_mass_error = std::abs(mass - volume) / volume;
  rep.pass = rep.monotone && rep.relative_mass_error <= rel_tol;
  return rep;
}

}  // namespace plurikit
