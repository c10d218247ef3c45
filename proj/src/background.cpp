#include "yflow/background.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "yflow/errors.hpp"
#include "yflow/kernels.hpp"

namespace yflow {
namespace {

double param(const CatalogEntry& e, const std::string& key) {
  auto it = e.params.find(key);
  if (it == e.params.end()) {
    throw std::invalid_argument("background '" + e.kind + "' requires parameter '" + key + "'");
  }
  if (!std::isfinite(it->second)) {
    throw std::invalid_argument("background parameter '" + key + "' is not finite");
  }
  return it->second;
}

double param_or(const CatalogEntry& e, const std::string& key, double fallback) {
  return e.params.count(key) ? param(e, key) : fallback;
}

Tridiagonal flat_operator(const RadialGrid& grid, Closure closure) {
  const std::size_t m = grid.last();
  const auto cf = grid.face_coefficients();
  const auto vol = grid.volumes();
  Tridiagonal d(grid.size());
  for (std::size_t i = 0; i <= m; ++i) {
    double diag = 0.0;
    if (i > 0) {
      d.lower[i] = cf[i - 1] / vol[i];
      diag -= cf[i - 1];
    }
    if (i < m) {
      d.upper[i] = cf[i] / vol[i];
      diag -= cf[i];
    }
    d.diag[i] = diag / vol[i];
  }
  if (closure == Closure::robin) {
    const double n = grid.dimension();
    d.diag[m] -= (n - 2.0) * std::pow(grid.r_max(), n - 2.0) / vol[m];
  }
  return d;
}

// Harmonic exterior c (r^{2-n} - R_max^{2-n}) built so that the discrete
// flux is constant outside the core, capped by an even quartic inside.
std::vector<double> harmonic_tail_profile(const RadialGrid& grid, double c, double core) {
  const std::size_t m = grid.last();
  const double n = grid.dimension();
  const auto cf = grid.face_coefficients();
  std::size_t js = std::min(grid.last_index_within(core), m - 1);
  if (grid.r(js) < core) ++js;
  std::vector<double> h(grid.size(), 0.0);
  for (std::size_t j = m; j-- > js;) h[j] = h[j + 1] + (n - 2.0) / cf[j];

  const double rs = grid.r(js);
  const double s1 = (2.0 - n) * std::pow(rs, 1.0 - n);
  const double s2 = (n - 1.0) * (n - 2.0) * std::pow(rs, -n);
  const double d4 = (s2 - s1 / rs) / (8.0 * rs * rs);
  const double b2 = 0.5 * (s1 / rs - 4.0 * d4 * rs * rs);
  const double a0 = h[js] - b2 * rs * rs - d4 * rs * rs * rs * rs;
  for (std::size_t i = 0; i < js; ++i) {
    const double r2 = grid.r(i) * grid.r(i);
    h[i] = a0 + b2 * r2 + d4 * r2 * r2;
  }
  std::vector<double> u(grid.size());
  for (std::size_t i = 0; i <= m; ++i) u[i] = 1.0 + c * h[i];
  return u;
}

}  // namespace

double conformal_constant(int n) { return 4.0 * (n - 1) / (n - 2); }
double critical_exponent(int n) { return static_cast<double>(n + 2) / (n - 2); }

double smoothstep5(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

std::vector<double> flat_laplacian(const RadialGrid& grid, std::span<const double> f,
                                   Closure closure) {
  return flat_operator(grid, closure).apply(f);
}

Tridiagonal assemble_conformal_laplacian(const Background& bg, Closure closure) {
  Tridiagonal d = flat_operator(bg.grid, closure);
  const std::size_t m = bg.grid.last();
  const double a = bg.a_n;
  std::vector<double> scale(bg.grid.size());
  kernels::power(bg.U0, -bg.N, scale);
  Tridiagonal l(bg.grid.size());
  for (std::size_t i = 0; i <= m; ++i) {
    const double s = -a * scale[i];
    if (i > 0) l.lower[i] = s * d.lower[i] * bg.U0[i - 1];
    l.diag[i] = s * d.diag[i] * bg.U0[i] + bg.V[i];
    if (i < m) l.upper[i] = s * d.upper[i] * bg.U0[i + 1];
  }
  return l;
}

std::vector<double> conformal_scalar_curvature(const Background& bg, std::span<const double> u) {
  if (u.size() != bg.grid.size()) throw std::invalid_argument("sample count does not match grid");
  if (!(kernels::min_value(u) > 0.0)) {
    throw PreconditionViolation("conformal factor must be positive at every node");
  }
  const Tridiagonal l = assemble_conformal_laplacian(bg, Closure::zero_flux);
  std::vector<double> lu = l.apply(u);
  std::vector<double> inv(u.size());
  kernels::power(u, -bg.N, inv);
  kernels::multiply(lu, inv, lu);
  lu.back() = lu[lu.size() - 2];
  return lu;
}

Background conformal_change(const Background& bg, std::span<const double> rho) {
  if (rho.size() != bg.grid.size()) throw std::invalid_argument("sample count does not match grid");
  if (!(kernels::min_value(rho) > 0.0)) {
    throw PreconditionViolation("conformal change must be positive at every node");
  }
  Background out = bg;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    out.U0[i] = bg.U0[i] * rho[i];
    out.V[i] = std::pow(rho[i], 1.0 - bg.N) * bg.V[i];
  }
  out.kind = bg.kind + "+conformal";
  std::vector<double> ones(rho.size(), 1.0);
  out.R0 = conformal_scalar_curvature(out, ones);
  out.tau = fit_tail_order(out.grid, out.U0);
  return out;
}

std::vector<double> laplace_beltrami(const RadialGrid& grid, std::span<const double> W,
                                     std::span<const double> f) {
  const std::size_t size = grid.size();
  const double N = critical_exponent(grid.dimension());
  std::vector<double> wf(size);
  kernels::multiply(W, f, wf);
  const Tridiagonal d = flat_operator(grid, Closure::zero_flux);
  std::vector<double> dwf = d.apply(wf);
  std::vector<double> dw = d.apply(W);
  std::vector<double> out(size);
  for (std::size_t i = 0; i < size; ++i) {
    out[i] = std::pow(W[i], -N) * (dwf[i] - f[i] * dw[i]);
  }
  out.back() = out[size - 2];
  return out;
}

double fit_tail_order(const RadialGrid& grid, std::span<const double> f) {
  const double lo = grid.r_max() / 10.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (std::size_t j = 0; j < grid.last(); ++j) {
    const double rh = grid.face_radii()[j];
    if (rh < lo) continue;
    const double slope = std::fabs((f[j + 1] - f[j]) / (grid.r(j + 1) - grid.r(j)));
    if (!(slope > 0.0)) return std::numeric_limits<double>::infinity();
    const double x = std::log(rh);
    const double y = std::log(slope);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 4) return std::numeric_limits<double>::infinity();
  const double k = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return -k - 1.0;
}

Background make_background(const RadialGrid& grid, const CatalogEntry& entry, double K_radius) {
  if (!std::isfinite(K_radius) || !(K_radius > 0.0) || !(K_radius < grid.r_max())) {
    throw std::invalid_argument("K_radius must lie in (0, R_max)");
  }
  const int n = grid.dimension();
  const std::size_t size = grid.size();
  std::vector<double> U0(size, 1.0);
  std::vector<double> V(size, 0.0);
  const auto r = grid.nodes();

  if (entry.kind == "flat") {
  } else if (entry.kind == "harmonic_tail") {
    U0 = harmonic_tail_profile(grid, param(entry, "c"), param_or(entry, "core_radius", 1.0));
  } else if (entry.kind == "gaussian_well") {
    const double amplitude = param(entry, "amplitude");
    const double sigma = param(entry, "sigma");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_well: sigma must be positive");
    for (std::size_t i = 0; i < size; ++i) {
      U0[i] = 1.0 + amplitude * std::exp(-r[i] * r[i] / (sigma * sigma));
    }
  } else if (entry.kind == "potential_well") {
    const double amplitude = param(entry, "amplitude");
    const double radius = param(entry, "radius");
    const double width = param(entry, "width");
    if (!(width > 0.0)) throw std::invalid_argument("potential_well: width must be positive");
    for (std::size_t i = 0; i < size; ++i) {
      V[i] = -amplitude * (1.0 - smoothstep5((r[i] - radius) / width));
    }
  } else if (entry.kind == "zero_yamabe") {
    const double lambda = param(entry, "lambda");
    if (!(lambda > 0.0)) throw std::invalid_argument("zero_yamabe: lambda must be positive");
    std::vector<double> phi(size);
    for (std::size_t i = 0; i < size; ++i) {
      phi[i] = std::pow(1.0 + (r[i] / lambda) * (r[i] / lambda), -(n - 2) / 2.0);
    }
    const std::vector<double> dphi = flat_laplacian(grid, phi, Closure::robin);
    const double a = conformal_constant(n);
    for (std::size_t i = 0; i < size; ++i) V[i] = a * dphi[i] / phi[i];
  } else {
    throw std::invalid_argument("unknown background kind '" + entry.kind + "'");
  }

  for (double u : U0) {
    if (!(u > 0.0) || !std::isfinite(u)) {
      throw std::invalid_argument("background '" + entry.kind + "' has a non-positive U0");
    }
  }
  if (std::fabs(U0.back() - 1.0) > 1e-6) {
    throw std::invalid_argument("background '" + entry.kind + "' is not asymptotic to 1 at R_max");
  }

  Background bg{grid,
                std::move(U0),
                std::move(V),
                {},
                0.0,
                conformal_constant(n),
                critical_exponent(n),
                K_radius,
                entry.kind};
  std::vector<double> ones(size, 1.0);
  bg.R0 = conformal_scalar_curvature(bg, ones);
  bg.tau = fit_tail_order(grid, bg.U0);
  return bg;
}

}  // namespace yflow
