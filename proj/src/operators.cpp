#include "thirdgrade/operators.hpp"

#include <cmath>
#include <stdexcept>

#include "thirdgrade/errors.hpp"

namespace thirdgrade {

namespace {

using cplx = std::complex<double>;
using Grid = std::vector<double>;

// Grid samples of y and its derivatives up to order two, and optionally of
// v(y) and its gradient. g[i][j] = d_j u_i, h[i][j][k] = d_j d_k u_i.
// Incompressibility supplies d_2 u_2 = -d_1 u_1 and its derivatives, so only
// nine inverse transforms are needed for u.
struct Kinematics {
  Grid u[2];
  Grid g[2][2];
  Grid h[2][2][2];
  Grid v[2];
  Grid gv[2][2];
  bool has_v = false;

  double dA(std::size_t p, int i, int k, int j) const {
    // d_j A_ik
    return h[i][k][j][p] + h[k][i][j][p];
  }
  double A(std::size_t p, int i, int j) const { return g[i][j][p] + g[j][i][p]; }
};

Grid negated(const Grid& x) {
  Grid r(x.size());
  for (std::size_t p = 0; p < x.size(); ++p) r[p] = -x[p];
  return r;
}

void load_kinematics(SpectralWorkspace& ws, const SpectralField& y, bool with_v, Kinematics& k) {
  const std::size_t np = ws.points();
  auto field = [&](int comp, int a, int b, bool vmap) {
    Grid out(np);
    ws.velocity_derivative(comp, a, b, vmap, out);
    return out;
  };
  ws.load(y);
  k.u[0] = field(0, 0, 0, false);
  k.u[1] = field(1, 0, 0, false);
  k.g[0][0] = field(0, 1, 0, false);
  k.g[0][1] = field(0, 0, 1, false);
  k.g[1][0] = field(1, 1, 0, false);
  k.g[1][1] = negated(k.g[0][0]);
  k.h[0][0][0] = field(0, 2, 0, false);
  k.h[0][0][1] = field(0, 1, 1, false);
  k.h[0][1][0] = k.h[0][0][1];
  k.h[0][1][1] = field(0, 0, 2, false);
  k.h[1][0][0] = field(1, 2, 0, false);
  k.h[1][0][1] = negated(k.h[0][0][0]);
  k.h[1][1][0] = k.h[1][0][1];
  k.h[1][1][1] = negated(k.h[0][0][1]);
  k.has_v = with_v;
  if (with_v) {
    k.v[0] = field(0, 0, 0, true);
    k.v[1] = field(1, 0, 0, true);
    k.gv[0][0] = field(0, 1, 0, true);
    k.gv[0][1] = field(0, 0, 1, true);
    k.gv[1][0] = field(1, 1, 0, true);
    k.gv[1][1] = negated(k.gv[0][0]);
  }
}

std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

void require_basis(const SpectralField& y) {
  if (!y.basis()) throw std::invalid_argument("SpectralField has no basis");
}

}  // namespace

std::vector<double> RhsBreakdown::nonlinear() const {
  std::vector<double> r(transport.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = transport[i] + vortex_stretch[i] + grade2[i] + grade3[i];
  return r;
}

std::vector<double> RhsBreakdown::total() const {
  std::vector<double> r = nonlinear();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += viscous[i] + forcing[i];
  return r;
}

SpectralField v_map(const SpectralField& y) {
  require_basis(y);
  SpectralField r = y;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] *= y.basis()->mode(i).v_factor;
  return r;
}

SpectralField stokes_inverse(SpectralWorkspace& ws, const PhysicalField& f) {
  return SpectralField(ws.basis(), l2_pairings(ws, f));
}

SpectralField stokes_inverse(const PhysicalField& f, const BasisPtr& basis) {
  return stokes_inverse(workspace_for(basis), f);
}

double trilinear_b(SpectralWorkspace& ws, const SpectralField& y, const SpectralField& z,
                   const SpectralField& phi) {
  const PhysicalField yy = synthesize(ws, y);
  const TensorField gz = grad(ws, z);
  const PhysicalField ph = synthesize(ws, phi);
  double s = 0.0;
  for (std::size_t p = 0; p < ws.points(); ++p)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s += yy.comp[j][p] * gz(i, j)[p] * ph.comp[i][p];
  return s * ws.cell_weight();
}

double trilinear_b(const SpectralField& y, const SpectralField& z, const SpectralField& phi) {
  require_basis(y);
  return trilinear_b(workspace_for(y.basis()), y, z, phi);
}

PhysicalField div_A2(SpectralWorkspace& ws, const SpectralField& y) {
  Kinematics k;
  load_kinematics(ws, y, false, k);
  PhysicalField out(ws.n());
  for (std::size_t p = 0; p < ws.points(); ++p) {
    for (int i = 0; i < 2; ++i) {
      double s = 0.0;
      for (int j = 0; j < 2; ++j)
        for (int m = 0; m < 2; ++m)
          s += k.dA(p, i, m, j) * k.A(p, m, j) + k.A(p, i, m) * k.dA(p, m, j, j);
      out.comp[i][p] = s;
    }
  }
  return out;
}

PhysicalField div_A2A(SpectralWorkspace& ws, const SpectralField& y) {
  Kinematics k;
  load_kinematics(ws, y, false, k);
  PhysicalField out(ws.n());
  for (std::size_t p = 0; p < ws.points(); ++p) {
    double n2 = 0.0;
    double dn2[2] = {0.0, 0.0};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double Aab = k.A(p, a, b);
        n2 += Aab * Aab;
        for (int j = 0; j < 2; ++j) dn2[j] += 2.0 * Aab * k.dA(p, a, b, j);
      }
    }
    for (int i = 0; i < 2; ++i) {
      double s = 0.0;
      for (int j = 0; j < 2; ++j) s += dn2[j] * k.A(p, i, j) + n2 * k.dA(p, i, j, j);
      out.comp[i][p] = s;
    }
  }
  return out;
}

PhysicalField div_A2(const SpectralField& y) {
  require_basis(y);
  return div_A2(workspace_for(y.basis()), y);
}

PhysicalField div_A2A(const SpectralField& y) {
  require_basis(y);
  return div_A2A(workspace_for(y.basis()), y);
}

TensorField S_of(SpectralWorkspace& ws, const SpectralField& y, double beta) {
  const TensorField A = A_of(ws, y);
  TensorField S(ws.n());
  for (std::size_t p = 0; p < ws.points(); ++p) {
    double n2 = 0.0;
    for (const auto& c : A.comp) n2 += c[p] * c[p];
    for (int c = 0; c < 4; ++c) S.comp[c][p] = beta * n2 * A.comp[c][p];
  }
  return S;
}

TensorField N_of(SpectralWorkspace& ws, const SpectralField& y, const FluidParams& prm) {
  Kinematics k;
  load_kinematics(ws, y, false, k);
  TensorField N(ws.n());
  for (std::size_t p = 0; p < ws.points(); ++p) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        double adv = 0.0, left = 0.0, right = 0.0, sq = 0.0;
        for (int m = 0; m < 2; ++m) {
          adv += k.u[m][p] * k.dA(p, i, j, m);
          left += k.g[m][i][p] * k.A(p, m, j);
          right += k.A(p, i, m) * k.g[m][j][p];
          sq += k.A(p, i, m) * k.A(p, m, j);
        }
        N(i, j)[p] = prm.alpha1 * (adv + left + right) + prm.alpha2 * sq;
      }
    }
  }
  return N;
}

TensorField S_of(const SpectralField& y, double beta) {
  require_basis(y);
  return S_of(workspace_for(y.basis()), y, beta);
}

TensorField N_of(const SpectralField& y, const FluidParams& p) {
  require_basis(y);
  return N_of(workspace_for(y.basis()), y, p);
}

std::vector<double> pair_tensor_divergence(SpectralWorkspace& ws, const TensorField& t) {
  if (t.n != ws.n()) throw GridMismatch("tensor field grid does not match the basis grid");
  std::vector<std::vector<cplx>> hat(4, std::vector<cplx>(ws.spectrum_size()));
  for (int c = 0; c < 4; ++c) ws.forward(t.comp[c], hat[c]);
  std::vector<double> out(ws.basis_ref().size());
  ws.pair_divergence(hat[0], hat[1], hat[2], hat[3], out);
  return out;
}

RhsBreakdown assemble_rhs(SpectralWorkspace& ws, const SpectralField& y, const SpectralField& U,
                          const FluidParams& prm, const CutoffFn& cut,
                          std::optional<double> theta_override) {
  const GalerkinBasis& basis = ws.basis_ref();
  const std::size_t n = basis.size();
  if (y.size() != n || U.size() != n) throw GridMismatch("fields belong to different bases");

  thread_local Kinematics k;
  load_kinematics(ws, y, true, k);

  const std::size_t np = ws.points();
  thread_local Grid tr[2], vs[2], sq[3], cub[3];
  for (auto* set : {&tr[0], &tr[1], &vs[0], &vs[1], &sq[0], &sq[1], &sq[2], &cub[0], &cub[1], &cub[2]})
    set->resize(np);

  double w4 = 0.0, a4 = 0.0, a2g = 0.0, dy2 = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    double q = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double ui = k.u[i][p];
      q += ui * ui * ui * ui;
      for (int j = 0; j < 2; ++j) {
        const double gij = k.g[i][j][p];
        q += gij * gij * gij * gij;
      }
    }
    // second derivatives: three distinct per component
    for (int i = 0; i < 2; ++i) {
      const double hx = k.h[i][0][0][p], hxy = k.h[i][0][1][p], hy = k.h[i][1][1][p];
      q += hx * hx * hx * hx + hxy * hxy * hxy * hxy + hy * hy * hy * hy;
    }
    w4 += q;

    double A[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) A[i][j] = k.g[i][j][p] + k.g[j][i][p];
    const double n2 = A[0][0] * A[0][0] + 2.0 * A[0][1] * A[0][1] + A[1][1] * A[1][1];
    a4 += n2 * n2;
    dy2 += 0.25 * n2;

    double A2[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) A2[i][j] = A[i][0] * A[0][j] + A[i][1] * A[1][j];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a2g += A2[i][j] * k.g[i][j][p];

    for (int i = 0; i < 2; ++i) {
      tr[i][p] = k.u[0][p] * k.gv[i][0][p] + k.u[1][p] * k.gv[i][1][p];
      vs[i][p] = k.v[0][p] * k.g[0][i][p] + k.v[1][p] * k.g[1][i][p];
    }
    sq[0][p] = A2[0][0];
    sq[1][p] = A2[0][1];
    sq[2][p] = A2[1][1];
    cub[0][p] = n2 * A[0][0];
    cub[1][p] = n2 * A[0][1];
    cub[2][p] = n2 * A[1][1];
  }

  const double cw = ws.cell_weight();
  RhsBreakdown r;
  r.w24 = std::sqrt(std::sqrt(w4 * cw));
  r.a4 = a4 * cw;
  r.a2_grad = a2g * cw;
  r.dy_squared = dy2 * cw;
  r.theta = theta_override ? *theta_override : cut(r.w24);

  r.viscous.resize(n);
  r.forcing.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Mode& m = basis.mode(i);
    r.viscous[i] = -prm.nu * m.mu * y[i] / m.v_factor;
    r.forcing[i] = U[i] / m.v_factor;
    r.u_y += U[i] * y[i] / m.v_factor;
    r.u_squared += U[i] * U[i] / m.v_factor;
  }

  r.transport = zeros(n);
  r.vortex_stretch = zeros(n);
  r.grade2 = zeros(n);
  r.grade3 = zeros(n);
  if (r.theta != 0.0) {
    const std::size_t ns = ws.spectrum_size();
    thread_local std::vector<cplx> s[4];
    for (auto& x : s) x.resize(ns);
    ws.forward(tr[0], s[0]);
    ws.forward(tr[1], s[1]);
    ws.pair_vector(s[0], s[1], r.transport);
    ws.forward(vs[0], s[0]);
    ws.forward(vs[1], s[1]);
    ws.pair_vector(s[0], s[1], r.vortex_stretch);
    ws.forward(sq[0], s[0]);
    ws.forward(sq[1], s[1]);
    ws.forward(sq[2], s[2]);
    ws.pair_divergence(s[0], s[1], s[1], s[2], r.grade2);
    ws.forward(cub[0], s[0]);
    ws.forward(cub[1], s[1]);
    ws.forward(cub[2], s[2]);
    ws.pair_divergence(s[0], s[1], s[1], s[2], r.grade3);

    const double c_tr = -r.theta;
    const double c_g2 = (prm.alpha1 + prm.alpha2) * r.theta;
    const double c_g3 = prm.beta * r.theta;
    for (std::size_t i = 0; i < n; ++i) {
      r.transport[i] *= c_tr;
      r.vortex_stretch[i] *= c_tr;
      r.grade2[i] *= c_g2;
      r.grade3[i] *= c_g3;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(r.viscous[i] + r.transport[i] + r.vortex_stretch[i] + r.grade2[i] +
                       r.grade3[i] + r.forcing[i]))
      throw NumericalBlowup("non-finite drift in mode " + std::to_string(i), 0);
  }
  return r;
}

RhsBreakdown assemble_rhs(const SpectralField& y, const SpectralField& U, const FluidParams& p,
                          const CutoffFn& cut, std::optional<double> theta_override) {
  require_basis(y);
  return assemble_rhs(workspace_for(y.basis()), y, U, p, cut, theta_override);
}

}  // namespace thirdgrade
