#include "ssmkit/periodic_orbit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssmkit {

namespace {

// Gauss-Legendre nodes/weights on [0, 1]
void gauss_legendre(int n, VectorXd& nodes, VectorXd& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // initial guess on [-1, 1], then Newton on P_n
    Real x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const Real dp = n * (x * p1 - p0) / (x * x - 1.0);
      const Real dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    Real p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const Real dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[n - 1 - i] = 0.5 * (x + 1.0);
    weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

Real lagrange_basis(const VectorXd& nodes, int j, Real s) {
  Real v = 1.0;
  for (int k = 0; k < nodes.size(); ++k)
    if (k != j) v *= (s - nodes[k]) / (nodes[j] - nodes[k]);
  return v;
}

Real lagrange_basis_deriv(const VectorXd& nodes, int j, Real s) {
  Real acc = 0.0;
  for (int m = 0; m < nodes.size(); ++m) {
    if (m == j) continue;
    Real term = 1.0 / (nodes[j] - nodes[m]);
    for (int k = 0; k < nodes.size(); ++k) {
      if (k == j || k == m) continue;
      term *= (s - nodes[k]) / (nodes[j] - nodes[k]);
    }
    acc += term;
  }
  return acc;
}

}  // namespace

CollocationMesh CollocationMesh::make(int n_int, int n_base) {
  if (n_int < 1 || n_base < 2)
    throw std::invalid_argument("CollocationMesh: need n_int >= 1 and n_base >= 2");
  CollocationMesh m;
  m.n_int = n_int;
  m.n_base = n_base;
  m.base_nodes = VectorXd::LinSpaced(n_base, 0.0, 1.0);
  gauss_legendre(n_base - 1, m.gauss_nodes, m.gauss_weights);
  m.L.resize(n_base - 1, n_base);
  m.D.resize(n_base - 1, n_base);
  for (int c = 0; c < n_base - 1; ++c)
    for (int b = 0; b < n_base; ++b) {
      m.L(c, b) = lagrange_basis(m.base_nodes, b, m.gauss_nodes[c]);
      m.D(c, b) = lagrange_basis_deriv(m.base_nodes, b, m.gauss_nodes[c]);
    }
  return m;
}

VectorXd POSolution::base_taus() const {
  const int np = mesh.n_points();
  VectorXd taus(np);
  const Real w = 1.0 / mesh.n_int;
  for (int i = 0; i < mesh.n_int; ++i)
    for (int b = 0; b < mesh.n_base; ++b)
      taus[i * (mesh.n_base - 1) + b] = (i + mesh.base_nodes[b]) * w;
  return taus;
}

VectorXd POSolution::state_at(Real tau) const {
  tau -= std::floor(tau);
  const Real w = 1.0 / mesh.n_int;
  int i = std::min(static_cast<int>(tau / w), mesh.n_int - 1);
  const Real s = (tau - i * w) / w;
  VectorXd out = VectorXd::Zero(dim);
  for (int b = 0; b < mesh.n_base; ++b)
    out += lagrange_basis(mesh.base_nodes, b, s) * states.col(i * (mesh.n_base - 1) + b);
  return out;
}

Real POSolution::residual(const ParamVectorField& vf) const {
  const int p = mesh.n_col();
  const Real w = 1.0 / mesh.n_int;
  Real worst = 0.0;
  for (int i = 0; i < mesh.n_int; ++i) {
    for (int c = 0; c < p; ++c) {
      VectorXd xd = VectorXd::Zero(dim), xc = VectorXd::Zero(dim);
      for (int b = 0; b < mesh.n_base; ++b) {
        xd += mesh.D(c, b) * states.col(i * p + b);
        xc += mesh.L(c, b) * states.col(i * p + b);
      }
      const Real t = period * (i + mesh.gauss_nodes[c]) * w;
      const VectorXd r = xd / (w * period) - vf.f(t, xc, omega, eps);
      worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
    }
  }
  worst = std::max(worst, (states.col(mesh.n_points() - 1) - states.col(0)).lpNorm<Eigen::Infinity>());
  return worst;
}

namespace {

// shared collocation assembly: rows scaled by 1/T for balanced conditioning
struct POAssembler {
  const ParamVectorField& vf;
  const CollocationMesh& mesh;
  int dim;
  bool with_period;   // period is an unknown (autonomous problems)
  bool with_param;    // trailing continuation parameter
  ActiveParam active = ActiveParam::Omega;
  MatrixXd ref;       // phase reference states (autonomous only)
  Real fixed_period = 0.0;

  int n_points() const { return mesh.n_points(); }
  int n_unknowns() const {
    return dim * n_points() + (with_period ? 1 : 0) + (with_param ? 1 : 0);
  }
  int n_equations() const {
    return dim * (n_points() - 1) + dim + (with_period ? 1 : 0);
  }

  Real period_of(const VectorXd& y, Real fallback) const {
    return with_period ? y[dim * n_points()] : fallback;
  }

  void unpack(const VectorXd& y, Real om_in, Real ep_in, MatrixXd& states, Real& T, Real& om,
              Real& ep) const {
    const int np = n_points();
    states = Eigen::Map<const MatrixXd>(y.data(), dim, np);
    T = with_period ? y[dim * np] : fixed_period;
    om = om_in;
    ep = ep_in;
    if (with_param) {
      const Real par = y[y.size() - 1];
      if (active == ActiveParam::Omega)
        om = par;
      else
        ep = par;
    }
  }

  // phase functional coefficients: row vector over state unknowns
  VectorXd phase_row() const {
    const int p = mesh.n_col();
    const Real w = 1.0 / mesh.n_int;
    VectorXd row = VectorXd::Zero(dim * n_points());
    for (int i = 0; i < mesh.n_int; ++i)
      for (int c = 0; c < p; ++c) {
        VectorXd dref = VectorXd::Zero(dim);
        for (int b = 0; b < mesh.n_base; ++b) dref += mesh.D(c, b) * ref.col(i * p + b);
        dref /= w;
        for (int b = 0; b < mesh.n_base; ++b)
          row.segment(dim * (i * p + b), dim) += (mesh.gauss_weights[c] * w * mesh.L(c, b)) * dref;
      }
    return row;
  }

  VectorXd residual(const VectorXd& y, Real om_in, Real ep_in) const {
    MatrixXd st;
    Real T, om, ep;
    unpack(y, om_in, ep_in, st, T, om, ep);
    const int p = mesh.n_col();
    const int np = n_points();
    const Real w = 1.0 / mesh.n_int;
    VectorXd r(n_equations());
    int rowi = 0;
    for (int i = 0; i < mesh.n_int; ++i)
      for (int c = 0; c < p; ++c) {
        VectorXd xd = VectorXd::Zero(dim), xc = VectorXd::Zero(dim);
        for (int b = 0; b < mesh.n_base; ++b) {
          xd += mesh.D(c, b) * st.col(i * p + b);
          xc += mesh.L(c, b) * st.col(i * p + b);
        }
        const Real t = T * (i + mesh.gauss_nodes[c]) * w;
        r.segment(rowi, dim) = xd / (w * T) - vf.f(t, xc, om, ep);
        rowi += dim;
      }
    r.segment(rowi, dim) = st.col(np - 1) - st.col(0);
    rowi += dim;
    if (with_period) {
      const VectorXd prow = phase_row();
      const VectorXd sflat = Eigen::Map<const VectorXd>(st.data(), dim * np);
      const VectorXd rflat = Eigen::Map<const VectorXd>(ref.data(), dim * np);
      r[rowi] = prow.dot(sflat) - prow.dot(rflat);
    }
    return r;
  }

  MatrixXd jacobian(const VectorXd& y, Real om_in, Real ep_in) const {
    MatrixXd st;
    Real T, om, ep;
    unpack(y, om_in, ep_in, st, T, om, ep);
    const int p = mesh.n_col();
    const int np = n_points();
    const Real w = 1.0 / mesh.n_int;
    MatrixXd J = MatrixXd::Zero(n_equations(), n_unknowns());
    const int Tcol = dim * np;
    const int Pcol = n_unknowns() - 1;
    int rowi = 0;
    for (int i = 0; i < mesh.n_int; ++i)
      for (int c = 0; c < p; ++c) {
        VectorXd xd = VectorXd::Zero(dim), xc = VectorXd::Zero(dim);
        for (int b = 0; b < mesh.n_base; ++b) {
          xd += mesh.D(c, b) * st.col(i * p + b);
          xc += mesh.L(c, b) * st.col(i * p + b);
        }
        const Real t = T * (i + mesh.gauss_nodes[c]) * w;
        const MatrixXd Jf = vf.dfdx(t, xc, om, ep);
        for (int b = 0; b < mesh.n_base; ++b) {
          J.block(rowi, dim * (i * p + b), dim, dim) =
              (mesh.D(c, b) / (w * T)) * MatrixXd::Identity(dim, dim) - mesh.L(c, b) * Jf;
        }
        if (with_period) {
          // d/dT of xd/(wT) - f(T tau, x): the time argument also scales with T
          VectorXd dT = -xd / (w * T * T);
          if (!vf.autonomous) {
            const Real h = 1e-7 * std::max(1.0, std::abs(t));
            dT -= (vf.f(t + h, xc, om, ep) - vf.f(t - h, xc, om, ep)) / (2 * h) *
                  ((i + mesh.gauss_nodes[c]) * w);
          }
          J.block(rowi, Tcol, dim, 1) = dT;
        }
        if (with_param) {
          if (active == ActiveParam::Omega)
            J.block(rowi, Pcol, dim, 1) = -vf.dfdom(t, xc, om, ep);
          else
            J.block(rowi, Pcol, dim, 1) = -vf.dfdeps(t, xc, om, ep);
        }
        rowi += dim;
      }
    J.block(rowi, 0, dim, dim) = -MatrixXd::Identity(dim, dim);
    J.block(rowi, dim * (np - 1), dim, dim) = MatrixXd::Identity(dim, dim);
    rowi += dim;
    if (with_period) J.block(rowi, 0, 1, dim * np) = phase_row().transpose();
    return J;
  }
};

POSolution finish_solution(const POAssembler& as, const VectorXd& y, Real om_in, Real ep_in) {
  POSolution po;
  po.mesh = as.mesh;
  po.dim = as.dim;
  MatrixXd st;
  Real T, om, ep;
  as.unpack(y, om_in, ep_in, st, T, om, ep);
  po.states = st;
  po.period = T;
  po.omega = om;
  po.eps = ep;
  po.autonomous = as.vf.autonomous;
  return po;
}

bool newton_po(const POAssembler& as, VectorXd& y, Real om, Real ep, const POSolveOptions& opts) {
  for (int it = 0; it < opts.max_iters; ++it) {
    const VectorXd r = as.residual(y, om, ep);
    if (!r.allFinite()) return false;
    if (r.lpNorm<Eigen::Infinity>() < opts.tol) return true;
    const MatrixXd J = as.jacobian(y, om, ep);
    const VectorXd dy = J.partialPivLu().solve(r);
    if (!dy.allFinite()) return false;
    y -= dy;
  }
  return as.residual(y, om, ep).lpNorm<Eigen::Infinity>() < opts.tol;
}

}  // namespace

POSolution collocate_po(const ParamVectorField& vf, const MatrixXd& guess_states,
                        Real guess_period, Real omega, Real eps, const CollocationMesh& mesh,
                        const POSolveOptions& opts) {
  if (!vf.autonomous)
    throw std::invalid_argument("collocate_po: use collocate_po_forced for forced systems");
  POAssembler as{vf, mesh, vf.dim, true, false, ActiveParam::Omega, guess_states, 0.0};
  if (guess_states.cols() != mesh.n_points() || guess_states.rows() != vf.dim)
    throw std::invalid_argument("collocate_po: guess has wrong shape");
  VectorXd y(as.n_unknowns());
  y.head(vf.dim * mesh.n_points()) =
      Eigen::Map<const VectorXd>(guess_states.data(), vf.dim * mesh.n_points());
  y[vf.dim * mesh.n_points()] = guess_period;
  if (!newton_po(as, y, omega, eps, opts))
    throw std::runtime_error("collocate_po: Newton did not converge");
  POSolution po = finish_solution(as, y, omega, eps);
  if (po.period <= 0) throw std::runtime_error("collocate_po: nonpositive period");
  if (opts.min_size > 0 && po_size(po) < opts.min_size)
    throw std::runtime_error("collocate_po: degenerate (zero-size) orbit");
  po.multipliers = floquet(po, vf);
  return po;
}

POSolution collocate_po_forced(const ParamVectorField& vf, const MatrixXd& guess_states,
                               Real period, Real omega, Real eps, const CollocationMesh& mesh,
                               const POSolveOptions& opts) {
  POAssembler as{vf, mesh, vf.dim, false, false, ActiveParam::Omega, MatrixXd(), period};
  if (guess_states.cols() != mesh.n_points() || guess_states.rows() != vf.dim)
    throw std::invalid_argument("collocate_po_forced: guess has wrong shape");
  VectorXd y = Eigen::Map<const VectorXd>(guess_states.data(), vf.dim * mesh.n_points());
  if (!newton_po(as, y, omega, eps, opts))
    throw std::runtime_error("collocate_po_forced: Newton did not converge");
  POSolution po = finish_solution(as, y, omega, eps);
  po.multipliers = floquet(po, vf);
  return po;
}

VectorXcd floquet(const POSolution& po, const ParamVectorField& vf) {
  const auto& mesh = po.mesh;
  const int n = po.dim;
  const int p = mesh.n_col();
  const Real w = 1.0 / mesh.n_int;
  MatrixXd M = MatrixXd::Identity(n, n);
  for (int i = 0; i < mesh.n_int; ++i) {
    // condensed fundamental solution over one subinterval:
    // rows: D(c,b)/(w T) - J(t_c) L(c,b); unknowns b = 1..p in terms of b = 0
    MatrixXd E(n * p, n * p);
    MatrixXd F(n * p, n);
    for (int c = 0; c < p; ++c) {
      VectorXd xc = VectorXd::Zero(n);
      for (int b = 0; b < mesh.n_base; ++b) xc += mesh.L(c, b) * po.states.col(i * p + b);
      const Real t = po.period * (i + mesh.gauss_nodes[c]) * w;
      const MatrixXd Jf = vf.dfdx(t, xc, po.omega, po.eps);
      for (int b = 0; b < mesh.n_base; ++b) {
        const MatrixXd blk =
            (mesh.D(c, b) / (w * po.period)) * MatrixXd::Identity(n, n) - mesh.L(c, b) * Jf;
        if (b == 0)
          F.block(n * c, 0, n, n) = blk;
        else
          E.block(n * c, n * (b - 1), n, n) = blk;
      }
    }
    Eigen::PartialPivLU<MatrixXd> lu(E);
    const MatrixXd X = lu.solve(-F);
    if (!X.allFinite()) throw std::runtime_error("floquet: ill-conditioned monodromy step");
    M = X.bottomRows(n) * M;
  }
  Eigen::EigenSolver<MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw std::runtime_error("floquet: eigen solve failed");
  return es.eigenvalues();
}

POTestFunctions po_test_functions(const VectorXcd& multipliers, bool autonomous, int n_b) {
  if (multipliers.size() == 0)
    throw std::invalid_argument("po_test_functions: empty multiplier set");
  std::vector<Complex> mults(multipliers.data(), multipliers.data() + multipliers.size());
  if (autonomous) {
    // remove the trivial multiplier (closest to +1) exactly once
    auto it = std::min_element(mults.begin(), mults.end(), [](Complex a, Complex b) {
      return std::abs(a - 1.0) < std::abs(b - 1.0);
    });
    mults.erase(it);
  }
  if (n_b > static_cast<int>(mults.size()))
    throw std::invalid_argument("po_test_functions: n_b exceeds available multipliers");
  if (n_b > 0) {
    std::sort(mults.begin(), mults.end(), [](Complex a, Complex b) {
      return std::abs(std::abs(a) - 1.0) < std::abs(std::abs(b) - 1.0);
    });
    mults.resize(n_b);
  }
  POTestFunctions tf;
  Complex sn(1, 0), pd(1, 0), tr(1, 0);
  for (const Complex& m : mults) {
    sn *= (m - 1.0);
    pd *= (m + 1.0);
  }
  if (mults.size() <= 1) {
    tr = Complex(1, 0);
  } else {
    for (std::size_t i = 0; i < mults.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) tr *= (mults[i] * mults[j] - 1.0);
  }
  tf.psi_sn = sn.real();
  tf.psi_pd = pd.real();
  tf.psi_tr = tr.real();
  return tf;
}

Real po_size(const POSolution& po) {
  const auto& mesh = po.mesh;
  const int p = mesh.n_col();
  const Real w = 1.0 / mesh.n_int;
  VectorXd mean = VectorXd::Zero(po.dim);
  for (int i = 0; i < mesh.n_int; ++i)
    for (int c = 0; c < p; ++c) {
      VectorXd xc = VectorXd::Zero(po.dim);
      for (int b = 0; b < mesh.n_base; ++b) xc += mesh.L(c, b) * po.states.col(i * p + b);
      mean += (mesh.gauss_weights[c] * w) * xc;
    }
  Real acc = 0.0;
  for (int i = 0; i < mesh.n_int; ++i)
    for (int c = 0; c < p; ++c) {
      VectorXd xc = VectorXd::Zero(po.dim);
      for (int b = 0; b < mesh.n_base; ++b) xc += mesh.L(c, b) * po.states.col(i * p + b);
      acc += (mesh.gauss_weights[c] * w) * (xc - mean).squaredNorm();
    }
  return std::sqrt(acc);
}

HopfSeed hb_switch(const BranchPoint& hb_event, const MatrixXd& jacobian,
                   const CollocationMesh& mesh, Real delta) {
  Eigen::EigenSolver<MatrixXd> es(jacobian);
  if (es.info() != Eigen::Success) throw std::runtime_error("hb_switch: eigen solve failed");
  // crossing pair: smallest |Re| with Im > 0
  int best = -1;
  Real best_re = std::numeric_limits<Real>::max();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex mu = es.eigenvalues()[i];
    if (mu.imag() > 1e-10 && std::abs(mu.real()) < best_re) {
      best_re = std::abs(mu.real());
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw std::runtime_error("hb_switch: no complex crossing pair at the HB point");
  const Real om_s = es.eigenvalues()[best].imag();
  const VectorXcd wvec = es.eigenvectors().col(best);
  const VectorXd x_hb = hb_event.state.head(jacobian.rows());

  HopfSeed seed;
  seed.period = 2.0 * kPi / om_s;
  const int np = mesh.n_points();
  seed.states.resize(jacobian.rows(), np);
  const Real scale = delta * std::max(1.0, x_hb.norm());
  // base-point fractions of the global mesh
  POSolution tmp;
  tmp.mesh = mesh;
  tmp.dim = static_cast<int>(jacobian.rows());
  const VectorXd taus = [&] {
    VectorXd t(np);
    const Real w = 1.0 / mesh.n_int;
    for (int i = 0; i < mesh.n_int; ++i)
      for (int b = 0; b < mesh.n_base; ++b)
        t[i * (mesh.n_base - 1) + b] = (i + mesh.base_nodes[b]) * w;
    return t;
  }();
  for (int k = 0; k < np; ++k) {
    const Real a = 2.0 * kPi * taus[k];
    seed.states.col(k) =
        x_hb + scale * (std::cos(a) * wvec.real() - std::sin(a) * wvec.imag());
  }
  return seed;
}

POSolution hb_switch_solve(const ParamVectorField& vf, const BranchPoint& hb_event,
                           const MatrixXd& jacobian, Real eps, const CollocationMesh& mesh,
                           Real delta) {
  const Real om_hb = hb_event.omega;
  for (const Real dom : {2e-4, -2e-4, 1e-3, -1e-3, 4e-3, -4e-3}) {
    for (const Real dscale : {1.0, 10.0, 50.0}) {
      try {
        const HopfSeed seed = hb_switch(hb_event, jacobian, mesh, delta * dscale);
        const POSolution po =
            collocate_po(vf, seed.states, seed.period, om_hb * (1.0 + dom), eps, mesh);
        if (po_size(po) > 1e-8) return po;
      } catch (const std::exception&) {
      }
    }
  }
  throw std::runtime_error("hb_switch_solve: no nondegenerate cycle found near the HB point");
}

namespace {

struct EventCheck {
  bool genuine = true;
};

// genuine-crossing filters evaluated on the multipliers at the localized point
bool genuine_po_event(const VectorXcd& mults, bool autonomous, EventType type) {
  std::vector<Complex> m(mults.data(), mults.data() + mults.size());
  if (autonomous) {
    auto it = std::min_element(m.begin(), m.end(), [](Complex a, Complex b) {
      return std::abs(a - 1.0) < std::abs(b - 1.0);
    });
    m.erase(it);
  }
  if (type == EventType::SN) {
    auto it = std::min_element(m.begin(), m.end(), [](Complex a, Complex b) {
      return std::abs(a - 1.0) < std::abs(b - 1.0);
    });
    return std::abs(it->imag()) < 1e-6 * (1.0 + std::abs(it->real()));
  }
  if (type == EventType::PD) {
    auto it = std::min_element(m.begin(), m.end(), [](Complex a, Complex b) {
      return std::abs(a + 1.0) < std::abs(b + 1.0);
    });
    return std::abs(it->imag()) < 1e-6 * (1.0 + std::abs(it->real()));
  }
  // TR: the pair product closest to 1 must come from a complex conjugate pair
  Real best = std::numeric_limits<Real>::max();
  Complex a(0, 0), b(0, 0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const Real v = std::abs(m[i] * m[j] - 1.0);
      if (v < best) {
        best = v;
        a = m[i];
        b = m[j];
      }
    }
  return std::abs(a - std::conj(b)) < 1e-6 * (1.0 + std::abs(a)) && std::abs(a.imag()) > 1e-8;
}

}  // namespace

POBranch continue_po(const ParamVectorField& vf, const POSolution& seed,
                     const POContinuationOptions& opts) {
  if (!vf.autonomous)
    throw std::invalid_argument("continue_po: only autonomous reduced cycles are continued");
  opts.settings.validate();
  const CollocationMesh mesh = seed.mesh;
  const int n = vf.dim;
  const int np = mesh.n_points();
  const int nu = n * np + 2;  // states, T, parameter

  POAssembler as{vf, mesh, n, true, true, opts.active, seed.states, 0.0};

  POBranch out;
  out.branch.kind = BranchKind::PeriodicOrbit;

  auto param_of = [&](const POSolution& po) {
    return opts.active == ActiveParam::Omega ? po.omega : po.eps;
  };
  auto pack = [&](const POSolution& po) {
    VectorXd y(nu);
    y.head(n * np) = Eigen::Map<const VectorXd>(po.states.data(), n * np);
    y[n * np] = po.period;
    y[nu - 1] = param_of(po);
    return y;
  };
  const Real om_fix = seed.omega, ep_fix = seed.eps;
  auto decode = [&](const VectorXd& y) {
    POSolution po = finish_solution(as, y, om_fix, ep_fix);
    po.multipliers = floquet(po, vf);
    std::vector<Complex> m(po.multipliers.data(), po.multipliers.data() + po.multipliers.size());
    auto it = std::min_element(m.begin(), m.end(), [](Complex A, Complex B) {
      return std::abs(A - 1.0) < std::abs(B - 1.0);
    });
    m.erase(it);
    po.stable = std::all_of(m.begin(), m.end(), [](Complex z) { return std::abs(z) < 1.0; });
    return po;
  };
  auto record_point = [&](const POSolution& po, const VectorXd& y) {
    BranchPoint bp;
    bp.state = y;
    bp.omega = po.omega;
    bp.eps = po.eps;
    bp.period = po.period;
    bp.size = po_size(po);
    bp.stable = po.stable;
    bp.eig = po.multipliers;
    out.branch.points.push_back(std::move(bp));
    out.orbits.push_back(po);
  };

  const POSolveOptions nopts{opts.settings.corrector_tol, opts.settings.max_corrector_iters, 0.0};

  // corrector with arclength row
  auto correct = [&](const VectorXd& tangent, const VectorXd& y_pred, VectorXd& y_out) {
    VectorXd y = y_pred;
    for (int it = 0; it < opts.settings.max_corrector_iters; ++it) {
      VectorXd r(nu);
      r.head(nu - 1) = as.residual(y, om_fix, ep_fix);
      r[nu - 1] = tangent.dot(y - y_pred);
      if (!r.allFinite()) return false;
      if (r.lpNorm<Eigen::Infinity>() < opts.settings.corrector_tol) {
        y_out = y;
        return true;
      }
      MatrixXd J(nu, nu);
      J.topRows(nu - 1) = as.jacobian(y, om_fix, ep_fix);
      J.row(nu - 1) = tangent.transpose();
      const VectorXd dy = J.partialPivLu().solve(r);
      if (!dy.allFinite()) return false;
      y -= dy;
    }
    return false;
  };
  auto tangent_at = [&](const VectorXd& y, const VectorXd& prev) {
    MatrixXd J(nu, nu);
    J.topRows(nu - 1) = as.jacobian(y, om_fix, ep_fix);
    J.row(nu - 1) = prev.transpose();
    VectorXd rhs = VectorXd::Zero(nu);
    rhs[nu - 1] = 1.0;
    VectorXd t = J.partialPivLu().solve(rhs);
    t /= t.norm();
    if (t.dot(prev) < 0) t = -t;
    return t;
  };

  // converge the seed at fixed parameter
  VectorXd y = pack(seed);
  {
    POAssembler as0{vf, mesh, n, true, false, opts.active, seed.states, 0.0};
    VectorXd y0 = y.head(nu - 1);
    if (!newton_po(as0, y0, seed.omega, seed.eps, nopts)) {
      out.branch.status = BranchStatus::SeedFailure;
      return out;
    }
    y.head(nu - 1) = y0;
  }

  VectorXd tangent = VectorXd::Zero(nu);
  tangent[nu - 1] = opts.settings.initial_direction;
  tangent = tangent_at(y, tangent);
  if (tangent[nu - 1] * opts.settings.initial_direction < 0) tangent = -tangent;

  POSolution cur = decode(y);
  record_point(cur, y);
  POTestFunctions tests = po_test_functions(cur.multipliers, true, opts.n_b);

  Real h = opts.settings.initial_step;
  while (static_cast<int>(out.branch.points.size()) < opts.settings.max_points) {
    as.ref = cur.states;  // phase condition follows the branch
    VectorXd y_new;
    if (!correct(tangent, y + h * tangent, y_new)) {
      h *= 0.5;
      if (h < opts.settings.min_step) {
        out.branch.status = BranchStatus::StepUnderflow;
        return out;
      }
      continue;
    }
    POSolution po_new = decode(y_new);
    const POTestFunctions tests_new = po_test_functions(po_new.multipliers, true, opts.n_b);

    struct W {
      Real a, b;
      EventType type;
    };
    const std::vector<W> watch = {{tests.psi_sn, tests_new.psi_sn, EventType::SN},
                                  {tests.psi_pd, tests_new.psi_pd, EventType::PD},
                                  {tests.psi_tr, tests_new.psi_tr, EventType::TR}};
    for (const auto& wv : watch) {
      if (!(wv.a * wv.b < 0)) continue;
      Real a = 0.0, b = h, fa = wv.a;
      VectorXd y_loc = y_new;
      POSolution po_loc = po_new;
      for (int it = 0; it < 80; ++it) {
        const Real mid = 0.5 * (a + b);
        VectorXd ym;
        if (!correct(tangent, y + mid * tangent, ym)) break;
        POSolution pm = decode(ym);
        const POTestFunctions tm = po_test_functions(pm.multipliers, true, opts.n_b);
        const Real fm = wv.type == EventType::SN   ? tm.psi_sn
                        : wv.type == EventType::PD ? tm.psi_pd
                                                   : tm.psi_tr;
        y_loc = ym;
        po_loc = pm;
        if (std::abs(fm) <= opts.settings.event_tol) break;
        if (fa * fm < 0)
          b = mid;
        else {
          a = mid;
          fa = fm;
        }
      }
      if (genuine_po_event(po_loc.multipliers, true, wv.type)) {
        BranchEvent ev;
        ev.type = wv.type;
        ev.interval_lo = static_cast<int>(out.branch.points.size()) - 1;
        ev.interval_hi = static_cast<int>(out.branch.points.size());
        ev.solution.state = y_loc;
        ev.solution.omega = po_loc.omega;
        ev.solution.eps = po_loc.eps;
        ev.solution.period = po_loc.period;
        ev.solution.size = po_size(po_loc);
        ev.solution.stable = po_loc.stable;
        ev.solution.eig = po_loc.multipliers;
        out.branch.events.push_back(std::move(ev));
        out.event_orbits.push_back(po_loc);
      }
    }

    tangent = tangent_at(y_new, tangent);
    y = y_new;
    cur = po_new;
    tests = tests_new;
    record_point(cur, y);
    h = std::min(h * 1.3, opts.settings.max_step);

    const Real par = param_of(cur);
    if (par < opts.param_lo || par > opts.param_hi) {
      out.branch.status = BranchStatus::WindowExit;
      return out;
    }
    if (po_size(cur) < opts.terminate_size) {
      out.branch.status = BranchStatus::Collapsed;
      return out;
    }
  }
  out.branch.status = BranchStatus::PointBudget;
  return out;
}

}  // namespace ssmkit
