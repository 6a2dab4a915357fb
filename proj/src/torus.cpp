#include "ssmkit/torus.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssmkit {

namespace {

using SpMat = Eigen::SparseMatrix<Real>;
using Triplet = Eigen::Triplet<Real>;

Real seg_phase(int i, int n_seg) { return 2.0 * kPi * i / n_seg; }

}  // namespace

MatrixXd rotation_matrix(int n_h, Real rho) {
  const int S = 2 * n_h + 1;
  const Real alpha = 2.0 * kPi * rho;
  MatrixXd R(S, S);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) {
      const Real th = seg_phase(i, S) - seg_phase(j, S) + alpha;
      Real acc = 1.0;
      for (int k = 1; k <= n_h; ++k) acc += 2.0 * std::cos(k * th);
      R(i, j) = acc / S;
    }
  return R;
}

MatrixXd rotation_matrix_drho(int n_h, Real rho) {
  const int S = 2 * n_h + 1;
  const Real alpha = 2.0 * kPi * rho;
  MatrixXd R(S, S);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) {
      const Real th = seg_phase(i, S) - seg_phase(j, S) + alpha;
      Real acc = 0.0;
      for (int k = 1; k <= n_h; ++k) acc -= 2.0 * k * std::sin(k * th);
      R(i, j) = acc * 2.0 * kPi / S;
    }
  return R;
}

MatrixXd rotation_operator(const MatrixXd& points, Real rho) {
  const int S = static_cast<int>(points.cols());
  if (S % 2 != 1) throw std::invalid_argument("rotation_operator: need an odd point count");
  return points * rotation_matrix((S - 1) / 2, rho).transpose();
}

MatrixXd TorusSolution::initial_curve() const {
  MatrixXd C(dim, n_seg());
  for (int s = 0; s < n_seg(); ++s) C.col(s) = segments[s].col(0);
  return C;
}

Real torus_residual(const TorusSolution& tor, const ParamVectorField& vf) {
  const auto& mesh = tor.mesh;
  const int p = mesh.n_col();
  const Real w = 1.0 / mesh.n_int;
  Real worst = 0.0;
  for (int s = 0; s < tor.n_seg(); ++s) {
    for (int i = 0; i < mesh.n_int; ++i)
      for (int c = 0; c < p; ++c) {
        VectorXd xd = VectorXd::Zero(tor.dim), xc = VectorXd::Zero(tor.dim);
        for (int b = 0; b < mesh.n_base; ++b) {
          xd += mesh.D(c, b) * tor.segments[s].col(i * p + b);
          xc += mesh.L(c, b) * tor.segments[s].col(i * p + b);
        }
        const Real t = tor.T2 * (i + mesh.gauss_nodes[c]) * w;
        worst = std::max(worst,
                         (xd / (w * tor.T2) - vf.f(t, xc, tor.omega, tor.eps)).lpNorm<Eigen::Infinity>());
      }
  }
  // boundary closure against the rotated initial curve
  const MatrixXd target = rotation_operator(tor.initial_curve(), tor.rho);
  for (int s = 0; s < tor.n_seg(); ++s)
    worst = std::max(worst, (tor.segments[s].col(mesh.n_points() - 1) - target.col(s))
                                .lpNorm<Eigen::Infinity>());
  return worst;
}

namespace {

// Unknown layout: [seg 0 states, ..., seg S-1 states, (T2), (rho), (pars...)].
struct TorusAssembler {
  const ParamVectorField& vf;
  CollocationMesh mesh;
  int dim = 0;
  int n_h = 0;
  bool with_T2 = false;   // autonomous: T2 unknown (plus time-phase condition)
  bool with_rho = false;  // free-rho
  std::vector<ActiveParam> pars;
  Real fixed_T2 = 0.0;
  Real fixed_rho = 0.0;
  // references for phase conditions
  std::vector<MatrixXd> ref;
  MatrixXd ref_curve_dphi;  // dim x S

  int S() const { return 2 * n_h + 1; }
  int np() const { return mesh.n_points(); }
  int state_count() const { return dim * S() * np(); }
  int n_unknowns() const {
    return state_count() + (with_T2 ? 1 : 0) + (with_rho ? 1 : 0) + static_cast<int>(pars.size());
  }
  int n_equations() const {
    return dim * S() * (np() - 1) + dim * S() + (with_T2 ? 1 : 0) + 1;
  }
  int col_of(int s, int k, int d) const { return (s * np() + k) * dim + d; }
  int T2col() const { return state_count(); }
  int rhocol() const { return state_count() + (with_T2 ? 1 : 0); }
  int parcol(int a) const { return state_count() + (with_T2 ? 1 : 0) + (with_rho ? 1 : 0) + a; }

  void set_reference(const TorusSolution& t) {
    ref = t.segments;
    // spectral phi-derivative of the reference initial curve
    MatrixXd C(dim, S());
    for (int s = 0; s < S(); ++s) C.col(s) = t.segments[s].col(0);
    ref_curve_dphi = C * (rotation_matrix_drho(n_h, 0.0) / (2.0 * kPi)).transpose();
  }

  void unpack(const VectorXd& y, Real om_in, Real ep_in, std::vector<MatrixXd>& segs, Real& T2,
              Real& rho, Real& om, Real& ep) const {
    segs.resize(S());
    for (int s = 0; s < S(); ++s)
      segs[s] = Eigen::Map<const MatrixXd>(y.data() + s * dim * np(), dim, np());
    T2 = with_T2 ? y[T2col()] : fixed_T2;
    rho = with_rho ? y[rhocol()] : fixed_rho;
    om = om_in;
    ep = ep_in;
    for (std::size_t a = 0; a < pars.size(); ++a) {
      if (pars[a] == ActiveParam::Omega)
        om = y[parcol(static_cast<int>(a))];
      else
        ep = y[parcol(static_cast<int>(a))];
    }
  }

  VectorXd residual(const VectorXd& y, Real om_in, Real ep_in) const {
    std::vector<MatrixXd> segs;
    Real T2, rho, om, ep;
    unpack(y, om_in, ep_in, segs, T2, rho, om, ep);
    const int p = mesh.n_col();
    const Real w = 1.0 / mesh.n_int;
    VectorXd r(n_equations());
    int rowi = 0;
    for (int s = 0; s < S(); ++s)
      for (int i = 0; i < mesh.n_int; ++i)
        for (int c = 0; c < p; ++c) {
          VectorXd xd = VectorXd::Zero(dim), xc = VectorXd::Zero(dim);
          for (int b = 0; b < mesh.n_base; ++b) {
            xd += mesh.D(c, b) * segs[s].col(i * p + b);
            xc += mesh.L(c, b) * segs[s].col(i * p + b);
          }
          const Real t = T2 * (i + mesh.gauss_nodes[c]) * w;
          r.segment(rowi, dim) = xd / (w * T2) - vf.f(t, xc, om, ep);
          rowi += dim;
        }
    // all-to-all rotated boundary conditions
    const MatrixXd R = rotation_matrix(n_h, rho);
    for (int s = 0; s < S(); ++s) {
      VectorXd target = VectorXd::Zero(dim);
      for (int j = 0; j < S(); ++j) target += R(s, j) * segs[j].col(0);
      r.segment(rowi, dim) = segs[s].col(np() - 1) - target;
      rowi += dim;
    }
    if (with_T2) {
      // integral time-phase condition against the reference
      Real acc = 0.0;
      for (int s = 0; s < S(); ++s)
        for (int i = 0; i < mesh.n_int; ++i)
          for (int c = 0; c < p; ++c) {
            VectorXd dref = VectorXd::Zero(dim), xc = VectorXd::Zero(dim), xr = VectorXd::Zero(dim);
            for (int b = 0; b < mesh.n_base; ++b) {
              dref += mesh.D(c, b) * ref[s].col(i * p + b);
              xc += mesh.L(c, b) * segs[s].col(i * p + b);
              xr += mesh.L(c, b) * ref[s].col(i * p + b);
            }
            acc += mesh.gauss_weights[c] * w * dref.dot(xc - xr) / w;
          }
      r[rowi++] = acc;
    }
    // curve-phase pin along the rotation direction
    {
      Real acc = 0.0;
      for (int s = 0; s < S(); ++s)
        acc += ref_curve_dphi.col(s).dot(segs[s].col(0) - ref[s].col(0));
      r[rowi++] = acc;
    }
    return r;
  }

  SpMat jacobian(const VectorXd& y, Real om_in, Real ep_in) const {
    std::vector<MatrixXd> segs;
    Real T2, rho, om, ep;
    unpack(y, om_in, ep_in, segs, T2, rho, om, ep);
    const int p = mesh.n_col();
    const Real w = 1.0 / mesh.n_int;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(S()) * mesh.n_int * p * dim * dim * (mesh.n_base + 2));
    int rowi = 0;
    for (int s = 0; s < S(); ++s)
      for (int i = 0; i < mesh.n_int; ++i)
        for (int c = 0; c < p; ++c) {
          VectorXd xd = VectorXd::Zero(dim), xc = VectorXd::Zero(dim);
          for (int b = 0; b < mesh.n_base; ++b) {
            xd += mesh.D(c, b) * segs[s].col(i * p + b);
            xc += mesh.L(c, b) * segs[s].col(i * p + b);
          }
          const Real t = T2 * (i + mesh.gauss_nodes[c]) * w;
          const MatrixXd Jf = vf.dfdx(t, xc, om, ep);
          for (int b = 0; b < mesh.n_base; ++b)
            for (int d = 0; d < dim; ++d)
              for (int e = 0; e < dim; ++e) {
                Real v = -mesh.L(c, b) * Jf(d, e);
                if (d == e) v += mesh.D(c, b) / (w * T2);
                if (v != 0.0) trips.emplace_back(rowi + d, col_of(s, i * p + b, e), v);
              }
          if (with_T2) {
            VectorXd dT = -xd / (w * T2 * T2);
            if (!vf.autonomous) {
              const Real h = 1e-7 * std::max(1.0, std::abs(t));
              dT -= (vf.f(t + h, xc, om, ep) - vf.f(t - h, xc, om, ep)) / (2 * h) *
                    ((i + mesh.gauss_nodes[c]) * w);
            }
            for (int d = 0; d < dim; ++d) trips.emplace_back(rowi + d, T2col(), dT[d]);
          }
          for (std::size_t a = 0; a < pars.size(); ++a) {
            const VectorXd dp = pars[a] == ActiveParam::Omega ? -vf.dfdom(t, xc, om, ep)
                                                              : -vf.dfdeps(t, xc, om, ep);
            for (int d = 0; d < dim; ++d)
              trips.emplace_back(rowi + d, parcol(static_cast<int>(a)), dp[d]);
          }
          rowi += dim;
        }
    const MatrixXd R = rotation_matrix(n_h, rho);
    const MatrixXd dR = rotation_matrix_drho(n_h, rho);
    for (int s = 0; s < S(); ++s) {
      for (int d = 0; d < dim; ++d) {
        trips.emplace_back(rowi + d, col_of(s, np() - 1, d), 1.0);
        for (int j = 0; j < S(); ++j)
          trips.emplace_back(rowi + d, col_of(j, 0, d), -R(s, j));
      }
      if (with_rho) {
        VectorXd drho = VectorXd::Zero(dim);
        for (int j = 0; j < S(); ++j) drho -= dR(s, j) * segs[j].col(0);
        for (int d = 0; d < dim; ++d) trips.emplace_back(rowi + d, rhocol(), drho[d]);
      }
      rowi += dim;
    }
    if (with_T2) {
      for (int s = 0; s < S(); ++s)
        for (int i = 0; i < mesh.n_int; ++i)
          for (int c = 0; c < p; ++c) {
            VectorXd dref = VectorXd::Zero(dim);
            for (int b = 0; b < mesh.n_base; ++b) dref += mesh.D(c, b) * ref[s].col(i * p + b);
            for (int b = 0; b < mesh.n_base; ++b)
              for (int d = 0; d < dim; ++d)
                trips.emplace_back(rowi, col_of(s, i * p + b, d),
                                   mesh.gauss_weights[c] * mesh.L(c, b) * dref[d]);
          }
      ++rowi;
    }
    for (int s = 0; s < S(); ++s)
      for (int d = 0; d < dim; ++d)
        trips.emplace_back(rowi, col_of(s, 0, d), ref_curve_dphi(d, s));
    ++rowi;

    SpMat J(n_equations(), n_unknowns());
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
  }
};

VectorXd pack_torus(const TorusAssembler& as, const TorusSolution& t, ActiveParam which,
                    bool include_par) {
  VectorXd y(as.n_unknowns());
  for (int s = 0; s < as.S(); ++s)
    y.segment(s * as.dim * as.np(), as.dim * as.np()) =
        Eigen::Map<const VectorXd>(t.segments[s].data(), as.dim * as.np());
  if (as.with_T2) y[as.T2col()] = t.T2;
  if (as.with_rho) y[as.rhocol()] = t.rho;
  if (include_par && !as.pars.empty()) {
    for (std::size_t a = 0; a < as.pars.size(); ++a)
      y[as.parcol(static_cast<int>(a))] =
          (as.pars[a] == ActiveParam::Omega) ? t.omega : t.eps;
  }
  (void)which;
  return y;
}

TorusSolution unpack_torus(const TorusAssembler& as, const VectorXd& y, Real om_in, Real ep_in,
                           const TorusSolution& proto) {
  TorusSolution t = proto;
  std::vector<MatrixXd> segs;
  Real T2, rho, om, ep;
  as.unpack(y, om_in, ep_in, segs, T2, rho, om, ep);
  t.segments = std::move(segs);
  t.T2 = T2;
  t.rho = rho;
  t.omega = om;
  t.eps = ep;
  return t;
}

bool newton_torus(const TorusAssembler& as, VectorXd& y, Real om, Real ep,
                  const TorusSolveOptions& opts) {
  Eigen::SparseLU<SpMat> lu;
  for (int it = 0; it < opts.max_iters; ++it) {
    const VectorXd r = as.residual(y, om, ep);
    if (!r.allFinite()) return false;
    if (r.lpNorm<Eigen::Infinity>() < opts.tol) return true;
    SpMat J = as.jacobian(y, om, ep);
    // square system at fixed parameters
    J.makeCompressed();
    lu.compute(J);
    if (lu.info() != Eigen::Success) return false;
    const VectorXd dy = lu.solve(r);
    if (!dy.allFinite()) return false;
    y -= dy;
  }
  return as.residual(y, om, ep).lpNorm<Eigen::Infinity>() < opts.tol;
}

}  // namespace

TrSwitchResult tr_switch(const POSolution& po, const ParamVectorField& vf, int n_h, Real delta) {
  // multipliers and the crossing complex pair e^{+- i alpha}
  const VectorXcd mults = po.multipliers.size() ? po.multipliers : floquet(po, vf);
  int best = -1;
  Real bestd = std::numeric_limits<Real>::max();
  for (Eigen::Index i = 0; i < mults.size(); ++i) {
    if (mults[i].imag() <= 1e-10) continue;
    const Real d = std::abs(std::abs(mults[i]) - 1.0);
    if (d < bestd) {
      bestd = d;
      best = static_cast<int>(i);
    }
  }
  if (best < 0)
    throw std::runtime_error("tr_switch: no complex multiplier pair near the unit circle");
  const Real alpha = std::arg(mults[best]);

  TrSwitchResult out;
  out.alpha = alpha;
  out.strong_resonance = false;
  for (int q = 1; q <= 4; ++q)
    for (int pnum = 0; pnum <= q; ++pnum)
      if (std::abs(alpha - 2.0 * kPi * pnum / q) < 0.02) out.strong_resonance = true;

  // monodromy eigenvector of the crossing pair, then propagated along the cycle
  const auto& mesh = po.mesh;
  const int n = po.dim;
  const int p = mesh.n_col();
  const Real w = 1.0 / mesh.n_int;

  MatrixXd M = MatrixXd::Identity(n, n);
  std::vector<MatrixXd> prop(mesh.n_int);  // interior+end propagators per interval
  std::vector<MatrixXd> entry(mesh.n_int);
  for (int i = 0; i < mesh.n_int; ++i) {
    MatrixXd E(n * p, n * p), F(n * p, n);
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
    prop[i] = E.partialPivLu().solve(-F);  // (n p) x n: base points 1..p vs entry
    entry[i] = M;
    M = prop[i].bottomRows(n) * M;
  }
  Eigen::EigenSolver<MatrixXd> es(M);
  int ev = -1;
  Real evd = std::numeric_limits<Real>::max();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Real d = std::abs(es.eigenvalues()[i] - mults[best]);
    if (d < evd) {
      evd = d;
      ev = static_cast<int>(i);
    }
  }
  VectorXcd wv = es.eigenvectors().col(ev);
  Eigen::Index imax;
  wv.cwiseAbs().maxCoeff(&imax);
  wv *= std::polar(1.0, -std::arg(wv[imax]));
  wv /= wv.cwiseAbs().maxCoeff();

  // eigenplane at every base point
  MatrixXcd wplane(n, mesh.n_points());
  for (int i = 0; i < mesh.n_int; ++i) {
    const VectorXcd we = entry[i].cast<Complex>() * wv;
    wplane.col(i * p) = we;
    for (int b = 1; b < mesh.n_base; ++b)
      wplane.col(i * p + b) = prop[i].middleRows(n * (b - 1), n).cast<Complex>() * we;
  }

  TorusSolution seed;
  seed.mesh = mesh;
  seed.dim = n;
  seed.n_h = n_h;
  seed.T2 = po.period;
  seed.rho = alpha / (2.0 * kPi);
  seed.omega = po.omega;
  seed.eps = po.eps;
  seed.forced = !vf.autonomous;
  seed.stable = po.stable;
  seed.segments.resize(seed.n_seg());
  const Real scale = delta * std::max(1.0, po.states.norm() / std::sqrt(po.states.cols()));
  for (int s = 0; s < seed.n_seg(); ++s) {
    const Complex phase = std::polar(1.0, seg_phase(s, seed.n_seg()));
    seed.segments[s] = po.states + scale * (phase * wplane.array()).real().matrix();
  }
  out.seed = std::move(seed);
  return out;
}

TorusSolution solve_torus(const ParamVectorField& vf, const TorusSolution& guess,
                          const TorusSolveOptions& opts) {
  TorusAssembler as{vf,    guess.mesh, guess.dim, guess.n_h, !guess.forced,
                    true,  {},         guess.T2,  guess.rho};
  as.set_reference(guess);
  VectorXd y = pack_torus(as, guess, ActiveParam::Omega, false);
  if (!newton_torus(as, y, guess.omega, guess.eps, opts))
    throw std::runtime_error("solve_torus: Newton did not converge");
  return unpack_torus(as, y, guess.omega, guess.eps, guess);
}

TorusBranch continue_torus(const ParamVectorField& vf, const TorusSolution& seed,
                           const TorusContinuationOptions& opts) {
  opts.settings.validate();
  TorusBranch out;
  out.branch.kind = BranchKind::Torus2;

  TorusAssembler as{vf,
                    seed.mesh,
                    seed.dim,
                    seed.n_h,
                    !seed.forced,
                    opts.mode == RhoMode::Free,
                    {},
                    seed.T2,
                    seed.rho};
  if (opts.mode == RhoMode::Free)
    as.pars = {opts.active};
  else
    as.pars = {ActiveParam::Omega, ActiveParam::Eps};
  as.set_reference(seed);

  const int nu = as.n_unknowns();
  const TorusSolveOptions nopts{opts.settings.corrector_tol, opts.settings.max_corrector_iters};

  auto bordered_solve = [&](const SpMat& J, const VectorXd& trow, const VectorXd& rhs) {
    SpMat Jb(nu, nu);
    std::vector<Triplet> trips;
    trips.reserve(J.nonZeros() + nu);
    for (int k = 0; k < J.outerSize(); ++k)
      for (SpMat::InnerIterator it(J, k); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int c = 0; c < nu; ++c)
      if (trow[c] != 0.0) trips.emplace_back(nu - 1 + 0, c, trow[c]);
    Jb.setFromTriplets(trips.begin(), trips.end());
    Jb.makeCompressed();
    Eigen::SparseLU<SpMat> lu(Jb);
    if (lu.info() != Eigen::Success) return VectorXd(VectorXd::Constant(nu, NAN));
    return VectorXd(lu.solve(rhs));
  };

  auto correct = [&](const VectorXd& tangent, const VectorXd& y_pred, VectorXd& y_out) {
    VectorXd y = y_pred;
    for (int it = 0; it < opts.settings.max_corrector_iters; ++it) {
      VectorXd r(nu);
      r.head(nu - 1) = as.residual(y, seed.omega, seed.eps);
      r[nu - 1] = tangent.dot(y - y_pred);
      if (!r.allFinite()) return false;
      if (r.lpNorm<Eigen::Infinity>() < opts.settings.corrector_tol) {
        y_out = y;
        return true;
      }
      const VectorXd dy = bordered_solve(as.jacobian(y, seed.omega, seed.eps), tangent, r);
      if (!dy.allFinite()) return false;
      y -= dy;
    }
    return false;
  };
  auto tangent_at = [&](const VectorXd& y, const VectorXd& prev) {
    VectorXd rhs = VectorXd::Zero(nu);
    rhs[nu - 1] = 1.0;
    VectorXd t = bordered_solve(as.jacobian(y, seed.omega, seed.eps), prev, rhs);
    t /= t.norm();
    if (t.dot(prev) < 0) t = -t;
    return t;
  };
  auto record = [&](const TorusSolution& t, const VectorXd& y) {
    BranchPoint bp;
    bp.state = y;
    bp.omega = t.omega;
    bp.eps = t.eps;
    bp.period = t.T2;
    bp.size = t.rho;
    bp.stable = t.stable;
    out.branch.points.push_back(std::move(bp));
    out.tori.push_back(t);
  };

  // converge the seed at fixed parameters first
  TorusSolution cur = solve_torus(vf, seed, nopts);
  VectorXd y = pack_torus(as, cur, opts.active, true);

  VectorXd tangent = VectorXd::Zero(nu);
  tangent[nu - 1] = opts.settings.initial_direction;
  tangent = tangent_at(y, tangent);
  if (tangent[nu - 1] * opts.settings.initial_direction < 0) tangent = -tangent;
  record(cur, y);

  Real h = opts.settings.initial_step;
  while (static_cast<int>(out.branch.points.size()) < opts.settings.max_points) {
    as.set_reference(cur);
    VectorXd y_new;
    if (!correct(tangent, y + h * tangent, y_new)) {
      h *= 0.5;
      if (h < opts.settings.min_step) {
        out.branch.status = BranchStatus::StepUnderflow;  // torus breakdown
        return out;
      }
      continue;
    }
    tangent = tangent_at(y_new, tangent);
    y = y_new;
    cur = unpack_torus(as, y, seed.omega, seed.eps, cur);
    record(cur, y);
    h = std::min(h * 1.3, opts.settings.max_step);

    const Real par = (opts.active == ActiveParam::Omega) ? cur.omega : cur.eps;
    if (par < opts.param_lo || par > opts.param_hi) {
      out.branch.status = BranchStatus::WindowExit;
      return out;
    }
  }
  out.branch.status = BranchStatus::PointBudget;
  return out;
}

}  // namespace ssmkit
