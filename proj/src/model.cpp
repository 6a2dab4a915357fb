#include "ssmkit/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace ssmkit {

void MechSystem::validate() const {
  if (M.rows() != n || M.cols() != n || C.rows() != n || C.cols() != n ||
      K.rows() != n || K.cols() != n)
    throw std::invalid_argument("MechSystem: matrix dimensions do not match n");
  if (f_ext.size() != n)
    throw std::invalid_argument("MechSystem: forcing vector dimension mismatch");
  if (!f_nl.empty()) {
    if (f_nl.state_dim() != 2 * n || f_nl.output_dim() != n)
      throw std::invalid_argument("MechSystem: force dimensions do not match n");
    f_nl.validate();
  }
}

VectorXd FirstOrderSystem::f_ext(Real phi) const {
  const Complex e(std::cos(phi), std::sin(phi));
  return (F_a * e + F_a.conjugate() * std::conj(e)).real();
}

VectorXd FirstOrderSystem::rhs(const VectorXd& z, Real phi, Real eps) const {
  VectorXd r = A * z;
  if (!F_nl.empty()) r += F_nl.eval(z);
  if (eps != 0.0) r += eps * f_ext(phi);
  return B.partialPivLu().solve(r);
}

FirstOrderSystem assemble_first_order(const MechSystem& mech) {
  mech.validate();
  const int n = mech.n;
  const int N = 2 * n;
  FirstOrderSystem sys;
  sys.N = N;
  sys.A = MatrixXd::Zero(N, N);
  sys.A.topLeftCorner(n, n) = -mech.K;
  sys.A.bottomRightCorner(n, n) = mech.M;
  sys.B = MatrixXd::Zero(N, N);
  sys.B.topLeftCorner(n, n) = mech.C;
  sys.B.topRightCorner(n, n) = mech.M;
  sys.B.bottomLeftCorner(n, n) = mech.M;
  sys.F_nl = PolynomialForce(N, N);
  for (const auto& t : mech.f_nl.terms())
    sys.F_nl.add_term(-t.coeff, t.output, t.factors);  // (-f_nl; 0) block
  sys.F_a = VectorXcd::Zero(N);
  sys.F_a.head(n) = (0.5 * mech.f_ext).cast<Complex>();
  sys.mech = mech;
  return sys;
}

MechSystem build_coupled_oscillators(Real c1, Real c2, Real b1, Real b2, Real f1, Real f2) {
  if (!(std::isfinite(c1) && std::isfinite(c2) && std::isfinite(b1) && std::isfinite(b2) &&
        std::isfinite(f1) && std::isfinite(f2)))
    throw std::invalid_argument("build_coupled_oscillators: nonfinite parameter");
  if (c1 < 0 || c2 < 0)
    throw std::invalid_argument("build_coupled_oscillators: negative damping");
  MechSystem m;
  m.n = 2;
  m.M = MatrixXd::Identity(2, 2);
  m.C = VectorXd{{c1, c2}}.asDiagonal();
  m.K = VectorXd{{1.0, 4.0}}.asDiagonal();
  m.f_nl = PolynomialForce(4, 2);
  if (b1 != 0.0) m.f_nl.add_term(b1, 0, {{0, 1}, {1, 1}});
  if (b2 != 0.0) m.f_nl.add_term(b2, 1, {{0, 2}});
  m.f_ext = VectorXd{{f1, f2}};
  return m;
}

MechSystem build_bernoulli_beam_length(int n_elements, Real k_l, Real k_nl, Real alpha,
                                       Real beta, Real length) {
  if (n_elements < 2)
    throw std::invalid_argument("build_bernoulli_beam: need at least 2 elements");
  const Real E = 45.0e9;     // Pa
  const Real rho = 1780.0;   // kg/m^3
  const Real b = 0.01, h = 0.01;
  const Real area = b * h;
  const Real inertia = b * h * h * h / 12.0;
  const Real le = length / n_elements;
  const Real EI = E * inertia;
  const Real rAl = rho * area * le;

  Eigen::Matrix4d Ke, Me;
  Ke << 12, 6 * le, -12, 6 * le,
      6 * le, 4 * le * le, -6 * le, 2 * le * le,
      -12, -6 * le, 12, -6 * le,
      6 * le, 2 * le * le, -6 * le, 4 * le * le;
  Ke *= EI / (le * le * le);
  Me << 156, 22 * le, 54, -13 * le,
      22 * le, 4 * le * le, 13 * le, -3 * le * le,
      54, 13 * le, 156, -22 * le,
      -13 * le, -3 * le * le, -22 * le, 4 * le * le;
  Me *= rAl / 420.0;

  const int nfull = 2 * (n_elements + 1);
  MatrixXd K = MatrixXd::Zero(nfull, nfull);
  MatrixXd M = MatrixXd::Zero(nfull, nfull);
  for (int e = 0; e < n_elements; ++e) {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        K(2 * e + i, 2 * e + j) += Ke(i, j);
        M(2 * e + i, 2 * e + j) += Me(i, j);
      }
  }
  // clamp node 0 (deflection and rotation)
  const int n = nfull - 2;
  MechSystem m;
  m.n = n;
  m.K = K.bottomRightCorner(n, n);
  m.M = M.bottomRightCorner(n, n);
  const int tip = 2 * (n_elements - 1);  // tip deflection DOF
  MatrixXd Kb = m.K;
  m.K(tip, tip) += k_l;
  m.C = alpha * m.M + beta * Kb;
  m.f_nl = PolynomialForce(2 * n, n);
  if (k_nl != 0.0) m.f_nl.add_term(k_nl, tip, {{tip, 3}});

  // f_ext = om1^2 M phi1 with phi1 mass-normalized: excites only the first mode.
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(m.K, m.M);
  const VectorXd om2 = es.eigenvalues();
  const Real om1sq = om2[0];
  VectorXd phi1 = es.eigenvectors().col(0);  // already M-normalized
  if (phi1[tip] < 0) phi1 = -phi1;
  m.f_ext = om1sq * (m.M * phi1);
  return m;
}

MechSystem build_bernoulli_beam(int n_elements, Real k_l, Real k_nl, Real alpha, Real beta) {
  return build_bernoulli_beam_length(n_elements, k_l, k_nl, alpha, beta, 2.7);
}

VectorXd second_order_residual(const MechSystem& m, const VectorXd& x, const VectorXd& xd,
                               const VectorXd& xdd, Real t, Real omega, Real eps) {
  VectorXd s(2 * m.n);
  s << x, xd;
  VectorXd r = m.M * xdd + m.C * xd + m.K * x - eps * std::cos(omega * t) * m.f_ext;
  if (!m.f_nl.empty()) r += m.f_nl.eval(s);
  return r;
}

}  // namespace ssmkit
