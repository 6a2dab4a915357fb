#include "ssmkit/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ssmkit {

namespace {

// diagonal of the linearized reduced dynamics over p = (q_1, qb_1, ...)
VectorXcd lambda_diag(const MasterSubspace& ms) {
  VectorXcd lam(2 * ms.m);
  for (int i = 0; i < ms.m; ++i) {
    lam[2 * i] = ms.lambda[i];
    lam[2 * i + 1] = std::conj(ms.lambda[i]);
  }
  return lam;
}

MatrixXcd basis_right(const MasterSubspace& ms) {
  MatrixXcd V(ms.V.rows(), 2 * ms.m);
  for (int i = 0; i < ms.m; ++i) {
    V.col(2 * i) = ms.V.col(i);
    V.col(2 * i + 1) = ms.V.col(i).conjugate();
  }
  return V;
}

MatrixXcd basis_left(const MasterSubspace& ms) {
  MatrixXcd U(ms.U.rows(), 2 * ms.m);
  for (int i = 0; i < ms.m; ++i) {
    U.col(2 * i) = ms.U.col(i);
    U.col(2 * i + 1) = ms.U.col(i).conjugate();
  }
  return U;
}

// coefficients of F_nl(W(p)) truncated at max_deg; only degree >= 2 output kept
VectorSeries compose_force(const PolynomialForce& F, const VectorSeries& W, int max_deg,
                           int nvars, int N) {
  VectorSeries out;
  if (F.empty()) return out;
  // per-state scalar series, built lazily for the rows the force touches
  std::map<int, ScalarSeries> comp;
  auto component = [&](int row) -> const ScalarSeries& {
    auto it = comp.find(row);
    if (it != comp.end()) return it->second;
    ScalarSeries s;
    for (const auto& [k, vec] : W)
      if (vec[row] != Complex(0, 0)) s[k] = vec[row];
    return comp.emplace(row, std::move(s)).first->second;
  };
  for (const auto& t : F.terms()) {
    ScalarSeries prod;
    prod[MultiIndex(nvars, 0)] = Complex(1, 0);
    for (const auto& [idx, pw] : t.factors)
      prod = series_mul(prod, series_pow(component(idx), pw, max_deg, nvars), max_deg);
    for (const auto& [k, val] : prod) {
      if (degree(k) < 2 || val == Complex(0, 0)) continue;
      auto it = out.find(k);
      if (it == out.end()) it = out.emplace(k, VectorXcd::Zero(N)).first;
      it->second[t.output] += t.coeff * val;
    }
  }
  return out;
}

using RCoeffMap = std::map<std::pair<int, MultiIndex>, Complex>;

// degree-d coefficients of D_p W . N where N holds the resonant monomials of
// degree < d and only W parts of degree >= 2 contribute
VectorSeries nonlinear_transport(const VectorSeries& W, const RCoeffMap& Rnl, int d, int N) {
  VectorSeries H;
  for (const auto& [kw, wv] : W) {
    if (degree(kw) < 2) continue;
    for (const auto& [key, gam] : Rnl) {
      const auto& [j, kn] = key;
      if (kw[j] == 0) continue;
      if (degree(kw) - 1 + degree(kn) != d) continue;
      MultiIndex kc(kw.size());
      for (std::size_t i = 0; i < kw.size(); ++i) kc[i] = kw[i] + kn[i];
      kc[j] -= 1;
      auto it = H.find(kc);
      if (it == H.end()) it = H.emplace(kc, VectorXcd::Zero(N)).first;
      it->second += Real(kw[j]) * gam * wv;
    }
  }
  return H;
}

}  // namespace

VectorXcd ReducedModel::p_from_q(const VectorXcd& q) const {
  VectorXcd p(2 * master.m);
  for (int i = 0; i < master.m; ++i) {
    p[2 * i] = q[i];
    p[2 * i + 1] = std::conj(q[i]);
  }
  return p;
}

VectorXcd ReducedModel::eval_W(const VectorXcd& p) const {
  VectorXcd z = VectorXcd::Zero(sys.N);
  for (const auto& [k, vec] : W) {
    Complex mono(1, 0);
    for (std::size_t i = 0; i < k.size(); ++i)
      for (int c = 0; c < k[i]; ++c) mono *= p[static_cast<Eigen::Index>(i)];
    z += mono * vec;
  }
  return z;
}

NonAutonomousPart ReducedModel::nonautonomous(Real omega) const {
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->entries.find(omega);
    if (it != cache_->entries.end()) return it->second;
  }
  NonAutonomousPart na = leading_nonautonomous(sys, master, omega);
  std::lock_guard<std::mutex> lock(cache_->mutex);
  return cache_->entries.emplace(omega, std::move(na)).first->second;
}

void ReducedModel::cache_nonautonomous(const NonAutonomousPart& na) const {
  std::lock_guard<std::mutex> lock(cache_->mutex);
  cache_->entries[na.omega] = na;
}

std::map<Real, NonAutonomousPart> ReducedModel::nonautonomous_cache() const {
  std::lock_guard<std::mutex> lock(cache_->mutex);
  return cache_->entries;
}

ReducedModel expand_autonomous(const FirstOrderSystem& sys, const MasterSubspace& master,
                               int order) {
  if (order < 2) throw std::invalid_argument("expand_autonomous: order must be >= 2");
  if (!sys.F_nl.empty()) sys.F_nl.validate();

  const int N = sys.N;
  const int nvars = 2 * master.m;
  const VectorXcd lam = lambda_diag(master);
  const MatrixXcd V = basis_right(master);
  const MatrixXcd U = basis_left(master);
  const MatrixXcd Bc = sys.B.cast<Complex>();
  const MatrixXcd Ac = sys.A.cast<Complex>();

  ReducedModel rm;
  rm.sys = sys;
  rm.master = master;
  rm.order = order;

  // first order: tangency to the master subspace
  for (int i = 0; i < nvars; ++i) {
    MultiIndex e(nvars, 0);
    e[i] = 1;
    rm.W[e] = V.col(i);
  }

  RCoeffMap Rnl;

  for (int d = 2; d <= order; ++d) {
    const VectorSeries G = compose_force(sys.F_nl, rm.W, d, nvars, N);
    const VectorSeries H = nonlinear_transport(rm.W, Rnl, d, N);

    for (const MultiIndex& k : multi_indices_of_degree(nvars, d)) {
      const MultiIndex kc = conjugate_index(k);
      if (kc < k) continue;  // mirrored from the canonical representative

      VectorXcd rhs = VectorXcd::Zero(N);
      if (auto it = G.find(k); it != G.end()) rhs = it->second;
      if (auto it = H.find(k); it != H.end()) rhs -= Bc * it->second;

      Complex klam(0, 0);
      for (int i = 0; i < nvars; ++i) klam += Real(k[i]) * lam[i];

      std::vector<int> resonant;
      for (int j = 0; j < nvars; ++j)
        if (std::abs(klam - lam[j]) <= master.tol_rel * std::abs(lam[j].imag()))
          resonant.push_back(j);

      VectorXcd Wk;
      if (resonant.empty()) {
        MatrixXcd Mk = klam * Bc - Ac;
        Wk = Mk.partialPivLu().solve(rhs);
        const Real res = (Mk * Wk - rhs).norm();
        if (res > 1e-6 * (1.0 + rhs.norm() + Mk.norm() * Wk.norm()))
          throw std::runtime_error(
              "expand_autonomous: near-singular cohomological solve at a non-resonant "
              "multi-index; consider a larger resonance tolerance");
      } else {
        const int r = static_cast<int>(resonant.size());
        MatrixXcd Mb = MatrixXcd::Zero(N + r, N + r);
        Mb.topLeftCorner(N, N) = klam * Bc - Ac;
        for (int a = 0; a < r; ++a) {
          Mb.block(0, N + a, N, 1) = Bc * V.col(resonant[a]);
          Mb.block(N + a, 0, 1, N) = U.col(resonant[a]).adjoint() * Bc;
        }
        VectorXcd rb = VectorXcd::Zero(N + r);
        rb.head(N) = rhs;
        const VectorXcd sol = Mb.partialPivLu().solve(rb);
        Wk = sol.head(N);
        for (int a = 0; a < r; ++a) Rnl[{resonant[a], k}] = sol[N + a];
      }

      rm.W[k] = Wk;
      if (kc != k) {
        rm.W[kc] = Wk.conjugate();
        // mirror resonant coefficients: component j at k <-> conjugate component at kc
        for (int j : resonant) {
          const int jc = (j % 2 == 0) ? j + 1 : j - 1;
          Rnl[{jc, kc}] = std::conj(Rnl[{j, k}]);
        }
      }
    }
  }

  rm.gamma.assign(master.m, {});
  for (const auto& [key, val] : Rnl) {
    const auto& [comp, k] = key;
    if (comp % 2 != 0) continue;
    GammaTerm g;
    g.l.resize(master.m);
    g.j.resize(master.m);
    for (int i = 0; i < master.m; ++i) {
      g.l[i] = k[2 * i];
      g.j[i] = k[2 * i + 1];
    }
    g.value = val;
    rm.gamma[comp / 2].push_back(std::move(g));
  }

  rm.f_mod = VectorXcd::Zero(master.m);
  for (int i = 0; i < master.m; ++i)
    if (master.r[i] == Rational(1))
      rm.f_mod[i] = (master.U.col(i).adjoint() * sys.F_a)(0);

  return rm;
}

NonAutonomousPart leading_nonautonomous(const FirstOrderSystem& sys,
                                        const MasterSubspace& master, Real omega) {
  if (omega <= 0) throw std::invalid_argument("leading_nonautonomous: Omega must be positive");
  const int N = sys.N;
  const Complex iw(0.0, omega);

  std::vector<int> resonant;
  for (int i = 0; i < master.m; ++i)
    if (std::abs(master.lambda[i] - iw) <= master.tol_rel * omega) resonant.push_back(i);

  NonAutonomousPart na;
  na.omega = omega;
  na.S0 = VectorXcd::Zero(master.m);

  const MatrixXcd Mk = iw * sys.B.cast<Complex>() - sys.A.cast<Complex>();
  if (resonant.empty()) {
    na.x0 = Mk.partialPivLu().solve(sys.F_a);
    const Real res = (Mk * na.x0 - sys.F_a).norm();
    if (res > 1e-8 * (1.0 + sys.F_a.norm() + Mk.norm() * na.x0.norm()))
      throw std::runtime_error("leading_nonautonomous: singular linear solve");
    return na;
  }

  const int r = static_cast<int>(resonant.size());
  MatrixXcd Mb = MatrixXcd::Zero(N + r, N + r);
  Mb.topLeftCorner(N, N) = Mk;
  for (int a = 0; a < r; ++a) {
    Mb.block(0, N + a, N, 1) = sys.B.cast<Complex>() * master.V.col(resonant[a]);
    Mb.block(N + a, 0, 1, N) = master.U.col(resonant[a]).adjoint() * sys.B.cast<Complex>();
  }
  VectorXcd rb = VectorXcd::Zero(N + r);
  rb.head(N) = sys.F_a;
  Eigen::PartialPivLU<MatrixXcd> lu(Mb);
  const VectorXcd sol = lu.solve(rb);
  if ((Mb * sol - rb).norm() > 1e-8 * (1.0 + rb.norm() + Mb.norm() * sol.norm()))
    throw std::runtime_error(
        "leading_nonautonomous: singular bordered system (exact resonance with zero projection)");
  na.x0 = sol.head(N);
  for (int a = 0; a < r; ++a) na.S0[resonant[a]] = sol[N + a];
  return na;
}

Real invariance_residual(const ReducedModel& rm) {
  const int N = rm.sys.N;
  const int nvars = rm.dim();
  const int order = rm.order;
  const VectorXcd lam = lambda_diag(rm.master);

  // full reduced vector field series per component
  std::vector<ScalarSeries> Rseries(nvars);
  for (int j = 0; j < nvars; ++j) {
    MultiIndex e(nvars, 0);
    e[j] = 1;
    Rseries[j][e] = lam[j];
  }
  for (int i = 0; i < rm.master.m; ++i) {
    for (const auto& g : rm.gamma[i]) {
      MultiIndex k(nvars, 0);
      for (int s = 0; s < rm.master.m; ++s) {
        k[2 * s] = g.l[s];
        k[2 * s + 1] = g.j[s];
      }
      Rseries[2 * i][k] += g.value;
      Rseries[2 * i + 1][conjugate_index(k)] += std::conj(g.value);
    }
  }

  // B * sum_j dW/dp_j * R_j
  VectorSeries lhs;
  for (const auto& [kw, wv] : rm.W) {
    for (int j = 0; j < nvars; ++j) {
      if (kw[j] == 0) continue;
      MultiIndex kd = kw;
      kd[j] -= 1;
      const VectorXcd bw = Real(kw[j]) * (rm.sys.B.cast<Complex>() * wv);
      for (const auto& [kr, rv] : Rseries[j]) {
        MultiIndex kc(nvars);
        for (int s = 0; s < nvars; ++s) kc[s] = kd[s] + kr[s];
        if (degree(kc) > order) continue;
        auto it = lhs.find(kc);
        if (it == lhs.end()) it = lhs.emplace(kc, VectorXcd::Zero(N)).first;
        it->second += rv * bw;
      }
    }
  }

  // A W + F(W)
  VectorSeries rhs = compose_force(rm.sys.F_nl, rm.W, order, nvars, N);
  for (const auto& [k, wv] : rm.W) {
    auto it = rhs.find(k);
    if (it == rhs.end()) it = rhs.emplace(k, VectorXcd::Zero(N)).first;
    it->second += rm.sys.A.cast<Complex>() * wv;
  }

  Real worst = 0.0;
  auto scan = [&](const MultiIndex& k) {
    VectorXcd a = VectorXcd::Zero(N), b = VectorXcd::Zero(N);
    if (auto it = lhs.find(k); it != lhs.end()) a = it->second;
    if (auto it = rhs.find(k); it != rhs.end()) b = it->second;
    const Real scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / scale);
  };
  for (const auto& [k, v] : lhs) scan(k);
  for (const auto& [k, v] : rhs)
    if (lhs.find(k) == lhs.end()) scan(k);
  return worst;
}

MatrixXd linear_response(const FirstOrderSystem& sys, Real omega, Real eps, int n_samples) {
  const MatrixXcd Mk = sys.A.cast<Complex>() - Complex(0, omega) * sys.B.cast<Complex>();
  Eigen::PartialPivLU<MatrixXcd> lu(Mk);
  const VectorXcd zhat = lu.solve(sys.F_a);
  if ((Mk * zhat - sys.F_a).norm() > 1e-8 * (1.0 + sys.F_a.norm() + Mk.norm() * zhat.norm()))
    throw std::runtime_error("linear_response: Omega too close to a natural frequency");
  MatrixXd out(sys.N, n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const Real t = 2.0 * kPi * s / (n_samples * omega);
    out.col(s) = -2.0 * eps * (zhat * std::polar(1.0, omega * t)).real();
  }
  return out;
}

std::string reduced_model_to_json(const ReducedModel& rm) {
  nlohmann::json j;
  j["order"] = rm.order;
  j["m"] = rm.master.m;
  j["normalization"] = rm.normalization;
  j["lambda"] = nlohmann::json::array();
  for (int i = 0; i < rm.master.m; ++i)
    j["lambda"].push_back({rm.master.lambda[i].real(), rm.master.lambda[i].imag()});
  j["r"] = nlohmann::json::array();
  for (const auto& ri : rm.master.r) j["r"].push_back({ri.num(), ri.den()});
  j["r_d"] = {rm.master.r_d.num(), rm.master.r_d.den()};
  j["f_mod"] = nlohmann::json::array();
  for (int i = 0; i < rm.master.m; ++i)
    j["f_mod"].push_back({rm.f_mod[i].real(), rm.f_mod[i].imag()});
  auto vecc = [](const VectorXcd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
    return a;
  };
  j["V"] = nlohmann::json::array();
  j["U"] = nlohmann::json::array();
  for (int i = 0; i < rm.master.m; ++i) {
    j["V"].push_back(vecc(rm.master.V.col(i)));
    j["U"].push_back(vecc(rm.master.U.col(i)));
  }
  j["W"] = nlohmann::json::array();
  for (const auto& [k, v] : rm.W) j["W"].push_back({{"k", k}, {"c", vecc(v)}});
  j["gamma"] = nlohmann::json::array();
  for (int i = 0; i < rm.master.m; ++i) {
    nlohmann::json gi = nlohmann::json::array();
    for (const auto& g : rm.gamma[i])
      gi.push_back({{"l", g.l}, {"j", g.j}, {"v", {g.value.real(), g.value.imag()}}});
    j["gamma"].push_back(gi);
  }
  return j.dump(2);
}

ReducedModel reduced_model_from_json(const std::string& text, const FirstOrderSystem& sys) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ReducedModel rm;
  rm.sys = sys;
  rm.order = j.at("order").get<int>();
  rm.normalization = j.value("normalization", "");
  MasterSubspace& ms = rm.master;
  ms.m = j.at("m").get<int>();
  ms.lambda.resize(ms.m);
  for (int i = 0; i < ms.m; ++i)
    ms.lambda[i] = Complex(j["lambda"][i][0].get<Real>(), j["lambda"][i][1].get<Real>());
  ms.r.clear();
  for (const auto& e : j.at("r"))
    ms.r.emplace_back(e[0].get<std::int64_t>(), e[1].get<std::int64_t>());
  ms.r_d = Rational(j["r_d"][0].get<std::int64_t>(), j["r_d"][1].get<std::int64_t>());
  auto readv = [&](const nlohmann::json& a) {
    VectorXcd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      v[static_cast<Eigen::Index>(i)] = Complex(a[i][0].get<Real>(), a[i][1].get<Real>());
    return v;
  };
  ms.V.resize(sys.N, ms.m);
  ms.U.resize(sys.N, ms.m);
  for (int i = 0; i < ms.m; ++i) {
    ms.V.col(i) = readv(j["V"][i]);
    ms.U.col(i) = readv(j["U"][i]);
  }
  for (const auto& e : j.at("W")) rm.W[e.at("k").get<MultiIndex>()] = readv(e.at("c"));
  rm.gamma.assign(ms.m, {});
  rm.f_mod = VectorXcd::Zero(ms.m);
  for (int i = 0; i < ms.m; ++i) {
    rm.f_mod[i] = Complex(j["f_mod"][i][0].get<Real>(), j["f_mod"][i][1].get<Real>());
    for (const auto& e : j["gamma"][i]) {
      GammaTerm g;
      g.l = e.at("l").get<std::vector<int>>();
      g.j = e.at("j").get<std::vector<int>>();
      g.value = Complex(e["v"][0].get<Real>(), e["v"][1].get<Real>());
      rm.gamma[i].push_back(std::move(g));
    }
  }
  return rm;
}

}  // namespace ssmkit
