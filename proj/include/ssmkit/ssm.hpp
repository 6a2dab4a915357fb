#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "ssmkit/model.hpp"
#include "ssmkit/poly_series.hpp"
#include "ssmkit/spectral.hpp"

namespace ssmkit {

/// Resonant normal-form coefficient gamma(l, j) of master mode i.
struct GammaTerm {
  std::vector<int> l, j;
  Complex value;
};

/// Leading-order non-autonomous data at one Omega sample:
/// S0_i = u_i* F_a when lambda_i ~ i Omega (else 0), and the order-eps
/// coefficient vector x0 of the time-periodic SSM correction.
struct NonAutonomousPart {
  Real omega = 0.0;
  VectorXcd S0;  // m entries
  VectorXcd x0;  // N entries
};

/// Autonomous SSM expansion plus reduced dynamics data. Immutable after
/// construction except for the Omega-keyed x0 cache, which is mutex guarded.
class ReducedModel {
 public:
  FirstOrderSystem sys;
  MasterSubspace master;
  int order = 0;

  /// Expansion coefficients of W over p = (q_1, qb_1, ..., q_m, qb_m).
  VectorSeries W;
  /// Resonant reduced-dynamics coefficients per master mode (q_i components;
  /// conjugate components are implied).
  std::vector<std::vector<GammaTerm>> gamma;
  /// Modal forcing f_i = u_i* F_a if r_i = 1 else 0.
  VectorXcd f_mod;
  /// Scaling convention of the master eigenvectors, recorded for output metadata.
  std::string normalization = "u*Bv=1, mass-normalized displacement parts";

  int m() const { return master.m; }
  int dim() const { return 2 * master.m; }

  /// Physical point W(p).
  VectorXcd eval_W(const VectorXcd& p) const;
  /// p from the complex modal coordinates q = (q_1, ..., q_m).
  VectorXcd p_from_q(const VectorXcd& q) const;

  /// Leading-order non-autonomous solve at Omega, cached. Copies of a model
  /// share one cache; access is mutex guarded.
  NonAutonomousPart nonautonomous(Real omega) const;
  void cache_nonautonomous(const NonAutonomousPart& na) const;
  std::map<Real, NonAutonomousPart> nonautonomous_cache() const;

 private:
  struct Cache {
    std::mutex mutex;
    std::map<Real, NonAutonomousPart> entries;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Order-by-order solution of the invariance equation with normal-form style
/// parameterization: only near-resonant monomials are kept in the reduced
/// dynamics, all other cohomological systems are solved directly.
ReducedModel expand_autonomous(const FirstOrderSystem& sys, const MasterSubspace& master,
                               int order);

/// Bordered solve of the order-eps, p-independent, e^{i phi} part of the
/// invariance equation; near-resonant components are removed through S0.
NonAutonomousPart leading_nonautonomous(const FirstOrderSystem& sys,
                                        const MasterSubspace& master, Real omega);

/// Max relative residual per monomial of the truncated invariance equation
/// B(D_p W . R) = A W + F(W), expanded symbolically up to rm.order.
Real invariance_residual(const ReducedModel& rm);

/// Leading-order linear periodic response z(t) = -2 eps Re((A - i Omega B)^{-1} F_a e^{i Omega t}),
/// sampled on a uniform grid over one period.
MatrixXd linear_response(const FirstOrderSystem& sys, Real omega, Real eps, int n_samples = 128);

/// JSON round trip for the one-time autonomous computation.
std::string reduced_model_to_json(const ReducedModel& rm);
ReducedModel reduced_model_from_json(const std::string& text, const FirstOrderSystem& sys);

}  // namespace ssmkit
