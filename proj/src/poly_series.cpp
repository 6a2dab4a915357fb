#include "ssmkit/poly_series.hpp"

namespace ssmkit {

std::vector<MultiIndex> multi_indices_of_degree(int nvars, int deg) {
  std::vector<MultiIndex> out;
  MultiIndex k(nvars, 0);
  // recursive enumeration without recursion: distribute deg among nvars slots
  std::vector<int> rem(nvars + 1, 0);
  auto emit = [&](auto&& self, int pos, int left) -> void {
    if (pos == nvars - 1) {
      k[pos] = left;
      out.push_back(k);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      k[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  emit(emit, 0, deg);
  return out;
}

ScalarSeries series_mul(const ScalarSeries& a, const ScalarSeries& b, int max_deg) {
  ScalarSeries out;
  for (const auto& [ka, va] : a) {
    const int da = degree(ka);
    for (const auto& [kb, vb] : b) {
      if (da + degree(kb) > max_deg) continue;
      MultiIndex kc(ka.size());
      for (std::size_t i = 0; i < ka.size(); ++i) kc[i] = ka[i] + kb[i];
      out[kc] += va * vb;
    }
  }
  return out;
}

ScalarSeries series_pow(const ScalarSeries& a, int p, int max_deg, int nvars) {
  ScalarSeries r;
  r[MultiIndex(nvars, 0)] = Complex(1.0, 0.0);
  for (int i = 0; i < p; ++i) r = series_mul(r, a, max_deg);
  return r;
}

Complex series_eval(const ScalarSeries& s, const VectorXcd& p) {
  Complex acc(0.0, 0.0);
  for (const auto& [k, c] : s) {
    Complex mono(1.0, 0.0);
    for (std::size_t i = 0; i < k.size(); ++i)
      for (int j = 0; j < k[i]; ++j) mono *= p[static_cast<Eigen::Index>(i)];
    acc += c * mono;
  }
  return acc;
}

}  // namespace ssmkit
