#include "vbdecoh/eseem.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "vbdecoh/errors.hpp"

namespace vbdecoh {

EseemParams EseemParams::make(int twice_spin, double omega, double A_par, double A_perp) {
  EseemParams p{twice_spin, 0.0, omega, A_par, std::abs(A_perp)};
  const double den = (omega + A_par) * (omega + A_par) + A_perp * A_perp;
  p.k2 = den > 0.0 ? A_perp * A_perp / den : 0.0;
  return p;
}

EseemParams EseemParams::from_spin(const BathSpin& spin, const CentralSpinParams& central, const MagneticField& field) {
  const auto [l0, l1] = central.qubit_levels;
  if (l0 != 0 && l1 != 0) throw ValidationError("ESEEM parameters need m_S = 0 as one qubit level");
  const int m = l0 == 0 ? l1 : l0;
  const double omega = -spin.species.g_N * PhysicalConstants::mu_N * field.B.z();
  const double perp = std::hypot(spin.A(2, 0), spin.A(2, 1));
  return make(spin.species.twice_spin, omega, m * spin.A(2, 2), std::abs(m) * perp);
}

double eseem_factor(const EseemParams& p, double t) {
  const double I = 0.5 * p.twice_spin;
  const double w = std::hypot(p.omega + p.A_par, p.A_perp);
  const double s1 = std::sin(PhysicalConstants::two_pi * w * t / 4.0);
  const double s2 = std::sin(PhysicalConstants::two_pi * p.omega * t / 4.0);
  return 1.0 - 8.0 / 3.0 * I * (I + 1.0) * p.k2 * s1 * s1 * s2 * s2;
}

std::vector<double> eseem_L1(std::span<const EseemParams> params, std::span<const double> times) {
  std::vector<double> out(times.size(), 1.0);
  for (const auto& p : params)
    for (std::size_t k = 0; k < times.size(); ++k) out[k] *= eseem_factor(p, times[k]);
  return out;
}

double effective_flip_coupling(const Mat3& A1, const Mat3& A2, const CentralSpinParams& central,
                               const MagneticField& field) {
  const double gap = std::abs(central.D - central.g_e * PhysicalConstants::mu_B * field.B.z());
  if (gap <= 1.0) throw GslacVicinityError("GSLAC vicinity: level gap below 1 MHz, flip coupling estimate undefined");
  return A1.topLeftCorner<2, 2>().norm() * A2.topLeftCorner<2, 2>().norm() / gap;
}

std::vector<double> upper_envelope(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 3) return {y.begin(), y.end()};
  std::vector<std::size_t> knots{0};
  for (std::size_t k = 1; k + 1 < n; ++k)
    if (y[k] >= y[k - 1] && y[k] >= y[k + 1]) knots.push_back(k);
  if (knots.back() != n - 1) knots.push_back(n - 1);
  std::vector<double> env(n);
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const auto a = knots[s], b = knots[s + 1];
    for (auto k = a; k <= b; ++k) env[k] = y[a] + (y[b] - y[a]) * double(k - a) / double(b - a);
  }
  for (std::size_t k = 0; k < n; ++k) env[k] = std::max(env[k], y[k]);
  return env;
}

namespace {

constexpr double kNmin = 0.5, kNmax = 4.0;
// |L| above this marks a diverging expansion; the fit stops there
constexpr double kDivergence = 1.5;

double stretch_of(double u) { return kNmin + (kNmax - kNmin) / (1.0 + std::exp(-u)); }
double stretch_inverse(double n) {
  const double s = std::clamp((n - kNmin) / (kNmax - kNmin), 1e-9, 1.0 - 1e-9);
  return std::log(s / (1.0 - s));
}

struct DecayFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::vector<double> t, y;
  int inputs() const { return 3; }
  int values() const { return static_cast<int>(t.size()); }
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    const double T2 = std::exp(p(0)), n = stretch_of(p(1));
    for (std::size_t k = 0; k < t.size(); ++k) r(k) = p(2) * std::exp(-std::pow(t[k] / T2, n)) - y[k];
    return 0;
  }
};

// Maximum of suffix-max minus value: zero for a monotone decay.
double modulation_depth(std::span<const double> y) {
  double running = -std::numeric_limits<double>::infinity(), depth = 0.0;
  for (std::size_t k = y.size(); k-- > 0;) {
    running = std::max(running, y[k]);
    depth = std::max(depth, running - y[k]);
  }
  return depth;
}

}  // namespace

FitResult fit_decay(const CoherenceCurve& curve) {
  if (!curve.normalized) throw ValidationError("fit_decay expects a normalized curve");
  const auto mag = curve.magnitude();
  return fit_decay(curve.times, mag);
}

FitResult fit_decay(std::span<const double> times, std::span<const double> magnitude) {
  if (times.size() != magnitude.size()) throw ValidationError("fit_decay: times and values differ in length");
  if (times.size() < 20) throw ValidationError("fit_decay needs at least 20 samples");
  FitResult result;
  // fit window ends where |L| stays below 0.05, or where the expansion diverges
  const std::size_t n = times.size();
  const std::size_t hold = std::max<std::size_t>(3, n / 50);
  std::size_t stop = n;
  for (std::size_t k = 0; k < n && stop == n; ++k) {
    if (magnitude[k] > kDivergence) stop = k;
    if (magnitude[k] >= 0.05) continue;
    std::size_t j = k;
    while (j < n && j < k + hold && magnitude[j] < 0.05) ++j;
    if (j == n || j == k + hold) stop = k + 1;
  }
  if (stop == n && magnitude.back() > 0.9) return result;
  if (stop < 4) stop = std::min<std::size_t>(n, 4);
  const std::span<const double> tw = times.first(stop), mw = magnitude.first(stop);

  std::vector<double> t, y;
  result.used_envelope = modulation_depth(mw) > 0.1;
  if (result.used_envelope) {
    // suffix maxima: the monotone upper envelope of the decay
    double best = -1.0;
    for (std::size_t k = stop; k-- > 0;)
      if (mw[k] > best) {
        best = mw[k];
        t.push_back(tw[k]);
        y.push_back(mw[k]);
      }
    std::reverse(t.begin(), t.end());
    std::reverse(y.begin(), y.end());
    if (t.size() < 4) {
      result.used_envelope = false;
      t.clear();
      y.clear();
    }
  }
  if (!result.used_envelope) {
    t.assign(tw.begin(), tw.end());
    y.assign(mw.begin(), mw.end());
  }

  double t_e = t.back();
  for (std::size_t k = 1; k < y.size(); ++k)
    if (y[k] < std::exp(-1.0) * y[0]) {
      t_e = t[k - 1] + (t[k] - t[k - 1]) * (y[k - 1] - std::exp(-1.0) * y[0]) / (y[k - 1] - y[k]);
      break;
    }
  if (!(t_e > 0.0)) t_e = times.back();

  DecayFunctor f;
  f.t = t;
  f.y = y;
  Eigen::NumericalDiff<DecayFunctor> nd(f);
  double best = std::numeric_limits<double>::infinity();
  for (double n0 : {1.0, 2.0, 3.0}) {
    Eigen::VectorXd p(3);
    p << std::log(t_e), stretch_inverse(n0), y[0];
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<DecayFunctor>> lm(nd);
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    lm.parameters.maxfev = 4000;
    lm.minimize(p);
    Eigen::VectorXd r(f.values());
    f(p, r);
    const double rms = std::sqrt(r.squaredNorm() / r.size());
    if (std::isfinite(rms) && rms < best - 1e-15) {
      best = rms;
      result.T2 = std::exp(p(0));
      result.stretch_n = stretch_of(p(1));
      result.amplitude = p(2);
      result.residual_rms = rms;
    }
  }
  result.points_used = t.size();
  result.resolved = std::isfinite(best) && result.T2 > 0.0;
  return result;
}

Spectrum modulation_spectrum(const CoherenceCurve& curve, const SpectrumOptions& options) {
  if (options.window < 0.0) throw ValidationError("spectrum window must be >= 0");
  if (options.min_frequency < 0.0) throw ValidationError("spectrum min_frequency must be >= 0");
  std::size_t n = curve.times.size();
  if (options.window > 0.0)
    n = static_cast<std::size_t>(std::upper_bound(curve.times.begin(), curve.times.end(), options.window) - curve.times.begin());
  if (n < 8) throw ValidationError("modulation_spectrum needs at least 8 samples");
  const double dt = (curve.times[n - 1] - curve.times.front()) / double(n - 1);
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs(curve.times[k] - curve.times[k - 1] - dt) > 1e-6 * dt)
      throw ValidationError("modulation_spectrum needs a uniform time grid");
  const double nyquist = 0.5 / dt;
  if (nyquist < options.min_nyquist)
    throw NyquistError("time step too coarse: Nyquist frequency " + std::to_string(nyquist) + " MHz is below " +
                       std::to_string(options.min_nyquist) + " MHz");

  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k)
    y[k] = options.signal == SpectrumOptions::Signal::magnitude ? std::abs(curve.values[k]) : curve.values[k].real();
  const auto env = upper_envelope(y);
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    y[k] -= env[k];
    mean += y[k];
  }
  mean /= double(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(k) / double(n - 1));
    y[k] = (y[k] - mean) * hann;
  }

  std::size_t m = 1;
  while (m < n) m <<= 1;
  m *= static_cast<std::size_t>(std::max(1, options.zero_pad));
  std::vector<double> in(m, 0.0);
  std::copy(y.begin(), y.end(), in.begin());
  std::vector<fftw_complex> out(m / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), in.data(), out.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  Spectrum s;
  s.frequencies.resize(out.size());
  s.weights.resize(out.size());
  const double df = 1.0 / (double(m) * dt);
  double top = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    s.frequencies[k] = double(k) * df;
    s.weights[k] = std::hypot(out[k][0], out[k][1]) / double(n);
    if (k > 0 && s.frequencies[k] >= options.min_frequency) top = std::max(top, s.weights[k]);
  }
  if (top < 1e-12) return s;
  for (std::size_t k = 1; k + 1 < out.size(); ++k) {
    const double w = s.weights[k];
    if (s.frequencies[k] < options.min_frequency) continue;
    if (w < options.min_relative_weight * top || w < s.weights[k - 1] || w < s.weights[k + 1]) continue;
    const double a = s.weights[k - 1], c = s.weights[k + 1];
    const double den = a - 2.0 * w + c;
    const double shift = std::abs(den) > 0.0 ? 0.5 * (a - c) / den : 0.0;
    s.peaks.push_back({(double(k) + shift) * df, w});
  }
  std::stable_sort(s.peaks.begin(), s.peaks.end(), [](const auto& l, const auto& r) { return l.weight > r.weight; });
  if (s.peaks.size() > options.max_peaks) s.peaks.resize(options.max_peaks);
  return s;
}

}  // namespace vbdecoh
