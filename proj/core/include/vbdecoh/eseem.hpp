#pragma once

#include <span>
#include <vector>

#include "vbdecoh/coherence.hpp"
#include "vbdecoh/spin_model.hpp"

namespace vbdecoh {

/// Single-spin parameters of the first-order Hahn-echo ESEEM product formula.
/// Frequencies are linear, MHz.
struct EseemParams {
  int twice_spin = 1;
  double k2 = 0.0;      ///< modulation depth
  double omega = 0.0;   ///< nuclear Larmor frequency in the m_S = 0 branch
  double A_par = 0.0;
  double A_perp = 0.0;

  static EseemParams make(int twice_spin, double omega, double A_par, double A_perp);
  /// Parameters of a bath spin for the qubit pair of `central`. One qubit level
  /// must be m_S = 0; the other level m sets A_par = m A_zz and A_perp = |m| |(A_zx, A_zy)|,
  /// while omega = -g_N mu_N B_z follows the sign of the nuclear Zeeman term.
  static EseemParams from_spin(const BathSpin& spin, const CentralSpinParams& central, const MagneticField& field);
};

double eseem_factor(const EseemParams& p, double t);
std::vector<double> eseem_L1(std::span<const EseemParams> params, std::span<const double> times);

/// Electron-mediated flip coupling magnitude |A_ns,1| |A_ns,2| / |D - g_e mu_B B_z|, where
/// A_ns is the x,y block of a hyperfine tensor. Throws GslacVicinityError within 1 MHz of the crossing.
double effective_flip_coupling(const Mat3& A1, const Mat3& A2, const CentralSpinParams& central,
                               const MagneticField& field);

struct FitResult {
  bool resolved = false;  ///< false when |L| stays above 0.9 to the end of the grid
  double T2 = 0.0;        ///< us
  double stretch_n = 0.0;
  double amplitude = 0.0;
  double residual_rms = 0.0;
  bool used_envelope = false;
  std::size_t points_used = 0;
};

/// Fits A exp(-(t/T2)^n) to |L(t)|, with n in (0.5, 4]. Strongly modulated
/// curves are fitted through their local maxima.
FitResult fit_decay(const CoherenceCurve& curve);
FitResult fit_decay(std::span<const double> times, std::span<const double> magnitude);

/// Upper envelope through local maxima, linearly interpolated back onto the grid.
std::vector<double> upper_envelope(std::span<const double> y);

struct SpectralPeak {
  double frequency = 0.0;  ///< MHz
  double weight = 0.0;
};

struct SpectrumOptions {
  enum class Signal { magnitude, real_part };
  Signal signal = Signal::magnitude;
  double min_nyquist = 100.0;      ///< MHz
  double min_relative_weight = 0.1;
  std::size_t max_peaks = 8;
  int zero_pad = 4;
  double min_frequency = 5.0;  ///< MHz; slower components are treated as envelope
  double window = 0.0;  ///< us; only t <= window is analysed, 0 keeps the whole curve
};

struct Spectrum {
  std::vector<double> frequencies;
  std::vector<double> weights;
  std::vector<SpectralPeak> peaks;  ///< sorted by descending weight
};

/// Fourier magnitude of the curve after the decay envelope is removed.
Spectrum modulation_spectrum(const CoherenceCurve& curve, const SpectrumOptions& options = {});

}  // namespace vbdecoh
