#pragma once

#include <numbers>
#include <string_view>

namespace vbdecoh {

/// Versioned table of physical constants. Every quantity is expressed in the
/// unit system used throughout the library: linear frequency in MHz, field in
/// mT, distance in Angstrom, time in microseconds.
struct PhysicalConstants {
  static constexpr std::string_view version = "vbdecoh-constants/2024.1 (CODATA 2018)";

  // CODATA 2018, SI
  static constexpr double bohr_magneton_J_per_T = 9.2740100783e-24;
  static constexpr double nuclear_magneton_J_per_T = 5.0507837461e-27;
  static constexpr double planck_J_s = 6.62607015e-34;
  static constexpr double mu0_over_4pi = 1.00000000055e-7;

  /// mu_B / h in MHz per mT.
  static constexpr double mu_B = bohr_magneton_J_per_T / planck_J_s * 1e-9;
  /// mu_N / h in MHz per mT.
  static constexpr double mu_N = nuclear_magneton_J_per_T / planck_J_s * 1e-9;

  /// (mu0/4pi) mu_B mu_N / h in MHz * A^3. Multiply by g_e g_N / r^3.
  static constexpr double electron_nuclear_dipolar =
      mu0_over_4pi * bohr_magneton_J_per_T * nuclear_magneton_J_per_T / planck_J_s * 1e30 * 1e-6;

  /// (mu0/4pi) mu_N^2 / h in MHz * A^3. Multiply by g_1 g_2 / r^3.
  static constexpr double nuclear_nuclear_dipolar =
      mu0_over_4pi * nuclear_magneton_J_per_T * nuclear_magneton_J_per_T / planck_J_s * 1e30 * 1e-6;

  static constexpr double g_e = 2.0023;

  static constexpr double two_pi = 2.0 * std::numbers::pi;
};

}  // namespace vbdecoh
