#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>

#include "cavityeo/response.hpp"

namespace cavityeo {

enum class Arm { Left, Right };
enum class EnvironmentTag { None, LeftArm, RightArm };

/// Full photon-plus-qubits state after the second beam splitter. Amplitudes
/// are indexed by (photon arm, two-qubit basis state, environment tag); the
/// two-qubit index orders {|00>, |01>, |10>, |11>} with the left qubit as
/// the high bit. Total weight can be below 1 because the non-transmitted
/// photon components are dropped, never negotiated back in.
class ProtocolState {
public:
    std::complex<double>& amplitude(Arm arm, int pair, EnvironmentTag env);
    const std::complex<double>& amplitude(Arm arm, int pair,
                                          EnvironmentTag env) const;
    double total_weight() const;

private:
    std::array<std::complex<double>, 24> amp_{};
};

/// 4x4 complex density matrix in the basis {|00>, |01>, |10>, |11>}.
class DensityMatrix4 {
public:
    std::complex<double>& at(int row, int col);
    const std::complex<double>& at(int row, int col) const;

    double trace_real() const;
    double hermiticity_defect() const;  ///< max |rho_ij - conj(rho_ji)|
    double min_eigenvalue() const;      ///< of the Hermitian part

private:
    std::array<std::complex<double>, 16> m_{};
};

/// Summary of repeat-until-success sampling.
struct AttemptStats {
    double mean_attempts = 0.0;
    double var_attempts = 0.0;
    double empirical_fidelity = 0.0;
    std::uint64_t n_trials = 0;
    std::uint64_t seed = 0;
};

/// Propagates the standard initial state through BS1, the two conditional
/// cavity maps and BS2. The inelastic amplitude is fixed to the real branch
/// +sqrt(inelastic_flux); every downstream quantity is phase-invariant.
ProtocolState run_interferometer(const TransmissionResult& t);

/// Probability that the detector on the left output port clicks.
double click_probability(const ProtocolState& state);

/// Two-qubit state conditioned on a click: trace out arm and environment,
/// normalize by the click probability. Throws PhysicsError("no-click") when
/// the click probability is below 1e-14.
DensityMatrix4 reduced_density_matrix(const ProtocolState& state);

double fidelity_to_target(const DensityMatrix4& rho);

/// Deterministic repeat-until-success simulation: geometric attempt counts
/// at success probability P, Bernoulli target-vs-error outcomes at F.
/// Trials are seeded by a per-trial counter stream, so any parallel
/// partitioning reproduces the same statistics. Throws ValidationError for
/// P <= 0 or undefined F.
AttemptStats sample_eo_runs(const EoFigures& figures, std::uint64_t n_trials,
                            std::uint64_t seed);

/// One-line JSON record (fields: mean_attempts, var_attempts,
/// empirical_fidelity, n_trials, seed).
std::string to_json(const AttemptStats& stats);

}  // namespace cavityeo
