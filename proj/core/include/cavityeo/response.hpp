#pragma once

#include <complex>
#include <optional>

#include "cavityeo/model.hpp"

namespace cavityeo {

enum class Regime { LongPulse, FinitePulse };

/// Dimensionless steady-state response of the driven node, qubit in |1>.
struct SteadyStateResponse {
    std::complex<double> cavity_amplitude;  ///< equals the elastic amplitude
    std::complex<double> qubit_amplitude;
    double photon_flux = 0.0;  ///< total transmitted flux (elastic + inelastic)
};

struct TransmissionResult {
    std::complex<double> elastic_amplitude;  ///< t_e
    double inelastic_flux = 0.0;             ///< |t_i|^2, clamped to [0, 1]
    Regime regime = Regime::LongPulse;
};

/// Heralded figures of merit of one entanglement attempt. `fidelity` is
/// empty (undefined) when no detector click is possible: both channel
/// weights below 1e-14. Never NaN.
struct EoFigures {
    std::optional<double> fidelity;
    double probability = 0.0;
};

/// Steady-state variables for the qubit-|1> branch of a normalized
/// parameter set. Throws DegenerateResponseError when the flux denominator
/// vanishes (e.g. kappa = gamma = 0); callers wanting the empty-cavity
/// physics should use transmission(..., QubitState::Zero).
SteadyStateResponse steady_state_variables(const SystemParams& params);

/// Long-pulse transmission map. The qubit-|0> branch is the exact
/// empty-cavity result (1, 0) and never evaluates the steady state.
TransmissionResult transmission(const SystemParams& params, QubitState qubit_state);

/// Figures of merit from the two channel weights: the elastic contrast
/// |1 - t_e|^2 (or its finite-pulse norm) and the inelastic weight.
EoFigures eo_figures(double elastic_weight, double inelastic_weight);
EoFigures eo_figures(const TransmissionResult& t);

/// kappa*gamma_p / (kappa*gamma_p + 2 g^2); valid only at delta = gamma = 0,
/// where it equals |t_e|^2 + |t_i|^2. Kept as a cross-check identity.
double blocking_transmission_probability(const SystemParams& params);

/// Dispersive-regime phase estimate g^2/(delta*kappa); diagnostic only.
double dispersive_phase(const SystemParams& params);

}  // namespace cavityeo
