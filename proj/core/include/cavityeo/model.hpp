#pragma once

#include <complex>

namespace cavityeo {

/// Unit convention of a raw parameter set.
enum class Units {
    UnitsOfG,          ///< rates already expressed as multiples of g
    AngularFrequency,  ///< angular rates in a common external unit
    FrequencyOver2Pi,  ///< nu = omega/2pi values (e.g. MHz), as often quoted
};

enum class QubitState { Zero, One };

/// Physical parameters of one qubit-cavity node. Every downstream formula
/// depends only on rate ratios, so the canonical form has g == 1 exactly
/// ("units of g"); normalize() produces it.
struct SystemParams {
    double g = 1.0;        ///< qubit-cavity coherent coupling, > 0
    double kappa = 0.0;    ///< cavity decay rate
    double gamma = 0.0;    ///< spontaneous emission into non-cavity modes
    double gamma_p = 0.0;  ///< pure dephasing rate of the excited level
    double delta = 0.0;    ///< qubit-cavity detuning (any sign)
    double delta_p = 0.0;  ///< input photon-cavity detuning
    Units units = Units::UnitsOfG;
};

/// Complex rotating-frame rates relative to the cavity frequency.
/// `qubit` and `cavity` always have non-positive imaginary part.
struct ComplexFrequencies {
    std::complex<double> qubit;   ///< delta - i(gamma/2 + gamma_p)
    std::complex<double> cavity;  ///< -i kappa/2
    std::complex<double> xi;      ///< (kappa+gamma)/2 + gamma_p + i delta
};

/// Rescales all rates and detunings so that g == 1; frequency-over-2pi
/// inputs are first multiplied by 2pi. Idempotent. Throws ValidationError
/// naming the offending field for non-finite or negative rates.
SystemParams normalize(const SystemParams& params);

bool is_normalized(const SystemParams& params);

/// Requires normalized params.
ComplexFrequencies complex_frequencies(const SystemParams& params);

}  // namespace cavityeo
