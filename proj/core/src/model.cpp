#include "cavityeo/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cavityeo/errors.hpp"

namespace cavityeo {

namespace {

void check_rate(double value, const char* field) {
    if (!std::isfinite(value)) {
        throw ValidationError(std::string(field) + " must be finite");
    }
    if (value < 0.0) {
        throw ValidationError(std::string(field) + " must be non-negative");
    }
}

void check_finite(double value, const char* field) {
    if (!std::isfinite(value)) {
        throw ValidationError(std::string(field) + " must be finite");
    }
}

}  // namespace

SystemParams normalize(const SystemParams& params) {
    if (!std::isfinite(params.g) || params.g <= 0.0) {
        throw ValidationError("g must be finite and > 0");
    }
    check_rate(params.kappa, "kappa");
    check_rate(params.gamma, "gamma");
    check_rate(params.gamma_p, "gamma_p");
    check_finite(params.delta, "delta");
    check_finite(params.delta_p, "delta_p");

    // frequency-over-2pi inputs are first lifted to the angular convention;
    // the common 2pi factor then cancels in every ratio.
    const double lift =
        params.units == Units::FrequencyOver2Pi ? 2.0 * std::numbers::pi : 1.0;
    const double scale = params.g * lift;

    SystemParams out;
    out.g = 1.0;
    out.kappa = params.kappa * lift / scale;
    out.gamma = params.gamma * lift / scale;
    out.gamma_p = params.gamma_p * lift / scale;
    out.delta = params.delta * lift / scale;
    out.delta_p = params.delta_p * lift / scale;
    out.units = Units::UnitsOfG;
    return out;
}

bool is_normalized(const SystemParams& params) {
    return params.units == Units::UnitsOfG && params.g == 1.0;
}

ComplexFrequencies complex_frequencies(const SystemParams& params) {
    if (!is_normalized(params)) {
        throw ValidationError("complex_frequencies expects normalized params (g == 1)");
    }
    ComplexFrequencies cf;
    cf.qubit = {params.delta, -(params.gamma / 2.0 + params.gamma_p)};
    cf.cavity = {0.0, -params.kappa / 2.0};
    cf.xi = {(params.kappa + params.gamma) / 2.0 + params.gamma_p, params.delta};
    return cf;
}

}  // namespace cavityeo
