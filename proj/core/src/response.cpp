#include "cavityeo/response.hpp"

#include <cmath>
#include <complex>

#include "cavityeo/errors.hpp"

namespace cavityeo {

namespace {

constexpr double kDegenerateDenominator = 1e-14;
constexpr double kNegativeFluxTolerance = 1e-12;
constexpr double kSentinelWeight = 1e-14;

void require_normalized(const SystemParams& params, const char* op) {
    if (!is_normalized(params)) {
        throw ValidationError(std::string(op) + " expects normalized params (g == 1)");
    }
}

}  // namespace

SteadyStateResponse steady_state_variables(const SystemParams& params) {
    require_normalized(params, "steady_state_variables");

    const double g = 1.0;
    const double kappa = params.kappa;
    const double gamma = params.gamma;
    const std::complex<double> broadening{gamma / 2.0 + params.gamma_p,
                                          params.delta};
    const std::complex<double> denom = kappa * broadening + 2.0 * g * g;

    SteadyStateResponse r;
    r.cavity_amplitude = kappa * broadening / denom;
    r.qubit_amplitude = kappa * g / denom;

    const std::complex<double> xi = complex_frequencies(params).xi;
    if (std::abs(xi) < kDegenerateDenominator) {
        throw DegenerateResponseError(
            "degenerate response (xi = 0): no dissipation channel; use the "
            "empty-cavity branch for qubit state |0>");
    }
    const double re_inv_xi = std::real(1.0 / xi);
    const double flux_denom =
        kappa * gamma + 2.0 * g * g * (kappa + gamma) * re_inv_xi;
    if (std::abs(flux_denom) < kDegenerateDenominator) {
        throw DegenerateResponseError(
            "degenerate response (flux denominator ~ 0, e.g. kappa = gamma = "
            "0); use the empty-cavity branch for qubit state |0>");
    }

    const double flux_num =
        (gamma + 2.0 * g * g * re_inv_xi) * std::real(r.cavity_amplitude) -
        g * gamma * std::real(r.qubit_amplitude / xi);
    r.photon_flux = kappa * flux_num / flux_denom;
    return r;
}

TransmissionResult transmission(const SystemParams& params,
                                QubitState qubit_state) {
    require_normalized(params, "transmission");

    TransmissionResult t;
    t.regime = Regime::LongPulse;
    if (qubit_state == QubitState::Zero) {
        // Exact empty-cavity limit: resonant tunneling passes the photon
        // untouched. Hard-coded rather than a numerical g -> 0 limit.
        t.elastic_amplitude = 1.0;
        t.inelastic_flux = 0.0;
        return t;
    }

    const SteadyStateResponse r = steady_state_variables(params);
    t.elastic_amplitude = r.cavity_amplitude;
    if (params.gamma_p == 0.0) {
        // Inelastic transmission originates from pure dephasing alone; at
        // gamma_p = 0 the flux identity x_cdagc = |x_c|^2 is exact, so the
        // rounding residue is not reported as physics.
        t.inelastic_flux = 0.0;
        return t;
    }
    const double flux = r.photon_flux - std::norm(r.cavity_amplitude);
    if (flux < -kNegativeFluxTolerance) {
        throw PhysicsError("internal-consistency",
                           "inelastic flux negative beyond cancellation "
                           "tolerance: " +
                               std::to_string(flux));
    }
    t.inelastic_flux = std::min(std::max(flux, 0.0), 1.0);
    return t;
}

EoFigures eo_figures(double elastic_weight, double inelastic_weight) {
    EoFigures fig;
    if (elastic_weight < kSentinelWeight && inelastic_weight < kSentinelWeight) {
        // No which-path contrast and no inelastic channel: the detector can
        // never click, so the conditional fidelity is undefined.
        fig.fidelity.reset();
        fig.probability = 0.0;
        return fig;
    }
    double f = (elastic_weight + inelastic_weight / 2.0) /
               (elastic_weight + 2.0 * inelastic_weight);
    double p = elastic_weight / 8.0 + inelastic_weight / 4.0;
    const double slack = 1e-12;
    if (f < -slack || f > 1.0 + slack || p < -slack || p > 1.0 + slack) {
        throw PhysicsError("internal-consistency",
                           "figures of merit out of [0, 1] beyond tolerance");
    }
    fig.fidelity = std::min(std::max(f, 0.0), 1.0);
    fig.probability = std::min(std::max(p, 0.0), 1.0);
    return fig;
}

EoFigures eo_figures(const TransmissionResult& t) {
    return eo_figures(std::norm(1.0 - t.elastic_amplitude), t.inelastic_flux);
}

double blocking_transmission_probability(const SystemParams& params) {
    require_normalized(params, "blocking_transmission_probability");
    if (params.delta != 0.0 || params.gamma != 0.0) {
        throw ValidationError(
            "blocking_transmission_probability requires delta = 0 and gamma = 0");
    }
    const double s = params.kappa * params.gamma_p;
    return s / (s + 2.0);
}

double dispersive_phase(const SystemParams& params) {
    require_normalized(params, "dispersive_phase");
    if (params.delta == 0.0) {
        throw ValidationError("dispersive_phase requires delta != 0");
    }
    if (params.kappa <= 0.0) {
        throw ValidationError("dispersive_phase requires kappa > 0");
    }
    return 1.0 / (params.delta * params.kappa);
}

}  // namespace cavityeo
