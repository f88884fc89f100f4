#pragma once

#include <complex>
#include <vector>

#include "cavityeo/model.hpp"
#include "cavityeo/response.hpp"

namespace cavityeo {

/// Decay exponents of the pulsed response: the two roots of the coupled
/// qubit-cavity quadratic and the input-pulse pole -1/l - i*delta_p, all in
/// the frame rotating at the cavity frequency.
struct PoleSet {
    std::complex<double> system_pole_1;
    std::complex<double> system_pole_2;
    std::complex<double> input_pole;
    bool degenerate = false;  ///< any pairwise collision at 1e-8 relative
};

/// Closed-form signal h(t) = sum_k coefficient_k * exp(exponent_k * t).
/// Square-integrability (all Re(exponent) < 0) is checked by the norm
/// operations, not by construction (the lossless case is representable).
struct ExponentialSum {
    struct Term {
        std::complex<double> coefficient;
        std::complex<double> exponent;
    };
    std::vector<Term> terms;

    std::complex<double> operator()(double t) const;
    /// Sum of coefficients == value at t = 0.
    std::complex<double> coefficient_sum() const;
    /// min |Re(exponent)| over terms (slowest decay rate).
    double slowest_decay() const;
};

/// One-time correlation functions of the node as residue sums:
/// free evolution from an excited qubit (qubit_free, cavity_free) and the
/// response driven by the exponential input pulse (qubit_driven,
/// cavity_driven).
struct CorrelationFunctions {
    ExponentialSum qubit_free;     // alpha_q: starts at 1
    ExponentialSum cavity_free;    // alpha_c: starts at 0
    ExponentialSum qubit_driven;   // beta_q:  starts at 0
    ExponentialSum cavity_driven;  // beta_c:  starts at 0
};

/// Squared-norm building blocks of the finite-pulse figures of merit.
struct NormBundle {
    double elastic_difference = 0.0;  ///< N(g0_empty - g0), in [0, 4]
    double inelastic_total = 0.0;     ///< sum over n >= 1 of N(g_n)
    double pulse_length = 0.0;
};

PoleSet poles(const SystemParams& params, double pulse_length);

/// Residue-form correlation functions. Throws DegeneratePolesError when the
/// pole set is (near-)degenerate; finite_pulse_norms() then routes through
/// the quadrature fallback instead.
CorrelationFunctions correlation_functions(const SystemParams& params,
                                           double pulse_length);

/// Closed-form L2 norm of an exponential sum on [0, inf). Throws
/// NonIntegrableError if any exponent has non-negative real part.
double norm_of_expsum(const ExponentialSum& h);

/// Empty-cavity driven amplitude (the g -> 0 branch), built from its own
/// two-pole residue formula.
ExponentialSum empty_cavity_driven_amplitude(const SystemParams& params,
                                             double pulse_length);

/// N(g0_empty - g0) = (kappa/2) * N(beta_c_empty - beta_c).
double elastic_difference_norm(const SystemParams& params, double pulse_length);

/// Analytically summed inelastic series. Throws DivergentSeriesError when
/// the geometric ratio 2*gamma_p*N(alpha_q) reaches 1.
double inelastic_sum(const SystemParams& params, double pulse_length);

/// Both norms, with automatic routing to the oracle quadrature path on
/// (near-)degenerate poles.
NormBundle finite_pulse_norms(const SystemParams& params, double pulse_length);

EoFigures finite_pulse_figures(const SystemParams& params, double pulse_length);

namespace detail {

/// Residue construction on explicit rotating-frame rates; exposed for the
/// small-coupling limit checks that the public g = 1 surface cannot reach.
CorrelationFunctions correlation_functions_raw(std::complex<double> omega_q,
                                               std::complex<double> omega_c,
                                               double g, double kappa,
                                               double pulse_length,
                                               double delta_p);

}  // namespace detail

}  // namespace cavityeo
