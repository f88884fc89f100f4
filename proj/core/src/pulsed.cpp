#include "cavityeo/pulsed.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

#include "cavityeo/errors.hpp"
#include "cavityeo/oracle.hpp"

namespace cavityeo {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};
constexpr double kDegeneracyRel = 1e-8;
constexpr double kDivergenceSlack = 1e-12;

double pole_scale(Complex a, Complex b) {
    return std::max({std::abs(a), std::abs(b), 1.0});
}

bool nearly_equal_poles(Complex a, Complex b) {
    return std::abs(a - b) < kDegeneracyRel * pole_scale(a, b);
}

// Roots of z^2 + b z + c with the usual cancellation-free pairing.
std::pair<Complex, Complex> stable_quadratic_roots(Complex b, Complex c) {
    const Complex disc = std::sqrt(b * b - 4.0 * c);
    const Complex q = std::real(std::conj(b) * disc) >= 0.0
                          ? -0.5 * (b + disc)
                          : -0.5 * (b - disc);
    if (std::abs(q) == 0.0) {
        return {Complex{0.0, 0.0}, Complex{0.0, 0.0}};
    }
    return {q, c / q};
}

void require_pulse_length(double l) {
    if (!std::isfinite(l) || l <= 0.0) {
        throw ValidationError("pulse_length must be finite and > 0");
    }
}

Complex input_pole(double pulse_length, double delta_p) {
    return Complex{-1.0 / pulse_length, -delta_p};
}

}  // namespace

std::complex<double> ExponentialSum::operator()(double t) const {
    Complex acc{0.0, 0.0};
    for (const Term& term : terms) {
        acc += term.coefficient * std::exp(term.exponent * t);
    }
    return acc;
}

std::complex<double> ExponentialSum::coefficient_sum() const {
    Complex acc{0.0, 0.0};
    for (const Term& term : terms) acc += term.coefficient;
    return acc;
}

double ExponentialSum::slowest_decay() const {
    double rate = std::numeric_limits<double>::infinity();
    for (const Term& term : terms) {
        rate = std::min(rate, std::abs(term.exponent.real()));
    }
    return rate;
}

PoleSet poles(const SystemParams& params, double pulse_length) {
    require_pulse_length(pulse_length);
    const ComplexFrequencies cf = complex_frequencies(params);

    // (z + i*wq)(z + i*wc) + g^2 = 0 in the cavity-rotating frame.
    const Complex b = kI * (cf.qubit + cf.cavity);
    const Complex c = 1.0 - cf.qubit * cf.cavity;
    auto [lambda1, lambda2] = stable_quadratic_roots(b, c);

    PoleSet ps;
    ps.system_pole_1 = lambda1;
    ps.system_pole_2 = lambda2;
    ps.input_pole = input_pole(pulse_length, params.delta_p);
    ps.degenerate = nearly_equal_poles(lambda1, lambda2) ||
                    nearly_equal_poles(lambda1, ps.input_pole) ||
                    nearly_equal_poles(lambda2, ps.input_pole);
    return ps;
}

namespace detail {

CorrelationFunctions correlation_functions_raw(Complex omega_q, Complex omega_c,
                                               double g, double kappa,
                                               double pulse_length,
                                               double delta_p) {
    require_pulse_length(pulse_length);
    const Complex b = kI * (omega_q + omega_c);
    const Complex c = g * g - omega_q * omega_c;
    auto [l1, l2] = stable_quadratic_roots(b, c);
    const Complex l3 = input_pole(pulse_length, delta_p);

    if (nearly_equal_poles(l1, l2) || nearly_equal_poles(l1, l3) ||
        nearly_equal_poles(l2, l3)) {
        throw DegeneratePolesError(
            "degenerate poles: residue formulas ill-conditioned; use the "
            "oracle quadrature path");
    }

    CorrelationFunctions corr;
    const Complex d12 = l1 - l2;
    corr.qubit_free.terms = {{(l1 + kI * omega_c) / d12, l1},
                             {(l2 + kI * omega_c) / -d12, l2}};
    corr.cavity_free.terms = {{-kI * g / d12, l1}, {-kI * g / -d12, l2}};

    const Complex pre = -kI * std::sqrt(kappa / pulse_length);
    const Complex p1 = (l1 - l2) * (l1 - l3);
    const Complex p2 = (l2 - l1) * (l2 - l3);
    const Complex p3 = (l3 - l1) * (l3 - l2);
    corr.qubit_driven.terms = {{pre * (-kI * g) / p1, l1},
                               {pre * (-kI * g) / p2, l2},
                               {pre * (-kI * g) / p3, l3}};
    corr.cavity_driven.terms = {{pre * (l1 + kI * omega_q) / p1, l1},
                                {pre * (l2 + kI * omega_q) / p2, l2},
                                {pre * (l3 + kI * omega_q) / p3, l3}};
    return corr;
}

}  // namespace detail

CorrelationFunctions correlation_functions(const SystemParams& params,
                                           double pulse_length) {
    const ComplexFrequencies cf = complex_frequencies(params);
    return detail::correlation_functions_raw(cf.qubit, cf.cavity, 1.0,
                                             params.kappa, pulse_length,
                                             params.delta_p);
}

double norm_of_expsum(const ExponentialSum& h) {
    for (const auto& term : h.terms) {
        if (!(term.exponent.real() < 0.0)) {
            throw NonIntegrableError(
                "exponential sum is not square-integrable on [0, inf): "
                "exponent with Re >= 0");
        }
    }
    Complex acc{0.0, 0.0};
    for (const auto& ti : h.terms) {
        for (const auto& tj : h.terms) {
            acc -= ti.coefficient * std::conj(tj.coefficient) /
                   (ti.exponent + std::conj(tj.exponent));
        }
    }
    if (std::abs(acc.imag()) > 1e-12 * std::max(1.0, std::abs(acc.real()))) {
        throw PhysicsError("internal-consistency",
                           "norm of exponential sum has a non-real residue");
    }
    return std::max(acc.real(), 0.0);
}

ExponentialSum empty_cavity_driven_amplitude(const SystemParams& params,
                                             double pulse_length) {
    require_pulse_length(pulse_length);
    const ComplexFrequencies cf = complex_frequencies(params);
    const Complex cavity_pole = -kI * cf.cavity;  // = -kappa/2
    const Complex l3 = input_pole(pulse_length, params.delta_p);
    if (nearly_equal_poles(cavity_pole, l3)) {
        throw DegeneratePolesError(
            "degenerate poles in the empty-cavity amplitude (pulse length ~ "
            "2/kappa); use the oracle quadrature path");
    }
    const Complex pre = -kI * std::sqrt(params.kappa / pulse_length);
    ExponentialSum out;
    out.terms = {{pre / (cavity_pole - l3), cavity_pole},
                 {pre / (l3 - cavity_pole), l3}};
    return out;
}

namespace {

ExponentialSum merge_difference(const ExponentialSum& a,
                                const ExponentialSum& b) {
    // a - b; coefficients of bitwise-identical exponents (the shared input
    // pole) are combined exactly to avoid spurious cross terms.
    ExponentialSum diff = a;
    for (const auto& term : b.terms) {
        bool combined = false;
        for (auto& existing : diff.terms) {
            if (existing.exponent == term.exponent) {
                existing.coefficient -= term.coefficient;
                combined = true;
                break;
            }
        }
        if (!combined) diff.terms.push_back({-term.coefficient, term.exponent});
    }
    return diff;
}

double inelastic_sum_from_norms(double kappa, double gamma_p,
                                double n_qubit_free, double n_cavity_free,
                                double n_qubit_driven) {
    const double ratio = 2.0 * gamma_p * n_qubit_free;
    if (ratio >= 1.0 - kDivergenceSlack) {
        throw DivergentSeriesError(
            "inelastic series diverges: 2*gamma_p*N(alpha_q) = " +
            std::to_string(ratio) + " >= 1 (no photon escape channel)");
    }
    return kappa * gamma_p * n_qubit_driven * n_cavity_free / (1.0 - ratio);
}

}  // namespace

double elastic_difference_norm(const SystemParams& params,
                               double pulse_length) {
    const CorrelationFunctions corr = correlation_functions(params, pulse_length);
    const ExponentialSum empty = empty_cavity_driven_amplitude(params, pulse_length);
    const ExponentialSum diff = merge_difference(empty, corr.cavity_driven);
    return params.kappa / 2.0 * norm_of_expsum(diff);
}

double inelastic_sum(const SystemParams& params, double pulse_length) {
    const CorrelationFunctions corr = correlation_functions(params, pulse_length);
    return inelastic_sum_from_norms(params.kappa, params.gamma_p,
                                    norm_of_expsum(corr.qubit_free),
                                    norm_of_expsum(corr.cavity_free),
                                    norm_of_expsum(corr.qubit_driven));
}

NormBundle finite_pulse_norms(const SystemParams& params, double pulse_length) {
    if (!is_normalized(params)) {
        throw ValidationError("finite_pulse_norms expects normalized params");
    }
    require_pulse_length(pulse_length);

    const PoleSet ps = poles(params, pulse_length);
    const Complex cavity_pole{-params.kappa / 2.0, 0.0};
    const bool empty_degenerate = nearly_equal_poles(cavity_pole, ps.input_pole);

    NormBundle bundle;
    bundle.pulse_length = pulse_length;

    if (!ps.degenerate && !empty_degenerate) {
        const CorrelationFunctions corr =
            correlation_functions(params, pulse_length);
        const ExponentialSum empty =
            empty_cavity_driven_amplitude(params, pulse_length);
        bundle.elastic_difference =
            params.kappa / 2.0 *
            norm_of_expsum(merge_difference(empty, corr.cavity_driven));
        bundle.inelastic_total = inelastic_sum_from_norms(
            params.kappa, params.gamma_p, norm_of_expsum(corr.qubit_free),
            norm_of_expsum(corr.cavity_free), norm_of_expsum(corr.qubit_driven));
        return bundle;
    }

    // Near-degenerate poles: the measure-zero confluent manifold is handled
    // by direct integration rather than a second analytic code path.
    const oracle::QuadratureNorms qn =
        oracle::correlation_norms_by_quadrature(params, pulse_length);
    bundle.elastic_difference = params.kappa / 2.0 * qn.elastic_difference;
    bundle.inelastic_total =
        inelastic_sum_from_norms(params.kappa, params.gamma_p, qn.qubit_free,
                                 qn.cavity_free, qn.qubit_driven);
    return bundle;
}

EoFigures finite_pulse_figures(const SystemParams& params,
                               double pulse_length) {
    const NormBundle bundle = finite_pulse_norms(params, pulse_length);
    return eo_figures(bundle.elastic_difference, bundle.inelastic_total);
}

}  // namespace cavityeo
