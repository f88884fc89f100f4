#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cavityeo/model.hpp"
#include "cavityeo/pulsed.hpp"

namespace cavityeo::oracle {

/// Sampled solution of one 2x2 correlation system.
struct OdeSolution {
    std::vector<double> times;                   ///< strictly increasing
    std::vector<std::complex<double>> qubit;     ///< q-component per sample
    std::vector<std::complex<double>> cavity;    ///< c-component per sample
    double tolerance = 0.0;                      ///< requested relative tol
};

struct CorrelationOdes {
    OdeSolution free_evolution;  ///< alpha system, starts from (1, 0)
    OdeSolution driven;          ///< beta system, driven by the input pulse
};

/// Adaptive Dormand-Prince integration of both correlation systems on a
/// uniform sample grid of n_samples points covering [0, t_max].
/// tol must lie in [1e-12, 1e-6].
CorrelationOdes integrate_correlations(const SystemParams& params,
                                       double pulse_length, double t_max,
                                       double tol, int n_samples = 128);

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;  ///< quadrature error + analytic tail bound
};

/// Adaptive Gauss-Kronrod integral of |h(t)|^2 on [0, cutoff] plus an
/// exponential tail bound |h(cutoff)|^2 / tail_decay_rate, where
/// tail_decay_rate is the decay rate of |h|^2. Throws QuadratureError when
/// the tail bound alone exceeds tol (cutoff too small or non-decaying h).
QuadratureResult quadrature_norm(
    const std::function<std::complex<double>(double)>& h, double cutoff,
    double tol, double tail_decay_rate);

/// First n_max inelastic-branch norms N(g_1..n_max), each assembled from
/// quadrature_norm factors: (kappa/2) (2 gamma_p)^n N(beta_q) N(alpha_q)^(n-1)
/// N(alpha_c). n_max in [1, 4].
std::vector<double> truncated_inelastic_sum(const SystemParams& params,
                                            double pulse_length, int n_max);

/// Norms of the correlation functions obtained by integrating the ODE
/// systems with attached |.|^2 accumulators; the route taken when residue
/// formulas degenerate.
struct QuadratureNorms {
    double qubit_free = 0.0;        // N(alpha_q)
    double cavity_free = 0.0;       // N(alpha_c)
    double qubit_driven = 0.0;      // N(beta_q)
    double elastic_difference = 0.0;  // N(beta_c_empty - beta_c)
};

QuadratureNorms correlation_norms_by_quadrature(const SystemParams& params,
                                                double pulse_length,
                                                double tol = 1e-10);

struct OracleCheck {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct OracleReport {
    std::uint64_t seed = 0;
    int draws = 0;
    std::vector<OracleCheck> checks;
    bool all_pass = false;
};

/// Full cross-validation suite over seeded random parameter draws:
/// residue-vs-ODE, closed-norm-vs-quadrature, circuit-vs-closed-form and
/// inelastic-series checks. Deterministic for a fixed seed. tol_override,
/// when set, replaces every per-check tolerance.
OracleReport run_oracle_checks(std::uint64_t seed = 12345, int draws = 50,
                               std::optional<double> tol_override = {});

std::string to_json(const OracleReport& report);

}  // namespace cavityeo::oracle
