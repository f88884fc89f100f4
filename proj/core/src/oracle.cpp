#include "cavityeo/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavityeo/circuit.hpp"
#include "cavityeo/errors.hpp"
#include "cavityeo/response.hpp"
#include "counter_rng.hpp"

namespace cavityeo::oracle {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

template <std::size_t N>
using CState = std::array<Complex, N>;

// Dormand-Prince 5(4) with PI step-size control. Sample times are hit
// exactly by clipping the step; the final state is returned.
template <std::size_t N, typename RhsFn, typename SampleFn>
CState<N> dopri5(RhsFn&& rhs, CState<N> y, double t0, double t1, double rtol,
                 double atol, const std::vector<double>& sample_times,
                 SampleFn&& on_sample) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                            b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                            e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                            c5 = 8.0 / 9;

    double t = t0;
    std::size_t next_sample = 0;
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t0) {
        on_sample(sample_times[next_sample], y);
        ++next_sample;
    }

    CState<N> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew;
    rhs(t, y, k1);

    double h = std::min(1e-2, (t1 - t0) * 1e-3);
    double err_old = 1e-4;
    bool rejected = false;
    long iterations = 0;

    while (t < t1) {
        if (++iterations > 50'000'000L) {
            throw StiffnessError("integration exceeded the step budget");
        }
        double target = t1;
        if (next_sample < sample_times.size()) {
            target = std::min(target, sample_times[next_sample]);
        }
        const double h_step = std::min(h, target - t);

        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h_step * a21 * k1[i];
        rhs(t + c2 * h_step, ytmp, k2);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h_step * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h_step, ytmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h_step * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h_step, ytmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h_step * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] +
                                       a54 * k4[i]);
        rhs(t + c5 * h_step, ytmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h_step * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                       a64 * k4[i] + a65 * k5[i]);
        rhs(t + h_step, ytmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h_step * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                                       b5 * k5[i] + b6 * k6[i]);
        rhs(t + h_step, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const Complex e = h_step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                        e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc =
                atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double w = std::abs(e) / sc;
            err += w * w;
        }
        err = std::sqrt(err / static_cast<double>(N));

        if (err <= 1.0) {
            t += h_step;
            y = ynew;
            k1 = k7;  // FSAL
            while (next_sample < sample_times.size() &&
                   sample_times[next_sample] <= t + 1e-14 * std::max(1.0, t)) {
                on_sample(sample_times[next_sample], y);
                ++next_sample;
            }
            double fac = 0.9 * std::pow(std::max(err, 1e-16), -0.17) *
                         std::pow(err_old, 0.04);
            fac = std::clamp(fac, 0.2, 10.0);
            if (rejected) fac = std::min(fac, 1.0);
            h = h_step * fac;
            err_old = std::max(err, 1e-4);
            rejected = false;
        } else {
            h = h_step * std::clamp(0.9 * std::pow(err, -0.17), 0.1, 0.9);
            rejected = true;
            if (h < 1e-14 * std::max(1.0, std::abs(t))) {
                throw StiffnessError(
                    "step size underflow: system too stiff for the explicit "
                    "integrator");
            }
        }
    }
    return y;
}

struct SystemMatrix {
    Complex qq, qc, cq, cc;
};

SystemMatrix correlation_matrix(const ComplexFrequencies& cf, double g) {
    return {-kI * cf.qubit, -kI * g, -kI * g, -kI * cf.cavity};
}

void validate_tol(double tol) {
    if (!(tol >= 1e-12 && tol <= 1e-6)) {
        throw ValidationError("tolerance must lie in [1e-12, 1e-6]");
    }
}

std::vector<double> uniform_grid(double t_max, int n) {
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) {
        grid[i] = t_max * static_cast<double>(i) / (n - 1);
    }
    return grid;
}

// --- Gauss-Kronrod 7-15 ---------------------------------------------------

constexpr std::array<double, 8> kXgk = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
constexpr std::array<double, 4> kWg = {0.129484966168870, 0.279705391489277,
                                       0.381830050505119, 0.417959183673469};

template <typename Fn>
std::pair<double, double> gk15(Fn&& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = kWgk[7] * fc;
    double gauss = kWg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kXgk[i];
        const double fsum = f(center - dx) + f(center + dx);
        kronrod += kWgk[i] * fsum;
        if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
    }
    kronrod *= half;
    gauss *= half;
    return {kronrod, std::abs(kronrod - gauss)};
}

template <typename Fn>
void gk_adapt(Fn&& f, double a, double b, double tol, int depth, double& value,
              double& error) {
    auto [k, e] = gk15(f, a, b);
    if (e <= tol || depth >= 48 ||
        (b - a) <= 1e-14 * std::max(1.0, std::abs(b))) {
        value += k;
        error += e;
        return;
    }
    const double mid = 0.5 * (a + b);
    gk_adapt(f, a, mid, 0.5 * tol, depth + 1, value, error);
    gk_adapt(f, mid, b, 0.5 * tol, depth + 1, value, error);
}

}  // namespace

CorrelationOdes integrate_correlations(const SystemParams& params,
                                       double pulse_length, double t_max,
                                       double tol, int n_samples) {
    if (!is_normalized(params)) {
        throw ValidationError("integrate_correlations expects normalized params");
    }
    if (!(pulse_length > 0.0) || !(t_max > 0.0)) {
        throw ValidationError("pulse_length and t_max must be > 0");
    }
    validate_tol(tol);
    if (n_samples < 2) throw ValidationError("n_samples must be >= 2");

    const ComplexFrequencies cf = complex_frequencies(params);
    const SystemMatrix m = correlation_matrix(cf, 1.0);
    const Complex drive_coef = -kI * std::sqrt(params.kappa / pulse_length);
    const Complex drive_pole{-1.0 / pulse_length, -params.delta_p};

    const std::vector<double> grid = uniform_grid(t_max, n_samples);
    const double atol = 1e-14;

    CorrelationOdes out;
    auto prepare = [&](OdeSolution& sol) {
        sol.tolerance = tol;
        sol.times.reserve(grid.size());
        sol.qubit.reserve(grid.size());
        sol.cavity.reserve(grid.size());
    };
    prepare(out.free_evolution);
    prepare(out.driven);

    dopri5<2>(
        [&](double, const CState<2>& y, CState<2>& dy) {
            dy[0] = m.qq * y[0] + m.qc * y[1];
            dy[1] = m.cq * y[0] + m.cc * y[1];
        },
        CState<2>{Complex{1.0, 0.0}, Complex{0.0, 0.0}}, 0.0, t_max, tol, atol,
        grid, [&](double t, const CState<2>& y) {
            out.free_evolution.times.push_back(t);
            out.free_evolution.qubit.push_back(y[0]);
            out.free_evolution.cavity.push_back(y[1]);
        });

    dopri5<2>(
        [&](double t, const CState<2>& y, CState<2>& dy) {
            dy[0] = m.qq * y[0] + m.qc * y[1];
            dy[1] = m.cq * y[0] + m.cc * y[1] +
                    drive_coef * std::exp(drive_pole * t);
        },
        CState<2>{}, 0.0, t_max, tol, atol, grid,
        [&](double t, const CState<2>& y) {
            out.driven.times.push_back(t);
            out.driven.qubit.push_back(y[0]);
            out.driven.cavity.push_back(y[1]);
        });

    return out;
}

QuadratureResult quadrature_norm(
    const std::function<std::complex<double>(double)>& h, double cutoff,
    double tol, double tail_decay_rate) {
    if (!(cutoff > 0.0)) throw ValidationError("cutoff must be > 0");
    if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
    if (!(tail_decay_rate > 0.0)) {
        throw ValidationError("tail_decay_rate must be > 0");
    }

    const double tail_bound = std::norm(h(cutoff)) / tail_decay_rate;
    if (tail_bound > tol) {
        throw QuadratureError(
            "cutoff too small: analytic tail bound " +
            std::to_string(tail_bound) + " exceeds tolerance " +
            std::to_string(tol) + " (integrand not decayed at the cutoff)");
    }

    auto integrand = [&](double t) { return std::norm(h(t)); };

    // Seed panels of O(unit) length so oscillatory integrands are resolved
    // before adaptivity takes over.
    const int n_panels =
        std::clamp(static_cast<int>(cutoff / 2.0) + 1, 16, 8192);
    QuadratureResult result;
    for (int i = 0; i < n_panels; ++i) {
        const double a = cutoff * static_cast<double>(i) / n_panels;
        const double b = cutoff * static_cast<double>(i + 1) / n_panels;
        gk_adapt(integrand, a, b, tol / n_panels, 0, result.value,
                 result.error_estimate);
    }
    result.error_estimate += tail_bound;
    return result;
}

QuadratureNorms correlation_norms_by_quadrature(const SystemParams& params,
                                                double pulse_length,
                                                double tol) {
    if (!is_normalized(params)) {
        throw ValidationError(
            "correlation_norms_by_quadrature expects normalized params");
    }
    if (!(pulse_length > 0.0)) throw ValidationError("pulse_length must be > 0");
    validate_tol(tol);

    const ComplexFrequencies cf = complex_frequencies(params);
    const SystemMatrix m = correlation_matrix(cf, 1.0);
    const Complex drive_coef = -kI * std::sqrt(params.kappa / pulse_length);
    const Complex drive_pole{-1.0 / pulse_length, -params.delta_p};

    const PoleSet ps = poles(params, pulse_length);
    const double system_rate = std::min(std::abs(ps.system_pole_1.real()),
                                        std::abs(ps.system_pole_2.real()));
    if (!(system_rate > 0.0)) {
        throw NonIntegrableError(
            "correlation functions do not decay (lossless system); norms "
            "diverge");
    }
    const double alpha_t_max = 50.0 / system_rate;
    double beta_rate = std::min(system_rate, 1.0 / pulse_length);
    if (params.kappa > 0.0) beta_rate = std::min(beta_rate, params.kappa / 2.0);
    const double beta_t_max = 50.0 / beta_rate;
    const double atol = 1e-14;
    const std::vector<double> no_samples;
    auto ignore = [](double, const auto&) {};

    QuadratureNorms norms;

    // alpha system with attached |.|^2 accumulators
    const CState<4> alpha_final = dopri5<4>(
        [&](double, const CState<4>& y, CState<4>& dy) {
            dy[0] = m.qq * y[0] + m.qc * y[1];
            dy[1] = m.cq * y[0] + m.cc * y[1];
            dy[2] = std::norm(y[0]);
            dy[3] = std::norm(y[1]);
        },
        CState<4>{Complex{1.0, 0.0}}, 0.0, alpha_t_max, tol, atol, no_samples,
        ignore);
    norms.qubit_free = alpha_final[2].real();
    norms.cavity_free = alpha_final[3].real();

    // beta system, the empty-cavity branch and both accumulators
    const CState<5> beta_final = dopri5<5>(
        [&](double t, const CState<5>& y, CState<5>& dy) {
            const Complex drive = drive_coef * std::exp(drive_pole * t);
            dy[0] = m.qq * y[0] + m.qc * y[1];
            dy[1] = m.cq * y[0] + m.cc * y[1] + drive;
            dy[2] = m.cc * y[2] + drive;
            dy[3] = std::norm(y[0]);
            dy[4] = std::norm(y[2] - y[1]);
        },
        CState<5>{}, 0.0, beta_t_max, tol, atol, no_samples, ignore);
    norms.qubit_driven = beta_final[3].real();
    norms.elastic_difference = beta_final[4].real();

    return norms;
}

std::vector<double> truncated_inelastic_sum(const SystemParams& params,
                                            double pulse_length, int n_max) {
    if (n_max < 1 || n_max > 4) {
        throw ValidationError("n_max must be in [1, 4]");
    }
    const CorrelationFunctions corr =
        correlation_functions(params, pulse_length);

    auto factor = [](const ExponentialSum& h) {
        const double rate = h.slowest_decay();
        if (!(rate > 0.0)) {
            throw NonIntegrableError("correlation function does not decay");
        }
        double amplitude = 0.0;
        for (const auto& term : h.terms) amplitude += std::abs(term.coefficient);
        const double scale =
            std::max(amplitude * amplitude / (2.0 * rate), 1e-6);
        return quadrature_norm([&h](double t) { return h(t); }, 50.0 / rate,
                               1e-10 * scale, 2.0 * rate)
            .value;
    };

    const double n_qubit_driven = factor(corr.qubit_driven);
    const double n_qubit_free = factor(corr.qubit_free);
    const double n_cavity_free = factor(corr.cavity_free);

    std::vector<double> out;
    out.reserve(n_max);
    for (int n = 1; n <= n_max; ++n) {
        out.push_back(params.kappa / 2.0 * std::pow(2.0 * params.gamma_p, n) *
                      n_qubit_driven * std::pow(n_qubit_free, n - 1) *
                      n_cavity_free);
    }
    return out;
}

namespace {

struct ResidualTracker {
    double value = 0.0;
    void update(double r) { value = std::max(value, r); }
};

double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

OracleReport run_oracle_checks(std::uint64_t seed, int draws,
                               std::optional<double> tol_override) {
    if (draws < 1) throw ValidationError("draws must be >= 1");

    OracleReport report;
    report.seed = seed;
    report.draws = draws;

    ResidualTracker alpha_ode, beta_ode, norm_alpha_q, norm_alpha_c,
        norm_beta_q, norm_elastic, series_ratio, series_partial;

    const double ode_tol = 1e-11;
    const int n_grid = 101;
    const double t_grid_max = 20.0;

    int accepted = 0;
    std::uint64_t stream = 0;
    int series_checked = 0;
    while (accepted < draws) {
        detail::CounterRng rng(seed, stream++);
        SystemParams p;
        p.kappa = rng.uniform(0.05, 4.0);
        p.gamma = rng.uniform(0.05, 4.0);
        p.gamma_p = rng.uniform(0.05, 4.0);
        p.delta = rng.uniform(-8.0, 8.0);
        const double pulse_length = std::pow(10.0, rng.uniform(0.3, 2.0));

        // Reject draws too close to the confluent manifold; the residue
        // formulas are only compared where they are well-conditioned.
        const PoleSet ps = poles(p, pulse_length);
        const double scale = std::max(
            {std::abs(ps.system_pole_1), std::abs(ps.system_pole_2), 1.0});
        const Complex cavity_pole{-p.kappa / 2.0, 0.0};
        const double min_gap =
            std::min({std::abs(ps.system_pole_1 - ps.system_pole_2),
                      std::abs(ps.system_pole_1 - ps.input_pole),
                      std::abs(ps.system_pole_2 - ps.input_pole),
                      std::abs(cavity_pole - ps.input_pole)});
        if (min_gap < 1e-4 * scale) continue;
        ++accepted;

        const CorrelationFunctions corr = correlation_functions(p, pulse_length);
        const CorrelationOdes odes =
            integrate_correlations(p, pulse_length, t_grid_max, ode_tol, n_grid);

        for (int i = 0; i < n_grid; ++i) {
            const double t = odes.free_evolution.times[i];
            alpha_ode.update(
                std::abs(corr.qubit_free(t) - odes.free_evolution.qubit[i]));
            alpha_ode.update(
                std::abs(corr.cavity_free(t) - odes.free_evolution.cavity[i]));
            beta_ode.update(std::abs(corr.qubit_driven(t) - odes.driven.qubit[i]));
            beta_ode.update(
                std::abs(corr.cavity_driven(t) - odes.driven.cavity[i]));
        }

        auto quad_vs_closed = [](const ExponentialSum& h) {
            const double closed = norm_of_expsum(h);
            const double rate = 2.0 * h.slowest_decay();
            const double quad =
                quadrature_norm([&h](double t) { return h(t); }, 100.0 / rate,
                                std::max(1e-11 * closed, 1e-15), rate)
                    .value;
            return rel_diff(quad, closed);
        };
        norm_alpha_q.update(quad_vs_closed(corr.qubit_free));
        norm_alpha_c.update(quad_vs_closed(corr.cavity_free));
        norm_beta_q.update(quad_vs_closed(corr.qubit_driven));

        {
            const ExponentialSum empty =
                empty_cavity_driven_amplitude(p, pulse_length);
            const double closed = elastic_difference_norm(p, pulse_length);
            const double rate = 2.0 * std::min(empty.slowest_decay(),
                                               corr.cavity_driven.slowest_decay());
            const double quad =
                p.kappa / 2.0 *
                quadrature_norm(
                    [&](double t) { return empty(t) - corr.cavity_driven(t); },
                    100.0 / rate, std::max(1e-11 * closed, 1e-15), rate)
                    .value;
            norm_elastic.update(rel_diff(quad, closed));
        }

        if (series_checked < 10) {
            ++series_checked;
            const std::vector<double> truncated =
                truncated_inelastic_sum(p, pulse_length, 4);
            const double closed_sum = inelastic_sum(p, pulse_length);
            const double ratio_alg =
                2.0 * p.gamma_p * norm_of_expsum(corr.qubit_free);
            series_ratio.update(rel_diff(truncated[1] / truncated[0], ratio_alg));
            double partial = 0.0;
            for (double v : truncated) partial += v;
            const double tail_bound =
                closed_sum * std::pow(ratio_alg, 4) / (1.0 - ratio_alg);
            series_partial.update(std::abs(closed_sum - partial) /
                                  (tail_bound + 1e-8 * closed_sum + 1e-300));
        }
    }

    // circuit engine vs the closed-form figures, on synthetic transmissions
    ResidualTracker circuit_p, circuit_f;
    for (int i = 0; i < 200; ++i) {
        detail::CounterRng rng(seed ^ 0xC1DC11Cull, i);
        const double r = rng.uniform();
        const double phase = rng.uniform(0.0, 6.283185307179586);
        TransmissionResult t;
        t.elastic_amplitude = std::polar(r, phase);
        t.inelastic_flux = rng.uniform() * (1.0 - r * r);
        const ProtocolState state = run_interferometer(t);
        const double n_e = std::norm(1.0 - t.elastic_amplitude);
        const double n_i = t.inelastic_flux;
        const double p_closed = n_e / 8.0 + n_i / 4.0;
        circuit_p.update(std::abs(click_probability(state) - p_closed));
        if (p_closed > 1e-12) {
            const double f_closed = (n_e + n_i / 2.0) / (n_e + 2.0 * n_i);
            circuit_f.update(std::abs(
                fidelity_to_target(reduced_density_matrix(state)) - f_closed));
        }
    }

    // fixed analytic reference solutions
    ResidualTracker rabi, confluent;
    {
        SystemParams lossless;  // kappa = gamma = gamma_p = delta = 0
        const CorrelationOdes odes =
            integrate_correlations(lossless, 10.0, t_grid_max, ode_tol, n_grid);
        for (int i = 0; i < n_grid; ++i) {
            const double t = odes.free_evolution.times[i];
            rabi.update(std::abs(odes.free_evolution.qubit[i] - std::cos(t)));
        }
        SystemParams critical;
        critical.kappa = 4.0;
        const CorrelationOdes codes =
            integrate_correlations(critical, 10.0, t_grid_max, ode_tol, n_grid);
        for (int i = 0; i < n_grid; ++i) {
            const double t = codes.free_evolution.times[i];
            confluent.update(std::abs(codes.free_evolution.qubit[i] -
                                      std::exp(-t) * (1.0 + t)));
        }
    }

    auto add = [&](const std::string& name, double residual, double tol) {
        OracleCheck check;
        check.name = name;
        check.residual = residual;
        check.tolerance = tol_override.value_or(tol);
        check.pass = residual <= check.tolerance;
        report.checks.push_back(check);
    };

    add("alpha-residue-vs-ode", alpha_ode.value, 1e-8);
    add("beta-residue-vs-ode", beta_ode.value, 1e-8);
    add("norm-alpha-q-quadrature", norm_alpha_q.value, 1e-9);
    add("norm-alpha-c-quadrature", norm_alpha_c.value, 1e-9);
    add("norm-beta-q-quadrature", norm_beta_q.value, 1e-9);
    add("norm-elastic-diff-quadrature", norm_elastic.value, 1e-9);
    add("circuit-probability-vs-closed-form", circuit_p.value, 1e-12);
    add("circuit-fidelity-vs-closed-form", circuit_f.value, 1e-12);
    add("inelastic-series-geometric-ratio", series_ratio.value, 1e-6);
    add("inelastic-series-partial-sum-bound", series_partial.value, 1.0);
    add("lossless-rabi-analytic", rabi.value, 1e-9);
    add("critical-damping-analytic", confluent.value, 1e-9);

    report.all_pass = true;
    for (const auto& check : report.checks) {
        report.all_pass = report.all_pass && check.pass;
    }
    return report;
}

std::string to_json(const OracleReport& report) {
    nlohmann::json j;
    j["seed"] = report.seed;
    j["draws"] = report.draws;
    j["all_pass"] = report.all_pass;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& check : report.checks) {
        checks.push_back({{"name", check.name},
                          {"residual", check.residual},
                          {"tolerance", check.tolerance},
                          {"pass", check.pass}});
    }
    j["checks"] = checks;
    return j.dump();
}

}  // namespace cavityeo::oracle
