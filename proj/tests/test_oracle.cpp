#include <doctest.h>

#include <cmath>
#include <complex>

#include "cavityeo/errors.hpp"
#include "cavityeo/oracle.hpp"
#include "cavityeo/pulsed.hpp"

using namespace cavityeo;
using Complex = std::complex<double>;

namespace {

SystemParams make(double kappa, double gamma, double gamma_p, double delta) {
    SystemParams p;
    p.kappa = kappa;
    p.gamma = gamma;
    p.gamma_p = gamma_p;
    p.delta = delta;
    return p;
}

}  // namespace

TEST_CASE("lossless free evolution is a pure Rabi oscillation") {
    const oracle::CorrelationOdes odes =
        oracle::integrate_correlations(make(0, 0, 0, 0), 10.0, 15.0, 1e-11, 61);
    for (std::size_t i = 0; i < odes.free_evolution.times.size(); ++i) {
        const double t = odes.free_evolution.times[i];
        CHECK(std::abs(odes.free_evolution.qubit[i] - std::cos(t)) < 1e-9);
    }
}

TEST_CASE("critically damped free evolution matches the confluent solution") {
    const oracle::CorrelationOdes odes =
        oracle::integrate_correlations(make(4, 0, 0, 0), 10.0, 15.0, 1e-11, 61);
    for (std::size_t i = 0; i < odes.free_evolution.times.size(); ++i) {
        const double t = odes.free_evolution.times[i];
        CHECK(std::abs(odes.free_evolution.qubit[i] -
                       std::exp(-t) * (1.0 + t)) < 1e-9);
    }
}

TEST_CASE("integration validates its inputs") {
    CHECK_THROWS_AS(
        oracle::integrate_correlations(make(1, 1, 1, 0), 10.0, 15.0, 1e-5, 61),
        ValidationError);
    CHECK_THROWS_AS(
        oracle::integrate_correlations(make(1, 1, 1, 0), -2.0, 15.0, 1e-10, 61),
        ValidationError);
}

TEST_CASE("quadrature of a plain exponential") {
    const auto result = oracle::quadrature_norm(
        [](double t) { return Complex{std::exp(-t), 0.0}; }, 40.0, 1e-10, 2.0);
    CHECK(result.value == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(result.error_estimate < 1e-9);
}

TEST_CASE("quadrature refuses an undecayed cutoff") {
    CHECK_THROWS_AS(
        oracle::quadrature_norm(
            [](double t) { return Complex{std::exp(-t), 0.0}; }, 2.0, 1e-10, 2.0),
        QuadratureError);
    CHECK_THROWS_AS(
        oracle::quadrature_norm([](double) { return Complex{1.0, 0.0}; }, 50.0,
                                1e-10, 1.0),
        QuadratureError);
}

TEST_CASE("quadrature is deterministic") {
    auto h = [](double t) { return std::exp(Complex{-0.3 * t, 1.7 * t}); };
    const double a = oracle::quadrature_norm(h, 120.0, 1e-11, 0.6).value;
    const double b = oracle::quadrature_norm(h, 120.0, 1e-11, 0.6).value;
    CHECK(a == b);
}

TEST_CASE("truncated inelastic norms vanish without dephasing") {
    const std::vector<double> norms =
        oracle::truncated_inelastic_sum(make(2, 1, 0, 0), 20.0, 3);
    for (double v : norms) CHECK(v == 0.0);
}

TEST_CASE("truncated inelastic norms have the geometric ratio") {
    const SystemParams p = make(2, 2, 2, 1);
    const double l = 30.0;
    const std::vector<double> norms = oracle::truncated_inelastic_sum(p, l, 3);
    const double ratio_alg =
        2.0 * p.gamma_p *
        norm_of_expsum(correlation_functions(p, l).qubit_free);
    CHECK(norms[1] / norms[0] == doctest::Approx(ratio_alg).epsilon(1e-6));
    CHECK(norms[2] / norms[1] == doctest::Approx(ratio_alg).epsilon(1e-6));
}

TEST_CASE("partial sums approach the analytic series within the tail bound") {
    const SystemParams p = make(1.5, 1, 1.2, 2);
    const double l = 40.0;
    const std::vector<double> norms = oracle::truncated_inelastic_sum(p, l, 4);
    double partial = 0.0;
    for (double v : norms) partial += v;
    const double closed = inelastic_sum(p, l);
    const double ratio =
        2.0 * p.gamma_p *
        norm_of_expsum(correlation_functions(p, l).qubit_free);
    const double bound = closed * std::pow(ratio, 4) / (1.0 - ratio);
    CHECK(std::abs(closed - partial) <= bound + 1e-8 * closed);
}

TEST_CASE("n_max outside [1, 4] is rejected") {
    CHECK_THROWS_AS(oracle::truncated_inelastic_sum(make(1, 1, 1, 0), 10.0, 0),
                    ValidationError);
    CHECK_THROWS_AS(oracle::truncated_inelastic_sum(make(1, 1, 1, 0), 10.0, 5),
                    ValidationError);
}

TEST_CASE("cross-validation suite passes on a reduced draw budget") {
    const oracle::OracleReport report = oracle::run_oracle_checks(99, 6);
    for (const auto& check : report.checks) {
        INFO(check.name, " residual=", check.residual, " tol=", check.tolerance);
        CHECK(check.pass);
    }
    CHECK(report.all_pass);
}

TEST_CASE("cross-validation suite is bit-deterministic") {
    const std::string a = oracle::to_json(oracle::run_oracle_checks(7, 4));
    const std::string b = oracle::to_json(oracle::run_oracle_checks(7, 4));
    CHECK(a == b);
}

TEST_CASE("unattainable tolerance makes the suite fail loudly") {
    const oracle::OracleReport report = oracle::run_oracle_checks(7, 3, 1e-15);
    CHECK_FALSE(report.all_pass);
}
