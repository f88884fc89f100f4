#include "cavityeo/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cavityeo/errors.hpp"
#include "counter_rng.hpp"

namespace cavityeo {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kNoClickThreshold = 1e-14;

int env_index(EnvironmentTag env) { return static_cast<int>(env); }
int arm_index(Arm arm) { return static_cast<int>(arm); }

// Both beam splitters act the same way on the photon arm label:
// left -> (right + i*left)/sqrt(2), right -> (left + i*right)/sqrt(2).
void apply_beam_splitter(std::array<Complex, 24>& amp) {
    for (int pair = 0; pair < 4; ++pair) {
        for (int env = 0; env < 3; ++env) {
            const int left = (0 * 4 + pair) * 3 + env;
            const int right = (1 * 4 + pair) * 3 + env;
            const Complex l = amp[left];
            const Complex r = amp[right];
            amp[left] = kInvSqrt2 * (kI * l + r);
            amp[right] = kInvSqrt2 * (l + kI * r);
        }
    }
}

}  // namespace

std::complex<double>& ProtocolState::amplitude(Arm arm, int pair,
                                               EnvironmentTag env) {
    return amp_[(arm_index(arm) * 4 + pair) * 3 + env_index(env)];
}

const std::complex<double>& ProtocolState::amplitude(Arm arm, int pair,
                                                     EnvironmentTag env) const {
    return amp_[(arm_index(arm) * 4 + pair) * 3 + env_index(env)];
}

double ProtocolState::total_weight() const {
    double w = 0.0;
    for (const Complex& a : amp_) w += std::norm(a);
    return w;
}

ProtocolState run_interferometer(const TransmissionResult& t) {
    const Complex t_elastic = t.elastic_amplitude;
    const double t_inelastic = std::sqrt(std::max(t.inelastic_flux, 0.0));

    // Photon enters in the left arm, both qubits in (|0> + |1>)/sqrt(2).
    std::array<Complex, 24> amp{};
    for (int pair = 0; pair < 4; ++pair) {
        amp[(0 * 4 + pair) * 3 + env_index(EnvironmentTag::None)] = 0.5;
    }

    apply_beam_splitter(amp);

    // Conditional cavity maps: an arm whose qubit is |1> transmits the
    // elastic amplitude and deposits the inelastic branch onto that arm's
    // environment. The non-transmitted components are dropped.
    std::array<Complex, 24> mapped{};
    auto mref = [&](Arm arm, int pair, EnvironmentTag env) -> Complex& {
        return mapped[(arm_index(arm) * 4 + pair) * 3 + env_index(env)];
    };
    for (int pair = 0; pair < 4; ++pair) {
        const bool left_excited = (pair & 2) != 0;
        const bool right_excited = (pair & 1) != 0;
        for (int env = 0; env < 3; ++env) {
            const auto tag = static_cast<EnvironmentTag>(env);
            const Complex l = amp[(0 * 4 + pair) * 3 + env];
            const Complex r = amp[(1 * 4 + pair) * 3 + env];
            if (left_excited) {
                mref(Arm::Left, pair, tag) += t_elastic * l;
                if (tag == EnvironmentTag::None) {
                    mref(Arm::Left, pair, EnvironmentTag::LeftArm) +=
                        t_inelastic * l;
                }
            } else {
                mref(Arm::Left, pair, tag) += l;
            }
            if (right_excited) {
                mref(Arm::Right, pair, tag) += t_elastic * r;
                if (tag == EnvironmentTag::None) {
                    mref(Arm::Right, pair, EnvironmentTag::RightArm) +=
                        t_inelastic * r;
                }
            } else {
                mref(Arm::Right, pair, tag) += r;
            }
        }
    }

    apply_beam_splitter(mapped);

    ProtocolState out;
    for (int arm = 0; arm < 2; ++arm) {
        for (int pair = 0; pair < 4; ++pair) {
            for (int env = 0; env < 3; ++env) {
                out.amplitude(static_cast<Arm>(arm), pair,
                              static_cast<EnvironmentTag>(env)) =
                    mapped[(arm * 4 + pair) * 3 + env];
            }
        }
    }
    return out;
}

double click_probability(const ProtocolState& state) {
    double p = 0.0;
    for (int pair = 0; pair < 4; ++pair) {
        for (int env = 0; env < 3; ++env) {
            p += std::norm(state.amplitude(Arm::Left, pair,
                                           static_cast<EnvironmentTag>(env)));
        }
    }
    return p;
}

std::complex<double>& DensityMatrix4::at(int row, int col) {
    return m_[row * 4 + col];
}

const std::complex<double>& DensityMatrix4::at(int row, int col) const {
    return m_[row * 4 + col];
}

double DensityMatrix4::trace_real() const {
    double tr = 0.0;
    for (int i = 0; i < 4; ++i) tr += m_[i * 4 + i].real();
    return tr;
}

double DensityMatrix4::hermiticity_defect() const {
    double defect = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            defect = std::max(
                defect, std::abs(m_[i * 4 + j] - std::conj(m_[j * 4 + i])));
        }
    }
    return defect;
}

double DensityMatrix4::min_eigenvalue() const {
    Eigen::Matrix4cd m;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) m(i, j) = m_[i * 4 + j];
    }
    const Eigen::Matrix4cd hermitian = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(hermitian);
    return solver.eigenvalues().minCoeff();
}

DensityMatrix4 reduced_density_matrix(const ProtocolState& state) {
    const double p = click_probability(state);
    if (p < kNoClickThreshold) {
        throw PhysicsError("no-click",
                           "click probability is zero; the conditional state "
                           "is undefined");
    }
    DensityMatrix4 rho;
    for (int env = 0; env < 3; ++env) {
        const auto tag = static_cast<EnvironmentTag>(env);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                rho.at(i, j) += state.amplitude(Arm::Left, i, tag) *
                                std::conj(state.amplitude(Arm::Left, j, tag));
            }
        }
    }
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) rho.at(i, j) /= p;
    }
    return rho;
}

double fidelity_to_target(const DensityMatrix4& rho) {
    // target = (|01> - |10>)/sqrt(2), basis indices 1 and 2
    const Complex f = 0.5 * (rho.at(1, 1) + rho.at(2, 2) - rho.at(1, 2) -
                             rho.at(2, 1));
    return f.real();
}

AttemptStats sample_eo_runs(const EoFigures& figures, std::uint64_t n_trials,
                            std::uint64_t seed) {
    if (!figures.fidelity.has_value()) {
        throw ValidationError(
            "cannot sample: fidelity undefined (zero click probability)");
    }
    const double p = figures.probability;
    const double f = *figures.fidelity;
    if (!(p > 0.0) || p > 1.0) {
        throw ValidationError("success probability must lie in (0, 1]");
    }
    if (n_trials == 0) throw ValidationError("n_trials must be > 0");

    double mean = 0.0;
    double m2 = 0.0;
    std::uint64_t target_count = 0;
    const double log_miss = p < 1.0 ? std::log1p(-p) : 0.0;

    for (std::uint64_t i = 0; i < n_trials; ++i) {
        detail::CounterRng rng(seed, i);
        double attempts = 1.0;
        if (p < 1.0) {
            const double u = rng.uniform();
            attempts = 1.0 + std::floor(std::log1p(-u) / log_miss);
        }
        if (rng.uniform() < f) ++target_count;

        const double count = static_cast<double>(i + 1);
        const double delta = attempts - mean;
        mean += delta / count;
        m2 += delta * (attempts - mean);
    }

    AttemptStats stats;
    stats.mean_attempts = mean;
    stats.var_attempts =
        n_trials > 1 ? m2 / static_cast<double>(n_trials - 1) : 0.0;
    stats.empirical_fidelity =
        static_cast<double>(target_count) / static_cast<double>(n_trials);
    stats.n_trials = n_trials;
    stats.seed = seed;
    return stats;
}

std::string to_json(const AttemptStats& stats) {
    nlohmann::json j;
    j["mean_attempts"] = stats.mean_attempts;
    j["var_attempts"] = stats.var_attempts;
    j["empirical_fidelity"] = stats.empirical_fidelity;
    j["n_trials"] = stats.n_trials;
    j["seed"] = stats.seed;
    return j.dump();
}

}  // namespace cavityeo
