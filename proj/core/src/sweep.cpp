#include "cavityeo/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavityeo/errors.hpp"
#include "cavityeo/pulsed.hpp"

namespace cavityeo {

namespace {

enum class AxisTarget { Kappa, Gamma, GammaP, Delta, DeltaP, PulseLength };

AxisTarget axis_target(const std::string& name) {
    if (name == "kappa") return AxisTarget::Kappa;
    if (name == "gamma") return AxisTarget::Gamma;
    if (name == "gamma_p") return AxisTarget::GammaP;
    if (name == "delta") return AxisTarget::Delta;
    if (name == "delta_p") return AxisTarget::DeltaP;
    if (name == "pulse_length") return AxisTarget::PulseLength;
    throw ValidationError("unknown axis name: " + name +
                          " (expected kappa, gamma, gamma_p, delta, delta_p "
                          "or pulse_length)");
}

void validate_axis(const AxisSpec& axis) {
    if (axis.count < 1) throw ValidationError("axis count must be >= 1");
    if (!std::isfinite(axis.min) || !std::isfinite(axis.max) ||
        axis.min > axis.max) {
        throw ValidationError("axis range must be finite with min <= max");
    }
    if (axis.scale == AxisScale::Log && axis.min <= 0.0) {
        throw ValidationError("log-scaled axis requires min > 0");
    }
    const AxisTarget target = axis_target(axis.name);
    const bool non_negative = target == AxisTarget::Kappa ||
                              target == AxisTarget::Gamma ||
                              target == AxisTarget::GammaP;
    if (non_negative && axis.min < 0.0) {
        throw ValidationError(axis.name + " axis must be non-negative");
    }
    if (target == AxisTarget::PulseLength && axis.min <= 0.0) {
        throw ValidationError("pulse_length axis must be positive");
    }
}

void apply_axis(SystemParams& params, double& pulse_length, AxisTarget target,
                double value) {
    switch (target) {
        case AxisTarget::Kappa: params.kappa = value; break;
        case AxisTarget::Gamma: params.gamma = value; break;
        case AxisTarget::GammaP: params.gamma_p = value; break;
        case AxisTarget::Delta: params.delta = value; break;
        case AxisTarget::DeltaP: params.delta_p = value; break;
        case AxisTarget::PulseLength: pulse_length = value; break;
    }
}

CellResult evaluate_point(const SystemParams& fixed, const Engine& engine,
                          AxisTarget x_target, double x, AxisTarget y_target,
                          double y) {
    CellResult cell;
    try {
        SystemParams p = fixed;
        double pulse_length = engine.pulse_length;
        apply_axis(p, pulse_length, x_target, x);
        apply_axis(p, pulse_length, y_target, y);
        if (engine.kind == Engine::Kind::LongPulse) {
            const TransmissionResult t = transmission(p, QubitState::One);
            cell.transmission = t;
            cell.figures = eo_figures(t);
        } else {
            cell.figures = finite_pulse_figures(p, pulse_length);
        }
    } catch (const PhysicsError& e) {
        cell.error = e.what();
    }
    return cell;
}

int worker_count(int n_cells) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("CAVITY_EO_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && parsed > 0) {
            n = std::min<unsigned>(n, static_cast<unsigned>(parsed));
        }
    }
    return static_cast<int>(std::min<unsigned>(n, std::max(n_cells, 1)));
}

std::optional<double> cell_field(const CellResult& cell, SweepField field) {
    if (!cell.figures.has_value()) return std::nullopt;
    if (field == SweepField::Probability) return cell.figures->probability;
    return cell.figures->fidelity;  // may itself be empty (sentinel)
}

std::string format_double(double v) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, result.ptr);
}

}  // namespace

double AxisSpec::value(int index) const {
    if (count == 1) return min;
    const double frac = static_cast<double>(index) / (count - 1);
    if (scale == AxisScale::Log) {
        return min * std::pow(max / min, frac);
    }
    return min + (max - min) * frac;
}

const CellResult& SweepGrid::cell(int ix, int iy) const {
    return cells[static_cast<std::size_t>(iy) * x_axis.count + ix];
}

SweepGrid grid_sweep(const AxisSpec& x, const AxisSpec& y,
                     const SystemParams& fixed, const Engine& engine) {
    validate_axis(x);
    validate_axis(y);
    if (!is_normalized(fixed)) {
        throw ValidationError("grid_sweep expects normalized fixed params");
    }
    const AxisTarget xt = axis_target(x.name);
    const AxisTarget yt = axis_target(y.name);
    if (xt == yt) throw ValidationError("x and y axes must differ");
    const bool sweeps_pulse_length =
        xt == AxisTarget::PulseLength || yt == AxisTarget::PulseLength;
    if (sweeps_pulse_length && engine.kind != Engine::Kind::FinitePulse) {
        throw ValidationError("pulse_length axis requires the finite-pulse engine");
    }
    if (engine.kind == Engine::Kind::FinitePulse && !sweeps_pulse_length &&
        !(engine.pulse_length > 0.0)) {
        throw ValidationError("finite-pulse engine requires pulse_length > 0");
    }

    SweepGrid grid;
    grid.x_axis = x;
    grid.y_axis = y;
    grid.fixed = fixed;
    grid.engine = engine;
    grid.cells.resize(static_cast<std::size_t>(x.count) * y.count);

    std::atomic<int> next_row{0};
    const int n_workers = worker_count(x.count * y.count);
    auto work = [&]() {
        for (int iy = next_row.fetch_add(1); iy < y.count;
             iy = next_row.fetch_add(1)) {
            const double yv = y.value(iy);
            for (int ix = 0; ix < x.count; ++ix) {
                grid.cells[static_cast<std::size_t>(iy) * x.count + ix] =
                    evaluate_point(fixed, engine, xt, x.value(ix), yt, yv);
            }
        }
    };
    if (n_workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }
    return grid;
}

namespace {

// Field evaluation along a grid edge, used by the vertex refinement.
class EdgeEvaluator {
public:
    EdgeEvaluator(const SweepGrid& grid, SweepField field)
        : grid_(grid),
          field_(field),
          xt_(axis_target(grid.x_axis.name)),
          yt_(axis_target(grid.y_axis.name)) {}

    std::optional<double> operator()(double x, double y) const {
        const CellResult cell =
            evaluate_point(grid_.fixed, grid_.engine, xt_, x, yt_, y);
        return cell_field(cell, field_);
    }

private:
    const SweepGrid& grid_;
    SweepField field_;
    AxisTarget xt_;
    AxisTarget yt_;
};

struct EdgeKey {
    int ix;
    int iy;
    int orientation;  // 0 = toward +x, 1 = toward +y
    auto operator<=>(const EdgeKey&) const = default;
};

// In the axis's scale coordinate: log axes bisect in log space.
double axis_lerp(const AxisSpec& axis, double a, double b, double frac) {
    if (axis.scale == AxisScale::Log) {
        return a * std::pow(b / a, frac);
    }
    return a + (b - a) * frac;
}

}  // namespace

std::vector<ContourLine> contour(const SweepGrid& grid, SweepField field,
                                 double level) {
    if (grid.x_axis.count < 2 || grid.y_axis.count < 2) {
        throw ValidationError("contour extraction requires at least a 2x2 grid");
    }
    if (!std::isfinite(level)) throw ValidationError("level must be finite");

    const int nx = grid.x_axis.count;
    const int ny = grid.y_axis.count;
    auto value_at = [&](int ix, int iy) -> std::optional<double> {
        return cell_field(grid.cell(ix, iy), field);
    };

    const EdgeEvaluator engine_eval(grid, field);

    // Refined crossing position on a grid edge, shared between the two
    // cells that border it so chained polylines stay consistent.
    std::map<EdgeKey, std::array<double, 2>> vertices;
    auto refine_vertex = [&](const EdgeKey& key) -> std::array<double, 2> {
        if (const auto found = vertices.find(key); found != vertices.end()) {
            return found->second;
        }
        const int ix2 = key.orientation == 0 ? key.ix + 1 : key.ix;
        const int iy2 = key.orientation == 0 ? key.iy : key.iy + 1;
        const double fa = *value_at(key.ix, key.iy) - level;
        const double fb = *value_at(ix2, iy2) - level;
        const double xa = grid.x_axis.value(key.ix);
        const double ya = grid.y_axis.value(key.iy);
        const double xb = grid.x_axis.value(ix2);
        const double yb = grid.y_axis.value(iy2);

        // linear-interpolation seed, then bisection against the engine
        double lo = 0.0, hi = 1.0;
        double flo = fa;
        double frac = fa / (fa - fb);
        std::array<double, 2> point{axis_lerp(grid.x_axis, xa, xb, frac),
                                    axis_lerp(grid.y_axis, ya, yb, frac)};
        for (int iter = 0; iter < 60; ++iter) {
            frac = 0.5 * (lo + hi);
            point = {axis_lerp(grid.x_axis, xa, xb, frac),
                     axis_lerp(grid.y_axis, ya, yb, frac)};
            const std::optional<double> f = engine_eval(point[0], point[1]);
            if (!f.has_value()) break;  // keep the midpoint seed
            const double fm = *f - level;
            if (std::abs(fm) < 1e-4) break;
            if ((fm > 0.0) == (flo > 0.0)) {
                lo = frac;
                flo = fm;
            } else {
                hi = frac;
            }
        }
        vertices.emplace(key, point);
        return point;
    };

    // Marching squares: segments as pairs of edge keys.
    std::vector<std::pair<EdgeKey, EdgeKey>> segments;
    for (int iy = 0; iy + 1 < ny; ++iy) {
        for (int ix = 0; ix + 1 < nx; ++ix) {
            const std::optional<double> f00 = value_at(ix, iy);
            const std::optional<double> f10 = value_at(ix + 1, iy);
            const std::optional<double> f01 = value_at(ix, iy + 1);
            const std::optional<double> f11 = value_at(ix + 1, iy + 1);
            if (!f00 || !f10 || !f01 || !f11) continue;

            const int mask = (*f00 >= level ? 1 : 0) | (*f10 >= level ? 2 : 0) |
                             (*f11 >= level ? 4 : 0) | (*f01 >= level ? 8 : 0);
            if (mask == 0 || mask == 15) continue;

            const EdgeKey bottom{ix, iy, 0};
            const EdgeKey right{ix + 1, iy, 1};
            const EdgeKey top{ix, iy + 1, 0};
            const EdgeKey left{ix, iy, 1};

            auto emit = [&](EdgeKey a, EdgeKey b) { segments.emplace_back(a, b); };
            switch (mask) {
                case 1: case 14: emit(left, bottom); break;
                case 2: case 13: emit(bottom, right); break;
                case 3: case 12: emit(left, right); break;
                case 4: case 11: emit(right, top); break;
                case 6: case 9: emit(bottom, top); break;
                case 7: case 8: emit(top, left); break;
                case 5: case 10: {
                    // saddle: resolve connectivity with the center average
                    const double center = 0.25 * (*f00 + *f10 + *f01 + *f11);
                    const bool center_high = center >= level;
                    if ((mask == 5) == center_high) {
                        emit(left, top);
                        emit(bottom, right);
                    } else {
                        emit(left, bottom);
                        emit(right, top);
                    }
                    break;
                }
                default: break;
            }
        }
    }

    // Chain segments sharing grid edges into polylines.
    std::multimap<EdgeKey, std::size_t> by_edge;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        by_edge.emplace(segments[i].first, i);
        by_edge.emplace(segments[i].second, i);
    }
    std::vector<bool> used(segments.size(), false);
    std::vector<ContourLine> lines;

    auto next_unused = [&](const EdgeKey& edge) -> std::optional<std::size_t> {
        const auto [lo, hi] = by_edge.equal_range(edge);
        for (auto it = lo; it != hi; ++it) {
            if (!used[it->second]) return it->second;
        }
        return std::nullopt;
    };

    for (std::size_t start = 0; start < segments.size(); ++start) {
        if (used[start]) continue;
        used[start] = true;
        std::vector<EdgeKey> chain{segments[start].first, segments[start].second};
        // extend forward, then backward
        for (int direction = 0; direction < 2; ++direction) {
            while (true) {
                const EdgeKey tip = direction == 0 ? chain.back() : chain.front();
                const std::optional<std::size_t> seg = next_unused(tip);
                if (!seg.has_value()) break;
                used[*seg] = true;
                const EdgeKey other = segments[*seg].first == tip
                                          ? segments[*seg].second
                                          : segments[*seg].first;
                if (direction == 0) {
                    chain.push_back(other);
                } else {
                    chain.insert(chain.begin(), other);
                }
            }
        }
        ContourLine line;
        line.level = level;
        line.points.reserve(chain.size());
        for (const EdgeKey& edge : chain) line.points.push_back(refine_vertex(edge));
        lines.push_back(std::move(line));
    }
    return lines;
}

namespace {

std::optional<double> fidelity_at_kappa(const SystemParams& base,
                                        const Engine& engine, double kappa) {
    const CellResult cell = evaluate_point(base, engine, AxisTarget::Kappa,
                                           kappa, AxisTarget::DeltaP,
                                           base.delta_p);
    return cell_field(cell, SweepField::Fidelity);
}

}  // namespace

double threshold_kappa(const SystemParams& base, double target_f,
                       const Engine& engine, double kappa_min,
                       double kappa_max) {
    if (!is_normalized(base)) {
        throw ValidationError("threshold_kappa expects normalized params");
    }
    if (!(target_f > 0.0 && target_f < 1.0)) {
        throw ValidationError("target fidelity must lie in (0, 1)");
    }
    if (!(kappa_min > 0.0 && kappa_max > kappa_min)) {
        throw ValidationError("requires 0 < kappa_min < kappa_max");
    }

    auto satisfied = [&](double kappa) {
        const std::optional<double> f = fidelity_at_kappa(base, engine, kappa);
        return f.has_value() && *f >= target_f;
    };

    // 16-point pre-scan: verify the profile is monotone before bisecting.
    constexpr int kPreScan = 16;
    std::vector<std::pair<double, double>> samples;
    samples.reserve(kPreScan);
    bool monotone = true;
    double previous = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kPreScan; ++i) {
        const double kappa =
            kappa_min * std::pow(kappa_max / kappa_min,
                                 static_cast<double>(i) / (kPreScan - 1));
        const std::optional<double> f = fidelity_at_kappa(base, engine, kappa);
        const double fv = f.value_or(-1.0);  // sentinel: cannot satisfy target
        samples.emplace_back(kappa, fv);
        if (fv > previous + 1e-9) monotone = false;
        previous = fv;
    }

    double lo = 0.0, hi = 0.0;
    bool bracketed = false;
    if (monotone) {
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
            if (samples[i].second >= target_f &&
                samples[i + 1].second < target_f) {
                lo = samples[i].first;
                hi = samples[i + 1].first;
                bracketed = true;
                break;
            }
        }
    } else {
        // exhaustive scan for the last downward crossing
        constexpr int kDense = 2048;
        double prev_kappa = kappa_min;
        bool prev_ok = satisfied(kappa_min);
        for (int i = 1; i < kDense; ++i) {
            const double kappa =
                kappa_min * std::pow(kappa_max / kappa_min,
                                     static_cast<double>(i) / (kDense - 1));
            const bool ok = satisfied(kappa);
            if (prev_ok && !ok) {
                lo = prev_kappa;
                hi = kappa;
                bracketed = true;  // keep the last crossing
            }
            prev_kappa = kappa;
            prev_ok = ok;
        }
    }

    if (!bracketed) {
        std::string message =
            "threshold_kappa: no F = " + std::to_string(target_f) +
            " crossing in [" + std::to_string(kappa_min) + ", " +
            std::to_string(kappa_max) + "]";
        if (!samples.empty() && samples.front().second >= target_f &&
            samples.back().second >= target_f) {
            message += " (F >= target across the whole bracket: unbounded)";
        }
        throw BracketError(message, samples);
    }

    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        if (satisfied(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

OptimalDetuningResult optimal_detuning(const SystemParams& base, double min_p,
                                       const Engine& engine, double delta_max) {
    if (!is_normalized(base)) {
        throw ValidationError("optimal_detuning expects normalized params");
    }
    if (!(min_p > 0.0)) throw ValidationError("min_p must be > 0");
    if (!(delta_max > 0.0)) throw ValidationError("delta_max must be > 0");

    struct Point {
        double delta = 0.0;
        std::optional<double> fidelity;
        double probability = 0.0;
        bool valid = false;
    };
    auto eval = [&](double delta) {
        Point pt;
        pt.delta = delta;
        const CellResult cell =
            evaluate_point(base, engine, AxisTarget::Delta, delta,
                           AxisTarget::DeltaP, base.delta_p);
        if (cell.figures.has_value()) {
            pt.valid = true;
            pt.fidelity = cell.figures->fidelity;
            pt.probability = cell.figures->probability;
        }
        return pt;
    };
    auto feasible = [&](const Point& pt) {
        return pt.valid && pt.fidelity.has_value() && pt.probability >= min_p;
    };

    constexpr int kScan = 161;
    std::vector<Point> scan;
    scan.reserve(kScan);
    double max_p = 0.0;
    for (int i = 0; i < kScan; ++i) {
        const double delta = delta_max * static_cast<double>(i) / (kScan - 1);
        scan.push_back(eval(delta));
        if (scan.back().valid) max_p = std::max(max_p, scan.back().probability);
    }

    OptimalDetuningResult result;
    result.max_achievable_probability = max_p;

    int best = -1;
    for (int i = 0; i < kScan; ++i) {
        if (!feasible(scan[i])) continue;
        if (best < 0 || *scan[i].fidelity > *scan[best].fidelity + 1e-12) {
            best = i;
        }
    }
    if (best < 0) {
        result.feasible = false;
        return result;
    }

    // Feasibility boundary: P is monotone decreasing on every profile of
    // interest; bisect where it crosses min_p so the golden search never
    // leaves the feasible region.
    double feasible_hi = delta_max;
    for (int i = 0; i + 1 < kScan; ++i) {
        if (feasible(scan[i]) && scan[i + 1].valid && !feasible(scan[i + 1])) {
            double lo = scan[i].delta, hi = scan[i + 1].delta;
            for (int iter = 0; iter < 60 && hi - lo > 1e-6; ++iter) {
                const double mid = 0.5 * (lo + hi);
                if (feasible(eval(mid))) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            feasible_hi = lo;
            break;
        }
    }

    // Golden-section maximization of F on the bracket around the scan best,
    // clipped to the feasible interval.
    const double step = delta_max / (kScan - 1);
    double a = std::max(0.0, scan[best].delta - step);
    double b = std::min(feasible_hi, scan[best].delta + step);
    auto objective = [&](double delta) {
        const Point pt = eval(delta);
        if (!feasible(pt)) return -1.0;
        return *pt.fidelity;
    };
    const double golden = 0.6180339887498949;
    double x1 = b - golden * (b - a);
    double x2 = a + golden * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    for (int iter = 0; iter < 80 && b - a > 1e-6; ++iter) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + golden * (b - a);
            f2 = objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - golden * (b - a);
            f1 = objective(x1);
        }
    }

    Point candidate = eval(0.5 * (a + b));
    const Point boundary = eval(feasible_hi);
    if (feasible(boundary) &&
        (!feasible(candidate) || *boundary.fidelity > *candidate.fidelity)) {
        candidate = boundary;
    }
    if (!feasible(candidate)) candidate = scan[best];

    // Constant-fidelity profiles (e.g. gamma_p = 0): detuning only costs
    // probability, so report the smallest delta.
    const Point origin = eval(0.0);
    if (feasible(origin) &&
        *origin.fidelity >= *candidate.fidelity - 1e-12) {
        candidate = origin;
    }

    result.feasible = true;
    result.delta = candidate.delta;
    result.fidelity = *candidate.fidelity;
    result.probability = candidate.probability;
    return result;
}

std::string grid_to_csv(const SweepGrid& grid) {
    std::string csv = grid.x_axis.name + "," + grid.y_axis.name +
                      ",fidelity,probability,t_e_re,t_e_im,t_i_sq\n";
    for (int iy = 0; iy < grid.y_axis.count; ++iy) {
        for (int ix = 0; ix < grid.x_axis.count; ++ix) {
            const CellResult& cell = grid.cell(ix, iy);
            csv += format_double(grid.x_axis.value(ix));
            csv += ',';
            csv += format_double(grid.y_axis.value(iy));
            csv += ',';
            if (cell.figures.has_value() && cell.figures->fidelity.has_value()) {
                csv += format_double(*cell.figures->fidelity);
            }
            csv += ',';
            if (cell.figures.has_value()) {
                csv += format_double(cell.figures->probability);
            }
            csv += ',';
            if (cell.transmission.has_value()) {
                csv += format_double(cell.transmission->elastic_amplitude.real());
                csv += ',';
                csv += format_double(cell.transmission->elastic_amplitude.imag());
                csv += ',';
                csv += format_double(cell.transmission->inelastic_flux);
            } else {
                csv += ",,";
            }
            csv += '\n';
        }
    }
    return csv;
}

std::string contours_to_json(const std::vector<ContourLine>& lines,
                             const SweepGrid& grid, SweepField field) {
    nlohmann::json j;
    j["x_axis"] = grid.x_axis.name;
    j["y_axis"] = grid.y_axis.name;
    j["field"] = field == SweepField::Fidelity ? "fidelity" : "probability";
    nlohmann::json jlines = nlohmann::json::array();
    for (const ContourLine& line : lines) {
        nlohmann::json points = nlohmann::json::array();
        for (const auto& pt : line.points) {
            points.push_back({pt[0], pt[1]});
        }
        jlines.push_back({{"level", line.level}, {"points", points}});
    }
    j["lines"] = jlines;
    return j.dump();
}

}  // namespace cavityeo
