#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cavityeo/model.hpp"
#include "cavityeo/response.hpp"

namespace cavityeo {

enum class AxisScale { Linear, Log };

/// One grid axis. `name` selects the swept parameter: kappa, gamma,
/// gamma_p, delta, delta_p or pulse_length.
struct AxisSpec {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    int count = 0;
    AxisScale scale = AxisScale::Linear;

    double value(int index) const;
};

struct Engine {
    enum class Kind { LongPulse, FinitePulse };
    Kind kind = Kind::LongPulse;
    double pulse_length = 0.0;  ///< used by FinitePulse unless an axis sets it
};

struct CellResult {
    std::optional<EoFigures> figures;  ///< empty when the cell errored
    std::optional<TransmissionResult> transmission;  ///< long-pulse only
    std::optional<std::string> error;
};

/// Dense 2-D evaluation grid; cells are stored row-major with x fastest
/// (index = iy * x_axis.count + ix). Cell evaluation order never affects
/// the result: cells are independent and assembled by position.
struct SweepGrid {
    AxisSpec x_axis;
    AxisSpec y_axis;
    SystemParams fixed;  ///< normalized remainder of the parameter set
    Engine engine;
    std::vector<CellResult> cells;

    const CellResult& cell(int ix, int iy) const;
};

/// Evaluates figures of merit at every grid cell, in parallel over a worker
/// pool capped by the CAVITY_EO_THREADS environment variable. Per-cell
/// physics errors are recorded in the cell, never abort the sweep.
SweepGrid grid_sweep(const AxisSpec& x, const AxisSpec& y,
                     const SystemParams& fixed, const Engine& engine);

enum class SweepField { Fidelity, Probability };

struct ContourLine {
    double level = 0.0;
    std::vector<std::array<double, 2>> points;  ///< (x, y) in axis units
};

/// Marching-squares iso-line extraction with per-vertex bisection along the
/// grid edge against the actual engine until |field - level| < 1e-4.
/// A level outside the field range yields an empty list. Requires at least
/// a 2 x 2 grid.
std::vector<ContourLine> contour(const SweepGrid& grid, SweepField field,
                                 double level);

/// Largest kappa with F >= target_f, found by bisection to |dkappa| < 1e-4
/// after a 16-point monotonicity pre-scan (non-monotone profiles degrade to
/// an exhaustive scan). Throws BracketError, with the sampled (kappa, F)
/// pairs attached, when no crossing exists in [kappa_min, kappa_max].
double threshold_kappa(const SystemParams& base, double target_f,
                       const Engine& engine, double kappa_min = 1e-3,
                       double kappa_max = 20.0);

struct OptimalDetuningResult {
    bool feasible = false;
    double delta = 0.0;
    double fidelity = 0.0;
    double probability = 0.0;
    double max_achievable_probability = 0.0;
};

/// Maximizes fidelity over delta >= 0 subject to P >= min_p (coarse scan,
/// feasibility-boundary bisection, golden-section refinement). Infeasible
/// min_p produces a report with the maximum achievable probability instead
/// of an error. min_p must be positive.
OptimalDetuningResult optimal_detuning(const SystemParams& base, double min_p,
                                       const Engine& engine,
                                       double delta_max = 40.0);

/// CSV serialization, one row per cell:
/// x, y, fidelity, probability, t_e_re, t_e_im, t_i_sq
/// (undefined or unavailable fields are left empty).
std::string grid_to_csv(const SweepGrid& grid);

std::string contours_to_json(const std::vector<ContourLine>& lines,
                             const SweepGrid& grid, SweepField field);

}  // namespace cavityeo
