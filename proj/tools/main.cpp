// cavityeo: command-line driver for the qubit-cavity entanglement-operation
// simulator. Subcommands: eval, sweep, contour, pulse-scan, reproduce,
// oracle-check, sample, threshold-kappa, optimal-delta.
//
// Exit codes: 0 ok, 1 check failure, 2 usage, 3 physics-domain error, 4 I/O.

#include <CLI11.hpp>

#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavityeo/circuit.hpp"
#include "cavityeo/errors.hpp"
#include "cavityeo/manifest.hpp"
#include "cavityeo/model.hpp"
#include "cavityeo/oracle.hpp"
#include "cavityeo/pulsed.hpp"
#include "cavityeo/response.hpp"
#include "cavityeo/sweep.hpp"
#include "cavityeo/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cavityeo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPhysics = 3;
constexpr int kExitIo = 4;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path);
    json parsed;
    try {
        in >> parsed;
    } catch (const json::parse_error& e) {
        throw ValidationError("config file is not valid JSON: " +
                              std::string(e.what()));
    }
    if (!parsed.is_object()) {
        throw ValidationError("config must be a JSON object");
    }
    // A run manifest is accepted directly: its parameters block mirrors the
    // flags of the command that produced it.
    if (parsed.contains("parameters") && parsed["parameters"].is_object()) {
        return parsed["parameters"];
    }
    return parsed;
}

void fill_from_config(const json& cfg, const CLI::Option* opt, const char* key,
                      std::optional<double>& value) {
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key) && cfg[key].is_number()) {
        value = cfg[key].get<double>();
    }
}

void fill_from_config(const json& cfg, const CLI::Option* opt, const char* key,
                      double& value) {
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key) && cfg[key].is_number()) value = cfg[key].get<double>();
}

void fill_from_config(const json& cfg, const CLI::Option* opt, const char* key,
                      std::uint64_t& value) {
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key) && cfg[key].is_number_unsigned()) {
        value = cfg[key].get<std::uint64_t>();
    }
}

void fill_from_config(const json& cfg, const CLI::Option* opt, const char* key,
                      int& value) {
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key) && cfg[key].is_number_integer()) {
        value = cfg[key].get<int>();
    }
}

void fill_from_config(const json& cfg, const CLI::Option* opt, const char* key,
                      std::string& value) {
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key) && cfg[key].is_string()) {
        value = cfg[key].get<std::string>();
    }
}

Units parse_units(const std::string& units) {
    if (units == "units-of-g") return Units::UnitsOfG;
    if (units == "angular-frequency") return Units::AngularFrequency;
    if (units == "mhz-over-2pi" || units == "frequency-over-2pi") {
        return Units::FrequencyOver2Pi;
    }
    throw ValidationError(
        "unknown --units value '" + units +
        "' (expected units-of-g, angular-frequency or mhz-over-2pi)");
}

// Shared physical-parameter flag block. Values resolve in the order
// command line > --config file > default.
struct ParamFlags {
    std::optional<double> g, kappa, gamma, gamma_p, delta, delta_p;
    std::optional<double> pulse_length;
    std::string units = "units-of-g";
    std::string config_path;

    CLI::Option *o_g = nullptr, *o_kappa = nullptr, *o_gamma = nullptr,
                *o_gamma_p = nullptr, *o_delta = nullptr, *o_delta_p = nullptr,
                *o_pulse = nullptr, *o_units = nullptr;

    void attach(CLI::App* cmd, bool with_pulse_length) {
        o_g = cmd->add_option("--g", g, "coupling rate g (default 1)");
        o_kappa = cmd->add_option("--kappa", kappa, "cavity decay rate");
        o_gamma = cmd->add_option("--gamma", gamma, "spontaneous emission rate");
        o_gamma_p = cmd->add_option("--gamma-p", gamma_p, "pure dephasing rate");
        o_delta = cmd->add_option("--delta", delta, "qubit-cavity detuning");
        o_delta_p =
            cmd->add_option("--delta-p", delta_p, "photon-cavity detuning");
        if (with_pulse_length) {
            o_pulse = cmd->add_option(
                "--pulse-length", pulse_length,
                "input pulse length (switches to the finite-pulse engine)");
        }
        o_units = cmd->add_option(
            "--units", units,
            "units of the raw parameters: units-of-g (default), "
            "angular-frequency, mhz-over-2pi");
        cmd->add_option("--config", config_path,
                        "JSON file whose keys mirror these flags (a run "
                        "manifest is accepted); flags override it");
    }

    json apply_config() {
        const json cfg = load_config(config_path);
        fill_from_config(cfg, o_g, "g", g);
        fill_from_config(cfg, o_kappa, "kappa", kappa);
        fill_from_config(cfg, o_gamma, "gamma", gamma);
        fill_from_config(cfg, o_gamma_p, "gamma-p", gamma_p);
        fill_from_config(cfg, o_delta, "delta", delta);
        fill_from_config(cfg, o_delta_p, "delta-p", delta_p);
        fill_from_config(cfg, o_pulse, "pulse-length", pulse_length);
        fill_from_config(cfg, o_units, "units", units);
        return cfg;
    }

    SystemParams raw(bool require_kappa = true, bool require_delta = true) const {
        auto need = [](const std::optional<double>& v, const char* flag) {
            if (!v.has_value()) {
                throw ValidationError(std::string("missing required flag ") +
                                      flag);
            }
            return *v;
        };
        SystemParams p;
        p.g = g.value_or(1.0);
        p.kappa = require_kappa ? need(kappa, "--kappa") : kappa.value_or(1.0);
        p.gamma = need(gamma, "--gamma");
        p.gamma_p = need(gamma_p, "--gamma-p");
        p.delta = require_delta ? need(delta, "--delta") : delta.value_or(0.0);
        p.delta_p = delta_p.value_or(0.0);
        p.units = parse_units(units);
        return p;
    }

    json manifest_parameters() const {
        json j;
        j["g"] = g.value_or(1.0);
        if (kappa) j["kappa"] = *kappa;
        if (gamma) j["gamma"] = *gamma;
        if (gamma_p) j["gamma-p"] = *gamma_p;
        if (delta) j["delta"] = *delta;
        j["delta-p"] = delta_p.value_or(0.0);
        if (pulse_length) j["pulse-length"] = *pulse_length;
        j["units"] = units;
        return j;
    }
};

void emit_line(const json& record) { std::cout << record.dump() << "\n"; }

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

void write_manifest(const fs::path& path, const std::string& command,
                    const json& parameters, const std::string& engine,
                    std::optional<std::uint64_t> seed,
                    const std::vector<fs::path>& outputs) {
    RunManifest manifest;
    manifest.version = kVersion;
    manifest.command = command;
    manifest.parameters_json = parameters.dump();
    manifest.engine = engine;
    manifest.seed = seed;
    manifest.created_utc = utc_timestamp_now();
    for (const fs::path& output : outputs) {
        manifest.outputs.push_back(
            {output.string(), sha256_hex_of_file(output)});
    }
    write_file(path, to_json(manifest));
}

// --- eval -------------------------------------------------------------------

int cmd_eval(ParamFlags& flags) {
    flags.apply_config();
    const SystemParams p = normalize(flags.raw());

    json record;
    if (flags.pulse_length.has_value()) {
        const double l = *flags.pulse_length;
        const NormBundle norms = finite_pulse_norms(p, l);
        const EoFigures fig =
            eo_figures(norms.elastic_difference, norms.inelastic_total);
        record["engine"] = "finite-pulse";
        record["pulse_length"] = l;
        record["n_elastic_diff"] = norms.elastic_difference;
        record["n_inelastic_sum"] = norms.inelastic_total;
        record["fidelity"] =
            fig.fidelity.has_value() ? json(*fig.fidelity) : json(nullptr);
        record["probability"] = fig.probability;
    } else {
        const TransmissionResult t = transmission(p, QubitState::One);
        const EoFigures fig = eo_figures(t);
        record["engine"] = "long-pulse";
        record["t_e"] = {t.elastic_amplitude.real(), t.elastic_amplitude.imag()};
        record["t_i_sq"] = t.inelastic_flux;
        record["fidelity"] =
            fig.fidelity.has_value() ? json(*fig.fidelity) : json(nullptr);
        record["probability"] = fig.probability;
    }
    emit_line(record);
    return kExitOk;
}

// --- sample -----------------------------------------------------------------

int cmd_sample(ParamFlags& flags, std::uint64_t trials, std::uint64_t seed,
               std::optional<double> force_p, std::optional<double> force_f) {
    EoFigures fig;
    if (force_p.has_value()) {
        fig.probability = *force_p;
        fig.fidelity = force_f.value_or(1.0);
    } else {
        const SystemParams p = normalize(flags.raw());
        if (flags.pulse_length.has_value()) {
            fig = finite_pulse_figures(p, *flags.pulse_length);
        } else {
            fig = eo_figures(transmission(p, QubitState::One));
        }
        if (force_f.has_value()) fig.fidelity = *force_f;
    }
    const AttemptStats stats = sample_eo_runs(fig, trials, seed);
    std::cout << to_json(stats) << "\n";
    return kExitOk;
}

// --- sweep / contour / pulse-scan --------------------------------------------

struct AxisFlags {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    int count = 0;
    std::string scale = "linear";

    CLI::Option *o_name = nullptr, *o_min = nullptr, *o_max = nullptr,
                *o_count = nullptr, *o_scale = nullptr;

    void attach(CLI::App* cmd, const std::string& prefix) {
        o_name = cmd->add_option("--" + prefix + "-axis", name,
                                 "axis parameter (kappa, gamma, gamma_p, "
                                 "delta, delta_p, pulse_length)");
        o_min = cmd->add_option("--" + prefix + "-min", min, "axis minimum");
        o_max = cmd->add_option("--" + prefix + "-max", max, "axis maximum");
        o_count = cmd->add_option("--" + prefix + "-count", count,
                                  "number of grid points");
        o_scale = cmd->add_option("--" + prefix + "-scale", scale,
                                  "axis scale: linear (default) or log");
    }

    void apply_config(const json& cfg, const std::string& prefix) {
        fill_from_config(cfg, o_name, (prefix + "-axis").c_str(), name);
        fill_from_config(cfg, o_min, (prefix + "-min").c_str(), min);
        fill_from_config(cfg, o_max, (prefix + "-max").c_str(), max);
        fill_from_config(cfg, o_count, (prefix + "-count").c_str(), count);
        fill_from_config(cfg, o_scale, (prefix + "-scale").c_str(), scale);
    }

    AxisSpec spec() const {
        AxisSpec a;
        a.name = name;
        a.min = min;
        a.max = max;
        a.count = count;
        if (scale == "linear") {
            a.scale = AxisScale::Linear;
        } else if (scale == "log") {
            a.scale = AxisScale::Log;
        } else {
            throw ValidationError("axis scale must be linear or log, got " +
                                  scale);
        }
        return a;
    }

    json manifest_parameters(const std::string& prefix) const {
        json j;
        j[prefix + "-axis"] = name;
        j[prefix + "-min"] = min;
        j[prefix + "-max"] = max;
        j[prefix + "-count"] = count;
        j[prefix + "-scale"] = scale;
        return j;
    }
};

Engine make_engine(const std::string& engine_name, ParamFlags& flags) {
    Engine engine;
    if (engine_name == "long-pulse") {
        engine.kind = Engine::Kind::LongPulse;
    } else if (engine_name == "finite-pulse") {
        engine.kind = Engine::Kind::FinitePulse;
        engine.pulse_length = flags.pulse_length.value_or(0.0);
    } else {
        throw ValidationError("engine must be long-pulse or finite-pulse, got " +
                              engine_name);
    }
    return engine;
}

int grid_errors(const SweepGrid& grid) {
    int n = 0;
    for (const CellResult& cell : grid.cells) n += cell.error.has_value() ? 1 : 0;
    return n;
}

int cmd_sweep(ParamFlags& flags, AxisFlags& x, AxisFlags& y,
              std::string& engine_name, std::string& out,
              CLI::Option* o_engine, CLI::Option* o_out) {
    const json cfg = flags.apply_config();
    x.apply_config(cfg, "x");
    y.apply_config(cfg, "y");
    fill_from_config(cfg, o_engine, "engine", engine_name);
    fill_from_config(cfg, o_out, "out", out);
    if (out.empty()) throw ValidationError("missing required flag --out");

    const SystemParams fixed = normalize(flags.raw());
    const Engine engine = make_engine(engine_name, flags);
    const SweepGrid grid = grid_sweep(x.spec(), y.spec(), fixed, engine);

    const fs::path out_path(out);
    write_file(out_path, grid_to_csv(grid));

    json params = flags.manifest_parameters();
    params.update(x.manifest_parameters("x"));
    params.update(y.manifest_parameters("y"));
    params["engine"] = engine_name;
    params["out"] = out;
    const fs::path manifest_path = out_path.string() + ".manifest.json";
    write_manifest(manifest_path, "sweep", params, engine_name, std::nullopt,
                   {out_path});

    emit_line(json{{"out", out_path.string()},
                   {"manifest", manifest_path.string()},
                   {"cells", grid.cells.size()},
                   {"errors", grid_errors(grid)}});
    return kExitOk;
}

int cmd_contour(ParamFlags& flags, AxisFlags& x, AxisFlags& y,
                std::string& engine_name, std::string& field_name,
                std::vector<double>& levels, std::string& out,
                CLI::Option* o_engine, CLI::Option* o_field, CLI::Option* o_out) {
    const json cfg = flags.apply_config();
    x.apply_config(cfg, "x");
    y.apply_config(cfg, "y");
    fill_from_config(cfg, o_engine, "engine", engine_name);
    fill_from_config(cfg, o_field, "field", field_name);
    fill_from_config(cfg, o_out, "out", out);
    if (out.empty()) throw ValidationError("missing required flag --out");
    if (levels.empty() && cfg.contains("levels") && cfg["levels"].is_array()) {
        levels = cfg["levels"].get<std::vector<double>>();
    }
    if (levels.empty()) throw ValidationError("missing required flag --level");

    SweepField field;
    if (field_name == "fidelity") {
        field = SweepField::Fidelity;
    } else if (field_name == "probability") {
        field = SweepField::Probability;
    } else {
        throw ValidationError("field must be fidelity or probability, got " +
                              field_name);
    }

    const SystemParams fixed = normalize(flags.raw());
    const Engine engine = make_engine(engine_name, flags);
    const SweepGrid grid = grid_sweep(x.spec(), y.spec(), fixed, engine);

    std::vector<ContourLine> lines;
    for (double level : levels) {
        const std::vector<ContourLine> extracted = contour(grid, field, level);
        lines.insert(lines.end(), extracted.begin(), extracted.end());
    }

    const fs::path out_path(out);
    write_file(out_path, contours_to_json(lines, grid, field) + "\n");

    json params = flags.manifest_parameters();
    params.update(x.manifest_parameters("x"));
    params.update(y.manifest_parameters("y"));
    params["engine"] = engine_name;
    params["field"] = field_name;
    params["levels"] = levels;
    params["out"] = out;
    const fs::path manifest_path = out_path.string() + ".manifest.json";
    write_manifest(manifest_path, "contour", params, engine_name, std::nullopt,
                   {out_path});

    emit_line(json{{"out", out_path.string()},
                   {"manifest", manifest_path.string()},
                   {"lines", lines.size()}});
    return kExitOk;
}

int cmd_pulse_scan(ParamFlags& flags, double& l_min, double& l_max,
                   int& l_count, std::string& out, CLI::Option* o_lmin,
                   CLI::Option* o_lmax, CLI::Option* o_lcount,
                   CLI::Option* o_out) {
    const json cfg = flags.apply_config();
    fill_from_config(cfg, o_lmin, "l-min", l_min);
    fill_from_config(cfg, o_lmax, "l-max", l_max);
    fill_from_config(cfg, o_lcount, "l-count", l_count);
    fill_from_config(cfg, o_out, "out", out);
    if (out.empty()) throw ValidationError("missing required flag --out");

    const SystemParams fixed = normalize(flags.raw());

    AxisSpec x;
    x.name = "pulse_length";
    x.min = l_min;
    x.max = l_max;
    x.count = l_count;
    x.scale = AxisScale::Log;
    AxisSpec y;
    y.name = "kappa";
    y.min = fixed.kappa;
    y.max = fixed.kappa;
    y.count = 1;

    Engine engine;
    engine.kind = Engine::Kind::FinitePulse;
    const SweepGrid grid = grid_sweep(x, y, fixed, engine);

    const fs::path out_path(out);
    write_file(out_path, grid_to_csv(grid));

    json params = flags.manifest_parameters();
    params["l-min"] = l_min;
    params["l-max"] = l_max;
    params["l-count"] = l_count;
    params["out"] = out;
    const fs::path manifest_path = out_path.string() + ".manifest.json";
    write_manifest(manifest_path, "pulse-scan", params, "finite-pulse",
                   std::nullopt, {out_path});

    emit_line(json{{"out", out_path.string()},
                   {"manifest", manifest_path.string()},
                   {"cells", grid.cells.size()},
                   {"errors", grid_errors(grid)}});
    return kExitOk;
}

// --- reproduce ---------------------------------------------------------------

AxisSpec make_axis(const char* name, double min, double max, int count,
                   AxisScale scale) {
    AxisSpec a;
    a.name = name;
    a.min = min;
    a.max = max;
    a.count = count;
    a.scale = scale;
    return a;
}

int cmd_reproduce(const std::string& figure, const std::string& out_dir) {
    fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir.string());

    std::vector<fs::path> outputs;
    json params{{"figure", figure}, {"out-dir", out_dir}};
    std::string engine_name = "long-pulse";

    if (figure == "fig3") {
        SystemParams fixed;
        fixed.gamma = 2.0;
        fixed.gamma_p = 2.0;
        const SweepGrid grid =
            grid_sweep(make_axis("kappa", 0.1, 10.0, 200, AxisScale::Log),
                       make_axis("delta", 0.0, 15.0, 200, AxisScale::Linear),
                       fixed, Engine{});
        const fs::path grid_path = dir / "fig3_grid.csv";
        write_file(grid_path, grid_to_csv(grid));
        outputs.push_back(grid_path);

        std::vector<ContourLine> lines;
        for (double level : {0.9, 0.95}) {
            const auto extracted = contour(grid, SweepField::Fidelity, level);
            lines.insert(lines.end(), extracted.begin(), extracted.end());
        }
        const fs::path contour_path = dir / "fig3_contours.json";
        write_file(contour_path,
                   contours_to_json(lines, grid, SweepField::Fidelity) + "\n");
        outputs.push_back(contour_path);
    } else if (figure == "figA2") {
        engine_name = "finite-pulse";
        const AxisSpec l_axis =
            make_axis("pulse_length", 1e-3, 1e4, 57, AxisScale::Log);
        const AxisSpec kappa_axis =
            make_axis("kappa", 0.5, 4.0, 4, AxisScale::Log);
        Engine engine;
        engine.kind = Engine::Kind::FinitePulse;

        // (a) success probability, dissipation-free resonant set
        SystemParams clean;
        const SweepGrid grid_a = grid_sweep(l_axis, kappa_axis, clean, engine);
        const fs::path a_path = dir / "figA2a_grid.csv";
        write_file(a_path, grid_to_csv(grid_a));
        outputs.push_back(a_path);

        // (b) fidelity, dissipative set
        SystemParams noisy;
        noisy.gamma = 2.0;
        noisy.gamma_p = 2.0;
        const SweepGrid grid_b = grid_sweep(l_axis, kappa_axis, noisy, engine);
        const fs::path b_path = dir / "figA2b_grid.csv";
        write_file(b_path, grid_to_csv(grid_b));
        outputs.push_back(b_path);
    } else if (figure == "figA3") {
        SystemParams fixed;
        fixed.gamma_p = 2.0;
        const SweepGrid grid =
            grid_sweep(make_axis("kappa", 0.02, 10.0, 200, AxisScale::Log),
                       make_axis("gamma", 0.0, 4.0, 200, AxisScale::Linear),
                       fixed, Engine{});
        const fs::path grid_path = dir / "figA3_grid.csv";
        write_file(grid_path, grid_to_csv(grid));
        outputs.push_back(grid_path);

        std::vector<ContourLine> lines;
        for (double level : {0.9, 0.95}) {
            const auto extracted = contour(grid, SweepField::Fidelity, level);
            lines.insert(lines.end(), extracted.begin(), extracted.end());
        }
        const fs::path contour_path = dir / "figA3_contours.json";
        write_file(contour_path,
                   contours_to_json(lines, grid, SweepField::Fidelity) + "\n");
        outputs.push_back(contour_path);
    } else {
        throw ValidationError("figure must be fig3, figA2 or figA3, got " +
                              figure);
    }

    const fs::path manifest_path = dir / (figure + "_manifest.json");
    write_manifest(manifest_path, "reproduce", params, engine_name,
                   std::nullopt, outputs);

    json summary{{"figure", figure}, {"manifest", manifest_path.string()}};
    json out_list = json::array();
    for (const fs::path& output : outputs) out_list.push_back(output.string());
    summary["outputs"] = out_list;
    emit_line(summary);
    return kExitOk;
}

// --- oracle-check ------------------------------------------------------------

int cmd_oracle_check(std::uint64_t seed, int draws,
                     std::optional<double> tol_override) {
    const oracle::OracleReport report =
        oracle::run_oracle_checks(seed, draws, tol_override);
    std::cout << oracle::to_json(report) << "\n";
    return report.all_pass ? kExitOk : kExitCheckFailed;
}

// --- threshold-kappa / optimal-delta ------------------------------------------

int cmd_threshold_kappa(ParamFlags& flags, double target_f, double kappa_min,
                        double kappa_max, const std::string& engine_name) {
    const SystemParams base = normalize(flags.raw(/*require_kappa=*/false));
    Engine engine = make_engine(engine_name, flags);
    const double k_star =
        threshold_kappa(base, target_f, engine, kappa_min, kappa_max);
    emit_line(json{{"kappa_star", k_star},
                   {"target_fidelity", target_f},
                   {"engine", engine_name}});
    return kExitOk;
}

int cmd_optimal_delta(ParamFlags& flags, double min_p, double delta_max,
                      const std::string& engine_name) {
    const SystemParams base =
        normalize(flags.raw(/*require_kappa=*/true, /*require_delta=*/false));
    Engine engine = make_engine(engine_name, flags);
    const OptimalDetuningResult r =
        optimal_detuning(base, min_p, engine, delta_max);
    json record{{"feasible", r.feasible},
                {"min_p", min_p},
                {"max_achievable_p", r.max_achievable_probability}};
    if (r.feasible) {
        record["delta_star"] = r.delta;
        record["fidelity"] = r.fidelity;
        record["probability"] = r.probability;
    }
    emit_line(record);
    return r.feasible ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavityeo: heralded entanglement figures of merit for a "
                 "dissipative qubit-cavity node"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // eval
    CLI::App* eval = app.add_subcommand(
        "eval", "figures of merit at one parameter point (JSON to stdout)");
    ParamFlags eval_flags;
    eval_flags.attach(eval, /*with_pulse_length=*/true);

    // sample
    CLI::App* sample = app.add_subcommand(
        "sample", "repeat-until-success Monte Carlo attempt statistics");
    ParamFlags sample_flags;
    sample_flags.attach(sample, /*with_pulse_length=*/true);
    std::uint64_t trials = 100000;
    std::uint64_t sample_seed = 0;
    std::optional<double> force_p, force_f;
    sample->add_option("--trials", trials, "number of trials (default 1e5)");
    sample->add_option("--seed", sample_seed, "RNG seed (default 0)");
    sample->add_option("--force-p", force_p,
                       "bypass the physics and use this success probability");
    sample->add_option("--force-f", force_f,
                       "bypass the physics and use this fidelity");

    // sweep
    CLI::App* sweep = app.add_subcommand(
        "sweep", "evaluate a 2-D parameter grid and write CSV + manifest");
    ParamFlags sweep_flags;
    sweep_flags.attach(sweep, /*with_pulse_length=*/true);
    AxisFlags sweep_x, sweep_y;
    sweep_x.attach(sweep, "x");
    sweep_y.attach(sweep, "y");
    std::string sweep_engine = "long-pulse";
    std::string sweep_out;
    CLI::Option* sweep_o_engine = sweep->add_option(
        "--engine", sweep_engine, "long-pulse (default) or finite-pulse");
    CLI::Option* sweep_o_out =
        sweep->add_option("--out", sweep_out, "output CSV path");

    // contour
    CLI::App* contour_cmd = app.add_subcommand(
        "contour", "extract iso-lines from a parameter grid (JSON output)");
    ParamFlags contour_flags;
    contour_flags.attach(contour_cmd, /*with_pulse_length=*/true);
    AxisFlags contour_x, contour_y;
    contour_x.attach(contour_cmd, "x");
    contour_y.attach(contour_cmd, "y");
    std::string contour_engine = "long-pulse";
    std::string contour_field = "fidelity";
    std::vector<double> contour_levels;
    std::string contour_out;
    CLI::Option* contour_o_engine = contour_cmd->add_option(
        "--engine", contour_engine, "long-pulse (default) or finite-pulse");
    CLI::Option* contour_o_field = contour_cmd->add_option(
        "--field", contour_field, "fidelity (default) or probability");
    contour_cmd->add_option("--level", contour_levels,
                            "iso-level (repeatable)");
    CLI::Option* contour_o_out =
        contour_cmd->add_option("--out", contour_out, "output JSON path");

    // pulse-scan
    CLI::App* pulse_scan = app.add_subcommand(
        "pulse-scan", "figures of merit versus the input pulse length");
    ParamFlags scan_flags;
    scan_flags.attach(pulse_scan, /*with_pulse_length=*/false);
    double l_min = 1e-3, l_max = 1e4;
    int l_count = 57;
    std::string scan_out;
    CLI::Option* scan_o_lmin =
        pulse_scan->add_option("--l-min", l_min, "smallest pulse length");
    CLI::Option* scan_o_lmax =
        pulse_scan->add_option("--l-max", l_max, "largest pulse length");
    CLI::Option* scan_o_lcount =
        pulse_scan->add_option("--l-count", l_count, "number of points (log)");
    CLI::Option* scan_o_out =
        pulse_scan->add_option("--out", scan_out, "output CSV path");

    // reproduce
    CLI::App* reproduce = app.add_subcommand(
        "reproduce", "regenerate a bundled figure dataset into a directory");
    std::string figure;
    std::string out_dir;
    reproduce->add_option("--figure", figure, "fig3, figA2 or figA3")
        ->required();
    reproduce->add_option("--out-dir", out_dir, "output directory")->required();

    // oracle-check
    CLI::App* oracle_check = app.add_subcommand(
        "oracle-check",
        "cross-validate residue/closed forms against ODE and quadrature");
    std::uint64_t oracle_seed = 12345;
    int oracle_draws = 50;
    std::optional<double> oracle_tol;
    oracle_check->add_option("--seed", oracle_seed, "draw seed (default 12345)");
    oracle_check->add_option("--draws", oracle_draws,
                             "number of parameter draws (default 50)");
    oracle_check->add_option("--tol", oracle_tol,
                             "override every per-check tolerance");

    // threshold-kappa
    CLI::App* threshold = app.add_subcommand(
        "threshold-kappa", "largest cavity decay rate reaching a target fidelity");
    ParamFlags threshold_flags;
    threshold_flags.attach(threshold, /*with_pulse_length=*/true);
    double target_f = 0.9;
    double kappa_min = 1e-3, kappa_max = 20.0;
    std::string threshold_engine = "long-pulse";
    threshold->add_option("--target-f", target_f, "target fidelity (default 0.9)");
    threshold->add_option("--kappa-min", kappa_min, "search bracket lower edge");
    threshold->add_option("--kappa-max", kappa_max, "search bracket upper edge");
    threshold->add_option("--engine", threshold_engine,
                          "long-pulse (default) or finite-pulse");

    // optimal-delta
    CLI::App* optimal = app.add_subcommand(
        "optimal-delta",
        "best detuning: maximize fidelity subject to a probability floor");
    ParamFlags optimal_flags;
    optimal_flags.attach(optimal, /*with_pulse_length=*/true);
    double min_p = 0.001;
    double delta_max = 40.0;
    std::string optimal_engine = "long-pulse";
    optimal->add_option("--min-p", min_p, "success-probability floor")
        ->required();
    optimal->add_option("--delta-max", delta_max,
                        "largest detuning considered (default 40)");
    optimal->add_option("--engine", optimal_engine,
                        "long-pulse (default) or finite-pulse");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (eval->parsed()) return cmd_eval(eval_flags);
        if (sample->parsed()) {
            sample_flags.apply_config();
            return cmd_sample(sample_flags, trials, sample_seed, force_p,
                              force_f);
        }
        if (sweep->parsed()) {
            return cmd_sweep(sweep_flags, sweep_x, sweep_y, sweep_engine,
                             sweep_out, sweep_o_engine, sweep_o_out);
        }
        if (contour_cmd->parsed()) {
            return cmd_contour(contour_flags, contour_x, contour_y,
                               contour_engine, contour_field, contour_levels,
                               contour_out, contour_o_engine, contour_o_field,
                               contour_o_out);
        }
        if (pulse_scan->parsed()) {
            return cmd_pulse_scan(scan_flags, l_min, l_max, l_count, scan_out,
                                  scan_o_lmin, scan_o_lmax, scan_o_lcount,
                                  scan_o_out);
        }
        if (reproduce->parsed()) return cmd_reproduce(figure, out_dir);
        if (oracle_check->parsed()) {
            return cmd_oracle_check(oracle_seed, oracle_draws, oracle_tol);
        }
        if (threshold->parsed()) {
            threshold_flags.apply_config();
            return cmd_threshold_kappa(threshold_flags, target_f, kappa_min,
                                       kappa_max, threshold_engine);
        }
        if (optimal->parsed()) {
            optimal_flags.apply_config();
            return cmd_optimal_delta(optimal_flags, min_p, delta_max,
                                     optimal_engine);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const PhysicsError& e) {
        emit_line(json{{"error", {{"type", e.kind()}, {"message", e.what()}}}});
        return kExitPhysics;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
