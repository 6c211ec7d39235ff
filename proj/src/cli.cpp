// SPDX-License-Identifier: Apache-2.0

#include "conam/cli.hpp"

#include "conam/analysis.hpp"
#include "conam/emission.hpp"
#include "conam/steering.hpp"
#include "conam/text_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace conam::cli {

namespace {

std::string to_string(DelayMode m) { return m == DelayMode::Continuous ? "continuous" : "quantized"; }
std::string to_string(Normalization n) { return n == Normalization::Global ? "global" : "per-row"; }

DelayMode parse_mode(const std::string& s) {
    if (s == "continuous") return DelayMode::Continuous;
    if (s == "quantized") return DelayMode::Quantized;
    throw std::invalid_argument("mode must be 'continuous' or 'quantized', got '" + s + "'");
}

Normalization parse_norm(const std::string& s) {
    if (s == "global") return Normalization::Global;
    if (s == "per-row") return Normalization::PerRow;
    throw std::invalid_argument("norm must be 'global' or 'per-row', got '" + s + "'");
}

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

nlohmann::json provenance(const ExperimentConfig& cfg) {
    return {{"config_hash", config_hash(cfg)},
            {"versions", {{"conam", kVersion}, {"dacmat_format", kDacmatVersion}}}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    text::write_file_atomic(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    text::write_file_atomic(path, body);
}

nlohmann::json axis_json(const std::vector<double>& axis, const char* unit) {
    return {{"min", axis.front()}, {"max", axis.back()}, {"count", axis.size()},
            {"step", axis.size() > 1 ? axis[1] - axis[0] : 0.0}, {"unit", unit}};
}

nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// Writes <stem>.csv, <stem>.pgm and the <stem>.json sidecar.
void write_grid_bundle(const std::filesystem::path& dir, const std::string& stem, const FieldGrid& grid,
                       const ExperimentConfig& cfg, nlohmann::json meta) {
    write_text(dir / (stem + ".csv"), [&](std::ostream& out) { write_field_grid_csv(out, grid); });
    text::write_file_atomic(
        dir / (stem + ".pgm"), [&](std::ostream& out) { write_field_grid_pgm(out, grid, cfg.db_floor); }, true);
    meta["files"] = {stem + ".csv", stem + ".pgm"};
    meta["axes"] = {{"rows", axis_json(grid.freqs_hz, "Hz")}, {"cols", axis_json(grid.angles_deg, "deg")}};
    meta["pgm"] = {{"db_floor", cfg.db_floor}, {"top_row", "highest frequency"}};
    meta["provenance"] = provenance(cfg);
    write_json(dir / (stem + ".json"), meta);
}

} // namespace

void ExperimentConfig::validate() const {
    require(rows >= 1 && cols >= 1, "rows and cols must be at least 1");
    require(rows * cols >= 2, "projected pitch is undefined for a single element (rows * cols must be >= 2)");
    require(pitch_mm > 0.0 && std::isfinite(pitch_mm), "pitch-mm must be positive");
    require(stagger_mm >= 0.0 && std::isfinite(stagger_mm), "stagger-mm must be non-negative");
    require(row_dz_mm >= 0.0 && std::isfinite(row_dz_mm), "row-dz-mm must be non-negative");
    require(theta_deg >= -90.0 && theta_deg <= 90.0, "theta must lie in [-90, 90] deg");
    require(!phis_deg.empty(), "at least one steering azimuth is required");
    for (double p : phis_deg) require(p >= -180.0 && p <= 180.0, "phi must lie in [-180, 180] deg");
    require(c > 0.0 && std::isfinite(c), "c must be positive");
    require(fs > 0.0 && std::isfinite(fs) && fs == std::floor(fs), "fs must be a positive integral number of Hz");
    chirp().validate();
    require(fs > 2.0 * std::max(f_start, f_end), "fs must exceed twice the highest chirp frequency");
    require(f_min > 0.0 && f_max >= f_min, "frequency range must satisfy 0 < f-min <= f-max");
    require(f_step > 0.0, "f-step must be positive");
    require(angle_max >= angle_min && angle_min >= -180.0 && angle_max <= 180.0, "angle range must lie in [-180, 180]");
    require(angle_step > 0.0, "angle-step must be positive");
    require(threshold_db < 0.0, "threshold-db must be negative");
    require(db_floor < 0.0, "db-floor must be negative");
    require(distance >= 1.0, "distance must be at least 1 m (spreading reference distance)");
    require(!out.empty(), "output directory must be set");

    // Single-row layouts with no stagger still need distinct projections.
    const auto g = build_staggered_array(layout());
    (void)projected_pitch(g);
}

StaggeredLayout ExperimentConfig::layout() const {
    return {rows, cols, pitch_mm * 1e-3, stagger_mm * 1e-3, row_dz_mm * 1e-3};
}

ChirpSpec ExperimentConfig::chirp() const {
    return {f_start, f_end, duration_ms * 1e-3, amplitude, Window::tukey(tukey_alpha)};
}

MapOptions ExperimentConfig::map_options() const {
    MapOptions o;
    o.f_min = f_min;
    o.f_max = f_max;
    o.f_step = f_step;
    o.angle_min = angle_min;
    o.angle_max = angle_max;
    o.angle_step = angle_step;
    o.c = c;
    o.mode = mode;
    o.sample_rate = fs;
    o.norm = norm;
    return o;
}

nlohmann::json ExperimentConfig::to_json() const {
    return {{"rows", rows},
            {"cols", cols},
            {"pitch_mm", pitch_mm},
            {"stagger_mm", stagger_mm},
            {"row_dz_mm", row_dz_mm},
            {"theta_deg", theta_deg},
            {"phis_deg", phis_deg},
            {"c", c},
            {"fs", fs},
            {"f_start", f_start},
            {"f_end", f_end},
            {"duration_ms", duration_ms},
            {"amplitude", amplitude},
            {"tukey_alpha", tukey_alpha},
            {"f_min", f_min},
            {"f_max", f_max},
            {"f_step", f_step},
            {"angle_min", angle_min},
            {"angle_max", angle_max},
            {"angle_step", angle_step},
            {"mode", to_string(mode)},
            {"norm", to_string(norm)},
            {"threshold_db", threshold_db},
            {"db_floor", db_floor},
            {"distance", distance},
            {"write_waveforms", write_waveforms},
            {"out", out.string()}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
    ExperimentConfig c;
    const std::map<std::string, std::function<void(const nlohmann::json&)>> setters = {
        {"rows", [&](const auto& v) { c.rows = v.template get<std::size_t>(); }},
        {"cols", [&](const auto& v) { c.cols = v.template get<std::size_t>(); }},
        {"pitch_mm", [&](const auto& v) { c.pitch_mm = v.template get<double>(); }},
        {"stagger_mm", [&](const auto& v) { c.stagger_mm = v.template get<double>(); }},
        {"row_dz_mm", [&](const auto& v) { c.row_dz_mm = v.template get<double>(); }},
        {"theta_deg", [&](const auto& v) { c.theta_deg = v.template get<double>(); }},
        {"phis_deg", [&](const auto& v) { c.phis_deg = v.template get<std::vector<double>>(); }},
        {"c", [&](const auto& v) { c.c = v.template get<double>(); }},
        {"fs", [&](const auto& v) { c.fs = v.template get<double>(); }},
        {"f_start", [&](const auto& v) { c.f_start = v.template get<double>(); }},
        {"f_end", [&](const auto& v) { c.f_end = v.template get<double>(); }},
        {"duration_ms", [&](const auto& v) { c.duration_ms = v.template get<double>(); }},
        {"amplitude", [&](const auto& v) { c.amplitude = v.template get<double>(); }},
        {"tukey_alpha", [&](const auto& v) { c.tukey_alpha = v.template get<double>(); }},
        {"f_min", [&](const auto& v) { c.f_min = v.template get<double>(); }},
        {"f_max", [&](const auto& v) { c.f_max = v.template get<double>(); }},
        {"f_step", [&](const auto& v) { c.f_step = v.template get<double>(); }},
        {"angle_min", [&](const auto& v) { c.angle_min = v.template get<double>(); }},
        {"angle_max", [&](const auto& v) { c.angle_max = v.template get<double>(); }},
        {"angle_step", [&](const auto& v) { c.angle_step = v.template get<double>(); }},
        {"mode", [&](const auto& v) { c.mode = parse_mode(v.template get<std::string>()); }},
        {"norm", [&](const auto& v) { c.norm = parse_norm(v.template get<std::string>()); }},
        {"threshold_db", [&](const auto& v) { c.threshold_db = v.template get<double>(); }},
        {"db_floor", [&](const auto& v) { c.db_floor = v.template get<double>(); }},
        {"distance", [&](const auto& v) { c.distance = v.template get<double>(); }},
        {"write_waveforms", [&](const auto& v) { c.write_waveforms = v.template get<bool>(); }},
        {"out", [&](const auto& v) { c.out = v.template get<std::string>(); }},
    };
    for (const auto& [key, value] : j.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
        try {
            it->second(value);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config: bad value for '" + key + "': " + e.what());
        }
    }
    return c;
}

std::string config_hash(const ExperimentConfig& cfg) {
    auto j = cfg.to_json();
    j.erase("out");
    return text::hex64(text::fnv1a(j.dump()));
}

std::string phi_tag(double phi_deg) { return "phi_" + text::format_double(phi_deg); }

int cmd_geometry(const ExperimentConfig& cfg, std::ostream& log) {
    const auto g = build_staggered_array(cfg.layout());
    const double d = projected_pitch(g);
    const double limit = *nyquist_steering_limit(d, kPi / 2.0, cfg.c);

    std::filesystem::create_directories(cfg.out);
    write_text(cfg.out / "geometry.csv", [&](std::ostream& out) { write_geometry_csv(out, g); });
    write_json(cfg.out / "geometry.json", {{"files", {"geometry.csv"}},
                                           {"elements", g.size()},
                                           {"projected_pitch_m", d},
                                           {"broadside_grating_limit_hz", limit},
                                           {"speed_of_sound", cfg.c},
                                           {"provenance", provenance(cfg)}});

    log << std::fixed << std::setprecision(3) << "elements: " << g.size() << '\n'
        << "projected pitch: " << d * 1e3 << " mm\n"
        << std::setprecision(2) << "broadside grating-lobe limit (c = " << cfg.c << " m/s): " << limit / 1e3
        << " kHz\n";
    return kExitOk;
}

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log) {
    const auto g = build_staggered_array(cfg.layout());
    const double d = projected_pitch(g);
    std::filesystem::create_directories(cfg.out);

    for (double phi : cfg.phis_deg) {
        const auto steer = SteerAngles::from_degrees(cfg.theta_deg, phi);
        const auto grid = frequency_angle_map(g, steer, cfg.map_options());
        const auto onset = grating_onset_from_map(grid, cfg.threshold_db);

        nlohmann::json meta = {{"kind", "simulated frequency-angle map"},
                               {"steering", {{"theta_deg", cfg.theta_deg}, {"phi_deg", phi}}},
                               {"mode", to_string(cfg.mode)},
                               {"normalization", to_string(cfg.norm)},
                               {"max_db", grid.max_db()},
                               {"threshold_db", cfg.threshold_db},
                               {"grating_onset_hz", optional_json(onset)},
                               {"nyquist_limit_hz", optional_json(nyquist_steering_limit(d, deg2rad(phi), cfg.c))},
                               {"visible_onset_hz", visible_grating_onset(d, deg2rad(phi), cfg.c)}};
        const auto stem = "map_" + phi_tag(phi);
        write_grid_bundle(cfg.out, stem, grid, cfg, meta);

        log << stem << ": onset " << (onset ? text::format_double(*onset) + " Hz" : std::string("none")) << '\n';
    }
    return kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
    const auto g = build_staggered_array(cfg.layout());
    const double d = projected_pitch(g);
    const auto wave = log_chirp(cfg.chirp(), cfg.fs);
    std::filesystem::create_directories(cfg.out);

    for (double phi : cfg.phis_deg) {
        const auto steer = SteerAngles::from_degrees(cfg.theta_deg, phi);
        const auto tag = phi_tag(phi);

        const auto built = assemble_emission_matrix(g, steer, wave, cfg.c);
        const auto mat_path = cfg.out / ("emission_" + tag + ".dacmat");
        write_dacmat(mat_path, built);
        const auto mat = read_dacmat(mat_path);
        if (!(mat == built)) throw std::runtime_error("emission matrix did not reload identically: " + mat_path.string());

        const auto sweep = pan_tilt_sweep(g, mat, cfg.distance, cfg.angle_min, cfg.angle_max, cfg.angle_step, cfg.c);
        const auto grid = sweep_map(sweep, cfg.f_min, cfg.f_max, cfg.norm);
        const auto band = band_power_pattern(sweep, cfg.f_min, cfg.f_max);
        const auto whitened = integrate_map(sweep_map(sweep, cfg.f_min, cfg.f_max, Normalization::PerRow), cfg.f_min,
                                            cfg.f_max);
        const auto peak = static_cast<std::size_t>(std::max_element(band.level_db.begin(), band.level_db.end()) -
                                                   band.level_db.begin());
        const auto onset = grating_onset_from_map(grid, cfg.threshold_db);

        nlohmann::json meta = {{"kind", "virtual pan-tilt measurement"},
                               {"steering", {{"theta_deg", cfg.theta_deg}, {"phi_deg", phi}}},
                               {"distance_m", cfg.distance},
                               {"normalization", to_string(cfg.norm)},
                               {"emission", {{"file", mat_path.filename().string()},
                                             {"rows", mat.rows()},
                                             {"samples", mat.cols()},
                                             {"sample_rate_hz", mat.sample_rate()},
                                             {"geometry_digest", text::hex64(g.digest())}}},
                               {"band_power_argmax_deg", band.angles_deg[peak]},
                               {"band_power_file", "band_power_" + tag + ".csv"},
                               {"whitened_pattern_file", "pattern_" + tag + ".csv"},
                               {"threshold_db", cfg.threshold_db},
                               {"grating_onset_hz", optional_json(onset)},
                               {"visible_onset_hz", visible_grating_onset(d, deg2rad(phi), cfg.c)}};
        write_grid_bundle(cfg.out, "sweep_" + tag, grid, cfg, meta);
        write_text(cfg.out / ("band_power_" + tag + ".csv"), [&](std::ostream& out) { write_pattern_csv(out, band); });
        write_text(cfg.out / ("pattern_" + tag + ".csv"), [&](std::ostream& out) { write_pattern_csv(out, whitened); });
        write_json(cfg.out / ("emission_" + tag + ".json"),
                   {{"files", {mat_path.filename().string()}},
                    {"steering", {{"theta_deg", cfg.theta_deg}, {"phi_deg", phi}}},
                    {"chirp", {{"f_start", cfg.f_start}, {"f_end", cfg.f_end}, {"duration_ms", cfg.duration_ms}}},
                    {"provenance", provenance(cfg)}});

        if (cfg.write_waveforms) {
            const auto dir = cfg.out / ("waveforms_" + tag);
            std::filesystem::create_directories(dir);
            for (const auto& pt : sweep)
                write_text(dir / ("pan_" + text::format_double(pt.angle_deg) + ".csv"),
                           [&](std::ostream& out) { write_waveform_csv(out, pt.signal); });
        }

        log << "sweep_" << tag << ": band-power peak at " << text::format_double(band.angles_deg[peak]) << " deg\n";
    }
    return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Staggered MEMS transmit-array simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    std::vector<std::function<void(ExperimentConfig&)>> overrides;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON experiment config; flags override its values");
        auto bind = [&](const std::string& flag, auto member, const std::string& help) {
            using T = std::remove_reference_t<decltype(ExperimentConfig{}.*member)>;
            auto value = std::make_shared<T>();
            auto* opt = sub->add_option(flag, *value, help);
            overrides.push_back([opt, value, member](ExperimentConfig& c) {
                if (opt->count() > 0) c.*member = *value;
            });
        };
        bind("--rows", &ExperimentConfig::rows, "element rows");
        bind("--cols", &ExperimentConfig::cols, "elements per row");
        bind("--pitch-mm", &ExperimentConfig::pitch_mm, "in-row pitch [mm]");
        bind("--stagger-mm", &ExperimentConfig::stagger_mm, "horizontal row stagger [mm]");
        bind("--row-dz-mm", &ExperimentConfig::row_dz_mm, "vertical row separation [mm]");
        bind("--c", &ExperimentConfig::c, "speed of sound [m/s]");
        bind("--fs", &ExperimentConfig::fs, "DAC sample rate [Hz]");
        bind("--theta", &ExperimentConfig::theta_deg, "steering elevation [deg]");
        bind("--phi", &ExperimentConfig::phis_deg, "steering azimuth(s) [deg], repeatable");
        bind("--f-min", &ExperimentConfig::f_min, "lowest map frequency [Hz]");
        bind("--f-max", &ExperimentConfig::f_max, "highest map frequency [Hz]");
        bind("--f-step", &ExperimentConfig::f_step, "map frequency step [Hz]");
        bind("--angle-step", &ExperimentConfig::angle_step, "angle step for maps and sweeps [deg]");
        bind("--distance", &ExperimentConfig::distance, "microphone distance [m]");
        bind("--threshold-db", &ExperimentConfig::threshold_db, "grating-lobe detection threshold [dB]");
        bind("--db-floor", &ExperimentConfig::db_floor, "PGM dB floor");
        auto norm = std::make_shared<std::string>();
        auto* norm_opt = sub->add_option("--norm", *norm, "map normalization")->check(CLI::IsMember({"global", "per-row"}));
        overrides.push_back([norm_opt, norm](ExperimentConfig& c) {
            if (norm_opt->count() > 0) c.norm = parse_norm(*norm);
        });
        auto mode = std::make_shared<std::string>();
        auto* mode_opt =
            sub->add_option("--mode", *mode, "delay model")->check(CLI::IsMember({"continuous", "quantized"}));
        overrides.push_back([mode_opt, mode](ExperimentConfig& c) {
            if (mode_opt->count() > 0) c.mode = parse_mode(*mode);
        });
        auto outdir = std::make_shared<std::string>();
        auto* out_opt = sub->add_option("--out", *outdir, "output directory");
        overrides.push_back([out_opt, outdir](ExperimentConfig& c) {
            if (out_opt->count() > 0) c.out = *outdir;
        });
        auto waves = std::make_shared<bool>(false);
        auto* waves_opt = sub->add_flag("--waveforms", *waves, "also write per-angle received waveforms (sweep)");
        overrides.push_back([waves_opt, waves](ExperimentConfig& c) {
            if (waves_opt->count() > 0) c.write_waveforms = *waves;
        });
    };

    auto* geometry = app.add_subcommand("geometry", "element layout CSV and derived grating-lobe limit");
    auto* simulate = app.add_subcommand("simulate", "frequency-angle maps for each steering azimuth");
    auto* sweep = app.add_subcommand("sweep", "virtual pan-tilt measurement of the emitted chirp");
    for (auto* sub : {geometry, simulate, sweep}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    ExperimentConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::invalid_argument("cannot open config " + config_path);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw std::invalid_argument(std::string("config: ") + e.what());
            }
            cfg = ExperimentConfig::from_json(j);
        }
        for (auto& apply : overrides) apply(cfg);
        cfg.validate();
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (geometry->parsed()) return cmd_geometry(cfg, out);
        if (simulate->parsed()) return cmd_simulate(cfg, out);
        return cmd_sweep(cfg, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace conam::cli
