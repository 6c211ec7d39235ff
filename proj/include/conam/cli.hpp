// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: `geometry`, `simulate` and `sweep` subcommands.

#ifndef CONAM_CLI_HPP
#define CONAM_CLI_HPP

#include "conam/field.hpp"
#include "conam/geometry.hpp"
#include "conam/waveform.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace conam::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
    // geometry, millimetres at this boundary
    std::size_t rows = 2;
    std::size_t cols = 16;
    double pitch_mm = 6.1;
    double stagger_mm = 3.05;
    double row_dz_mm = 6.1;

    // steering, degrees
    double theta_deg = 0.0;
    std::vector<double> phis_deg = {0.0, -40.0, 80.0};

    double c = 343.0;
    double fs = 1.0e6;

    // chirp
    double f_start = 100e3;
    double f_end = 20e3;
    double duration_ms = 5.0;
    double amplitude = 1.0;
    double tukey_alpha = 0.1;

    // maps
    double f_min = 20e3;
    double f_max = 100e3;
    double f_step = 500.0;
    double angle_min = -90.0;
    double angle_max = 90.0;
    double angle_step = 1.0;
    DelayMode mode = DelayMode::Continuous;
    Normalization norm = Normalization::Global;
    double threshold_db = -6.0;
    double db_floor = -40.0;

    // virtual measurement
    double distance = 1.5;
    bool write_waveforms = false;

    std::filesystem::path out = "out";

    // Checks every module precondition up front; throws std::invalid_argument.
    void validate() const;

    StaggeredLayout layout() const;
    ChirpSpec chirp() const;
    MapOptions map_options() const;

    nlohmann::json to_json() const;
    // Unknown keys are rejected.
    static ExperimentConfig from_json(const nlohmann::json& j);
};

// FNV-1a of the canonical JSON dump, excluding the output directory.
std::string config_hash(const ExperimentConfig& cfg);

// File-name fragment for a steering azimuth, e.g. "phi_-40".
std::string phi_tag(double phi_deg);

int cmd_geometry(const ExperimentConfig& cfg, std::ostream& log);
int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);

// Parses argv (subcommand, --config file, flag overrides) and dispatches.
// Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace conam::cli

#endif // CONAM_CLI_HPP
