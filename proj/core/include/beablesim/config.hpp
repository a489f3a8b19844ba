#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "beablesim/experiments.hpp"

namespace beablesim {

/// How the config asked for the initial beable value; labels are resolved
/// against the run's basis in build_scenario.
struct InitialBeableSpec {
    enum class Kind { Default, Born, FixedIndex, FixedLabel };
    Kind kind = Kind::Default;
    int index = -1;
    std::string label;
    int line = 0; // source location, for resolution errors
    int column = 0;
};

/// One `segment = duration : hamiltonian` line. Config units: duration in tau,
/// Hamiltonian entries in 1/tau.
struct SegmentSpec {
    double duration = 0.0;
    Matrix hamiltonian;
    int line = 0;
};

/// Parsed run description. All times (durations, sample_times, dt_max) are in
/// units of tau; Hamiltonian entries are angular frequencies in 1/tau.
struct RunConfig {
    std::optional<std::string> scenario;

    // inline definition, mutually exclusive with `scenario`
    std::optional<int> dim;
    std::vector<std::string> labels;
    std::vector<SegmentSpec> segments;
    std::optional<Vector> state; // full-space initial wavefunction
    std::optional<std::pair<int, int>> measurement_split; // system dim x apparatus dim
    std::optional<Vector> apparatus_ready;

    // run parameters, valid with either form
    std::vector<Complex> coefficients; // system coefficients for measurement runs
    InitialBeableSpec initial_beable;
    int trials = 100;
    std::optional<std::uint64_t> seed;
    double tau = 1.0;
    double dt_max = 1.0 / 200.0;
    std::vector<double> sample_times;
    std::string out_dir = ".";

    bool has_inline_definition() const;
};

/// Parses `key = value` lines ('#' starts a comment). Throws ConfigError with
/// the offending line and column.
RunConfig parse_config(const std::string& text);

/// parse_config over the file's contents.
RunConfig parse_config_file(const std::string& path);

/// Emits a config that parses back to an equivalent RunConfig; numbers are
/// printed with round-trip precision.
std::string serialize_config(const RunConfig& config);

/// Instantiates the run. Named scenarios are built at the config's tau and
/// then take the coefficient / initial-beable overrides; inline definitions
/// are validated (Hermitian within 1e-9, consistent dimensions, normalized
/// states within 1e-6) and assembled into a Scenario named "inline".
Scenario build_scenario(const RunConfig& config);

/// Evaluates one operator expression: numbers, pi, sx, sy, sz, id, id(n),
/// kron(a, b), + - * /, parentheses, complex pairs [re, im], and matrix
/// literals [r11, r12; r21, r22]. `line` anchors error messages.
Matrix parse_operator_expression(const std::string& text, int line = 0);

} // namespace beablesim
