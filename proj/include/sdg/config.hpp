#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "sdg/problem.hpp"

namespace sdg {

struct SolverSection {
    Side side = Side::lower;
    int threads = 1;
};

struct McSection {
    int paths = 10000;
    int steps = 100;
    std::uint64_t seed = 42;
    int basis_degree = 4;
};

struct TransformSection {
    int mollify_m = 8;
    int truncate_k = 8;
    int quad_points = 64;
};

/// A full run configuration: the declarative document behind the CLI.
struct Config {
    ProblemSpec problem;
    GridSpec grid;
    SolverSection solver;
    McSection mc;
    TransformSection transform;
};

/// Serializes a ProblemSpec built from expression coefficients. Throws
/// spec_error when a coefficient has no expression (lambda-built specs are
/// not serializable).
nlohmann::json problem_to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const Config& cfg);

/// Parses a config document. Unknown keys anywhere are an error listing
/// them; missing required keys are an error naming them.
Config config_from_json(const nlohmann::json& j);

Config load_config_file(const std::string& path);
void save_config_file(const Config& cfg, const std::string& path);

} // namespace sdg
