#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "teralasso/experiments.hpp"
#include "teralasso/factor_set.hpp"
#include "teralasso/solver.hpp"
#include "teralasso/tensor.hpp"

namespace teralasso::io {

using json = nlohmann::json;

/// {"dims": [...], "factors": [row-major arrays]}
json to_json(const FactorSet& f);
FactorSet factor_set_from_json(const json& j);

json to_json(const SolverReport& r);
json to_json(const SolverConfig& c);
/// Missing keys keep the defaults of `base`.
SolverConfig solver_config_from_json(const json& j, SolverConfig base = {});

json to_json(const ModelSpec& m);
ModelSpec model_spec_from_json(const json& j, ModelSpec base = {});
json to_json(const ExperimentSpec& s);
ExperimentSpec experiment_spec_from_json(const json& j, ExperimentSpec base = {});

json dims_to_json(const Dims& d);
Dims dims_from_json(const json& j);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

void write_factor_set(const std::filesystem::path& path, const FactorSet& f);
FactorSet read_factor_set(const std::filesystem::path& path);

/// .ktns: one JSON header line {"dims":[...],"n":N,"dtype":"f64","order":"mode1-slowest"}
/// followed by n * p little-endian IEEE-754 doubles.
void write_ktns(const std::filesystem::path& path, const DataTensorSet& data);
DataTensorSet read_ktns(const std::filesystem::path& path);

} // namespace teralasso::io
