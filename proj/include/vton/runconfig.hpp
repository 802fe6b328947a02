#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vton/flow.hpp"
#include "vton/model.hpp"
#include "vton/optimizer.hpp"
#include "vton/synthwear.hpp"
#include "vton/trainer.hpp"

namespace vton {

struct SampleConfig {
    uint64_t seed = 1;
    bool temp_scale = false;
    bool trace = false;
};

struct EvalConfig {
    int count = 16;                // validation pairs evaluated
    int localization_queries = 64;
    double localization_t = 0.5;   // noise level of the probe layout
};

// One canonical document drives every subcommand; all randomness flows from
// the seeds recorded here. Unknown keys are rejected with their path.
struct RunConfig {
    ModelConfig model;
    DatasetSpec dataset;
    std::string data_dir;  // when set, pairs come from a directory instead
    OptimizerConfig optimizer;
    TrainConfig train;
    int schedule_steps = 28;
    TemperatureParams temperature;
    CorrectionPlan correction;
    SampleConfig sample;
    EvalConfig eval;
    std::string out_dir = "out";

    void validate() const;
};

RunConfig default_run_config();

nlohmann::json run_config_to_json(const RunConfig& cfg);
// strict parse: every key must be known, every field validated
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);

// dot-path override, e.g. apply_override(doc, "train.steps", "100").
// The value is parsed as a JSON literal, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& path, const std::string& value);

// FNV-1a 64 over the canonical dump, for replay manifests
std::string config_hash(const nlohmann::json& doc);

// manifest written next to every artifact-producing run
nlohmann::json make_manifest(const std::string& command, const RunConfig& cfg);
void write_text_file(const std::string& path, const std::string& text);

extern const char* kVersionString;

}  // namespace vton
