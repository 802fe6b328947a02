#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "vton/flow.hpp"
#include "vton/model.hpp"
#include "vton/optimizer.hpp"
#include "vton/synthwear.hpp"

namespace vton {

struct TrainConfig {
    int steps = 2000;
    int batch_size = 4;
    std::string strategy = "attention_only";
    std::string task = "both";  // on | off | both
    uint64_t seed = 0;
    bool mask_augment = true;
    bool loss_masked_only = false;
    int log_every = 50;
    int val_count = 16;  // pairs held out from the end of the dataset

    void validate() const;
};

struct StepLog {
    int step = 0;
    double loss = 0.0;
    double loss_on = 0.0;  // running means per direction
    double loss_off = 0.0;
};

struct TrainResult {
    ModelParams params;   // final state
    ModelParams initial;  // state the run actually started from
    std::vector<StepLog> logs;
};

// AdamW training over synthetic pairs. All randomness derives from
// config.seed; per-sample draws are keyed on (step, pair seed) so a
// duplicated batch element contributes an identical loss.
TrainResult train_model(ModelParams params, const std::vector<SamplePair>& train_pairs, const TrainConfig& config,
                        const OptimizerConfig& opt_config, std::ostream* log_jsonl = nullptr);

// mean real-token count over the pairs, as recorded in checkpoints
int64_t mean_token_count(const std::vector<SamplePair>& pairs, const ModelConfig& config);

}  // namespace vton
