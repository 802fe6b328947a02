#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vton/flow.hpp"
#include "vton/metrics.hpp"
#include "vton/model.hpp"
#include "vton/runconfig.hpp"
#include "vton/synthwear.hpp"

namespace vton {

// pairs from the synthetic spec, or from data_dir when it is set
std::vector<SamplePair> resolve_dataset(const RunConfig& cfg);
// held-out slice: the last `val_count` pairs
std::vector<const SamplePair*> validation_slice(const std::vector<SamplePair>& all, int val_count);

struct PairEvalResult {
    double ssim = 0.0;
    double mse = 0.0;
    double psnr = 0.0;  // +inf when mse == 0
};

// samples one pair in the given direction and scores the generated half
PairEvalResult eval_pair(const ModelParams& params, const SamplePair& pair, TaskMode mode,
                         const NoiseSchedule& schedule, uint64_t seed, bool temp_scale,
                         const TemperatureParams& temp);

struct LocalizationResult {
    double score = 0.0;    // mean attention mass on the oracle source region
    double uniform = 0.0;  // mean uniform-attention baseline
    int queries = 0;
};

// final-block, head-averaged attention of masked person queries against the
// correspondence-map source region (requires synthetic pairs)
LocalizationResult localization_score(const ModelParams& params, const SamplePair& pair, int max_queries,
                                      float t_eval, uint64_t seed, int block = -1);

// ---- subcommands ----

int run_gen_data(const RunConfig& cfg, const std::string& out_dir);
int run_train(const RunConfig& cfg, const std::string& out_dir);

struct SampleArgs {
    std::string checkpoint;
    std::string out_dir;
    TaskMode mode = TaskMode::on;
    bool self_correct = false;
    int index = 0;  // pair index into the resolved dataset
    // explicit file inputs override the dataset when garment/person are set
    std::string garment;
    std::string person;
    std::string mask;
    std::string category = "upper";
};

int run_sample(const RunConfig& cfg, const SampleArgs& args);

struct AttnMapArgs {
    std::string checkpoint;
    std::string out_dir;
    int index = 0;
    int query_row = 0;  // pixel coords on the person half
    int query_col = 0;
    int block = -1;     // -1 renders every block
    int head = -1;      // -1 averages heads
};

int run_attn_map(const RunConfig& cfg, const AttnMapArgs& args);

struct EvalArgs {
    std::string checkpoint;
    std::string out_dir;
    std::string task = "on";  // on | off | both
    int count = -1;           // overrides cfg.eval.count when positive
    bool temp_scale = false;
};

int run_eval(const RunConfig& cfg, const EvalArgs& args);
int run_layer_report(const std::string& before, const std::string& after, const std::string& out_dir);

}  // namespace vton
