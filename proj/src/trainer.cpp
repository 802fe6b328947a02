#include "vton/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "vton/rng.hpp"

namespace vton {

using nlohmann::json;

void TrainConfig::validate() const {
    if (steps < 0) throw std::invalid_argument("train.steps must be >= 0");
    if (batch_size <= 0) throw std::invalid_argument("train.batch_size must be positive");
    if (task != "on" && task != "off" && task != "both")
        throw std::invalid_argument("train.task must be on, off or both");
    parse_strategy(strategy);
    if (val_count < 0) throw std::invalid_argument("train.val_count must be >= 0");
    if (log_every <= 0) throw std::invalid_argument("train.log_every must be positive");
}

int64_t mean_token_count(const std::vector<SamplePair>& pairs, const ModelConfig& config) {
    if (pairs.empty()) return 0;
    const int fp = config.codec_factor * config.patch;
    double total = 0.0;
    for (const SamplePair& p : pairs) {
        total += static_cast<double>(p.garment.h / fp) * (2 * p.garment.w / fp);
    }
    return static_cast<int64_t>(std::llround(total / static_cast<double>(pairs.size())));
}

namespace {

bool head_is_zero(const ModelParams& params) {
    const Array& w = params.value("head.w");
    const Array& b = params.value("head.b");
    for (int64_t i = 0; i < w.size(); ++i)
        if (w.at(i) != 0.0f) return false;
    for (int64_t i = 0; i < b.size(); ++i)
        if (b.at(i) != 0.0f) return false;
    return true;
}

// An all-zero output head blocks every upstream gradient, so a run that
// freezes the head could never leave v = 0. The trainer therefore warm-starts
// a zero head before the first step; the run's recorded initial state is the
// post-warm-start checkpoint. The head input is layer-normalized (token norm
// sqrt(C)), so the warm-start gain bounds the attainable velocity magnitude
// whenever the head stays frozen; 0.2 leaves ample headroom over the unit
// rectified-flow target scale.
void warm_start_head(ModelParams& params, uint64_t seed) {
    Rng rng(hash_combine(seed, 0x68656164ull));
    Array& w = params.value("head.w");
    for (int64_t i = 0; i < w.size(); ++i) w.at(i) = 0.2f * rng.normal();
}

}  // namespace

TrainResult train_model(ModelParams params, const std::vector<SamplePair>& train_pairs, const TrainConfig& config,
                        const OptimizerConfig& opt_config, std::ostream* log_jsonl) {
    config.validate();
    if (train_pairs.empty()) throw std::invalid_argument("train: empty training set");

    select_trainable(params, parse_strategy(config.strategy));
    if (head_is_zero(params)) warm_start_head(params, config.seed);
    params.n_train_tokens = mean_token_count(train_pairs, params.config);

    TrainResult result;
    result.initial = params;
    for (TensorInfo& t : result.initial.tensors) t.value = t.value.clone();

    AdamW optimizer(opt_config);
    double run_on = 0.0, run_off = 0.0;
    int64_t n_on = 0, n_off = 0;

    for (int step = 0; step < config.steps; ++step) {
        const uint64_t step_key = hash_combine(config.seed, hash_combine(0x73746570ull, static_cast<uint64_t>(step)));
        std::vector<TrainingExample> batch;
        batch.reserve(static_cast<size_t>(config.batch_size));
        for (int slot = 0; slot < config.batch_size; ++slot) {
            Rng pick(hash_combine(step_key, static_cast<uint64_t>(slot)));
            const SamplePair& pair = train_pairs[static_cast<size_t>(
                pick.uniform_int(0, static_cast<int>(train_pairs.size()) - 1))];
            TrainingExample ex;
            ex.pair = &pair;
            ex.draw_seed = hash_combine(step_key, pair.seed);
            ex.augment = config.mask_augment;
            TaskMode mode;
            if (config.task == "on") {
                mode = TaskMode::on;
            } else if (config.task == "off") {
                mode = TaskMode::off;
            } else {
                Rng task_rng(hash_combine(ex.draw_seed, 0x7461736bull));
                mode = task_rng.uniform() < 0.5f ? TaskMode::on : TaskMode::off;
            }
            ex.task = TaskToken{mode, pair.category};
            batch.push_back(ex);
        }

        Tape tape;
        std::vector<int> watched = watch_trainable(tape, params);
        LossInfo info = training_loss(params, batch, &tape, config.loss_masked_only);
        std::vector<const Array*> wrt;
        wrt.reserve(watched.size());
        for (int idx : watched) wrt.push_back(&params.tensors[static_cast<size_t>(idx)].value);
        std::vector<Array> grads = tape.grad(info.loss_node, wrt);
        clear_tape_tags(params);
        optimizer.step(params, watched, grads);

        run_on += info.loss_on * info.count_on;
        n_on += info.count_on;
        run_off += info.loss_off * info.count_off;
        n_off += info.count_off;

        if ((step + 1) % config.log_every == 0 || step + 1 == config.steps) {
            StepLog log;
            log.step = step + 1;
            log.loss = info.loss;
            log.loss_on = n_on > 0 ? run_on / static_cast<double>(n_on) : 0.0;
            log.loss_off = n_off > 0 ? run_off / static_cast<double>(n_off) : 0.0;
            result.logs.push_back(log);
            if (log_jsonl) {
                json line{{"step", log.step},
                          {"loss", log.loss},
                          {"running_loss_on", log.loss_on},
                          {"running_loss_off", log.loss_off}};
                (*log_jsonl) << line.dump() << "\n";
            }
        }
    }

    result.params = std::move(params);
    return result;
}

}  // namespace vton
