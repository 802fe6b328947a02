#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vton/array.hpp"
#include "vton/layout.hpp"

namespace vton {

struct ModelConfig {
    int token_dim = 128;
    int head_count = 4;
    int head_dim = 32;
    int block_count = 4;
    int patch = 2;
    int codec_factor = 2;
    int n_max = 512;
    int conditioning_dim = 128;

    void validate() const;
    int z_channels() const { return 3 * codec_factor * codec_factor; }
    int mask_channels() const { return codec_factor * codec_factor; }
    int feature_in() const { return patch * patch * (2 * z_channels() + mask_channels()); }
    int feature_out() const { return patch * patch * z_channels(); }
    int mlp_hidden() const { return 4 * token_dim; }
    float base_temperature() const;
};

struct TensorInfo {
    std::string name;
    std::string label;  // attention.{q,k,v,out} | mlp.{in,out} | modulation | token_embedding | cond_embedding | output_head
    bool trainable = true;
    Array value;
};

struct ModelParams {
    ModelConfig config;
    std::vector<TensorInfo> tensors;
    int64_t n_train_tokens = 0;  // recorded by the trainer, used by Eq.-style temp scaling

    int index_of(const std::string& name) const;  // -1 if absent
    Array& value(const std::string& name);
    const Array& value(const std::string& name) const;
    int64_t parameter_count(bool trainable_only) const;
};

// deterministic init; output head starts at zero so the initial velocity
// prediction is identically zero
ModelParams init_params(const ModelConfig& config, uint64_t seed);

enum class TrainStrategy { full, attention_only, single_blocks };
TrainStrategy parse_strategy(const std::string& s);
std::string to_string(TrainStrategy s);

// sets the trainable flag per tensor. attention_only keeps exactly the
// attention.* labels; single_blocks keeps the upper contiguous half of blocks.
void select_trainable(ModelParams& params, TrainStrategy strategy);

// post-softmax attention probabilities recorded during forward
struct AttnCapture {
    int block = -1;  // -1 captures every block
    int heads = 0;
    int blocks = 0;
    int n = 0;
    std::vector<Array> probs;  // [block * heads + head], each [n, n] over real tokens

    const Array& at(int block_idx, int head_idx) const;
};

struct ForwardResult {
    Array tokens_compact;  // [n_real, feature_out], on tape when one was given
    Array tokens_padded;   // [n_max, feature_out], zero rows for padding
    LatentGrid velocity;   // unpatched over the latent grid
};

// velocity prediction over the whole canvas latent. When z_t_override is
// given it replaces seq.z_t as the noisy-latent input (used for gradient
// flow into z_t). Padding tokens never enter attention: computation runs on
// the real-token prefix and the padded output rows stay zero.
ForwardResult forward(const ModelParams& params, const TokenSequence& seq, const TaskToken& tau, float t,
                      std::optional<float> lambda_override = std::nullopt, Tape* tape = nullptr,
                      AttnCapture* capture = nullptr, const Array* z_t_override = nullptr);

// tags every trainable tensor on the tape (in place); returns their indices
std::vector<int> watch_trainable(Tape& tape, ModelParams& params);
// clears node tags after a training step
void clear_tape_tags(ModelParams& params);

// checkpoint: 8-byte magic, u64 little-endian JSON length, JSON manifest
// (config, tensor table with byte offsets, n_train_tokens), then raw f32
// little-endian payloads in manifest order. Round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace vton
