#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "test_util.hpp"
#include "vton/flow.hpp"
#include "vton/model.hpp"
#include "vton/optimizer.hpp"

using namespace vton;
using testutil::make_seq;
using testutil::tiny_config;

namespace {

bool bitwise_equal(const Array& a, const Array& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0;
}

}  // namespace

TEST_CASE("init_params: determinism, zero head, seed sensitivity") {
    ModelConfig cfg = tiny_config();
    ModelParams a = init_params(cfg, 3);
    ModelParams b = init_params(cfg, 3);
    REQUIRE(a.tensors.size() == b.tensors.size());
    for (size_t i = 0; i < a.tensors.size(); ++i) {
        CHECK(a.tensors[i].name == b.tensors[i].name);
        CHECK(bitwise_equal(a.tensors[i].value, b.tensors[i].value));
    }

    const Array& head_w = a.value("head.w");
    const Array& head_b = a.value("head.b");
    for (int64_t i = 0; i < head_w.size(); ++i) CHECK(head_w.at(i) == 0.0f);
    for (int64_t i = 0; i < head_b.size(); ++i) CHECK(head_b.at(i) == 0.0f);

    ModelParams c = init_params(cfg, 4);
    CHECK_FALSE(bitwise_equal(a.value("blocks.0.attn.wq"), c.value("blocks.0.attn.wq")));
}

TEST_CASE("forward: zero output head forces a zero velocity field") {
    ModelConfig cfg = tiny_config();
    ModelParams params = init_params(cfg, 1);
    SamplePair pair = gen_pair(5, GarmentCategory::upper, 16, 12);
    TokenSequence seq = make_seq(pair, TaskMode::on, 0.5f, 9, cfg);
    ForwardResult out = forward(params, seq, TaskToken{TaskMode::on, pair.category}, 0.5f);
    for (int64_t i = 0; i < out.velocity.data.size(); ++i) CHECK(out.velocity.data.at(i) == 0.0f);
    for (int64_t i = 0; i < out.tokens_padded.size(); ++i) CHECK(out.tokens_padded.at(i) == 0.0f);
}

TEST_CASE("forward: deterministic and invariant to the padding budget") {
    ModelConfig cfg = tiny_config();
    ModelParams params = init_params(cfg, 1);
    Rng hrng(2);
    Array& hw = params.value("head.w");
    for (int64_t i = 0; i < hw.size(); ++i) hw.at(i) = 0.02f * hrng.normal();

    SamplePair pair = gen_pair(6, GarmentCategory::lower, 16, 12);
    TokenSequence seq = make_seq(pair, TaskMode::on, 0.3f, 10, cfg);
    TaskToken task{TaskMode::on, pair.category};

    ForwardResult a = forward(params, seq, task, 0.3f);
    ForwardResult b = forward(params, seq, task, 0.3f);
    CHECK(bitwise_equal(a.tokens_compact, b.tokens_compact));

    // shrink the padding budget: valid-token outputs must not move
    ModelConfig cfg_small = cfg;
    cfg_small.n_max = seq.n_real;  // no padding at all
    TokenSequence seq_small = tokenize(LatentGrid(seq.grid_h, seq.grid_w, seq.z_channels, seq.z_t),
                                       LatentGrid(seq.grid_h, seq.grid_w, seq.z_channels, seq.z_c),
                                       LatentGrid(seq.grid_h, seq.grid_w, seq.mask_channels, seq.m_c),
                                       cfg.patch, cfg_small.n_max);
    ForwardResult c = forward(params, seq_small, task, 0.3f);
    REQUIRE(a.tokens_compact.size() == c.tokens_compact.size());
    for (int64_t i = 0; i < a.tokens_compact.size(); ++i)
        CHECK(std::abs(a.tokens_compact.at(i) - c.tokens_compact.at(i)) <= 1e-6f);

    // attention rows over valid keys sum to one regardless of padding
    AttnCapture cap;
    forward(params, seq, task, 0.3f, std::nullopt, nullptr, &cap);
    for (const Array& probs : cap.probs) {
        for (int q = 0; q < seq.n_real; ++q) {
            double s = 0.0;
            for (int kk = 0; kk < seq.n_real; ++kk) s += probs.at(static_cast<int64_t>(q) * seq.n_real + kk);
            CHECK(std::abs(s - 1.0) < 1e-5);
        }
    }
}

TEST_CASE("forward: explicit base-temperature override is a no-op") {
    ModelConfig cfg = tiny_config();
    ModelParams params = init_params(cfg, 11);
    Rng hrng(12);
    Array& hw = params.value("head.w");
    for (int64_t i = 0; i < hw.size(); ++i) hw.at(i) = 0.02f * hrng.normal();

    SamplePair pair = gen_pair(8, GarmentCategory::full, 16, 12);
    TokenSequence seq = make_seq(pair, TaskMode::off, 0.7f, 13, cfg);
    TaskToken task{TaskMode::off, pair.category};
    ForwardResult plain = forward(params, seq, task, 0.7f);
    ForwardResult forced = forward(params, seq, task, 0.7f, cfg.base_temperature());
    CHECK(bitwise_equal(plain.tokens_compact, forced.tokens_compact));

    CHECK_THROWS_AS(forward(params, seq, task, 1.5f), std::invalid_argument);
}

TEST_CASE("select_trainable: strategies and the analytic attention fraction") {
    ModelConfig cfg = tiny_config();
    cfg.block_count = 2;
    ModelParams params = init_params(cfg, 21);

    select_trainable(params, TrainStrategy::full);
    CHECK(params.parameter_count(true) == params.parameter_count(false));

    select_trainable(params, TrainStrategy::attention_only);
    for (const TensorInfo& t : params.tensors) {
        const bool is_attention = t.label.rfind("attention.", 0) == 0;
        CHECK(t.trainable == is_attention);
    }
    // analytic count: per block 4 weight matrices C*C plus 4 biases C
    const int64_t c = cfg.token_dim;
    const int64_t expect = cfg.block_count * 4 * (c * c + c);
    CHECK(params.parameter_count(true) == expect);

    select_trainable(params, TrainStrategy::single_blocks);
    for (const TensorInfo& t : params.tensors) {
        const bool upper_half = t.name.rfind("blocks.1.", 0) == 0;
        CHECK(t.trainable == upper_half);
    }

    CHECK_THROWS_AS(parse_strategy("lora"), std::invalid_argument);
}

TEST_CASE("one optimizer step leaves every frozen tensor bit-identical") {
    ModelConfig cfg = tiny_config();
    ModelParams params = init_params(cfg, 31);
    Rng hrng(32);
    Array& hw = params.value("head.w");
    for (int64_t i = 0; i < hw.size(); ++i) hw.at(i) = 0.02f * hrng.normal();
    select_trainable(params, TrainStrategy::attention_only);

    ModelParams before = params;
    for (TensorInfo& t : before.tensors) t.value = t.value.clone();

    SamplePair pair = gen_pair(9, GarmentCategory::upper, 16, 12);
    TrainingExample ex{&pair, TaskToken{TaskMode::on, pair.category}, 77, false};

    Tape tape;
    std::vector<int> watched = watch_trainable(tape, params);
    LossInfo info = training_loss(params, {ex}, &tape);
    std::vector<const Array*> wrt;
    for (int idx : watched) wrt.push_back(&params.tensors[static_cast<size_t>(idx)].value);
    auto grads = tape.grad(info.loss_node, wrt);
    clear_tape_tags(params);
    AdamW opt(OptimizerConfig{});
    opt.step(params, watched, grads);

    bool some_moved = false;
    for (size_t i = 0; i < params.tensors.size(); ++i) {
        if (params.tensors[i].trainable) {
            if (!bitwise_equal(params.tensors[i].value, before.tensors[i].value)) some_moved = true;
        } else {
            CHECK(bitwise_equal(params.tensors[i].value, before.tensors[i].value));
        }
    }
    CHECK(some_moved);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    namespace fs = std::filesystem;
    ModelConfig cfg = tiny_config();
    ModelParams params = init_params(cfg, 41);
    select_trainable(params, TrainStrategy::attention_only);
    params.n_train_tokens = 24;

    const std::string path = (fs::temp_directory_path() / "vton_ckpt_test.ckpt").string();
    save_checkpoint(params, path);
    ModelParams loaded = load_checkpoint(path);
    fs::remove(path);

    CHECK(loaded.config.token_dim == cfg.token_dim);
    CHECK(loaded.config.n_max == cfg.n_max);
    CHECK(loaded.n_train_tokens == 24);
    REQUIRE(loaded.tensors.size() == params.tensors.size());
    for (size_t i = 0; i < params.tensors.size(); ++i) {
        CHECK(loaded.tensors[i].name == params.tensors[i].name);
        CHECK(loaded.tensors[i].label == params.tensors[i].label);
        CHECK(loaded.tensors[i].trainable == params.tensors[i].trainable);
        CHECK(loaded.tensors[i].value.shape() == params.tensors[i].value.shape());
        CHECK(bitwise_equal(loaded.tensors[i].value, params.tensors[i].value));
    }
}

TEST_CASE("model config validation") {
    ModelConfig cfg = tiny_config();
    cfg.head_dim = 6;  // not divisible by 4
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    ModelConfig cfg2 = tiny_config();
    cfg2.head_count = 3;  // token_dim != head_count * head_dim
    CHECK_THROWS_AS(cfg2.validate(), std::invalid_argument);
}
