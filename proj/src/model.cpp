#include "vton/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "vton/rng.hpp"

namespace vton {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

void ModelConfig::validate() const {
    if (token_dim <= 0 || head_count <= 0 || head_dim <= 0 || block_count <= 0 || patch <= 0 ||
        codec_factor <= 0 || n_max <= 0 || conditioning_dim <= 0)
        throw std::invalid_argument("model config: all fields must be positive");
    if (token_dim != head_count * head_dim)
        throw std::invalid_argument("model config: token_dim must equal head_count * head_dim");
    if (head_dim % 4 != 0) throw std::invalid_argument("model config: head_dim must be divisible by 4 for 2D RoPE");
}

float ModelConfig::base_temperature() const { return 1.0f / std::sqrt(static_cast<float>(head_dim)); }

int ModelParams::index_of(const std::string& name) const {
    for (size_t i = 0; i < tensors.size(); ++i) {
        if (tensors[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

Array& ModelParams::value(const std::string& name) {
    int i = index_of(name);
    if (i < 0) throw std::invalid_argument("model params: unknown tensor " + name);
    return tensors[static_cast<size_t>(i)].value;
}

const Array& ModelParams::value(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw std::invalid_argument("model params: unknown tensor " + name);
    return tensors[static_cast<size_t>(i)].value;
}

int64_t ModelParams::parameter_count(bool trainable_only) const {
    int64_t n = 0;
    for (const TensorInfo& t : tensors) {
        if (!trainable_only || t.trainable) n += t.value.size();
    }
    return n;
}

namespace {

Array normal_init(Rng& rng, std::vector<int> shape, float std_dev) {
    Array a(std::move(shape));
    for (int64_t i = 0; i < a.size(); ++i) a.at(i) = std_dev * rng.normal();
    return a;
}

void push(ModelParams& p, std::string name, std::string label, Array value) {
    p.tensors.push_back(TensorInfo{std::move(name), std::move(label), true, std::move(value)});
}

// Embedding of continuous t in [0,1]: sinusoidal features plus a bank of
// rational profiles c/(t+c). The rational bank makes soft 1/t gains linearly
// readable downstream; the rectified-flow velocity (z_t - z0)/t needs them,
// and when the conditioning path is frozen they cannot be learned.
Array timestep_embedding(float t, int dim) {
    Array emb({1, dim});
    constexpr float kRationalC[] = {0.02f, 0.05f, 0.1f, 0.25f, 0.5f};
    constexpr int kExtra = 8;
    const int sin_dim = dim > 2 * kExtra ? dim - kExtra : dim;
    const int half = sin_dim / 2;
    const float tt = t * 1000.0f;
    for (int i = 0; i < half; ++i) {
        const float freq = std::exp(-std::log(10000.0f) * static_cast<float>(i) / static_cast<float>(half));
        emb.at(i) = std::cos(tt * freq);
        emb.at(half + i) = std::sin(tt * freq);
    }
    if (sin_dim < dim) {
        int o = sin_dim;
        emb.at(o++) = t;
        emb.at(o++) = 1.0f - t;
        emb.at(o++) = std::log(t + 0.02f);
        for (float c : kRationalC) emb.at(o++) = c / (t + c);
    }
    return emb;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, uint64_t seed) {
    config.validate();
    ModelParams p;
    p.config = config;
    Rng rng(hash_combine(seed, 0x696e6974ull));
    const int C = config.token_dim;
    const int D = config.conditioning_dim;
    const float std_dev = 0.02f;
    // The conditioning path stays frozen under attention-only training, so
    // its initial amplitude is the only timestep signal the trainable
    // attention can read. Unit-scale init keeps the per-block modulation an
    // O(1) function of (t, tau) instead of a 2% perturbation.
    const float cond_std = 1.0f / std::sqrt(static_cast<float>(D));

    push(p, "token_embed.w", "token_embedding", normal_init(rng, {config.feature_in(), C}, std_dev));
    push(p, "token_embed.b", "token_embedding", Array::zeros({C}));
    push(p, "cond.time.w", "cond_embedding", normal_init(rng, {D, D}, cond_std));
    push(p, "cond.time.b", "cond_embedding", Array::zeros({D}));
    push(p, "cond.mode", "cond_embedding", normal_init(rng, {2, D}, 0.5f));
    push(p, "cond.category", "cond_embedding", normal_init(rng, {3, D}, 0.5f));
    for (int b = 0; b < config.block_count; ++b) {
        const std::string base = "blocks." + std::to_string(b) + ".";
        push(p, base + "attn.wq", "attention.q", normal_init(rng, {C, C}, std_dev));
        push(p, base + "attn.bq", "attention.q", Array::zeros({C}));
        push(p, base + "attn.wk", "attention.k", normal_init(rng, {C, C}, std_dev));
        push(p, base + "attn.bk", "attention.k", Array::zeros({C}));
        push(p, base + "attn.wv", "attention.v", normal_init(rng, {C, C}, std_dev));
        push(p, base + "attn.bv", "attention.v", Array::zeros({C}));
        push(p, base + "attn.wo", "attention.out", normal_init(rng, {C, C}, std_dev));
        push(p, base + "attn.bo", "attention.out", Array::zeros({C}));
        push(p, base + "mlp.w1", "mlp.in", normal_init(rng, {C, config.mlp_hidden()}, std_dev));
        push(p, base + "mlp.b1", "mlp.in", Array::zeros({config.mlp_hidden()}));
        push(p, base + "mlp.w2", "mlp.out", normal_init(rng, {config.mlp_hidden(), C}, std_dev));
        push(p, base + "mlp.b2", "mlp.out", Array::zeros({C}));
        push(p, base + "mod.w", "modulation", normal_init(rng, {D, 4 * C}, cond_std));
        push(p, base + "mod.b", "modulation", Array::zeros({4 * C}));
    }
    push(p, "head.w", "output_head", Array::zeros({C, config.feature_out()}));
    push(p, "head.b", "output_head", Array::zeros({config.feature_out()}));
    return p;
}

TrainStrategy parse_strategy(const std::string& s) {
    if (s == "full") return TrainStrategy::full;
    if (s == "attention_only") return TrainStrategy::attention_only;
    if (s == "single_blocks") return TrainStrategy::single_blocks;
    throw std::invalid_argument("unknown training strategy '" + s + "'");
}

std::string to_string(TrainStrategy s) {
    switch (s) {
        case TrainStrategy::full: return "full";
        case TrainStrategy::attention_only: return "attention_only";
        default: return "single_blocks";
    }
}

void select_trainable(ModelParams& params, TrainStrategy strategy) {
    const int half_start = params.config.block_count / 2;
    for (TensorInfo& t : params.tensors) {
        switch (strategy) {
            case TrainStrategy::full: t.trainable = true; break;
            case TrainStrategy::attention_only:
                t.trainable = t.label.rfind("attention.", 0) == 0;
                break;
            case TrainStrategy::single_blocks: {
                bool in_upper_half = false;
                if (t.name.rfind("blocks.", 0) == 0) {
                    const int idx = std::stoi(t.name.substr(7, t.name.find('.', 7) - 7));
                    in_upper_half = idx >= half_start;
                }
                t.trainable = in_upper_half;
                break;
            }
        }
    }
}

const Array& AttnCapture::at(int block_idx, int head_idx) const {
    if (block >= 0 && block_idx != block) throw std::invalid_argument("attn capture: block not recorded");
    const int slot = (block >= 0 ? 0 : block_idx) * heads + head_idx;
    return probs.at(static_cast<size_t>(slot));
}

ForwardResult forward(const ModelParams& params, const TokenSequence& seq, const TaskToken& tau, float t,
                      std::optional<float> lambda_override, Tape* tape, AttnCapture* capture,
                      const Array* z_t_override) {
    const ModelConfig& cfg = params.config;
    if (t < 0.0f || t > 1.0f) throw std::invalid_argument("forward: t must lie in [0, 1]");
    if (seq.feature_dim() != cfg.feature_in())
        throw std::invalid_argument("forward: sequence feature width does not match the model config");
    if (seq.n_max > cfg.n_max) throw std::invalid_argument("forward: sequence n_max exceeds the model capacity");
    if (lambda_override && !(*lambda_override > 0.0f))
        throw std::invalid_argument("forward: lambda override must be positive");

    const int C = cfg.token_dim;
    const int H = cfg.head_count;
    const int d = cfg.head_dim;
    const float lambda = lambda_override ? *lambda_override : cfg.base_temperature();

    const Array& zt_in = z_t_override ? *z_t_override : seq.z_t;
    if (!zt_in.same_shape(seq.z_t)) throw std::invalid_argument("forward: z_t override shape mismatch");

    Array grid = concat_channels(tape, {zt_in, seq.z_c, seq.m_c});
    Array feats = patchify(tape, grid, seq.patch);  // [n_real, F_in]
    Array x = add_bias(tape, matmul(tape, feats, params.value("token_embed.w")), params.value("token_embed.b"));

    Array sin_t = timestep_embedding(t, cfg.conditioning_dim);
    Array cond = add_bias(tape, matmul(tape, sin_t, params.value("cond.time.w")), params.value("cond.time.b"));
    cond = add(tape, cond, take_row(tape, params.value("cond.mode"), tau.mode == TaskMode::on ? 0 : 1));
    cond = add(tape, cond, take_row(tape, params.value("cond.category"), static_cast<int>(tau.category)));

    if (capture) {
        capture->heads = H;
        capture->blocks = cfg.block_count;
        capture->n = seq.n_real;
        capture->probs.clear();
    }

    for (int b = 0; b < cfg.block_count; ++b) {
        const std::string base = "blocks." + std::to_string(b) + ".";
        Array mv = add_bias(tape, matmul(tape, cond, params.value(base + "mod.w")), params.value(base + "mod.b"));
        Array s1 = slice_cols(tape, mv, 0, C);
        Array h1 = slice_cols(tape, mv, C, C);
        Array s2 = slice_cols(tape, mv, 2 * C, C);
        Array h2 = slice_cols(tape, mv, 3 * C, C);

        Array a_in = add_bias(tape, rowwise_mul(tape, layer_norm(tape, x), add_scalar(tape, s1, 1.0f)), h1);
        Array q = add_bias(tape, matmul(tape, a_in, params.value(base + "attn.wq")), params.value(base + "attn.bq"));
        Array k = add_bias(tape, matmul(tape, a_in, params.value(base + "attn.wk")), params.value(base + "attn.bk"));
        Array v = add_bias(tape, matmul(tape, a_in, params.value(base + "attn.wv")), params.value(base + "attn.bv"));

        std::vector<Array> heads;
        heads.reserve(static_cast<size_t>(H));
        for (int hh = 0; hh < H; ++hh) {
            Array qh = rope_apply(tape, slice_cols(tape, q, hh * d, d), seq.positions);
            Array kh = rope_apply(tape, slice_cols(tape, k, hh * d, d), seq.positions);
            Array vh = slice_cols(tape, v, hh * d, d);
            Array probs = softmax_scaled(tape, matmul_nt(tape, qh, kh), lambda);
            if (capture && (capture->block < 0 || capture->block == b)) capture->probs.push_back(probs.clone());
            heads.push_back(matmul(tape, probs, vh));
        }
        Array attn =
            add_bias(tape, matmul(tape, concat_cols(tape, heads), params.value(base + "attn.wo")), params.value(base + "attn.bo"));
        x = add(tape, x, attn);

        Array m_in = add_bias(tape, rowwise_mul(tape, layer_norm(tape, x), add_scalar(tape, s2, 1.0f)), h2);
        Array hmid = gelu(tape, add_bias(tape, matmul(tape, m_in, params.value(base + "mlp.w1")), params.value(base + "mlp.b1")));
        Array mout = add_bias(tape, matmul(tape, hmid, params.value(base + "mlp.w2")), params.value(base + "mlp.b2"));
        x = add(tape, x, mout);
    }

    Array y = add_bias(tape, matmul(tape, layer_norm(tape, x), params.value("head.w")), params.value("head.b"));

    ForwardResult out;
    out.tokens_compact = y;
    out.tokens_padded = Array::zeros({seq.n_max, cfg.feature_out()});
    for (int i = 0; i < seq.n_real; ++i) {
        const float* src = y.data() + static_cast<int64_t>(i) * cfg.feature_out();
        float* dst = out.tokens_padded.data() + static_cast<int64_t>(i) * cfg.feature_out();
        std::memcpy(dst, src, sizeof(float) * static_cast<size_t>(cfg.feature_out()));
    }
    out.velocity = LatentGrid(seq.grid_h, seq.grid_w, cfg.z_channels(),
                              unpatchify(tape, y, seq.grid_h, seq.grid_w, cfg.z_channels(), seq.patch));
    return out;
}

std::vector<int> watch_trainable(Tape& tape, ModelParams& params) {
    std::vector<int> watched;
    for (size_t i = 0; i < params.tensors.size(); ++i) {
        if (params.tensors[i].trainable) {
            params.tensors[i].value = tape.watch(params.tensors[i].value);
            watched.push_back(static_cast<int>(i));
        }
    }
    return watched;
}

void clear_tape_tags(ModelParams& params) {
    for (TensorInfo& t : params.tensors) t.value.node = -1;
}

namespace {

constexpr char kMagic[8] = {'V', 'T', 'O', 'N', 'C', 'K', 'P', 'T'};

json config_to_json(const ModelConfig& c) {
    return json{{"token_dim", c.token_dim},     {"head_count", c.head_count},
                {"head_dim", c.head_dim},       {"block_count", c.block_count},
                {"patch", c.patch},             {"codec_factor", c.codec_factor},
                {"n_max", c.n_max},             {"conditioning_dim", c.conditioning_dim}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.token_dim = j.at("token_dim").get<int>();
    c.head_count = j.at("head_count").get<int>();
    c.head_dim = j.at("head_dim").get<int>();
    c.block_count = j.at("block_count").get<int>();
    c.patch = j.at("patch").get<int>();
    c.codec_factor = j.at("codec_factor").get<int>();
    c.n_max = j.at("n_max").get<int>();
    c.conditioning_dim = j.at("conditioning_dim").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    json manifest;
    manifest["format"] = "vton-checkpoint-v1";
    manifest["config"] = config_to_json(params.config);
    manifest["n_train_tokens"] = params.n_train_tokens;
    json tensors = json::array();
    uint64_t offset = 0;
    for (const TensorInfo& t : params.tensors) {
        const uint64_t nbytes = static_cast<uint64_t>(t.value.size()) * sizeof(float);
        tensors.push_back(json{{"name", t.name},
                               {"label", t.label},
                               {"trainable", t.trainable},
                               {"shape", t.value.shape()},
                               {"offset", offset},
                               {"nbytes", nbytes}});
        offset += nbytes;
    }
    manifest["tensors"] = std::move(tensors);

    const std::string text = manifest.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    const uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const TensorInfo& t : params.tensors) {
        out.write(reinterpret_cast<const char*>(t.value.data()),
                  static_cast<std::streamsize>(t.value.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("load_checkpoint: truncated manifest in " + path);
    json manifest = json::parse(text);

    ModelParams params;
    params.config = config_from_json(manifest.at("config"));
    params.config.validate();
    params.n_train_tokens = manifest.at("n_train_tokens").get<int64_t>();
    for (const json& tj : manifest.at("tensors")) {
        TensorInfo t;
        t.name = tj.at("name").get<std::string>();
        t.label = tj.at("label").get<std::string>();
        t.trainable = tj.at("trainable").get<bool>();
        std::vector<int> shape = tj.at("shape").get<std::vector<int>>();
        t.value = Array(shape);
        in.read(reinterpret_cast<char*>(t.value.data()),
                static_cast<std::streamsize>(t.value.size() * sizeof(float)));
        if (!in) throw std::runtime_error("load_checkpoint: truncated payload in " + path);
        params.tensors.push_back(std::move(t));
    }
    return params;
}

}  // namespace vton
