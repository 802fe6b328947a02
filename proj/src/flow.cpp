#include "vton/flow.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "vton/rng.hpp"

namespace vton {

using nlohmann::json;

NoiseSchedule NoiseSchedule::linear(int steps) {
    if (steps <= 0) throw std::invalid_argument("schedule: step count must be positive");
    NoiseSchedule s;
    s.steps = steps;
    s.sigmas.resize(static_cast<size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) s.sigmas[static_cast<size_t>(k)] = static_cast<float>(k) / static_cast<float>(steps);
    return s;
}

Array interpolate(const Array& z0, const Array& z1, float t) {
    if (!z0.same_shape(z1)) throw std::invalid_argument("interpolate: shape mismatch");
    if (t < 0.0f || t > 1.0f) throw std::invalid_argument("interpolate: t must lie in [0, 1]");
    Array out(z0.shape());
    const float a = 1.0f - t;
    for (int64_t i = 0; i < out.size(); ++i) out.at(i) = a * z0.at(i) + t * z1.at(i);
    return out;
}

Array target_velocity(const Array& z0, const Array& z1) {
    if (!z0.same_shape(z1)) throw std::invalid_argument("target_velocity: shape mismatch");
    return sub(nullptr, z1, z0);
}

Array euler_step(const Array& z_t, const Array& v, float sigma_t, float sigma_prev) {
    if (!z_t.same_shape(v)) throw std::invalid_argument("euler_step: shape mismatch");
    Array out(z_t.shape());
    const float dt = sigma_prev - sigma_t;
    for (int64_t i = 0; i < out.size(); ++i) out.at(i) = z_t.at(i) + dt * v.at(i);
    return out;
}

Array predict_x0(Tape* tape, const Array& z_t, const Array& v, float sigma_t) {
    if (!z_t.same_shape(v)) throw std::invalid_argument("predict_x0: shape mismatch");
    if (sigma_t < 0.0f || sigma_t > 1.0f) throw std::invalid_argument("predict_x0: sigma must lie in [0, 1]");
    return sub(tape, z_t, scale(tape, v, sigma_t));
}

float temperature(int d, int64_t n_infer, int64_t n_train, int64_t n_mask, int64_t n_garment, double alpha,
                  double beta, double c) {
    if (d < 1) throw std::invalid_argument("temperature: d must be >= 1");
    if (n_infer < 1 || n_mask < 1 || n_garment < 1)
        throw std::invalid_argument("temperature: token counts must be >= 1");
    if (n_train < 2) throw std::invalid_argument("temperature: N_train must be >= 2");
    if (!(alpha > 0.0) || !(beta > 0.0) || !(c > 0.0))
        throw std::invalid_argument("temperature: alpha, beta, c must be positive");
    const double mask_log = std::log(static_cast<double>(n_mask) + c);
    const double garment_log = std::log(beta * static_cast<double>(n_garment) + c);
    if (!(mask_log > 0.0) || !(garment_log > 0.0))
        throw std::invalid_argument("temperature: degenerate logarithms; increase c or the token counts");
    const float base = 1.0f / std::sqrt(static_cast<float>(d));
    const double global = std::sqrt(alpha * std::log(static_cast<double>(n_infer)) /
                                    std::log(static_cast<double>(n_train)));
    const double relative = std::sqrt(mask_log / garment_log);
    return static_cast<float>(static_cast<double>(base) * global * relative);
}

namespace {

Array normal_array(Rng& rng, const std::vector<int>& shape) {
    Array out(shape);
    for (int64_t i = 0; i < out.size(); ++i) out.at(i) = rng.normal();
    return out;
}

// mask channels expanded over the color channels of a z grid, values {0,1}
Array expand_mask_grid(const LatentGrid& m_c, int color_channels) {
    Array w({m_c.h, m_c.w, m_c.c * color_channels});
    for (int64_t cell = 0; cell < static_cast<int64_t>(m_c.h) * m_c.w; ++cell) {
        const float* mc = m_c.data.data() + cell * m_c.c;
        float* wc = w.data() + cell * static_cast<int64_t>(m_c.c) * color_channels;
        for (int k = 0; k < m_c.c; ++k)
            for (int ch = 0; ch < color_channels; ++ch) wc[k * color_channels + ch] = mc[k];
    }
    return w;
}

struct EncodedSample {
    Canvas canvas;
    MaskCanvas mask;
    LatentGrid z0;
    LatentGrid z_c;
    LatentGrid m_c;
};

EncodedSample encode_sample(const SamplePair& pair, const TaskToken& task, bool augment, uint64_t draw_seed,
                            float growth_draw, int codec_factor) {
    EncodedSample s;
    s.canvas = concat_pair(pair.garment, pair.person);
    if (task.mode == TaskMode::on) {
        Image m_on = pair.person_mask;
        if (augment) m_on = augment_mask(m_on, hash_combine(draw_seed, 1), AugmentMode::on);
        s.mask = build_mask(task, &m_on);
    } else if (augment) {
        Image left = augment_mask(pair.garment_tight, hash_combine(draw_seed, 2), AugmentMode::off, growth_draw);
        s.mask = build_mask_off(left);
    } else {
        s.mask = build_mask(task, &pair.person_mask);
    }
    s.z0 = encode_latent(s.canvas, codec_factor);
    s.z_c = encode_latent(apply_mask(s.canvas, s.mask), codec_factor);
    s.m_c = downsample_mask(s.mask, codec_factor);
    return s;
}

}  // namespace

LossInfo training_loss(const ModelParams& params, const std::vector<TrainingExample>& batch, Tape* tape,
                       bool masked_only) {
    if (batch.empty()) throw std::invalid_argument("training_loss: empty batch");
    const ModelConfig& cfg = params.config;
    LossInfo info;
    Array total;
    for (const TrainingExample& ex : batch) {
        if (!ex.pair) throw std::invalid_argument("training_loss: null sample");
        Rng rng(hash_combine(ex.draw_seed, 0x6c6f7373ull));
        const float t = rng.uniform();
        const float growth = rng.uniform();
        EncodedSample enc = encode_sample(*ex.pair, ex.task, ex.augment, ex.draw_seed, growth, cfg.codec_factor);
        Array z1 = normal_array(rng, enc.z0.data.shape());
        Array z_t = interpolate(enc.z0.data, z1, t);

        TokenSequence seq = tokenize(LatentGrid(enc.z0.h, enc.z0.w, enc.z0.c, z_t), enc.z_c, enc.m_c, cfg.patch,
                                     cfg.n_max);
        ForwardResult fwd = forward(params, seq, ex.task, t, std::nullopt, tape);
        Array target = target_velocity(enc.z0.data, z1);
        Array diff = sub(tape, fwd.velocity.data, target);
        Array sq = mul(tape, diff, diff);
        Array sample_loss;
        if (masked_only) {
            Array w = expand_mask_grid(enc.m_c, 3);
            double denom = 0.0;
            for (int64_t i = 0; i < w.size(); ++i) denom += w.at(i);
            if (denom > 0.0) {
                sample_loss = scale(tape, sum_all(tape, mul(tape, sq, w)), static_cast<float>(1.0 / denom));
            } else {
                sample_loss = mean_all(tape, sq);
            }
        } else {
            sample_loss = mean_all(tape, sq);
        }
        const double v = sample_loss.at(0);
        if (ex.task.mode == TaskMode::on) {
            info.loss_on += v;
            ++info.count_on;
        } else {
            info.loss_off += v;
            ++info.count_off;
        }
        total = total.empty() ? sample_loss : add(tape, total, sample_loss);
    }
    info.loss_node = scale(tape, total, 1.0f / static_cast<float>(batch.size()));
    info.loss = info.loss_node.at(0);
    if (info.count_on > 0) info.loss_on /= info.count_on;
    if (info.count_off > 0) info.loss_off /= info.count_off;
    if (!std::isfinite(info.loss)) throw std::runtime_error("training_loss: non-finite loss value");
    return info;
}

namespace {

Canvas composite_output(const Canvas& original, const MaskCanvas& mask, const Canvas& decoded) {
    Canvas out = original;
    out.img.px = original.img.px;
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) {
            if (mask.at(y, x) != 0.0f) {
                for (int ch = 0; ch < 3; ++ch) out.img.at(y, x, ch) = decoded.img.at(y, x, ch);
            }
        }
    }
    quantize_image(out.img);
    return out;
}

std::optional<float> sampling_lambda(const ModelParams& params, const TokenSequence& seq,
                                     const SampleOptions& options) {
    if (!options.temp_scale) return std::nullopt;
    int64_t n_train = options.temp.n_train > 0 ? options.temp.n_train : params.n_train_tokens;
    if (n_train < 2)
        throw std::invalid_argument("temperature scaling requested but no training token count is available");
    return temperature(params.config.head_dim, seq.n_real, n_train, seq.n_mask, seq.n_garment, options.temp.alpha,
                       options.temp.beta, options.temp.c);
}

void write_trace(std::ostream* trace, int step_index, float sigma, const Array& z) {
    if (!trace) return;
    double ss = 0.0;
    for (int64_t i = 0; i < z.size(); ++i) ss += static_cast<double>(z.at(i)) * z.at(i);
    json line{{"step", step_index}, {"sigma", sigma}, {"latent_norm", std::sqrt(ss / static_cast<double>(z.size()))}};
    (*trace) << line.dump() << "\n";
}

}  // namespace

Canvas sample(const ModelParams& params, const SampleInputs& inputs, const NoiseSchedule& schedule,
              const SampleOptions& options) {
    const ModelConfig& cfg = params.config;
    Canvas canvas = concat_pair(inputs.garment, inputs.person);
    Canvas masked = apply_mask(canvas, inputs.mask);
    LatentGrid z_c = encode_latent(masked, cfg.codec_factor);
    LatentGrid m_c = downsample_mask(inputs.mask, cfg.codec_factor);

    Rng noise_rng(hash_combine(options.seed, 0x6e6f6973ull));
    Array z = normal_array(noise_rng, z_c.data.shape());

    TokenSequence seq = tokenize(LatentGrid(z_c.h, z_c.w, z_c.c, z), z_c, m_c, cfg.patch, cfg.n_max);
    const std::optional<float> lambda = sampling_lambda(params, seq, options);

    for (int k = schedule.steps; k >= 1; --k) {
        seq.z_t = z;
        ForwardResult fwd = forward(params, seq, inputs.task, schedule.sigma(k), lambda);
        z = euler_step(z, fwd.velocity.data, schedule.sigma(k), schedule.sigma(k - 1));
        if (!z.all_finite())
            throw std::runtime_error("sample: non-finite latent at step " + std::to_string(schedule.steps - k + 1));
        write_trace(options.trace, schedule.steps - k + 1, schedule.sigma(k), z);
    }
    Canvas decoded = decode_latent(LatentGrid(z_c.h, z_c.w, z_c.c, z), cfg.codec_factor, canvas.split);
    return composite_output(canvas, inputs.mask, decoded);
}

CorrectionMask parse_correction_mask(const std::string& s) {
    if (s == "full_tryoff") return CorrectionMask::full_tryoff;
    if (s == "garment_tight") return CorrectionMask::garment_tight;
    throw std::invalid_argument("unknown correction mask '" + s + "'");
}

std::string to_string(CorrectionMask m) {
    return m == CorrectionMask::full_tryoff ? "full_tryoff" : "garment_tight";
}

void CorrectionPlan::validate() const {
    if (iterations < 1) throw std::invalid_argument("correction plan: iterations must be >= 1");
    if (!(eta0 > 0.0)) throw std::invalid_argument("correction plan: eta0 must be positive");
    for (double f : fractions) {
        if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("correction plan: fractions must lie in (0, 1)");
    }
    if (masks.size() != fractions.size())
        throw std::invalid_argument("correction plan: one mask choice per correction timestep required");
}

std::vector<int> CorrectionPlan::step_indices(int total_steps) const {
    std::vector<int> out;
    out.reserve(fractions.size());
    for (double f : fractions) {
        int idx = static_cast<int>(std::lround(f * total_steps));
        idx = std::max(1, std::min(total_steps, idx));
        out.push_back(idx);
    }
    return out;
}

SelfCorrectResult self_corrective_sample(const ModelParams& params, const SampleInputs& inputs,
                                         const CorrectionPlan& plan, const NoiseSchedule& schedule,
                                         const SampleOptions& options) {
    plan.validate();
    if (inputs.task.mode != TaskMode::on)
        throw std::invalid_argument("self_corrective_sample: defined for the try-on direction");
    const ModelConfig& cfg = params.config;

    Canvas canvas = concat_pair(inputs.garment, inputs.person);
    Canvas masked = apply_mask(canvas, inputs.mask);
    LatentGrid z_c_on = encode_latent(masked, cfg.codec_factor);
    LatentGrid m_c_on = downsample_mask(inputs.mask, cfg.codec_factor);

    Rng noise_rng(hash_combine(options.seed, 0x6e6f6973ull));
    Array z = normal_array(noise_rng, z_c_on.data.shape());

    TokenSequence seq_on = tokenize(LatentGrid(z_c_on.h, z_c_on.w, z_c_on.c, z), z_c_on, m_c_on, cfg.patch, cfg.n_max);
    const std::optional<float> lambda_on = sampling_lambda(params, seq_on, options);

    const std::vector<int> corr_steps = plan.step_indices(schedule.steps);
    for (size_t ci = 0; ci < corr_steps.size(); ++ci) {
        if (plan.masks[ci] == CorrectionMask::garment_tight && !inputs.garment_tight)
            throw std::invalid_argument("self_corrective_sample: garment_tight correction requires the tight mask");
    }

    SelfCorrectResult result;
    TaskToken task_off{TaskMode::off, inputs.task.category};

    for (int k = schedule.steps; k >= 1; --k) {
        const int step_index = schedule.steps - k + 1;
        const float sigma_t = schedule.sigma(k);

        for (size_t ci = 0; ci < corr_steps.size(); ++ci) {
            if (corr_steps[ci] != step_index) continue;

            // intermediate try-on prediction becomes the try-off conditioning
            seq_on.z_t = z;
            ForwardResult on_pass = forward(params, seq_on, inputs.task, sigma_t, lambda_on);
            Array z0_on = predict_x0(nullptr, z, on_pass.velocity.data, sigma_t);

            MaskCanvas corr_mask;
            if (plan.masks[ci] == CorrectionMask::full_tryoff) {
                corr_mask = build_mask(task_off, &inputs.garment);
            } else {
                corr_mask = build_mask_off(*inputs.garment_tight);
            }
            LatentGrid m_c_corr = downsample_mask(corr_mask, cfg.codec_factor);
            Array z_c_off = mask_latent(nullptr, z0_on, m_c_corr, 3);
            Array region = expand_mask_grid(m_c_corr, 3);
            double denom = 0.0;
            for (int64_t i = 0; i < region.size(); ++i) denom += region.at(i);
            if (denom <= 0.0) continue;

            TokenSequence seq_off = tokenize(LatentGrid(m_c_corr.h, m_c_corr.w, z_c_on.c, z),
                                             LatentGrid(m_c_corr.h, m_c_corr.w, z_c_on.c, z_c_off), m_c_corr,
                                             cfg.patch, cfg.n_max);
            const std::optional<float> lambda_off = sampling_lambda(params, seq_off, options);

            auto objective = [&](Tape* tape, const Array& zt) {
                ForwardResult off_pass = forward(params, seq_off, task_off, sigma_t, lambda_off, tape, nullptr, &zt);
                Array z0_off = predict_x0(tape, zt, off_pass.velocity.data, sigma_t);
                Array diff = sub(tape, z0_off, z_c_on.data);
                Array sq = mul(tape, mul(tape, diff, diff), region);
                return scale(tape, sum_all(tape, sq), static_cast<float>(1.0 / denom));
            };

            for (int r = 1; r <= plan.iterations; ++r) {
                Tape tape;
                Array zw = tape.watch(z);
                Array obj_node = objective(&tape, zw);
                const double obj = obj_node.at(0);
                if (!std::isfinite(obj)) {
                    if (options.trace)
                        (*options.trace) << json{{"event", "nonfinite_objective"}, {"step", step_index}, {"iter", r}}
                                                .dump()
                                         << "\n";
                    break;
                }
                Array grad = tape.grad(obj_node, {&zw})[0];
                if (!grad.all_finite()) {
                    if (options.trace)
                        (*options.trace) << json{{"event", "nonfinite_gradient"}, {"step", step_index}, {"iter", r}}
                                                .dump()
                                         << "\n";
                    break;
                }
                // backtracking: halve eta until the objective is non-increasing
                double eta = plan.eta0;
                double obj_after = obj;
                bool accepted = false;
                Array candidate;
                for (int halving = 0; halving < 13; ++halving) {
                    candidate = Array(z.shape());
                    for (int64_t i = 0; i < z.size(); ++i)
                        candidate.at(i) = z.at(i) - static_cast<float>(eta) * grad.at(i);
                    obj_after = objective(nullptr, candidate).at(0);
                    if (std::isfinite(obj_after) && obj_after <= obj) {
                        accepted = true;
                        break;
                    }
                    eta *= 0.5;
                }
                if (accepted) {
                    z = candidate;
                } else {
                    eta = 0.0;
                    obj_after = obj;
                }
                CorrectionTraceEntry entry{step_index, r, obj, obj_after, eta};
                result.corrections.push_back(entry);
                if (options.trace) {
                    (*options.trace) << json{{"step", step_index},
                                             {"iter", r},
                                             {"objective", obj},
                                             {"objective_after", obj_after},
                                             {"eta", eta}}
                                            .dump()
                                     << "\n";
                }
            }
        }

        seq_on.z_t = z;
        ForwardResult fwd = forward(params, seq_on, inputs.task, sigma_t, lambda_on);
        z = euler_step(z, fwd.velocity.data, sigma_t, schedule.sigma(k - 1));
        if (!z.all_finite())
            throw std::runtime_error("self_corrective_sample: non-finite latent at step " + std::to_string(step_index));
        write_trace(options.trace, step_index, sigma_t, z);
    }

    Canvas decoded = decode_latent(LatentGrid(z_c_on.h, z_c_on.w, z_c_on.c, z), cfg.codec_factor, canvas.split);
    result.canvas = composite_output(canvas, inputs.mask, decoded);
    return result;
}

}  // namespace vton
