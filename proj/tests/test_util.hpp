#pragma once

#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vton/array.hpp"
#include "vton/flow.hpp"
#include "vton/layout.hpp"
#include "vton/model.hpp"
#include "vton/rng.hpp"
#include "vton/synthwear.hpp"

namespace vton::testutil {

// training-style layout for one pair: canonical mask, z_t = (1-t) z0 + t z1
// with seeded noise
inline TokenSequence make_seq(const SamplePair& pair, TaskMode mode, float t, uint64_t seed,
                              const ModelConfig& cfg) {
    Canvas canvas = concat_pair(pair.garment, pair.person);
    TaskToken task{mode, pair.category};
    MaskCanvas mask = build_mask(task, &pair.person_mask);
    LatentGrid z0 = encode_latent(canvas, cfg.codec_factor);
    LatentGrid z_c = encode_latent(apply_mask(canvas, mask), cfg.codec_factor);
    LatentGrid m_c = downsample_mask(mask, cfg.codec_factor);
    Rng rng(hash_combine(seed, 0x7365713aull));
    Array z1(z0.data.shape());
    for (int64_t i = 0; i < z1.size(); ++i) z1.at(i) = rng.normal();
    Array z_t = interpolate(z0.data, z1, t);
    return tokenize(LatentGrid(z0.h, z0.w, z0.c, z_t), z_c, m_c, cfg.patch, cfg.n_max);
}

inline ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.token_dim = 16;
    cfg.head_count = 2;
    cfg.head_dim = 8;
    cfg.block_count = 1;
    cfg.patch = 2;
    cfg.codec_factor = 2;
    cfg.n_max = 64;
    cfg.conditioning_dim = 16;
    return cfg;
}

inline Array random_array(std::vector<int> shape, uint64_t seed, float scale = 1.0f) {
    Rng rng(seed);
    Array a(std::move(shape));
    for (int64_t i = 0; i < a.size(); ++i) a.at(i) = scale * rng.normal();
    return a;
}

inline double weighted_sum(const Array& out, const Array& w) {
    double acc = 0.0;
    for (int64_t i = 0; i < out.size(); ++i) acc += static_cast<double>(out.at(i)) * w.at(i);
    return acc;
}

struct GradCheckOptions {
    double rel_tol = 1e-2;
    double abs_floor = 2e-3;
    float step = 1e-3f;
    int probes = 25;
};

// Central finite differences against the tape gradients of a scalar proxy
// L = sum(w .* f(inputs)). Inputs are perturbed in place for the FD side.
inline void check_gradients(const std::string& name,
                            const std::function<Array(Tape*, std::vector<Array>&)>& fn, std::vector<Array> inputs,
                            uint64_t seed, GradCheckOptions opts = {}) {
    Array probe_out = fn(nullptr, inputs);
    Rng wrng(hash_combine(seed, 0x77656967ull));
    Array w(probe_out.shape());
    for (int64_t i = 0; i < w.size(); ++i) w.at(i) = wrng.uniform(-1.0f, 1.0f);

    auto loss_value = [&]() { return weighted_sum(fn(nullptr, inputs), w); };

    Tape tape;
    std::vector<Array> watched;
    watched.reserve(inputs.size());
    for (Array& x : inputs) watched.push_back(tape.watch(x));
    Array out = fn(&tape, watched);
    Array loss = sum_all(&tape, mul(&tape, out, w));
    std::vector<const Array*> wrt;
    for (const Array& x : watched) wrt.push_back(&x);
    std::vector<Array> grads = tape.grad(loss, wrt);

    Rng prng(hash_combine(seed, 0x70726f62ull));
    for (int p = 0; p < opts.probes; ++p) {
        const int ii = prng.uniform_int(0, static_cast<int>(inputs.size()) - 1);
        Array& x = inputs[static_cast<size_t>(ii)];
        const int64_t ci = prng.uniform_int(0, static_cast<int>(x.size()) - 1);
        const float saved = x.at(ci);
        x.at(ci) = saved + opts.step;
        const double lp = loss_value();
        x.at(ci) = saved - opts.step;
        const double lm = loss_value();
        x.at(ci) = saved;
        const double fd = (lp - lm) / (2.0 * static_cast<double>(opts.step));
        const double analytic = grads[static_cast<size_t>(ii)].at(ci);
        const double err = std::abs(analytic - fd);
        const double allowed = std::max(opts.abs_floor, opts.rel_tol * std::max(std::abs(analytic), std::abs(fd)));
        INFO(name, " probe ", p, " input ", ii, " coord ", ci, " analytic ", analytic, " fd ", fd);
        CHECK(err <= allowed);
    }
}

}  // namespace vton::testutil
