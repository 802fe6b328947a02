#include "vton/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "vton/rng.hpp"
#include "vton/trainer.hpp"

namespace vton {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string pair_stem(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pair_%04d", index);
    return buf;
}

Image derive_tight_mask(const Image& garment) {
    // garments sit on a white background
    Image tight(garment.h, garment.w, 1, 0.0f);
    for (int y = 0; y < garment.h; ++y) {
        for (int x = 0; x < garment.w; ++x) {
            const bool white = garment.at(y, x, 0) > 0.95f && garment.at(y, x, 1) > 0.95f && garment.at(y, x, 2) > 0.95f;
            if (!white) tight.at(y, x, 0) = 1.0f;
        }
    }
    return tight;
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void write_manifest(const std::string& command, const RunConfig& cfg, const std::string& out_dir) {
    write_text_file((fs::path(out_dir) / "manifest.json").string(), make_manifest(command, cfg).dump(2) + "\n");
}

json psnr_json(double psnr) {
    if (std::isfinite(psnr)) return psnr;
    return nullptr;  // sentinel for an exact match
}

}  // namespace

std::vector<SamplePair> resolve_dataset(const RunConfig& cfg) {
    if (cfg.data_dir.empty()) {
        cfg.dataset.validate(cfg.model.codec_factor * cfg.model.patch);
        return generate_dataset(cfg.dataset);
    }
    std::vector<SamplePair> pairs;
    const auto entries = load_pair_dir(cfg.data_dir);
    for (size_t i = 0; i < entries.size(); ++i) {
        LoadedPair loaded = load_entry(entries[i]);
        if (!loaded.garment.same_dims(loaded.person))
            throw std::runtime_error("data_dir pair " + entries[i].stem + ": image dims differ");
        SamplePair pair;
        pair.garment = std::move(loaded.garment);
        pair.person = std::move(loaded.person);
        pair.person_mask = loaded.mask ? *loaded.mask : Image(pair.garment.h, pair.garment.w, 1, 0.0f);
        pair.garment_tight = derive_tight_mask(pair.garment);
        pair.category = GarmentCategory::upper;
        pair.aspect_label = std::to_string(pair.garment.h) + "x" + std::to_string(pair.garment.w);
        pair.seed = hash_combine(0x64697270ull, i);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::vector<const SamplePair*> validation_slice(const std::vector<SamplePair>& all, int val_count) {
    std::vector<const SamplePair*> out;
    const int n = static_cast<int>(all.size());
    const int start = std::max(0, n - val_count);
    for (int i = start; i < n; ++i) out.push_back(&all[static_cast<size_t>(i)]);
    return out;
}

PairEvalResult eval_pair(const ModelParams& params, const SamplePair& pair, TaskMode mode,
                         const NoiseSchedule& schedule, uint64_t seed, bool temp_scale,
                         const TemperatureParams& temp) {
    SampleInputs inputs;
    inputs.garment = pair.garment;
    inputs.person = pair.person;
    inputs.task = TaskToken{mode, pair.category};
    inputs.mask = build_mask(inputs.task, &pair.person_mask);
    inputs.garment_tight = pair.garment_tight;

    SampleOptions options;
    options.seed = seed;
    options.temp_scale = temp_scale;
    options.temp = temp;
    Canvas out = sample(params, inputs, schedule, options);

    Canvas gt = concat_pair(pair.garment, pair.person);
    Image mask_img(inputs.mask.h, inputs.mask.w, 1);
    for (int y = 0; y < mask_img.h; ++y)
        for (int x = 0; x < mask_img.w; ++x) mask_img.at(y, x, 0) = inputs.mask.at(y, x);

    PairEvalResult result;
    const Image generated = mode == TaskMode::on ? crop_person_half(out) : crop_garment_half(out);
    const Image& reference = mode == TaskMode::on ? pair.person : pair.garment;
    result.ssim = ssim(generated, reference);
    const MaskedError err = masked_error(out.img, gt.img, mask_img);
    result.mse = err.mse;
    result.psnr = err.psnr;
    return result;
}

LocalizationResult localization_score(const ModelParams& params, const SamplePair& pair, int max_queries,
                                      float t_eval, uint64_t seed, int block) {
    const ModelConfig& cfg = params.config;
    const int ps = cfg.codec_factor * cfg.patch;  // pixels per token side
    Canvas gt = concat_pair(pair.garment, pair.person);
    TaskToken task{TaskMode::on, pair.category};
    MaskCanvas mask = build_mask(task, &pair.person_mask);
    LatentGrid z0 = encode_latent(gt, cfg.codec_factor);
    LatentGrid z_c = encode_latent(apply_mask(gt, mask), cfg.codec_factor);
    LatentGrid m_c = downsample_mask(mask, cfg.codec_factor);

    Rng rng(hash_combine(seed, 0x6c6f6332ull));
    Array z1(z0.data.shape());
    for (int64_t i = 0; i < z1.size(); ++i) z1.at(i) = rng.normal();
    Array z_t = interpolate(z0.data, z1, t_eval);
    TokenSequence seq = tokenize(LatentGrid(z0.h, z0.w, z0.c, z_t), z_c, m_c, cfg.patch, cfg.n_max);

    AttnCapture capture;
    capture.block = block < 0 ? cfg.block_count - 1 : block;
    forward(params, seq, task, t_eval, std::nullopt, nullptr, &capture);

    const int rows = seq.rows, cols = seq.cols;
    const int w = pair.garment.w;

    // oracle region per person-half token: source garment tokens of its pixels
    std::vector<int> eligible;
    std::vector<std::vector<int>> regions(static_cast<size_t>(rows * cols));
    for (int r = 0; r < rows; ++r) {
        for (int c = cols / 2; c < cols; ++c) {
            const int id = r * cols + c;
            if (!seq.token_masked[static_cast<size_t>(id)]) continue;
            std::set<int> region;
            for (int py = r * ps; py < (r + 1) * ps; ++py) {
                for (int px = c * ps; px < (c + 1) * ps; ++px) {
                    const int local_x = px - w;  // person-half coords
                    if (local_x < 0) continue;
                    const int sy = pair.corr_src_y(py, local_x);
                    const int sx = pair.corr_src_x(py, local_x);
                    if (sy < 0) continue;
                    region.insert((sy / ps) * cols + (sx / ps));
                }
            }
            if (region.empty()) continue;
            regions[static_cast<size_t>(id)].assign(region.begin(), region.end());
            eligible.push_back(id);
        }
    }

    LocalizationResult result;
    if (eligible.empty()) return result;
    // seeded selection
    for (size_t i = eligible.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
        std::swap(eligible[i - 1], eligible[j]);
    }
    const int n_queries = std::min<int>(max_queries, static_cast<int>(eligible.size()));
    const int n = seq.n_real;
    for (int qi = 0; qi < n_queries; ++qi) {
        const int query = eligible[static_cast<size_t>(qi)];
        std::vector<float> row(static_cast<size_t>(n), 0.0f);
        for (int h = 0; h < capture.heads; ++h) {
            const Array& probs = capture.probs[static_cast<size_t>(h)];
            const float* pr = probs.data() + static_cast<int64_t>(query) * n;
            for (int kk = 0; kk < n; ++kk) row[static_cast<size_t>(kk)] += pr[kk] / static_cast<float>(capture.heads);
        }
        result.score += attn_localization(row, regions[static_cast<size_t>(query)], rows, cols);
        result.uniform += uniform_localization_baseline(regions[static_cast<size_t>(query)], rows, cols);
        ++result.queries;
    }
    result.score /= result.queries;
    result.uniform /= result.queries;
    return result;
}

int run_gen_data(const RunConfig& cfg, const std::string& out_dir) {
    cfg.dataset.validate(cfg.model.codec_factor * cfg.model.patch);
    ensure_dir(out_dir);
    const auto pairs = generate_dataset(cfg.dataset);
    for (size_t i = 0; i < pairs.size(); ++i) {
        const std::string stem = (fs::path(out_dir) / pair_stem(static_cast<int>(i))).string();
        save_png(stem + ".garment.png", pairs[i].garment);
        save_png(stem + ".person.png", pairs[i].person);
        save_png(stem + ".mask.png", pairs[i].person_mask);
    }
    write_text_file((fs::path(out_dir) / "dataset.json").string(),
                    run_config_to_json(cfg)["dataset"].dump(2) + "\n");
    write_manifest("gen-data", cfg, out_dir);
    std::cout << "gen-data: wrote " << pairs.size() << " pairs to " << out_dir << "\n";
    return 0;
}

int run_train(const RunConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    const auto pairs = resolve_dataset(cfg);
    const int val = std::min<int>(cfg.train.val_count, static_cast<int>(pairs.size()) - 1);
    std::vector<SamplePair> train_pairs(pairs.begin(), pairs.end() - val);

    ModelParams params = init_params(cfg.model, cfg.train.seed);
    std::ofstream log((fs::path(out_dir) / "loss.jsonl").string(), std::ios::binary | std::ios::trunc);
    TrainResult result = train_model(std::move(params), train_pairs, cfg.train, cfg.optimizer, &log);

    save_checkpoint(result.initial, (fs::path(out_dir) / "init.ckpt").string());
    save_checkpoint(result.params, (fs::path(out_dir) / "checkpoint.ckpt").string());
    write_manifest("train", cfg, out_dir);
    const double final_loss = result.logs.empty() ? 0.0 : result.logs.back().loss;
    std::cout << "train: " << cfg.train.steps << " steps, final loss " << final_loss << ", checkpoint in " << out_dir
              << "\n";
    return 0;
}

int run_sample(const RunConfig& cfg, const SampleArgs& args) {
    ensure_dir(args.out_dir);
    ModelParams params = load_checkpoint(args.checkpoint);

    SampleInputs inputs;
    if (!args.garment.empty() || !args.person.empty()) {
        if (args.garment.empty() || args.person.empty())
            throw std::invalid_argument("sample: both --garment and --person are required for file inputs");
        inputs.garment = load_png(args.garment);
        inputs.person = load_png(args.person);
        auto category = parse_category(args.category);
        if (!category) throw std::invalid_argument("sample: unknown category '" + args.category + "'");
        inputs.task = TaskToken{args.mode, *category};
        Image mask_img;
        if (!args.mask.empty()) {
            mask_img = load_png(args.mask);
            if (mask_img.c != 1) throw std::invalid_argument("sample: mask must be a grayscale PNG");
            for (float& v : mask_img.px) v = v > 0.5f ? 1.0f : 0.0f;
        } else if (args.mode == TaskMode::on || args.self_correct) {
            throw std::invalid_argument("sample: try-on requires --mask");
        } else {
            mask_img = Image(inputs.garment.h, inputs.garment.w, 1, 0.0f);
        }
        inputs.mask = build_mask(inputs.task, &mask_img);
        inputs.garment_tight = derive_tight_mask(inputs.garment);
    } else {
        const auto pairs = resolve_dataset(cfg);
        if (args.index < 0 || args.index >= static_cast<int>(pairs.size()))
            throw std::invalid_argument("sample: pair index out of range");
        const SamplePair& pair = pairs[static_cast<size_t>(args.index)];
        inputs.garment = pair.garment;
        inputs.person = pair.person;
        inputs.task = TaskToken{args.mode, pair.category};
        inputs.mask = build_mask(inputs.task, &pair.person_mask);
        inputs.garment_tight = pair.garment_tight;
    }

    const NoiseSchedule schedule = NoiseSchedule::linear(cfg.schedule_steps);
    SampleOptions options;
    options.seed = cfg.sample.seed;
    options.temp_scale = cfg.sample.temp_scale;
    options.temp = cfg.temperature;
    options.temp.n_train = params.n_train_tokens;

    std::ofstream trace;
    if (cfg.sample.trace) {
        trace.open((fs::path(args.out_dir) / "trace.jsonl").string(), std::ios::binary | std::ios::trunc);
        options.trace = &trace;
    }

    Canvas out;
    if (args.self_correct) {
        std::ofstream corr_log((fs::path(args.out_dir) / "corrections.jsonl").string(),
                               std::ios::binary | std::ios::trunc);
        SampleOptions sc_options = options;
        sc_options.trace = &corr_log;
        SelfCorrectResult result = self_corrective_sample(params, inputs, cfg.correction, schedule, sc_options);
        out = result.canvas;
    } else {
        out = sample(params, inputs, schedule, options);
    }

    save_png((fs::path(args.out_dir) / "sample.png").string(), out.img);
    const Image generated = args.mode == TaskMode::on ? crop_person_half(out) : crop_garment_half(out);
    save_png((fs::path(args.out_dir) / "generated.png").string(), generated);
    write_manifest(args.self_correct ? "self-correct" : (args.mode == TaskMode::on ? "sample" : "tryoff"), cfg,
                   args.out_dir);
    std::cout << (args.self_correct ? "self-correct" : "sample") << ": wrote " << args.out_dir << "/sample.png\n";
    return 0;
}

int run_attn_map(const RunConfig& cfg, const AttnMapArgs& args) {
    ensure_dir(args.out_dir);
    ModelParams params = load_checkpoint(args.checkpoint);
    const auto pairs = resolve_dataset(cfg);
    if (args.index < 0 || args.index >= static_cast<int>(pairs.size()))
        throw std::invalid_argument("attn-map: pair index out of range");
    const SamplePair& pair = pairs[static_cast<size_t>(args.index)];
    const ModelConfig& mc = params.config;
    const int ps = mc.codec_factor * mc.patch;

    Canvas gt = concat_pair(pair.garment, pair.person);
    TaskToken task{TaskMode::on, pair.category};
    MaskCanvas mask = build_mask(task, &pair.person_mask);
    LatentGrid z0 = encode_latent(gt, mc.codec_factor);
    LatentGrid z_c = encode_latent(apply_mask(gt, mask), mc.codec_factor);
    LatentGrid m_cg = downsample_mask(mask, mc.codec_factor);
    Rng rng(hash_combine(cfg.sample.seed, 0x61747433ull));
    Array z1(z0.data.shape());
    for (int64_t i = 0; i < z1.size(); ++i) z1.at(i) = rng.normal();
    const float t_eval = static_cast<float>(cfg.eval.localization_t);
    Array z_t = interpolate(z0.data, z1, t_eval);
    TokenSequence seq = tokenize(LatentGrid(z0.h, z0.w, z0.c, z_t), z_c, m_cg, mc.patch, mc.n_max);

    if (args.query_row < 0 || args.query_row >= pair.person.h || args.query_col < 0 ||
        args.query_col >= pair.person.w)
        throw std::invalid_argument("attn-map: query coordinates outside the person image");
    if (pair.person_mask.at(args.query_row, args.query_col, 0) <= 0.0f)
        throw std::invalid_argument("attn-map: query lies outside the masked region");
    const int qr = args.query_row / ps;
    const int qc = (pair.garment.w + args.query_col) / ps;
    const int query = qr * seq.cols + qc;

    AttnCapture capture;
    capture.block = args.block;
    forward(params, seq, task, t_eval, std::nullopt, nullptr, &capture);

    // grayscale canvas with the query patch highlighted
    Image canvas_gray(gt.img.h, gt.img.w, 1);
    for (int y = 0; y < gt.img.h; ++y)
        for (int x = 0; x < gt.img.w; ++x)
            canvas_gray.at(y, x, 0) =
                0.299f * gt.img.at(y, x, 0) + 0.587f * gt.img.at(y, x, 1) + 0.114f * gt.img.at(y, x, 2);
    for (int y = qr * ps; y < (qr + 1) * ps; ++y)
        for (int x = qc * ps; x < (qc + 1) * ps; ++x) canvas_gray.at(y, x, 0) = 1.0f;

    const int blocks_rendered = args.block < 0 ? mc.block_count : 1;
    for (int bi = 0; bi < blocks_rendered; ++bi) {
        const int block_idx = args.block < 0 ? bi : args.block;
        std::vector<float> row(static_cast<size_t>(seq.n_real), 0.0f);
        if (args.head < 0) {
            for (int h = 0; h < capture.heads; ++h) {
                const Array& probs = capture.at(block_idx, h);
                const float* pr = probs.data() + static_cast<int64_t>(query) * seq.n_real;
                for (int kk = 0; kk < seq.n_real; ++kk) row[static_cast<size_t>(kk)] += pr[kk] / capture.heads;
            }
        } else {
            const Array& probs = capture.at(block_idx, args.head);
            const float* pr = probs.data() + static_cast<int64_t>(query) * seq.n_real;
            for (int kk = 0; kk < seq.n_real; ++kk) row[static_cast<size_t>(kk)] = pr[kk];
        }
        float peak = 0.0f;
        for (float v : row) peak = std::max(peak, v);
        if (peak <= 0.0f) peak = 1.0f;

        Image heat(gt.img.h, gt.img.w, 1, 0.0f);
        for (int r = 0; r < seq.rows; ++r)
            for (int c = 0; c < seq.cols; ++c) {
                const float v = row[static_cast<size_t>(r * seq.cols + c)] / peak;
                for (int y = r * ps; y < (r + 1) * ps; ++y)
                    for (int x = c * ps; x < (c + 1) * ps; ++x) heat.at(y, x, 0) = v;
            }
        Image side(gt.img.h, gt.img.w * 2, 1);
        for (int y = 0; y < side.h; ++y) {
            for (int x = 0; x < gt.img.w; ++x) {
                side.at(y, x, 0) = canvas_gray.at(y, x, 0);
                side.at(y, x + gt.img.w, 0) = heat.at(y, x, 0);
            }
        }
        std::string name = "attn_block" + std::to_string(block_idx);
        if (args.head >= 0) name += "_head" + std::to_string(args.head);
        save_png((fs::path(args.out_dir) / (name + ".png")).string(), side);
    }
    write_manifest("attn-map", cfg, args.out_dir);
    std::cout << "attn-map: wrote " << blocks_rendered << " heatmaps to " << args.out_dir << "\n";
    return 0;
}

int run_eval(const RunConfig& cfg, const EvalArgs& args) {
    ensure_dir(args.out_dir);
    ModelParams params = load_checkpoint(args.checkpoint);
    const auto pairs = resolve_dataset(cfg);
    const int count = args.count > 0 ? args.count : cfg.eval.count;
    const auto val = validation_slice(pairs, count);
    if (val.empty()) throw std::invalid_argument("eval: no validation pairs");
    const NoiseSchedule schedule = NoiseSchedule::linear(cfg.schedule_steps);

    std::vector<TaskMode> modes;
    if (args.task == "on") {
        modes = {TaskMode::on};
    } else if (args.task == "off") {
        modes = {TaskMode::off};
    } else if (args.task == "both") {
        modes = {TaskMode::on, TaskMode::off};
    } else {
        throw std::invalid_argument("eval: task must be on, off or both");
    }

    TemperatureParams temp = cfg.temperature;
    temp.n_train = params.n_train_tokens;

    json samples = json::array();
    json aggregate;
    for (TaskMode mode : modes) {
        double ssim_sum = 0.0, mse_sum = 0.0, psnr_sum = 0.0;
        int psnr_count = 0;
        double loc_sum = 0.0, loc_uniform = 0.0;
        int loc_queries = 0;
        for (size_t i = 0; i < val.size(); ++i) {
            const SamplePair& pair = *val[i];
            const uint64_t seed = hash_combine(cfg.sample.seed, hash_combine(0x6576616cull, i));
            PairEvalResult r = eval_pair(params, pair, mode, schedule, seed, args.temp_scale, temp);
            ssim_sum += r.ssim;
            mse_sum += r.mse;
            if (std::isfinite(r.psnr)) {
                psnr_sum += r.psnr;
                ++psnr_count;
            }
            json sj{{"pair", static_cast<int>(pairs.size() - val.size() + i)},
                    {"mode", to_string(mode)},
                    {"ssim", r.ssim},
                    {"masked_mse", r.mse},
                    {"psnr", psnr_json(r.psnr)}};
            const bool synthetic = !pair.corr_y.empty();
            if (mode == TaskMode::on && synthetic) {
                const int per_pair = std::max(1, cfg.eval.localization_queries / static_cast<int>(val.size()));
                LocalizationResult loc = localization_score(params, pair, per_pair,
                                                            static_cast<float>(cfg.eval.localization_t), seed);
                if (loc.queries > 0) {
                    loc_sum += loc.score * loc.queries;
                    loc_uniform += loc.uniform * loc.queries;
                    loc_queries += loc.queries;
                    sj["attn_localization"] = loc.score;
                }
            }
            samples.push_back(sj);
        }
        json agg{{"ssim", ssim_sum / static_cast<double>(val.size())},
                 {"masked_mse", mse_sum / static_cast<double>(val.size())},
                 {"psnr", psnr_count > 0 ? json(psnr_sum / psnr_count) : json(nullptr)},
                 {"count", static_cast<int>(val.size())}};
        if (loc_queries > 0) {
            agg["attn_localization"] = loc_sum / loc_queries;
            agg["attn_localization_uniform"] = loc_uniform / loc_queries;
            agg["attn_localization_queries"] = loc_queries;
        }
        aggregate[to_string(mode)] = agg;
    }

    json report{{"samples", samples}, {"aggregate", aggregate}};
    write_text_file((fs::path(args.out_dir) / "report.json").string(), report.dump(2) + "\n");
    write_manifest("eval", cfg, args.out_dir);
    for (TaskMode mode : modes) {
        const json& agg = aggregate[to_string(mode)];
        std::cout << "eval[" << to_string(mode) << "]: ssim " << agg["ssim"].get<double>() << ", masked_mse "
                  << agg["masked_mse"].get<double>() << ", n " << agg["count"].get<int>() << "\n";
    }
    return 0;
}

int run_layer_report(const std::string& before, const std::string& after, const std::string& out_dir) {
    ensure_dir(out_dir);
    ModelParams a = load_checkpoint(before);
    ModelParams b = load_checkpoint(after);
    LayerUpdateReport report = layer_update_report(a, b);
    json deltas = json::array();
    for (const LayerDelta& d : report.deltas) deltas.push_back({{"label", d.label}, {"delta", d.delta}});
    json j{{"deltas", deltas}, {"excluded", report.excluded}};
    write_text_file((fs::path(out_dir) / "layer_report.json").string(), j.dump(2) + "\n");
    for (const LayerDelta& d : report.deltas) std::cout << "delta[" << d.label << "] = " << d.delta << "\n";
    return 0;
}

}  // namespace vton
