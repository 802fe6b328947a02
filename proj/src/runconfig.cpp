#include "vton/runconfig.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace vton {

using nlohmann::json;

const char* kVersionString = "vton-0.1.0";

void RunConfig::validate() const {
    model.validate();
    dataset.validate(model.codec_factor * model.patch);
    train.validate();
    parse_strategy(train.strategy);
    OptimizerConfig::from_preset(optimizer.preset);
    if (schedule_steps <= 0) throw std::invalid_argument("schedule.steps must be positive");
    if (!(temperature.alpha > 0.0) || !(temperature.beta > 0.0) || !(temperature.c > 0.0))
        throw std::invalid_argument("temperature.alpha/beta/c must be positive");
    correction.validate();
    if (eval.count <= 0) throw std::invalid_argument("eval.count must be positive");
    if (eval.localization_queries <= 0) throw std::invalid_argument("eval.localization_queries must be positive");
    if (!(eval.localization_t >= 0.0 && eval.localization_t <= 1.0))
        throw std::invalid_argument("eval.localization_t must lie in [0, 1]");
    if (out_dir.empty()) throw std::invalid_argument("out_dir must not be empty");
}

RunConfig default_run_config() { return RunConfig{}; }

namespace {

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw std::invalid_argument("config." + path + ": object expected");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) {
            throw std::invalid_argument("config: unknown key '" + (path.empty() ? key : path + "." + key) + "'");
        }
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["model"] = {{"token_dim", cfg.model.token_dim},
                  {"head_count", cfg.model.head_count},
                  {"head_dim", cfg.model.head_dim},
                  {"block_count", cfg.model.block_count},
                  {"patch", cfg.model.patch},
                  {"codec_factor", cfg.model.codec_factor},
                  {"n_max", cfg.model.n_max},
                  {"conditioning_dim", cfg.model.conditioning_dim}};
    json sizes = json::array();
    for (const SizeSpec& s : cfg.dataset.sizes)
        sizes.push_back({{"height", s.height}, {"width", s.width}, {"proportion", s.proportion}});
    j["dataset"] = {{"pair_count", cfg.dataset.pair_count},
                    {"seed", cfg.dataset.seed},
                    {"category_mix", {{"upper", cfg.dataset.upper}, {"lower", cfg.dataset.lower}, {"full", cfg.dataset.full}}},
                    {"sizes", sizes}};
    j["data_dir"] = cfg.data_dir;
    j["optimizer"] = {{"preset", cfg.optimizer.preset}, {"lr", cfg.optimizer.lr},
                      {"weight_decay", cfg.optimizer.weight_decay}, {"beta1", cfg.optimizer.beta1},
                      {"beta2", cfg.optimizer.beta2}, {"eps", cfg.optimizer.eps}};
    j["train"] = {{"steps", cfg.train.steps},       {"batch_size", cfg.train.batch_size},
                  {"strategy", cfg.train.strategy}, {"task", cfg.train.task},
                  {"seed", cfg.train.seed},         {"mask_augment", cfg.train.mask_augment},
                  {"loss_masked_only", cfg.train.loss_masked_only}, {"log_every", cfg.train.log_every},
                  {"val_count", cfg.train.val_count}};
    j["schedule"] = {{"steps", cfg.schedule_steps}};
    j["temperature"] = {{"alpha", cfg.temperature.alpha}, {"beta", cfg.temperature.beta}, {"c", cfg.temperature.c}};
    json masks = json::array();
    for (CorrectionMask m : cfg.correction.masks) masks.push_back(to_string(m));
    j["correction"] = {{"fractions", cfg.correction.fractions},
                       {"iterations", cfg.correction.iterations},
                       {"eta0", cfg.correction.eta0},
                       {"masks", masks}};
    j["sample"] = {{"seed", cfg.sample.seed}, {"temp_scale", cfg.sample.temp_scale}, {"trace", cfg.sample.trace}};
    j["eval"] = {{"count", cfg.eval.count},
                 {"localization_queries", cfg.eval.localization_queries},
                 {"localization_t", cfg.eval.localization_t}};
    j["out_dir"] = cfg.out_dir;
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg = default_run_config();
    check_keys(j, "", {"model", "dataset", "data_dir", "optimizer", "train", "schedule", "temperature", "correction",
                       "sample", "eval", "out_dir"});
    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "model",
                   {"token_dim", "head_count", "head_dim", "block_count", "patch", "codec_factor", "n_max",
                    "conditioning_dim"});
        read_field(m, "token_dim", cfg.model.token_dim);
        read_field(m, "head_count", cfg.model.head_count);
        read_field(m, "head_dim", cfg.model.head_dim);
        read_field(m, "block_count", cfg.model.block_count);
        read_field(m, "patch", cfg.model.patch);
        read_field(m, "codec_factor", cfg.model.codec_factor);
        read_field(m, "n_max", cfg.model.n_max);
        read_field(m, "conditioning_dim", cfg.model.conditioning_dim);
    }
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        check_keys(d, "dataset", {"pair_count", "seed", "category_mix", "sizes"});
        read_field(d, "pair_count", cfg.dataset.pair_count);
        read_field(d, "seed", cfg.dataset.seed);
        if (d.contains("category_mix")) {
            const json& mix = d.at("category_mix");
            check_keys(mix, "dataset.category_mix", {"upper", "lower", "full"});
            read_field(mix, "upper", cfg.dataset.upper);
            read_field(mix, "lower", cfg.dataset.lower);
            read_field(mix, "full", cfg.dataset.full);
        }
        if (d.contains("sizes")) {
            cfg.dataset.sizes.clear();
            for (const json& s : d.at("sizes")) {
                check_keys(s, "dataset.sizes[]", {"height", "width", "proportion"});
                SizeSpec spec;
                read_field(s, "height", spec.height);
                read_field(s, "width", spec.width);
                read_field(s, "proportion", spec.proportion);
                cfg.dataset.sizes.push_back(spec);
            }
        }
    }
    read_field(j, "data_dir", cfg.data_dir);
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        check_keys(o, "optimizer", {"preset", "lr", "weight_decay", "beta1", "beta2", "eps"});
        std::string preset = cfg.optimizer.preset;
        read_field(o, "preset", preset);
        cfg.optimizer = OptimizerConfig::from_preset(preset);
        read_field(o, "lr", cfg.optimizer.lr);
        read_field(o, "weight_decay", cfg.optimizer.weight_decay);
        read_field(o, "beta1", cfg.optimizer.beta1);
        read_field(o, "beta2", cfg.optimizer.beta2);
        read_field(o, "eps", cfg.optimizer.eps);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t, "train",
                   {"steps", "batch_size", "strategy", "task", "seed", "mask_augment", "loss_masked_only",
                    "log_every", "val_count"});
        read_field(t, "steps", cfg.train.steps);
        read_field(t, "batch_size", cfg.train.batch_size);
        read_field(t, "strategy", cfg.train.strategy);
        read_field(t, "task", cfg.train.task);
        read_field(t, "seed", cfg.train.seed);
        read_field(t, "mask_augment", cfg.train.mask_augment);
        read_field(t, "loss_masked_only", cfg.train.loss_masked_only);
        read_field(t, "log_every", cfg.train.log_every);
        read_field(t, "val_count", cfg.train.val_count);
    }
    if (j.contains("schedule")) {
        check_keys(j.at("schedule"), "schedule", {"steps"});
        read_field(j.at("schedule"), "steps", cfg.schedule_steps);
    }
    if (j.contains("temperature")) {
        const json& t = j.at("temperature");
        check_keys(t, "temperature", {"alpha", "beta", "c"});
        read_field(t, "alpha", cfg.temperature.alpha);
        read_field(t, "beta", cfg.temperature.beta);
        read_field(t, "c", cfg.temperature.c);
    }
    if (j.contains("correction")) {
        const json& c = j.at("correction");
        check_keys(c, "correction", {"fractions", "iterations", "eta0", "masks"});
        read_field(c, "fractions", cfg.correction.fractions);
        read_field(c, "iterations", cfg.correction.iterations);
        read_field(c, "eta0", cfg.correction.eta0);
        if (c.contains("masks")) {
            cfg.correction.masks.clear();
            for (const json& m : c.at("masks")) cfg.correction.masks.push_back(parse_correction_mask(m.get<std::string>()));
        }
    }
    if (j.contains("sample")) {
        const json& s = j.at("sample");
        check_keys(s, "sample", {"seed", "temp_scale", "trace"});
        read_field(s, "seed", cfg.sample.seed);
        read_field(s, "temp_scale", cfg.sample.temp_scale);
        read_field(s, "trace", cfg.sample.trace);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e, "eval", {"count", "localization_queries", "localization_t"});
        read_field(e, "count", cfg.eval.count);
        read_field(e, "localization_queries", cfg.eval.localization_queries);
        read_field(e, "localization_t", cfg.eval.localization_t);
    }
    read_field(j, "out_dir", cfg.out_dir);
    cfg.validate();
    return cfg;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    json j;
    in >> j;
    return j;
}

void apply_override(json& doc, const std::string& path, const std::string& value) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        const size_t dot = path.find('.', start);
        parts.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json* cursor = &doc;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!cursor->contains(parts[i])) (*cursor)[parts[i]] = json::object();
        cursor = &(*cursor)[parts[i]];
    }
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;
    }
    (*cursor)[parts.back()] = parsed;
}

std::string config_hash(const json& doc) {
    const std::string text = doc.dump();
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

json make_manifest(const std::string& command, const RunConfig& cfg) {
    json config_doc = run_config_to_json(cfg);
    return json{{"command", command},
                {"config_hash", config_hash(config_doc)},
                {"config", config_doc},
                {"seeds", {{"dataset", cfg.dataset.seed}, {"train", cfg.train.seed}, {"sample", cfg.sample.seed}}},
                {"version", kVersionString}};
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace vton
