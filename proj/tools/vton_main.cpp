// vton: bidirectional garment try-on / try-off on a synthetic oracle world.
// Subcommands: gen-data, train, sample, tryoff, self-correct, attn-map,
// eval, layer-report. One JSON config document drives every run; any config
// field can be overridden on the command line with --<dot.path> <value>.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vton/runconfig.hpp"
#include "vton/runner.hpp"

namespace {

struct Cli {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::vector<std::string> args;  // remaining argv for CLI11
};

// pulls `--a.b.c value` tokens out of argv as config overrides
Cli split_overrides(int argc, char** argv) {
    Cli cli;
    for (int i = 1; i < argc; ++i) {
        const std::string tok = argv[i];
        if (tok.size() > 2 && tok.rfind("--", 0) == 0 && tok.find('.') != std::string::npos) {
            if (i + 1 >= argc) throw std::invalid_argument("missing value for override " + tok);
            cli.overrides.emplace_back(tok.substr(2), argv[++i]);
        } else {
            cli.args.push_back(tok);
        }
    }
    return cli;
}

vton::RunConfig build_config(const Cli& cli) {
    nlohmann::json doc = vton::run_config_to_json(vton::default_run_config());
    if (!cli.config_path.empty()) {
        nlohmann::json file = vton::load_json_file(cli.config_path);
        doc.merge_patch(file);
    }
    for (const auto& [path, value] : cli.overrides) vton::apply_override(doc, path, value);
    return vton::run_config_from_json(doc);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        Cli cli = split_overrides(argc, argv);

        CLI::App app{"bidirectional garment try-on/try-off"};
        app.require_subcommand(1);
        app.add_option("--config", cli.config_path, "JSON run configuration");

        std::string out_dir;
        vton::SampleArgs sample_args;
        vton::AttnMapArgs attn_args;
        vton::EvalArgs eval_args;
        std::string before_ckpt, after_ckpt;
        uint64_t seed_flag = 0;
        bool seed_set = false, temp_scale_flag = false, trace_flag = false;
        std::string strategy_flag, task_flag;
        int steps_flag = -1;

        auto add_seed = [&](CLI::App* cmd) {
            cmd->add_option("--seed", seed_flag, "sampling seed")->each([&](const std::string&) { seed_set = true; });
        };

        CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic pair directory");
        gen->add_option("--out", out_dir, "output directory")->required();

        CLI::App* train = app.add_subcommand("train", "train a model");
        train->add_option("--out", out_dir, "output directory")->required();
        train->add_option("--strategy", strategy_flag, "full | attention_only | single_blocks");
        train->add_option("--task", task_flag, "on | off | both");
        train->add_option("--steps", steps_flag, "training steps");

        auto add_sample_inputs = [&](CLI::App* cmd) {
            cmd->add_option("--checkpoint", sample_args.checkpoint, "model checkpoint")->required();
            cmd->add_option("--out", sample_args.out_dir, "output directory")->required();
            cmd->add_option("--index", sample_args.index, "pair index into the configured dataset");
            cmd->add_option("--garment", sample_args.garment, "garment PNG (file input mode)");
            cmd->add_option("--person", sample_args.person, "person PNG (file input mode)");
            cmd->add_option("--mask", sample_args.mask, "person garment-region mask PNG");
            cmd->add_option("--category", sample_args.category, "upper | lower | full (file input mode)");
            cmd->add_flag("--temp-scale", temp_scale_flag, "apply attention temperature scaling");
            cmd->add_flag("--trace", trace_flag, "write per-step trace.jsonl");
            add_seed(cmd);
        };
        CLI::App* samp = app.add_subcommand("sample", "try-on sampling");
        add_sample_inputs(samp);
        CLI::App* tryoff = app.add_subcommand("tryoff", "try-off sampling");
        add_sample_inputs(tryoff);
        CLI::App* selfc = app.add_subcommand("self-correct", "try-on sampling with self-correction");
        add_sample_inputs(selfc);

        CLI::App* attn = app.add_subcommand("attn-map", "export attention heatmaps for a query point");
        attn->add_option("--checkpoint", attn_args.checkpoint, "model checkpoint")->required();
        attn->add_option("--out", attn_args.out_dir, "output directory")->required();
        attn->add_option("--index", attn_args.index, "pair index");
        attn->add_option("--query-row", attn_args.query_row, "query pixel row on the person image")->required();
        attn->add_option("--query-col", attn_args.query_col, "query pixel column on the person image")->required();
        attn->add_option("--block", attn_args.block, "block to render (-1 = all)");
        attn->add_option("--head", attn_args.head, "head to render (-1 = average)");

        CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the validation slice");
        eval->add_option("--checkpoint", eval_args.checkpoint, "model checkpoint")->required();
        eval->add_option("--out", eval_args.out_dir, "output directory")->required();
        eval->add_option("--task", eval_args.task, "on | off | both");
        eval->add_option("--count", eval_args.count, "validation pair count");
        eval->add_flag("--temp-scale", eval_args.temp_scale, "apply attention temperature scaling");

        CLI::App* layer = app.add_subcommand("layer-report", "normalized per-label weight update report");
        layer->add_option("--before", before_ckpt, "reference checkpoint")->required();
        layer->add_option("--after", after_ckpt, "updated checkpoint")->required();
        layer->add_option("--out", out_dir, "output directory")->required();

        std::vector<const char*> argv2;
        argv2.push_back(argv[0]);
        for (const std::string& a : cli.args) argv2.push_back(a.c_str());
        app.parse(static_cast<int>(argv2.size()), argv2.data());

        vton::RunConfig cfg = build_config(cli);
        if (!strategy_flag.empty()) cfg.train.strategy = strategy_flag;
        if (!task_flag.empty()) cfg.train.task = task_flag;
        if (steps_flag >= 0) cfg.train.steps = steps_flag;
        if (seed_set) cfg.sample.seed = seed_flag;
        if (temp_scale_flag) cfg.sample.temp_scale = true;
        if (trace_flag) cfg.sample.trace = true;
        cfg.validate();

        if (gen->parsed()) return vton::run_gen_data(cfg, out_dir);
        if (train->parsed()) return vton::run_train(cfg, out_dir);
        if (samp->parsed() || tryoff->parsed() || selfc->parsed()) {
            sample_args.mode = tryoff->parsed() ? vton::TaskMode::off : vton::TaskMode::on;
            sample_args.self_correct = selfc->parsed();
            return vton::run_sample(cfg, sample_args);
        }
        if (attn->parsed()) return vton::run_attn_map(cfg, attn_args);
        if (eval->parsed()) return vton::run_eval(cfg, eval_args);
        if (layer->parsed()) return vton::run_layer_report(before_ckpt, after_ckpt, out_dir);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const CLI::ParseError& e) {
        return e.get_exit_code() == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
