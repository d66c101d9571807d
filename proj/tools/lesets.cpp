#include "lesets/analysis.hpp"
#include "lesets/baselines.hpp"
#include "lesets/checkpoint.hpp"
#include "lesets/csv.hpp"
#include "lesets/dataset.hpp"
#include "lesets/elements.hpp"
#include "lesets/graphs.hpp"
#include "lesets/model.hpp"
#include "lesets/parallel.hpp"
#include "lesets/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace lesets;

std::string resolve_table_path(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("LESETS_ELEMENT_TABLE")) return env;
    return LESETS_DEFAULT_ELEMENT_TABLE;
}

struct Preset {
    ModelConfig config;
    std::string default_target;
};

Preset preset_by_name(const std::string& name) {
    Preset p;
    if (name == "youngs") {
        p.config.conv_operator = ConvOp::GraphConv;
        p.config.n_conv_layers = 2;
        p.config.use_att = true;
        p.default_target = "youngs_modulus";
    } else if (name == "bulk") {
        p.config.conv_operator = ConvOp::CGConv;
        p.config.n_conv_layers = 3;
        p.config.use_att = false;
        p.default_target = "bulk_modulus";
    } else if (name == "rws") {
        p.config.conv_operator = ConvOp::CGConv;
        p.config.n_conv_layers = 2;
        p.config.use_att = false;
        p.default_target = "rws";
    } else {
        throw std::runtime_error("unknown preset '" + name + "' (expected youngs, bulk, or rws)");
    }
    p.config.n_fc_layers = 3;
    p.config.hidden_dim = 32;
    return p;
}

/// Options shared by the model-running subcommands.
struct RunOptions {
    std::string data;
    std::string target;
    std::string element_table;
    std::string out = "lesets_out";
    std::string preset;
    std::string model_kind = "lesets";
    std::optional<std::string> conv;
    std::optional<int> conv_layers, fc_layers, hidden_dim;
    std::optional<bool> att;
    uint64_t seed = 0;
    int threads = 1;
    int replicates = 30;
    int sweep_replicates = 10;
    int interpret_replicates = 1;
    std::vector<double> fractions = {0.1, 0.25, 0.5, 1.0};
    std::string checkpoint;
    bool timing = false;
    TrainConfig train;
};

void add_data_options(CLI::App* sub, RunOptions& o, bool target_flag = true) {
    sub->add_option("--data", o.data, "Dataset CSV (composition,youngs_modulus,bulk_modulus,rws)")->required();
    if (target_flag)
        sub->add_option("--target", o.target, "Target column: youngs_modulus, bulk_modulus, or rws");
    sub->add_option("--element-table", o.element_table, "Element descriptor table CSV");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (1 = serial, bit-reproducible)")->capture_default_str();
}

void add_model_options(CLI::App* sub, RunOptions& o) {
    sub->add_option("--preset", o.preset, "Hyperparameter preset: youngs, bulk, or rws");
    sub->add_option("--model", o.model_kind, "Model kind: lesets or deepsets")->capture_default_str();
    sub->add_option("--conv", o.conv, "Convolution operator: graphconv or cgconv");
    sub->add_option("--conv-layers", o.conv_layers, "Number of convolution layers");
    sub->add_option("--fc-layers", o.fc_layers, "Number of FC layers after aggregation");
    sub->add_option("--hidden-dim", o.hidden_dim, "Hidden width");
    sub->add_option("--att", o.att, "Use attention aggregation (true/false)");
}

void add_train_options(CLI::App* sub, RunOptions& o) {
    sub->add_option("--lr", o.train.initial_lr, "Initial learning rate")->capture_default_str();
    sub->add_option("--batch-size", o.train.batch_size, "Mini-batch size")->capture_default_str();
    sub->add_option("--max-epochs", o.train.max_epochs, "Epoch cap")->capture_default_str();
    sub->add_option("--lr-patience", o.train.lr_halving_patience, "Epochs without improvement before halving the LR")
        ->capture_default_str();
    sub->add_option("--stop-patience", o.train.early_stop_patience, "Epochs without improvement before stopping")
        ->capture_default_str();
    sub->add_option("--weight-decay", o.train.weight_decay, "AdamW weight decay")->capture_default_str();
}

/// Preset first, explicit flags on top; fills the target from the preset
/// when none was given.
ModelConfig resolve_model_config(RunOptions& o) {
    ModelConfig c;
    if (!o.preset.empty()) {
        Preset p = preset_by_name(o.preset);
        c = p.config;
        if (o.target.empty()) o.target = p.default_target;
    }
    if (o.conv) c.conv_operator = conv_op_from_string(*o.conv);
    if (o.conv_layers) c.n_conv_layers = *o.conv_layers;
    if (o.fc_layers) c.n_fc_layers = *o.fc_layers;
    if (o.hidden_dim) c.hidden_dim = *o.hidden_dim;
    if (o.att) c.use_att = *o.att;
    c.validate();
    if (o.target.empty()) throw std::runtime_error("no target column given (use --target or --preset)");
    return c;
}

ModelFactory make_factory(const std::string& kind, const ModelConfig& base, int input_dim) {
    return [kind, base, input_dim](uint64_t seed) {
        ModelConfig c = base;
        c.seed = seed;
        return make_model(kind, c, input_dim);
    };
}

std::string metrics_line(const Metrics& m, const std::string& unit) {
    std::string out = "MAE " + csv::format_double(m.mae);
    if (!unit.empty()) out += " " + unit;
    out += ", R2 " + (m.r2 ? csv::format_double(*m.r2) : std::string("undefined"));
    return out;
}

void print_summary(const std::string& name, const BenchmarkSummary& s, const std::string& unit) {
    std::cout << name << ": ";
    if (s.mean_mae)
        std::cout << "MAE " << csv::format_double(*s.mean_mae) << " +- " << csv::format_double(*s.std_mae) << " "
                  << unit << ", R2 "
                  << (s.mean_r2 ? csv::format_double(*s.mean_r2) + " +- " + csv::format_double(*s.std_r2)
                                : std::string("undefined"));
    else
        std::cout << "no successful replicates";
    if (s.n_failed > 0) std::cout << " (" << s.n_failed << " failed)";
    std::cout << "\n";
}

int run_featurize(RunOptions& o) {
    ElementTable table = ElementTable::load(resolve_table_path(o.element_table));
    Dataset data = load_dataset(o.data);
    std::filesystem::create_directories(o.out);
    std::ofstream out(std::filesystem::path(o.out) / "graph_sets.jsonl");
    if (!out) throw std::runtime_error("cannot write graph_sets.jsonl in " + o.out);

    size_t n = 0;
    if (o.target.empty()) {
        for (const DataRecord& rec : data.records) {
            out << graph_set_to_json(build_graph_set(rec.composition, table)).dump() << '\n';
            ++n;
        }
    } else {
        std::vector<GraphSet> sets = build_graph_sets(data, o.target, table, o.threads);
        for (const GraphSet& gs : sets) out << graph_set_to_json(gs).dump() << '\n';
        n = sets.size();
    }
    std::cout << "wrote " << n << " graph sets to " << (std::filesystem::path(o.out) / "graph_sets.jsonl").string()
              << "\n";
    return 0;
}

int run_train(RunOptions& o) {
    ModelConfig config = resolve_model_config(o);
    ElementTable table = ElementTable::load(resolve_table_path(o.element_table));
    Dataset data = load_dataset(o.data);
    std::vector<GraphSet> sets = build_graph_sets(data, o.target, table, o.threads);
    if (sets.empty()) throw std::runtime_error("no rows with target " + o.target + " in " + o.data);

    Split split = split_dataset(static_cast<int>(sets.size()), o.seed);
    auto gather = [&](const std::vector<int>& idx) {
        std::vector<GraphSet> out;
        out.reserve(idx.size());
        for (int i : idx) out.push_back(sets[static_cast<size_t>(i)]);
        return out;
    };
    std::vector<GraphSet> train = gather(split.train), val = gather(split.val), test = gather(split.test);

    std::vector<double> ytr;
    ytr.reserve(train.size());
    for (const GraphSet& s : train) ytr.push_back(*s.target);
    TargetScaler scaler = TargetScaler::fit(ytr);

    config.seed = o.seed;
    std::unique_ptr<Model> model = make_model(o.model_kind, config, FeatureSchema::total_dim);
    TrainConfig tc = o.train;
    tc.seed = o.seed;
    std::cout << "training " << model->kind() << " on " << train.size() << "/" << val.size() << "/" << test.size()
              << " rows (" << model->param_count() << " parameters)\n";
    TrainResult res = train_model(*model, train, val, scaler, tc);
    Metrics m = evaluate(*model, test, scaler, o.threads);

    std::filesystem::create_directories(o.out);
    const std::filesystem::path dir(o.out);
    save_checkpoint((dir / "checkpoint.json").string(), *model, o.target, scaler, table);
    csv::Writer curve((dir / "learning_curve.csv").string(), {"epoch", "train_loss", "val_loss", "lr"});
    for (const EpochRecord& e : res.curve.epochs)
        curve.append({std::to_string(e.epoch), csv::format_double(e.train_loss), csv::format_double(e.val_loss),
                      csv::format_double(e.lr)});
    curve.close();
    nlohmann::json mj;
    mj["target"] = o.target;
    mj["test_mae"] = m.mae;
    mj["test_r2"] = m.r2 ? nlohmann::json(*m.r2) : nlohmann::json(nullptr);
    mj["best_epoch"] = res.best_epoch;
    mj["epochs_run"] = res.epochs_run;
    mj["best_val_loss"] = res.best_val_loss;
    std::ofstream mout(dir / "metrics.json");
    mout << mj.dump(2) << '\n';

    std::cout << "stopped after " << res.epochs_run << " epochs (best validation at epoch " << res.best_epoch
              << ")\ntest " << metrics_line(m, target_unit(o.target)) << "\ncheckpoint: "
              << (dir / "checkpoint.json").string() << "\n";
    return 0;
}

int run_predict(RunOptions& o) {
    if (o.checkpoint.empty()) throw std::runtime_error("predict needs --checkpoint");
    ElementTable table = ElementTable::load(resolve_table_path(o.element_table));
    LoadedCheckpoint ckpt = load_checkpoint(o.checkpoint, table);

    csv::Table input = csv::read_file(o.data);
    const int comp_col = input.column("composition");
    if (comp_col < 0) throw std::runtime_error(o.data + " has no composition column");

    std::vector<double> preds(input.rows.size());
    run_parallel(static_cast<int>(input.rows.size()), o.threads, [&](int i) {
        const Composition comp = parse_composition(input.rows[static_cast<size_t>(i)][static_cast<size_t>(comp_col)]);
        GraphSet gs = build_graph_set(comp, table);
        Tape tape(false);
        preds[static_cast<size_t>(i)] = ckpt.scaler.unscale(ckpt.model->forward(tape, gs).item());
    });

    std::filesystem::create_directories(o.out);
    const std::filesystem::path path = std::filesystem::path(o.out) / "predictions.csv";
    csv::Row header = input.header;
    header.push_back("predicted_" + ckpt.target);
    csv::Writer out(path.string(), header);
    for (size_t i = 0; i < input.rows.size(); ++i) {
        csv::Row row = input.rows[i];
        row.push_back(csv::format_double(preds[i]));
        out.append(row);
    }
    out.close();
    std::cout << "predicted " << ckpt.target << " (" << ckpt.target_unit << ") for " << input.rows.size()
              << " rows: " << path.string() << "\n";
    return 0;
}

int run_benchmark(RunOptions& o) {
    ModelConfig config = resolve_model_config(o);
    ElementTable table = ElementTable::load(resolve_table_path(o.element_table));
    Dataset data = load_dataset(o.data);
    std::vector<GraphSet> sets = build_graph_sets(data, o.target, table, o.threads);

    BenchmarkConfig bc;
    bc.n_replicates = o.replicates;
    bc.train = o.train;
    bc.threads = o.threads;
    bc.record_timing = o.timing;
    BenchmarkSummary summary =
        run_benchmark(sets, make_factory(o.model_kind, config, FeatureSchema::total_dim), bc);
    write_benchmark_outputs(summary, o.out);
    print_summary(o.model_kind + " " + o.target + " (" + std::to_string(o.replicates) + " replicates)", summary,
                  target_unit(o.target));
    std::cout << "outputs in " << o.out << "\n";
    return 0;
}

int run_sensitivity(RunOptions& o) {
    ModelConfig config = resolve_model_config(o);
    ElementTable table = ElementTable::load(resolve_table_path(o.element_table));
    Dataset data = load_dataset(o.data);
    std::vector<GraphSet> sets = build_graph_sets(data, o.target, table, o.threads);

    SweepConfig sc;
    sc.fractions = o.fractions;
    sc.n_rep = o.sweep_replicates;
    sc.train = o.train;
    sc.threads = o.threads;
    std::vector<SensitivityPoint> points =
        sensitivity_sweep(sets, make_factory(o.model_kind, config, FeatureSchema::total_dim), sc);
    write_sensitivity_outputs(points, o.out);
    for (const SensitivityPoint& p : points) {
        std::cout << "fraction " << csv::format_double(p.fraction) << ": MAE " << csv::format_double(p.mean_mae)
                  << " +- " << csv::format_double(p.se_mae) << ", R2 "
                  << (p.mean_r2 ? csv::format_double(*p.mean_r2) + " +- " + csv::format_double(p.se_r2)
                                : std::string("undefined"))
                  << (p.se_degenerate ? " (single replicate, SE degenerate)" : "") << "\n";
    }
    std::cout << "outputs in " << o.out << "\n";
    return 0;
}

int run_interpret(RunOptions& o) {
    ElementTable table = ElementTable::load(resolve_table_path(o.element_table));

    std::vector<std::pair<std::string, ImportanceReport>> modes;
    std::string target = o.target;

    if (!o.checkpoint.empty()) {
        LoadedCheckpoint ckpt = load_checkpoint(o.checkpoint, table);
        target = ckpt.target;
        const auto* lesets_model = dynamic_cast<const LESetsModel*>(ckpt.model.get());
        if (!lesets_model || !lesets_model->config().use_att)
            throw std::runtime_error("interpretation requires a LESets model with attention");
        Dataset data = load_dataset(o.data);
        std::vector<GraphSet> sets = build_graph_sets(data, target, table, o.threads);
        std::vector<std::string> labels;
        for (int row : data.rows_with(target))
            labels.push_back(data.records[static_cast<size_t>(row)].composition.formula());
        modes.emplace_back("model", importance_report(*lesets_model, sets, labels));
    } else {
        ModelConfig config = resolve_model_config(o);
        if (!config.use_att)
            throw std::runtime_error("interpretation requires attention; use --preset youngs or --att true");
        target = o.target;
        Dataset data = load_dataset(o.data);
        std::vector<GraphSet> sets = build_graph_sets(data, target, table, o.threads);
        std::vector<std::string> labels;
        for (int row : data.rows_with(target))
            labels.push_back(data.records[static_cast<size_t>(row)].composition.formula());

        const int n_models = std::max(1, o.interpret_replicates);
        std::vector<ImportanceReport> reports(static_cast<size_t>(n_models));
        run_parallel(n_models, o.threads, [&](int i) {
            const uint64_t seed = static_cast<uint64_t>(i);
            Split split = split_dataset(static_cast<int>(sets.size()), seed);
            auto gather = [&](const std::vector<int>& idx) {
                std::vector<GraphSet> out;
                for (int r : idx) out.push_back(sets[static_cast<size_t>(r)]);
                return out;
            };
            std::vector<GraphSet> train = gather(split.train), val = gather(split.val);
            std::vector<double> ytr;
            for (const GraphSet& s : train) ytr.push_back(*s.target);
            TargetScaler scaler = TargetScaler::fit(ytr);
            ModelConfig c = config;
            c.seed = seed;
            LESetsModel model(c, FeatureSchema::total_dim);
            TrainConfig tc = o.train;
            tc.seed = seed;
            train_model(model, train, val, scaler, tc);
            reports[static_cast<size_t>(i)] = importance_report(model, sets, labels);
        });
        for (int i = 0; i < n_models; ++i)
            modes.emplace_back("model_" + std::to_string(i), reports[static_cast<size_t>(i)]);
        modes.emplace_back("pooled", pool_reports(reports));
    }

    write_importance_outputs(modes, o.out);
    const ImportanceReport& first = modes.front().second;
    std::cout << "importance criteria counts over " << first.per_hea.size() << " alloys ("
              << modes.front().first << "):\n";
    for (size_t i = 0; i < first.elements.size(); ++i)
        std::cout << "  " << first.elements[i] << ": criterion1 " << first.criterion1_counts[i] << ", criterion2 "
                  << first.criterion2_counts[i] << "\n";
    std::cout << "outputs in " << o.out << "\n";
    return 0;
}

int run_baselines(RunOptions& o) {
    if (o.target.empty()) throw std::runtime_error("no target column given (use --target)");
    ElementTable table = ElementTable::load(resolve_table_path(o.element_table));
    Dataset data = load_dataset(o.data);
    TabularDataset tab = summarize_dataset(data, o.target, table);

    BaselineBenchmarkConfig bc;
    bc.n_replicates = o.replicates;
    bc.tuning_seed = o.seed;
    bc.threads = o.threads;
    bc.record_timing = o.timing;
    std::vector<BaselineRunResult> results = run_baseline_benchmark(tab, bc);
    write_baseline_outputs(results, o.out);
    for (const BaselineRunResult& r : results)
        print_summary(r.method + " (hyperparameter " + csv::format_double(r.hyperparameter) + ")", r.summary,
                      target_unit(o.target));
    std::cout << "outputs in " << o.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Alloy property prediction from weighted sets of local-environment graphs"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a config file; command-line flags take precedence");

    RunOptions o;

    CLI::App* featurize = app.add_subcommand("featurize", "Emit the graph-set representation as JSONL")->configurable();
    add_data_options(featurize, o);

    CLI::App* train = app.add_subcommand("train", "Train one model on a single split and save a checkpoint")->configurable();
    add_data_options(train, o);
    add_model_options(train, o);
    add_train_options(train, o);
    train->add_option("--seed", o.seed, "Split / init / shuffle seed")->capture_default_str();

    CLI::App* predict = app.add_subcommand("predict", "Append checkpoint predictions to an input CSV")->configurable();
    add_data_options(predict, o, false);
    predict->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON from train")->required();

    CLI::App* benchmark = app.add_subcommand("benchmark", "Multi-replicate split/train/evaluate benchmark")->configurable();
    add_data_options(benchmark, o);
    add_model_options(benchmark, o);
    add_train_options(benchmark, o);
    benchmark->add_option("--replicates", o.replicates, "Number of replicates (seeds 0..n-1)")->capture_default_str();
    benchmark->add_flag("--timing", o.timing, "Record wall time per replicate (breaks byte-reproducibility)");

    CLI::App* sensitivity = app.add_subcommand("sensitivity", "Metrics as a function of training-data fraction")->configurable();
    add_data_options(sensitivity, o);
    add_model_options(sensitivity, o);
    add_train_options(sensitivity, o);
    sensitivity->add_option("--replicates", o.sweep_replicates, "Replicates per fraction")->capture_default_str();
    sensitivity->add_option("--fractions", o.fractions, "Training-data fractions in (0, 1]")
        ->delimiter(',')
        ->capture_default_str();

    CLI::App* interpret = app.add_subcommand("interpret", "Attention importance scores and element reports")->configurable();
    add_data_options(interpret, o);
    add_model_options(interpret, o);
    add_train_options(interpret, o);
    interpret->add_option("--checkpoint", o.checkpoint, "Use an existing attention checkpoint instead of training");
    interpret->add_option("--replicates", o.interpret_replicates, "Models to train when no checkpoint is given")
        ->capture_default_str();

    CLI::App* baselines = app.add_subcommand("baselines", "Ridge, lasso, and kNN on tabular summary descriptors")->configurable();
    add_data_options(baselines, o);
    baselines->add_option("--replicates", o.replicates, "Number of 2:1 assessment splits")->capture_default_str();
    baselines->add_option("--seed", o.seed, "Tuning partition / CV fold seed")->capture_default_str();
    baselines->add_flag("--timing", o.timing, "Record wall time per replicate");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(featurize)) return run_featurize(o);
        if (app.got_subcommand(train)) return run_train(o);
        if (app.got_subcommand(predict)) return run_predict(o);
        if (app.got_subcommand(benchmark)) return run_benchmark(o);
        if (app.got_subcommand(sensitivity)) return run_sensitivity(o);
        if (app.got_subcommand(interpret)) return run_interpret(o);
        if (app.got_subcommand(baselines)) return run_baselines(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
