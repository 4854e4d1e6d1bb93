#include "finedesign/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "finedesign/ablation.hpp"
#include "finedesign/design.hpp"
#include "finedesign/error.hpp"
#include "finedesign/manifest.hpp"
#include "finedesign/metrics.hpp"
#include "finedesign/synthgen.hpp"
#include "finedesign/trainer.hpp"

namespace finedesign::cli {

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out.flush()) throw IoError("write failed for '" + path + "'");
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

struct Options {
    std::string config;
    std::string out_train;
    std::string out_test;
    std::string manifest;
    std::string extract;
    std::string out;
    std::string dataset;
    std::string model;
    std::string test;
    std::string in;
    std::string format = "markdown";
    std::size_t workers = 1;
};

int dispatch(const CLI::App& app, const Options& o, std::ostream& out, std::ostream& err) {
    if (app.got_subcommand("synth")) {
        const SynthConfig config = o.config.empty() ? default_synth_config() : load_synth_config(o.config);
        save_manifest(generate_train(config), o.out_train);
        save_manifest(generate_test(config), o.out_test);
    } else if (app.got_subcommand("partition")) {
        const Manifest manifest = load_manifest(o.manifest);
        const DesignConfig design = resolve_extract(split_commas(o.extract), manifest.taxonomy);
        save_dataset_csv(apply_design(manifest, design), o.out);
    } else if (app.got_subcommand("train")) {
        const LabeledDataset dataset = load_dataset_csv(o.dataset);
        const TrainConfig config = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
        save_model(train(dataset, config), o.out);
    } else if (app.got_subcommand("eval")) {
        const TrainedModel model = load_model(o.model);
        const Manifest test = load_manifest(o.test);
        const std::string text = eval_report_to_json(evaluate(model, test));
        if (o.out.empty()) {
            out << text;
        } else {
            write_text(o.out, text);
        }
    } else if (app.got_subcommand("ablate")) {
        const AblationConfig config = load_ablation_config(o.config);
        const AblationReport report =
            run_ablation(config, o.workers, [&err](const std::string& line) { err << line << '\n'; });
        if (report.warnings > 0) err << "warning: " << report.warnings << " run(s) failed and were excluded\n";
        write_text(o.out, render_report(report, ReportFormat::Json));
    } else if (app.got_subcommand("report")) {
        const ReportFormat format = parse_report_format(o.format);
        const std::string text = render_report(load_report(o.in), format);
        if (o.out.empty()) {
            out << text;
        } else {
            write_text(o.out, text);
        }
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dataset fine-design toolkit: partition ambiguous samples into an uncertain class and measure the "
                 "false alarm rate of each design",
                 "finedesign"};
    app.set_version_flag("--version", kToolkitVersion);
    app.require_subcommand(1, 1);

    Options o;

    auto* synth = app.add_subcommand("synth", "Generate synthetic train and test manifests");
    synth->add_option("--config", o.config, "Synth config JSON (defaults when omitted)");
    synth->add_option("--out-train", o.out_train, "Output train manifest (JSONL)")->required();
    synth->add_option("--out-test", o.out_test, "Output test manifest (JSONL)")->required();

    auto* partition = app.add_subcommand("partition", "Apply a dataset design and export labeled CSV");
    partition->add_option("--manifest", o.manifest, "Train manifest (JSONL)")->required();
    partition->add_option("--extract", o.extract, "Comma-separated categories or abbreviations, e.g. IW,LQ");
    partition->add_option("--out", o.out, "Output CSV")->required();

    auto* train_cmd = app.add_subcommand("train", "Train an MLP on a labeled CSV");
    train_cmd->add_option("--dataset", o.dataset, "Labeled dataset CSV")->required();
    train_cmd->add_option("--config", o.config, "Train config JSON (defaults when omitted)");
    train_cmd->add_option("--out", o.out, "Output model JSON")->required();

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a test manifest");
    eval_cmd->add_option("--model", o.model, "Model JSON")->required();
    eval_cmd->add_option("--test", o.test, "Test manifest (JSONL)")->required();
    eval_cmd->add_option("--out", o.out, "Output report JSON (standard output when omitted)");

    auto* ablate = app.add_subcommand("ablate", "Run every design over every seed");
    ablate->add_option("--config", o.config, "Ablation config JSON")->required();
    ablate->add_option("--out", o.out, "Output ablation report JSON")->required();
    ablate->add_option("--workers", o.workers, "Worker threads; output does not depend on it")
        ->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "Render an ablation report");
    report->add_option("--in", o.in, "Ablation report JSON")->required();
    report->add_option("--format", o.format, "markdown, csv or json")
        ->check(CLI::IsMember({"markdown", "md", "csv", "json"}));
    report->add_option("--out", o.out, "Output file (standard output when omitted)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        const CLI::App* failing = &app;
        for (const auto* sub : app.get_subcommands()) failing = sub;
        err << failing->help();
        return kValidation;
    }

    try {
        return dispatch(app, o, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
}

}  // namespace finedesign::cli
