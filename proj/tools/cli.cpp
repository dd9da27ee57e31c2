#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "weaklabel/advantage.hpp"
#include "weaklabel/errors.hpp"
#include "weaklabel/generative_model.hpp"
#include "weaklabel/io_util.hpp"
#include "weaklabel/label_matrix.hpp"
#include "weaklabel/noise_aware.hpp"
#include "weaklabel/structure_learning.hpp"
#include "weaklabel/synthetic.hpp"

namespace weaklabel::cli {

namespace {

namespace fs = std::filesystem;

// Bad flag combinations or missing required settings.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string show(const std::string& v) { return v; }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(double v) { return io::format_double(v); }
std::string show(int v) { return std::to_string(v); }
std::string show(unsigned v) { return std::to_string(v); }
std::string show(std::size_t v) { return std::to_string(v); }

// Everything a subcommand can be configured with. Each subcommand binds its own
// copy so defaults can differ between subcommands.
struct Settings {
    std::string config;
    std::string matrix;
    std::string format = "dense";
    std::string gold;
    std::string model;
    std::string out = "-";
    std::string correlations;
    std::string features;
    std::string probs;
    std::string disc_model;
    std::string preset = "footnote7";
    std::string pairs_dir;
    std::string name = "dataset";
    bool exact = false;
    bool auto_structure = false;
    bool strict = false;
    bool mv = false;
    bool abstain_only = false;
    bool early_stop = false;
    double delta = OptimizerConfig{}.delta;
    double gamma = OptimizerConfig{}.gamma;
    double w_min = OptimizerConfig{}.w_min;
    double w_bar = OptimizerConfig{}.w_bar;
    double w_max = OptimizerConfig{}.w_max;
    double epsilon = 0.0;
    double step_size = FitConfig{}.step_size;
    double l2 = FitConfig{}.l2_reg;
    double propensity = 0.0;  // 0 keeps the preset's value
    double tolerance = FitConfig{}.tolerance;
    int epochs = FitConfig{}.epochs;
    int gibbs_steps = FitConfig{}.gibbs_steps;
    int batch_size = FitConfig{}.batch_size;
    std::size_t gibbs_samples = GibbsOptions{}.samples;
    std::size_t burn_in = GibbsOptions{}.burn_in;
    std::size_t m = 10;
    std::size_t n = 1000;
    std::size_t pairs = 3;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

// One subcommand: its CLI11 node, bound settings and the resolved-config
// printers in registration order.
struct Command {
    std::string name;
    CLI::App* app = nullptr;
    Settings s;
    std::vector<std::pair<std::string, std::function<std::string()>>> shown;
    std::vector<std::string> required;

    // `aliases` are extra names such as ",--l1".
    template <class T>
    CLI::Option* option(const std::string& flag, T& var, const std::string& help, const std::string& aliases = "") {
        auto* opt = app->add_option("--" + flag + aliases, var, help)->capture_default_str();
        shown.emplace_back(flag, [&var] { return show(var); });
        return opt;
    }
    CLI::Option* flag(const std::string& flag, bool& var, const std::string& help) {
        auto* opt = app->add_flag("--" + flag, var, help);
        shown.emplace_back(flag, [&var] { return show(var); });
        return opt;
    }
    void require(const std::string& flag) { required.push_back(flag); }
};

void add_common(Command& c) {
    c.app->add_option("--config", c.s.config, "key=value file; flags given on the command line win");
    c.option("seed", c.s.seed, "Random seed");
    c.option("threads", c.s.threads, "Worker threads");
    c.flag("strict", c.s.strict, "Single-threaded deterministic execution");
    c.option("out", c.s.out, "Output path ('-' for stdout)");
}

void add_matrix(Command& c, bool required = true) {
    c.option("matrix", c.s.matrix, "Label matrix file");
    c.option("format", c.s.format, "Label matrix format")->check(CLI::IsMember({"dense", "sparse"}));
    if (required) c.require("matrix");
}

void add_fit_options(Command& c) {
    c.option("epochs", c.s.epochs, "Epochs (CD) or iteration budget (exact and structure solves)");
    c.option("step-size", c.s.step_size, "Learning rate");
    c.option("gibbs-steps", c.s.gibbs_steps, "Gibbs sweeps per negative sample");
    c.option("batch-size", c.s.batch_size, "Minibatch size for contrastive divergence");
    c.option("l2", c.s.l2, "L2 regularization");
    c.option("tolerance", c.s.tolerance, "Convergence tolerance");
}

void add_optimizer_options(Command& c) {
    c.option("gamma", c.s.gamma, "Advantage tolerance (fraction)");
    c.option("delta", c.s.delta, "Structure search resolution");
    c.option("w-min", c.s.w_min, "Smallest accuracy weight assumed by the bound");
    c.option("w-bar", c.s.w_bar, "Mean accuracy weight assumed by the bound");
    c.option("w-max", c.s.w_max, "Largest accuracy weight assumed by the bound");
}

// Fills unset options of the chosen subcommand from its --config file.
void apply_config_file(Command& c) {
    if (c.s.config.empty()) return;
    std::ifstream in(c.s.config);
    if (!in) throw IoError("cannot open config file '" + c.s.config + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::is_skippable(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key=value in '" + c.s.config + "'");
        std::string key(io::trim(std::string_view(line).substr(0, eq)));
        std::string value(io::trim(std::string_view(line).substr(eq + 1)));
        if (key.rfind("--", 0) == 0) key.erase(0, 2);
        if (key == "config") throw UsageError("config files cannot include other config files");
        auto* opt = c.app->get_option_no_throw("--" + key);
        if (!opt) throw UsageError("unknown key '" + key + "' in '" + c.s.config + "' for " + c.name);
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

void check_required(const Command& c) {
    for (const auto& flag : c.required)
        for (const auto& [name, print] : c.shown)
            if (name == flag && print().empty()) throw UsageError(c.name + ": --" + flag + " is required");
}

MatrixFormat format_of(const Settings& s) { return s.format == "sparse" ? MatrixFormat::Sparse : MatrixFormat::Dense; }

unsigned thread_count(const Settings& s) { return s.strict ? 1u : std::max(1u, s.threads); }

FitConfig fit_config(const Settings& s) {
    FitConfig f;
    f.epochs = s.epochs;
    f.step_size = s.step_size;
    f.gibbs_steps = s.gibbs_steps;
    f.batch_size = s.batch_size;
    f.l2_reg = s.l2;
    f.tolerance = s.tolerance;
    f.seed = s.seed;
    f.threads = thread_count(s);
    f.validate();
    return f;
}

OptimizerConfig optimizer_config(const Settings& s) {
    OptimizerConfig o;
    o.gamma = s.gamma;
    o.delta = s.delta;
    o.w_min = s.w_min;
    o.w_bar = s.w_bar;
    o.w_max = s.w_max;
    o.validate();
    return o;
}

void write_header(std::ostream& out, const Command& c) {
    out << "# weaklabel " << c.name << '\n';
    for (const auto& [flag, print] : c.shown) out << "# " << flag << '=' << print() << '\n';
}

// Output sink for --out: stdout when "-", otherwise the named file.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw IoError("cannot write '" + path + "'");
        stream_ = file_.get();
    }
    std::ostream& get() { return *stream_; }
    void close() {
        if (!file_) return;
        file_->close();
        if (!*file_) throw IoError("failed writing output file");
    }

private:
    std::ostream* stream_;
    std::unique_ptr<std::ofstream> file_;
};

std::ofstream open_output(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    return f;
}

// "j,k" or "j,k,weight" rows; a leading "j,k..." header and '#' lines are skipped.
CorrelationSet load_correlations(const std::string& path, std::size_t m) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open correlations file '" + path + "'");
    std::vector<CorrelationSet::Pair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::is_skippable(line)) continue;
        const auto fields = io::split(line, ',');
        if (fields.size() < 2 || fields.size() > 3) throw ParseError(line_no, "expected j,k or j,k,weight");
        if (io::trim(fields[0]) == "j") continue;
        const auto j = io::parse_u64(io::trim(fields[0]), line_no);
        const auto k = io::parse_u64(io::trim(fields[1]), line_no);
        pairs.emplace_back(static_cast<std::uint32_t>(std::min<std::uint64_t>(j, UINT32_MAX)),
                           static_cast<std::uint32_t>(std::min<std::uint64_t>(k, UINT32_MAX)));
    }
    return CorrelationSet(std::move(pairs), m);
}

// "index,p_positive" rows as written by predict.
ProbLabels load_probs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open probabilities file '" + path + "'");
    ProbLabels probs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::is_skippable(line)) continue;
        const auto fields = io::split(line, ',');
        if (fields.size() != 2) throw ParseError(line_no, "expected index,p_positive");
        if (io::trim(fields[0]) == "index") continue;
        const auto index = io::parse_u64(io::trim(fields[0]), line_no);
        if (index != probs.probs.size())
            throw ParseError(line_no, "expected index " + std::to_string(probs.probs.size()) + ", found " +
                                          std::to_string(index));
        const double p = io::parse_double(io::trim(fields[1]), line_no);
        if (!(p >= 0.0 && p <= 1.0)) throw ParseError(line_no, "probability outside [0, 1]");
        probs.probs.push_back(p);
    }
    return probs;
}

void write_probs(std::ostream& out, const std::vector<double>& probs) {
    out << "index,p_positive\n";
    for (std::size_t i = 0; i < probs.size(); ++i) out << i << ',' << io::format_double(probs[i]) << '\n';
}

void check_model_width(const LabelMatrix& matrix, const GenerativeParams& params) {
    if (matrix.cols() != params.num_sources())
        throw DimensionError("matrix has m=" + std::to_string(matrix.cols()) + " sources but the model has m=" +
                             std::to_string(params.num_sources()));
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_fit(Command& c, std::ostream& stdout_) {
    const auto& s = c.s;
    if (s.exact && (!s.correlations.empty() || s.auto_structure))
        throw UsageError("--exact fits the independent model and cannot be combined with --correlations or "
                         "--auto-structure");
    if (!s.correlations.empty() && s.auto_structure)
        throw UsageError("--correlations and --auto-structure are mutually exclusive");
    const auto matrix = load_matrix(s.matrix, format_of(s));
    const auto fit = fit_config(s);

    ModelFile model;
    model.seed = s.seed;
    if (s.exact) {
        model.params = fit_independent_exact(matrix, fit);
    } else if (s.auto_structure) {
        const auto decision = optimize_strategy(matrix, optimizer_config(s), fit);
        if (is_majority_vote(decision.strategy)) {
            model.strategy = "MV";
            model.params = fit_gibbs_sgd(matrix, {}, fit);
        } else {
            const auto& gm = std::get<GenerativeModelStrategy>(decision.strategy);
            model.epsilon = gm.epsilon;
            model.params = fit_gibbs_sgd(matrix, gm.correlations, fit);
        }
    } else {
        CorrelationSet correlations;
        if (!s.correlations.empty()) correlations = load_correlations(s.correlations, matrix.cols());
        model.params = fit_gibbs_sgd(matrix, correlations, fit);
    }

    Sink sink(s.out, stdout_);
    write_header(sink.get(), c);
    write_model(sink.get(), model);
    sink.close();
    return kExitOk;
}

int cmd_predict(Command& c, std::ostream& stdout_) {
    const auto& s = c.s;
    std::vector<double> probs;
    if (!s.disc_model.empty()) {
        if (s.features.empty()) throw UsageError("--disc-model needs --features");
        const auto disc = load_disc_model(s.disc_model);
        probs = predict(disc, load_features(s.features));
    } else {
        if (s.matrix.empty()) throw UsageError("predict needs --matrix (or --disc-model with --features)");
        const auto matrix = load_matrix(s.matrix, format_of(s));
        if (s.mv) {
            probs.resize(matrix.rows());
            for (std::size_t i = 0; i < matrix.rows(); ++i) {
                const double f = majority_vote(matrix.row(i));
                probs[i] = f > 0 ? 1.0 : (f < 0 ? 0.0 : 0.5);
            }
        } else {
            if (s.model.empty()) throw UsageError("predict needs --model or --mv");
            const auto model = load_model(s.model);
            check_model_width(matrix, model.params);
            if (model.params.correlations.empty()) {
                probs = posterior_independent(matrix, model.params).probs;
            } else {
                GibbsOptions options;
                options.samples = s.gibbs_samples;
                options.burn_in = s.burn_in;
                options.seed = s.seed;
                probs = posterior_gibbs(matrix, model.params, options).probs;
            }
        }
    }
    Sink sink(s.out, stdout_);
    write_header(sink.get(), c);
    write_probs(sink.get(), probs);
    sink.close();
    return kExitOk;
}

int cmd_optimize(Command& c, std::ostream& stdout_) {
    const auto& s = c.s;
    const auto matrix = load_matrix(s.matrix, format_of(s));
    SweepOptions options;
    options.early_stop = s.early_stop;
    const auto decision = optimize_strategy(matrix, optimizer_config(s), fit_config(s), options);

    Sink sink(s.out, stdout_);
    auto& out = sink.get();
    write_header(out, c);
    out << "bound: " << io::format_double(decision.bound) << '\n';
    out << "strategy: " << (is_majority_vote(decision.strategy) ? "MV" : "GM") << '\n';
    if (decision.sweep) {
        out << "epsilon: " << io::format_double(decision.sweep->chosen_epsilon) << '\n';
        const auto& chosen = decision.sweep->chosen();
        out << "correlations:";
        for (const auto& [j, k] : chosen.selected.pairs()) out << ' ' << j << '-' << k;
        out << '\n';
        write_sweep_table(out, *decision.sweep);
    }
    sink.close();
    return kExitOk;
}

int cmd_structure(Command& c, std::ostream& stdout_) {
    const auto& s = c.s;
    if (!(s.epsilon > 0.0)) throw UsageError("structure needs --epsilon > 0");
    const auto matrix = load_matrix(s.matrix, format_of(s));
    const auto fit = fit_config(s);
    const auto independent = fit_independent_exact(matrix, fit);
    const auto structure = fit_structure(matrix, s.epsilon, fit, independent);
    SweepPoint point;
    point.epsilon = s.epsilon;
    point.selected = structure.select(s.epsilon);
    point.num_correlations = point.selected.size();
    for (const auto& [j, k] : point.selected.pairs()) point.weights.push_back(structure.pair_weight(j, k));

    Sink sink(s.out, stdout_);
    write_header(sink.get(), c);
    write_pair_list(sink.get(), point);
    sink.close();
    return kExitOk;
}

int cmd_sweep(Command& c, std::ostream& stdout_) {
    const auto& s = c.s;
    const auto matrix = load_matrix(s.matrix, format_of(s));
    SweepOptions options;
    options.early_stop = s.early_stop;
    const auto result = sweep(matrix, s.delta, fit_config(s), options);

    if (!s.pairs_dir.empty()) {
        fs::create_directories(s.pairs_dir);
        for (const auto& point : result.points) {
            // 10 significant digits so grid values like 0.30000000000000004 name as 0.3
            std::ostringstream name;
            name << "pairs_" << std::setprecision(10) << point.epsilon << ".csv";
            auto f = open_output(fs::path(s.pairs_dir) / name.str());
            write_header(f, c);
            f << "# epsilon=" << io::format_double(point.epsilon) << '\n';
            write_pair_list(f, point);
        }
    }
    Sink sink(s.out, stdout_);
    write_header(sink.get(), c);
    sink.get() << "# chosen_epsilon=" << io::format_double(result.chosen_epsilon) << '\n';
    write_sweep_table(sink.get(), result);
    sink.close();
    return kExitOk;
}

int cmd_advantage(Command& c, std::ostream& stdout_) {
    const auto& s = c.s;
    const auto matrix = load_matrix(s.matrix, format_of(s));
    const auto optimizer = optimizer_config(s);
    const double bound = advantage_bound(matrix, optimizer);

    Sink sink(s.out, stdout_);
    auto& out = sink.get();
    write_header(out, c);
    out << "density: " << io::format_double(matrix.rows() ? stats(matrix).density : 0.0) << '\n';
    out << "bound: " << io::format_double(bound) << '\n';
    out << "strategy: " << (prefers_majority_vote(bound, optimizer.gamma) ? "MV" : "GM") << '\n';
    if (!s.gold.empty() && !s.model.empty()) {
        const auto gold = load_gold(s.gold);
        check_aligned(matrix, gold);
        const auto model = load_model(s.model);
        check_model_width(matrix, model.params);
        out << "empirical_advantage: " << io::format_double(empirical_advantage(matrix, gold, model.params.acc))
            << '\n';
    }
    sink.close();
    return kExitOk;
}

int cmd_synth(Command& c, std::ostream& stdout_) {
    const auto& s = c.s;
    if (s.out == "-" || s.out.empty()) throw UsageError("synth writes several files; --out must name a directory");
    const fs::path dir(s.out);
    fs::create_directories(dir);
    const auto fmt = format_of(s);
    const std::string matrix_name = fmt == MatrixFormat::Sparse ? "matrix.txt" : "matrix.csv";

    auto emit = [&](const std::string& file, const std::function<void(std::ostream&)>& body) {
        auto f = open_output(dir / file);
        write_header(f, c);
        body(f);
        f.close();
        if (!f) throw IoError("failed writing '" + (dir / file).string() + "'");
    };

    if (s.preset == "example5") {
        CoverageScenarioConfig config;
        config.n = s.n;
        config.m = s.m;
        config.seed = s.seed;
        if (s.propensity > 0.0) config.propensity = s.propensity;
        const auto scenario = generate_coverage_scenario(config);
        emit(matrix_name, [&](std::ostream& o) { write_matrix(o, scenario.matrix, fmt); });
        emit("gold.csv", [&](std::ostream& o) { write_gold(o, scenario.gold); });
        emit("features.csv", [&](std::ostream& o) { write_features(o, scenario.features); });
        emit("uncovered.csv", [&](std::ostream& o) {
            for (const auto i : scenario.uncovered) o << i << '\n';
        });
    } else {
        SynthConfig config;
        if (s.preset == "footnote7") {
            config = footnote7_config(s.m, s.n, s.seed);
        } else if (s.preset == "example4") {
            config = example4_config(s.n, s.seed);
        } else {
            config = planted_pairs_config(s.m, s.pairs, s.n, s.propensity > 0.0 ? s.propensity : 0.5, s.seed);
        }
        if (s.propensity > 0.0) config.propensity = s.propensity;
        const auto data = generate(config);
        emit(matrix_name, [&](std::ostream& o) { write_matrix(o, data.matrix, fmt); });
        emit("gold.csv", [&](std::ostream& o) { write_gold(o, data.gold); });
        emit("truth.txt", [&](std::ostream& o) { write_truth(o, config, data.true_params); });
    }
    stdout_ << "wrote " << s.preset << " data to " << dir.string() << '\n';
    return kExitOk;
}

void write_metrics_row(std::ostream& out, const std::string& name, const ClassificationMetrics& m) {
    out << name << ',' << m.count << ',' << io::format_double(m.accuracy) << ',' << io::format_double(m.precision)
        << ',' << io::format_double(m.recall) << ',' << io::format_double(m.f1) << '\n';
}

int cmd_eval(Command& c, std::ostream& stdout_) {
    const auto& s = c.s;
    if (s.gold.empty()) throw UsageError("eval needs --gold");
    const auto matrix = load_matrix(s.matrix, format_of(s));
    const auto gold = load_gold(s.gold);
    check_aligned(matrix, gold);
    const auto optimizer = optimizer_config(s);

    std::vector<double> weights(matrix.cols(), 1.0);
    if (!s.model.empty()) {
        const auto model = load_model(s.model);
        check_model_width(matrix, model.params);
        weights = model.params.acc;
    }
    const double bound = advantage_bound(matrix, optimizer);
    const double advantage = empirical_advantage(matrix, gold, weights);

    // Rows scored: all of them, or only rows where every source abstains.
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < matrix.rows(); ++i)
        if (!s.abstain_only || matrix.row(i).empty()) rows.push_back(i);
    std::vector<Label> gold_rows;
    for (const auto i : rows) gold_rows.push_back(gold[i]);

    std::vector<double> label_scores;
    for (const auto i : rows) label_scores.push_back(weighted_vote(matrix.row(i), weights));

    Sink sink(s.out, stdout_);
    auto& out = sink.get();
    write_header(out, c);
    out << "dataset,advantage_pct,bound_pct,strategy,density\n";
    out << s.name << ',' << io::format_double(100.0 * advantage) << ',' << io::format_double(100.0 * bound) << ','
        << (prefers_majority_vote(bound, optimizer.gamma) ? "MV" : "GM") << ','
        << io::format_double(matrix.rows() ? stats(matrix).density : 0.0) << '\n';
    out << "predictor,rows,accuracy,precision,recall,f1\n";
    write_metrics_row(out, s.model.empty() ? "majority_vote" : "label_model",
                      classification_metrics(label_scores, gold_rows));
    if (!s.probs.empty()) {
        const auto probs = load_probs(s.probs);
        if (probs.probs.size() != matrix.rows())
            throw DimensionError("probabilities file has " + std::to_string(probs.probs.size()) +
                                 " rows, matrix has " + std::to_string(matrix.rows()));
        std::vector<double> scores;
        for (const auto i : rows) scores.push_back(probs.probs[i] - 0.5);
        write_metrics_row(out, "predictions", classification_metrics(scores, gold_rows));
    }
    sink.close();
    return kExitOk;
}

int cmd_train_disc(Command& c, std::ostream& stdout_) {
    const auto& s = c.s;
    if (s.features.empty() || s.probs.empty()) throw UsageError("train-disc needs --features and --probs");
    const auto features = load_features(s.features);
    const auto probs = load_probs(s.probs);
    const auto model = train(features, probs, fit_config(s));
    Sink sink(s.out, stdout_);
    write_header(sink.get(), c);
    write_disc_model(sink.get(), model);
    sink.close();
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Weak-supervision label model engine", "weaklabel"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    // Heap storage keeps each Command's Settings at a fixed address for CLI11's bindings.
    std::vector<std::unique_ptr<Command>> commands;
    auto make = [&](const std::string& name, const std::string& help) -> Command& {
        auto c = std::make_unique<Command>();
        c->name = name;
        c->app = app.add_subcommand(name, help);
        commands.push_back(std::move(c));
        return *commands.back();
    };

    auto& fit = make("fit", "Fit the generative label model");
    add_common(fit);
    add_matrix(fit);
    fit.flag("exact", fit.s.exact, "Independent model by exact likelihood");
    fit.option("correlations", fit.s.correlations, "Pair list to model (j,k per line)");
    fit.flag("auto-structure", fit.s.auto_structure, "Choose MV/GM and correlations with the optimizer");
    add_optimizer_options(fit);
    add_fit_options(fit);

    auto& pred = make("predict", "Probabilistic labels from a model, majority vote or discriminative model");
    add_common(pred);
    add_matrix(pred, false);
    pred.option("model", pred.s.model, "Generative model file");
    pred.flag("mv", pred.s.mv, "Majority vote: 1.0, 0.0 or 0.5 on ties");
    pred.option("disc-model", pred.s.disc_model, "Discriminative model file");
    pred.option("features", pred.s.features, "Feature CSV for --disc-model");
    pred.option("gibbs-samples", pred.s.gibbs_samples, "Gibbs samples for correlated models");
    pred.option("burn-in", pred.s.burn_in, "Gibbs burn-in sweeps");

    auto& opt = make("optimize", "Modeling strategy optimizer");
    add_common(opt);
    add_matrix(opt);
    add_optimizer_options(opt);
    opt.flag("early-stop", opt.s.early_stop, "Stop the sweep once no pairs are selected");
    add_fit_options(opt);

    auto& st = make("structure", "Select correlations at one threshold");
    add_common(st);
    add_matrix(st);
    st.option("epsilon", st.s.epsilon, "Threshold and l1 coefficient", ",--l1");
    add_fit_options(st);

    auto& sw = make("sweep", "Structure learning over the epsilon grid");
    add_common(sw);
    add_matrix(sw);
    sw.option("delta", sw.s.delta, "Search resolution");
    sw.flag("early-stop", sw.s.early_stop, "Stop once no pairs are selected");
    sw.option("pairs-dir", sw.s.pairs_dir, "Directory for per-epsilon pair lists");
    add_fit_options(sw);

    auto& adv = make("advantage", "Optimizer bound and empirical modeling advantage");
    add_common(adv);
    add_matrix(adv);
    adv.option("gold", adv.s.gold, "Gold labels (+1/-1 per line)");
    adv.option("model", adv.s.model, "Model whose weights give the empirical advantage");
    add_optimizer_options(adv);

    auto& syn = make("synth", "Write a synthetic dataset");
    add_common(syn);
    syn.option("preset", syn.s.preset, "Dataset family")
        ->check(CLI::IsMember({"footnote7", "example4", "planted", "example5"}));
    syn.option("format", syn.s.format, "Label matrix format")->check(CLI::IsMember({"dense", "sparse"}));
    syn.option("m", syn.s.m, "Sources (footnote7, planted, example5)");
    syn.option("n", syn.s.n, "Rows");
    syn.option("pairs", syn.s.pairs, "Planted duplicate pairs (planted)");
    syn.option("propensity", syn.s.propensity, "Override the preset's vote probability (0 keeps it)");

    auto& ev = make("eval", "Advantage report and classification metrics");
    add_common(ev);
    add_matrix(ev);
    ev.option("gold", ev.s.gold, "Gold labels");
    ev.option("model", ev.s.model, "Generative model (default: majority vote)");
    ev.option("probs", ev.s.probs, "Predictions to score (index,p_positive)");
    ev.flag("abstain-only", ev.s.abstain_only, "Score only rows where every source abstains");
    ev.option("name", ev.s.name, "Dataset name for the report");
    add_optimizer_options(ev);

    auto& td = make("train-disc", "Train the noise-aware discriminative model");
    td.s.epochs = 1000;
    add_common(td);
    td.option("features", td.s.features, "Feature CSV");
    td.option("probs", td.s.probs, "Probabilistic labels (index,p_positive)");
    add_fit_options(td);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    Command* chosen = nullptr;
    for (auto& c : commands)
        if (c->app->parsed()) chosen = c.get();

    try {
        apply_config_file(*chosen);
        check_required(*chosen);
        if (chosen->name == "fit") return cmd_fit(*chosen, out);
        if (chosen->name == "predict") return cmd_predict(*chosen, out);
        if (chosen->name == "optimize") return cmd_optimize(*chosen, out);
        if (chosen->name == "structure") return cmd_structure(*chosen, out);
        if (chosen->name == "sweep") return cmd_sweep(*chosen, out);
        if (chosen->name == "advantage") return cmd_advantage(*chosen, out);
        if (chosen->name == "synth") return cmd_synth(*chosen, out);
        if (chosen->name == "eval") return cmd_eval(*chosen, out);
        return cmd_train_disc(*chosen, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DivergenceError& e) {
        err << "divergence: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace weaklabel::cli
