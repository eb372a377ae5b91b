#ifndef BALANS_TOOLS_CLI_HPP
#define BALANS_TOOLS_CLI_HPP

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <balans/balans.hpp>

/**
 * @file balans_cli.hpp
 *
 * @brief The `balans` command line: `correct`, `synth`, `eval` and `verify-theory`.
 *
 * `run()` takes the full argument vector and two streams, so tests can drive every subcommand in-process.
 */

namespace balans::cli {

using json = nlohmann::json;

namespace detail {

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = parse_double(item);
        if (!v) {
            throw InputError(flag + ": cannot parse '" + item + "' as a number");
        }
        if constexpr (std::is_integral_v<T>) {
            if (*v < 0 || *v != std::floor(*v)) {
                throw InputError(flag + ": '" + item + "' is not a non-negative integer");
            }
        }
        out.push_back(static_cast<T>(*v));
    }
    if (out.empty()) {
        throw InputError(flag + ": empty list");
    }
    return out;
}

inline std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) {
        throw InputError("cannot open '" + path + "' for writing");
    }
    return out;
}

inline std::vector<std::string> read_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("'" + path + "' is empty");
    }
    return split_csv_line(line);
}

inline void require_column(const std::vector<std::string>& header, const std::string& name, const std::string& flag) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
        throw InputError(flag + ": column '" + name + "' not found in the input header");
    }
}

inline bool truthy(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s == "1" || s == "true" || s == "yes" || s == "control";
}

inline void write_json(const json& j, const std::optional<std::string>& path, std::ostream& out) {
    if (path) {
        auto f = open_output(*path);
        f << j.dump(2) << '\n';
    } else {
        out << j.dump(2) << '\n';
    }
}

inline json to_json(const MetricReport& r) {
    return json{{"batch",
                 {{"graph_connectivity", r.graph_connectivity}, {"kbet", r.kbet}, {"lisi_batch", r.lisi_batch}, {"silhouette_batch", r.silhouette_batch}}},
                {"label", {{"lisi_label", r.lisi_label}, {"ari", r.ari}, {"nmi", r.nmi}, {"silhouette_label", r.silhouette_label}}},
                {"avg_batch", r.avg_batch},
                {"avg_label", r.avg_label},
                {"avg_all", r.avg_all}};
}

/**
 * Splice the entries of a JSON config file into the argument list right after the subcommand,
 * so that flags given on the command line (which come later and win under the take-last policy) override them.
 */
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::optional<std::string> path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!path) {
        return args;
    }
    std::ifstream in(*path);
    if (!in) {
        throw InputError("--config: cannot open '" + *path + "'");
    }
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("--config: " + std::string(e.what()));
    }
    if (!cfg.is_object()) {
        throw InputError("--config: top level must be an object");
    }
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        if (value.is_null()) {
            continue;
        }
        if (value.is_boolean()) {
            if (value.get<bool>()) {
                tokens.push_back(flag);
            }
        } else if (value.is_string()) {
            tokens.push_back(flag);
            tokens.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            tokens.push_back(flag);
            tokens.push_back(value.dump());
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) {
                joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
            }
            tokens.push_back(flag);
            tokens.push_back(joined);
        } else {
            throw InputError("--config: unsupported value for '" + key + "'");
        }
    }
    const auto at = std::min<std::size_t>(2, args.size());
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), tokens.begin(), tokens.end());
    return args;
}

}

struct CorrectArgs {
    std::string input;
    std::string output;
    std::optional<std::string> metadata;
    std::optional<std::string> dump_rows;
    std::string batch_col = "batch";
    std::vector<std::string> text_cols;
    std::optional<std::string> control_col;
    std::optional<std::string> group_col;
    HyperParams params;
    PreprocessOptions preprocess;
    std::string novelty = "cumulative";
    int threads = 1;
    bool trace = false;
};

inline int cmd_correct(const CorrectArgs& a, std::ostream& err) {
    const auto header = detail::read_header(a.input);
    detail::require_column(header, a.batch_col, "--batch-col");
    std::vector<std::string> text{a.batch_col};
    for (const auto& c : a.text_cols) {
        detail::require_column(header, c, "--text-col");
        text.push_back(c);
    }
    if (a.control_col) {
        detail::require_column(header, *a.control_col, "--control-col");
        text.push_back(*a.control_col);
    }
    if (a.group_col) {
        detail::require_column(header, *a.group_col, "--group-col");
        text.push_back(*a.group_col);
    }
    std::sort(text.begin(), text.end());
    text.erase(std::unique(text.begin(), text.end()), text.end());

    const auto table = read_profile_csv(a.input, text);
    std::vector<std::string> batch_names;
    const auto batches = BatchLabels::from_strings(table.column(a.batch_col), &batch_names);

    std::optional<ControlMask> mask;
    if (a.control_col || a.group_col) {
        std::vector<char> is_control(table.rows(), 1);
        if (a.control_col) {
            const auto& cells = table.column(*a.control_col);
            for (std::size_t i = 0; i < cells.size(); ++i) {
                is_control[i] = detail::truthy(cells[i]);
            }
        }
        std::vector<int> group = a.group_col ? ClusterLabels::from_strings(table.column(*a.group_col)).ids() : batches.ids();
        mask.emplace(std::move(is_control), std::move(group));
    }

    CorrectionOptions opt;
    opt.params = a.params;
    if (a.novelty == "block") {
        opt.params.novelty = NoveltyReference::block;
    } else if (a.novelty != "cumulative") {
        throw InputError("--novelty: expected 'cumulative' or 'block'");
    }
    opt.preprocess = a.preprocess;
    opt.threads = a.threads;
    if (a.trace) {
        opt.trace = [&err](const SampleEvent& e) {
            err << json{{"step", e.step}, {"index", e.index}, {"delta", e.delta}, {"nnz", e.nnz}}.dump() << '\n';
        };
    }

    const auto begin = std::chrono::steady_clock::now();
    const auto res = correct(ProfileMatrix(table.features), batches, opt, mask);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();

    std::vector<CsvColumn> layout;
    std::size_t slot = 0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const bool numeric = std::find(table.feature_positions.begin(), table.feature_positions.end(), c) != table.feature_positions.end();
        layout.push_back(CsvColumn{table.header[c], numeric, numeric ? slot++ : c});
    }
    {
        auto out = detail::open_output(a.output);
        write_csv(out, layout, res.corrected, table.text);
    }
    if (a.dump_rows) {
        write_bala1(*a.dump_rows, res.rows);
    }

    json pre{{"var_filter", a.preprocess.variation_threshold ? json(*a.preprocess.variation_threshold) : json(nullptr)},
             {"mad_normalize", a.preprocess.mad_normalize},
             {"int", a.preprocess.rank_int},
             {"corr_filter", a.preprocess.correlation_threshold ? json(*a.preprocess.correlation_threshold) : json(nullptr)},
             {"pca", opt.params.pca_dims ? json(*opt.params.pca_dims) : json(nullptr)},
             {"control_col", a.control_col ? json(*a.control_col) : json(nullptr)},
             {"group_col", a.group_col ? json(*a.group_col) : json(nullptr)}};
    json meta{{"command", "correct"},
              {"version", "0.1.0"},
              {"input", a.input},
              {"output", a.output},
              {"batch_col", a.batch_col},
              {"seed", opt.params.seed},
              {"params", {{"k", opt.params.k}, {"tau", opt.params.tau}, {"block_len", opt.params.block_len}, {"novelty", a.novelty}}},
              {"preprocess", pre},
              {"threads", a.threads},
              {"n", table.rows()},
              {"d", table.features.cols()},
              {"batches", batch_names},
              {"m", res.rows.size()},
              {"nnz", res.rows.nnz()},
              {"uncovered", res.uncovered},
              {"exhausted", res.exhausted},
              {"wall_time_seconds", seconds}};
    auto f = detail::open_output(a.metadata.value_or(a.output + ".meta.json"));
    f << meta.dump(2) << '\n';
    return 0;
}

struct SynthArgs {
    std::string output;
    GmmSpec gmm;
    bool block_model = false;
    std::string sizes = "10,10";
    std::string affinities = "1,2";
    double lambda = 0;
    bool shuffle = false;
    std::string format = "csv";
};

inline int cmd_synth(const SynthArgs& a) {
    if (!a.block_model) {
        const auto data = generate_gmm(a.gmm);
        const auto d = static_cast<std::size_t>(data.profiles.cols());
        std::vector<CsvColumn> layout;
        for (std::size_t f = 0; f < d; ++f) {
            layout.push_back(CsvColumn{"f" + std::to_string(f), true, f});
        }
        layout.push_back(CsvColumn{"batch", false, 0});
        layout.push_back(CsvColumn{"label", false, 1});
        std::vector<std::vector<std::string>> strings(2);
        for (Index i = 0; i < data.profiles.rows(); ++i) {
            strings[0].push_back("b" + std::to_string(data.batches[i]));
            strings[1].push_back("l" + std::to_string(data.labels[i]));
        }
        auto out = detail::open_output(a.output);
        write_csv(out, layout, data.profiles.data(), strings);
        return 0;
    }

    BlockModelSpec spec;
    spec.sizes = detail::parse_list<Index>(a.sizes, "--sizes");
    spec.affinities = detail::parse_list<double>(a.affinities, "--affinities");
    spec.lambda = a.lambda;
    spec.seed = a.gmm.seed;
    spec.shuffle = a.shuffle;
    const auto model = generate_block_affinity(spec);
    const auto n = static_cast<std::size_t>(model.observed.rows());
    if (a.format == "bala1") {
        SparseAffinityRows rows(n);
        for (Index i = 0; i < n; ++i) {
            rows.push_row(i, dense_row(model.observed, i));
        }
        auto out = detail::open_output(a.output, std::ios::binary);
        write_bala1(out, rows);
    } else if (a.format == "csv") {
        std::vector<CsvColumn> layout;
        for (std::size_t j = 0; j < n; ++j) {
            layout.push_back(CsvColumn{"c" + std::to_string(j), true, j});
        }
        layout.push_back(CsvColumn{"cluster", false, 0});
        std::vector<std::vector<std::string>> strings(1);
        for (auto c : model.cluster) {
            strings[0].push_back(std::to_string(c));
        }
        auto out = detail::open_output(a.output);
        write_csv(out, layout, model.observed, strings);
    } else {
        throw InputError("--format: expected 'csv' or 'bala1'");
    }
    return 0;
}

struct EvalArgs {
    std::string input;
    std::optional<std::string> output;
    std::optional<std::string> csv;
    std::string batch_col = "batch";
    std::string label_col = "label";
    std::vector<std::string> text_cols;
    EvalConfig config;
    int clusters = 0;
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const auto header = detail::read_header(a.input);
    detail::require_column(header, a.batch_col, "--batch-col");
    detail::require_column(header, a.label_col, "--label-col");
    std::vector<std::string> text{a.batch_col, a.label_col};
    for (const auto& c : a.text_cols) {
        detail::require_column(header, c, "--text-col");
        text.push_back(c);
    }
    std::sort(text.begin(), text.end());
    text.erase(std::unique(text.begin(), text.end()), text.end());
    const auto table = read_profile_csv(a.input, text);
    const auto batches = BatchLabels::from_strings(table.column(a.batch_col));
    const auto labels = ClusterLabels::from_strings(table.column(a.label_col));

    auto cfg = a.config;
    if (a.clusters > 0) {
        cfg.clusters = a.clusters;
    }
    const auto report = evaluate(table.features, batches, labels, cfg);
    json j = detail::to_json(report);
    j["config"] = {{"input", a.input},
                   {"n", table.rows()},
                   {"neighborhood", cfg.neighborhood},
                   {"alpha", cfg.alpha},
                   {"clusters", cfg.clusters.value_or(static_cast<int>(labels.count()))},
                   {"seed", cfg.seed}};
    detail::write_json(j, a.output, out);

    if (a.csv) {
        bool fresh = true;
        {
            std::ifstream probe(*a.csv);
            fresh = !probe || probe.peek() == std::ifstream::traits_type::eof();
        }
        auto f = detail::open_output(*a.csv, std::ios::app);
        if (fresh) {
            f << "input,graph_connectivity,kbet,lisi_batch,silhouette_batch,lisi_label,ari,nmi,silhouette_label,avg_batch,avg_label,avg_all\n";
        }
        f << quote_csv(a.input);
        for (double v : {report.graph_connectivity, report.kbet, report.lisi_batch, report.silhouette_batch, report.lisi_label, report.ari, report.nmi,
                         report.silhouette_label, report.avg_batch, report.avg_label, report.avg_all}) {
            f << ',' << format_double(v);
        }
        f << '\n';
    }
    return 0;
}

struct TheoryArgs {
    std::string experiment;
    std::optional<std::string> output;
    std::optional<std::string> csv;
    std::string sizes = "910,10,10,10,10,10,10,10,10,10";
    std::string affinities;
    std::optional<double> lambda;
    std::uint64_t seed = 0;
    std::size_t t = 3;
    std::size_t m = 30;
    std::size_t trials = 200;
    std::string sampler = "both";
    std::string t_values = "4,8,16,32,64";
    std::string stopping = "per-cluster";
    double budget_constant = 2.0;
    std::string n_values = "5000,10000,20000,40000";
    GmmSpec gmm;
    int threads = 1;
};

inline int cmd_verify_theory(const TheoryArgs& a, std::ostream& out) {
    BlockModelSpec spec;
    if (a.experiment != "runtime") {
        spec.sizes = detail::parse_list<Index>(a.sizes, "--sizes");
        spec.affinities = a.affinities.empty() ? std::vector<double>(spec.sizes.size(), 1.0) : detail::parse_list<double>(a.affinities, "--affinities");
        spec.seed = a.seed;
    }
    std::ostringstream csv;
    json j{{"experiment", a.experiment}, {"seed", a.seed}};

    if (a.experiment == "coverage") {
        spec.lambda = a.lambda.value_or(0.0);
        spec.validate();
        std::vector<std::pair<std::string, SamplerChoice>> choices;
        if (a.sampler == "adaptive" || a.sampler == "both") {
            choices.emplace_back("adaptive", SamplerChoice::adaptive);
        }
        if (a.sampler == "uniform" || a.sampler == "both") {
            choices.emplace_back("uniform", SamplerChoice::uniform);
        }
        if (choices.empty()) {
            throw InputError("--sampler: expected 'adaptive', 'uniform' or 'both'");
        }
        j["spec"] = {{"sizes", spec.sizes}, {"affinities", spec.affinities}, {"lambda", spec.lambda}};
        j["t"] = a.t;
        j["m"] = a.m;
        j["trials"] = a.trials;
        csv << "sampler,trial,success";
        for (std::size_t k = 0; k < spec.sizes.size(); ++k) {
            csv << ",T" << k;
        }
        csv << '\n';
        for (const auto& [name, choice] : choices) {
            const auto res = run_coverage_experiment(spec, a.t, a.m, a.trials, choice, a.threads);
            j["results"][name] = {{"success_rate", res.success_rate}};
            for (std::size_t r = 0; r < a.trials; ++r) {
                csv << name << ',' << r << ',' << int(res.success[r]);
                for (auto c : res.counts[r]) {
                    csv << ',' << c;
                }
                csv << '\n';
            }
        }
    } else if (a.experiment == "spectral") {
        spec.lambda = a.lambda.value_or(static_cast<double>(spec.size()));
        SpectralOptions opt;
        if (a.stopping == "budget") {
            opt.stopping = SpectralStopping::budget;
        } else if (a.stopping != "per-cluster") {
            throw InputError("--stopping: expected 'per-cluster' or 'budget'");
        }
        opt.budget_constant = a.budget_constant;
        opt.threads = a.threads;
        const auto ts = detail::parse_list<std::size_t>(a.t_values, "--t-values");
        const auto res = run_spectral_experiment(spec, ts, a.trials, opt);
        j["spec"] = {{"sizes", spec.sizes}, {"affinities", spec.affinities}, {"lambda", spec.lambda}};
        j["trials"] = a.trials;
        j["stopping"] = a.stopping;
        j["t_values"] = res.t_values;
        j["median_errors"] = res.median_errors;
        j["slope"] = res.slope;
        csv << "t,trial,rows,error\n";
        for (std::size_t i = 0; i < ts.size(); ++i) {
            for (std::size_t r = 0; r < a.trials; ++r) {
                csv << ts[i] << ',' << r << ',' << res.rows[i][r] << ',' << format_double(res.errors[i][r]) << '\n';
            }
        }
    } else if (a.experiment == "runtime") {
        const auto ns = detail::parse_list<Index>(a.n_values, "--n-values");
        CorrectionOptions opt;
        opt.params.seed = a.seed;
        opt.threads = a.threads;
        auto gmm = a.gmm;
        gmm.seed = a.seed;
        const auto rows = run_runtime_experiment(ns, gmm, opt);
        csv << "n,seconds,m\n";
        for (const auto& r : rows) {
            j["rows"].push_back({{"n", r.n}, {"seconds", r.seconds}, {"m", r.sampled_rows}});
            csv << r.n << ',' << format_double(r.seconds) << ',' << r.sampled_rows << '\n';
        }
        for (std::size_t i = 1; i < rows.size(); ++i) {
            j["time_ratios"].push_back(rows[i].seconds / rows[i - 1].seconds);
        }
    } else {
        throw InputError("--experiment: expected 'coverage', 'spectral' or 'runtime'");
    }

    detail::write_json(j, a.output, out);
    if (a.csv) {
        auto f = detail::open_output(*a.csv);
        f << csv.str();
    }
    return 0;
}

/**
 * Parse and execute one command line. Returns the process exit code:
 * 0 on success, 2 for invalid input (including unreadable files and bad flags), 3 for numerical failures.
 */
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Batch correction by adaptive affinity sampling and sparse smoothing", "balans"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    auto add_config = [](CLI::App* sub) {
        sub->add_option("--config", "JSON file of flag values; flags on the command line take precedence");
    };

    CorrectArgs ca;
    std::optional<double> var_filter, corr_filter;
    std::optional<int> pca;
    auto* correct_cmd = app.add_subcommand("correct", "Correct batch effects in a profile CSV");
    correct_cmd->add_option("--input,-i", ca.input, "Input CSV")->required();
    correct_cmd->add_option("--output,-o", ca.output, "Corrected CSV")->required();
    correct_cmd->add_option("--metadata", ca.metadata, "Run metadata JSON (default: <output>.meta.json)");
    correct_cmd->add_option("--dump-rows", ca.dump_rows, "Write the sampled sparse rows in BALA1 format");
    correct_cmd->add_option("--batch-col", ca.batch_col, "Batch column")->capture_default_str();
    correct_cmd->add_option("--text-col", ca.text_cols, "Extra non-numeric column passed through unchanged")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    correct_cmd->add_option("--label-col", ca.text_cols, "Label column passed through unchanged")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    correct_cmd->add_option("--control-col", ca.control_col, "Column marking control samples (1/true/yes/control)");
    correct_cmd->add_option("--group-col", ca.group_col, "Grouping for normalization statistics (default: batch)");
    correct_cmd->add_option("--k", ca.params.k, "Neighbor rank of the local scale")->capture_default_str();
    correct_cmd->add_option("--tau", ca.params.tau, "Steps without new coverage before stopping")->capture_default_str();
    correct_cmd->add_option("--block-len", ca.params.block_len, "Steps between block coverage resets")->capture_default_str();
    correct_cmd->add_option("--seed", ca.params.seed, "Random seed")->capture_default_str();
    correct_cmd->add_option("--novelty", ca.novelty, "Coverage reference for the stopping rule: cumulative or block")->capture_default_str();
    correct_cmd->add_option("--pca", pca, "Compute affinities on this many principal components");
    correct_cmd->add_flag("--mad-normalize", ca.preprocess.mad_normalize, "Robust z-score against controls");
    correct_cmd->add_flag("--int", ca.preprocess.rank_int, "Rank-based inverse normal transform");
    correct_cmd->add_option("--var-filter", var_filter, "Drop features with robust variation below this");
    correct_cmd->add_option("--corr-filter", corr_filter, "Drop features correlated above this");
    correct_cmd->add_option("--threads", ca.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    correct_cmd->add_flag("--trace", ca.trace, "Write one JSON line per sampling step to stderr");
    add_config(correct_cmd);

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic data");
    synth_cmd->add_option("--output,-o", sa.output, "Output file")->required();
    synth_cmd->add_option("--labels", sa.gmm.labels)->capture_default_str();
    synth_cmd->add_option("--batches", sa.gmm.batches)->capture_default_str();
    synth_cmd->add_option("--dims", sa.gmm.dims)->capture_default_str();
    synth_cmd->add_option("--n-per", sa.gmm.n_per, "Points per (label, batch) cell")->capture_default_str();
    synth_cmd->add_option("--sigma-label", sa.gmm.sigma_label)->capture_default_str();
    synth_cmd->add_option("--sigma-batch", sa.gmm.sigma_batch)->capture_default_str();
    synth_cmd->add_option("--sigma-noise", sa.gmm.sigma_noise)->capture_default_str();
    synth_cmd->add_option("--seed", sa.gmm.seed)->capture_default_str();
    synth_cmd->add_flag("--block-model", sa.block_model, "Write a noisy block affinity matrix instead of profiles");
    synth_cmd->add_option("--sizes", sa.sizes, "Block sizes, comma separated")->capture_default_str();
    synth_cmd->add_option("--affinities", sa.affinities, "Block affinities, comma separated")->capture_default_str();
    synth_cmd->add_option("--lambda", sa.lambda, "Exponential noise rate (0: noiseless)")->capture_default_str();
    synth_cmd->add_flag("--shuffle", sa.shuffle, "Permute rows and columns jointly");
    synth_cmd->add_option("--format", sa.format, "csv or bala1")->capture_default_str();
    add_config(synth_cmd);

    EvalArgs ea;
    std::optional<int> eval_threads;
    auto* eval_cmd = app.add_subcommand("eval", "Score a representation with batch-mixing and label-conservation metrics");
    eval_cmd->add_option("--input,-i", ea.input, "Profile CSV")->required();
    eval_cmd->add_option("--output,-o", ea.output, "Report JSON (default: stdout)");
    eval_cmd->add_option("--csv", ea.csv, "Append one row of scores to this CSV");
    eval_cmd->add_option("--batch-col", ea.batch_col)->capture_default_str();
    eval_cmd->add_option("--label-col", ea.label_col)->capture_default_str();
    eval_cmd->add_option("--text-col", ea.text_cols, "Extra non-numeric column to ignore")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    eval_cmd->add_option("--neighborhood", ea.config.neighborhood)->capture_default_str();
    eval_cmd->add_option("--alpha", ea.config.alpha, "kBET significance level")->capture_default_str();
    eval_cmd->add_option("--clusters", ea.clusters, "k-means clusters for ARI/NMI (default: number of labels)");
    eval_cmd->add_option("--seed", ea.config.seed)->capture_default_str();
    eval_cmd->add_option("--threads", ea.config.threads)->check(CLI::PositiveNumber)->capture_default_str();
    add_config(eval_cmd);

    TheoryArgs ta;
    auto* theory_cmd = app.add_subcommand("verify-theory", "Monte Carlo checks on synthetic block models");
    theory_cmd->add_option("--experiment", ta.experiment)->required()->check(CLI::IsMember({"coverage", "spectral", "runtime"}));
    theory_cmd->add_option("--output,-o", ta.output, "Result JSON (default: stdout)");
    theory_cmd->add_option("--csv", ta.csv, "Per-trial CSV");
    theory_cmd->add_option("--sizes", ta.sizes)->capture_default_str();
    theory_cmd->add_option("--affinities", ta.affinities, "Default: 1 for every block");
    theory_cmd->add_option("--lambda", ta.lambda, "Noise rate (coverage default 0, spectral default n)");
    theory_cmd->add_option("--seed", ta.seed)->capture_default_str();
    theory_cmd->add_option("--t", ta.t)->capture_default_str();
    theory_cmd->add_option("--m", ta.m)->capture_default_str();
    theory_cmd->add_option("--trials", ta.trials)->capture_default_str();
    theory_cmd->add_option("--sampler", ta.sampler, "adaptive, uniform or both")->capture_default_str();
    theory_cmd->add_option("--t-values", ta.t_values)->capture_default_str();
    theory_cmd->add_option("--stopping", ta.stopping, "per-cluster or budget")->capture_default_str();
    theory_cmd->add_option("--budget-constant", ta.budget_constant)->capture_default_str();
    theory_cmd->add_option("--n-values", ta.n_values)->capture_default_str();
    theory_cmd->add_option("--labels", ta.gmm.labels)->capture_default_str();
    theory_cmd->add_option("--batches", ta.gmm.batches)->capture_default_str();
    theory_cmd->add_option("--dims", ta.gmm.dims)->capture_default_str();
    theory_cmd->add_option("--threads", ta.threads)->check(CLI::PositiveNumber)->capture_default_str();
    add_config(theory_cmd);

    try {
        args = detail::expand_config(std::move(args));
        std::vector<const char*> argv;
        for (const auto& s : args) {
            argv.push_back(s.c_str());
        }
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e, out, err);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e, out, err);
        } catch (const CLI::ParseError& e) {
            app.exit(e, out, err);
            return 2;
        }

        if (correct_cmd->parsed()) {
            ca.preprocess.variation_threshold = var_filter;
            ca.preprocess.correlation_threshold = corr_filter;
            ca.params.pca_dims = pca;
            return cmd_correct(ca, err);
        }
        if (synth_cmd->parsed()) {
            return cmd_synth(sa);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(ea, out);
        }
        return cmd_verify_theory(ta, out);
    } catch (const Error& e) {
        err << "balans: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "balans: " << e.what() << '\n';
        return 1;
    }
}

}

#endif
