#pragma once

// Command-line front end: run | batch | analyze | personas | validate.
// Exit codes: 0 success, 1 user error (flags, config violations), 2 backend
// or IO failure. Every command is reproducible from its config file plus
// environment secrets; nothing prompts interactively.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convosim/analysis.hpp"
#include "convosim/config.hpp"
#include "convosim/engine.hpp"

namespace convosim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitFailure = 2;

namespace detail {

struct RunOptions {
    std::string config;
    bool mock = false;
    std::uint64_t seed = 0;
    ConfigOverrides overrides;
};

struct BatchOptions {
    std::string config;
    bool mock = false;
    bool dry_run = false;
    std::uint64_t seed = 0;
    ConfigOverrides overrides;
};

struct AnalyzeOptions {
    std::vector<std::string> inputs;
    std::size_t top_n = 50;
    std::vector<std::string> filters;
    std::string machine_out;
    std::string stopwords_file;
};

struct PersonasOptions {
    bool full = false;
    std::string personas_file;
};

struct ValidateOptions {
    std::string config;
};

inline int planned_simulations(const BatchConfig& batch) {
    int total = 0;
    for (const auto& cell : batch.cells) total += cell.repetitions;
    return total;
}

inline void print_cell_matrix(const BatchConfig& batch, std::ostream& out) {
    std::size_t model_width = 5;
    for (const auto& cell : batch.cells)
        model_width = std::max(model_width, cell.model_label.size());
    out << std::left << std::setw(22) << "style" << std::setw(10)
        << "context" << std::setw(model_width + 2) << "model"
        << std::setw(10) << "few_shot" << "reps\n";
    for (const auto& cell : batch.cells)
        out << std::left << std::setw(22)
            << style_label(cell.style, cell.few_shot) << std::setw(10)
            << to_string(cell.context_strategy) << std::setw(model_width + 2)
            << cell.model_label << std::setw(10)
            << (cell.few_shot ? "yes" : "no") << cell.repetitions << "\n";
}

inline int do_run(const RunOptions& opts, std::ostream& out,
                  std::ostream& err) {
    RunFile run;
    try {
        PersonaCatalog personas;
        run = load_run_file(opts.config, personas);
        apply_overrides(run, opts.overrides);
        if (const auto violations = validate_config(run.config);
            !violations.empty()) {
            for (const auto& v : violations) err << "config: " << v << "\n";
            return kExitUserError;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }
    try {
        const BackendRegistry registry =
            build_registry(run.backends, opts.mock, opts.seed);
        const Transcript transcript = run_simulation(run.config, registry);
        const auto path = write_transcript_file(run.output_dir, transcript);
        out << "transcript " << transcript.simulation_id << " ("
            << transcript.utterances.size() << " utterances) -> "
            << path.string() << "\n";
        if (transcript.aborted) {
            err << "simulation aborted: " << transcript.abort_reason << "\n";
            return kExitFailure;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

inline int do_batch(const BatchOptions& opts, std::ostream& out,
                    std::ostream& err) {
    BatchFile file;
    try {
        file = load_batch_file(opts.config);
        apply_overrides(file, opts.overrides);
        if (const auto violations = validate_batch(file.batch);
            !violations.empty()) {
            for (const auto& v : violations) err << "config: " << v << "\n";
            return kExitUserError;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }
    if (opts.dry_run) {
        print_cell_matrix(file.batch, out);
        out << planned_simulations(file.batch) << " simulations planned\n";
        return kExitOk;
    }
    try {
        const BackendRegistry registry =
            build_registry(file.backends, opts.mock, opts.seed);
        const PersonaCatalog personas;
        const RunManifest manifest =
            run_batch(file.batch, registry, personas);
        int aborted = 0;
        for (const auto& cell : manifest.cells)
            for (const auto& id : cell.transcript_ids) {
                const auto loaded = load_transcript_file(
                    file.batch.output_dir / (id + ".jsonl"));
                if (!loaded.empty() && loaded.front().aborted) ++aborted;
            }
        out << "batch " << manifest.batch_id << ": "
            << manifest.total_transcripts() << " transcripts";
        if (aborted > 0) out << " (" << aborted << " aborted)";
        out << " -> " << file.batch.output_dir.string() << "\n";
        return aborted == 0 ? kExitOk : kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

inline int do_validate(const ValidateOptions& opts, std::ostream& out,
                       std::ostream& err) {
    try {
        const auto doc = convosim::detail::load_json_document(opts.config);
        if (doc.contains("cells") || doc.contains("matrix")) {
            const BatchFile file = load_batch_file(opts.config);
            if (const auto violations = validate_batch(file.batch);
                !violations.empty()) {
                for (const auto& v : violations) err << v << "\n";
                return kExitUserError;
            }
            out << "ok\n"
                << planned_simulations(file.batch) << " simulations planned\n";
        } else {
            PersonaCatalog personas;
            const RunFile run = load_run_file(opts.config, personas);
            if (const auto violations = validate_config(run.config);
                !violations.empty()) {
                for (const auto& v : violations) err << v << "\n";
                return kExitUserError;
            }
            out << "ok\n1 simulation planned\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }
}

inline int do_personas(const PersonasOptions& opts, std::ostream& out,
                       std::ostream& err) {
    try {
        PersonaCatalog catalog;
        if (!opts.personas_file.empty())
            catalog.load_user_file(opts.personas_file);
        auto print = [&](const std::string& name, const PersonaProfile& p) {
            if (opts.full) {
                out << "# " << name << " (" << to_string(p.role) << ")\n"
                    << p.system_prompt << "\n\n";
            } else {
                std::string preview = p.system_prompt.substr(0, 72);
                if (p.system_prompt.size() > 72) preview += "...";
                out << std::left << std::setw(22) << name << std::setw(8)
                    << to_string(p.role) << preview << "\n";
            }
        };
        for (Style s : {Style::Authoritarian, Style::Authoritative,
                        Style::Permissive, Style::Uninvolved, Style::Child})
            print(to_string(s), catalog.get(s));
        for (const auto& [name, profile] : catalog.user_defined())
            print(name, profile);
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }
}

inline CorpusFilters parse_filters(const std::vector<std::string>& entries) {
    CorpusFilters filters;
    for (const auto& entry : entries) {
        std::size_t start = 0;
        while (start <= entry.size()) {
            const auto comma = entry.find(',', start);
            const std::string item = entry.substr(
                start, comma == std::string::npos ? std::string::npos
                                                  : comma - start);
            if (!item.empty()) {
                const auto eq = item.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument(
                        "filter entries must look like key=value: " + item);
                const std::string key = item.substr(0, eq);
                const std::string value = item.substr(eq + 1);
                if (key == "style")
                    filters.styles.insert(value);
                else if (key == "context")
                    filters.contexts.insert(parse_context_strategy(value));
                else if (key == "model")
                    filters.models.insert(value);
                else if (key == "speaker")
                    filters.speaker = parse_role(value);
                else
                    throw std::invalid_argument("unknown filter key: " + key);
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    return filters;
}

inline int do_analyze(const AnalyzeOptions& opts, std::ostream& out,
                      std::ostream& err) {
    Corpus corpus;
    std::set<std::string> stopwords;
    try {
        if (opts.inputs.empty()) {
            err << "error: analyze needs at least one input path\n";
            return kExitUserError;
        }
        std::vector<std::filesystem::path> paths(opts.inputs.begin(),
                                                 opts.inputs.end());
        corpus = load_corpus(paths);
        corpus.filters = parse_filters(opts.filters);
        if (!opts.stopwords_file.empty()) {
            std::ifstream in(opts.stopwords_file);
            if (!in)
                throw std::invalid_argument("cannot open stopword file: " +
                                            opts.stopwords_file);
            std::string word;
            while (std::getline(in, word)) {
                while (!word.empty() &&
                       (word.back() == '\r' || word.back() == ' '))
                    word.pop_back();
                if (!word.empty()) stopwords.insert(word);
            }
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }

    try {
        std::map<std::pair<std::string, std::string>, int> group_counts;
        for (const auto& t : corpus.transcripts)
            if (transcript_selected(corpus, t))
                ++group_counts[{transcript_style_label(t), t.model_label}];

        out << "Transcripts by (style, model):\n";
        for (const auto& [key, n] : group_counts)
            out << "  " << std::left << std::setw(24) << key.first
                << std::setw(28) << key.second << n << "\n";

        const auto tables = word_frequencies(corpus, opts.top_n, stopwords);
        for (const auto& table : tables) {
            out << "\nTop " << opts.top_n << " words: " << table.group_label()
                << "\n";
            for (const auto& [token, count] : table.entries)
                out << "  " << std::left << std::setw(20) << token << count
                    << "\n";
        }

        const auto stats =
            length_stats(corpus, {GroupAxis::Style, GroupAxis::Model});
        std::size_t group_width = 0;
        for (const auto& [group, s] : stats)
            group_width = std::max(group_width, group.size());
        out << "\nUtterance length in tokens (mean/median/stddev):\n";
        for (const auto& [group, s] : stats)
            out << "  " << std::left << std::setw(group_width + 2) << group
                << std::fixed << std::setprecision(2) << s.mean << " / "
                << s.median << " / " << s.stddev << "  (n=" << s.count
                << ")\n";

        const auto emoji = emoji_simulation_counts(corpus);
        out << "\nSimulations containing emoji, by model:\n";
        for (const auto& [model, c] : emoji)
            out << "  " << std::left << std::setw(28) << model
                << c.with_emoji << " of " << c.total << "\n";

        std::map<std::string, std::pair<int, int>> markup;  // bullets, actions
        for (const auto& t : corpus.transcripts) {
            if (!transcript_selected(corpus, t)) continue;
            for (const auto& u : t.utterances) {
                if (!utterance_selected(corpus, u)) continue;
                const ContentFlags flags = detect_flags(u.text);
                if (flags.has_bullets) ++markup[t.model_label].first;
                if (flags.has_action_markup) ++markup[t.model_label].second;
            }
        }
        out << "\nUtterances with bullet lists / action markup, by model:\n";
        for (const auto& [model, counts] : markup)
            out << "  " << std::left << std::setw(28) << model
                << counts.first << " / " << counts.second << "\n";

        if (!opts.machine_out.empty()) {
            std::ofstream mo(opts.machine_out, std::ios::binary);
            if (!mo)
                throw std::runtime_error("cannot open " + opts.machine_out +
                                         " for writing");
            for (const auto& table : tables)
                for (const auto& [token, count] : table.entries)
                    mo << table.style << "\t" << table.model << "\t" << token
                       << "\t" << count << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace detail

// Parses argv (including the program name) and executes one subcommand.
inline int dispatch(const std::vector<std::string>& argv,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"Controlled two-agent conversation simulations"};
    app.require_subcommand(1);

    detail::RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Run one simulation");
    run->add_option("--config", run_opts.config, "Run config file")
        ->required();
    run->add_flag("--mock", run_opts.mock,
                  "Swap all backends for seeded deterministic mocks");
    run->add_option("--seed", run_opts.seed, "Seed for --mock backends");
    run->add_option("--out", run_opts.overrides.output_dir,
                    "Output directory override");
    run->add_option("--interactions", run_opts.overrides.interactions,
                    "Interaction rounds override");
    run->add_option("--temperature", run_opts.overrides.temperature,
                    "Sampling temperature override");
    run->add_option("--top-p", run_opts.overrides.top_p,
                    "Sampling top_p override");
    run->add_option("--max-tokens", run_opts.overrides.max_output_tokens,
                    "Max output tokens override");
    run->add_option("--label", run_opts.overrides.run_label,
                    "Run label override");

    detail::BatchOptions batch_opts;
    auto* batch = app.add_subcommand("batch", "Run a batch matrix");
    batch->add_option("--config", batch_opts.config, "Batch config file")
        ->required();
    batch->add_flag("--mock", batch_opts.mock,
                    "Swap all backends for seeded deterministic mocks");
    batch->add_option("--seed", batch_opts.seed, "Seed for --mock backends");
    batch->add_flag("--dry-run", batch_opts.dry_run,
                    "Print the cell matrix and totals without running");
    batch->add_option("--out", batch_opts.overrides.output_dir,
                      "Output directory override");
    batch->add_option("--parallel", batch_opts.overrides.parallel,
                      "Concurrent simulations cap");
    batch->add_option("--interactions", batch_opts.overrides.interactions,
                      "Interaction rounds override");
    batch->add_option("--temperature", batch_opts.overrides.temperature,
                      "Sampling temperature override");
    batch->add_option("--top-p", batch_opts.overrides.top_p,
                      "Sampling top_p override");
    batch->add_option("--max-tokens", batch_opts.overrides.max_output_tokens,
                      "Max output tokens override");

    detail::AnalyzeOptions analyze_opts;
    auto* analyze =
        app.add_subcommand("analyze", "Report on a transcript corpus");
    analyze->add_option("input,--input", analyze_opts.inputs,
                        "Transcript files or directories");
    analyze->add_option("--top-n", analyze_opts.top_n,
                        "Words per frequency table");
    analyze->add_option("--filter", analyze_opts.filters,
                        "style=...,context=...,model=...,speaker=...");
    analyze->add_option("--out", analyze_opts.machine_out,
                        "Write frequency entries to this TSV file");
    analyze->add_option("--stopwords", analyze_opts.stopwords_file,
                        "File with one stopword per line");

    detail::PersonasOptions personas_opts;
    auto* personas =
        app.add_subcommand("personas", "List builtin persona prompts");
    personas->add_flag("--full", personas_opts.full, "Print full prompts");
    personas->add_option("--personas-file", personas_opts.personas_file,
                         "Also list personas from this definition file");

    detail::ValidateOptions validate_opts;
    auto* validate =
        app.add_subcommand("validate", "Check a run or batch config");
    validate->add_option("--config", validate_opts.config, "Config file")
        ->required();

    std::vector<const char*> args;
    args.reserve(argv.size());
    for (const auto& a : argv) args.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(args.size()), args.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUserError;
    }

    if (run->parsed()) return detail::do_run(run_opts, out, err);
    if (batch->parsed()) return detail::do_batch(batch_opts, out, err);
    if (analyze->parsed()) return detail::do_analyze(analyze_opts, out, err);
    if (personas->parsed()) return detail::do_personas(personas_opts, out, err);
    if (validate->parsed())
        return detail::do_validate(validate_opts, out, err);
    return kExitUserError;
}

}  // namespace convosim::cli
