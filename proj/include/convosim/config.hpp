#pragma once

// Declarative JSON config documents for `run` and `batch`. Every relative
// path named inside a config (personas_file, few_shot_examples_file,
// output_dir) resolves against the config file's own directory, so a config
// plus environment secrets fully reproduces a run from any working
// directory. Schemas are documented in docs/file-formats.md.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convosim/backend.hpp"
#include "convosim/engine.hpp"
#include "convosim/prompts.hpp"

namespace convosim {

inline void from_json(const nlohmann::json& j, BackendDescriptor& d) {
    j.at("id").get_to(d.id);
    d.kind = parse_backend_kind(j.at("kind").get<std::string>());
    d.base_url = j.value("base_url", "");
    d.model_label = j.value("model_label", "");
    d.auth_env = j.value("auth_env", "");
    d.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    d.max_retries = j.value("max_retries", 3);
    d.retry_backoff =
        std::chrono::milliseconds(j.value("retry_backoff_ms", 250));
    d.max_in_flight = j.value("max_in_flight", 4);
    d.mock_seed = j.value("mock_seed", std::uint64_t{0});
}

struct RunFile {
    SimulationConfig config;
    std::vector<BackendDescriptor> backends;
    std::filesystem::path output_dir;
};

struct BatchFile {
    BatchConfig batch;
    std::vector<BackendDescriptor> backends;
};

// Scalar fields a CLI flag may override; flag > file > builtin default.
struct ConfigOverrides {
    std::optional<int> interactions;
    std::optional<double> temperature;
    std::optional<double> top_p;
    std::optional<int> max_output_tokens;
    std::optional<std::string> output_dir;
    std::optional<std::string> run_label;
    std::optional<int> parallel;
};

namespace detail {

inline nlohmann::json load_json_document(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

inline void check_config_schema_version(const nlohmann::json& doc,
                                        const std::filesystem::path& path) {
    if (doc.value("schema_version", kSchemaVersion) != kSchemaVersion)
        throw std::runtime_error(path.string() +
                                 ": unsupported schema_version");
}

inline std::filesystem::path resolve(const std::filesystem::path& base_dir,
                                     const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

inline SamplingParams sampling_from(const nlohmann::json& doc) {
    SamplingParams sampling;
    if (doc.contains("sampling")) {
        const auto& s = doc.at("sampling");
        sampling.temperature = s.value("temperature", sampling.temperature);
        sampling.top_p = s.value("top_p", sampling.top_p);
        sampling.max_output_tokens =
            s.value("max_output_tokens", sampling.max_output_tokens);
    }
    return sampling;
}

inline std::vector<BackendDescriptor> backends_from(
    const nlohmann::json& doc, const std::filesystem::path& path) {
    if (!doc.contains("backends"))
        throw std::runtime_error(path.string() + ": missing 'backends'");
    return doc.at("backends").get<std::vector<BackendDescriptor>>();
}

inline const BackendDescriptor& descriptor_by_id(
    const std::vector<BackendDescriptor>& backends, const std::string& id,
    const std::filesystem::path& path) {
    for (const auto& d : backends)
        if (d.id == id) return d;
    throw std::runtime_error(path.string() + ": unknown backend id '" + id +
                             "'");
}

}  // namespace detail

// Loads a single-simulation config. The parent persona comes from a builtin
// style name ("parent_style") or a persona defined in "personas_file"
// ("parent_persona"); few-shot examples are applied here so the returned
// config is ready to run.
inline RunFile load_run_file(const std::filesystem::path& path,
                             PersonaCatalog& personas) {
    const auto doc = detail::load_json_document(path);
    detail::check_config_schema_version(doc, path);
    const auto base_dir = path.parent_path();

    if (doc.contains("personas_file"))
        personas.load_user_file(detail::resolve(
            base_dir, doc.at("personas_file").get<std::string>()));

    RunFile run;
    run.config.run_label = doc.value("run_label", "");
    run.config.interactions = doc.value("interactions", 5);
    run.config.context_strategy =
        parse_context_strategy(doc.value("context_strategy", "none"));
    run.config.relevant_k = doc.value("relevant_k", 4);
    run.config.sampling = detail::sampling_from(doc);

    if (doc.contains("parent_persona"))
        run.config.parent_persona =
            personas.get(doc.at("parent_persona").get<std::string>());
    else
        run.config.parent_persona =
            personas.get(parse_style(doc.value("parent_style", "")));
    if (doc.contains("child_persona"))
        run.config.child_persona =
            personas.get(doc.at("child_persona").get<std::string>());
    else
        run.config.child_persona = personas.get(Style::Child);

    if (doc.value("few_shot", false)) {
        if (!doc.contains("few_shot_examples_file"))
            throw std::runtime_error(
                path.string() +
                ": few_shot requires few_shot_examples_file");
        const auto examples = load_example_file(detail::resolve(
            base_dir, doc.at("few_shot_examples_file").get<std::string>()));
        run.config.parent_persona =
            apply_few_shot(run.config.parent_persona, examples);
    }

    run.backends = detail::backends_from(doc, path);
    run.config.chat_backend_id = doc.value("chat_backend_id", "");
    run.config.embedding_backend_id = doc.value("embedding_backend_id", "");
    run.output_dir = detail::resolve(base_dir, doc.value("output_dir", "runs"));
    return run;
}

// Loads a batch config. Cells come either from an explicit "cells" array or
// from the "matrix" shorthand, which expands model-major then style then
// context so manifests read like the settings table of the experiment.
inline BatchFile load_batch_file(const std::filesystem::path& path) {
    const auto doc = detail::load_json_document(path);
    detail::check_config_schema_version(doc, path);
    const auto base_dir = path.parent_path();

    BatchFile file;
    BatchConfig& batch = file.batch;
    batch.batch_label = doc.value("batch_label", "batch");
    batch.interactions = doc.value("interactions", 5);
    batch.relevant_k = doc.value("relevant_k", 4);
    batch.sampling = detail::sampling_from(doc);
    batch.parallel = doc.value("parallel", 1);
    batch.output_dir = detail::resolve(
        base_dir, doc.value("output_dir", "batch-" + batch.batch_label));
    file.backends = detail::backends_from(doc, path);

    if (doc.contains("few_shot_examples_file"))
        batch.few_shot_examples = load_example_file(detail::resolve(
            base_dir, doc.at("few_shot_examples_file").get<std::string>()));

    const bool has_cells = doc.contains("cells");
    const bool has_matrix = doc.contains("matrix");
    if (has_cells == has_matrix)
        throw std::runtime_error(path.string() +
                                 ": provide exactly one of 'cells' or "
                                 "'matrix'");

    auto make_cell = [&](const std::string& style,
                         const std::string& context,
                         const std::string& chat_id,
                         const std::string& embed_id, bool few_shot,
                         int repetitions) {
        BatchCell cell;
        cell.style = parse_style(style);
        cell.context_strategy = parse_context_strategy(context);
        cell.chat_backend_id = chat_id;
        cell.embedding_backend_id = embed_id;
        cell.model_label =
            detail::descriptor_by_id(file.backends, chat_id, path).model_label;
        cell.few_shot = few_shot;
        cell.repetitions = repetitions;
        return cell;
    };

    if (has_cells) {
        for (const auto& c : doc.at("cells"))
            batch.cells.push_back(make_cell(
                c.at("style").get<std::string>(),
                c.at("context_strategy").get<std::string>(),
                c.at("chat_backend_id").get<std::string>(),
                c.value("embedding_backend_id", ""), c.value("few_shot", false),
                c.value("repetitions", 1)));
    } else {
        const auto& m = doc.at("matrix");
        const auto styles = m.value("styles", std::vector<std::string>{});
        const auto few_shot_styles =
            m.value("few_shot_styles", std::vector<std::string>{});
        const auto contexts = m.at("contexts").get<std::vector<std::string>>();
        const int repetitions = m.value("repetitions", 1);
        for (const auto& model : m.at("models")) {
            const auto chat_id = model.at("chat_backend_id").get<std::string>();
            const auto embed_id = model.value("embedding_backend_id", "");
            for (const auto& style : styles)
                for (const auto& context : contexts)
                    batch.cells.push_back(make_cell(style, context, chat_id,
                                                    embed_id, false,
                                                    repetitions));
            for (const auto& style : few_shot_styles)
                for (const auto& context : contexts)
                    batch.cells.push_back(make_cell(style, context, chat_id,
                                                    embed_id, true,
                                                    repetitions));
        }
    }
    return file;
}

inline void apply_overrides(RunFile& run, const ConfigOverrides& o) {
    if (o.interactions) run.config.interactions = *o.interactions;
    if (o.temperature) run.config.sampling.temperature = *o.temperature;
    if (o.top_p) run.config.sampling.top_p = *o.top_p;
    if (o.max_output_tokens)
        run.config.sampling.max_output_tokens = *o.max_output_tokens;
    if (o.run_label) run.config.run_label = *o.run_label;
    if (o.output_dir) run.output_dir = *o.output_dir;
}

inline void apply_overrides(BatchFile& file, const ConfigOverrides& o) {
    if (o.interactions) file.batch.interactions = *o.interactions;
    if (o.temperature) file.batch.sampling.temperature = *o.temperature;
    if (o.top_p) file.batch.sampling.top_p = *o.top_p;
    if (o.max_output_tokens)
        file.batch.sampling.max_output_tokens = *o.max_output_tokens;
    if (o.parallel) file.batch.parallel = *o.parallel;
    if (o.output_dir) file.batch.output_dir = *o.output_dir;
}

// Registry for a loaded config; --mock swaps every backend for a seeded
// deterministic mock so whole batches run offline.
inline BackendRegistry build_registry(
    const std::vector<BackendDescriptor>& backends, bool mock,
    std::uint64_t seed) {
    BackendRegistry registry;
    for (auto d : backends) {
        if (mock) {
            d.kind = BackendKind::Mock;
            d.base_url.clear();
            d.auth_env.clear();
        }
        registry.add(std::move(d));
    }
    if (mock) registry.swap_all_for_mocks(seed);
    return registry;
}

}  // namespace convosim
