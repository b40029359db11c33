#pragma once

// The turn protocol and the batch runner. One simulation is a child prologue,
// `interactions` parent/child exchange rounds, and a parent conclusion:
// 2 * interactions + 2 utterances with strictly alternating speakers. Every
// generation call re-sends the agent's persona prompt with the context block
// assembled for that turn; the user message is the partner's latest utterance
// (the fixed instruction texts for the prologue and conclusion).

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "convosim/backend.hpp"
#include "convosim/context.hpp"
#include "convosim/domain.hpp"
#include "convosim/ids.hpp"
#include "convosim/prompts.hpp"
#include "convosim/serialization.hpp"

namespace convosim {

inline constexpr std::string_view kPrologueInstruction =
    "Now say something to your parent.";
inline constexpr std::string_view kConcludeInstruction =
    "Now conclude the conversation.";

// Separator between a persona prompt and its context block, and between the
// final child utterance and the conclude instruction. Frozen by golden tests.
inline constexpr std::string_view kPromptSeparator = "\n\n";

struct TurnInstruction {
    UtteranceKind kind = UtteranceKind::Prologue;
    std::string text;
};

inline TurnInstruction prologue_instruction() {
    return {UtteranceKind::Prologue, std::string(kPrologueInstruction)};
}

inline TurnInstruction conclude_instruction() {
    return {UtteranceKind::Conclusion, std::string(kConcludeInstruction)};
}

// Persona prompt followed by the rendered context block; the block is
// omitted entirely when empty.
inline std::string compose_system_prompt(const PersonaProfile& persona,
                                         const ContextBlock& context) {
    if (context.rendered.empty()) return persona.system_prompt;
    std::string out = persona.system_prompt;
    out += kPromptSeparator;
    out += context.rendered;
    return out;
}

// Runs one simulation. Backend failures abort the run: the returned
// transcript carries the utterances generated so far plus the aborted flag,
// so partial data stays auditable.
inline Transcript run_simulation(const SimulationConfig& config,
                                 const BackendRegistry& backends) {
    if (const auto violations = validate_config(config); !violations.empty()) {
        std::string message = "invalid config:";
        for (const auto& v : violations) message += " " + v + ";";
        throw std::invalid_argument(message);
    }

    Transcript transcript;
    transcript.simulation_id = new_simulation_id();
    transcript.model_label = backends.get(config.chat_backend_id).model_label;
    transcript.config = config;
    transcript.created_at = utc_now_ms();

    EmbeddingIndex index;
    const int total = 2 * config.interactions + 2;
    try {
        for (int i = 0; i < total; ++i) {
            const bool prologue = i == 0;
            const bool conclusion = i == total - 1;
            const Role speaker = i % 2 == 0 ? Role::Child : Role::Parent;
            const PersonaProfile& persona = speaker == Role::Parent
                                                ? config.parent_persona
                                                : config.child_persona;

            ContextBlock context;
            context.strategy = config.context_strategy;
            switch (config.context_strategy) {
                case ContextStrategy::None:
                    break;
                case ContextStrategy::Full:
                    context = build_context(ContextStrategy::Full, index,
                                            std::nullopt, config.relevant_k);
                    break;
                case ContextStrategy::Relevant:
                    // The partner's latest utterance is the retrieval query;
                    // it joins the index only after retrieval, so it never
                    // competes as its own candidate.
                    if (!prologue) {
                        const Utterance& last = transcript.utterances.back();
                        EmbeddingVector query = backends.embed(
                            config.embedding_backend_id, last.text);
                        context =
                            build_context(ContextStrategy::Relevant, index,
                                          query, config.relevant_k);
                        index.add(last, std::move(query));
                    }
                    break;
            }

            std::string user_message;
            if (prologue) {
                user_message = kPrologueInstruction;
            } else if (conclusion) {
                user_message = transcript.utterances.back().text;
                user_message += kPromptSeparator;
                user_message += kConcludeInstruction;
            } else {
                user_message = transcript.utterances.back().text;
            }

            ChatRequest request;
            request.system_prompt = compose_system_prompt(persona, context);
            request.user_message = std::move(user_message);
            request.sampling = config.sampling;
            request.model_label = transcript.model_label;
            const ChatResponse response =
                backends.chat_complete(config.chat_backend_id, request);
            if (response.text.empty())
                throw BackendError(BackendError::Kind::MalformedResponse,
                                   config.chat_backend_id +
                                       ": empty completion text");

            Utterance utterance;
            utterance.index = i;
            utterance.speaker = speaker;
            utterance.kind = prologue     ? UtteranceKind::Prologue
                             : conclusion ? UtteranceKind::Conclusion
                                          : UtteranceKind::Exchange;
            utterance.text = response.text;
            utterance.context_block = context.rendered;
            utterance.request_params = config.sampling;
            transcript.utterances.push_back(std::move(utterance));

            if (config.context_strategy == ContextStrategy::Full)
                index.add(transcript.utterances.back(), std::nullopt);
        }
    } catch (const BackendError& e) {
        transcript.aborted = true;
        transcript.abort_reason = e.what();
    }
    return transcript;
}

// One cell of a batch matrix: a (style, context, model) combination run
// `repetitions` times.
struct BatchCell {
    Style style = Style::Uninvolved;
    ContextStrategy context_strategy = ContextStrategy::None;
    std::string chat_backend_id;
    std::string embedding_backend_id;
    std::string model_label;
    bool few_shot = false;
    int repetitions = 1;
};

struct BatchConfig {
    std::string batch_label;
    int interactions = 5;
    int relevant_k = 4;
    SamplingParams sampling;
    std::vector<ExampleExchange> few_shot_examples;
    std::vector<BatchCell> cells;
    std::filesystem::path output_dir;
    int parallel = 1;
};

inline std::vector<std::string> validate_batch(const BatchConfig& batch) {
    std::vector<std::string> violations;
    if (batch.output_dir.empty())
        violations.push_back("output_dir must be set");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < batch.cells.size(); ++i) {
        const BatchCell& cell = batch.cells[i];
        const std::string where = "cell " + std::to_string(i);
        if (cell.repetitions < 1)
            violations.push_back(where + ": repetitions must be positive");
        if (cell.chat_backend_id.empty())
            violations.push_back(where + ": chat_backend_id must be set");
        if (cell.context_strategy == ContextStrategy::Relevant &&
            cell.embedding_backend_id.empty())
            violations.push_back(where +
                                 ": relevant context requires an "
                                 "embedding_backend_id");
        if (cell.style == Style::Child)
            violations.push_back(where + ": parent style cannot be 'child'");
        if (cell.few_shot && batch.few_shot_examples.empty())
            violations.push_back(where +
                                 ": few_shot cell but the batch has no "
                                 "few_shot_examples");
        const std::string key = std::string(to_string(cell.style)) + "|" +
                                to_string(cell.context_strategy) + "|" +
                                cell.chat_backend_id + "|" +
                                (cell.few_shot ? "fs" : "base");
        if (!seen.insert(key).second)
            violations.push_back(where + ": duplicate cell (" + key + ")");
    }
    return violations;
}

// Assembles the per-simulation config for one cell repetition.
inline SimulationConfig cell_config(const BatchConfig& batch,
                                    const BatchCell& cell, int repetition,
                                    const PersonaCatalog& personas) {
    SimulationConfig config;
    config.interactions = batch.interactions;
    config.context_strategy = cell.context_strategy;
    config.relevant_k = batch.relevant_k;
    config.parent_persona = personas.get(cell.style);
    if (cell.few_shot)
        config.parent_persona =
            apply_few_shot(config.parent_persona, batch.few_shot_examples);
    config.child_persona = personas.get(Style::Child);
    config.sampling = batch.sampling;
    config.chat_backend_id = cell.chat_backend_id;
    config.embedding_backend_id = cell.embedding_backend_id;
    config.run_label = std::string(to_string(cell.style)) +
                       (cell.few_shot ? "-few-shot" : "") + "/" +
                       to_string(cell.context_strategy) + "/" +
                       cell.model_label + "/rep" + std::to_string(repetition);
    return config;
}

// Executes every cell repetition, persists one transcript file per
// simulation plus the manifest, and returns the manifest. Failed simulations
// are kept as aborted transcripts, never dropped. Cells appear in the
// manifest in declaration order regardless of completion order; parallel > 1
// distributes simulations across worker threads.
inline RunManifest run_batch(const BatchConfig& batch,
                             const BackendRegistry& backends,
                             const PersonaCatalog& personas) {
    if (const auto violations = validate_batch(batch); !violations.empty()) {
        std::string message = "invalid batch:";
        for (const auto& v : violations) message += " " + v + ";";
        throw std::invalid_argument(message);
    }

    // Cells may omit model_label; it defaults to the chat backend's label.
    std::vector<BatchCell> cells = batch.cells;
    for (BatchCell& cell : cells)
        if (cell.model_label.empty())
            cell.model_label = backends.get(cell.chat_backend_id).model_label;

    struct Task {
        std::size_t cell_index;
        int repetition;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (int r = 1; r <= cells[c].repetitions; ++r)
            tasks.push_back({c, r});

    std::vector<std::vector<std::string>> ids_per_cell(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
        ids_per_cell[c].resize(static_cast<std::size_t>(cells[c].repetitions));

    std::filesystem::create_directories(batch.output_dir);

    auto run_task = [&](const Task& task) {
        const BatchCell& cell = cells[task.cell_index];
        const SimulationConfig config =
            cell_config(batch, cell, task.repetition, personas);
        Transcript transcript = run_simulation(config, backends);
        write_transcript_file(batch.output_dir, transcript);
        ids_per_cell[task.cell_index][static_cast<std::size_t>(
            task.repetition - 1)] = transcript.simulation_id;
    };

    const int workers =
        std::clamp<int>(batch.parallel, 1,
                        static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
    if (workers <= 1) {
        for (const Task& task : tasks) run_task(task);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < tasks.size();
                     i = next.fetch_add(1)) {
                    try {
                        run_task(tasks[i]);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error)
                            first_error = std::current_exception();
                        return;
                    }
                }
            });
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    RunManifest manifest;
    manifest.batch_id = new_batch_id();
    manifest.created_at = utc_now_ms();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const BatchCell& cell = cells[c];
        ManifestCell entry;
        entry.style = cell.style;
        entry.context_strategy = cell.context_strategy;
        entry.model_label = cell.model_label;
        entry.few_shot = cell.few_shot;
        entry.repetitions = cell.repetitions;
        entry.transcript_ids = ids_per_cell[c];
        manifest.cells.push_back(std::move(entry));
    }
    write_manifest_file(batch.output_dir, manifest);
    return manifest;
}

}  // namespace convosim
