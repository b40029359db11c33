#pragma once

// Core value types shared by every other module: personas, sampling
// parameters, simulation configuration, transcripts, and batch manifests.
// All types are immutable values after construction and safe to copy across
// threads.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace convosim {

enum class Role { Parent, Child };

enum class Style {
    Authoritarian,
    Authoritative,
    Permissive,
    Uninvolved,
    Child,
    Custom,
};

enum class ContextStrategy { None, Full, Relevant };

enum class UtteranceKind { Prologue, Exchange, Conclusion };

inline const char* to_string(Role r) {
    return r == Role::Parent ? "parent" : "child";
}

inline const char* to_string(Style s) {
    switch (s) {
        case Style::Authoritarian: return "authoritarian";
        case Style::Authoritative: return "authoritative";
        case Style::Permissive: return "permissive";
        case Style::Uninvolved: return "uninvolved";
        case Style::Child: return "child";
        case Style::Custom: return "custom";
    }
    return "custom";
}

inline const char* to_string(ContextStrategy s) {
    switch (s) {
        case ContextStrategy::None: return "none";
        case ContextStrategy::Full: return "full";
        case ContextStrategy::Relevant: return "relevant";
    }
    return "none";
}

inline const char* to_string(UtteranceKind k) {
    switch (k) {
        case UtteranceKind::Prologue: return "prologue";
        case UtteranceKind::Exchange: return "exchange";
        case UtteranceKind::Conclusion: return "conclusion";
    }
    return "exchange";
}

inline Role parse_role(const std::string& s) {
    if (s == "parent") return Role::Parent;
    if (s == "child") return Role::Child;
    throw std::invalid_argument("unknown role: " + s);
}

inline Style parse_style(const std::string& s) {
    if (s == "authoritarian") return Style::Authoritarian;
    if (s == "authoritative") return Style::Authoritative;
    if (s == "permissive") return Style::Permissive;
    if (s == "uninvolved") return Style::Uninvolved;
    if (s == "child") return Style::Child;
    if (s == "custom") return Style::Custom;
    throw std::invalid_argument("unknown style: " + s);
}

inline ContextStrategy parse_context_strategy(const std::string& s) {
    if (s == "none") return ContextStrategy::None;
    if (s == "full") return ContextStrategy::Full;
    if (s == "relevant") return ContextStrategy::Relevant;
    throw std::invalid_argument("unknown context strategy: " + s);
}

inline UtteranceKind parse_utterance_kind(const std::string& s) {
    if (s == "prologue") return UtteranceKind::Prologue;
    if (s == "exchange") return UtteranceKind::Exchange;
    if (s == "conclusion") return UtteranceKind::Conclusion;
    throw std::invalid_argument("unknown utterance kind: " + s);
}

// One worked example exchange used for few-shot prompting.
struct ExampleExchange {
    std::string child_line;
    std::string parent_line;

    bool operator==(const ExampleExchange&) const = default;
};

// An agent's character: role, style label, and the system prompt sent on
// every generation turn. few_shot_examples is non-empty only for parents
// whose prompt has been few-shot augmented.
struct PersonaProfile {
    Role role = Role::Parent;
    Style style = Style::Custom;
    std::string system_prompt;
    std::vector<ExampleExchange> few_shot_examples;

    bool operator==(const PersonaProfile&) const = default;
};

struct SamplingParams {
    double temperature = 0.8;
    double top_p = 0.7;
    int max_output_tokens = 200;

    bool operator==(const SamplingParams&) const = default;
};

// Embedding of one utterance. Dimension is the length of values.
struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

struct SimulationConfig {
    int interactions = 5;
    ContextStrategy context_strategy = ContextStrategy::None;
    int relevant_k = 4;
    PersonaProfile parent_persona;
    PersonaProfile child_persona;
    SamplingParams sampling;
    std::string chat_backend_id;
    std::string embedding_backend_id;
    std::string run_label;

    bool operator==(const SimulationConfig&) const = default;
};

// One generated message, with the exact context block and sampling
// parameters used for its generation call.
struct Utterance {
    int index = 0;
    Role speaker = Role::Child;
    UtteranceKind kind = UtteranceKind::Exchange;
    std::string text;
    std::string context_block;
    SamplingParams request_params;

    bool operator==(const Utterance&) const = default;
};

// Persisted record of one simulation. A completed transcript holds exactly
// 2 * interactions + 2 utterances with contiguous indices; an aborted one
// holds the prefix generated before the backend failure.
struct Transcript {
    std::string simulation_id;
    std::string model_label;
    SimulationConfig config;
    std::vector<Utterance> utterances;
    std::string created_at;
    bool aborted = false;
    std::string abort_reason;

    bool operator==(const Transcript&) const = default;
};

// One experiment cell of a batch matrix.
struct ManifestCell {
    Style style = Style::Custom;
    ContextStrategy context_strategy = ContextStrategy::None;
    std::string model_label;
    bool few_shot = false;
    int repetitions = 0;
    std::vector<std::string> transcript_ids;

    bool operator==(const ManifestCell&) const = default;
};

struct RunManifest {
    std::string batch_id;
    std::string created_at;
    std::vector<ManifestCell> cells;

    bool operator==(const RunManifest&) const = default;

    int total_transcripts() const {
        int total = 0;
        for (const auto& cell : cells)
            total += static_cast<int>(cell.transcript_ids.size());
        return total;
    }
};

// Checks every configuration invariant and returns one human-readable
// violation per breach. An empty result means the engine can run the config.
inline std::vector<std::string> validate_config(const SimulationConfig& config) {
    std::vector<std::string> violations;
    if (config.interactions < 0)
        violations.push_back("interactions must be non-negative");
    if (config.relevant_k < 1)
        violations.push_back("relevant_k must be a positive integer");
    if (config.parent_persona.role != Role::Parent)
        violations.push_back("parent_persona.role must be parent");
    if (config.child_persona.role != Role::Child)
        violations.push_back("child_persona.role must be child");
    if (config.parent_persona.system_prompt.empty())
        violations.push_back("parent_persona.system_prompt must be non-empty");
    if (config.child_persona.system_prompt.empty())
        violations.push_back("child_persona.system_prompt must be non-empty");
    if (!config.child_persona.few_shot_examples.empty())
        violations.push_back(
            "few_shot_examples are only allowed on the parent persona");
    for (const auto& ex : config.parent_persona.few_shot_examples) {
        if (ex.child_line.empty() || ex.parent_line.empty()) {
            violations.push_back(
                "few_shot_examples lines must all be non-empty");
            break;
        }
    }
    if (config.sampling.temperature < 0.0 || config.sampling.temperature > 2.0)
        violations.push_back("sampling.temperature must be in [0, 2]");
    if (config.sampling.top_p <= 0.0 || config.sampling.top_p > 1.0)
        violations.push_back("sampling.top_p must be in (0, 1]");
    if (config.sampling.max_output_tokens < 1)
        violations.push_back(
            "sampling.max_output_tokens must be a positive integer");
    if (config.chat_backend_id.empty())
        violations.push_back("chat_backend_id must be set");
    if (config.context_strategy == ContextStrategy::Relevant &&
        config.embedding_backend_id.empty())
        violations.push_back(
            "embedding_backend_id is required when context_strategy is "
            "relevant");
    return violations;
}

}  // namespace convosim
