#pragma once

// Context assembly for the three awareness conditions: none (empty block),
// full (entire history), and relevant (top-k prior utterances by cosine
// similarity to the partner's latest statement). The rendered templates are
// frozen by golden tests; changing them is a schema change.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "convosim/domain.hpp"

namespace convosim {

inline constexpr std::string_view kFullContextHeader =
    "Here is the conversation so far:";
inline constexpr std::string_view kRelevantContextHeader =
    "Here are relevant parts of the conversation:";

inline const char* speaker_label(Role r) {
    return r == Role::Parent ? "Parent" : "Child";
}

// cos(a, b) = dot(a, b) / (|a| * |b|), clamped into [-1, 1].
inline double cosine_similarity(const EmbeddingVector& a,
                                const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        throw std::invalid_argument(
            "cosine_similarity: dimension mismatch (" +
            std::to_string(a.dimension()) + " vs " +
            std::to_string(b.dimension()) + ")");
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        norm_a += a.values[i] * a.values[i];
        norm_b += b.values[i] * b.values[i];
    }
    if (norm_a == 0.0 || norm_b == 0.0)
        throw std::invalid_argument("cosine_similarity: zero-norm input");
    return std::clamp(dot / (std::sqrt(norm_a) * std::sqrt(norm_b)), -1.0,
                      1.0);
}

// One stored history entry. The embedding is present only under the relevant
// strategy.
struct IndexedUtterance {
    int utterance_index = 0;
    Role speaker = Role::Child;
    std::string text;
    std::optional<EmbeddingVector> embedding;

    bool operator==(const IndexedUtterance&) const = default;
};

// Append-only conversation history, ordered by strictly increasing utterance
// index. Owned by a single simulation run; single-writer.
class EmbeddingIndex {
public:
    void add(const Utterance& u, std::optional<EmbeddingVector> embedding) {
        if (!entries_.empty() && u.index <= entries_.back().utterance_index)
            throw std::invalid_argument(
                "index_add: out-of-order insertion (index " +
                std::to_string(u.index) + " after " +
                std::to_string(entries_.back().utterance_index) + ")");
        entries_.push_back(
            {u.index, u.speaker, u.text, std::move(embedding)});
    }

    const std::vector<IndexedUtterance>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::vector<IndexedUtterance> entries_;
};

// The min(k, size) entries most similar to the query, ties broken in favor
// of the higher utterance index (recency), returned in chronological order.
inline std::vector<IndexedUtterance> select_relevant(
    const EmbeddingIndex& index, const EmbeddingVector& query, int k) {
    if (k < 1) throw std::invalid_argument("select_relevant: k must be >= 1");
    struct Ranked {
        double similarity;
        const IndexedUtterance* entry;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(index.size());
    for (const auto& entry : index.entries()) {
        if (!entry.embedding)
            throw std::invalid_argument(
                "select_relevant: entry " +
                std::to_string(entry.utterance_index) + " has no embedding");
        ranked.push_back({cosine_similarity(*entry.embedding, query), &entry});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.entry->utterance_index > b.entry->utterance_index;
    });
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                ranked.size());
    std::vector<IndexedUtterance> selected;
    selected.reserve(n);
    for (std::size_t i = 0; i < n; ++i) selected.push_back(*ranked[i].entry);
    std::sort(selected.begin(), selected.end(),
              [](const IndexedUtterance& a, const IndexedUtterance& b) {
                  return a.utterance_index < b.utterance_index;
              });
    return selected;
}

// Context lines plus their frozen rendering. rendered is "" whenever lines
// is empty, otherwise the strategy's header followed by one
// "{speaker_label}: {text}" line per utterance.
struct ContextBlock {
    ContextStrategy strategy = ContextStrategy::None;
    std::vector<std::pair<Role, std::string>> lines;
    std::string rendered;

    bool operator==(const ContextBlock&) const = default;
};

inline std::string render_context(
    ContextStrategy strategy,
    const std::vector<std::pair<Role, std::string>>& lines) {
    if (lines.empty()) return "";
    std::string out{strategy == ContextStrategy::Full
                        ? kFullContextHeader
                        : kRelevantContextHeader};
    for (const auto& [speaker, text] : lines) {
        out.push_back('\n');
        out += speaker_label(speaker);
        out += ": ";
        out += text;
    }
    return out;
}

// Assembles the context block injected into an agent's system prompt.
// query_embedding is required for the relevant strategy and ignored
// otherwise.
inline ContextBlock build_context(
    ContextStrategy strategy, const EmbeddingIndex& index,
    const std::optional<EmbeddingVector>& query_embedding, int k) {
    ContextBlock block;
    block.strategy = strategy;
    switch (strategy) {
        case ContextStrategy::None:
            break;
        case ContextStrategy::Full:
            for (const auto& entry : index.entries())
                block.lines.emplace_back(entry.speaker, entry.text);
            break;
        case ContextStrategy::Relevant: {
            if (!query_embedding)
                throw std::invalid_argument(
                    "build_context: relevant strategy requires a query "
                    "embedding");
            for (const auto& entry :
                 select_relevant(index, *query_embedding, k))
                block.lines.emplace_back(entry.speaker, entry.text);
            break;
        }
    }
    block.rendered = render_context(strategy, block.lines);
    return block;
}

}  // namespace convosim
