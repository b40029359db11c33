#pragma once

// Independent reference implementations the tests check the library against.
// These deliberately take different computational routes from the production
// code (repeated max-extraction instead of sort, map-and-stable-sort counting,
// two-pass statistics) and must stay independent of it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace convosim::test {

// Longhand dot / (|a| |b|).
inline double oracle_cosine(const std::vector<double>& a,
                            const std::vector<double>& b) {
    long double dot = 0.0L, aa = 0.0L, bb = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        aa += static_cast<long double>(a[i]) * a[i];
        bb += static_cast<long double>(b[i]) * b[i];
    }
    return static_cast<double>(dot / (std::sqrt(aa) * std::sqrt(bb)));
}

struct OracleCandidate {
    int utterance_index = 0;
    std::vector<double> embedding;
};

// Top-k by cosine similarity, ties to the higher utterance index, result in
// chronological order. Selection happens by repeated max-extraction.
inline std::vector<int> oracle_top_k(const std::vector<OracleCandidate>& pool,
                                     const std::vector<double>& query,
                                     std::size_t k) {
    struct Scored {
        double similarity;
        int utterance_index;
        bool taken = false;
    };
    std::vector<Scored> scored;
    for (const auto& candidate : pool)
        scored.push_back(
            {oracle_cosine(candidate.embedding, query),
             candidate.utterance_index});
    std::vector<int> picked;
    while (picked.size() < k) {
        int best = -1;
        for (int i = 0; i < static_cast<int>(scored.size()); ++i) {
            if (scored[static_cast<std::size_t>(i)].taken) continue;
            if (best < 0) {
                best = i;
                continue;
            }
            const auto& cur = scored[static_cast<std::size_t>(i)];
            const auto& top = scored[static_cast<std::size_t>(best)];
            if (cur.similarity > top.similarity ||
                (cur.similarity == top.similarity &&
                 cur.utterance_index > top.utterance_index))
                best = i;
        }
        if (best < 0) break;
        scored[static_cast<std::size_t>(best)].taken = true;
        picked.push_back(scored[static_cast<std::size_t>(best)].utterance_index);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

// Token counting over pre-tokenized utterances, ordered by two stable sorts.
inline std::vector<std::pair<std::string, std::uint64_t>> oracle_word_counts(
    const std::vector<std::vector<std::string>>& tokenized_utterances) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& tokens : tokenized_utterances)
        for (const auto& token : tokens) counts[token] += 1;
    std::vector<std::pair<std::string, std::uint64_t>> ordered(counts.begin(),
                                                               counts.end());
    // std::map already yields token-ascending order; a stable sort by count
    // descending preserves it within equal counts.
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) {
                         return a.second > b.second;
                     });
    return ordered;
}

struct OracleStats {
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0;
};

inline OracleStats oracle_stats(std::vector<double> values) {
    OracleStats stats;
    long double sum = 0.0L;
    for (double v : values) sum += v;
    stats.mean = static_cast<double>(sum / values.size());
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    stats.median = n % 2 == 1 ? values[n / 2]
                              : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    long double sq = 0.0L;
    for (double v : values) {
        const long double d = v - stats.mean;
        sq += d * d;
    }
    stats.stddev = static_cast<double>(std::sqrt(sq / n));
    return stats;
}

}  // namespace convosim::test
