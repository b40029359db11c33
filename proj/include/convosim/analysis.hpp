#pragma once

// Offline corpus analytics over persisted transcripts: per-group word
// frequencies, response-length statistics, and non-conversational-content
// detection (emoji, bullet lists, asterisk-delimited stage directions).
// Everything here is a pure function of the loaded corpus; no backend is
// ever called, so reports can be produced for any transcript directory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "convosim/domain.hpp"
#include "convosim/serialization.hpp"

namespace convosim {

// Style axis label; the few-shot variant counts as its own group, matching
// how batch matrices treat it.
inline std::string style_label(Style style, bool few_shot) {
    std::string label = to_string(style);
    if (few_shot) label += "-few-shot";
    return label;
}

inline std::string transcript_style_label(const Transcript& t) {
    return style_label(t.config.parent_persona.style,
                       !t.config.parent_persona.few_shot_examples.empty());
}

// Empty filter fields select everything.
struct CorpusFilters {
    std::set<std::string> styles;            // style labels, few-shot aware
    std::set<ContextStrategy> contexts;
    std::set<std::string> models;
    std::optional<Role> speaker;
};

struct Corpus {
    std::vector<Transcript> transcripts;
    CorpusFilters filters;
};

inline bool transcript_selected(const Corpus& corpus, const Transcript& t) {
    const auto& f = corpus.filters;
    if (!f.styles.empty() && !f.styles.count(transcript_style_label(t)))
        return false;
    if (!f.contexts.empty() && !f.contexts.count(t.config.context_strategy))
        return false;
    if (!f.models.empty() && !f.models.count(t.model_label)) return false;
    return true;
}

inline bool utterance_selected(const Corpus& corpus, const Utterance& u) {
    return !corpus.filters.speaker || *corpus.filters.speaker == u.speaker;
}

// Loads every transcript found in the given files and/or directories
// (non-recursive; *.jsonl files). Manifest files yield no transcripts and
// are skipped naturally.
inline Corpus load_corpus(const std::vector<std::filesystem::path>& inputs) {
    Corpus corpus;
    for (const auto& input : inputs) {
        std::vector<std::filesystem::path> files;
        if (std::filesystem::is_directory(input)) {
            for (const auto& entry : std::filesystem::directory_iterator(input))
                if (entry.is_regular_file() &&
                    entry.path().extension() == ".jsonl")
                    files.push_back(entry.path());
            std::sort(files.begin(), files.end());
        } else {
            files.push_back(input);
        }
        for (const auto& file : files) {
            auto loaded = load_transcript_file(file);
            for (auto& t : loaded)
                corpus.transcripts.push_back(std::move(t));
        }
    }
    return corpus;
}

// Lowercases ASCII letters and splits on anything that is not an ASCII
// alphanumeric or apostrophe; apostrophes survive only in token interiors,
// so "don't" stays one token while quoting apostrophes fall away. Multibyte
// UTF-8 sequences act as separators.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        std::size_t begin = 0, end = current.size();
        while (begin < end && current[begin] == '\'') ++begin;
        while (end > begin && current[end - 1] == '\'') --end;
        if (end > begin) tokens.push_back(current.substr(begin, end - begin));
        current.clear();
    };
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (uc >= 'A' && uc <= 'Z') {
            current.push_back(static_cast<char>(uc - 'A' + 'a'));
        } else if ((uc >= 'a' && uc <= 'z') || (uc >= '0' && uc <= '9') ||
                   uc == '\'') {
            current.push_back(c);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

// One (style, model) group's token counts, ordered by count descending then
// token ascending.
struct FrequencyTable {
    std::string style;
    std::string model;
    std::vector<std::pair<std::string, std::uint64_t>> entries;

    std::string group_label() const { return style + " | " + model; }
};

inline std::vector<FrequencyTable> word_frequencies(
    const Corpus& corpus, std::size_t top_n,
    const std::set<std::string>& stopwords = {}) {
    std::map<std::pair<std::string, std::string>,
             std::unordered_map<std::string, std::uint64_t>>
        groups;
    for (const auto& t : corpus.transcripts) {
        if (!transcript_selected(corpus, t)) continue;
        for (const auto& u : t.utterances) {
            if (!utterance_selected(corpus, u)) continue;
            auto& counts = groups[{transcript_style_label(t), t.model_label}];
            for (auto& token : tokenize(u.text)) {
                if (stopwords.count(token)) continue;
                ++counts[token];
            }
        }
    }
    std::vector<FrequencyTable> tables;
    for (auto& [key, counts] : groups) {
        FrequencyTable table;
        table.style = key.first;
        table.model = key.second;
        table.entries.assign(counts.begin(), counts.end());
        std::sort(table.entries.begin(), table.entries.end(),
                  [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                  });
        if (table.entries.size() > top_n) table.entries.resize(top_n);
        tables.push_back(std::move(table));
    }
    return tables;
}

struct ContentFlags {
    bool has_emoji = false;
    bool has_bullets = false;
    bool has_action_markup = false;

    bool operator==(const ContentFlags&) const = default;
};

namespace detail {

// Tolerant UTF-8 decoding: invalid sequences decode as U+FFFD and scanning
// continues, so flag detection is total over arbitrary bytes.
inline std::vector<char32_t> decode_utf8(const std::string& text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto b0 = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        bool valid = true;
        for (std::size_t k = 1; k < len; ++k) {
            const auto bk = static_cast<unsigned char>(text[i + k]);
            if ((bk & 0xC0) != 0x80) {
                valid = false;
                break;
            }
            cp = (cp << 6) | (bk & 0x3F);
        }
        if (!valid || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

// Documented emoji ranges; the flag is defined by exactly these blocks.
inline bool is_emoji(char32_t cp) {
    return (cp >= 0x1F600 && cp <= 0x1F64F) ||  // emoticons
           (cp >= 0x1F300 && cp <= 0x1F5FF) ||  // misc symbols & pictographs
           (cp >= 0x1F680 && cp <= 0x1F6FF) ||  // transport & map
           (cp >= 0x1F900 && cp <= 0x1F9FF) ||  // supplemental symbols
           (cp >= 0x2600 && cp <= 0x27BF);      // misc symbols + dingbats
}

inline bool line_starts_with_bullet(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) return false;
    // "- item", "* item", "• item"
    if (line[i] == '-' || line[i] == '*') {
        return i + 1 < line.size() && (line[i + 1] == ' ' || line[i + 1] == '\t');
    }
    if (line.compare(i, 3, "\xE2\x80\xA2") == 0) {
        const std::size_t after = i + 3;
        return after >= line.size() || line[after] == ' ' ||
               line[after] == '\t';
    }
    // "1." / "2)" style enumerators
    std::size_t d = i;
    while (d < line.size() && line[d] >= '0' && line[d] <= '9') ++d;
    if (d > i && d < line.size() && (line[d] == '.' || line[d] == ')')) {
        const std::size_t after = d + 1;
        return after >= line.size() || line[after] == ' ' ||
               line[after] == '\t';
    }
    return false;
}

inline bool has_asterisk_span(const std::string& text) {
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '*') {
            std::size_t j = i + 1;
            while (j < text.size() && text[j] != '*' && text[j] != '\n') ++j;
            if (j < text.size() && text[j] == '*' && j > i + 1) return true;
            i = j;
        } else {
            ++i;
        }
    }
    return false;
}

}  // namespace detail

inline ContentFlags detect_flags(const std::string& text) {
    ContentFlags flags;
    for (char32_t cp : detail::decode_utf8(text)) {
        if (detail::is_emoji(cp)) {
            flags.has_emoji = true;
            break;
        }
    }
    std::size_t start = 0;
    while (start <= text.size() && !flags.has_bullets) {
        const std::size_t end = text.find('\n', start);
        const std::string line =
            text.substr(start, end == std::string::npos ? std::string::npos
                                                        : end - start);
        if (detail::line_starts_with_bullet(line)) flags.has_bullets = true;
        if (end == std::string::npos) break;
        start = end + 1;
    }
    flags.has_action_markup = detail::has_asterisk_span(text);
    return flags;
}

struct EmojiCount {
    int with_emoji = 0;
    int total = 0;
};

// Per-model count of simulations containing at least one emoji utterance;
// a simulation counts once no matter how many utterances carry emoji.
inline std::map<std::string, EmojiCount> emoji_simulation_counts(
    const Corpus& corpus) {
    std::map<std::string, EmojiCount> counts;
    for (const auto& t : corpus.transcripts) {
        if (!transcript_selected(corpus, t)) continue;
        EmojiCount& c = counts[t.model_label];
        ++c.total;
        for (const auto& u : t.utterances) {
            if (!utterance_selected(corpus, u)) continue;
            if (detect_flags(u.text).has_emoji) {
                ++c.with_emoji;
                break;
            }
        }
    }
    return counts;
}

enum class GroupAxis { Style, Model, Context, Speaker };

inline GroupAxis parse_group_axis(const std::string& s) {
    if (s == "style") return GroupAxis::Style;
    if (s == "model") return GroupAxis::Model;
    if (s == "context") return GroupAxis::Context;
    if (s == "speaker") return GroupAxis::Speaker;
    throw std::invalid_argument("unknown group axis: " + s);
}

struct LengthStats {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0;  // population standard deviation
};

// Tokens-per-utterance statistics per group; groups with no selected
// utterances are absent from the result.
inline std::map<std::string, LengthStats> length_stats(
    const Corpus& corpus, const std::vector<GroupAxis>& group_by) {
    std::map<std::string, std::vector<double>> samples;
    for (const auto& t : corpus.transcripts) {
        if (!transcript_selected(corpus, t)) continue;
        for (const auto& u : t.utterances) {
            if (!utterance_selected(corpus, u)) continue;
            std::string key;
            for (GroupAxis axis : group_by) {
                if (!key.empty()) key += ",";
                switch (axis) {
                    case GroupAxis::Style:
                        key += "style=" + transcript_style_label(t);
                        break;
                    case GroupAxis::Model:
                        key += "model=" + t.model_label;
                        break;
                    case GroupAxis::Context:
                        key += std::string("context=") +
                               to_string(t.config.context_strategy);
                        break;
                    case GroupAxis::Speaker:
                        key += std::string("speaker=") + to_string(u.speaker);
                        break;
                }
            }
            if (key.empty()) key = "all";
            samples[key].push_back(
                static_cast<double>(tokenize(u.text).size()));
        }
    }
    std::map<std::string, LengthStats> stats;
    for (auto& [key, values] : samples) {
        LengthStats s;
        s.count = values.size();
        double sum = 0.0;
        for (double v : values) sum += v;
        s.mean = sum / static_cast<double>(values.size());
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();
        s.median = n % 2 == 1
                       ? values[n / 2]
                       : (values[n / 2 - 1] + values[n / 2]) / 2.0;
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(n));
        stats[key] = s;
    }
    return stats;
}

}  // namespace convosim
