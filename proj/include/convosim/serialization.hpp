#pragma once

// Persistence for transcripts and batch manifests: UTF-8 text files, one JSON
// record per line. A transcript file starts with a "transcript" header record
// followed by one "utterance" record per line; a manifest file starts with a
// "manifest" header followed by one "cell" record per line. Every top-level
// record carries schema_version (currently 1). Field-by-field documentation
// lives in docs/file-formats.md.

#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convosim/domain.hpp"

namespace convosim {

inline constexpr int kSchemaVersion = 1;

inline void to_json(nlohmann::json& j, const ExampleExchange& e) {
    j = {{"child_line", e.child_line}, {"parent_line", e.parent_line}};
}

inline void from_json(const nlohmann::json& j, ExampleExchange& e) {
    j.at("child_line").get_to(e.child_line);
    j.at("parent_line").get_to(e.parent_line);
}

inline void to_json(nlohmann::json& j, const PersonaProfile& p) {
    j = {{"role", to_string(p.role)},
         {"style", to_string(p.style)},
         {"system_prompt", p.system_prompt},
         {"few_shot_examples", p.few_shot_examples}};
}

inline void from_json(const nlohmann::json& j, PersonaProfile& p) {
    p.role = parse_role(j.at("role").get<std::string>());
    p.style = parse_style(j.at("style").get<std::string>());
    j.at("system_prompt").get_to(p.system_prompt);
    j.at("few_shot_examples").get_to(p.few_shot_examples);
}

inline void to_json(nlohmann::json& j, const SamplingParams& s) {
    j = {{"temperature", s.temperature},
         {"top_p", s.top_p},
         {"max_output_tokens", s.max_output_tokens}};
}

inline void from_json(const nlohmann::json& j, SamplingParams& s) {
    j.at("temperature").get_to(s.temperature);
    j.at("top_p").get_to(s.top_p);
    j.at("max_output_tokens").get_to(s.max_output_tokens);
}

inline void to_json(nlohmann::json& j, const SimulationConfig& c) {
    j = {{"interactions", c.interactions},
         {"context_strategy", to_string(c.context_strategy)},
         {"relevant_k", c.relevant_k},
         {"parent_persona", c.parent_persona},
         {"child_persona", c.child_persona},
         {"sampling", c.sampling},
         {"chat_backend_id", c.chat_backend_id},
         {"embedding_backend_id", c.embedding_backend_id},
         {"run_label", c.run_label}};
}

inline void from_json(const nlohmann::json& j, SimulationConfig& c) {
    j.at("interactions").get_to(c.interactions);
    c.context_strategy =
        parse_context_strategy(j.at("context_strategy").get<std::string>());
    j.at("relevant_k").get_to(c.relevant_k);
    j.at("parent_persona").get_to(c.parent_persona);
    j.at("child_persona").get_to(c.child_persona);
    j.at("sampling").get_to(c.sampling);
    j.at("chat_backend_id").get_to(c.chat_backend_id);
    j.at("embedding_backend_id").get_to(c.embedding_backend_id);
    j.at("run_label").get_to(c.run_label);
}

inline void to_json(nlohmann::json& j, const Utterance& u) {
    j = {{"index", u.index},
         {"speaker", to_string(u.speaker)},
         {"kind", to_string(u.kind)},
         {"text", u.text},
         {"context_block", u.context_block},
         {"request_params", u.request_params}};
}

inline void from_json(const nlohmann::json& j, Utterance& u) {
    j.at("index").get_to(u.index);
    u.speaker = parse_role(j.at("speaker").get<std::string>());
    u.kind = parse_utterance_kind(j.at("kind").get<std::string>());
    j.at("text").get_to(u.text);
    j.at("context_block").get_to(u.context_block);
    j.at("request_params").get_to(u.request_params);
}

inline void to_json(nlohmann::json& j, const ManifestCell& c) {
    j = {{"style", to_string(c.style)},
         {"context_strategy", to_string(c.context_strategy)},
         {"model_label", c.model_label},
         {"few_shot", c.few_shot},
         {"repetitions", c.repetitions},
         {"transcript_ids", c.transcript_ids}};
}

inline void from_json(const nlohmann::json& j, ManifestCell& c) {
    c.style = parse_style(j.at("style").get<std::string>());
    c.context_strategy =
        parse_context_strategy(j.at("context_strategy").get<std::string>());
    j.at("model_label").get_to(c.model_label);
    j.at("few_shot").get_to(c.few_shot);
    j.at("repetitions").get_to(c.repetitions);
    j.at("transcript_ids").get_to(c.transcript_ids);
}

namespace detail {

inline void check_schema_version(const nlohmann::json& record) {
    const int version = record.at("schema_version").get<int>();
    if (version != kSchemaVersion)
        throw std::runtime_error("unsupported schema_version " +
                                 std::to_string(version));
}

}  // namespace detail

// Encodes a transcript as its line records: one header line followed by one
// line per utterance.
inline std::string encode_transcript(const Transcript& t) {
    nlohmann::json header = {{"record", "transcript"},
                             {"schema_version", kSchemaVersion},
                             {"simulation_id", t.simulation_id},
                             {"model_label", t.model_label},
                             {"created_at", t.created_at},
                             {"aborted", t.aborted},
                             {"abort_reason", t.abort_reason},
                             {"config", t.config}};
    std::string out = header.dump();
    out.push_back('\n');
    for (const auto& u : t.utterances) {
        nlohmann::json line = u;
        line["record"] = "utterance";
        line["schema_version"] = kSchemaVersion;
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

// Reads every transcript in the stream. Utterance records attach to the most
// recent transcript header; records of unknown kind are skipped so streams
// may carry future record types.
inline std::vector<Transcript> read_transcripts(std::istream& in) {
    std::vector<Transcript> transcripts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        const std::string kind = record.value("record", "");
        if (kind == "transcript") {
            detail::check_schema_version(record);
            Transcript t;
            record.at("simulation_id").get_to(t.simulation_id);
            record.at("model_label").get_to(t.model_label);
            record.at("created_at").get_to(t.created_at);
            record.at("aborted").get_to(t.aborted);
            record.at("abort_reason").get_to(t.abort_reason);
            record.at("config").get_to(t.config);
            transcripts.push_back(std::move(t));
        } else if (kind == "utterance") {
            detail::check_schema_version(record);
            if (transcripts.empty())
                throw std::runtime_error(
                    "line " + std::to_string(line_no) +
                    ": utterance record before any transcript header");
            transcripts.back().utterances.push_back(record.get<Utterance>());
        }
    }
    return transcripts;
}

inline std::vector<Transcript> parse_transcripts(const std::string& text) {
    std::istringstream in(text);
    return read_transcripts(in);
}

inline std::string transcript_filename(const Transcript& t) {
    return t.simulation_id + ".jsonl";
}

// Writes one transcript file into dir (created if absent); returns the path.
inline std::filesystem::path write_transcript_file(
    const std::filesystem::path& dir, const Transcript& t) {
    std::filesystem::create_directories(dir);
    const auto path = dir / transcript_filename(t);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() +
                                 " for writing");
    out << encode_transcript(t);
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
    return path;
}

inline std::vector<Transcript> load_transcript_file(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_transcripts(in);
}

inline std::string encode_manifest(const RunManifest& m) {
    nlohmann::json header = {{"record", "manifest"},
                             {"schema_version", kSchemaVersion},
                             {"batch_id", m.batch_id},
                             {"created_at", m.created_at}};
    std::string out = header.dump();
    out.push_back('\n');
    for (const auto& cell : m.cells) {
        nlohmann::json line = cell;
        line["record"] = "cell";
        line["schema_version"] = kSchemaVersion;
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

inline RunManifest read_manifest(std::istream& in) {
    RunManifest manifest;
    bool seen_header = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line);
        const std::string kind = record.value("record", "");
        if (kind == "manifest") {
            detail::check_schema_version(record);
            record.at("batch_id").get_to(manifest.batch_id);
            record.at("created_at").get_to(manifest.created_at);
            seen_header = true;
        } else if (kind == "cell") {
            detail::check_schema_version(record);
            if (!seen_header)
                throw std::runtime_error(
                    "cell record before the manifest header");
            manifest.cells.push_back(record.get<ManifestCell>());
        }
    }
    if (!seen_header) throw std::runtime_error("no manifest header record");
    return manifest;
}

inline RunManifest parse_manifest(const std::string& text) {
    std::istringstream in(text);
    return read_manifest(in);
}

inline std::filesystem::path write_manifest_file(
    const std::filesystem::path& dir, const RunManifest& m) {
    std::filesystem::create_directories(dir);
    const auto path = dir / "manifest.jsonl";
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() +
                                 " for writing");
    out << encode_manifest(m);
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
    return path;
}

inline RunManifest load_manifest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_manifest(in);
}

}  // namespace convosim
