#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "convosim/backend.hpp"
#include "convosim/domain.hpp"
#include "convosim/prompts.hpp"

namespace convosim::test {

inline std::filesystem::path repo_dir() {
    return std::filesystem::path(CONVOSIM_REPO_DIR);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() /
                ("convosim-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline BackendRegistry mock_registry(std::uint64_t chat_seed = 1,
                                     std::uint64_t embed_seed = 2) {
    BackendRegistry registry;
    BackendDescriptor chat = mock_backend(chat_seed);
    chat.id = "chat";
    chat.model_label = "mock-chat";
    registry.add(chat);
    BackendDescriptor embed = mock_backend(embed_seed);
    embed.id = "embed";
    embed.model_label = "mock-embed";
    registry.add(embed);
    return registry;
}

inline SimulationConfig paper_config(
    ContextStrategy strategy = ContextStrategy::Relevant,
    int interactions = 5) {
    PersonaCatalog catalog;
    SimulationConfig config;
    config.interactions = interactions;
    config.context_strategy = strategy;
    config.relevant_k = 4;
    config.parent_persona = catalog.get(Style::Authoritative);
    config.child_persona = catalog.get(Style::Child);
    config.chat_backend_id = "chat";
    config.embedding_backend_id =
        strategy == ContextStrategy::Relevant ? "embed" : "";
    config.run_label = "test";
    return config;
}

}  // namespace convosim::test
