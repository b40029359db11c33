#include <catch2/catch_amalgamated.hpp>

#include "convosim/backend.hpp"
#include "support/helpers.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

using namespace convosim;

namespace {

ChatRequest fixture_request(const std::string& user = "hello") {
    ChatRequest req;
    req.system_prompt = "P";
    req.user_message = user;
    req.model_label = "m";
    return req;
}

int word_count(const std::string& text) {
    int words = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = c == ' ';
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return words;
}

}  // namespace

TEST_CASE("mock chat is a pure function of seed and inputs", "[backend]") {
    const auto req = fixture_request();
    std::set<std::string> outputs;
    for (int i = 0; i < 1000; ++i)
        outputs.insert(mock_chat_complete(7, req).text);
    CHECK(outputs.size() == 1);

    const auto a = mock_chat_complete(7, req);
    CHECK(a.finish_reason == FinishReason::Stop);
    CHECK(a.usage.completion_tokens > 0);
    CHECK_FALSE(a.text.empty());
}

TEST_CASE("different seeds produce different chat output", "[backend]") {
    const auto fixtures = {std::string("hello"), std::string("help me"),
                           std::string("what's for dinner")};
    bool any_differ = false;
    for (const auto& user : fixtures)
        if (mock_chat_complete(1, fixture_request(user)).text !=
            mock_chat_complete(2, fixture_request(user)).text)
            any_differ = true;
    CHECK(any_differ);
}

TEST_CASE("mock chat respects the output token cap", "[backend]") {
    std::mt19937 rng(99);
    const std::vector<std::string> users = {"a", "tell me more",
                                            "what about the game",
                                            "long question about many things"};
    for (int i = 0; i < 300; ++i) {
        ChatRequest req = fixture_request(users[rng() % users.size()]);
        req.system_prompt = "persona-" + std::to_string(rng() % 5);
        req.sampling.max_output_tokens = 1 + static_cast<int>(rng() % 10);
        const auto response = mock_chat_complete(rng() % 4, req);
        const int words = word_count(response.text);
        CHECK(words >= 1);
        CHECK(words <= req.sampling.max_output_tokens);
    }
}

TEST_CASE("mock embeddings are deterministic, 64-dim, unit norm",
          "[backend]") {
    const auto a = mock_embed(3, "abc");
    const auto b = mock_embed(3, "abc");
    CHECK(a == b);
    CHECK(a.dimension() == 64);

    double norm = 0.0;
    bool all_zero = true;
    for (double v : a.values) {
        norm += v * v;
        if (v != 0.0) all_zero = false;
    }
    CHECK_FALSE(all_zero);
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);

    CHECK(mock_embed(3, "abc") != mock_embed(3, "xyz"));
    CHECK(mock_embed(3, "abc") != mock_embed(4, "abc"));
    // distinct across a small corpus of fixture texts
    std::set<std::vector<double>> seen;
    for (const std::string text :
         {"hi", "homework", "dinner", "game", "a", "ab"})
        seen.insert(mock_embed(3, text).values);
    CHECK(seen.size() == 6);
}

TEST_CASE("backend preconditions are rejected up front", "[backend]") {
    CHECK_THROWS_AS(mock_embed(1, ""), std::invalid_argument);
    ChatRequest no_system = fixture_request();
    no_system.system_prompt.clear();
    CHECK_THROWS_AS(mock_chat_complete(1, no_system), std::invalid_argument);
    ChatRequest no_user = fixture_request();
    no_user.user_message.clear();
    CHECK_THROWS_AS(mock_chat_complete(1, no_user), std::invalid_argument);

    const auto descriptor = mock_backend(5);
    CHECK_THROWS_AS(embed(descriptor, ""), std::invalid_argument);
}

TEST_CASE("mock_backend descriptor routes through the dispatcher",
          "[backend]") {
    const BackendDescriptor descriptor = mock_backend(11);
    CHECK(descriptor.kind == BackendKind::Mock);
    CHECK(descriptor.mock_seed == 11);
    CHECK(chat_complete(descriptor, fixture_request()).text ==
          mock_chat_complete(11, fixture_request()).text);
    CHECK(embed(descriptor, "abc") == mock_embed(11, "abc"));
}

TEST_CASE("registry resolves ids and fills model labels", "[backend]") {
    const auto registry = test::mock_registry();
    CHECK(registry.contains("chat"));
    CHECK_FALSE(registry.contains("nope"));
    CHECK(registry.get("chat").model_label == "mock-chat");
    CHECK_THROWS_AS(registry.get("nope"), std::invalid_argument);
    CHECK_THROWS_AS(registry.chat_complete("nope", fixture_request()),
                    std::invalid_argument);

    const auto response = registry.chat_complete("chat", fixture_request());
    CHECK_FALSE(response.text.empty());
}

TEST_CASE("registry add rejects malformed descriptors", "[backend]") {
    BackendRegistry registry;
    BackendDescriptor no_id;
    CHECK_THROWS_AS(registry.add(no_id), std::invalid_argument);

    BackendDescriptor http;
    http.id = "h";
    http.kind = BackendKind::HttpOpenAICompatible;
    CHECK_THROWS_AS(registry.add(http), std::invalid_argument);  // no base_url

    BackendDescriptor mock_with_url = mock_backend(1);
    mock_with_url.base_url = "http://x";
    CHECK_THROWS_AS(registry.add(mock_with_url), std::invalid_argument);
}

TEST_CASE("mock swap keeps ids and labels, derives per-id seeds",
          "[backend]") {
    BackendRegistry registry;
    BackendDescriptor a;
    a.id = "mixtral";
    a.kind = BackendKind::HttpOpenAICompatible;
    a.base_url = "http://localhost:11434/v1";
    a.model_label = "Mixtral-8x7b-Instruct";
    registry.add(a);
    BackendDescriptor b;
    b.id = "gpt4";
    b.kind = BackendKind::HttpOpenAICompatible;
    b.base_url = "http://localhost:8080/v1";
    b.model_label = "GPT-4-Turbo";
    registry.add(b);

    registry.swap_all_for_mocks(7);
    CHECK(registry.get("mixtral").kind == BackendKind::Mock);
    CHECK(registry.get("mixtral").model_label == "Mixtral-8x7b-Instruct");
    CHECK(registry.get("gpt4").kind == BackendKind::Mock);
    CHECK(registry.get("mixtral").mock_seed != registry.get("gpt4").mock_seed);

    // distinct derived seeds make the two "models" speak differently
    CHECK(registry.chat_complete("mixtral", fixture_request()).text !=
          registry.chat_complete("gpt4", fixture_request()).text);
}

TEST_CASE("registry survives concurrent callers", "[backend]") {
    auto registry = test::mock_registry();
    std::vector<std::thread> threads;
    std::atomic<int> failures{0};
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&registry, &failures, i] {
            for (int j = 0; j < 50; ++j) {
                const auto response = registry.chat_complete(
                    "chat", fixture_request("q" + std::to_string(i)));
                if (response.text.empty()) ++failures;
            }
        });
    for (auto& t : threads) t.join();
    CHECK(failures == 0);
}
