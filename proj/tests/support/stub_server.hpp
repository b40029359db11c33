#pragma once

// In-process HTTP stub for backend tests: records every request and answers
// from a scripted queue (the last scripted response repeats once the queue
// drains). Runs on an ephemeral 127.0.0.1 port.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace convosim::test {

struct CapturedRequest {
    std::string path;
    std::string body;
    httplib::Headers headers;
};

struct ScriptedResponse {
    int status = 200;
    std::string body;
    std::chrono::milliseconds delay{0};
};

class StubServer {
public:
    StubServer() {
        server_.Post(".*", [this](const httplib::Request& req,
                                  httplib::Response& res) {
            ScriptedResponse scripted;
            {
                std::lock_guard lock(mutex_);
                requests_.push_back({req.path, req.body, req.headers});
                ++active_;
                max_active_ = std::max(max_active_, active_);
                if (!script_.empty()) {
                    scripted = script_.front();
                    if (script_.size() > 1) script_.pop_front();
                } else {
                    scripted.body = default_body_;
                }
            }
            if (scripted.delay.count() > 0)
                std::this_thread::sleep_for(scripted.delay);
            {
                std::lock_guard lock(mutex_);
                --active_;
            }
            res.status = scripted.status;
            res.set_content(scripted.body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    int port() const { return port_; }
    std::string origin() const {
        return "http://127.0.0.1:" + std::to_string(port_);
    }

    void enqueue(ScriptedResponse response) {
        std::lock_guard lock(mutex_);
        script_.push_back(std::move(response));
    }

    void set_default_body(std::string body) {
        std::lock_guard lock(mutex_);
        default_body_ = std::move(body);
    }

    std::vector<CapturedRequest> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

    std::size_t request_count() const {
        std::lock_guard lock(mutex_);
        return requests_.size();
    }

    // Peak number of simultaneously handled requests.
    int max_active() const {
        std::lock_guard lock(mutex_);
        return max_active_;
    }

    void clear() {
        std::lock_guard lock(mutex_);
        requests_.clear();
        script_.clear();
    }

    static std::string chat_body(const std::string& text,
                                 const std::string& finish_reason = "stop") {
        nlohmann::json body = {
            {"id", "chatcmpl-stub"},
            {"object", "chat.completion"},
            {"choices",
             {{{"index", 0},
               {"message", {{"role", "assistant"}, {"content", text}}},
               {"finish_reason", finish_reason}}}},
            {"usage",
             {{"prompt_tokens", 7}, {"completion_tokens", 5},
              {"total_tokens", 12}}}};
        return body.dump();
    }

    static std::string embedding_body(const std::vector<double>& values) {
        nlohmann::json body = {
            {"object", "list"},
            {"data", {{{"object", "embedding"},
                       {"index", 0},
                       {"embedding", values}}}},
            {"usage", {{"prompt_tokens", 3}, {"total_tokens", 3}}}};
        return body.dump();
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::deque<ScriptedResponse> script_;
    std::vector<CapturedRequest> requests_;
    std::string default_body_ = chat_body("ok");
    int active_ = 0;
    int max_active_ = 0;
};

}  // namespace convosim::test
