#include "forge/mock_server.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "forge/hash.hpp"

namespace forge {

namespace {

using json = nlohmann::ordered_json;

std::string strip_tags(const std::string& html) {
  std::string out;
  bool in_tag = false;
  for (char c : html) {
    if (c == '<') {
      in_tag = true;
    } else if (c == '>') {
      in_tag = false;
      out.push_back(' ');
    } else if (!in_tag) {
      out.push_back(c);
    }
  }
  // collapse whitespace runs
  std::string collapsed;
  bool in_space = true;
  for (char c : out) {
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (space) {
      if (!in_space) collapsed.push_back(' ');
      in_space = true;
    } else {
      collapsed.push_back(c);
      in_space = false;
    }
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

std::string between(const std::string& text, const std::string& after, const std::string& before) {
  std::size_t a = text.find(after);
  if (a == std::string::npos) return "";
  a += after.size();
  std::size_t b = text.find(before, a);
  if (b == std::string::npos) b = text.size();
  return text.substr(a, b - a);
}

std::string canned_completion(const std::string& prompt) {
  if (prompt.find("Extract the useful (non-boilerplate) text") != std::string::npos) {
    std::size_t at = prompt.find("}\n\n");
    std::string html = at == std::string::npos ? "" : prompt.substr(at + 3);
    return "```plaintext\n{\n" + strip_tags(html) + "\n}\n```";
  }
  if (prompt.find("Here is a problem that you do not need to solve:") != std::string::npos) {
    std::string question =
        between(prompt, "Here is a problem that you do not need to solve:\n", "\n\n##");
    bool complete = question.find("[incomplete]") == std::string::npos;
    bool is_question = question.find("[invalid]") == std::string::npos;
    std::string verdict = "The statement was reviewed as asked.\n";
    verdict += std::string("complete: ") + (complete ? "True" : "False") + "\n";
    verdict += std::string("is_question: ") + (is_question ? "True" : "False");
    return verdict;
  }
  if (prompt.find("Let's think step by step.") != std::string::npos) {
    return "We reason about it step by step. The answer is 42.";
  }
  if (prompt.find("three more plausible distractor options") != std::string::npos) {
    return "option a,option b,option c";
  }
  return prompt;
}

}  // namespace

struct MockServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  int fail_first = 0;
  std::mutex mutex;
  std::map<std::string, int> failures;  // body -> failures served so far

  bool should_fail(const std::string& body) {
    if (fail_first <= 0 || body.find("[flaky]") == std::string::npos) return false;
    std::lock_guard<std::mutex> lock(mutex);
    int& n = failures[body];
    if (n < fail_first) {
      ++n;
      return true;
    }
    return false;
  }
};

MockServer::MockServer(int fail_first) : impl_(std::make_unique<Impl>()) {
  impl_->fail_first = fail_first;

  impl_->server.Post("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
    if (impl_->should_fail(req.body)) {
      res.status = 500;
      res.set_content("{\"error\":\"synthetic failure\"}", "application/json");
      return;
    }
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("prompt")) {
      res.status = 400;
      res.set_content("{\"error\":\"missing prompt\"}", "application/json");
      return;
    }
    json reply;
    reply["completion"] = canned_completion(body["prompt"].get<std::string>());
    res.set_content(reply.dump(), "application/json");
  });

  impl_->server.Post("/v1/synthesize", [this](const httplib::Request& req, httplib::Response& res) {
    if (impl_->should_fail(req.body)) {
      res.status = 500;
      res.set_content("{\"error\":\"synthetic failure\"}", "application/json");
      return;
    }
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("text") || !body.contains("voice_id")) {
      res.status = 400;
      res.set_content("{\"error\":\"missing text or voice_id\"}", "application/json");
      return;
    }
    const std::string text = body["text"].get<std::string>();
    const std::string voice = body["voice_id"].get<std::string>();
    Hash128 h = hash128(text + "\x1f" + voice);
    double duration = std::max(0.25, 0.04 * static_cast<double>(text.size()));
    duration = std::round(duration * 1000.0) / 1000.0;
    json reply;
    reply["audio_ref"] = "mock:" + to_hex(h);
    reply["duration_s"] = duration;
    json tokens = json::array();
    auto count = static_cast<std::int64_t>(std::llround(duration * 12.5));
    for (std::int64_t i = 0; i < count; ++i)
      tokens.push_back(static_cast<std::int64_t>(mix64(h.lo + static_cast<std::uint64_t>(i)) & 0xFFF));
    reply["audio_tokens"] = std::move(tokens);
    res.set_content(reply.dump(), "application/json");
  });

  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockServer::~MockServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

int MockServer::port() const { return impl_->port; }

}  // namespace forge
