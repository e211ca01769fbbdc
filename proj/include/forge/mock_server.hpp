#pragma once

#include <memory>
#include <string>

namespace forge {

// Bundled stand-in for the two generator endpoints. Replies are canned and
// deterministic:
//   /v1/complete    extraction prompts echo the page text inside the fence,
//                   validation prompts grade True unless the question carries
//                   an [invalid] or [incomplete] marker, answering prompts
//                   return a fixed two-sentence reply, distractor prompts
//                   return "option a,option b,option c".
//   /v1/synthesize  duration scales with text length; token ids derive from
//                   a hash of (text, voice).
// Requests whose text contains "[flaky]" fail with HTTP 500 the first
// fail_first times per distinct body, for retry tests.
class MockServer {
 public:
  explicit MockServer(int fail_first = 0);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  std::string base_url() const;
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace forge
