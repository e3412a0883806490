#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

namespace oad {

struct Exemplar {
  std::string caption;
  std::string label;
};

/// JSON list of {"caption", "label"}; labels must be normal or abnormal.
std::vector<Exemplar> load_exemplars(const std::filesystem::path& path);

/// Instruction preamble, exemplars in order, the caption, and a request for
/// a one-word answer.
std::string build_prompt(const std::string& caption, const std::vector<Exemplar>& exemplars = {});

/// Caption on the last "Description:" line of a prompt, or the whole text
/// when there is none.
std::string caption_from_prompt(const std::string& prompt);

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string source() const = 0;
  /// Throws kService when the service cannot be reached.
  virtual std::string complete(const std::string& prompt, int max_tokens) = 0;
};

std::vector<std::string> default_abnormal_keywords();

/// Answers "abnormal" iff the prompt's caption contains any keyword,
/// case-insensitively, as a substring.
class MockCompletionClient final : public CompletionClient {
 public:
  explicit MockCompletionClient(std::vector<std::string> keywords = default_abnormal_keywords());
  std::string source() const override { return "mock"; }
  std::string complete(const std::string& prompt, int max_tokens) override;
  const std::vector<std::string>& keywords() const { return keywords_; }

 private:
  std::vector<std::string> keywords_;
};

struct ExternalClientOptions {
  std::string endpoint;  // http://host[:port]/path
  std::string api_key;
  int max_in_flight = 4;
  std::chrono::seconds timeout{30};
};

/// POSTs {"prompt", "max_tokens"} with a bearer token and reads "text".
class ExternalCompletionClient final : public CompletionClient {
 public:
  explicit ExternalCompletionClient(ExternalClientOptions options);
  std::string source() const override { return "external"; }
  std::string complete(const std::string& prompt, int max_tokens) override;

 private:
  ExternalClientOptions options_;
  std::string scheme_host_port_;
  std::string path_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

/// OAD_LLM_ENDPOINT / OAD_LLM_KEY when the endpoint is set, else the mock.
std::unique_ptr<CompletionClient> client_from_environment(std::vector<std::string> keywords = default_abnormal_keywords());

enum class Verdict { kNormal, kAbnormal };
std::string to_string(Verdict v);

struct DetectionVerdict {
  Verdict label = Verdict::kNormal;
  std::string rationale;
  std::string source;
  bool degraded = false;
};

/// First label word in a response, "abnormal" taking precedence. Throws
/// ParseError carrying the raw text when neither word occurs.
Verdict parse_verdict(const std::string& response);

/// Service failures fall back to the mock keyword rule and mark the
/// verdict degraded.
DetectionVerdict classify(const std::string& caption, CompletionClient& client,
                          const std::vector<Exemplar>& exemplars = {},
                          const std::vector<std::string>& fallback_keywords = default_abnormal_keywords());

}  // namespace oad
