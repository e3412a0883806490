#include "oad/m2t/detection.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>

#include "oad/core/error.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro that breaks Eigen.
#include <httplib.h>

namespace oad {

namespace {

constexpr const char* kPreamble =
    "You are assisting a health monitoring system. Each description summarizes the movement of one person.\n"
    "Decide whether the behavior is normal or abnormal (a possible medical condition such as falling, "
    "pain or coughing).\n";
constexpr const char* kQuestion = "Answer with exactly one word, normal or abnormal.";
constexpr int kMaxAnswerTokens = 8;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return s;
}

}  // namespace

std::vector<Exemplar> load_exemplars(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot read " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<Exemplar> out;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return out;
  try {
    for (const auto& e : nlohmann::json::parse(text)) {
      Exemplar x{e.at("caption").get<std::string>(), lower(e.at("label").get<std::string>())};
      require(x.label == "normal" || x.label == "abnormal", ErrorCode::kLabel,
              "exemplar label must be normal or abnormal, got '" + x.label + "'");
      out.push_back(std::move(x));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return out;
}

std::string build_prompt(const std::string& caption, const std::vector<Exemplar>& exemplars) {
  require(!caption.empty(), ErrorCode::kInvalidInput, "caption is empty");
  std::string p = kPreamble;
  if (!exemplars.empty()) {
    p += "\nExamples:\n";
    for (const auto& e : exemplars) p += "Description: " + e.caption + "\nAnswer: " + e.label + "\n";
  }
  p += "\nDescription: " + caption + "\n";
  p += kQuestion;
  p += "\nAnswer:";
  return p;
}

std::string caption_from_prompt(const std::string& prompt) {
  const std::string tag = "Description: ";
  const auto at = prompt.rfind(tag);
  if (at == std::string::npos) return prompt;
  const auto start = at + tag.size();
  const auto end = prompt.find('\n', start);
  return prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::vector<std::string> default_abnormal_keywords() {
  return {"pain", "fall", "falling", "stagger", "vomit", "cough", "sneeze", "headache", "chest", "neck", "back"};
}

MockCompletionClient::MockCompletionClient(std::vector<std::string> keywords) {
  for (auto& k : keywords)
    if (!k.empty()) keywords_.push_back(lower(k));
}

std::string MockCompletionClient::complete(const std::string& prompt, int) {
  const std::string caption = lower(caption_from_prompt(prompt));
  for (const auto& k : keywords_)
    if (caption.find(k) != std::string::npos) return "abnormal";
  return "normal";
}

ExternalCompletionClient::ExternalCompletionClient(ExternalClientOptions options) : options_(std::move(options)) {
  require(options_.max_in_flight >= 1, ErrorCode::kConfig, "max_in_flight must be at least 1");
  const std::string& url = options_.endpoint;
  const auto scheme_end = url.find("://");
  require(scheme_end != std::string::npos, ErrorCode::kConfig, "endpoint must be an http URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  require(url.compare(0, scheme_end, "http") == 0, ErrorCode::kConfig,
          "only plain http endpoints are supported: " + url);
  in_flight_ = std::make_unique<std::counting_semaphore<>>(options_.max_in_flight);
}

std::string ExternalCompletionClient::complete(const std::string& prompt, int max_tokens) {
  in_flight_->acquire();
  struct Release {
    std::counting_semaphore<>* s;
    ~Release() { s->release(); }
  } release{in_flight_.get()};

  httplib::Client cli(scheme_host_port_);
  cli.set_connection_timeout(options_.timeout);
  cli.set_read_timeout(options_.timeout);
  cli.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
  const std::string body = nlohmann::json{{"prompt", prompt}, {"max_tokens", max_tokens}}.dump();
  const auto res = cli.Post(path_, headers, body, "application/json");
  if (!res) fail(ErrorCode::kService, "completion service unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) fail(ErrorCode::kService, "completion service returned HTTP " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body).at("text").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("completion response has no text field", res->body);
  }
}

std::unique_ptr<CompletionClient> client_from_environment(std::vector<std::string> keywords) {
  const char* endpoint = std::getenv("OAD_LLM_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') return std::make_unique<MockCompletionClient>(std::move(keywords));
  const char* key = std::getenv("OAD_LLM_KEY");
  return std::make_unique<ExternalCompletionClient>(ExternalClientOptions{endpoint, key ? key : ""});
}

std::string to_string(Verdict v) { return v == Verdict::kAbnormal ? "abnormal" : "normal"; }

Verdict parse_verdict(const std::string& response) {
  const std::string text = lower(response);
  if (text.find("abnormal") != std::string::npos) return Verdict::kAbnormal;
  if (text.find("normal") != std::string::npos) return Verdict::kNormal;
  throw ParseError("response names neither normal nor abnormal", response);
}

DetectionVerdict classify(const std::string& caption, CompletionClient& client, const std::vector<Exemplar>& exemplars,
                          const std::vector<std::string>& fallback_keywords) {
  const std::string prompt = build_prompt(caption, exemplars);
  DetectionVerdict v;
  v.source = client.source();
  std::string response;
  try {
    response = client.complete(prompt, kMaxAnswerTokens);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kService) throw;
    MockCompletionClient fallback(fallback_keywords);
    v.label = parse_verdict(fallback.complete(prompt, kMaxAnswerTokens));
    v.source = fallback.source();
    v.degraded = true;
    v.rationale = std::string("service degraded, keyword fallback used: ") + e.what();
    return v;
  }
  v.label = parse_verdict(response);
  v.rationale = response;
  return v;
}

}  // namespace oad
