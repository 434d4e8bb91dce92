#pragma once

// Two-step dataset-aware prompting: ask a chat model for questions that are
// conditioned on a dataset-level description, then ask each question about
// every class to collect that class's descriptions.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace awt::prompt {

inline constexpr std::string_view kPlaceholder = "{}";

struct DatasetSpec {
  std::string name;
  std::string description; // may be empty
  std::vector<std::string> class_names;

  void validate() const;
};

/// Question templates, each with exactly one "{}" for the class name.
struct QuestionSet {
  std::vector<std::string> questions;

  std::size_t size() const noexcept { return questions.size(); }
};

struct DescriptionSet {
  std::string class_name;
  std::vector<std::string> descriptions;
  std::vector<std::size_t> question_index; // provenance, parallel to descriptions
  std::string model;
  double temperature = 0.0;
};

// ---------------------------------------------------------------------------
// Chat-completion transport

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.9;
};

// {"model", "messages": [{"role", "content"}], "temperature"}
nlohmann::json to_json(const ChatRequest &request);

// SHA-256 (hex) of the request's compact JSON with sorted keys. Names the
// fixture file that stores the recorded reply.
std::string request_hash(const ChatRequest &request);

// choices[0].message.content of a chat-completion response.
std::string extract_reply(const nlohmann::json &response);

class ChatClient {
public:
  virtual ~ChatClient() = default;
  // Returns the assistant reply text. Implementations must be safe to call
  // from several threads.
  virtual std::string complete(const ChatRequest &request) = 0;
};

/// Replays recorded responses from `<dir>/<request_hash>.json`.
class FixtureClient : public ChatClient {
public:
  explicit FixtureClient(std::filesystem::path dir);
  std::string complete(const ChatRequest &request) override;

  const std::filesystem::path &dir() const noexcept { return dir_; }

private:
  std::filesystem::path dir_;
};

/// POSTs to an OpenAI-compatible chat-completion endpoint.
class HttpChatClient : public ChatClient {
public:
  struct Options {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key;
    int timeout_seconds = 60;
    int max_retries = 3;             // for 429 and 5xx
    double requests_per_second = 0;  // 0 = no ceiling
    std::optional<std::filesystem::path> record_dir;
  };

  explicit HttpChatClient(Options options);
  std::string complete(const ChatRequest &request) override;

private:
  void throttle();

  Options options_;
  std::string scheme_host_port_;
  std::string path_;
  std::mutex pace_mutex_;
  double next_slot_ = 0.0; // seconds on the steady clock
};

// Writes `<dir>/<request_hash>.json` holding `response`.
void record_fixture(const std::filesystem::path &dir, const ChatRequest &request,
                    const nlohmann::json &response);

// Environment variable holding the API key.
inline constexpr const char *kApiKeyEnv = "AWT_LLM_API_KEY";

// ---------------------------------------------------------------------------
// Prompt templates and reply parsing

struct GenerationConfig {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.9;
  std::size_t question_count = 10;
  std::size_t max_requeries = 3;
  unsigned jobs = 1; // classes generated concurrently
};

/// "Generate questions to classify images from a dataset, which <desc>."
/// followed by the count instruction; with an empty description the first
/// sentence is "Generate questions to classify images."
std::string render_step1_prompt(const DatasetSpec &spec, std::size_t q_count);

/// Second-step prompt for a question already instantiated with a class name.
std::string render_step2_prompt(std::string_view question, std::size_t answers);

// Replaces the placeholder with the class name.
std::string instantiate(std::string_view question, std::string_view class_name);

/// Reads numbered or bulleted lines (falls back to every non-empty line when
/// none are marked). Class-name stand-ins such as "{class}" or "[class name]"
/// become "{}". Keeps at most `expected` questions.
/// Throws UnparseableReply when nothing is found and, if `strict`,
/// MissingPlaceholder for a line without exactly one placeholder (lenient
/// mode drops such lines).
QuestionSet parse_questions(std::string_view reply, std::size_t expected, bool strict = true);

// Same line rules for second-step answers; at most `expected`.
std::vector<std::string> parse_answers(std::string_view reply, std::size_t expected);

/// First step. Re-queries for the missing count until `question_count`
/// distinct questions are collected; QuotaExhausted after max_requeries.
QuestionSet generate_questions(const DatasetSpec &spec, ChatClient &client,
                               const GenerationConfig &cfg);

/// Second step for one class. Each question that receives a slot is asked for
/// ceil(m / |questions|) answers; answers are taken round-robin over the
/// questions until exactly m are collected.
DescriptionSet generate_descriptions(const QuestionSet &questions, std::string_view class_name,
                                     std::size_t m, ChatClient &client,
                                     const GenerationConfig &cfg);

// Every class of `spec`, in class order.
std::vector<DescriptionSet> generate_all(const DatasetSpec &spec, const QuestionSet &questions,
                                         std::size_t m, ChatClient &client,
                                         const GenerationConfig &cfg);

nlohmann::json descriptions_to_json(const DatasetSpec &spec, const QuestionSet &questions,
                                    const std::vector<DescriptionSet> &sets,
                                    const GenerationConfig &cfg);

} // namespace awt::prompt
