#include "awt/error.hpp"
#include "awt/prompting.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace awt::prompt {

using nlohmann::json;

json to_json(const ChatRequest &request) {
  json messages = json::array();
  for (const auto &m : request.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", request.model},
          {"messages", std::move(messages)},
          {"temperature", request.temperature}};
}

std::string request_hash(const ChatRequest &request) {
  // nlohmann objects iterate in key order, so dump() is already canonical.
  const std::string text = to_json(request).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(Errc::ClientError, "SHA-256 failed");
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i)
    hex << std::setw(2) << static_cast<int>(digest[i]);
  return hex.str();
}

std::string extract_reply(const json &response) {
  try {
    const auto &content = response.at("choices").at(0).at("message").at("content");
    if (!content.is_string())
      throw Error(Errc::UnparseableReply, "message content is not a string");
    return content.get<std::string>();
  } catch (const json::exception &e) {
    throw Error(Errc::UnparseableReply, std::string("malformed chat response: ") + e.what());
  }
}

FixtureClient::FixtureClient(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_))
    throw Error(Errc::IoError, "fixture directory not found: " + dir_.string());
}

std::string FixtureClient::complete(const ChatRequest &request) {
  const auto path = dir_ / (request_hash(request) + ".json");
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::ClientError, "no recorded response " + path.filename().string() +
                                       " in " + dir_.string());
  json response;
  try {
    in >> response;
  } catch (const json::exception &e) {
    throw Error(Errc::ClientError, path.string() + ": " + e.what());
  }
  return extract_reply(response);
}

void record_fixture(const std::filesystem::path &dir, const ChatRequest &request,
                    const json &response) {
  std::filesystem::create_directories(dir);
  const auto path = dir / (request_hash(request) + ".json");
  std::ofstream out(path);
  if (!out)
    throw Error(Errc::IoError, "cannot write " + path.string());
  out << response.dump(2) << '\n';
}

namespace {

double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

} // namespace

HttpChatClient::HttpChatClient(Options options) : options_(std::move(options)) {
  if (options_.api_key.empty())
    throw Error(Errc::InvalidArgument, std::string("missing API key (set ") + kApiKeyEnv + ")");
  const auto &url = options_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(Errc::InvalidArgument, "endpoint must be an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (options_.max_retries < 0)
    throw Error(Errc::InvalidArgument, "max_retries must be non-negative");
}

void HttpChatClient::throttle() {
  if (options_.requests_per_second <= 0)
    return;
  double wait = 0;
  {
    std::lock_guard lock(pace_mutex_);
    const double now = steady_seconds();
    const double slot = std::max(now, next_slot_);
    next_slot_ = slot + 1.0 / options_.requests_per_second;
    wait = slot - now;
  }
  if (wait > 0)
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
}

std::string HttpChatClient::complete(const ChatRequest &request) {
  const std::string body = to_json(request).dump();
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(options_.timeout_seconds);
  client.set_read_timeout(options_.timeout_seconds);
  client.set_bearer_token_auth(options_.api_key);

  std::string last_problem;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(500) * (1 << (attempt - 1)));
    throttle();
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_problem = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_problem = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Error(Errc::ClientError, "HTTP " + std::to_string(res->status) + ": " + res->body);
    json response;
    try {
      response = json::parse(res->body);
    } catch (const json::exception &e) {
      throw Error(Errc::UnparseableReply, std::string("response is not JSON: ") + e.what());
    }
    std::string reply = extract_reply(response);
    if (options_.record_dir)
      record_fixture(*options_.record_dir, request, response);
    return reply;
  }
  if (last_problem == "HTTP 429")
    throw Error(Errc::QuotaExhausted, "rate limited after " +
                                          std::to_string(options_.max_retries) + " retries");
  throw Error(Errc::ClientError, last_problem + " after " +
                                     std::to_string(options_.max_retries) + " retries");
}

} // namespace awt::prompt
