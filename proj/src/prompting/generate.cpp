#include "awt/error.hpp"
#include "awt/prompting.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

namespace awt::prompt {

namespace {

ChatRequest user_request(const GenerationConfig &cfg, std::string content) {
  return ChatRequest{cfg.model, {ChatMessage{"user", std::move(content)}}, cfg.temperature};
}

} // namespace

QuestionSet generate_questions(const DatasetSpec &spec, ChatClient &client,
                               const GenerationConfig &cfg) {
  spec.validate();
  const std::size_t want = cfg.question_count;
  if (want == 0)
    throw Error(Errc::InvalidArgument, "question count must be at least 1");

  QuestionSet out;
  std::set<std::string> seen;
  for (std::size_t attempt = 0; attempt <= cfg.max_requeries && out.size() < want; ++attempt) {
    const std::size_t missing = want - out.size();
    const std::string reply = client.complete(user_request(cfg, render_step1_prompt(spec, missing)));
    QuestionSet got;
    try {
      got = parse_questions(reply, missing, /*strict=*/false);
    } catch (const Error &e) {
      if (e.code() != Errc::UnparseableReply)
        throw;
      continue;
    }
    for (auto &q : got.questions)
      if (seen.insert(q).second)
        out.questions.push_back(std::move(q));
  }
  if (out.size() < want)
    throw Error(Errc::QuotaExhausted, "collected " + std::to_string(out.size()) + " of " +
                                          std::to_string(want) + " questions after " +
                                          std::to_string(cfg.max_requeries) + " re-queries");
  return out;
}

DescriptionSet generate_descriptions(const QuestionSet &questions, std::string_view class_name,
                                     std::size_t m, ChatClient &client,
                                     const GenerationConfig &cfg) {
  if (m == 0)
    throw Error(Errc::InvalidArgument, "description count must be at least 1");
  if (questions.questions.empty())
    throw Error(Errc::InvalidArgument, "no questions to ask");
  const std::size_t q_count = questions.size();
  const std::size_t per_question = (m + q_count - 1) / q_count;

  std::vector<std::vector<std::string>> answers(q_count);
  for (std::size_t q = 0; q < q_count; ++q) {
    // Round-robin slots this question fills.
    const std::size_t slots = m / q_count + (q < m % q_count ? 1 : 0);
    if (slots == 0)
      continue;
    const std::string question = instantiate(questions.questions[q], class_name);
    std::set<std::string> seen;
    for (std::size_t attempt = 0;
         attempt <= cfg.max_requeries && answers[q].size() < per_question; ++attempt) {
      const std::size_t missing = per_question - answers[q].size();
      const std::string reply =
          client.complete(user_request(cfg, render_step2_prompt(question, missing)));
      for (auto &a : parse_answers(reply, missing))
        if (seen.insert(a).second)
          answers[q].push_back(std::move(a));
    }
    if (answers[q].size() < slots)
      throw Error(Errc::QuotaExhausted,
                  "class '" + std::string(class_name) + "', question " + std::to_string(q) +
                      ": got " + std::to_string(answers[q].size()) + " of " +
                      std::to_string(slots) + " answers");
  }

  DescriptionSet out;
  out.class_name = std::string(class_name);
  out.model = cfg.model;
  out.temperature = cfg.temperature;
  for (std::size_t s = 0; s < per_question && out.descriptions.size() < m; ++s)
    for (std::size_t q = 0; q < q_count && out.descriptions.size() < m; ++q)
      if (s < answers[q].size()) {
        out.descriptions.push_back(answers[q][s]);
        out.question_index.push_back(q);
      }
  if (out.descriptions.size() != m)
    throw Error(Errc::QuotaExhausted, "class '" + std::string(class_name) + "': collected " +
                                          std::to_string(out.descriptions.size()) + " of " +
                                          std::to_string(m) + " descriptions");
  return out;
}

std::vector<DescriptionSet> generate_all(const DatasetSpec &spec, const QuestionSet &questions,
                                         std::size_t m, ChatClient &client,
                                         const GenerationConfig &cfg) {
  spec.validate();
  const std::size_t n = spec.class_names.size();
  std::vector<DescriptionSet> out(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = generate_descriptions(questions, spec.class_names[i], m, client, cfg);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(cfg.jobs, 1, n);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(worker);
  }
  for (const auto &f : failures)
    if (f)
      std::rethrow_exception(f);
  return out;
}

nlohmann::json descriptions_to_json(const DatasetSpec &spec, const QuestionSet &questions,
                                    const std::vector<DescriptionSet> &sets,
                                    const GenerationConfig &cfg) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto &s : sets)
    classes.push_back({{"name", s.class_name},
                       {"descriptions", s.descriptions},
                       {"question_index", s.question_index}});
  return {{"dataset", {{"name", spec.name}, {"description", spec.description}}},
          {"model", cfg.model},
          {"temperature", cfg.temperature},
          {"questions", questions.questions},
          {"classes", std::move(classes)}};
}

} // namespace awt::prompt
