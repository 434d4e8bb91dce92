#include "awt/error.hpp"
#include "awt/prompting.hpp"

#include <algorithm>
#include <regex>
#include <set>

namespace awt::prompt {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string count_phrase(std::size_t n, const char *singular, const char *plural) {
  return std::to_string(n) + " " + (n == 1 ? singular : plural);
}

// List items of a reply with their markers removed.
std::vector<std::string> list_items(std::string_view reply) {
  static const std::regex marker(R"(^\s*(?:\d+\s*[.):]|[-*]|•)\s+(.*)$)");
  std::vector<std::string> marked;
  std::vector<std::string> plain;
  std::size_t start = 0;
  while (start <= reply.size()) {
    auto end = reply.find('\n', start);
    if (end == std::string_view::npos)
      end = reply.size();
    const std::string line(trim(reply.substr(start, end - start)));
    start = end + 1;
    if (line.empty())
      continue;
    std::smatch m;
    if (std::regex_match(line, m, marker))
      marked.push_back(m[1].str());
    else
      plain.push_back(line);
  }
  auto &items = marked.empty() ? plain : marked;
  for (auto &item : items) {
    std::string_view v = trim(item);
    // strip surrounding markdown emphasis and quotes
    while (v.size() >= 4 && v.substr(0, 2) == "**" && v.substr(v.size() - 2) == "**")
      v = trim(v.substr(2, v.size() - 4));
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
      v = trim(v.substr(1, v.size() - 2));
    item = std::string(v);
  }
  std::erase_if(items, [](const std::string &s) { return s.empty(); });
  return items;
}

std::string canonical_placeholders(std::string line) {
  static const std::regex braces(R"(\{[^{}]*\})");
  static const std::regex brackets(
      R"(\[(?:class|class ?name|category|category ?name|object|label)\]|<(?:class|class ?name|category)>)",
      std::regex::icase);
  line = std::regex_replace(line, braces, "{}");
  line = std::regex_replace(line, brackets, "{}");
  return line;
}

std::size_t count_placeholders(std::string_view s) {
  std::size_t n = 0;
  for (auto pos = s.find(kPlaceholder); pos != std::string_view::npos;
       pos = s.find(kPlaceholder, pos + kPlaceholder.size()))
    ++n;
  return n;
}

} // namespace

void DatasetSpec::validate() const {
  if (name.empty())
    throw Error(Errc::InvalidArgument, "dataset name is empty");
  if (class_names.empty())
    throw Error(Errc::InvalidArgument, "dataset has no classes");
  for (const auto &c : class_names)
    if (trim(c).empty())
      throw Error(Errc::InvalidArgument, "empty class name");
}

std::string render_step1_prompt(const DatasetSpec &spec, std::size_t q_count) {
  if (q_count == 0)
    throw Error(Errc::InvalidArgument, "question count must be at least 1");
  std::string_view desc = trim(spec.description);
  while (!desc.empty() && desc.back() == '.')
    desc = trim(desc.substr(0, desc.size() - 1));

  std::string out = desc.empty()
                        ? std::string("Generate questions to classify images.")
                        : "Generate questions to classify images from a dataset, which " +
                              std::string(desc) + ".";
  out += " Write exactly " + count_phrase(q_count, "question", "questions") +
         ", numbered one per line, and write {} wherever the class name belongs.";
  return out;
}

std::string render_step2_prompt(std::string_view question, std::size_t answers) {
  if (answers == 0)
    throw Error(Errc::InvalidArgument, "answer count must be at least 1");
  return std::string(trim(question)) + " Give " +
         count_phrase(answers, "answer", "different answers") +
         ", numbered one per line, each a single sentence describing visual features.";
}

std::string instantiate(std::string_view question, std::string_view class_name) {
  const auto pos = question.find(kPlaceholder);
  if (pos == std::string_view::npos)
    throw Error(Errc::MissingPlaceholder, std::string(question));
  std::string out(question.substr(0, pos));
  out += class_name;
  out += question.substr(pos + kPlaceholder.size());
  return out;
}

QuestionSet parse_questions(std::string_view reply, std::size_t expected, bool strict) {
  const auto items = list_items(reply);
  if (items.empty())
    throw Error(Errc::UnparseableReply, "reply contains no questions");
  QuestionSet out;
  std::set<std::string> seen;
  for (const auto &item : items) {
    if (out.questions.size() >= expected)
      break;
    std::string q = canonical_placeholders(item);
    if (count_placeholders(q) != 1) {
      if (strict)
        throw Error(Errc::MissingPlaceholder, item);
      continue;
    }
    if (seen.insert(q).second)
      out.questions.push_back(std::move(q));
  }
  if (out.questions.empty())
    throw Error(Errc::UnparseableReply, "reply contains no usable questions");
  return out;
}

std::vector<std::string> parse_answers(std::string_view reply, std::size_t expected) {
  auto items = list_items(reply);
  if (items.size() > expected)
    items.resize(expected);
  return items;
}

} // namespace awt::prompt
