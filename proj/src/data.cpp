#include "csqn/data.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csqn/errors.hpp"

namespace csqn {

using nlohmann::json;

const char* label_str(Label l) {
  return l == Label::entails ? "entails" : "neutral";
}

Label parse_label(const std::string& s) {
  if (s == "entails") return Label::entails;
  if (s == "neutral") return Label::neutral;
  throw std::domain_error("unknown label '" + s + "'");
}

static bool is_ascii_punct(unsigned char c) {
  return c < 128 && std::ispunct(c);
}

std::vector<std::string> tokenize(const std::string& text, bool strip_punctuation) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      size_t b = i, e = j;
      if (strip_punctuation) {
        while (b < e && is_ascii_punct(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && is_ascii_punct(static_cast<unsigned char>(text[e - 1]))) --e;
      }
      if (e > b) {
        std::string tok = text.substr(b, e - b);
        for (char& c : tok)
          c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(std::move(tok));
      }
    }
    i = j;
  }
  return out;
}

static std::string trimmed(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<ExamplePair> parse_dataset(std::istream& in) {
  std::vector<ExamplePair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trimmed(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw ParseError("dataset: malformed record", lineno);
    }
    if (!j.is_object() || !j.contains("premise") || !j.contains("hypothesis") ||
        !j.contains("label") || !j["premise"].is_string() ||
        !j["hypothesis"].is_string() || !j["label"].is_string())
      throw ParseError(
          "dataset: record needs string fields premise/hypothesis/label", lineno);
    ExamplePair p;
    p.premise = j["premise"].get<std::string>();
    p.hypothesis = j["hypothesis"].get<std::string>();
    try {
      p.label = parse_label(j["label"].get<std::string>());
    } catch (const std::domain_error& e) {
      throw ParseError(std::string("dataset: ") + e.what(), lineno);
    }
    if (trimmed(p.premise).empty())
      throw ParseError("dataset: empty premise", lineno);
    if (trimmed(p.hypothesis).empty())
      throw ParseError("dataset: empty hypothesis", lineno);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<ExamplePair> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return parse_dataset(in);
}

void save_dataset(const std::string& path, const std::vector<ExamplePair>& pairs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const ExamplePair& p : pairs) {
    json j;
    j["premise"] = p.premise;
    j["hypothesis"] = p.hypothesis;
    j["label"] = label_str(p.label);
    out << j.dump() << '\n';
  }
}

}  // namespace csqn
