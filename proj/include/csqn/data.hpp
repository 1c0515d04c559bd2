#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace csqn {

enum class Label { neutral = 0, entails = 1 };

const char* label_str(Label l);
Label parse_label(const std::string& s);  // throws std::domain_error

struct ExamplePair {
  std::string premise;
  std::string hypothesis;
  Label label = Label::neutral;
};

/// Lowercases, splits on whitespace, strips leading/trailing ASCII
/// punctuation from each token, and drops empties.  Internal punctuation
/// (e.g. hyphens) is kept.
std::vector<std::string> tokenize(const std::string& text,
                                  bool strip_punctuation = true);

/// Line-delimited JSON records with string fields "premise", "hypothesis",
/// "label" (entails | neutral).  Blank lines are ignored.  Malformed records,
/// unknown labels, and empty texts raise ParseError naming the line.
std::vector<ExamplePair> load_dataset(const std::string& path);
std::vector<ExamplePair> parse_dataset(std::istream& in);

void save_dataset(const std::string& path, const std::vector<ExamplePair>& pairs);

}  // namespace csqn
