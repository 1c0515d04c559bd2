#pragma once

#include <string>

#include "csqn/models.hpp"
#include "csqn/train.hpp"

namespace csqn {

/// Everything a command needs: file locations, model dimensions, training
/// hyperparameters, tokenizer settings.  Serialized as JSON; the canonical
/// dump is echoed into checkpoints and round-trips to an equal RunConfig.
struct RunConfig {
  struct Paths {
    std::string train, dev, test;
    std::string kg;
    std::string word_emb, concept_emb;
    std::string checkpoint;
    std::string history;  // empty: derived from checkpoint
    friend bool operator==(const Paths&, const Paths&) = default;
  };

  Paths paths;
  ModelDims model;
  TrainConfig train;
  bool strip_punctuation = true;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  std::string history_path() const;

  static RunConfig from_json(const std::string& text);
  std::string to_json() const;  // canonical (sorted keys)

  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace csqn
