#include "csqn/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csqn/errors.hpp"

namespace csqn {

using nlohmann::json;

std::string RunConfig::history_path() const {
  if (!paths.history.empty()) return paths.history;
  return paths.checkpoint + ".history.tsv";
}

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  const json paths = j.value("paths", json::object());
  c.paths.train = paths.value("train", "");
  c.paths.dev = paths.value("dev", "");
  c.paths.test = paths.value("test", "");
  c.paths.kg = paths.value("kg", "");
  c.paths.word_emb = paths.value("word_emb", "");
  c.paths.concept_emb = paths.value("concept_emb", "");
  c.paths.checkpoint = paths.value("checkpoint", "");
  c.paths.history = paths.value("history", "");

  const json model = j.value("model", json::object());
  c.model.word_dim = model.value("word_dim", c.model.word_dim);
  c.model.concept_dim = model.value("concept_dim", c.model.concept_dim);
  c.model.hidden = model.value("hidden", c.model.hidden);
  c.model.proj_dim = model.value("proj_dim", c.model.proj_dim);

  const json train = j.value("train", json::object());
  c.train.learning_rate = train.value("learning_rate", c.train.learning_rate);
  c.train.batch_size = train.value("batch_size", c.train.batch_size);
  c.train.epochs = train.value("epochs", c.train.epochs);
  c.train.seed = train.value("seed", c.train.seed);
  c.train.adagrad_epsilon = train.value("adagrad_epsilon", c.train.adagrad_epsilon);
  c.train.stop_at_dev_accuracy =
      train.value("stop_at_dev_accuracy", c.train.stop_at_dev_accuracy);
  c.train.graph_strategy = parse_graph_strategy(
      train.value("graph_strategy", std::string("concepts_only")));
  c.train.graph_model =
      parse_graph_model(train.value("graph_model", std::string("gmatch")));

  const json tok = j.value("tokenizer", json::object());
  c.strip_punctuation = tok.value("strip_punctuation", true);

  c.train.validate();
  if (c.model.word_dim <= 0 || c.model.concept_dim <= 0 || c.model.hidden <= 0 ||
      c.model.proj_dim <= 0)
    throw std::domain_error("config: model dimensions must be positive");
  return c;
}

std::string RunConfig::to_json() const {
  json j;
  j["paths"] = {{"train", paths.train},
                {"dev", paths.dev},
                {"test", paths.test},
                {"kg", paths.kg},
                {"word_emb", paths.word_emb},
                {"concept_emb", paths.concept_emb},
                {"checkpoint", paths.checkpoint},
                {"history", paths.history}};
  j["model"] = {{"word_dim", model.word_dim},
                {"concept_dim", model.concept_dim},
                {"hidden", model.hidden},
                {"proj_dim", model.proj_dim}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"epochs", train.epochs},
                {"seed", train.seed},
                {"adagrad_epsilon", train.adagrad_epsilon},
                {"stop_at_dev_accuracy", train.stop_at_dev_accuracy},
                {"graph_strategy", graph_strategy_str(train.graph_strategy)},
                {"graph_model", graph_model_str(train.graph_model)}};
  j["tokenizer"] = {{"strip_punctuation", strip_punctuation}};
  return j.dump(2) + "\n";
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << to_json();
}

}  // namespace csqn
