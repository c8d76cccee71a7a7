#include "dreptile/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dreptile/errors.hpp"

namespace dreptile {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

InnerOptimizer parse_optimizer(const std::string& s) {
  if (s == "sgd") return InnerOptimizer::Sgd;
  if (s == "adam") return InnerOptimizer::Adam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd|adam)");
}

std::string optimizer_name(InnerOptimizer o) { return o == InnerOptimizer::Sgd ? "sgd" : "adam"; }

void read_family(const json& j, FamilySpec& f) {
  reject_unknown(j, {"n_train_domains", "shared_pool_size", "slots_per_domain", "unique_slots_per_domain",
                     "categorical_fraction", "values_per_categorical_slot", "values_per_extractive_slot",
                     "sequence_length", "feature_dim", "dialogues_per_domain", "turns_per_dialogue",
                     "difficulty", "target_difficulty", "target_shared_fraction", "target_dialogues",
                     "domain_dialogues", "min_target_overlap", "n_unrelated_domains", "offset_scale",
                     "prototype_scale"},
                 "family");
  read(j, "n_train_domains", f.n_train_domains);
  read(j, "shared_pool_size", f.shared_pool_size);
  read(j, "slots_per_domain", f.slots_per_domain);
  read(j, "unique_slots_per_domain", f.unique_slots_per_domain);
  read(j, "categorical_fraction", f.categorical_fraction);
  read(j, "values_per_categorical_slot", f.values_per_categorical_slot);
  read(j, "values_per_extractive_slot", f.values_per_extractive_slot);
  read(j, "sequence_length", f.sequence_length);
  read(j, "feature_dim", f.feature_dim);
  read(j, "dialogues_per_domain", f.dialogues_per_domain);
  read(j, "turns_per_dialogue", f.turns_per_dialogue);
  read(j, "difficulty", f.difficulty);
  read(j, "target_difficulty", f.target_difficulty);
  read(j, "target_shared_fraction", f.target_shared_fraction);
  read(j, "target_dialogues", f.target_dialogues);
  read(j, "domain_dialogues", f.domain_dialogues);
  read(j, "min_target_overlap", f.min_target_overlap);
  read(j, "n_unrelated_domains", f.n_unrelated_domains);
  read(j, "offset_scale", f.offset_scale);
  read(j, "prototype_scale", f.prototype_scale);
}

void read_meta(const json& j, MetaConfig& m) {
  reject_unknown(j, {"alpha", "beta", "k", "m", "iterations", "inner_optimizer", "outer_update",
                     "inner_batch_size", "sampling", "p_override", "adam_beta1", "adam_beta2", "adam_eps",
                     "parallel"},
                 "meta");
  read(j, "alpha", m.alpha);
  read(j, "beta", m.beta);
  read(j, "k", m.k);
  read(j, "m", m.m);
  read(j, "iterations", m.iterations);
  if (j.contains("inner_optimizer")) m.inner_optimizer = parse_optimizer(j.at("inner_optimizer"));
  if (j.contains("outer_update")) {
    const std::string s = j.at("outer_update");
    if (s == "interpolate") m.outer_update = OuterUpdate::Interpolate;
    else if (s == "adam") m.outer_update = OuterUpdate::AdamPseudoGrad;
    else throw ConfigError("meta.outer_update must be interpolate|adam");
  }
  read(j, "inner_batch_size", m.inner_batch_size);
  if (j.contains("sampling")) {
    const std::string s = j.at("sampling");
    if (s == "proportional") m.sampling = Sampling::Proportional;
    else if (s == "uniform") m.sampling = Sampling::Uniform;
    else throw ConfigError("meta.sampling must be proportional|uniform");
  }
  read(j, "p_override", m.p_override);
  read(j, "adam_beta1", m.adam.beta1);
  read(j, "adam_beta2", m.adam.beta2);
  read(j, "adam_eps", m.adam.eps);
  if (j.contains("parallel")) m.execution = j.at("parallel").get<bool>() ? Execution::Parallel : Execution::Serial;
}

void read_nft(const json& j, NftSettings& n) {
  reject_unknown(j, {"equalize_budget", "epochs", "batch_size", "optimizer", "lr"}, "nft");
  read(j, "equalize_budget", n.equalize_budget);
  read(j, "epochs", n.epochs);
  read(j, "batch_size", n.batch_size);
  if (j.contains("optimizer")) n.optimizer = parse_optimizer(j.at("optimizer"));
  read(j, "lr", n.lr);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    reject_unknown(j, {"family", "meta", "nft", "finetune_sizes", "methods", "seeds", "finetune_steps",
                       "finetune_optimizer", "finetune_lr", "finetune_batch_size", "finetune_repeats",
                       "holdout_fraction", "init_scale", "parallel", "record_wall_time", "output_path"},
                   "config");
    if (j.contains("family")) read_family(j.at("family"), cfg.family);
    if (j.contains("meta")) read_meta(j.at("meta"), cfg.meta);
    if (j.contains("nft")) read_nft(j.at("nft"), cfg.nft);
    read(j, "finetune_sizes", cfg.finetune_sizes);
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    read(j, "seeds", cfg.seeds);
    read(j, "finetune_steps", cfg.finetune_steps);
    if (j.contains("finetune_optimizer")) cfg.finetune_optimizer = parse_optimizer(j.at("finetune_optimizer"));
    read(j, "finetune_lr", cfg.finetune_lr);
    read(j, "finetune_batch_size", cfg.finetune_batch_size);
    read(j, "finetune_repeats", cfg.finetune_repeats);
    read(j, "holdout_fraction", cfg.holdout_fraction);
    read(j, "init_scale", cfg.init_scale);
    read(j, "parallel", cfg.parallel);
    read(j, "record_wall_time", cfg.record_wall_time);
    read(j, "output_path", cfg.output_path);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
  const auto& f = cfg.family;
  const auto& m = cfg.meta;
  json j;
  j["family"] = {{"n_train_domains", f.n_train_domains},
                 {"shared_pool_size", f.shared_pool_size},
                 {"slots_per_domain", f.slots_per_domain},
                 {"unique_slots_per_domain", f.unique_slots_per_domain},
                 {"categorical_fraction", f.categorical_fraction},
                 {"values_per_categorical_slot", f.values_per_categorical_slot},
                 {"values_per_extractive_slot", f.values_per_extractive_slot},
                 {"sequence_length", f.sequence_length},
                 {"feature_dim", f.feature_dim},
                 {"dialogues_per_domain", f.dialogues_per_domain},
                 {"turns_per_dialogue", f.turns_per_dialogue},
                 {"difficulty", f.difficulty},
                 {"target_difficulty", f.target_difficulty},
                 {"target_shared_fraction", f.target_shared_fraction},
                 {"target_dialogues", f.target_dialogues},
                 {"domain_dialogues", f.domain_dialogues},
                 {"min_target_overlap", f.min_target_overlap},
                 {"n_unrelated_domains", f.n_unrelated_domains},
                 {"offset_scale", f.offset_scale},
                 {"prototype_scale", f.prototype_scale}};
  j["meta"] = {{"alpha", m.alpha},
               {"beta", m.beta},
               {"k", m.k},
               {"m", m.m},
               {"iterations", m.iterations},
               {"inner_optimizer", optimizer_name(m.inner_optimizer)},
               {"outer_update", m.outer_update == OuterUpdate::Interpolate ? "interpolate" : "adam"},
               {"inner_batch_size", m.inner_batch_size},
               {"sampling", m.sampling == Sampling::Proportional ? "proportional" : "uniform"},
               {"p_override", m.p_override},
               {"adam_beta1", m.adam.beta1},
               {"adam_beta2", m.adam.beta2},
               {"adam_eps", m.adam.eps},
               {"parallel", m.execution == Execution::Parallel}};
  j["nft"] = {{"equalize_budget", cfg.nft.equalize_budget},
              {"epochs", cfg.nft.epochs},
              {"batch_size", cfg.nft.batch_size},
              {"optimizer", optimizer_name(cfg.nft.optimizer)},
              {"lr", cfg.nft.lr}};
  j["finetune_sizes"] = cfg.finetune_sizes;
  std::vector<std::string> methods;
  for (auto mm : cfg.methods) methods.push_back(to_string(mm));
  j["methods"] = methods;
  j["seeds"] = cfg.seeds;
  j["finetune_steps"] = cfg.finetune_steps;
  j["finetune_optimizer"] = optimizer_name(cfg.finetune_optimizer);
  j["finetune_lr"] = cfg.finetune_lr;
  j["finetune_batch_size"] = cfg.finetune_batch_size;
  j["finetune_repeats"] = cfg.finetune_repeats;
  j["holdout_fraction"] = cfg.holdout_fraction;
  j["init_scale"] = cfg.init_scale;
  j["parallel"] = cfg.parallel;
  j["record_wall_time"] = cfg.record_wall_time;
  j["output_path"] = cfg.output_path;
  return j.dump(2) + "\n";
}

}  // namespace dreptile
