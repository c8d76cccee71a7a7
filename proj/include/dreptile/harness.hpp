#pragma once

// Experiment orchestration: per seed, generate a family, pre-train each
// method once, then fine-tune on 0..N selected target dialogues and evaluate
// on held-out target turns.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dreptile/metalearn.hpp"
#include "dreptile/metrics.hpp"
#include "dreptile/models.hpp"
#include "dreptile/synthdst.hpp"

namespace dreptile {

enum class Method { DReptile, Nft, None };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct NftSettings {
  bool equalize_budget = true;  // max_steps = iterations · m · k of the meta config
  std::size_t epochs = 10;      // used when equalize_budget is false
  std::size_t batch_size = 8;
  InnerOptimizer optimizer = InnerOptimizer::Adam;
  double lr = 0.1;
};

/// Meta-training preset used by experiments: Adam inner loop at 0.1 and a
/// 100-iteration budget. MetaConfig's own defaults stay at plain SGD.
inline MetaConfig experiment_meta_defaults() {
  MetaConfig m;
  m.inner_optimizer = InnerOptimizer::Adam;
  m.alpha = 0.1;
  m.iterations = 100;
  return m;
}

struct ExperimentConfig {
  FamilySpec family;
  MetaConfig meta = experiment_meta_defaults();
  NftSettings nft;
  std::vector<std::size_t> finetune_sizes{0, 1, 2, 4, 8, 16, 32};
  std::vector<Method> methods{Method::DReptile, Method::Nft, Method::None};
  std::vector<std::uint64_t> seeds{1};
  std::size_t finetune_steps = 5;
  InnerOptimizer finetune_optimizer = InnerOptimizer::Adam;
  double finetune_lr = 0.1;
  std::size_t finetune_batch_size = 8;
  std::size_t finetune_repeats = 3;
  double holdout_fraction = 0.2;
  double init_scale = 0.0;
  bool parallel = true;
  bool record_wall_time = false;
  /// Appended to method names in the CSV ("DREPTILE-k5").
  std::string label_suffix;
  std::string output_path;
};

void validate(const ExperimentConfig& cfg);

struct RunRecord {
  std::string method;
  std::size_t finetune_size = 0;
  std::uint64_t seed = 0;
  std::optional<double> jga;           // categorical-slot JGA (extractive when no categorical slots)
  std::optional<double> combined_jga;  // all target slots, both models conjoined
  std::optional<double> shared_active_acc;
  std::optional<double> unique_active_acc;
  std::size_t inner_steps_total = 0;   // pre-training gradient steps per model
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
};

/// Pre-trained initializations for both slot models of one family.
struct Initialization {
  ParamVector categorical;
  ParamVector extractive;
  std::size_t gradient_steps = 0;
};

/// Everything derived from one seed: the family, its models and train tasks,
/// and the target split.
struct SeedContext {
  std::uint64_t seed = 0;
  TaskFamily family;
  std::shared_ptr<const CategoricalSlotModel> cat_model;
  std::shared_ptr<const ExtractiveSlotModel> ext_model;
  std::vector<Task> cat_tasks;
  std::vector<Task> ext_tasks;
  DomainDataset finetune_pool;
  DomainDataset eval;
  std::map<std::string, SlotClass> partition;  // target slots
};

SeedContext prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed);

Initialization pretrain(const ExperimentConfig& cfg, const SeedContext& ctx, Method method);

/// Fine-tunes both models on `dialogues` of the fine-tune pool.
Initialization finetune(const ExperimentConfig& cfg, const SeedContext& ctx, const Initialization& init,
                        std::size_t n_dialogues, std::size_t repeat);

struct TargetEvaluation {
  std::vector<TurnEval> categorical;
  std::vector<TurnEval> extractive;
  std::vector<TurnEval> merged;
};

TargetEvaluation evaluate_target(const SeedContext& ctx, const Initialization& params);

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

/// D-REPTILE only, once per k; method names carry "-k<k>".
std::vector<RunRecord> sweep_k(ExperimentConfig cfg, const std::vector<std::size_t>& ks);

/// D-REPTILE with size-proportional vs uniform p_D; methods "DREPTILE-proportional"
/// and "DREPTILE-uniform".
std::vector<RunRecord> sweep_sampling(ExperimentConfig cfg);

struct AggregateRow {
  std::string method;
  std::size_t finetune_size = 0;
  double mean_jga = 0.0;
  double std_jga = 0.0;
  double mean_combined_jga = 0.0;
  double std_combined_jga = 0.0;
  std::size_t n = 0;
};

/// Mean and population standard deviation per (method, size); failed rows
/// and undefined values are skipped.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records);

inline constexpr const char* kCsvHeader =
    "method,finetune_size,seed,jga,combined_jga,shared_active_acc,unique_active_acc,inner_steps_total,wall_ms";

void write_csv(std::ostream& out, const std::vector<RunRecord>& records);
void emit_csv(const std::vector<RunRecord>& records, const std::string& path);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void emit_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path);
std::vector<RunRecord> read_csv(std::istream& in);

/// Mean of a record field over the rows matching method and size.
double mean_of(const std::vector<RunRecord>& records, const std::string& method, std::size_t size,
               std::optional<double> RunRecord::*field);

}  // namespace dreptile
