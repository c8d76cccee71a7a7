#pragma once

// Deterministic multi-domain slot-filling task families.
//
// Every slot owns global value prototypes (keyed by slot name and family
// seed), so a shared slot looks the same in every domain. Each domain adds one
// fixed random offset to all of its features plus Gaussian noise whose
// standard deviation is the domain's difficulty.
//
// Categorical payload: prototype[value] + offset + noise.
// Extractive payload: `sequence_length` positions. Position 0 carries the
// no-answer marker; the gold value's prototype sits on the gold span with
// begin/end markers on its first/last position; a second slot's value may
// appear elsewhere as a distractor; remaining positions are filler.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dreptile/diffcore.hpp"
#include "dreptile/models.hpp"

namespace dreptile {

struct FamilySpec {
  std::size_t n_train_domains = 4;
  std::size_t shared_pool_size = 6;
  std::size_t slots_per_domain = 4;
  std::size_t unique_slots_per_domain = 1;
  double categorical_fraction = 0.5;
  std::size_t values_per_categorical_slot = 9;  // list length, "None" included
  std::size_t values_per_extractive_slot = 16;
  std::size_t sequence_length = 8;
  std::size_t feature_dim = 16;
  std::size_t dialogues_per_domain = 20;
  std::size_t turns_per_dialogue = 4;
  /// Noise scale per train domain, reused cyclically when there are more
  /// domains than entries; empty means 0.5 everywhere.
  std::vector<double> difficulty{0.1, 0.3, 1.0, 3.0};
  double target_difficulty = 0.25;
  double target_shared_fraction = 0.75;
  std::size_t target_dialogues = 100;
  /// Per-train-domain dialogue counts; empty means dialogues_per_domain.
  std::vector<std::size_t> domain_dialogues;
  /// Every related train domain carries at least this fraction of its slots
  /// from the target's shared set.
  double min_target_overlap = 0.3;
  /// Extra train domains made only of private slots.
  std::size_t n_unrelated_domains = 0;
  double offset_scale = 1.0;
  double prototype_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Throws ConfigError naming the first violated constraint.
void validate(const FamilySpec& spec);

struct SlotPayload {
  SlotId slot;
  FeatureData data;
  std::size_t length = 1;  // 1 for categorical, sequence_length for extractive
};

struct GoldValue {
  std::string value{kNoneValue};
  std::size_t value_index = 0;  // categorical index (0 = None)
  std::size_t start = 0;        // extractive span; (0, 0) = None
  std::size_t end = 0;

  bool active() const { return value != kNoneValue; }
};

struct SynthTurn {
  std::vector<SlotPayload> payloads;  // one per domain slot, in domain slot order
  std::vector<GoldValue> gold;        // parallel to payloads
};

struct Dialogue {
  std::size_t id = 0;
  std::vector<SynthTurn> turns;
};

struct DomainDataset {
  std::string name;
  std::vector<SlotId> slots;
  std::vector<Dialogue> dialogues;

  std::size_t turn_count() const;
  /// Distinct slots with a non-None gold value somewhere in the dialogue.
  std::size_t active_slot_count(std::size_t dialogue) const;
};

struct TaskFamily {
  FamilySpec spec;
  std::shared_ptr<const SlotRegistry> registry;
  std::vector<DomainDataset> train;
  DomainDataset target;
};

TaskFamily generate_family(const FamilySpec& spec);

/// String the metrics compare for a gold entry of the given kind.
std::string gold_string(const GoldValue& gold, SlotKind kind);

/// Indices of the n dialogues with the most distinct active slots, ties
/// toward the lowest index, in rank order.
std::vector<std::size_t> select_finetune_dialogues(const DomainDataset& dataset, std::size_t n);

/// Copy of `dataset` restricted to the given dialogues (in the given order).
DomainDataset subset(const DomainDataset& dataset, std::span<const std::size_t> dialogues);

struct HoldoutSplit {
  DomainDataset pool;  // candidates for fine-tuning
  DomainDataset eval;  // held-out evaluation turns
};

/// Holds out ceil(fraction · dialogues) dialogues chosen by a seeded shuffle.
HoldoutSplit split_holdout(const DomainDataset& dataset, double fraction, std::uint64_t seed);

/// Turn-indexed source of model examples. Turn i expands into one example
/// per slot of the source's kind.
class ExampleSource {
 public:
  virtual ~ExampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual void append_examples(std::size_t index, Batch& out) const = 0;
};

class DomainExamples final : public ExampleSource {
 public:
  DomainExamples(std::shared_ptr<const DomainDataset> dataset, SlotKind kind,
                 const SlotRegistry& registry);

  std::size_t size() const override { return turns_.size(); }
  void append_examples(std::size_t index, Batch& out) const override;

  /// True when the domain owns at least one slot of this kind.
  bool has_examples() const { return !positions_.empty(); }

 private:
  std::shared_ptr<const DomainDataset> dataset_;
  SlotKind kind_;
  std::vector<std::pair<std::size_t, std::size_t>> turns_;  // (dialogue, turn)
  std::vector<std::size_t> positions_;                      // payload indices of this kind
};

/// `count` payload-free single-example batches; backs the analytic models.
class UnitExamples final : public ExampleSource {
 public:
  std::size_t size() const override { return 1; }
  void append_examples(std::size_t, Batch& out) const override { out.examples.emplace_back(UnitExample{}); }
};

/// Shuffles item indices with a stream seeded by `stream_seed`, partitions
/// them into batches of `batch_size` (the last batch of a pass may be short)
/// and reshuffles for each further pass until `count` batches exist.
/// batch_size 0 means one full batch per pass.
std::vector<Batch> batches_from(const ExampleSource& source, std::size_t batch_size,
                                std::uint64_t stream_seed, std::size_t count);

/// Line-delimited dump: one turn per line,
///   domain \t dialogue \t turn \t payloads \t gold
/// payloads: slot|length|v,v,...  joined by ';'
/// gold:     slot=value@start-end joined by ';'
void write_dataset(std::ostream& out, const DomainDataset& dataset, const SlotRegistry& registry);
std::vector<DomainDataset> read_dataset(std::istream& in, const SlotRegistry& registry);

}  // namespace dreptile
