#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dreptile {

struct SlotOutcome {
  std::string slot;
  std::string predicted;
  std::string gold;

  bool correct() const { return predicted == gold; }
  bool gold_active() const;
};

/// Predictions for every slot of the evaluation set on one turn.
struct TurnEval {
  std::string key;  // "<dialogue>/<turn>", used to align models
  std::vector<SlotOutcome> slots;

  bool all_correct() const;
};

/// Fraction of turns whose every slot matches exactly. Throws EvalError on
/// empty input.
double joint_goal_accuracy(std::span<const TurnEval> turns);

/// Accuracy restricted to turns with a non-None gold value; nullopt when the
/// slot is never active. Throws EvalError for a slot absent from the turns.
std::optional<double> active_slot_accuracy(std::span<const TurnEval> turns, const std::string& slot);

enum class SlotClass { Shared, Unique };

struct SlotwiseReport {
  std::map<std::string, std::optional<double>> per_slot;
  std::map<std::string, SlotClass> partition;
  std::optional<double> shared_mean;  // mean over defined shared-slot accuracies
  std::optional<double> unique_mean;
};

SlotwiseReport slotwise_report(std::span<const TurnEval> turns,
                               const std::map<std::string, SlotClass>& partition);

/// A turn counts iff all of its categorical and all of its extractive slots
/// are right. The two sequences must carry the same keys in the same order.
double combined_jga(std::span<const TurnEval> cat_turns, std::span<const TurnEval> ext_turns);

/// Per-turn conjunction of two aligned evaluations.
std::vector<TurnEval> merge_turns(std::span<const TurnEval> a, std::span<const TurnEval> b);

struct EvalResult {
  std::optional<double> jga;
  std::map<std::string, std::optional<double>> active_accuracy;
  std::size_t turns = 0;
  std::map<std::string, std::size_t> active_counts;
  std::uint64_t seed = 0;
  std::string method;
  std::size_t finetune_size = 0;
};

EvalResult evaluate_turns(std::span<const TurnEval> turns);

}  // namespace dreptile
