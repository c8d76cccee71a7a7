#include "dreptile/metrics.hpp"

#include <algorithm>

#include "dreptile/errors.hpp"
#include "dreptile/models.hpp"

namespace dreptile {

bool SlotOutcome::gold_active() const { return gold != kNoneValue; }

bool TurnEval::all_correct() const {
  return std::all_of(slots.begin(), slots.end(), [](const SlotOutcome& s) { return s.correct(); });
}

double joint_goal_accuracy(std::span<const TurnEval> turns) {
  if (turns.empty()) throw EvalError("joint_goal_accuracy: no turns");
  const auto correct = std::count_if(turns.begin(), turns.end(), [](const TurnEval& t) { return t.all_correct(); });
  return static_cast<double>(correct) / static_cast<double>(turns.size());
}

std::optional<double> active_slot_accuracy(std::span<const TurnEval> turns, const std::string& slot) {
  std::size_t seen = 0, active = 0, correct = 0;
  for (const auto& t : turns) {
    for (const auto& s : t.slots) {
      if (s.slot != slot) continue;
      ++seen;
      if (!s.gold_active()) continue;
      ++active;
      if (s.correct()) ++correct;
    }
  }
  if (seen == 0) throw EvalError("active_slot_accuracy: unknown slot " + slot);
  if (active == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(active);
}

SlotwiseReport slotwise_report(std::span<const TurnEval> turns,
                               const std::map<std::string, SlotClass>& partition) {
  SlotwiseReport report;
  report.partition = partition;
  double shared_sum = 0.0, unique_sum = 0.0;
  std::size_t shared_n = 0, unique_n = 0;
  for (const auto& [slot, cls] : partition) {
    const auto acc = active_slot_accuracy(turns, slot);
    report.per_slot[slot] = acc;
    if (!acc) continue;
    if (cls == SlotClass::Shared) {
      shared_sum += *acc;
      ++shared_n;
    } else {
      unique_sum += *acc;
      ++unique_n;
    }
  }
  if (shared_n) report.shared_mean = shared_sum / static_cast<double>(shared_n);
  if (unique_n) report.unique_mean = unique_sum / static_cast<double>(unique_n);
  return report;
}

std::vector<TurnEval> merge_turns(std::span<const TurnEval> a, std::span<const TurnEval> b) {
  if (a.size() != b.size()) throw EvalError("merge_turns: turn counts differ");
  std::vector<TurnEval> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].key != b[i].key) throw EvalError("merge_turns: misaligned turn keys " + a[i].key + " vs " + b[i].key);
    TurnEval t = a[i];
    t.slots.insert(t.slots.end(), b[i].slots.begin(), b[i].slots.end());
    out.push_back(std::move(t));
  }
  return out;
}

double combined_jga(std::span<const TurnEval> cat_turns, std::span<const TurnEval> ext_turns) {
  const auto merged = merge_turns(cat_turns, ext_turns);
  return joint_goal_accuracy(merged);
}

EvalResult evaluate_turns(std::span<const TurnEval> turns) {
  EvalResult r;
  r.turns = turns.size();
  if (!turns.empty()) r.jga = joint_goal_accuracy(turns);
  std::map<std::string, std::size_t> active;
  for (const auto& t : turns) {
    for (const auto& s : t.slots) active[s.slot] += s.gold_active() ? 1 : 0;
  }
  for (const auto& [slot, n] : active) {
    r.active_counts[slot] = n;
    r.active_accuracy[slot] = active_slot_accuracy(turns, slot);
  }
  return r;
}

}  // namespace dreptile
