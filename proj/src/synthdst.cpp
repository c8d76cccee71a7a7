#include "dreptile/synthdst.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "dreptile/errors.hpp"
#include "dreptile/rng.hpp"

namespace dreptile {
namespace {

// Spreads round(n·f) "true" flags evenly over indices, starting at index 0.
bool spread_flag(std::size_t i, double f) {
  return std::ceil(static_cast<double>(i + 1) * f) - std::ceil(static_cast<double>(i) * f) >= 1.0;
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double sd) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = sd * dist(rng);
  return v;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

struct SlotPrototypes {
  std::vector<std::vector<double>> values;  // categorical: per value incl. None; extractive: per vocab value
};

struct Markers {
  std::vector<double> none, begin, end;
};

struct DomainPlan {
  std::string name;
  std::vector<std::string> slot_names;
  double difficulty = 0.5;
  std::size_t dialogues = 0;
  std::uint64_t seed = 0;
};

class Generator {
 public:
  Generator(const FamilySpec& spec, std::shared_ptr<const SlotRegistry> registry)
      : spec_(spec), registry_(std::move(registry)) {
    const std::size_t D = spec_.feature_dim;
    const double ps = spec_.prototype_scale;
    Rng marker_rng(mix_seed(spec_.seed, "markers"));
    markers_.none = gaussian_vector(marker_rng, D, ps);
    markers_.begin = gaussian_vector(marker_rng, D, ps);
    markers_.end = gaussian_vector(marker_rng, D, ps);

    for (const auto& s : registry_->slots()) {
      Rng rng(mix_seed(mix_seed(spec_.seed, "prototypes"), fnv1a(s.name)));
      SlotPrototypes p;
      if (s.kind == SlotKind::Categorical) {
        for (std::size_t v = 0; v < s.values.size(); ++v) p.values.push_back(gaussian_vector(rng, D, ps));
      } else {
        const auto signature = gaussian_vector(rng, D, ps);
        for (std::size_t v = 0; v < s.values.size(); ++v) {
          auto own = gaussian_vector(rng, D, 0.5 * ps);
          for (std::size_t j = 0; j < D; ++j) own[j] += signature[j];
          p.values.push_back(std::move(own));
        }
      }
      prototypes_.push_back(std::move(p));
    }
  }

  DomainDataset generate(const DomainPlan& plan) const {
    const std::size_t D = spec_.feature_dim;
    Rng rng(plan.seed);
    const auto offset = gaussian_vector(rng, D, spec_.offset_scale);

    DomainDataset out;
    out.name = plan.name;
    std::vector<SlotId> local_extractive;
    for (const auto& n : plan.slot_names) {
      out.slots.push_back(registry_->id_of(n));
      if (registry_->at(out.slots.back()).kind == SlotKind::Extractive) local_extractive.push_back(out.slots.back());
    }

    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto noisy = [&](std::vector<double> x) {
      for (std::size_t j = 0; j < D; ++j) x[j] += offset[j] + plan.difficulty * noise(rng);
      return x;
    };

    for (std::size_t d = 0; d < plan.dialogues; ++d) {
      Dialogue dialogue;
      dialogue.id = d;
      const std::size_t n_turns = spec_.turns_per_dialogue;
      const std::size_t n_slots = out.slots.size();

      // Gold states first so the at-least-one-active rule can be enforced.
      std::vector<std::vector<GoldValue>> gold(n_turns, std::vector<GoldValue>(n_slots));
      bool any_active = false;
      for (auto& turn : gold) {
        for (std::size_t k = 0; k < n_slots; ++k) {
          if (coin(rng)) {
            turn[k] = sample_active(out.slots[k], rng);
            any_active = true;
          }
        }
      }
      if (!any_active) {
        const std::size_t t = uniform_index(rng, n_turns);
        const std::size_t k = uniform_index(rng, n_slots);
        gold[t][k] = sample_active(out.slots[k], rng);
      }

      for (std::size_t t = 0; t < n_turns; ++t) {
        SynthTurn turn;
        turn.gold = gold[t];
        for (std::size_t k = 0; k < n_slots; ++k) {
          const SlotId slot = out.slots[k];
          const auto& schema = registry_->at(slot);
          SlotPayload payload{slot, nullptr, 1};
          if (schema.kind == SlotKind::Categorical) {
            payload.data = std::make_shared<const std::vector<double>>(
                noisy(prototypes_[slot.value].values[gold[t][k].value_index]));
          } else {
            payload.length = spec_.sequence_length;
            payload.data = std::make_shared<const std::vector<double>>(
                span_payload(slot, gold[t][k], local_extractive, rng, noisy));
          }
          turn.payloads.push_back(std::move(payload));
        }
        dialogue.turns.push_back(std::move(turn));
      }
      out.dialogues.push_back(std::move(dialogue));
    }
    return out;
  }

 private:
  GoldValue sample_active(SlotId slot, Rng& rng) const {
    const auto& schema = registry_->at(slot);
    GoldValue g;
    if (schema.kind == SlotKind::Categorical) {
      g.value_index = 1 + uniform_index(rng, schema.values.size() - 1);
      g.value = schema.values[g.value_index];
    } else {
      g.value_index = uniform_index(rng, schema.values.size());
      g.value = schema.values[g.value_index];
      const std::size_t T = spec_.sequence_length;
      const std::size_t len = (T >= 3 && uniform_index(rng, 2) == 1) ? 2 : 1;
      g.start = 1 + uniform_index(rng, T - len);
      g.end = g.start + len - 1;
    }
    return g;
  }

  template <class Noisy>
  std::vector<double> span_payload(SlotId slot, const GoldValue& gold, const std::vector<SlotId>& local,
                                   Rng& rng, const Noisy& noisy) const {
    const std::size_t D = spec_.feature_dim;
    const std::size_t T = spec_.sequence_length;
    std::vector<std::vector<double>> content(T);
    content[0] = markers_.none;
    std::vector<bool> used(T, false);
    used[0] = true;

    auto place = [&](const std::vector<double>& proto, std::size_t s, std::size_t e) {
      for (std::size_t t = s; t <= e; ++t) {
        content[t] = proto;
        used[t] = true;
      }
      for (std::size_t j = 0; j < D; ++j) {
        content[s][j] += markers_.begin[j];
        content[e][j] += markers_.end[j];
      }
    };

    if (gold.active()) place(prototypes_[slot.value].values[gold.value_index], gold.start, gold.end);

    // Distractor: a value of another extractive slot of the same domain.
    if (local.size() > 1 && uniform_index(rng, 2) == 1) {
      std::vector<std::size_t> free;
      for (std::size_t t = 1; t < T; ++t) {
        if (!used[t]) free.push_back(t);
      }
      if (!free.empty()) {
        SlotId other = local[uniform_index(rng, local.size() - 1)];
        if (other == slot) other = local.back();
        const auto& vals = prototypes_[other.value].values;
        const std::size_t pos = free[uniform_index(rng, free.size())];
        place(vals[uniform_index(rng, vals.size())], pos, pos);
      }
    }

    std::vector<double> flat;
    flat.reserve(T * D);
    for (std::size_t t = 0; t < T; ++t) {
      if (content[t].empty()) content[t] = gaussian_vector(rng, D, 0.5 * spec_.prototype_scale);
      const auto x = noisy(content[t]);
      flat.insert(flat.end(), x.begin(), x.end());
    }
    return flat;
  }

  const FamilySpec& spec_;
  std::shared_ptr<const SlotRegistry> registry_;
  Markers markers_;
  std::vector<SlotPrototypes> prototypes_;
};

std::vector<std::string> value_list(SlotKind kind, std::size_t n) {
  std::vector<std::string> out;
  if (kind == SlotKind::Categorical) {
    out.emplace_back(kNoneValue);
    for (std::size_t v = 1; v < n; ++v) out.push_back("v" + std::to_string(v));
  } else {
    for (std::size_t v = 0; v < n; ++v) out.push_back("x" + std::to_string(v));
  }
  return out;
}

std::size_t target_shared_count(const FamilySpec& spec) {
  const auto n = static_cast<std::size_t>(
      std::llround(spec.target_shared_fraction * static_cast<double>(spec.slots_per_domain)));
  return std::min({n, spec.slots_per_domain, spec.shared_pool_size});
}

}  // namespace

void validate(const FamilySpec& spec) {
  auto fail = [](const std::string& what) { throw ConfigError("FamilySpec: " + what); };
  if (spec.n_train_domains < 1) fail("n_train_domains must be >= 1");
  if (spec.slots_per_domain < 1) fail("slots_per_domain must be >= 1");
  if (spec.unique_slots_per_domain > spec.slots_per_domain) {
    fail("unique_slots_per_domain exceeds slots_per_domain");
  }
  if (spec.slots_per_domain - spec.unique_slots_per_domain > spec.shared_pool_size) {
    fail("shared_pool_size too small for the shared slots each domain needs");
  }
  if (!(spec.categorical_fraction >= 0 && spec.categorical_fraction <= 1)) {
    fail("categorical_fraction must lie in [0,1]");
  }
  if (spec.values_per_categorical_slot < 2) fail("values_per_categorical_slot must be >= 2");
  if (spec.values_per_extractive_slot < 1) fail("values_per_extractive_slot must be >= 1");
  if (spec.sequence_length < 2) fail("sequence_length must be >= 2");
  if (spec.feature_dim < 2) fail("feature_dim must be >= 2");
  if (spec.dialogues_per_domain < 1) fail("dialogues_per_domain must be >= 1");
  if (spec.turns_per_dialogue < 1) fail("turns_per_dialogue must be >= 1");
  if (spec.target_dialogues < 1) fail("target_dialogues must be >= 1");
  for (double d : spec.difficulty) {
    if (!(d > 0)) fail("difficulty entries must be > 0");
  }
  if (!(spec.target_difficulty > 0)) fail("target_difficulty must be > 0");
  if (!spec.domain_dialogues.empty() && spec.domain_dialogues.size() != spec.n_train_domains) {
    fail("domain_dialogues needs one entry per train domain");
  }
  for (auto n : spec.domain_dialogues) {
    if (n < 1) fail("domain_dialogues entries must be >= 1");
  }
  if (!(spec.target_shared_fraction >= 0 && spec.target_shared_fraction <= 1)) {
    fail("target_shared_fraction must lie in [0,1]");
  }
  if (!(spec.min_target_overlap >= 0 && spec.min_target_overlap <= 1)) {
    fail("min_target_overlap must lie in [0,1]");
  }
  if (!(spec.offset_scale >= 0) || !(spec.prototype_scale > 0)) fail("bad offset/prototype scale");
}

TaskFamily generate_family(const FamilySpec& spec) {
  validate(spec);
  Rng layout(mix_seed(spec.seed, "layout"));

  const std::size_t spd = spec.slots_per_domain;
  const std::size_t n_pool_per_domain = spd - spec.unique_slots_per_domain;

  std::vector<std::string> pool(spec.shared_pool_size);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = "shared" + std::to_string(i);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), layout);

  const std::size_t n_target_shared = target_shared_count(spec);
  const std::vector<std::size_t> target_shared(order.begin(), order.begin() + n_target_shared);

  std::vector<DomainPlan> plans;
  const std::size_t wanted_overlap = static_cast<std::size_t>(
      std::ceil(spec.min_target_overlap * static_cast<double>(spd)));
  const std::size_t overlap = std::min({wanted_overlap, n_target_shared, n_pool_per_domain});

  for (std::size_t i = 0; i < spec.n_train_domains; ++i) {
    DomainPlan plan;
    plan.name = "d" + std::to_string(i);
    std::set<std::size_t> chosen;
    // Round-robin over the target's shared slots so every one is owned by a train domain.
    for (std::size_t r = 0; r < overlap; ++r) chosen.insert(target_shared[(i * overlap + r) % n_target_shared]);
    std::vector<std::size_t> rest;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      if (!chosen.contains(p)) rest.push_back(p);
    }
    std::shuffle(rest.begin(), rest.end(), layout);
    for (std::size_t r = 0; chosen.size() < n_pool_per_domain; ++r) chosen.insert(rest[r]);
    for (auto p : chosen) plan.slot_names.push_back(pool[p]);
    for (std::size_t u = 0; u < spec.unique_slots_per_domain; ++u) {
      plan.slot_names.push_back(plan.name + ".own" + std::to_string(u));
    }
    plan.difficulty = spec.difficulty.empty() ? 0.5 : spec.difficulty[i % spec.difficulty.size()];
    plan.dialogues = spec.domain_dialogues.empty() ? spec.dialogues_per_domain : spec.domain_dialogues[i];
    plan.seed = mix_seed(spec.seed, i);
    plans.push_back(std::move(plan));
  }
  for (std::size_t i = 0; i < spec.n_unrelated_domains; ++i) {
    DomainPlan plan;
    plan.name = "u" + std::to_string(i);
    for (std::size_t u = 0; u < spd; ++u) plan.slot_names.push_back(plan.name + ".own" + std::to_string(u));
    plan.difficulty = spec.difficulty.empty() ? 0.5 : spec.difficulty[i % spec.difficulty.size()];
    plan.dialogues = spec.dialogues_per_domain;
    plan.seed = mix_seed(spec.seed, spec.n_train_domains + i);
    plans.push_back(std::move(plan));
  }

  DomainPlan target;
  target.name = "target";
  // A target-shared slot counts only if some train domain owns it.
  std::set<std::string> owned_by_train;
  for (const auto& p : plans) owned_by_train.insert(p.slot_names.begin(), p.slot_names.end());
  for (auto p : target_shared) {
    if (owned_by_train.contains(pool[p])) target.slot_names.push_back(pool[p]);
  }
  for (std::size_t u = 0; target.slot_names.size() < spd; ++u) {
    target.slot_names.push_back("target.own" + std::to_string(u));
  }
  target.difficulty = spec.target_difficulty;
  target.dialogues = spec.target_dialogues;
  target.seed = mix_seed(spec.seed, "target");

  // Registry: used pool slots in pool order, then private slots domain by domain.
  std::map<std::string, std::set<std::string>> owners;
  for (const auto* p : {&target}) {
    for (const auto& n : p->slot_names) owners[n].insert(p->name);
  }
  for (const auto& p : plans) {
    for (const auto& n : p.slot_names) owners[n].insert(p.name);
  }
  std::vector<SlotSchema> schemas;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!owners.contains(pool[i])) continue;
    const SlotKind kind = spread_flag(i, spec.categorical_fraction) ? SlotKind::Categorical : SlotKind::Extractive;
    schemas.push_back({pool[i], kind, {}, owners[pool[i]]});
  }
  auto add_private = [&](const DomainPlan& p) {
    std::size_t u = 0;
    for (const auto& n : p.slot_names) {
      if (n.rfind("shared", 0) == 0) continue;
      const SlotKind kind = spread_flag(u++, spec.categorical_fraction) ? SlotKind::Categorical : SlotKind::Extractive;
      schemas.push_back({n, kind, {}, owners[n]});
    }
  };
  for (const auto& p : plans) add_private(p);
  add_private(target);
  for (auto& s : schemas) {
    s.values = value_list(s.kind, s.kind == SlotKind::Categorical ? spec.values_per_categorical_slot
                                                                  : spec.values_per_extractive_slot);
  }

  TaskFamily family;
  family.spec = spec;
  family.registry = std::make_shared<const SlotRegistry>(std::move(schemas));
  Generator gen(family.spec, family.registry);
  for (const auto& p : plans) family.train.push_back(gen.generate(p));
  family.target = gen.generate(target);
  return family;
}

std::size_t DomainDataset::turn_count() const {
  std::size_t n = 0;
  for (const auto& d : dialogues) n += d.turns.size();
  return n;
}

std::size_t DomainDataset::active_slot_count(std::size_t dialogue) const {
  const auto& d = dialogues.at(dialogue);
  std::size_t count = 0;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const bool active = std::any_of(d.turns.begin(), d.turns.end(),
                                    [k](const SynthTurn& t) { return t.gold[k].active(); });
    if (active) ++count;
  }
  return count;
}

std::string gold_string(const GoldValue& gold, SlotKind kind) {
  if (kind == SlotKind::Categorical) return gold.value;
  return gold.active() ? span_value(gold.start, gold.end) : std::string(kNoneValue);
}

std::vector<std::size_t> select_finetune_dialogues(const DomainDataset& dataset, std::size_t n) {
  if (n > dataset.dialogues.size()) {
    throw DataError("select_finetune_dialogues: requested " + std::to_string(n) + " of " +
                    std::to_string(dataset.dialogues.size()) + " dialogues");
  }
  std::vector<std::size_t> idx(dataset.dialogues.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> counts(idx.size());
  for (auto i : idx) counts[i] = dataset.active_slot_count(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  idx.resize(n);
  return idx;
}

DomainDataset subset(const DomainDataset& dataset, std::span<const std::size_t> dialogues) {
  DomainDataset out;
  out.name = dataset.name;
  out.slots = dataset.slots;
  for (auto i : dialogues) out.dialogues.push_back(dataset.dialogues.at(i));
  return out;
}

HoldoutSplit split_holdout(const DomainDataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0 && fraction < 1)) throw ConfigError("holdout fraction must lie in [0,1)");
  const std::size_t n = dataset.dialogues.size();
  const auto n_eval = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> eval(idx.begin(), idx.begin() + n_eval);
  std::vector<std::size_t> pool(idx.begin() + n_eval, idx.end());
  std::sort(eval.begin(), eval.end());
  std::sort(pool.begin(), pool.end());
  return {subset(dataset, pool), subset(dataset, eval)};
}

// ---------------------------------------------------------------- batching

DomainExamples::DomainExamples(std::shared_ptr<const DomainDataset> dataset, SlotKind kind,
                               const SlotRegistry& registry)
    : dataset_(std::move(dataset)), kind_(kind) {
  for (std::size_t k = 0; k < dataset_->slots.size(); ++k) {
    if (registry.at(dataset_->slots[k]).kind == kind_) positions_.push_back(k);
  }
  for (std::size_t d = 0; d < dataset_->dialogues.size(); ++d) {
    for (std::size_t t = 0; t < dataset_->dialogues[d].turns.size(); ++t) turns_.emplace_back(d, t);
  }
}

void DomainExamples::append_examples(std::size_t index, Batch& out) const {
  const auto [d, t] = turns_.at(index);
  const SynthTurn& turn = dataset_->dialogues[d].turns[t];
  for (auto k : positions_) {
    const auto& payload = turn.payloads[k];
    const auto& gold = turn.gold[k];
    if (kind_ == SlotKind::Categorical) {
      out.examples.emplace_back(CategoricalExample{payload.data, payload.slot, gold.value_index});
    } else {
      out.examples.emplace_back(SpanExample{payload.data, payload.length, payload.slot, gold.start, gold.end});
    }
  }
}

std::vector<Batch> batches_from(const ExampleSource& source, std::size_t batch_size,
                                std::uint64_t stream_seed, std::size_t count) {
  const std::size_t n = source.size();
  if (n == 0) throw DataError("batches_from: empty source");
  const std::size_t per_batch = batch_size == 0 ? n : std::min(batch_size, n);

  Rng rng(stream_seed);
  std::vector<std::size_t> idx(n);
  std::vector<Batch> out;
  out.reserve(count);
  while (out.size() < count) {
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t start = 0; start < n && out.size() < count; start += per_batch) {
      Batch b;
      for (std::size_t i = start; i < std::min(n, start + per_batch); ++i) source.append_examples(idx[i], b);
      out.push_back(std::move(b));
    }
  }
  return out;
}

// ---------------------------------------------------------------- text format

void write_dataset(std::ostream& out, const DomainDataset& dataset, const SlotRegistry& registry) {
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t d = 0; d < dataset.dialogues.size(); ++d) {
    const auto& dialogue = dataset.dialogues[d];
    for (std::size_t t = 0; t < dialogue.turns.size(); ++t) {
      const auto& turn = dialogue.turns[t];
      line.str("");
      line << dataset.name << '\t' << dialogue.id << '\t' << t << '\t';
      for (std::size_t k = 0; k < turn.payloads.size(); ++k) {
        const auto& p = turn.payloads[k];
        if (k) line << ';';
        line << registry.at(p.slot).name << '|' << p.length << '|';
        for (std::size_t j = 0; j < p.data->size(); ++j) line << (j ? "," : "") << (*p.data)[j];
      }
      line << '\t';
      for (std::size_t k = 0; k < turn.gold.size(); ++k) {
        const auto& g = turn.gold[k];
        if (k) line << ';';
        line << registry.at(turn.payloads[k].slot).name << '=' << g.value << '@' << g.start << '-' << g.end;
      }
      out << line.str() << '\n';
    }
  }
  if (!out) throw DataError("write_dataset: stream failure");
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::size_t parse_size(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("read_dataset: line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
}

}  // namespace

std::vector<DomainDataset> read_dataset(std::istream& in, const SlotRegistry& registry) {
  std::vector<DomainDataset> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    auto bad = [&](const std::string& what) {
      return DataError("read_dataset: line " + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != 5) throw bad("expected 5 tab-separated fields");
    if (out.empty() || out.back().name != fields[0]) {
      out.emplace_back();
      out.back().name = fields[0];
    }
    DomainDataset& ds = out.back();
    const std::size_t dialogue_id = parse_size(fields[1], line_no);
    if (ds.dialogues.empty() || ds.dialogues.back().id != dialogue_id) {
      ds.dialogues.push_back(Dialogue{dialogue_id, {}});
    }

    SynthTurn turn;
    std::vector<SlotId> slots;
    for (const auto& chunk : split(fields[3], ';')) {
      const auto parts = split(chunk, '|');
      if (parts.size() != 3) throw bad("malformed payload '" + chunk + "'");
      SlotPayload p;
      p.slot = registry.id_of(parts[0]);
      p.length = parse_size(parts[1], line_no);
      auto values = std::make_shared<std::vector<double>>();
      for (const auto& v : split(parts[2], ',')) {
        try {
          values->push_back(std::stod(v));
        } catch (const std::exception&) {
          throw bad("bad number '" + v + "'");
        }
      }
      p.data = std::move(values);
      slots.push_back(p.slot);
      turn.payloads.push_back(std::move(p));
    }
    for (const auto& chunk : split(fields[4], ';')) {
      const auto eq = chunk.find('=');
      const auto at = chunk.rfind('@');
      const auto dash = chunk.rfind('-');
      if (eq == std::string::npos || at == std::string::npos || dash == std::string::npos || dash < at) {
        throw bad("malformed gold entry '" + chunk + "'");
      }
      const SlotId slot = registry.id_of(chunk.substr(0, eq));
      GoldValue g;
      g.value = chunk.substr(eq + 1, at - eq - 1);
      g.start = parse_size(chunk.substr(at + 1, dash - at - 1), line_no);
      g.end = parse_size(chunk.substr(dash + 1), line_no);
      const auto& values = registry.at(slot).values;
      const auto it = std::find(values.begin(), values.end(), g.value);
      if (g.active() && it == values.end()) throw bad("unknown value '" + g.value + "'");
      g.value_index = it == values.end() ? 0 : static_cast<std::size_t>(it - values.begin());
      turn.gold.push_back(std::move(g));
    }
    if (turn.gold.size() != turn.payloads.size()) throw bad("payload/gold slot count mismatch");
    if (ds.slots.empty()) ds.slots = slots;
    if (ds.slots != slots) throw bad("slot set differs from earlier turns of the domain");
    ds.dialogues.back().turns.push_back(std::move(turn));
  }
  return out;
}

}  // namespace dreptile
