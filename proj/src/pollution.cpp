#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "sroc/error.hpp"
#include "sroc/harness.hpp"
#include "sroc/random.hpp"

namespace sroc {

std::vector<std::size_t> largest_remainder(std::span<const std::size_t> weights, std::size_t total) {
  const std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  std::vector<std::size_t> out(weights.size(), 0);
  if (sum == 0 || total == 0) return out;
  std::vector<std::size_t> remainder(weights.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    // Integer arithmetic keeps the apportionment exact.
    out[k] = weights[k] * total / sum;
    remainder[k] = weights[k] * total % sum;
    assigned += out[k];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k]];
  return out;
}

PollutionPlan build_pollution_plan(const Manifest& manifest, const std::string& category, double pollution_ratio,
                                   std::uint64_t seed, double pool_fraction) {
  if (!(pollution_ratio >= 0.0 && pollution_ratio <= pool_fraction)) {
    throw ConfigError("pollution ratio must lie in [0, " + std::to_string(pool_fraction) + "], got " +
                      std::to_string(pollution_ratio));
  }
  PollutionPlan plan;
  plan.category = category;
  plan.pollution_ratio = pollution_ratio;
  plan.seed = seed;
  plan.pool_fraction = pool_fraction;

  // Validation defectives grouped by type, each group in manifest order.
  std::map<std::string, std::vector<std::string>> by_type;
  std::size_t defective_total = 0;
  std::vector<std::string> val_all;
  for (const auto& rec : manifest) {
    if (rec.split == Split::Train) {
      plan.original_train_ids.push_back(rec.id);
    } else {
      val_all.push_back(rec.id);
      if (rec.defective()) {
        by_type[rec.defect_type.value_or("unknown")].push_back(rec.id);
        ++defective_total;
      }
    }
  }
  const std::size_t n = plan.original_train_ids.size();
  if (n == 0) throw DataError(category + ": manifest has no training samples");
  const std::size_t pool_size = fraction_count(pool_fraction, n);
  if (defective_total < pool_size + 1) {
    throw CategoryExcludedError(category + ": " + std::to_string(defective_total) +
                                " defective validation samples cannot fill a pollution pool of " +
                                std::to_string(pool_size) + " and keep one for validation");
  }

  std::vector<std::size_t> available;
  for (const auto& [type, ids] : by_type) available.push_back(ids.size());
  const auto counts = largest_remainder(available, pool_size);

  std::unordered_set<std::string> pool_members;
  std::size_t t = 0;
  for (const auto& [type, ids] : by_type) {
    const std::size_t take = counts[t++];
    if (take > ids.size()) {
      throw CategoryExcludedError(category + ": defect type '" + type + "' cannot supply " + std::to_string(take) +
                                  " pool samples");
    }
    if (take == 0) continue;
    plan.pool_type_counts[type] = take;
    Rng rng(derive_seed(seed, category + "/pool/" + type, 0));
    const auto order = rng.permutation(ids.size());
    for (std::size_t k = 0; k < take; ++k) pool_members.insert(ids[order[k]]);
  }
  for (const auto& id : val_all) {
    if (pool_members.count(id)) {
      plan.pollution_pool.push_back(id);
    } else {
      plan.val_ids.push_back(id);
    }
  }

  const std::size_t replaced = fraction_count(pollution_ratio, n);
  Rng replace_rng(derive_seed(seed, category + "/replace", 0));
  const auto train_order = replace_rng.permutation(n);
  Rng inject_rng(derive_seed(seed, category + "/inject", 0));
  const auto pool_order = inject_rng.permutation(plan.pollution_pool.size());

  plan.train_ids = plan.original_train_ids;
  for (std::size_t k = 0; k < replaced; ++k) {
    const std::size_t slot = train_order[k];
    plan.replaced_train_ids.push_back(plan.original_train_ids[slot]);
    plan.injected_ids.push_back(plan.pollution_pool[pool_order[k]]);
    plan.train_ids[slot] = plan.injected_ids.back();
  }
  return plan;
}

nlohmann::json plan_to_json(const PollutionPlan& plan) {
  return nlohmann::json{{"category", plan.category},
                        {"pollution_ratio", plan.pollution_ratio},
                        {"seed", plan.seed},
                        {"pool_fraction", plan.pool_fraction},
                        {"pool_rounding", "largest_remainder"},
                        {"original_train_ids", plan.original_train_ids},
                        {"train_ids", plan.train_ids},
                        {"val_ids", plan.val_ids},
                        {"pollution_pool", plan.pollution_pool},
                        {"pool_type_counts", plan.pool_type_counts},
                        {"replaced_train_ids", plan.replaced_train_ids},
                        {"injected_ids", plan.injected_ids}};
}

void check_plan_invariants(const PollutionPlan& plan, const Manifest& manifest) {
  auto fail = [&](const std::string& what) { throw DataError(plan.category + ": plan invariant broken: " + what); };
  const std::size_t n = plan.original_train_ids.size();
  const std::size_t expected = fraction_count(plan.pollution_ratio, n);
  if (plan.injected_ids.size() != expected || plan.replaced_train_ids.size() != expected) {
    fail("injected/replaced counts differ from floor(ratio * N)");
  }
  if (plan.train_ids.size() != n) fail("training size changed");

  const std::unordered_set<std::string> pool(plan.pollution_pool.begin(), plan.pollution_pool.end());
  const std::unordered_set<std::string> val(plan.val_ids.begin(), plan.val_ids.end());
  const std::unordered_set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
  if (train.size() != plan.train_ids.size()) fail("duplicate ids in the training set");
  for (const auto& id : plan.injected_ids) {
    if (!pool.count(id)) fail("injected id " + id + " not in the pool");
    if (!train.count(id)) fail("injected id " + id + " missing from the training set");
  }
  for (const auto& id : plan.pollution_pool) {
    if (val.count(id)) fail("pool id " + id + " still in validation");
  }
  for (const auto& id : plan.train_ids) {
    if (val.count(id)) fail("id " + id + " in both train and validation");
  }
  for (const auto& id : plan.replaced_train_ids) {
    if (train.count(id)) fail("replaced id " + id + " still in the training set");
  }
  std::unordered_map<std::string, const SampleRecord*> records;
  for (const auto& rec : manifest) records.emplace(rec.id, &rec);
  std::size_t defective_in_train = 0;
  for (const auto& id : plan.train_ids) {
    auto it = records.find(id);
    if (it == records.end()) fail("unknown id " + id);
    defective_in_train += it->second->defective();
  }
  if (defective_in_train < plan.injected_ids.size()) fail("injected samples are not all defective");
  for (const auto& id : plan.pollution_pool) {
    const auto* rec = records.at(id);
    if (!rec->defective() || rec->split != Split::Val) fail("pool id " + id + " is not a defective validation sample");
  }
  if (plan.pollution_pool.size() != fraction_count(plan.pool_fraction, n)) fail("pool size differs from the pool fraction of N");
}

}  // namespace sroc
