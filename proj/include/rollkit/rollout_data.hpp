#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rollkit/common.hpp"

namespace rollkit {

struct TokenLogprob {
  int token = 0;
  double logprob = 0.0;  // nats, <= 0

  friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

// One sampled trajectory. `tokens`, `chosen_logprobs` and `topk` are aligned
// per position; `correct` is optional and only required by pass@K evaluation.
struct RolloutRecord {
  std::string problem_id;
  int rollout_id = 0;
  std::vector<int> tokens;
  std::vector<double> chosen_logprobs;            // nats, <= 0
  std::vector<std::vector<TokenLogprob>> topk;    // sorted non-increasing
  std::optional<bool> correct;

  // Set during validation when the chosen token at some position is missing
  // from that position's top-k list. Accepted, but noted: quality still uses
  // chosen_logprobs, and deep distance never needs the chosen token.
  bool chosen_outside_topk = false;

  std::size_t length() const { return tokens.size(); }

  friend bool operator==(const RolloutRecord& a, const RolloutRecord& b) {
    return a.problem_id == b.problem_id && a.rollout_id == b.rollout_id &&
           a.tokens == b.tokens && a.chosen_logprobs == b.chosen_logprobs &&
           a.topk == b.topk && a.correct == b.correct;
  }
};

// The N rollouts logged for one problem, viewed through a prefix of length
// `prefix_length`. Rollouts shorter than the prefix keep their actual length;
// cross-rollout positional comparisons use the pool-wide common length.
struct ProblemPool {
  std::string problem_id;
  int prefix_length = 1;  // L
  std::vector<RolloutRecord> rollouts;

  int size() const { return static_cast<int>(rollouts.size()); }

  int effective_length(int i) const {
    return static_cast<int>(std::min<std::size_t>(
        prefix_length, rollouts[static_cast<std::size_t>(i)].length()));
  }

  // L_c: largest position index (exclusive) valid for every rollout.
  int common_length() const {
    int lc = prefix_length;
    for (int i = 0; i < size(); ++i) lc = std::min(lc, effective_length(i));
    return lc;
  }
};

struct PrefixFeatures {
  std::vector<double> quality_raw;             // q(i), nats
  std::vector<double> quality_norm;            // q-hat(i) in [0,1]
  std::vector<std::vector<double>> margins;    // per rollout, per position
  std::vector<std::vector<int>> token_sets;    // sorted unique prefix tokens
};

namespace detail {

inline void check(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace detail

// Enforces the per-record invariants; flags (not rejects) records whose
// chosen token is missing from the stored top-k at some position.
inline void validate_record(RolloutRecord& r) {
  const std::string who =
      "rollout " + std::to_string(r.rollout_id) + " of problem '" +
      r.problem_id + "'";
  detail::check(r.rollout_id >= 0, who + ": rollout_id must be >= 0");
  detail::check(
      r.tokens.size() == r.chosen_logprobs.size() &&
          r.tokens.size() == r.topk.size(),
      who + ": tokens/chosen_logprobs/topk lengths differ (" +
          std::to_string(r.tokens.size()) + "/" +
          std::to_string(r.chosen_logprobs.size()) + "/" +
          std::to_string(r.topk.size()) + ")");
  r.chosen_outside_topk = false;
  for (std::size_t t = 0; t < r.tokens.size(); ++t) {
    const std::string at = who + ", position " + std::to_string(t);
    detail::check(r.chosen_logprobs[t] <= 0.0,
                  at + ": chosen logprob must be <= 0");
    detail::check(!r.topk[t].empty(), at + ": top-k list must be nonempty");
    bool found = false;
    for (std::size_t s = 0; s < r.topk[t].size(); ++s) {
      detail::check(r.topk[t][s].logprob <= 0.0,
                    at + ": top-k logprob must be <= 0");
      if (s > 0)
        detail::check(r.topk[t][s - 1].logprob >= r.topk[t][s].logprob,
                      at + ": top-k logprobs must be sorted non-increasing");
      found = found || r.topk[t][s].token == r.tokens[t];
    }
    if (!found) r.chosen_outside_topk = true;
  }
}

inline RolloutRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("record must be a JSON object");
  static const char* kFields[] = {"problem_id", "rollout_id",      "tokens",
                                  "chosen_logprobs", "topk", "correct"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* f : kFields) known = known || it.key() == f;
    if (!known) throw ValidationError("unknown field '" + it.key() + "'");
  }
  for (const char* f : {"problem_id", "rollout_id", "tokens",
                        "chosen_logprobs", "topk"})
    if (!j.contains(f))
      throw ValidationError(std::string("missing field '") + f + "'");

  RolloutRecord r;
  try {
    r.problem_id = j.at("problem_id").get<std::string>();
    r.rollout_id = j.at("rollout_id").get<int>();
    r.tokens = j.at("tokens").get<std::vector<int>>();
    r.chosen_logprobs = j.at("chosen_logprobs").get<std::vector<double>>();
    for (const auto& pos : j.at("topk")) {
      std::vector<TokenLogprob> entries;
      for (const auto& pair : pos) {
        if (!pair.is_array() || pair.size() != 2)
          throw ValidationError("topk entries must be [token_id, logprob]");
        entries.push_back({pair.at(0).get<int>(), pair.at(1).get<double>()});
      }
      r.topk.push_back(std::move(entries));
    }
    if (j.contains("correct")) r.correct = j.at("correct").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad field type: ") + e.what());
  }
  validate_record(r);
  return r;
}

inline nlohmann::ordered_json record_to_json(const RolloutRecord& r) {
  nlohmann::ordered_json j;
  j["problem_id"] = r.problem_id;
  j["rollout_id"] = r.rollout_id;
  j["tokens"] = r.tokens;
  j["chosen_logprobs"] = r.chosen_logprobs;
  auto topk = nlohmann::ordered_json::array();
  for (const auto& pos : r.topk) {
    auto entries = nlohmann::ordered_json::array();
    for (const auto& e : pos)
      entries.push_back(nlohmann::ordered_json::array({e.token, e.logprob}));
    topk.push_back(std::move(entries));
  }
  j["topk"] = std::move(topk);
  if (r.correct.has_value()) j["correct"] = *r.correct;
  return j;
}

// Groups records by problem_id (order of first appearance) and validates the
// pool invariants: N >= 2, unique rollout_ids.
inline std::vector<ProblemPool> pools_from_records(
    std::vector<RolloutRecord> records, int prefix_length) {
  if (prefix_length < 1)
    throw ParameterError("prefix_length must be >= 1");
  std::vector<ProblemPool> pools;
  for (auto& r : records) {
    auto it = std::find_if(pools.begin(), pools.end(), [&](const ProblemPool& p) {
      return p.problem_id == r.problem_id;
    });
    if (it == pools.end()) {
      pools.push_back({r.problem_id, prefix_length, {}});
      it = pools.end() - 1;
    }
    it->rollouts.push_back(std::move(r));
  }
  for (const auto& pool : pools) {
    detail::check(pool.size() >= 2, "problem '" + pool.problem_id +
                                        "': a pool needs at least 2 rollouts");
    for (int i = 0; i < pool.size(); ++i)
      for (int j = i + 1; j < pool.size(); ++j)
        detail::check(
            pool.rollouts[i].rollout_id != pool.rollouts[j].rollout_id,
            "problem '" + pool.problem_id + "': duplicate rollout_id " +
                std::to_string(pool.rollouts[i].rollout_id));
  }
  return pools;
}

inline std::vector<RolloutRecord> parse_jsonl(std::istream& in) {
  std::vector<RolloutRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
    }
    try {
      records.push_back(record_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " +
                            e.what());
    }
  }
  return records;
}

inline std::vector<ProblemPool> load_pools(const std::string& path,
                                           int prefix_length) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return pools_from_records(parse_jsonl(in), prefix_length);
}

inline void serialize_pools(std::ostream& out,
                            std::span<const ProblemPool> pools) {
  for (const auto& pool : pools)
    for (const auto& r : pool.rollouts) out << record_to_json(r).dump() << '\n';
}

inline void save_pools(const std::string& path,
                       std::span<const ProblemPool> pools) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  serialize_pools(out, pools);
}

// --- prefix features ---------------------------------------------------

// q(i): prefix sequence log-probability over the effective prefix.
inline std::vector<double> prefix_quality_raw(const ProblemPool& pool) {
  if (pool.rollouts.empty()) throw ParameterError("empty pool");
  std::vector<double> q(static_cast<std::size_t>(pool.size()), 0.0);
  for (int i = 0; i < pool.size(); ++i) {
    const int len = pool.effective_length(i);
    double acc = 0.0;
    for (int t = 0; t < len; ++t)
      acc += pool.rollouts[static_cast<std::size_t>(i)]
                 .chosen_logprobs[static_cast<std::size_t>(t)];
    q[static_cast<std::size_t>(i)] = acc;
  }
  return q;
}

// Min-max normalization to [0,1]. A degenerate range (all values equal) maps
// everything to 0.5 so quality terms neither dominate nor vanish.
inline std::vector<double> minmax_normalize(std::span<const double> values) {
  if (values.empty()) throw ParameterError("minmax_normalize: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(values.size());
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = (values[i] - lo) / (hi - lo);
  return out;
}

// Margin at one position of one record: top-1 minus top-2 logprob, or the
// kLargeMargin sentinel when only a single alternative was stored.
inline double margin_at(const RolloutRecord& r, int position) {
  const auto& entries = r.topk[static_cast<std::size_t>(position)];
  if (entries.size() < 2) return kLargeMargin;
  return entries[0].logprob - entries[1].logprob;
}

inline std::vector<std::vector<double>> prefix_margins(const ProblemPool& pool) {
  std::vector<std::vector<double>> m(static_cast<std::size_t>(pool.size()));
  for (int i = 0; i < pool.size(); ++i) {
    const int len = pool.effective_length(i);
    m[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t)
      m[static_cast<std::size_t>(i)].push_back(
          margin_at(pool.rollouts[static_cast<std::size_t>(i)], t));
  }
  return m;
}

inline std::vector<std::vector<int>> prefix_token_sets(const ProblemPool& pool) {
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(pool.size()));
  for (int i = 0; i < pool.size(); ++i) {
    const int len = pool.effective_length(i);
    auto& s = sets[static_cast<std::size_t>(i)];
    s.assign(pool.rollouts[static_cast<std::size_t>(i)].tokens.begin(),
             pool.rollouts[static_cast<std::size_t>(i)].tokens.begin() + len);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return sets;
}

inline PrefixFeatures compute_prefix_features(const ProblemPool& pool) {
  PrefixFeatures f;
  f.quality_raw = prefix_quality_raw(pool);
  f.quality_norm = minmax_normalize(f.quality_raw);
  f.margins = prefix_margins(pool);
  f.token_sets = prefix_token_sets(pool);
  return f;
}

}  // namespace rollkit
