#pragma once

// Monte-Carlo comparison of column-pair selection strategies: the rank
// correlation heuristic (RCC), a uniformly random pair (RAND), and the
// omniscient best pair (OPT). Every trial draws from its own counter-derived
// stream, so results do not depend on thread count or scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "lazyelicit/error.hpp"
#include "lazyelicit/frontier.hpp"
#include "lazyelicit/rng.hpp"

namespace lazyelicit::sim {

enum class Strategy { rcc, rand, opt };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::rcc: return "RCC";
    case Strategy::rand: return "RAND";
    case Strategy::opt: return "OPT";
  }
  return "?";
}

struct Dims {
  std::size_t m = 2;
  std::size_t n = 2;

  friend bool operator==(const Dims&, const Dims&) = default;
};

struct TrialConfig {
  /// One entry for a fixed-size run; several entries pool trials uniformly
  /// over the listed sizes.
  std::vector<Dims> grid{{50, 6}};
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  std::vector<Strategy> strategies{Strategy::rcc, Strategy::rand, Strategy::opt};
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
  /// Dominance tolerance for every frontier computation.
  double epsilon = 0.0;

  void validate() const {
    if (grid.empty()) throw Error(ErrorKind::invalid_argument, "config has no (m, n) sizes");
    for (const auto& d : grid) {
      if (d.m < 2) throw Error(ErrorKind::invalid_argument, "m must be >= 2");
      if (d.n < 2) throw Error(ErrorKind::invalid_argument, "n must be >= 2");
    }
    if (trials < 1) throw Error(ErrorKind::invalid_argument, "trials must be >= 1");
    if (strategies.empty()) throw Error(ErrorKind::invalid_argument, "no strategies selected");
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be >= 0");
  }

  static std::vector<Dims> cartesian(const std::vector<std::size_t>& ms,
                                     const std::vector<std::size_t>& ns) {
    std::vector<Dims> out;
    for (auto m : ms) {
      for (auto n : ns) out.push_back({m, n});
    }
    return out;
  }

  /// m in {25, 50, 100, 200}, n in 4..8.
  static std::vector<Dims> published_grid() { return cartesian({25, 50, 100, 200}, {4, 5, 6, 7, 8}); }
};

/// Hidden scaling constants and the plans' expected subutilities.
struct Instance {
  std::vector<double> k;
  std::vector<std::vector<double>> w;

  std::size_t m() const noexcept { return w.size(); }
  std::size_t n() const noexcept { return k.size(); }
  PlanMatrix matrix() const { return PlanMatrix::from_rows(w); }

  double expected_utility(std::size_t plan) const {
    double total = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) total += k[i] * w[plan][i];
    return total;
  }
};

/// k uniform on [0,1]^n then normalized, W uniform on [0,1]^{m x n}, drawn
/// in that order (k first, then W row by row).
inline Instance generate_instance(std::size_t m, std::size_t n, SplitMix64& rng) {
  if (m < 1 || n < 1) throw Error(ErrorKind::invalid_argument, "instance needs m, n >= 1");
  Instance inst;
  inst.k.resize(n);
  for (;;) {
    for (auto& ki : inst.k) ki = rng.uniform();
    if (std::any_of(inst.k.begin(), inst.k.end(), [](double x) { return x >= 1e-12; })) break;
  }
  const double total = std::accumulate(inst.k.begin(), inst.k.end(), 0.0);
  for (auto& ki : inst.k) ki /= total;
  inst.w.assign(m, std::vector<double>(n));
  for (auto& row : inst.w) {
    for (auto& x : row) x = rng.uniform();
  }
  return inst;
}

/// All (i, j), i < j, in lexicographic order.
inline std::vector<ColumnPair> all_pairs(std::size_t n) {
  std::vector<ColumnPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({i, j});
  }
  return pairs;
}

/// k_i / k_j for the root attributes of the two columns.
inline double true_ratio(const Instance& inst, const PlanMatrix& matrix, ColumnPair pair) {
  return inst.k[matrix.columns()[pair.absorbed].root] / inst.k[matrix.columns()[pair.into].root];
}

/// Frontier shrinkage from merging `pair` with the true ratio.
inline std::size_t eliminations_for_pair(const Instance& inst, const PlanMatrix& matrix,
                                         const FrontierResult& frontier, ColumnPair pair,
                                         double epsilon = 0.0) {
  const auto merged =
      merge_attributes(matrix, pair.absorbed, pair.into, true_ratio(inst, matrix, pair));
  const auto after = efficient_frontier(merged, epsilon, frontier.surviving);
  return frontier.surviving.size() - after.surviving.size();
}

/// Eliminations for every pair, in all_pairs order.
inline std::vector<std::size_t> pair_eliminations(const Instance& inst, const PlanMatrix& matrix,
                                                  const FrontierResult& frontier,
                                                  double epsilon = 0.0) {
  std::vector<std::size_t> counts;
  for (auto pair : all_pairs(matrix.column_count())) {
    counts.push_back(eliminations_for_pair(inst, matrix, frontier, pair, epsilon));
  }
  return counts;
}

inline ColumnPair opt_pair(const std::vector<std::size_t>& counts, std::size_t n) {
  const auto pairs = all_pairs(n);
  // max_element returns the first maximum: the lexicographically smallest pair.
  return pairs[static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin())];
}

inline ColumnPair random_pair(std::size_t n, SplitMix64& rng) {
  const auto pairs = all_pairs(n);
  return pairs[rng.below(pairs.size())];
}

/// Plans removed from the frontier by the strategy's first merge.
inline std::size_t first_merge_eliminations(const Instance& inst, const FrontierResult& frontier,
                                            Strategy strategy, SplitMix64& rng) {
  if (frontier.surviving.size() < 2) return 0;
  const auto matrix = inst.matrix();
  switch (strategy) {
    case Strategy::rcc:
      return eliminations_for_pair(inst, matrix, frontier, select_merge_pair(matrix, frontier));
    case Strategy::rand:
      return eliminations_for_pair(inst, matrix, frontier, random_pair(inst.n(), rng));
    case Strategy::opt: {
      const auto counts = pair_eliminations(inst, matrix, frontier);
      return *std::max_element(counts.begin(), counts.end());
    }
  }
  return 0;
}

/// "Strictly better than the all-pairs mean", kept in one place so the
/// comparison can be audited or changed.
inline bool above_average(std::size_t count, double average) {
  return static_cast<double>(count) > average;
}

struct TrialRecord {
  std::size_t trial = 0;
  Dims dims;
  std::size_t initial_frontier = 0;
  ColumnPair rcc_pair;
  ColumnPair rand_pair;
  ColumnPair opt_pair;
  std::size_t rcc = 0;
  std::size_t rand = 0;
  std::size_t opt = 0;
  double average = 0.0;

  std::size_t count(Strategy s) const {
    switch (s) {
      case Strategy::rcc: return rcc;
      case Strategy::rand: return rand;
      case Strategy::opt: return opt;
    }
    return 0;
  }
};

struct StrategySummary {
  Strategy strategy = Strategy::rcc;
  double mean_competitive_ratio = 0.0;
  double mean_eliminated = 0.0;
  double fraction_matching_opt = 0.0;
  double fraction_above_average = 0.0;
};

struct HeadToHead {
  Strategy first = Strategy::rcc;
  Strategy second = Strategy::rand;
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
  double win_fraction = 0.0;
};

struct ExperimentReport {
  TrialConfig config;
  std::vector<StrategySummary> strategies;
  std::vector<HeadToHead> head_to_head;
  /// Trials where OPT eliminates nothing; left out of every ratio and
  /// fraction because the competitive ratio is 0/0 there.
  std::size_t excluded_trials = 0;
  std::size_t included_trials = 0;
  std::vector<TrialRecord> trials;

  const StrategySummary& summary(Strategy s) const {
    for (const auto& x : strategies) {
      if (x.strategy == s) return x;
    }
    throw Error(ErrorKind::invalid_argument, std::string("strategy not in report: ") + to_string(s));
  }

  const HeadToHead& versus(Strategy a, Strategy b) const {
    for (const auto& x : head_to_head) {
      if (x.first == a && x.second == b) return x;
    }
    throw Error(ErrorKind::invalid_argument, "head-to-head pair not in report");
  }
};

namespace detail {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots; the first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline Dims draw_dims(const TrialConfig& config, SplitMix64& rng) {
  return config.grid.size() == 1 ? config.grid.front() : config.grid[rng.below(config.grid.size())];
}

}  // namespace detail

/// One seeded trial of the first-merge comparison.
inline TrialRecord run_first_merge_trial(const TrialConfig& config, std::size_t trial) {
  auto rng = SplitMix64::stream(config.seed, trial);
  TrialRecord rec;
  rec.trial = trial;
  rec.dims = detail::draw_dims(config, rng);
  const auto inst = generate_instance(rec.dims.m, rec.dims.n, rng);
  const auto matrix = inst.matrix();
  const auto frontier = efficient_frontier(matrix, config.epsilon);
  rec.initial_frontier = frontier.surviving.size();
  rec.rand_pair = random_pair(inst.n(), rng);
  if (frontier.surviving.size() < 2) {
    rec.rcc_pair = rec.opt_pair = {0, 1};
    return rec;
  }
  const auto counts = pair_eliminations(inst, matrix, frontier, config.epsilon);
  const auto pairs = all_pairs(inst.n());
  auto count_of = [&](ColumnPair p) {
    return counts[static_cast<std::size_t>(std::find(pairs.begin(), pairs.end(), p) - pairs.begin())];
  };
  rec.rcc_pair = select_merge_pair(matrix, frontier);
  rec.opt_pair = opt_pair(counts, inst.n());
  rec.rcc = count_of(rec.rcc_pair);
  rec.rand = count_of(rec.rand_pair);
  rec.opt = count_of(rec.opt_pair);
  rec.average = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0})) /
                static_cast<double>(counts.size());
  return rec;
}

inline ExperimentReport summarize(const TrialConfig& config, std::vector<TrialRecord> trials) {
  ExperimentReport report;
  report.config = config;
  std::vector<const TrialRecord*> included;
  for (const auto& t : trials) {
    if (t.opt == 0) {
      ++report.excluded_trials;
    } else {
      included.push_back(&t);
    }
  }
  report.included_trials = included.size();
  const double denom = included.empty() ? 1.0 : static_cast<double>(included.size());
  for (auto s : config.strategies) {
    StrategySummary sum;
    sum.strategy = s;
    for (const auto* t : included) {
      sum.mean_competitive_ratio += static_cast<double>(t->count(s)) / static_cast<double>(t->opt);
      sum.mean_eliminated += static_cast<double>(t->count(s));
      if (t->count(s) == t->opt) sum.fraction_matching_opt += 1.0;
      if (above_average(t->count(s), t->average)) sum.fraction_above_average += 1.0;
    }
    sum.mean_competitive_ratio /= denom;
    sum.mean_eliminated /= denom;
    sum.fraction_matching_opt /= denom;
    sum.fraction_above_average /= denom;
    report.strategies.push_back(sum);
  }
  for (std::size_t a = 0; a < config.strategies.size(); ++a) {
    for (std::size_t b = a + 1; b < config.strategies.size(); ++b) {
      HeadToHead h{config.strategies[a], config.strategies[b]};
      for (const auto* t : included) {
        const auto x = t->count(h.first), y = t->count(h.second);
        if (x > y) {
          ++h.wins;
        } else if (x == y) {
          ++h.ties;
        } else {
          ++h.losses;
        }
      }
      h.win_fraction = static_cast<double>(h.wins) / denom;
      report.head_to_head.push_back(h);
    }
  }
  report.trials = std::move(trials);
  return report;
}

/// Every strategy is scored on the same instance per trial; ratios are
/// eliminations / OPT eliminations.
inline ExperimentReport run_first_merge_comparison(const TrialConfig& config) {
  config.validate();
  std::vector<TrialRecord> trials(config.trials);
  detail::parallel_for(config.trials, config.threads,
                       [&](std::size_t t) { trials[t] = run_first_merge_trial(config, t); });
  return summarize(config, std::move(trials));
}

/// Frontier sizes after 0..n-1 merges for one strategy on one instance.
/// RAND re-draws its pair at every step from `rng`.
inline std::vector<std::size_t> anytime_sizes(const Instance& inst, Strategy strategy,
                                              SplitMix64& rng, double epsilon = 0.0) {
  if (strategy == Strategy::opt) {
    throw Error(ErrorKind::invalid_argument, "the anytime experiment compares RCC and RAND only");
  }
  auto matrix = inst.matrix();
  auto frontier = efficient_frontier(matrix, epsilon);
  std::vector<std::size_t> sizes{frontier.surviving.size()};
  for (std::size_t step = 1; step < inst.n(); ++step) {
    if (frontier.surviving.size() >= 2) {
      const auto pair = strategy == Strategy::rcc ? select_merge_pair(matrix, frontier)
                                                  : random_pair(matrix.column_count(), rng);
      matrix = merge_attributes(matrix, pair.absorbed, pair.into, true_ratio(inst, matrix, pair));
      frontier = efficient_frontier(matrix, epsilon, frontier.surviving);
    }
    sizes.push_back(frontier.surviving.size());
  }
  return sizes;
}

/// Number of plans attaining the maximum true additive expected utility.
inline std::size_t true_argmax_count(const Instance& inst) {
  double best = inst.expected_utility(0);
  std::size_t count = 1;
  for (std::size_t p = 1; p < inst.m(); ++p) {
    const double u = inst.expected_utility(p);
    if (u > best) {
      best = u;
      count = 1;
    } else if (u == best) {
      ++count;
    }
  }
  return count;
}

struct AnytimeTrial {
  std::size_t trial = 0;
  Dims dims;
  std::vector<std::size_t> rcc;
  std::vector<std::size_t> rand;
  std::size_t argmax_count = 0;
};

struct AnytimeCurves {
  TrialConfig config;
  /// Indexed by merge count; only steps every trial reaches (min n - 1).
  std::vector<double> rcc;
  std::vector<double> rand;
  double mean_argmax_count = 0.0;
  std::vector<AnytimeTrial> trials;
};

inline AnytimeTrial run_anytime_trial(const TrialConfig& config, std::size_t trial) {
  auto rng = SplitMix64::stream(config.seed, trial);
  AnytimeTrial rec;
  rec.trial = trial;
  rec.dims = detail::draw_dims(config, rng);
  const auto inst = generate_instance(rec.dims.m, rec.dims.n, rng);
  rec.rcc = anytime_sizes(inst, Strategy::rcc, rng, config.epsilon);
  rec.rand = anytime_sizes(inst, Strategy::rand, rng, config.epsilon);
  rec.argmax_count = true_argmax_count(inst);
  return rec;
}

inline AnytimeCurves run_anytime_experiment(const TrialConfig& config) {
  config.validate();
  std::vector<AnytimeTrial> trials(config.trials);
  detail::parallel_for(config.trials, config.threads,
                       [&](std::size_t t) { trials[t] = run_anytime_trial(config, t); });
  AnytimeCurves curves;
  curves.config = config;
  std::size_t steps = trials.front().rcc.size();
  for (const auto& t : trials) steps = std::min(steps, t.rcc.size());
  curves.rcc.assign(steps, 0.0);
  curves.rand.assign(steps, 0.0);
  for (const auto& t : trials) {
    for (std::size_t s = 0; s < steps; ++s) {
      curves.rcc[s] += static_cast<double>(t.rcc[s]);
      curves.rand[s] += static_cast<double>(t.rand[s]);
    }
    curves.mean_argmax_count += static_cast<double>(t.argmax_count);
  }
  const double count = static_cast<double>(trials.size());
  for (std::size_t s = 0; s < steps; ++s) {
    curves.rcc[s] /= count;
    curves.rand[s] /= count;
  }
  curves.mean_argmax_count /= count;
  curves.trials = std::move(trials);
  return curves;
}

}  // namespace lazyelicit::sim
