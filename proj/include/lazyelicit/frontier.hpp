#pragma once

// Efficient frontier over plan matrices, per-column rankings, the rank
// correlation coefficient, and the most-conflicting column pair.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lazyelicit/error.hpp"
#include "lazyelicit/utility.hpp"

namespace lazyelicit {

using PlanId = std::size_t;

/// How a column was built: a leaf is an original attribute; a merge node
/// records `ratio * absorbed + into`.
struct MergeTree {
  std::optional<std::size_t> attribute;
  std::shared_ptr<const MergeTree> absorbed;
  std::shared_ptr<const MergeTree> into;
  double ratio = 1.0;

  static std::shared_ptr<const MergeTree> leaf(std::size_t attribute) {
    auto t = std::make_shared<MergeTree>();
    t->attribute = attribute;
    return t;
  }
};

/// An active column: an original attribute or a merged group.
struct ColumnDescriptor {
  std::string label;
  /// Original attribute indices in the group and their coefficient relative
  /// to the group's root attribute (k_member / k_root); the root has 1.
  std::vector<std::size_t> members;
  std::vector<double> coefficients;
  /// Attribute whose scaling constant weights this column.
  std::size_t root = 0;
  std::shared_ptr<const MergeTree> tree;

  static ColumnDescriptor original(std::size_t attribute, std::string label) {
    return {std::move(label), {attribute}, {1.0}, attribute, MergeTree::leaf(attribute)};
  }
};

struct PlanRecord {
  PlanId id = 0;
  std::string label;
  std::vector<double> w;
};

class PlanMatrix {
 public:
  PlanMatrix() = default;

  PlanMatrix(std::vector<PlanRecord> plans, std::vector<ColumnDescriptor> columns)
      : plans_(std::move(plans)), columns_(std::move(columns)) {
    std::unordered_set<PlanId> seen;
    for (const auto& p : plans_) {
      if (p.w.size() != columns_.size()) {
        throw Error(ErrorKind::dimension_mismatch,
                    "plan '" + p.label + "' has " + std::to_string(p.w.size()) +
                        " values but the matrix has " + std::to_string(columns_.size()) +
                        " columns");
      }
      if (!seen.insert(p.id).second) {
        throw Error(ErrorKind::invalid_argument, "duplicate plan id " + std::to_string(p.id));
      }
    }
  }

  /// Plans with ids 0..m-1 and one original column per attribute.
  static PlanMatrix from_rows(const std::vector<std::vector<double>>& rows,
                              std::vector<std::string> column_labels = {},
                              std::vector<std::string> plan_labels = {}) {
    const std::size_t n = rows.empty() ? column_labels.size() : rows.front().size();
    if (column_labels.empty()) {
      for (std::size_t c = 0; c < n; ++c) column_labels.push_back("X" + std::to_string(c + 1));
    }
    std::vector<ColumnDescriptor> columns;
    for (std::size_t c = 0; c < column_labels.size(); ++c) {
      columns.push_back(ColumnDescriptor::original(c, column_labels[c]));
    }
    std::vector<PlanRecord> plans;
    plans.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::string label = r < plan_labels.size() ? plan_labels[r] : std::to_string(r);
      plans.push_back({r, std::move(label), rows[r]});
    }
    return PlanMatrix(std::move(plans), std::move(columns));
  }

  const std::vector<PlanRecord>& plans() const noexcept { return plans_; }
  const std::vector<ColumnDescriptor>& columns() const noexcept { return columns_; }
  std::size_t column_count() const noexcept { return columns_.size(); }
  std::size_t size() const noexcept { return plans_.size(); }

  const PlanRecord& plan(PlanId id) const {
    // Ids are row indices in every matrix this library builds; fall back to
    // a scan for hand-assembled matrices.
    if (id < plans_.size() && plans_[id].id == id) return plans_[id];
    for (const auto& p : plans_) {
      if (p.id == id) return p;
    }
    throw Error(ErrorKind::invalid_argument, "unknown plan id " + std::to_string(id));
  }

  std::vector<PlanId> ids() const {
    std::vector<PlanId> out;
    out.reserve(plans_.size());
    for (const auto& p : plans_) out.push_back(p.id);
    return out;
  }

 private:
  std::vector<PlanRecord> plans_;
  std::vector<ColumnDescriptor> columns_;
};

struct Ranking {
  std::vector<double> ranks;
};

struct FrontierResult {
  std::vector<PlanId> surviving;
  /// (eliminated plan, surviving dominator)
  std::vector<std::pair<PlanId, PlanId>> eliminated;
};

namespace detail {

/// True when `a` eliminates `b`: strict componentwise dominance, or equal
/// vectors with `a` holding the lower id.
inline bool eliminates(const PlanRecord& a, const PlanRecord& b, double epsilon) {
  const auto v = componentwise_dominates(a.w, b.w, epsilon);
  return v.relation == DominanceRelation::strict ||
         (v.relation == DominanceRelation::weak_equal && a.id < b.id);
}

}  // namespace detail

/// Efficient frontier of the candidate plans (all plans when `candidates`
/// is empty). Survivors are returned in ascending id order.
///
/// Candidates are scanned in descending coordinate-sum order, ties broken
/// by descending lexicographic value and then ascending id; a plan is kept
/// iff no survivor so far eliminates it. A strict dominator always has a
/// larger sum or, after rounding, an equal sum and a larger lexicographic
/// position, so with epsilon = 0 this matches the pairwise definition.
inline FrontierResult efficient_frontier(const PlanMatrix& matrix, double epsilon = 0.0,
                                         std::span<const PlanId> candidates = {}) {
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be >= 0");
  std::vector<const PlanRecord*> order;
  if (candidates.empty()) {
    for (const auto& p : matrix.plans()) order.push_back(&p);
  } else {
    for (PlanId id : candidates) order.push_back(&matrix.plan(id));
  }
  if (order.empty()) throw Error(ErrorKind::invalid_argument, "plan matrix is empty");

  std::vector<std::pair<double, const PlanRecord*>> keyed;
  keyed.reserve(order.size());
  for (const auto* p : order) {
    keyed.emplace_back(std::accumulate(p->w.begin(), p->w.end(), 0.0), p);
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    if (x.second->w != y.second->w) return x.second->w > y.second->w;
    return x.second->id < y.second->id;
  });

  std::vector<const PlanRecord*> kept;
  FrontierResult result;
  for (const auto& [sum, p] : keyed) {
    const PlanRecord* dominator = nullptr;
    for (const auto* s : kept) {
      if (detail::eliminates(*s, *p, epsilon)) {
        dominator = s;
        break;
      }
    }
    if (dominator) {
      result.eliminated.emplace_back(p->id, dominator->id);
    } else {
      kept.push_back(p);
    }
  }
  for (const auto* s : kept) result.surviving.push_back(s->id);
  std::sort(result.surviving.begin(), result.surviving.end());
  std::sort(result.eliminated.begin(), result.eliminated.end());
  return result;
}

/// Descending ranks (rank 1 = largest value) with midranks for ties.
inline Ranking rank_column(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::invalid_argument, "cannot rank an empty column");
  const std::size_t m = values.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  Ranking r{std::vector<double>(m)};
  for (std::size_t start = 0; start < m;) {
    std::size_t end = start + 1;
    while (end < m && values[idx[end]] == values[idx[start]]) ++end;
    // Positions start..end-1 hold ranks start+1..end; their mean:
    const double mid = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t k = start; k < end; ++k) r.ranks[idx[k]] = mid;
    start = end;
  }
  return r;
}

/// rho = 1 - 6 sum (a_i - b_i)^2 / (m^3 - m).
inline double rcc(const Ranking& a, const Ranking& b) {
  if (a.ranks.size() != b.ranks.size()) {
    throw Error(ErrorKind::dimension_mismatch, "rankings differ in length");
  }
  const std::size_t m = a.ranks.size();
  if (m < 2) throw Error(ErrorKind::invalid_argument, "rank correlation needs at least 2 items");
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = a.ranks[i] - b.ranks[i];
    sum_sq += d * d;
  }
  const double md = static_cast<double>(m);
  const double denom = md * md * md - md;
  // One rounding step keeps textbook values (0.4, -0.4) exact.
  return (denom - 6.0 * sum_sq) / denom;
}

struct ColumnPair {
  std::size_t absorbed = 0;  // i
  std::size_t into = 1;      // j

  friend bool operator==(const ColumnPair&, const ColumnPair&) = default;
};

/// Rankings of every active column, restricted to the surviving plans.
inline std::vector<Ranking> survivor_rankings(const PlanMatrix& matrix,
                                              std::span<const PlanId> surviving) {
  std::vector<Ranking> rankings;
  rankings.reserve(matrix.column_count());
  std::vector<double> column(surviving.size());
  for (std::size_t c = 0; c < matrix.column_count(); ++c) {
    for (std::size_t r = 0; r < surviving.size(); ++r) column[r] = matrix.plan(surviving[r]).w[c];
    rankings.push_back(rank_column(column));
  }
  return rankings;
}

/// The active column pair whose survivor rankings disagree most (minimal
/// rho), ties to the lexicographically smallest (i, j).
inline ColumnPair select_merge_pair(const PlanMatrix& matrix, const FrontierResult& frontier) {
  const std::size_t n = matrix.column_count();
  if (n < 2) throw Error(ErrorKind::invalid_argument, "need at least 2 active columns");
  if (frontier.surviving.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "need at least 2 surviving plans");
  }
  const auto rankings = survivor_rankings(matrix, frontier.surviving);
  ColumnPair best{0, 1};
  double best_rho = rcc(rankings[0], rankings[1]);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double rho = rcc(rankings[i], rankings[j]);
      if (rho < best_rho) {
        best_rho = rho;
        best = {i, j};
      }
    }
  }
  return best;
}

/// Replaces column j with r * w_i + w_j and drops column i.
inline PlanMatrix merge_attributes(const PlanMatrix& matrix, std::size_t i, std::size_t j,
                                   double r) {
  const std::size_t n = matrix.column_count();
  if (i >= n || j >= n) throw Error(ErrorKind::invalid_argument, "merge column is not active");
  if (i == j) throw Error(ErrorKind::invalid_argument, "cannot merge a column with itself");
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorKind::invalid_argument, "tradeoff ratio must be positive and finite");
  }

  const auto& ci = matrix.columns()[i];
  const auto& cj = matrix.columns()[j];
  ColumnDescriptor merged;
  merged.label = cj.label + "+" + ci.label;
  merged.root = cj.root;
  merged.members = cj.members;
  merged.coefficients = cj.coefficients;
  for (std::size_t a = 0; a < ci.members.size(); ++a) {
    merged.members.push_back(ci.members[a]);
    merged.coefficients.push_back(r * ci.coefficients[a]);
  }
  auto node = std::make_shared<MergeTree>();
  node->absorbed = ci.tree;
  node->into = cj.tree;
  node->ratio = r;
  merged.tree = std::move(node);

  std::vector<ColumnDescriptor> columns;
  columns.reserve(n - 1);
  for (std::size_t c = 0; c < n; ++c) {
    if (c == i) continue;
    columns.push_back(c == j ? merged : matrix.columns()[c]);
  }
  std::vector<PlanRecord> plans;
  plans.reserve(matrix.size());
  for (const auto& p : matrix.plans()) {
    PlanRecord q{p.id, p.label, {}};
    q.w.reserve(n - 1);
    for (std::size_t c = 0; c < n; ++c) {
      if (c == i) continue;
      q.w.push_back(c == j ? r * p.w[i] + p.w[j] : p.w[c]);
    }
    plans.push_back(std::move(q));
  }
  return PlanMatrix(std::move(plans), std::move(columns));
}

}  // namespace lazyelicit
