#pragma once

// Lazy, problem-focused elicitation session. The session alternates between
// filtering the plans to their efficient frontier and asking the decision
// maker for one tradeoff ratio, chosen on the most conflicting column pair;
// each ratio merges two columns and the frontier is recomputed.
//
// ElicitationSession is a value: every transition returns a new session and
// leaves the receiver untouched, also when it throws.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lazyelicit/error.hpp"
#include "lazyelicit/frontier.hpp"
#include "lazyelicit/utility.hpp"

namespace lazyelicit {

/// Standard-gamble question on one attribute: indifference probability
/// between the best/worst lottery and an outcome that is best on the target
/// attribute and worst elsewhere. The answer equals the attribute's k.
struct TypeIQuestion {
  std::size_t attribute = 0;
};

/// Matching question: the value of `match_attribute` that makes the
/// decision maker indifferent to `probe_value` on `probe_attribute`.
struct TypeIIQuestion {
  std::size_t probe_attribute = 0;
  std::size_t match_attribute = 0;
  double probe_value = 0.0;
  double probe_utility = 0.0;
};

struct Question {
  std::uint64_t id = 0;
  /// Active columns the ratio is being elicited for (absorbed, into).
  ColumnPair pair;
  std::variant<TypeIQuestion, TypeIIQuestion> body;
  std::string text;

  bool is_type1() const noexcept { return std::holds_alternative<TypeIQuestion>(body); }
};

struct ProbabilityAnswer {
  double p = 0.0;
};

struct MatchingValueAnswer {
  AttributeValue value;
};

/// The ratio k_i / k_j stated directly. Without `pair` it answers the
/// pending question; with `pair` it targets any two active columns.
struct DirectRatioAnswer {
  double r = 0.0;
  std::optional<ColumnPair> pair;
};

struct Answer {
  std::variant<ProbabilityAnswer, MatchingValueAnswer, DirectRatioAnswer> body;
  /// When set, the answer is rejected unless this question is pending.
  std::optional<std::uint64_t> question_id;

  bool targets_explicit_pair() const {
    const auto* d = std::get_if<DirectRatioAnswer>(&body);
    return d && d->pair.has_value();
  }
};

struct MergeRecord {
  std::size_t absorbed = 0;  // column index at merge time
  std::size_t into = 0;
  std::string absorbed_label;
  std::string into_label;
  double ratio = 0.0;
  std::string result_label;
  std::vector<Answer> answers;
  std::size_t frontier_before = 0;
  std::size_t frontier_after = 0;
};

struct EliminationRecord {
  PlanId plan = 0;
  PlanId dominator = 0;
  /// Number of merges performed when the plan was eliminated.
  std::size_t step = 0;
};

enum class SessionStatus { active, awaiting_answer, done };

inline const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::active: return "active";
    case SessionStatus::awaiting_answer: return "awaiting-answer";
    case SessionStatus::done: return "done";
  }
  return "active";
}

/// Immutable problem definition shared by every state of a session.
struct Problem {
  std::vector<Attribute> attributes;
  std::vector<SubutilityFunction> subutilities;
  PlanMatrix plans;
  double epsilon = 0.0;

  void validate() const {
    const std::size_t n = attributes.size();
    if (n == 0) throw Error(ErrorKind::invalid_argument, "no attributes defined");
    if (subutilities.size() != n) {
      throw Error(ErrorKind::dimension_mismatch, "attribute and subutility counts differ");
    }
    if (plans.size() == 0) throw Error(ErrorKind::invalid_argument, "plan list is empty");
    if (plans.column_count() != n) {
      throw Error(ErrorKind::dimension_mismatch,
                  "plans have " + std::to_string(plans.column_count()) + " columns but " +
                      std::to_string(n) + " attributes are defined");
    }
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be >= 0");
    for (std::size_t i = 0; i < n; ++i) {
      attributes[i].validate();
      subutilities[i].validate_against(attributes[i]);
    }
    for (const auto& p : plans.plans()) {
      for (double x : p.w) {
        if (!(x >= 0.0 && x <= 1.0)) {
          throw Error(ErrorKind::invalid_argument,
                      "plan '" + p.label + "' has an expected subutility outside [0,1]");
        }
      }
    }
  }
};

/// The answer to a standard-gamble question is the scaling constant itself.
inline double coefficient_from_type1(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "probability answer must lie in [0,1]");
  }
  return p;
}

/// r = k_i / k_j from two assessed scaling constants.
inline double ratio_from_coefficients(double k_i, double k_j) {
  if (!(k_i >= 0.0) || !(k_j >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "scaling constants must be >= 0");
  }
  if (k_j == 0.0) {
    throw Error(ErrorKind::undefined_ratio, "ratio undefined: the second attribute has k = 0");
  }
  return k_i / k_j;
}

/// r = k_i / k_j = u_j(x'_j) / u_i(x'_i) from a matching answer.
inline double ratio_from_matching(double probe_utility, double matched_utility) {
  if (!(probe_utility >= 0.0) || !(matched_utility >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "subutilities must be >= 0");
  }
  if (probe_utility == 0.0) {
    throw Error(ErrorKind::undefined_ratio, "ratio undefined: the probe has zero subutility");
  }
  return matched_utility / probe_utility;
}

namespace detail {

inline std::string render_outcome(const std::vector<Attribute>& attrs,
                                  const std::vector<std::string>& values) {
  std::string out = "⟨";
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (i > 0) out += ", ";
    out += attrs[i].name + " = " + values[i];
  }
  return out + "⟩";
}

}  // namespace detail

inline std::string render_type1(const std::vector<Attribute>& attrs, std::size_t target) {
  std::vector<std::string> best, worst, certain;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    best.push_back(format_value(attrs[i].best));
    worst.push_back(format_value(attrs[i].worst));
    certain.push_back(i == target ? best.back() : worst.back());
  }
  return "For what probability p are you indifferent between a lottery that yields either the "
         "outcome " +
         detail::render_outcome(attrs, best) + " with probability p and outcome " +
         detail::render_outcome(attrs, worst) +
         " with probability 1 - p, and the certain outcome " +
         detail::render_outcome(attrs, certain) + "?";
}

inline std::string render_type2(const std::vector<Attribute>& attrs, const TypeIIQuestion& q) {
  const auto& a = attrs[q.probe_attribute];
  const auto& b = attrs[q.match_attribute];
  const std::string probe = format_value(q.probe_value);
  return "For what value of " + b.name + " are you indifferent between the outcome " +
         detail::render_outcome({a, b}, {probe, format_value(b.worst)}) + " and the outcome " +
         detail::render_outcome({a, b}, {format_value(a.worst), "?"}) +
         ", all other attributes being held at the same level?";
}

struct FinalReport {
  std::vector<PlanId> surviving;
  std::vector<std::string> surviving_labels;
  std::vector<MergeRecord> history;
  std::vector<EliminationRecord> eliminations;
  std::map<std::string, double> assessed_coefficients;
  /// Scaling constants by original attribute, when the merges pin them all.
  std::optional<std::vector<double>> k;
  std::vector<std::string> warnings;
};

class ElicitationSession {
 public:
  static ElicitationSession start(Problem problem) {
    problem.validate();
    ElicitationSession s;
    s.problem_ = std::make_shared<const Problem>(std::move(problem));
    s.matrix_ = s.problem_->plans;
    s.frontier_ = efficient_frontier(s.matrix_, s.problem_->epsilon);
    for (const auto& [plan, dominator] : s.frontier_.eliminated) {
      s.eliminations_.push_back({plan, dominator, 0});
    }
    return s;
  }

  /// Re-runs a recorded answer sequence from a fresh session.
  static ElicitationSession replay(Problem problem, std::span<const Answer> answers) {
    auto s = start(std::move(problem));
    for (const auto& a : answers) {
      // Logged answers carry the id of the question pending when they were
      // given; explicit-pair ratios given with nothing pending carry none.
      if (a.question_id || !a.targets_explicit_pair()) s = s.next_question().first;
      s = s.apply_answer(a);
    }
    return s;
  }

  const Problem& problem() const noexcept { return *problem_; }
  const PlanMatrix& matrix() const noexcept { return matrix_; }
  const FrontierResult& frontier() const noexcept { return frontier_; }
  const std::vector<EliminationRecord>& eliminations() const noexcept { return eliminations_; }
  const std::vector<MergeRecord>& history() const noexcept { return history_; }
  const std::optional<Question>& pending() const noexcept { return pending_; }
  SessionStatus status() const noexcept { return status_; }
  const std::map<std::string, double>& assessed_coefficients() const noexcept { return assessed_; }
  const std::vector<Answer>& answers() const noexcept { return answers_; }

  /// Nothing left to ask: one survivor, one column, or closed by the user.
  bool decided() const noexcept {
    return status_ == SessionStatus::done || frontier_.surviving.size() <= 1 ||
           matrix_.column_count() <= 1;
  }

  /// The pending question, or a newly selected one on the min-RCC pair.
  std::pair<ElicitationSession, Question> next_question() const {
    if (status_ == SessionStatus::done) throw Error(ErrorKind::invalid_state, "session is done");
    if (pending_) return {*this, *pending_};
    if (decided()) throw Error(ErrorKind::invalid_state, "already decided: nothing to ask");

    ElicitationSession s = *this;
    const ColumnPair pair = select_merge_pair(s.matrix_, s.frontier_);
    const std::size_t ai = s.matrix_.columns()[pair.absorbed].root;
    const std::size_t aj = s.matrix_.columns()[pair.into].root;
    if (auto q = s.type2_for(pair, ai, aj)) {
      s.ask(std::move(*q));
    } else {
      s.ask(s.type1_for(pair, s.assessed_.count(s.problem_->attributes[ai].name) ? aj : ai));
    }
    return {s, *s.pending_};
  }

  ElicitationSession apply_answer(const Answer& answer) const {
    if (status_ == SessionStatus::done) throw Error(ErrorKind::invalid_state, "session is done");
    ElicitationSession s = *this;
    Answer logged = answer;
    if (pending_) logged.question_id = pending_->id;
    if (const auto* d = std::get_if<DirectRatioAnswer>(&answer.body); d && d->pair) {
      if (answer.question_id && (!pending_ || pending_->id != *answer.question_id)) {
        throw Error(ErrorKind::invalid_state, "question is no longer pending");
      }
      if (d->pair->absorbed >= matrix_.column_count() || d->pair->into >= matrix_.column_count() ||
          d->pair->absorbed == d->pair->into) {
        throw Error(ErrorKind::invalid_argument, "direct ratio targets an invalid column pair");
      }
      if (!(d->r > 0.0) || !std::isfinite(d->r)) {
        throw Error(ErrorKind::invalid_argument, "ratio must be positive and finite");
      }
      s.answers_.push_back(logged);
      s.merge(*d->pair, d->r, {logged});
      s.settle();
      return s;
    }
    if (!pending_) throw Error(ErrorKind::invalid_state, "no pending question");
    if (answer.question_id && *answer.question_id != pending_->id) {
      throw Error(ErrorKind::invalid_state, "question " + std::to_string(*answer.question_id) +
                                                " is no longer pending");
    }
    const Question& q = *pending_;
    const auto& attrs = problem_->attributes;

    if (const auto* d = std::get_if<DirectRatioAnswer>(&answer.body)) {
      if (!(d->r > 0.0) || !std::isfinite(d->r)) {
        throw Error(ErrorKind::invalid_argument, "ratio must be positive and finite");
      }
      s.answers_.push_back(logged);
      auto raw = s.partial_;
      raw.push_back(logged);
      s.merge(q.pair, d->r, std::move(raw));
      s.settle();
      return s;
    }

    if (const auto* t1 = std::get_if<TypeIQuestion>(&q.body)) {
      const auto* p = std::get_if<ProbabilityAnswer>(&answer.body);
      if (!p) throw Error(ErrorKind::variant_mismatch, "a probability answer is expected");
      const double k = coefficient_from_type1(p->p);
      s.assessed_[attrs[t1->attribute].name] = k;
      s.answers_.push_back(logged);
      s.partial_.push_back(logged);
      const std::size_t ai = matrix_.columns()[q.pair.absorbed].root;
      const std::size_t aj = matrix_.columns()[q.pair.into].root;
      const std::size_t other = t1->attribute == ai ? aj : ai;
      if (!s.assessed_.count(attrs[other].name)) {
        s.ask(s.type1_for(q.pair, other));
        return s;
      }
      const double r = ratio_from_coefficients(s.assessed_.at(attrs[ai].name), s.assessed_.at(attrs[aj].name));
      s.merge(q.pair, r, s.partial_);
      s.settle();
      return s;
    }

    const auto& t2 = std::get<TypeIIQuestion>(q.body);
    const auto* mv = std::get_if<MatchingValueAnswer>(&answer.body);
    if (!mv) throw Error(ErrorKind::variant_mismatch, "a matching value answer is expected");
    const double matched = problem_->subutilities[t2.match_attribute].evaluate(mv->value);
    const double r = ratio_from_matching(t2.probe_utility, matched);
    s.answers_.push_back(logged);
    auto raw = s.partial_;
    raw.push_back(logged);
    s.merge(q.pair, r, std::move(raw));
    s.settle();
    return s;
  }

  /// Marks the session as finished by the user.
  ElicitationSession close() const {
    ElicitationSession s = *this;
    s.status_ = SessionStatus::done;
    s.pending_.reset();
    s.partial_.clear();
    return s;
  }

  FinalReport accept() const {
    FinalReport r;
    r.surviving = frontier_.surviving;
    for (auto id : r.surviving) r.surviving_labels.push_back(matrix_.plan(id).label);
    r.history = history_;
    r.eliminations = eliminations_;
    r.assessed_coefficients = assessed_;
    const std::size_t n = problem_->attributes.size();
    if (matrix_.column_count() == 1) {
      const auto& col = matrix_.columns().front();
      double total = 0.0;
      for (double c : col.coefficients) total += c;
      std::vector<double> k(n, 0.0);
      for (std::size_t a = 0; a < col.members.size(); ++a) k[col.members[a]] = col.coefficients[a] / total;
      r.k = std::move(k);
    }
    if (assessed_.size() == n) {
      double total = 0.0;
      for (const auto& [_, k] : assessed_) total += k;
      if (std::fabs(total - 1.0) > 0.05) {
        r.warnings.push_back("assessed scaling constants sum to " + detail::shortest(total) +
                             ", not 1; the answers may be inconsistent");
      }
    }
    return r;
  }

 private:
  ElicitationSession() = default;

  std::optional<Question> type2_for(ColumnPair pair, std::size_t ai, std::size_t aj) const {
    const auto& attrs = problem_->attributes;
    if (attrs[ai].kind != AttributeKind::continuous || attrs[aj].kind != AttributeKind::continuous) {
      return std::nullopt;
    }
    const double probe =
        (std::get<double>(attrs[ai].worst) + std::get<double>(attrs[ai].best)) / 2.0;
    const auto u = problem_->subutilities[ai].try_evaluate(probe);
    if (!u || *u <= 1e-9) return std::nullopt;
    TypeIIQuestion t{ai, aj, probe, *u};
    Question q{0, pair, t, render_type2(attrs, t)};
    return q;
  }

  Question type1_for(ColumnPair pair, std::size_t attribute) const {
    return Question{0, pair, TypeIQuestion{attribute}, render_type1(problem_->attributes, attribute)};
  }

  void ask(Question q) {
    q.id = ++question_counter_;
    pending_ = std::move(q);
    status_ = SessionStatus::awaiting_answer;
  }

  // Merges the next pairs for as long as both of their constants are already known.
  void settle() {
    const auto& attrs = problem_->attributes;
    while (!decided()) {
      const ColumnPair pair = select_merge_pair(matrix_, frontier_);
      const std::size_t ai = matrix_.columns()[pair.absorbed].root;
      const std::size_t aj = matrix_.columns()[pair.into].root;
      if (type2_for(pair, ai, aj) || !assessed_.count(attrs[ai].name) || !assessed_.count(attrs[aj].name)) return;
      merge(pair, ratio_from_coefficients(assessed_.at(attrs[ai].name), assessed_.at(attrs[aj].name)), {});
    }
  }

  void merge(ColumnPair pair, double r, std::vector<Answer> raw) {
    MergeRecord rec;
    rec.absorbed = pair.absorbed;
    rec.into = pair.into;
    rec.absorbed_label = matrix_.columns()[pair.absorbed].label;
    rec.into_label = matrix_.columns()[pair.into].label;
    rec.ratio = r;
    rec.answers = std::move(raw);
    rec.frontier_before = frontier_.surviving.size();

    PlanMatrix merged = merge_attributes(matrix_, pair.absorbed, pair.into, r);
    FrontierResult next = efficient_frontier(merged, problem_->epsilon, frontier_.surviving);
    const std::size_t step = history_.size() + 1;
    for (const auto& [plan, dominator] : next.eliminated) eliminations_.push_back({plan, dominator, step});

    rec.result_label = merged.columns()[pair.into < pair.absorbed ? pair.into : pair.into - 1].label;
    rec.frontier_after = next.surviving.size();
    matrix_ = std::move(merged);
    frontier_ = std::move(next);
    history_.push_back(std::move(rec));
    pending_.reset();
    partial_.clear();
    status_ = decided() ? SessionStatus::done : SessionStatus::active;
  }

  std::shared_ptr<const Problem> problem_;
  PlanMatrix matrix_;
  FrontierResult frontier_;
  std::vector<EliminationRecord> eliminations_;
  std::vector<MergeRecord> history_;
  std::optional<Question> pending_;
  SessionStatus status_ = SessionStatus::active;
  std::map<std::string, double> assessed_;
  std::vector<Answer> partial_;
  std::vector<Answer> answers_;
  std::uint64_t question_counter_ = 0;
};

}  // namespace lazyelicit
