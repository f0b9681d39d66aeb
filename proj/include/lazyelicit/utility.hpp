#pragma once

// Multi-attribute utility primitives: attributes, subutility functions,
// discrete prospects, additive / multilinear / multiplicative models, and
// the local-to-overall dominance inference rules built on them.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lazyelicit/error.hpp"

namespace lazyelicit {

/// A level of an attribute: numeric for continuous (and numeric discrete)
/// attributes, symbolic for labelled discrete levels.
using AttributeValue = std::variant<double, std::string>;

namespace detail {

inline std::string shortest(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string group_thousands(long long v) {
  std::string digits = std::to_string(v < 0 ? -v : v);
  std::string out;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count > 0 && count % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++count;
  }
  if (v < 0) out.push_back('-');
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Renders a value the way a person would write it in a question:
/// integral numbers get thousands separators ("50,000").
inline std::string format_value(const AttributeValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  double x = std::get<double>(value);
  if (std::isfinite(x) && x == std::trunc(x) && std::fabs(x) < 1e15) {
    return detail::group_thousands(static_cast<long long>(x));
  }
  return detail::shortest(x);
}

enum class AttributeKind { discrete, continuous };

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::discrete;
  AttributeValue worst;
  AttributeValue best;
  std::optional<std::string> unit;

  void validate() const {
    if (name.empty()) throw Error(ErrorKind::invalid_argument, "attribute name is empty");
    if (worst == best) {
      throw Error(ErrorKind::invalid_argument,
                  "attribute '" + name + "': worst and best levels coincide");
    }
    if (kind == AttributeKind::continuous) {
      const auto* w = std::get_if<double>(&worst);
      const auto* b = std::get_if<double>(&best);
      if (!w || !b || !std::isfinite(*w) || !std::isfinite(*b)) {
        throw Error(ErrorKind::invalid_argument,
                    "continuous attribute '" + name + "' needs finite numeric worst/best");
      }
    }
  }
};

/// Scaled single-attribute utility u_i with u_i(worst) = 0 and u_i(best) = 1.
class SubutilityFunction {
 public:
  enum class Form { tabulated, piecewise_linear };
  using Point = std::pair<AttributeValue, double>;

  static SubutilityFunction tabulated(std::string owner, std::vector<Point> points) {
    for (std::size_t a = 0; a < points.size(); ++a) {
      for (std::size_t b = a + 1; b < points.size(); ++b) {
        if (points[a].first == points[b].first) {
          throw Error(ErrorKind::invalid_argument,
                      "subutility '" + owner + "': duplicate tabulated value " +
                          format_value(points[a].first));
        }
      }
    }
    return SubutilityFunction(Form::tabulated, std::move(owner), std::move(points));
  }

  static SubutilityFunction piecewise_linear(std::string owner, std::vector<Point> points) {
    if (points.size() < 2) {
      throw Error(ErrorKind::invalid_argument,
                  "subutility '" + owner + "': piecewise-linear form needs >= 2 breakpoints");
    }
    for (std::size_t a = 0; a < points.size(); ++a) {
      if (!std::holds_alternative<double>(points[a].first)) {
        throw Error(ErrorKind::invalid_argument,
                    "subutility '" + owner + "': piecewise-linear breakpoints must be numeric");
      }
      if (a > 0 && !(std::get<double>(points[a - 1].first) < std::get<double>(points[a].first))) {
        throw Error(ErrorKind::invalid_argument,
                    "subutility '" + owner + "': breakpoints must be strictly increasing");
      }
    }
    return SubutilityFunction(Form::piecewise_linear, std::move(owner), std::move(points));
  }

  Form form() const noexcept { return form_; }
  const std::string& owner() const noexcept { return owner_; }
  const std::vector<Point>& points() const noexcept { return points_; }

  std::optional<double> try_evaluate(const AttributeValue& value) const {
    if (form_ == Form::tabulated) {
      for (const auto& [v, u] : points_) {
        if (v == value) return u;
      }
      return std::nullopt;
    }
    const auto* x = std::get_if<double>(&value);
    if (!x) return std::nullopt;
    const double lo = std::get<double>(points_.front().first);
    const double hi = std::get<double>(points_.back().first);
    if (!(*x >= lo && *x <= hi)) return std::nullopt;
    for (std::size_t a = 1; a < points_.size(); ++a) {
      const double x0 = std::get<double>(points_[a - 1].first);
      const double x1 = std::get<double>(points_[a].first);
      if (*x <= x1) {
        if (*x == x1) return points_[a].second;
        const double t = (*x - x0) / (x1 - x0);
        return points_[a - 1].second + t * (points_[a].second - points_[a - 1].second);
      }
    }
    return points_.back().second;
  }

  double evaluate(const AttributeValue& value) const {
    if (auto u = try_evaluate(value)) return *u;
    throw Error(ErrorKind::domain, "attribute '" + owner_ + "': value " + format_value(value) +
                                       " is outside the subutility domain");
  }

  /// Checks the scaling anchors against the attribute definition.
  void validate_against(const Attribute& attribute) const {
    if (attribute.name != owner_) {
      throw Error(ErrorKind::invalid_argument,
                  "subutility owner '" + owner_ + "' does not match attribute '" +
                      attribute.name + "'");
    }
    auto at_worst = try_evaluate(attribute.worst);
    auto at_best = try_evaluate(attribute.best);
    if (!at_worst || std::fabs(*at_worst) > 1e-9 || !at_best || std::fabs(*at_best - 1.0) > 1e-9) {
      throw Error(ErrorKind::invalid_argument,
                  "subutility '" + owner_ + "' must map worst to 0 and best to 1");
    }
  }

 private:
  SubutilityFunction(Form form, std::string owner, std::vector<Point> points)
      : form_(form), owner_(std::move(owner)), points_(std::move(points)) {
    for (const auto& [v, u] : points_) {
      if (!(u >= 0.0 && u <= 1.0)) {
        throw Error(ErrorKind::invalid_argument,
                    "subutility '" + owner_ + "': utility at " + format_value(v) +
                        " is outside [0,1]");
      }
    }
  }

  Form form_;
  std::string owner_;
  std::vector<Point> points_;
};

struct Outcome {
  std::vector<AttributeValue> values;
};

/// Finite discrete distribution over outcomes.
class Prospect {
 public:
  using Entry = std::pair<Outcome, double>;

  Prospect() = default;

  explicit Prospect(std::vector<Entry> support) : support_(std::move(support)) {
    if (support_.empty()) throw Error(ErrorKind::invalid_argument, "prospect has empty support");
    double total = 0.0;
    const std::size_t n = support_.front().first.values.size();
    for (std::size_t a = 0; a < support_.size(); ++a) {
      const auto& [outcome, p] = support_[a];
      if (!(p >= 0.0)) throw Error(ErrorKind::invalid_argument, "negative outcome probability");
      if (outcome.values.size() != n) {
        throw Error(ErrorKind::dimension_mismatch, "prospect outcomes differ in length");
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (support_[b].first.values == outcome.values) {
          throw Error(ErrorKind::invalid_argument, "prospect lists the same outcome twice");
        }
      }
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw Error(ErrorKind::invalid_argument, "prospect probabilities do not sum to 1");
    }
  }

  /// Degenerate prospect: the outcome happens for sure.
  static Prospect certain(Outcome outcome) { return Prospect({{std::move(outcome), 1.0}}); }

  const std::vector<Entry>& support() const noexcept { return support_; }
  std::size_t attribute_count() const noexcept {
    return support_.empty() ? 0 : support_.front().first.values.size();
  }

 private:
  std::vector<Entry> support_;
};

/// Product-form joint distribution built from independent marginals.
inline Prospect product_prospect(
    const std::vector<std::vector<std::pair<AttributeValue, double>>>& marginals) {
  std::vector<Prospect::Entry> support{{Outcome{}, 1.0}};
  for (const auto& marginal : marginals) {
    std::vector<Prospect::Entry> next;
    next.reserve(support.size() * marginal.size());
    for (const auto& [outcome, p] : support) {
      for (const auto& [value, q] : marginal) {
        Outcome o = outcome;
        o.values.push_back(value);
        next.emplace_back(std::move(o), p * q);
      }
    }
    support = std::move(next);
  }
  return Prospect(std::move(support));
}

class AdditiveModel {
 public:
  explicit AdditiveModel(std::vector<double> k) : k_(std::move(k)) {
    double total = 0.0;
    for (double ki : k_) {
      if (!(ki >= 0.0)) throw Error(ErrorKind::invalid_model, "additive weight is negative");
      total += ki;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw Error(ErrorKind::invalid_model, "additive weights do not sum to 1");
    }
  }

  const std::vector<double>& k() const noexcept { return k_; }
  std::size_t size() const noexcept { return k_.size(); }

 private:
  std::vector<double> k_;
};

/// Attribute subset Y, as sorted zero-based attribute indices.
using AttributeSet = std::vector<std::size_t>;

/// u(x) = sum over nonempty Y of k_Y * prod_{i in Y} u_i(x_i).
class MultilinearModel {
 public:
  MultilinearModel(std::size_t attribute_count, std::map<AttributeSet, double> coefficients)
      : n_(attribute_count), coefficients_(std::move(coefficients)) {
    for (const auto& [subset, _] : coefficients_) {
      if (subset.empty()) throw Error(ErrorKind::invalid_model, "empty attribute subset key");
      for (std::size_t a = 0; a < subset.size(); ++a) {
        if (subset[a] >= n_ || (a > 0 && subset[a - 1] >= subset[a])) {
          throw Error(ErrorKind::invalid_model,
                      "subset keys must hold sorted, distinct, in-range attribute indices");
        }
      }
    }
    const std::vector<double> ones(n_, 1.0);
    if (std::fabs(aggregate(ones) - 1.0) > 1e-9) {
      throw Error(ErrorKind::invalid_model, "multilinear model is not scaled: u(best) != 1");
    }
  }

  static MultilinearModel from_additive(const AdditiveModel& model) {
    std::map<AttributeSet, double> c;
    for (std::size_t i = 0; i < model.size(); ++i) c[{i}] = model.k()[i];
    return MultilinearModel(model.size(), std::move(c));
  }

  std::size_t size() const noexcept { return n_; }
  const std::map<AttributeSet, double>& coefficients() const noexcept { return coefficients_; }

  /// h(w) = sum_Y k_Y prod_{i in Y} w_i.
  double aggregate(std::span<const double> w) const {
    if (w.size() != n_) {
      throw Error(ErrorKind::dimension_mismatch, "multilinear model arity differs from vector");
    }
    double total = 0.0;
    for (const auto& [subset, k] : coefficients_) {
      double term = k;
      for (std::size_t i : subset) term *= w[i];
      total += term;
    }
    return total;
  }

 private:
  std::size_t n_;
  std::map<AttributeSet, double> coefficients_;
};

namespace detail {

inline double mui_residual(double k, std::span<const double> k_i) {
  double product = 1.0;
  for (double ki : k_i) product *= 1.0 + k * ki;
  return product - (1.0 + k);
}

}  // namespace detail

/// Master constant k of the multiplicative form: the root of
/// 1 + k = prod(1 + k k_i) with k > -1, or 0 when the k_i sum to one.
inline double solve_multiplicative_k(std::span<const double> k_i) {
  if (k_i.size() < 2) throw Error(ErrorKind::invalid_model, "need at least two scaling constants");
  double total = 0.0;
  for (double ki : k_i) {
    if (!(ki > 0.0 && ki <= 1.0)) {
      throw Error(ErrorKind::invalid_model, "scaling constants must lie in (0,1]");
    }
    total += ki;
  }
  if (std::fabs(total - 1.0) <= 1e-12) return 0.0;

  // The residual is convex in k, zero at k = 0, and its slope there is
  // sum(k_i) - 1, so the other root sits on the opposite side of zero.
  // Bisection keeps residual(positive_end) > 0 and residual(other_end) <= 0.
  double positive_end = 0.0, other_end = 0.0;
  if (total < 1.0) {
    positive_end = 1e6;
    while (detail::mui_residual(positive_end, k_i) <= 0.0) {
      positive_end *= 2.0;
      if (!std::isfinite(positive_end)) {
        throw Error(ErrorKind::invalid_model, "no positive root for k");
      }
    }
  } else {
    positive_end = -1.0 + 1e-12;
    if (detail::mui_residual(positive_end, k_i) <= 0.0) {
      throw Error(ErrorKind::invalid_model, "no root for k in (-1, 0)");
    }
  }
  for (int iter = 0; iter < 4000; ++iter) {
    const double mid = other_end + (positive_end - other_end) / 2.0;
    if (mid == other_end || mid == positive_end) break;
    if (detail::mui_residual(mid, k_i) > 0.0) {
      positive_end = mid;
    } else {
      other_end = mid;
    }
  }
  double k = positive_end;
  if (other_end != 0.0 && std::fabs(detail::mui_residual(other_end, k_i)) <
                              std::fabs(detail::mui_residual(positive_end, k_i))) {
    k = other_end;
  }
  if (std::fabs(detail::mui_residual(k, k_i)) > 1e-9) {
    throw Error(ErrorKind::invalid_model, "multiplicative constant did not converge");
  }
  return k;
}

/// Mutually-utility-independent model (k, k_1..k_n).
class MuiModel {
 public:
  MuiModel(double k, std::vector<double> k_i) : k_(k), k_i_(std::move(k_i)) {
    if (!(k > -1.0)) throw Error(ErrorKind::invalid_model, "master constant must exceed -1");
    double product = 1.0;
    for (double ki : k_i_) {
      if (!(ki >= 0.0 && ki <= 1.0)) {
        throw Error(ErrorKind::invalid_model, "scaling constants must lie in [0,1]");
      }
      product *= 1.0 + k * ki;
    }
    if (std::fabs((1.0 + k) - product) > 1e-9) {
      throw Error(ErrorKind::invalid_model, "1 + k != prod(1 + k k_i)");
    }
  }

  static MuiModel from_scaling_constants(std::vector<double> k_i) {
    const double k = solve_multiplicative_k(k_i);
    return MuiModel(k, std::move(k_i));
  }

  double k() const noexcept { return k_; }
  const std::vector<double>& k_i() const noexcept { return k_i_; }
  bool is_additive() const noexcept { return k_ == 0.0; }

  /// Expands to k_Y = k^{|Y|-1} prod_{i in Y} k_i over every nonempty Y.
  MultilinearModel to_multilinear() const {
    const std::size_t n = k_i_.size();
    if (n >= 32) throw Error(ErrorKind::invalid_argument, "too many attributes to expand");
    std::map<AttributeSet, double> c;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      AttributeSet subset;
      double coef = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) {
          subset.push_back(i);
          coef *= k_i_[i];
        }
      }
      coef *= std::pow(k_, static_cast<double>(subset.size() - 1));
      c.emplace(std::move(subset), coef);
    }
    return MultilinearModel(n, std::move(c));
  }

 private:
  double k_;
  std::vector<double> k_i_;
};

/// w_i = E[u_i(x_i)] under the prospect.
inline std::vector<double> expected_subutilities(const Prospect& prospect,
                                                 std::span<const SubutilityFunction> subutilities) {
  const std::size_t n = subutilities.size();
  if (prospect.attribute_count() != n) {
    throw Error(ErrorKind::dimension_mismatch, "prospect arity differs from subutility count");
  }
  std::vector<double> w(n, 0.0);
  for (const auto& [outcome, p] : prospect.support()) {
    for (std::size_t i = 0; i < n; ++i) w[i] += p * subutilities[i].evaluate(outcome.values[i]);
  }
  return w;
}

inline double additive_expected_utility(const AdditiveModel& model, std::span<const double> w) {
  if (w.size() != model.size()) {
    throw Error(ErrorKind::dimension_mismatch, "weight and subutility vectors differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += model.k()[i] * w[i];
  return total;
}

inline double multilinear_aggregator_h(std::span<const double> w, const MultilinearModel& model) {
  return model.aggregate(w);
}

/// Expectation of the multilinear utility over the full joint distribution.
inline double multilinear_expected_utility(const Prospect& prospect, const MultilinearModel& model,
                                           std::span<const SubutilityFunction> subutilities) {
  const std::size_t n = subutilities.size();
  if (prospect.attribute_count() != n || model.size() != n) {
    throw Error(ErrorKind::dimension_mismatch, "prospect, model and subutilities disagree on n");
  }
  double total = 0.0;
  std::vector<double> u(n);
  for (const auto& [outcome, p] : prospect.support()) {
    for (std::size_t i = 0; i < n; ++i) u[i] = subutilities[i].evaluate(outcome.values[i]);
    total += p * model.aggregate(u);
  }
  return total;
}

enum class DominanceRelation { strict, weak_equal, none };
enum class DominanceBasis { componentwise, additive, multilinear_independent, refused_dependent_multilinear };
enum class ModelClass { additive, multilinear };

struct DominanceVerdict {
  DominanceRelation relation = DominanceRelation::none;
  DominanceBasis basis = DominanceBasis::componentwise;

  friend bool operator==(const DominanceVerdict&, const DominanceVerdict&) = default;
};

/// Local dominance of a over b on every coordinate, with tolerance epsilon.
inline DominanceVerdict componentwise_dominates(std::span<const double> a, std::span<const double> b,
                                                double epsilon = 0.0) {
  if (a.size() != b.size()) throw Error(ErrorKind::dimension_mismatch, "vectors differ in length");
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be >= 0");
  bool all_equal = true, all_ge = true, some_gt = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::fabs(a[i] - b[i]) > epsilon) all_equal = false;
    if (a[i] < b[i] - epsilon) all_ge = false;
    if (a[i] > b[i] + epsilon) some_gt = true;
  }
  if (all_ge && some_gt) return {DominanceRelation::strict, DominanceBasis::componentwise};
  if (all_equal) return {DominanceRelation::weak_equal, DominanceBasis::componentwise};
  return {DominanceRelation::none, DominanceBasis::componentwise};
}

/// Lifts componentwise dominance to overall dominance where the model
/// class allows it. A multilinear model without declared probabilistic
/// independence can reverse the local verdict, so the inference is refused.
inline DominanceVerdict infer_overall_dominance(std::span<const double> a, std::span<const double> b,
                                                ModelClass model_class, bool independence_declared,
                                                double epsilon = 0.0) {
  DominanceVerdict v = componentwise_dominates(a, b, epsilon);
  if (model_class == ModelClass::additive) {
    v.basis = DominanceBasis::additive;
  } else if (independence_declared) {
    v.basis = DominanceBasis::multilinear_independent;
  } else {
    v = {DominanceRelation::none, DominanceBasis::refused_dependent_multilinear};
  }
  return v;
}

inline const char* to_string(DominanceRelation r) {
  switch (r) {
    case DominanceRelation::strict: return "strict";
    case DominanceRelation::weak_equal: return "weak-equal";
    case DominanceRelation::none: return "none";
  }
  return "none";
}

inline const char* to_string(DominanceBasis b) {
  switch (b) {
    case DominanceBasis::componentwise: return "componentwise";
    case DominanceBasis::additive: return "additive";
    case DominanceBasis::multilinear_independent: return "multilinear-independent";
    case DominanceBasis::refused_dependent_multilinear: return "refused-dependent-multilinear";
  }
  return "componentwise";
}

}  // namespace lazyelicit
