#pragma once

// File and wire formats: plan-matrix CSV, attribute schema JSON, answer
// scripts, session / report JSON, and the anytime-curve CSV.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lazyelicit/elicitation.hpp"
#include "lazyelicit/error.hpp"
#include "lazyelicit/frontier.hpp"
#include "lazyelicit/simharness.hpp"
#include "lazyelicit/utility.hpp"

namespace lazyelicit::io {

using nlohmann::json;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.emplace_back(trim(cell));
  return cells;
}

inline double parse_double(std::string_view text, const std::string& where) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(x)) {
    throw Error(ErrorKind::invalid_argument, where + ": '" + std::string(text) + "' is not a number");
  }
  return x;
}

inline std::string fmt(double x) { return lazyelicit::detail::shortest(x); }

}  // namespace detail

/// Header `plan_id,<attr1>,...,<attrN>`, one row per plan. The plan_id cell
/// becomes the plan label; plan ids are row indices from 0.
inline PlanMatrix read_plan_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = detail::split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorKind::invalid_argument, "plan CSV: missing header row");
  if (!header.front().empty() && static_cast<unsigned char>(header.front()[0]) == 0xEF) {
    header.front().erase(0, 3);  // UTF-8 byte order mark
  }
  if (header.front() != "plan_id") {
    throw Error(ErrorKind::invalid_argument, "plan CSV: first header cell must be 'plan_id'");
  }
  if (header.size() < 2) throw Error(ErrorKind::invalid_argument, "plan CSV: no attribute columns");
  std::vector<std::string> columns(header.begin() + 1, header.end());

  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    const std::string where = "plan CSV line " + std::to_string(line_no);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::dimension_mismatch, where + ": expected " + std::to_string(header.size()) +
                                                     " cells, found " + std::to_string(cells.size()));
    }
    labels.push_back(cells.front());
    std::vector<double> w;
    for (std::size_t c = 1; c < cells.size(); ++c) w.push_back(detail::parse_double(cells[c], where));
    rows.push_back(std::move(w));
  }
  return PlanMatrix::from_rows(rows, std::move(columns), std::move(labels));
}

inline PlanMatrix read_plan_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_argument, "cannot open plan CSV '" + path + "'");
  return read_plan_csv(in);
}

inline std::string plan_csv(const PlanMatrix& matrix) {
  std::string out = "plan_id";
  for (const auto& c : matrix.columns()) out += "," + c.label;
  out += "\n";
  for (const auto& p : matrix.plans()) {
    out += p.label;
    for (double x : p.w) out += "," + detail::fmt(x);
    out += "\n";
  }
  return out;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_argument, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, path + ": " + e.what());
  }
}

inline AttributeValue value_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorKind::invalid_argument, where + ": attribute value must be a number or string");
}

inline json to_json(const AttributeValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

struct Schema {
  std::vector<Attribute> attributes;
  std::vector<SubutilityFunction> subutilities;
};

/// Either a bare array of attribute objects or {"attributes": [...]}; each
/// object is {name, kind, worst, best, unit?, subutility: {type, points}}.
inline Schema schema_from_json(const json& doc) {
  const json& list = doc.is_object() && doc.contains("attributes") ? doc.at("attributes") : doc;
  if (!list.is_array() || list.empty()) {
    throw Error(ErrorKind::invalid_argument, "attribute schema must be a nonempty array");
  }
  Schema schema;
  for (const auto& a : list) {
    try {
      Attribute attr;
      attr.name = a.at("name").get<std::string>();
      const std::string where = "attribute '" + attr.name + "'";
      const auto kind = a.value("kind", std::string("discrete"));
      if (kind == "discrete") {
        attr.kind = AttributeKind::discrete;
      } else if (kind == "continuous") {
        attr.kind = AttributeKind::continuous;
      } else {
        throw Error(ErrorKind::invalid_argument, where + ": unknown kind '" + kind + "'");
      }
      attr.worst = value_from_json(a.at("worst"), where);
      attr.best = value_from_json(a.at("best"), where);
      if (a.contains("unit") && a.at("unit").is_string()) attr.unit = a.at("unit").get<std::string>();
      attr.validate();

      const auto& su = a.at("subutility");
      const auto type = su.at("type").get<std::string>();
      std::vector<SubutilityFunction::Point> points;
      for (const auto& pt : su.at("points")) {
        if (!pt.is_array() || pt.size() != 2) {
          throw Error(ErrorKind::invalid_argument, where + ": subutility points are [value, utility]");
        }
        points.emplace_back(value_from_json(pt[0], where), pt[1].get<double>());
      }
      auto fn = type == "tabulated"          ? SubutilityFunction::tabulated(attr.name, std::move(points))
                : type == "piecewise_linear" ? SubutilityFunction::piecewise_linear(attr.name, std::move(points))
                                             : throw Error(ErrorKind::invalid_argument,
                                                           where + ": unknown subutility type '" + type + "'");
      fn.validate_against(attr);
      schema.attributes.push_back(std::move(attr));
      schema.subutilities.push_back(std::move(fn));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::invalid_argument, std::string("attribute schema: ") + e.what());
    }
  }
  return schema;
}

inline json to_json(const Attribute& a, const SubutilityFunction& f) {
  json points = json::array();
  for (const auto& [v, u] : f.points()) points.push_back({to_json(v), u});
  json j = {{"name", a.name},
            {"kind", a.kind == AttributeKind::continuous ? "continuous" : "discrete"},
            {"worst", to_json(a.worst)},
            {"best", to_json(a.best)},
            {"subutility",
             {{"type", f.form() == SubutilityFunction::Form::tabulated ? "tabulated" : "piecewise_linear"},
              {"points", points}}}};
  if (a.unit) j["unit"] = *a.unit;
  return j;
}

inline json to_json(const Schema& s) {
  json out = json::array();
  for (std::size_t i = 0; i < s.attributes.size(); ++i) out.push_back(to_json(s.attributes[i], s.subutilities[i]));
  return out;
}

inline Problem make_problem(PlanMatrix plans, Schema schema, double epsilon) {
  if (plans.column_count() != schema.attributes.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "plans have " + std::to_string(plans.column_count()) + " columns but " +
                    std::to_string(schema.attributes.size()) + " attributes are defined");
  }
  for (std::size_t c = 0; c < plans.column_count(); ++c) {
    if (plans.columns()[c].label != schema.attributes[c].name) {
      throw Error(ErrorKind::dimension_mismatch, "plan column '" + plans.columns()[c].label +
                                                     "' does not match attribute '" +
                                                     schema.attributes[c].name + "'");
    }
  }
  Problem p{std::move(schema.attributes), std::move(schema.subutilities), std::move(plans), epsilon};
  return p;
}

/// Inline plans: [{label, w: [...]}] or [{label, prospect: [{outcome: [...], p}]}].
/// Prospects are reduced to their expected subutilities.
inline PlanMatrix plans_from_json(const json& list, const Schema& schema) {
  if (!list.is_array()) throw Error(ErrorKind::invalid_argument, "plans must be an array");
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (std::size_t r = 0; r < list.size(); ++r) {
    const auto& p = list[r];
    const std::string where = "plan " + std::to_string(r);
    try {
      labels.push_back(p.contains("label") ? p.at("label").get<std::string>() : std::to_string(r));
      if (p.contains("w")) {
        rows.push_back(p.at("w").get<std::vector<double>>());
      } else if (p.contains("prospect")) {
        std::vector<Prospect::Entry> support;
        for (const auto& e : p.at("prospect")) {
          Outcome o;
          for (const auto& v : e.at("outcome")) o.values.push_back(value_from_json(v, where));
          support.emplace_back(std::move(o), e.at("p").get<double>());
        }
        rows.push_back(expected_subutilities(Prospect(std::move(support)), schema.subutilities));
      } else {
        throw Error(ErrorKind::invalid_argument, where + ": needs 'w' or 'prospect'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::invalid_argument, where + ": " + e.what());
    }
  }
  std::vector<std::string> names;
  for (const auto& a : schema.attributes) names.push_back(a.name);
  return PlanMatrix::from_rows(rows, std::move(names), std::move(labels));
}

inline json to_json(const MergeTree& t, const std::vector<Attribute>& attrs) {
  if (t.attribute) return {{"attribute", attrs[*t.attribute].name}};
  return {{"ratio", t.ratio}, {"absorbed", to_json(*t.absorbed, attrs)}, {"into", to_json(*t.into, attrs)}};
}

inline json to_json(const Answer& a) {
  json j;
  if (const auto* p = std::get_if<ProbabilityAnswer>(&a.body)) {
    j = {{"type", "probability"}, {"p", p->p}};
  } else if (const auto* m = std::get_if<MatchingValueAnswer>(&a.body)) {
    j = {{"type", "matching_value"}, {"value", to_json(m->value)}};
  } else {
    const auto& d = std::get<DirectRatioAnswer>(a.body);
    j = {{"type", "direct_ratio"}, {"r", d.r}};
    if (d.pair) j["pair"] = {d.pair->absorbed, d.pair->into};
  }
  if (a.question_id) j["question_id"] = *a.question_id;
  return j;
}

/// Structural parse only; value ranges are checked by the session.
inline Answer answer_from_json(const json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorKind::invalid_argument, "answer must be a JSON object");
    Answer a;
    const auto type = j.at("type").get<std::string>();
    if (type == "probability") {
      a.body = ProbabilityAnswer{j.at("p").get<double>()};
    } else if (type == "matching_value") {
      a.body = MatchingValueAnswer{value_from_json(j.at("value"), "answer")};
    } else if (type == "direct_ratio") {
      DirectRatioAnswer d{j.at("r").get<double>(), std::nullopt};
      if (j.contains("pair") && !j.at("pair").is_null()) {
        const auto pair = j.at("pair").get<std::vector<std::size_t>>();
        if (pair.size() != 2) throw Error(ErrorKind::invalid_argument, "pair must have two columns");
        d.pair = ColumnPair{pair[0], pair[1]};
      }
      a.body = d;
    } else {
      throw Error(ErrorKind::invalid_argument, "unknown answer type '" + type + "'");
    }
    if (j.contains("question_id") && !j.at("question_id").is_null()) {
      a.question_id = j.at("question_id").get<std::uint64_t>();
    }
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, std::string("malformed answer: ") + e.what());
  }
}

inline std::vector<Answer> answers_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::invalid_argument, "answer script must be a JSON array");
  std::vector<Answer> out;
  for (const auto& a : j) out.push_back(answer_from_json(a));
  return out;
}

inline json to_json(const Question& q, const Problem& problem, const PlanMatrix& matrix) {
  const auto& attrs = problem.attributes;
  json j = {{"id", q.id},
            {"pair", {q.pair.absorbed, q.pair.into}},
            {"columns", {matrix.columns()[q.pair.absorbed].label, matrix.columns()[q.pair.into].label}},
            {"text", q.text}};
  if (const auto* t1 = std::get_if<TypeIQuestion>(&q.body)) {
    j["type"] = "type1";
    j["attribute"] = attrs[t1->attribute].name;
    json best = json::object(), worst = json::object(), certain = json::object();
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      best[attrs[i].name] = to_json(attrs[i].best);
      worst[attrs[i].name] = to_json(attrs[i].worst);
      certain[attrs[i].name] = to_json(i == t1->attribute ? attrs[i].best : attrs[i].worst);
    }
    j["lottery"] = {{"best", best}, {"worst", worst}};
    j["certain_outcome"] = certain;
  } else {
    const auto& t2 = std::get<TypeIIQuestion>(q.body);
    j["type"] = "type2";
    j["probe_attribute"] = attrs[t2.probe_attribute].name;
    j["match_attribute"] = attrs[t2.match_attribute].name;
    j["probe_value"] = t2.probe_value;
    j["probe_utility"] = t2.probe_utility;
  }
  return j;
}

inline json to_json(const MergeRecord& m) {
  json answers = json::array();
  for (const auto& a : m.answers) answers.push_back(to_json(a));
  return {{"absorbed", m.absorbed},         {"into", m.into},
          {"absorbed_label", m.absorbed_label}, {"into_label", m.into_label},
          {"ratio", m.ratio},               {"result_label", m.result_label},
          {"answers", answers},             {"frontier_before", m.frontier_before},
          {"frontier_after", m.frontier_after}};
}

inline json to_json(const EliminationRecord& e) {
  return {{"plan", e.plan}, {"dominator", e.dominator}, {"step", e.step}};
}

inline json columns_json(const PlanMatrix& matrix, const std::vector<Attribute>& attrs) {
  json cols = json::array();
  for (const auto& c : matrix.columns()) {
    json members = json::array();
    for (auto m : c.members) members.push_back(attrs[m].name);
    cols.push_back({{"label", c.label},
                    {"members", members},
                    {"coefficients", c.coefficients},
                    {"ratio_tree", to_json(*c.tree, attrs)}});
  }
  return cols;
}

inline json to_json(const ElicitationSession& s) {
  const auto& attrs = s.problem().attributes;
  json frontier_labels = json::array();
  for (auto id : s.frontier().surviving) frontier_labels.push_back(s.matrix().plan(id).label);
  json plans = json::array();
  for (const auto& p : s.matrix().plans()) plans.push_back({{"id", p.id}, {"label", p.label}, {"w", p.w}});
  json history = json::array();
  for (const auto& m : s.history()) history.push_back(to_json(m));
  json eliminated = json::array();
  for (const auto& e : s.eliminations()) eliminated.push_back(to_json(e));
  json answers = json::array();
  for (const auto& a : s.answers()) answers.push_back(to_json(a));
  return {{"status", to_string(s.status())},
          {"decided", s.decided()},
          {"columns", columns_json(s.matrix(), attrs)},
          {"frontier", s.frontier().surviving},
          {"frontier_labels", frontier_labels},
          {"eliminated", eliminated},
          {"history", history},
          {"pending_question",
           s.pending() ? to_json(*s.pending(), s.problem(), s.matrix()) : json(nullptr)},
          {"assessed_coefficients", s.assessed_coefficients()},
          {"answers", answers},
          {"plans", plans},
          {"epsilon", s.problem().epsilon}};
}

inline json to_json(const FinalReport& r, const std::vector<Attribute>& attrs) {
  json history = json::array();
  for (const auto& m : r.history) history.push_back(to_json(m));
  json eliminated = json::array();
  for (const auto& e : r.eliminations) eliminated.push_back(to_json(e));
  json k = nullptr;
  if (r.k) {
    k = json::object();
    for (std::size_t i = 0; i < attrs.size(); ++i) k[attrs[i].name] = (*r.k)[i];
  }
  return {{"surviving", r.surviving},
          {"surviving_labels", r.surviving_labels},
          {"history", history},
          {"eliminated", eliminated},
          {"assessed_coefficients", r.assessed_coefficients},
          {"k", k},
          {"warnings", r.warnings}};
}

inline json to_json(const FrontierResult& f, const PlanMatrix& matrix) {
  json labels = json::array();
  for (auto id : f.surviving) labels.push_back(matrix.plan(id).label);
  json eliminated = json::array();
  for (const auto& [plan, dominator] : f.eliminated) {
    eliminated.push_back({{"plan", plan}, {"dominator", dominator}});
  }
  return {{"surviving", f.surviving}, {"surviving_labels", labels}, {"eliminated", eliminated}};
}

inline json to_json(const sim::TrialConfig& c) {
  json grid = json::array();
  for (const auto& d : c.grid) grid.push_back({{"m", d.m}, {"n", d.n}});
  json strategies = json::array();
  for (auto s : c.strategies) strategies.push_back(sim::to_string(s));
  return {{"grid", grid}, {"trials", c.trials}, {"seed", c.seed}, {"strategies", strategies},
          {"epsilon", c.epsilon}};
}

inline json to_json(const sim::ExperimentReport& r) {
  json strategies = json::array();
  for (const auto& s : r.strategies) {
    strategies.push_back({{"strategy", sim::to_string(s.strategy)},
                          {"mean_competitive_ratio", s.mean_competitive_ratio},
                          {"mean_eliminated", s.mean_eliminated},
                          {"fraction_matching_opt", s.fraction_matching_opt},
                          {"fraction_above_average", s.fraction_above_average}});
  }
  json h2h = json::array();
  for (const auto& h : r.head_to_head) {
    h2h.push_back({{"first", sim::to_string(h.first)},
                   {"second", sim::to_string(h.second)},
                   {"wins", h.wins},
                   {"ties", h.ties},
                   {"losses", h.losses},
                   {"win_fraction", h.win_fraction}});
  }
  json trials = json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"trial", t.trial},
                      {"m", t.dims.m},
                      {"n", t.dims.n},
                      {"initial_frontier", t.initial_frontier},
                      {"rcc_pair", {t.rcc_pair.absorbed, t.rcc_pair.into}},
                      {"rand_pair", {t.rand_pair.absorbed, t.rand_pair.into}},
                      {"opt_pair", {t.opt_pair.absorbed, t.opt_pair.into}},
                      {"rcc", t.rcc},
                      {"rand", t.rand},
                      {"opt", t.opt},
                      {"average", t.average}});
  }
  return {{"config", to_json(r.config)},
          {"strategies", strategies},
          {"head_to_head", h2h},
          {"included_trials", r.included_trials},
          {"excluded_trials", r.excluded_trials},
          {"trials", trials}};
}

inline json to_json(const sim::AnytimeCurves& c) {
  json trials = json::array();
  for (const auto& t : c.trials) {
    trials.push_back({{"trial", t.trial}, {"m", t.dims.m}, {"n", t.dims.n}, {"rcc", t.rcc},
                      {"rand", t.rand}, {"argmax_count", t.argmax_count}});
  }
  return {{"config", to_json(c.config)},
          {"rcc", c.rcc},
          {"rand", c.rand},
          {"mean_argmax_count", c.mean_argmax_count},
          {"trials", trials}};
}

/// `merge_count,strategy,mean_frontier_size,trials`
inline std::string anytime_csv(const sim::AnytimeCurves& c) {
  std::string out = "merge_count,strategy,mean_frontier_size,trials\n";
  const auto trials = std::to_string(c.trials.size());
  for (std::size_t s = 0; s < c.rcc.size(); ++s) {
    out += std::to_string(s) + ",RCC," + detail::fmt(c.rcc[s]) + "," + trials + "\n";
    out += std::to_string(s) + ",RAND," + detail::fmt(c.rand[s]) + "," + trials + "\n";
  }
  return out;
}

}  // namespace lazyelicit::io
