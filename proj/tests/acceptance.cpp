// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lazyelicit/elicitation.hpp"
#include "lazyelicit/frontier.hpp"
#include "lazyelicit/io.hpp"
#include "lazyelicit/simharness.hpp"
#include "lazyelicit/utility.hpp"
#include "support.hpp"

using namespace lazyelicit;
namespace sim = lazyelicit::sim;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool condition, const std::string& what) {
    if (!condition) {
      if (!ok) detail << "; ";
      detail << what;
      ok = false;
    }
  }
};

int failures = 0;

void report(const std::string& name, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail << "exception: " << e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!c.ok) ++failures;
  std::printf("%s  %-34s %7.2fs  %s\n", c.ok ? "PASS" : "FAIL", name.c_str(), secs, c.detail.str().c_str());
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

bool within(double x, double target, double tol) { return std::fabs(x - target) <= tol; }

std::vector<std::vector<double>> uniform_rows(SplitMix64& rng, std::size_t m, std::size_t n) {
  std::vector<std::vector<double>> rows(m, std::vector<double>(n));
  for (auto& r : rows) {
    for (auto& x : r) x = rng.uniform();
  }
  return rows;
}

std::vector<double> uniform_k(SplitMix64& rng, std::size_t n) {
  std::vector<double> k(n);
  for (auto& x : k) x = rng.uniform() + 1e-12;
  const double total = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& x : k) x /= total;
  return k;
}

void counterexample(Check& c) {
  const std::vector<SubutilityFunction> u{
      SubutilityFunction::tabulated("Y", {{std::string("y1"), 1.0}, {std::string("y2"), 0.0},
                                          {std::string("y3"), 1.0 / 3}}),
      SubutilityFunction::tabulated("Z", {{std::string("z1"), 0.0}, {std::string("z2"), 1.0},
                                          {std::string("z3"), 1.0 / 3}})};
  auto row = [](int i) {
    return Outcome{{std::string("y") + std::to_string(i), std::string("z") + std::to_string(i)}};
  };
  const Prospect f1({{row(1), 0.5}, {row(2), 0.5}});
  const Prospect f2({{row(1), 0.25}, {row(2), 0.25}, {row(3), 0.5}});
  const MultilinearModel product(2, {{{0, 1}, 1.0}});

  using test::Fraction;
  const Fraction w1 = Fraction(1, 2) * Fraction(1) + Fraction(1, 2) * Fraction(0);
  const Fraction w2 = Fraction(1, 4) * Fraction(1) + Fraction(1, 4) * Fraction(0) + Fraction(1, 2) * Fraction(1, 3);
  const Fraction e1 = Fraction(1, 2) * Fraction(1) * Fraction(0) + Fraction(1, 2) * Fraction(0) * Fraction(1);
  const Fraction e2 = Fraction(1, 2) * Fraction(1, 3) * Fraction(1, 3);
  c.expect(w1 == Fraction(1, 2) && w2 == Fraction(5, 12) && e1 == Fraction(0) && e2 == Fraction(1, 18),
           "rational oracle disagrees with the table");

  const auto a = expected_subutilities(f1, u), b = expected_subutilities(f2, u);
  for (int i = 0; i < 2; ++i) {
    c.expect(within(a[i], w1.value(), 1e-12), "E_f1[u_i] = " + fmt(a[i]));
    c.expect(within(b[i], w2.value(), 1e-12), "E_f2[u_i] = " + fmt(b[i]));
  }
  const double u1 = multilinear_expected_utility(f1, product, u), u2 = multilinear_expected_utility(f2, product, u);
  c.expect(within(u1, e1.value(), 1e-12), "E_f1[u] = " + fmt(u1));
  c.expect(within(u2, e2.value(), 1e-12), "E_f2[u] = " + fmt(u2));
  c.expect(componentwise_dominates(a, b).relation == DominanceRelation::strict, "componentwise verdict not strict");
  const auto v = infer_overall_dominance(a, b, ModelClass::multilinear, false);
  c.expect(v.relation == DominanceRelation::none && v.basis == DominanceBasis::refused_dependent_multilinear,
           "dependent multilinear inference not refused");
  if (c.ok) c.detail << "(1/2,1/2) vs (5/12,5/12); E[u] 0 vs 1/18; refused";
}

void rcc_values(Check& c) {
  const Ranking a{{1, 2, 3, 4}}, b{{1, 3, 4, 2}}, d{{4, 2, 1, 3}};
  c.expect(rcc(a, b) == 0.4, "rho(a,b) = " + fmt(rcc(a, b)));
  c.expect(rcc(a, d) == -0.4, "rho(a,c) = " + fmt(rcc(a, d)));
  if (c.ok) c.detail << "0.4 and -0.4 exactly";
}

void headline(Check& c) {
  sim::TrialConfig config;
  config.grid = sim::TrialConfig::published_grid();
  config.trials = 500;
  config.seed = 0;
  const auto r = sim::run_first_merge_comparison(config);
  const double rcc_ratio = r.summary(sim::Strategy::rcc).mean_competitive_ratio;
  const double rand_ratio = r.summary(sim::Strategy::rand).mean_competitive_ratio;
  const double beats = r.versus(sim::Strategy::rcc, sim::Strategy::rand).win_fraction;
  const double matches = r.summary(sim::Strategy::rcc).fraction_matching_opt;
  const double above = r.summary(sim::Strategy::rcc).fraction_above_average;
  c.detail << "RCC " << fmt(rcc_ratio) << " RAND " << fmt(rand_ratio) << " beats " << fmt(beats) << " matches "
           << fmt(matches) << " above " << fmt(above) << " (n=" << r.included_trials << ")";
  auto gate = [&](bool ok, const char* what) {
    if (!ok) {
      c.ok = false;
      c.detail << " [" << what << " out of tolerance]";
    }
  };
  gate(within(rcc_ratio, 0.89, 0.05), "RCC ratio 0.89+-0.05");
  gate(within(rand_ratio, 0.65, 0.07), "RAND ratio 0.65+-0.07");
  gate(within(beats, 0.85, 0.05), "RCC>RAND 85%+-5");
  gate(within(matches, 0.37, 0.07), "RCC=OPT 37%+-7");
  gate(within(above, 0.92, 0.05), "RCC>avg 92%+-5");
}

void anytime_shape(Check& c) {
  sim::TrialConfig config;
  config.grid = {{50, 6}};
  config.trials = 500;
  config.seed = 0;
  config.strategies = {sim::Strategy::rcc, sim::Strategy::rand};
  const auto curves = sim::run_anytime_experiment(config);
  c.expect(curves.rcc.size() == 6, "expected 6 curve points");
  for (std::size_t s = 1; s < curves.rcc.size(); ++s) {
    c.expect(curves.rcc[s] <= curves.rand[s], "RCC above RAND at merge " + std::to_string(s));
    c.expect(curves.rcc[s] <= curves.rcc[s - 1], "RCC curve rises at " + std::to_string(s));
    c.expect(curves.rand[s] <= curves.rand[s - 1], "RAND curve rises at " + std::to_string(s));
  }
  c.expect(curves.rcc.back() == curves.mean_argmax_count, "RCC end != argmax mean");
  c.expect(curves.rand.back() == curves.mean_argmax_count, "RAND end != argmax mean");
  c.detail << " RCC";
  for (double x : curves.rcc) c.detail << " " << fmt(x);
  c.detail << " | RAND";
  for (double x : curves.rand) c.detail << " " << fmt(x);
}

void frontier_oracle(Check& c) {
  std::size_t mismatches = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    auto rng = SplitMix64::stream(1, t);
    const std::size_t m = 1 + rng.below(12), n = 1 + rng.below(5);
    auto rows = uniform_rows(rng, m, n);
    if (t % 2) {  // coarse grid so ties and duplicates occur
      for (auto& r : rows) {
        for (auto& x : r) x = std::floor(x * 4) / 4;
      }
    }
    const auto f = efficient_frontier(PlanMatrix::from_rows(rows));
    if (std::set<PlanId>(f.surviving.begin(), f.surviving.end()) != test::brute_force_frontier(rows)) ++mismatches;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " mismatching instances");
  if (c.ok) c.detail << "1000 instances identical";
}

void additive_soundness(Check& c) {
  std::size_t violations = 0, eliminated = 0;
  for (std::uint64_t t = 0; t < 500; ++t) {
    auto rng = SplitMix64::stream(2, t);
    const std::size_t m = 5 + rng.below(40), n = 2 + rng.below(5);
    const auto rows = uniform_rows(rng, m, n);
    const auto f = efficient_frontier(PlanMatrix::from_rows(rows));
    eliminated += f.eliminated.size();
    for (int s = 0; s < 100; ++s) {
      const auto k = uniform_k(rng, n);
      auto eu = [&](std::size_t p) {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) total += k[i] * rows[p][i];
        return total;
      };
      double best_survivor = -1;
      for (auto id : f.surviving) best_survivor = std::max(best_survivor, eu(id));
      for (const auto& [plan, _] : f.eliminated) {
        if (best_survivor < eu(plan) - 1e-12) ++violations;
      }
    }
  }
  c.expect(violations == 0, std::to_string(violations) + " violations");
  if (c.ok) c.detail << eliminated << " eliminated plans x 100 k vectors";
}

void product_property(Check& c) {
  double worst = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto rng = SplitMix64::stream(3, t);
    const std::size_t n = 2 + rng.below(4);
    std::vector<SubutilityFunction> u;
    std::vector<std::vector<std::pair<AttributeValue, double>>> marginals;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string name = "A" + std::to_string(i);
      u.push_back(SubutilityFunction::piecewise_linear(name, {{0.0, 0.0}, {0.5, rng.uniform()}, {1.0, 1.0}}));
      std::vector<std::pair<AttributeValue, double>> m;
      const std::size_t levels = 2 + rng.below(3);
      double total = 0;
      for (std::size_t l = 0; l < levels; ++l) {
        m.emplace_back(static_cast<double>(l) / static_cast<double>(levels - 1), rng.uniform() + 1e-3);
        total += m.back().second;
      }
      for (auto& [_, p] : m) p /= total;
      marginals.push_back(std::move(m));
    }
    std::vector<double> ki(n);
    for (auto& x : ki) x = 0.02 + 0.96 * rng.uniform();
    const auto model = MuiModel::from_scaling_constants(ki).to_multilinear();
    const auto joint = product_prospect(marginals);
    const double eu = multilinear_expected_utility(joint, model, u);
    const double h = multilinear_aggregator_h(expected_subutilities(joint, u), model);
    worst = std::max(worst, std::fabs(eu - h));
  }
  c.expect(worst <= 1e-9, "max |E[u] - h(w)| = " + std::to_string(worst));
  if (c.ok) c.detail << "max |E[u] - h(w)| = " << worst;
}

void mui_solver(Check& c) {
  const double k = solve_multiplicative_k(std::vector<double>{0.4, 0.4});
  c.expect(within(k, 1.25, 1e-9), "k(0.4,0.4) = " + fmt(k));
  double worst = 0;
  std::size_t sign_errors = 0;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    auto rng = SplitMix64::stream(4, t);
    std::vector<double> ki(2 + rng.below(7));
    for (auto& x : ki) x = 1e-3 + (1 - 1e-3) * rng.uniform();
    const double root = solve_multiplicative_k(ki);
    double product = 1;
    for (double x : ki) product *= 1 + root * x;
    worst = std::max(worst, std::fabs(1 + root - product));
    const double total = std::accumulate(ki.begin(), ki.end(), 0.0);
    if (total < 1 - 1e-12 && !(root > 0)) ++sign_errors;
    if (total > 1 + 1e-12 && !(root < 0 && root > -1)) ++sign_errors;
  }
  c.expect(worst <= 1e-9, "max residual " + std::to_string(worst));
  c.expect(sign_errors == 0, std::to_string(sign_errors) + " sign violations");
  if (c.ok) c.detail << "k(0.4,0.4) = " << fmt(k) << ", max residual " << worst;
}

void full_merge(Check& c) {
  std::size_t mismatches = 0;
  for (std::uint64_t t = 0; t < 500; ++t) {
    auto rng = SplitMix64::stream(5, t);
    const std::size_t m = 2 + rng.below(60), n = 2 + rng.below(7);
    const auto inst = sim::generate_instance(m, n, rng);
    auto matrix = inst.matrix();
    while (matrix.column_count() > 1) {
      const auto pair = sim::random_pair(matrix.column_count(), rng);
      matrix = merge_attributes(matrix, pair.absorbed, pair.into, sim::true_ratio(inst, matrix, pair));
    }
    std::set<PlanId> merged_argmax, truth;
    double top = -1;
    for (const auto& p : matrix.plans()) top = std::max(top, p.w[0]);
    for (const auto& p : matrix.plans()) {
      if (p.w[0] == top) merged_argmax.insert(p.id);
    }
    double best = -1;
    for (std::size_t p = 0; p < m; ++p) best = std::max(best, inst.expected_utility(p));
    for (std::size_t p = 0; p < m; ++p) {
      if (inst.expected_utility(p) == best) truth.insert(p);
    }
    if (merged_argmax != truth) ++mismatches;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " instances with a different argmax set");
  if (c.ok) c.detail << "500 instances";
}

void dvt_substitute(Check& c) {
  const auto problem = io::make_problem(
      io::read_plan_csv_file(test::fixture("dvt_plans.csv")),
      io::schema_from_json(io::read_json_file(test::fixture("dvt_attrs.json"))), 0.0);
  const std::string expected =
      "For what probability p are you indifferent between a lottery that yields either the outcome "
      "⟨DEATH = 0, BLEED = 0, PE = 0, COST = 0⟩ with probability p and outcome "
      "⟨DEATH = 1, BLEED = 1, PE = 1, COST = 50,000⟩ with probability 1 - p, and the certain outcome "
      "⟨DEATH = 1, BLEED = 0, PE = 1, COST = 50,000⟩?";
  const auto [s, q] = ElicitationSession::start(problem).next_question();
  c.expect(q.text == expected, "question text differs: " + q.text);
  const double r = ratio_from_coefficients(coefficient_from_type1(0.01), coefficient_from_type1(0.02));
  c.expect(r == 0.5, "ratio = " + fmt(r));
  if (c.ok) c.detail << "BLEED question verbatim; ratio 0.5";
}

void determinism(Check& c) {
  const auto dir = std::filesystem::temp_directory_path() / ("lazyelicit_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string cli = LAZYELICIT_CLI;
  const std::vector<std::string> commands{
      " simulate first-merge --m 25,50,100,200 --n 4,5,6,7,8 --trials 200 --seed 7",
      " simulate anytime --m 50 --n 6 --trials 200 --seed 7"};
  int index = 0;
  for (const auto& cmd : commands) {
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "1", "4"}) {
      const auto path = dir / ("run" + std::to_string(index++));
      const auto r = test::run(cli + cmd + " --threads " + threads + " --out " + path.string());
      c.expect(r.exit_code == 0, "exit code " + std::to_string(r.exit_code) + " for" + cmd);
      outputs.push_back(slurp(path));
    }
    c.expect(!outputs[0].empty(), "empty report for" + cmd);
    c.expect(outputs[0] == outputs[1], "repeat differs for" + cmd);
    c.expect(outputs[0] == outputs[2], "parallel run differs for" + cmd);
  }
  std::filesystem::remove_all(dir);
  if (c.ok) c.detail << "serial, repeated and 4-thread reports byte-identical";
}

}  // namespace

int main() {
  report("counterexample fixture", counterexample);
  report("rank correlation values", rcc_values);
  report("headline statistics", headline);
  report("anytime curve shape", anytime_shape);
  report("frontier oracle equivalence", frontier_oracle);
  report("additive dominance soundness", additive_soundness);
  report("product-prospect factorization", product_property);
  report("multiplicative constant solver", mui_solver);
  report("full-merge consistency", full_merge);
  report("DVT question and ratio", dvt_substitute);
  report("simulation determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
