// lazyelicit: frontier filtering, simulation runs, scripted or interactive
// elicitation, and the HTTP session service.
//
// Exit codes: 0 success, 1 runtime / data error, 2 usage error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lazyelicit/elicitation.hpp"
#include "lazyelicit/frontier.hpp"
#include "lazyelicit/io.hpp"
#include "lazyelicit/service.hpp"
#include "lazyelicit/simharness.hpp"

namespace {

using lazyelicit::io::json;

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lazyelicit::Error(lazyelicit::ErrorKind::invalid_argument, "cannot write '" + path + "'");
  out << content;
}

lazyelicit::Problem load_problem(const std::string& plans, const std::string& attrs, double epsilon) {
  return lazyelicit::io::make_problem(lazyelicit::io::read_plan_csv_file(plans),
                                      lazyelicit::io::schema_from_json(lazyelicit::io::read_json_file(attrs)),
                                      epsilon);
}

json report_with_answers(const lazyelicit::ElicitationSession& s) {
  json out = lazyelicit::io::to_json(s.accept(), s.problem().attributes);
  json answers = json::array();
  for (const auto& a : s.answers()) answers.push_back(lazyelicit::io::to_json(a));
  out["answers"] = answers;
  return out;
}

// One line per answer: a number answers the pending question (probability
// or matching value), "r <x>" gives the ratio directly, "accept" stops.
lazyelicit::ElicitationSession prompt_loop(lazyelicit::ElicitationSession s) {
  using namespace lazyelicit;
  std::string line;
  while (!s.decided()) {
    auto [next, q] = s.next_question();
    s = next;
    std::cerr << "\nFrontier: " << s.frontier().surviving.size() << " plans\n" << q.text << "\n> ";
    if (!std::getline(std::cin, line) || line == "accept" || line == "q") break;
    try {
      Answer a;
      if (line.rfind("r ", 0) == 0) {
        a.body = DirectRatioAnswer{std::stod(line.substr(2)), std::nullopt};
      } else if (q.is_type1()) {
        a.body = ProbabilityAnswer{std::stod(line)};
      } else {
        a.body = MatchingValueAnswer{std::stod(line)};
      }
      s = s.apply_answer(a);
    } catch (const std::invalid_argument&) {
      std::cerr << "not a number: " << line << "\n";
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
    }
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lazy elicitation of additive utility models"};
  app.require_subcommand(1);

  double epsilon = 0.0;
  std::string out_path;

  auto* frontier = app.add_subcommand("frontier", "Print the efficient frontier of a plan matrix");
  std::string plans_path;
  frontier->add_option("--plans", plans_path, "Plan matrix CSV")->required()->check(CLI::ExistingFile);
  frontier->add_option("--epsilon", epsilon, "Dominance tolerance")->check(CLI::NonNegativeNumber);
  frontier->add_option("--out", out_path, "Output JSON (default: stdout)");

  auto* simulate = app.add_subcommand("simulate", "Run the RCC / RAND / OPT experiments");
  simulate->require_subcommand(1);
  std::vector<std::size_t> ms{50}, ns{6};
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string report_path;
  auto add_sim_options = [&](CLI::App* cmd) {
    cmd->add_option("--m", ms, "Plan count(s); several values pool trials uniformly")
        ->delimiter(',')
        ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
    cmd->add_option("--n", ns, "Attribute count(s)")
        ->delimiter(',')
        ->check(CLI::Range(std::size_t{2}, std::size_t{64}));
    cmd->add_option("--trials", trials)->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    cmd->add_option("--seed", seed, "Master seed (decimal 64-bit unsigned)");
    cmd->add_option("--threads", threads, "Worker threads, 0 = all cores");
    cmd->add_option("--epsilon", epsilon)->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", out_path, "Output file (default: stdout)");
  };
  auto* first_merge = simulate->add_subcommand("first-merge", "Eliminations after the first merge");
  add_sim_options(first_merge);
  auto* anytime = simulate->add_subcommand("anytime", "Frontier size after each merge");
  add_sim_options(anytime);
  anytime->add_option("--report", report_path, "Also write the per-trial JSON report here");

  auto* elicit = app.add_subcommand("elicit", "Run an elicitation session");
  std::string attrs_path, script_path;
  elicit->add_option("--plans", plans_path)->required()->check(CLI::ExistingFile);
  elicit->add_option("--attrs", attrs_path)->required()->check(CLI::ExistingFile);
  elicit->add_option("--script", script_path, "JSON list of answers; interactive when absent")
      ->check(CLI::ExistingFile);
  elicit->add_option("--epsilon", epsilon)->check(CLI::NonNegativeNumber);
  elicit->add_option("--out", out_path, "Final report JSON (default: stdout)");

  auto* serve = app.add_subcommand("serve", "Serve the session API over HTTP");
  std::uint16_t port = 8080;
  std::string host = "127.0.0.1", snapshot_dir;
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--plans", plans_path, "Create an initial session from these plans")->check(CLI::ExistingFile);
  serve->add_option("--attrs", attrs_path)->check(CLI::ExistingFile);
  serve->add_option("--epsilon", epsilon)->check(CLI::NonNegativeNumber);
  serve->add_option("--snapshot-dir", snapshot_dir, "Persist sessions as JSON snapshots here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    using namespace lazyelicit;
    if (*frontier) {
      const auto matrix = io::read_plan_csv_file(plans_path);
      const auto result = efficient_frontier(matrix, epsilon);
      write_output(out_path, io::to_json(result, matrix).dump(2) + "\n");
    } else if (*first_merge || *anytime) {
      sim::TrialConfig config;
      config.grid = sim::TrialConfig::cartesian(ms, ns);
      config.trials = trials;
      config.seed = seed;
      config.threads = threads;
      config.epsilon = epsilon;
      if (*first_merge) {
        const auto report = sim::run_first_merge_comparison(config);
        write_output(out_path, io::to_json(report).dump(2) + "\n");
      } else {
        config.strategies = {sim::Strategy::rcc, sim::Strategy::rand};
        const auto curves = sim::run_anytime_experiment(config);
        write_output(out_path, io::anytime_csv(curves));
        if (!report_path.empty()) write_output(report_path, io::to_json(curves).dump(2) + "\n");
      }
    } else if (*elicit) {
      auto problem = load_problem(plans_path, attrs_path, epsilon);
      ElicitationSession s = ElicitationSession::start(problem);
      if (!script_path.empty()) {
        const auto answers = io::answers_from_json(io::read_json_file(script_path));
        s = ElicitationSession::replay(problem, answers);
      } else {
        s = prompt_loop(std::move(s));
      }
      write_output(out_path, report_with_answers(s).dump(2) + "\n");
    } else if (*serve) {
      if (plans_path.empty() != attrs_path.empty()) {
        std::cerr << "serve: --plans and --attrs go together\n";
        return 2;
      }
      service::SessionStore store(snapshot_dir.empty() ? std::nullopt
                                                       : std::optional<std::filesystem::path>(snapshot_dir));
      if (!plans_path.empty()) {
        std::ifstream p(plans_path);
        std::stringstream csv;
        csv << p.rdbuf();
        json body = {{"plans_csv", csv.str()},
                     {"attributes", io::read_json_file(attrs_path)},
                     {"epsilon", epsilon}};
        const auto r = store.create(body.dump());
        if (r.status != 201) throw Error(ErrorKind::invalid_argument, r.body.dump());
        std::cerr << "session " << r.body.at("id").get<std::string>() << "\n";
      }
      service::HttpServer server(store);
      std::cerr << "listening on http://" << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
    }
  } catch (const lazyelicit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
