// SPDX-License-Identifier: Apache-2.0
// Command-line driver: runs a .fal program under encapsulated search.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "fal/fal.hpp"

namespace {

struct RunOptions {
  std::string path;
  std::string strategy = "symbolic";
  fal::Value max_len = 16;
  std::size_t max_solutions = 0;
  std::string format = "text";
  bool check = false;
  bool stats = false;
  bool no_label = false;
  std::uint64_t step_budget = 1'000'000;
  std::uint64_t enum_budget = 1'000'000;
  std::string int_domain;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fal::Error(fal::ErrorKind::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join_values(const std::vector<fal::Value>& vs) {
  std::string out = "[";
  for (std::size_t k = 0; k < vs.size(); ++k) out += (k ? ", " : "") + std::to_string(vs[k]);
  return out + "]";
}

nlohmann::json to_json(const fal::SolutionRecord& r) {
  nlohmann::json j;
  j["kind"] = fal::to_string(r.kind);
  if (r.kind == fal::LeafKind::Exception) j["exception"] = r.exception;
  if (r.value) {
    j["value"] = *r.value;
  } else if (r.array_value) {
    j["value"] = *r.array_value;
  } else {
    j["value"] = nullptr;
  }
  j["symbolic"] = r.symbolic;
  j["bindings"] = r.bindings;
  j["arrays"] = r.arrays;
  j["constraints"] = r.constraints;
  if (r.check_passed) j["check"] = *r.check_passed;
  return j;
}

nlohmann::json to_json(const fal::SearchStats& s) {
  nlohmann::json j;
  j["choices"] = s.choices;
  j["failures"] = s.failures;
  j["values"] = s.values;
  j["exceptions"] = s.exceptions;
  j["steps"] = s.steps;
  j["max_depth"] = s.max_depth;
  j["check_failures"] = s.check_failures;
  j["solver"] = {
      {"propagations", s.solver.propagations},
      {"enum_checks", s.solver.enum_checks},
      {"enum_tuples", s.solver.enum_tuples},
      {"delayed_queued", s.solver.delayed_queued},
      {"delayed_singleton_checks", s.solver.delayed_singleton_checks},
      {"delayed_label_checks", s.solver.delayed_label_checks},
      {"labelings", s.solver.labelings},
  };
  return j;
}

void print_text(std::ostream& out, std::size_t n, const fal::SolutionRecord& r) {
  out << "#" << n << " ";
  if (r.kind == fal::LeafKind::Exception) {
    out << "exception " << r.exception;
  } else if (r.value) {
    out << "value " << *r.value;
  } else if (r.array_value) {
    out << "value " << join_values(*r.array_value);
  } else {
    out << "value " << r.symbolic;
  }
  if (r.kind == fal::LeafKind::Value) out << "  (" << r.symbolic << ")";
  out << "\n";
  if (!r.bindings.empty()) {
    out << "   bindings:";
    for (const auto& [name, v] : r.bindings) out << " " << name << "=" << v;
    out << "\n";
  }
  if (!r.arrays.empty()) {
    out << "   arrays:";
    for (const auto& [name, vs] : r.arrays) out << " " << name << "=" << join_values(vs);
    out << "\n";
  }
  if (!r.labeled && !r.domains.empty()) {
    out << "   domains:";
    for (const auto& [name, d] : r.domains) out << " " << name << "=" << d;
    out << "\n";
  }
  if (!r.constraints.empty()) {
    out << "   constraints: ";
    for (std::size_t k = 0; k < r.constraints.size(); ++k) out << (k ? ", " : "") << r.constraints[k];
    out << "\n";
  }
}

void print_stats_text(std::ostream& out, const fal::SearchStats& s) {
  out << "stats: values=" << s.values << " exceptions=" << s.exceptions << " failures=" << s.failures
      << " steps=" << s.steps << " max_depth=" << s.max_depth << "\n";
  out << "stats: choices";
  for (const auto& [origin, n] : s.choices) out << " " << origin << "=" << n;
  out << "\n";
  out << "stats: solver propagations=" << s.solver.propagations << " enum_checks=" << s.solver.enum_checks
      << " enum_tuples=" << s.solver.enum_tuples << " delayed_queued=" << s.solver.delayed_queued
      << " delayed_singleton_checks=" << s.solver.delayed_singleton_checks
      << " delayed_label_checks=" << s.solver.delayed_label_checks << " labelings=" << s.solver.labelings << "\n";
}

int run(const RunOptions& opt) {
  fal::SearchConfig config;
  auto strategy = fal::parse_strategy(opt.strategy);
  if (!strategy) throw fal::Error(fal::ErrorKind::InvalidArgument, "unknown strategy '" + opt.strategy + "'");
  config.strategy = *strategy;
  config.max_len = opt.max_len;
  if (opt.max_solutions > 0) config.max_solutions = opt.max_solutions;
  config.step_budget = opt.step_budget;
  config.enum_budget = opt.enum_budget;
  config.label_on_solution = !opt.no_label;
  config.check = opt.check;
  if (!opt.int_domain.empty()) {
    auto colon = opt.int_domain.find(':');
    if (colon == std::string::npos)
      throw fal::Error(fal::ErrorKind::InvalidArgument, "--int-domain expects LO:HI");
    try {
      config.int_min = std::stoll(opt.int_domain.substr(0, colon));
      config.int_max = std::stoll(opt.int_domain.substr(colon + 1));
    } catch (const std::exception&) {
      throw fal::Error(fal::ErrorKind::InvalidArgument, "--int-domain expects LO:HI");
    }
  }

  fal::Program program = fal::parse_program(read_file(opt.path), opt.path);
  fal::SearchResult result = fal::get_all_solutions(program, config);

  const bool json = opt.format == "json";
  std::size_t n = 0;
  for (const auto& r : result.solutions) {
    if (json) {
      std::cout << to_json(r).dump() << "\n";
    } else {
      print_text(std::cout, ++n, r);
    }
  }
  if (opt.stats) {
    if (json) {
      std::cout << nlohmann::json{{"stats", to_json(result.stats)}}.dump() << "\n";
    } else {
      print_stats_text(std::cout, result.stats);
    }
  }
  if (opt.check && result.stats.check_failures > 0) {
    std::cerr << "error: " << result.stats.check_failures << " solution(s) failed the independent check\n";
    return 1;
  }
  return result.solutions.empty() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint-logic VM with free arrays"};
  app.require_subcommand(1);

  RunOptions opt;
  auto* run_cmd = app.add_subcommand("run", "Run a program and print its solutions");
  run_cmd->add_option("program", opt.path, "Program file (.fal)")->required();
  run_cmd->add_option("--strategy", opt.strategy, "Free-index handling: label, symbolic, delayed or forbid")
      ->check(CLI::IsMember({"label", "symbolic", "delayed", "forbid"}))
      ->capture_default_str();
  run_cmd->add_option("--max-len", opt.max_len, "Length bound of free arrays")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  run_cmd->add_option("--max-solutions", opt.max_solutions, "Stop after this many solutions (0: all)");
  run_cmd->add_option("--format", opt.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  run_cmd->add_flag("--check", opt.check, "Re-verify every solution against the collected constraints");
  run_cmd->add_flag("--stats", opt.stats, "Print search and solver counters");
  run_cmd->add_flag("--no-label", opt.no_label, "Report symbolic solutions without labeling");
  run_cmd->add_option("--step-budget", opt.step_budget, "Instructions allowed per path")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--enum-budget", opt.enum_budget, "Index tuples allowed per free-index check")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--int-domain", opt.int_domain, "Domain of unbounded int variables, as LO:HI");

  std::string fmt_path;
  auto* fmt_cmd = app.add_subcommand("fmt", "Print a program in canonical form");
  fmt_cmd->add_option("program", fmt_path, "Program file (.fal)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fmt_cmd) {
      std::cout << fal::format_program(fal::parse_program(read_file(fmt_path), fmt_path));
      return 0;
    }
    return run(opt);
  } catch (const fal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
