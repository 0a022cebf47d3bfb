// pjmp: enumerate / constants / verify / simulate for a neuron network config.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "pjmp/app.hpp"
#include "pjmp/config.hpp"
#include "pjmp/error.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::size_t workers = 1;
  std::string variant = "both";
  std::string format;
};

// With --out -, every emitted document goes to stdout as JSON lines.
int emit(const pjmp::AppResult& res, const std::string& out) {
  if (out == "-") {
    for (const auto& [name, content] : res.files) {
      if (name.ends_with(".jsonl")) {
        std::cout << content;
      } else if (name.ends_with(".json")) {
        std::cout << nlohmann::ordered_json::parse(content).dump() << '\n';
      }
    }
    if (!res.summary.empty()) std::cerr << res.summary << '\n';
    return res.exit_code;
  }
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << out << ": " << ec.message() << '\n';
    return pjmp::exit_code::kConfig;
  }
  for (const auto& [name, content] : res.files) {
    std::ofstream file(std::filesystem::path(out) / name, std::ios::binary);
    file << content;
    if (!file) {
      std::cerr << "cannot write " << name << '\n';
      return pjmp::exit_code::kConfig;
    }
  }
  if (!res.summary.empty()) std::cout << res.summary << '\n';
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and Monte Carlo certification of Poincare-type inequalities for jump-process neuron networks"};
  app.require_subcommand(1);
  Flags flags;

  const std::pair<const char*, const char*> commands[] = {
      {"enumerate", "reachable states, jump graph and closed classes"},
      {"constants", "every constant of the bounds, paper and empirical"},
      {"verify", "check the inequalities and identities on the configured observables"},
      {"simulate", "Monte Carlo estimates next to the exact values"}};
  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", flags.config, "run configuration (JSON, schema 1)")->required();
    sub->add_option("--out", flags.out, "output directory, or - for JSON lines on stdout");
    sub->add_option("--workers", flags.workers, "worker threads (wall time only)")->check(CLI::PositiveNumber);
    sub->add_option("--constants-variant", flags.variant, "paper | empirical | both")
        ->check(CLI::IsMember({"paper", "empirical", "both"}));
    sub->add_option("--format", flags.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pjmp::exit_code::kConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  pjmp::RunConfig config;
  try {
    config = pjmp::load_config(flags.config);
  } catch (const pjmp::Error& e) {
    std::cerr << e.what() << '\n';
    return pjmp::exit_code_for(e.code());
  }

  pjmp::AppOptions options;
  options.workers = flags.workers;
  options.variants = flags.variant == "paper"       ? pjmp::VariantSelection::Paper
                     : flags.variant == "empirical" ? pjmp::VariantSelection::Empirical
                                                    : pjmp::VariantSelection::Both;
  if (!flags.format.empty()) options.formats = std::vector<std::string>{flags.format};

  const pjmp::AppResult res = pjmp::run_command(command, config, options);
  if (!res.error.empty()) {
    std::cerr << res.error << '\n';
    return res.exit_code;
  }
  return emit(res, flags.out.empty() ? config.output.directory : flags.out);
}
