// Command-line front end: corpus analysis subcommands, scenario generation
// and oracle cross-checks.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dsintel/analyst/corpus_io.hpp"
#include "dsintel/analyst/oracle_check.hpp"
#include "dsintel/analyst/pipeline.hpp"
#include "dsintel/analyst/scenario.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

struct CommonOptions {
  std::string input;
  std::uint64_t seed = 1;
  std::size_t restarts = 20;
  std::size_t rmax = 0;
  double vmax = 25.0;
  std::size_t top_k = 3;
  double rho = 0.5;
  std::size_t threads = 1;
  std::string dot;
  std::string out;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("input", o.input, "Corpus file (JSON)")->required();
  cmd->add_option("--seed", o.seed, "Search seed");
  cmd->add_option("--restarts", o.restarts, "Local-search restarts")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rmax", o.rmax, "Replace the file prior by a uniform prior on 1..rmax");
  cmd->add_option("--vmax", o.vmax, "Speed limit for track edges (km/h)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--top-k", o.top_k, "Number of best tracks per block");
  cmd->add_option("--rho", o.rho, "Rho used for the sequential decision game")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--dot", o.dot, "Write track graphs in Graphviz format");
  cmd->add_option("--out", o.out, "Write the JSON result to this path");
  cmd->add_flag("--json", o.json, "Print JSON to stdout instead of tables");
}

dsintel::analyst::CorpusFile load(const CommonOptions& o) {
  auto file = dsintel::analyst::ingest_corpus(o.input);
  if (o.rmax) file.prior = dsintel::DomainPrior::uniform(o.rmax);
  return file;
}

dsintel::analyst::PipelineFlags flags_from(const CommonOptions& o,
                                          dsintel::analyst::Stages stages) {
  dsintel::analyst::PipelineFlags f;
  f.search.seed = o.seed;
  f.search.restarts = o.restarts;
  f.stages = stages;
  f.v_max = o.vmax;
  f.top_k = o.top_k;
  f.rho = o.rho;
  f.threads = o.threads;
  return f;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dsintel::ValidationError(path + ": cannot open for writing");
  out << content;
}

int run_analysis(const CommonOptions& o, dsintel::analyst::Stages stages) {
  using namespace dsintel::analyst;
  const auto file = load(o);
  const auto result = run_pipeline(file, flags_from(o, stages));
  const std::string text = to_json_text(file.corpus, result);
  if (!o.out.empty()) write_file(o.out, text);
  if (o.json)
    std::cout << text;
  else
    print_tables(std::cout, file.corpus, result);
  if (!o.dot.empty()) {
    std::ostringstream dot;
    for (const auto& ct : result.tracks)
      if (ct.graph) dsintel::write_dot(dot, *ct.graph, "block" + std::to_string(ct.block));
    write_file(o.dot, dot.str());
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using dsintel::analyst::Stages;
  CLI::App app{"Evidential clustering, track and decision analysis of intelligence reports"};
  app.require_subcommand(1);

  struct Analysis {
    const char* name;
    const char* help;
    Stages stages;
  };
  const Analysis analyses[] = {
      {"cluster", "Partition reports by metaconflict minimization",
       {true, false, false, false, false}},
      {"specify", "Cluster, then derive graded membership", {true, true, false, false, false}},
      {"posterior", "Cluster, then the posterior over the number of targets",
       {true, false, true, false, false}},
      {"tracks", "Cluster, then rank tracks per block", {true, false, false, true, false}},
      {"decide", "Expected-utility interval analysis of the decision section",
       {false, false, false, false, true}},
      {"pipeline", "All stages", {true, true, true, true, true}},
  };
  std::vector<CommonOptions> options(std::size(analyses));
  std::vector<CLI::App*> commands;
  for (std::size_t i = 0; i < std::size(analyses); ++i) {
    commands.push_back(app.add_subcommand(analyses[i].name, analyses[i].help));
    add_common(commands.back(), options[i]);
  }

  CommonOptions check_opts;
  auto* check = app.add_subcommand("oracle-check", "Cross-check search and tracks by brute force");
  add_common(check, check_opts);

  dsintel::analyst::ScenarioConfig gen_cfg;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic scenario corpus");
  gen->add_option("--seed", gen_cfg.seed, "Generator seed");
  gen->add_option("--targets", gen_cfg.targets, "Number of targets");
  gen->add_option("--per-target", gen_cfg.reports_per_target, "Reports per target");
  gen->add_option("--frame-size", gen_cfg.frame_size, "Frame size");
  gen->add_option("--level", gen_cfg.contradiction, "Contradiction level in [0,1]");
  gen->add_option("--area", gen_cfg.kinematics.area_km, "Side of the square area (km)");
  gen->add_option("--vmax", gen_cfg.kinematics.speed_limit_kmh, "Speed limit (km/h)");
  gen->add_option("--span", gen_cfg.kinematics.time_span_s, "Time span (s)");
  gen->add_option("--rmax", gen_cfg.r_max, "Prior support 1..rmax (default targets + 2)");
  gen->add_option("--out", gen_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    for (std::size_t i = 0; i < commands.size(); ++i)
      if (commands[i]->parsed()) return run_analysis(options[i], analyses[i].stages);

    if (gen->parsed()) {
      const std::string text = dsintel::analyst::generate_scenario(gen_cfg);
      if (gen_out.empty())
        std::cout << text;
      else
        write_file(gen_out, text);
      return 0;
    }

    if (check->parsed()) {
      const auto file = load(check_opts);
      bool ok = true;
      for (const auto& line : dsintel::analyst::oracle_check(
               file, flags_from(check_opts, {}))) {
        std::cout << (line.pass ? "PASS " : "FAIL ") << line.name << ": " << line.detail
                  << '\n';
        ok = ok && line.pass;
      }
      return ok ? 0 : kExitStage;
    }
  } catch (const dsintel::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const dsintel::analyst::StageError& e) {
    std::cerr << "stage failure in " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
