// tapcore command-line front end. Talks to the engine only through the C API.
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tapcore/tapcore.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitUnreachable = 3;
constexpr int kExitDiverged = 4;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(tap_status st) {
  switch (st) {
    case TAP_OK: return 0;
    case TAP_E_UNREACHABLE: return kExitUnreachable;
    case TAP_E_DIVERGED: return kExitDiverged;
    case TAP_E_PARSE:
    case TAP_E_CONTRACT: return kExitUsage;
    default: return 1;
  }
}

// Owns a string returned by the library.
std::string take(char* text) {
  std::string out = text ? text : "";
  tap_free(text);
  return out;
}

void check(tap_status st) {
  if (st != TAP_OK) throw Failure{exit_code_for(st), std::string(tap_status_name(st)) + ": " + tap_last_error()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitUsage, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{1, "cannot write " + path};
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Failure{kExitUsage, what + " is not valid JSON: " + e.what()};
  }
}

// Episode settings shared by several subcommands; unset flags leave the
// config file (or the engine defaults) untouched.
struct EpisodeFlags {
  std::string config_file;
  std::string source;
  std::string mode;
  int ns = 0;
  int nf = 0;
  int unit = 0;
  std::string container;
  std::string range;
  int conveyor = 0;
  bool dense = false;
  bool penalty = false;
  bool no_constrained = false;
  bool four_corners = false;
  double occlusion = -1.0;
  double workspace = 0.0;
  std::string dataset;

  void add(CLI::App* app, bool with_mode) {
    app->add_option("--config", config_file, "episode config JSON file")->check(CLI::ExistingFile);
    app->add_option("--source", source, "box source")->check(CLI::IsMember({"fix", "rand", "ppsg"}));
    if (with_mode) {
      app->add_option("--mode", mode, "container setting")->check(CLI::IsMember({"single", "multi_all", "multi_last"}));
    }
    app->add_option("--ns", ns, "number of source boxes")->check(CLI::PositiveNumber);
    app->add_option("--nf", nf, "FIX catalogue size")->check(CLI::PositiveNumber);
    app->add_option("--unit", unit, "representation unit length u")->check(CLI::PositiveNumber);
    app->add_option("--container", container, "container extents WxDxH");
    app->add_option("--range", range, "RAND extent bounds lo,hi");
    app->add_option("--occlusion", occlusion, "probability of a misestimated box")->check(CLI::Range(0.0, 1.0));
    app->add_option("--workspace-scale", workspace, "source workspace side / container side")
        ->check(CLI::PositiveNumber);
    if (with_mode) {
      app->add_option("--conveyor", conveyor, "conveyor window size (no precedence)")->check(CLI::PositiveNumber);
      app->add_flag("--dense-reward", dense, "pay per-step compactness deltas");
      app->add_flag("--unstable-penalty", penalty, "subtract 0.1 per unstable placement");
      app->add_flag("--no-constrained-ems", no_constrained, "offer original EMS only");
      app->add_flag("--four-corners", four_corners, "try all four bottom corners of each EMS");
      app->add_option("--dataset", dataset, "take source boxes from a dataset file")->check(CLI::ExistingFile);
    }
  }

  json build() const {
    json cfg = config_file.empty() ? json::object() : parse_text(read_file(config_file), config_file);
    if (!source.empty()) cfg["source"] = source;
    if (!mode.empty()) cfg["mode"] = mode;
    if (ns > 0) cfg["n_source"] = ns;
    if (nf > 0) cfg["n_fixed"] = nf;
    if (unit > 0) cfg["unit"] = unit;
    if (!container.empty()) {
      int w = 0, d = 0, h = 0;
      if (std::sscanf(container.c_str(), "%dx%dx%d", &w, &d, &h) != 3) {
        throw Failure{kExitUsage, "--container expects WxDxH, e.g. 100x100x100"};
      }
      cfg["container"] = {{"width", w}, {"depth", d}, {"height", h}};
    }
    if (!range.empty()) {
      int lo = 0, hi = 0;
      if (std::sscanf(range.c_str(), "%d,%d", &lo, &hi) != 2) throw Failure{kExitUsage, "--range expects lo,hi"};
      cfg["rand_range"] = {{"lo", lo}, {"hi", hi}};
    }
    if (occlusion >= 0.0) cfg["occlusion_probability"] = occlusion;
    if (workspace > 0.0) cfg["workspace_scale"] = workspace;
    if (conveyor > 0) cfg["conveyor_window"] = conveyor;
    if (dense) cfg["dense_reward"] = true;
    if (penalty) cfg["unstable_penalty"] = true;
    if (no_constrained) cfg["ems_mode"] = "original_only";
    if (four_corners) cfg["rules"]["corner"] = "four_corners";
    if (!dataset.empty()) {
      const json d = parse_text(read_file(dataset), dataset);
      cfg["boxes"] = d.at("boxes");
      if (d.contains("spec")) cfg["container"] = d.at("spec");
      if (d.contains("source")) cfg["source"] = d.at("source");
    }
    return cfg;
  }
};

void set_config_seed(json& cfg, std::uint64_t seed) { cfg["seed"] = seed; }

int wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
  return 0;
}

void block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tapcore: transport-and-pack engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tap_version()));

  // gen
  auto* gen = app.add_subcommand("gen", "generate a dataset (boxes, plus the solution for PPSG)");
  EpisodeFlags gen_flags;
  gen_flags.add(gen, false);
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "dataset seed");
  gen->add_option("-o,--out", gen_out, "output file (default stdout)");

  // gen-scene
  auto* gen_scene = app.add_subcommand("gen-scene", "generate a source scene and its precedence graph");
  EpisodeFlags scene_flags;
  scene_flags.add(gen_scene, false);
  std::uint64_t scene_seed = 1;
  std::string scene_out;
  gen_scene->add_option("--seed", scene_seed, "scene seed");
  gen_scene->add_option("-o,--out", scene_out, "output file (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "run episodes and write records and a summary");
  EpisodeFlags run_flags;
  run_flags.add(run, true);
  std::string run_policy = "greedy";
  int run_episodes = 1;
  std::uint64_t run_seed = 1;
  int run_threads = 0;
  std::string run_records, run_csv, run_summary;
  run->add_option("--policy", run_policy, "greedy | random | external:<host>:<port>");
  run->add_option("--episodes", run_episodes, "episode count")->check(CLI::PositiveNumber);
  run->add_option("--seed", run_seed, "seed of the first episode; episode i uses seed + i");
  run->add_option("--threads", run_threads, "worker threads (0 = all cores)");
  run->add_option("--records", run_records, "directory for one record JSON per episode");
  run->add_option("--csv", run_csv, "per-episode CSV output");
  run->add_option("--summary", run_summary, "summary JSON output (default stdout)");

  // table
  auto* table = app.add_subcommand("table", "run the source x setting benchmark table");
  EpisodeFlags table_flags;
  table_flags.add(table, false);
  std::string table_policy = "greedy";
  int table_episodes = 200;
  std::uint64_t table_seed = 1;
  int table_threads = 0;
  std::vector<std::string> table_sources, table_modes;
  std::string table_csv, table_json, table_text;
  table->add_option("--policy", table_policy, "greedy | random | external:<host>:<port>");
  table->add_option("--episodes", table_episodes, "episodes per cell")->check(CLI::PositiveNumber);
  table->add_option("--seed", table_seed, "seed of the first episode in every cell");
  table->add_option("--threads", table_threads, "worker threads (0 = all cores)");
  table->add_option("--sources", table_sources, "subset of fix,rand,ppsg")->delimiter(',')
      ->check(CLI::IsMember({"fix", "rand", "ppsg"}));
  table->add_option("--modes", table_modes, "subset of single,multi_all,multi_last")->delimiter(',')
      ->check(CLI::IsMember({"single", "multi_all", "multi_last"}));
  table->add_option("--csv", table_csv, "CSV output");
  table->add_option("--json", table_json, "JSON output");
  table->add_option("--text", table_text, "aligned text output (default stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "host the episode protocol (one session per connection)");
  int serve_port = 0;
  bool serve_stdio = false;
  serve->add_option("--port", serve_port, "TCP port on 127.0.0.1 (0 picks one)")->check(CLI::Range(0, 65535));
  serve->add_flag("--stdio", serve_stdio, "serve a single session on stdin/stdout");

  // policy-serve
  auto* policy_serve = app.add_subcommand("policy-serve", "host an in-process policy for external:<addr> engines");
  std::string ps_policy = "greedy";
  int ps_port = 0;
  std::uint64_t ps_seed = 1;
  policy_serve->add_option("--policy", ps_policy, "greedy | random");
  policy_serve->add_option("--port", ps_port, "TCP port on 127.0.0.1 (0 picks one)")->check(CLI::Range(0, 65535));
  policy_serve->add_option("--seed", ps_seed, "seed for the random policy");

  // export
  auto* exp = app.add_subcommand("export", "export a packing as OBJ meshes or JSON");
  std::string exp_format = "obj", exp_input, exp_out;
  exp->add_option("--format", exp_format, "obj | json")->check(CLI::IsMember({"obj", "json"}));
  exp->add_option("--input,--record", exp_input, "episode record or dataset with a solution")
      ->required()
      ->check(CLI::ExistingFile);
  exp->add_option("-o,--out", exp_out, "output file (default stdout)");

  // replay
  auto* rep = app.add_subcommand("replay", "re-execute a record and verify its metrics");
  std::string rep_record;
  rep->add_option("--record", rep_record, "episode record JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      json cfg = gen_flags.build();
      set_config_seed(cfg, gen_seed);
      char* out = nullptr;
      check(tap_generate_dataset(cfg.dump().c_str(), &out));
      write_output(gen_out, json::parse(take(out)).dump(2));
    } else if (*gen_scene) {
      json cfg = scene_flags.build();
      set_config_seed(cfg, scene_seed);
      char* out = nullptr;
      check(tap_generate_scene(cfg.dump().c_str(), &out));
      write_output(scene_out, json::parse(take(out)).dump(2));
    } else if (*run) {
      const json cfg = run_flags.build();
      char* out = nullptr;
      check(tap_run_batch(cfg.dump().c_str(), run_policy.c_str(), run_episodes, run_seed, run_threads, &out));
      const json batch = json::parse(take(out));
      int failed = 0;
      if (!run_records.empty()) fs::create_directories(run_records);
      for (const auto& r : batch.at("records")) {
        if (r.contains("error")) {
          ++failed;
          std::cerr << "episode seed " << r.at("config").at("seed") << " aborted: " << r.at("error").at("message")
                    << "\n";
        }
        if (!run_records.empty()) {
          const auto seed = r.at("config").at("seed").get<std::uint64_t>();
          write_output((fs::path(run_records) / ("episode_" + std::to_string(seed) + ".json")).string(), r.dump(2));
        }
      }
      if (!run_csv.empty()) write_output(run_csv, batch.at("csv").get<std::string>());
      write_output(run_summary, batch.at("summary").dump(2));
      return failed ? 1 : 0;
    } else if (*table) {
      json req = {{"config", table_flags.build()},
                  {"policy", table_policy},
                  {"episodes", table_episodes},
                  {"seed_base", table_seed},
                  {"threads", table_threads}};
      if (!table_sources.empty()) req["sources"] = table_sources;
      if (!table_modes.empty()) req["modes"] = table_modes;
      char* out = nullptr;
      check(tap_run_table(req.dump().c_str(), &out));
      const json res = json::parse(take(out));
      if (!table_csv.empty()) write_output(table_csv, res.at("csv").get<std::string>());
      if (!table_json.empty()) write_output(table_json, res.at("rows").dump(2));
      write_output(table_text, res.at("text").get<std::string>());
    } else if (*serve) {
      if (serve_stdio) {
        check(tap_serve_stdio());
        return 0;
      }
      block_signals();
      tap_server* server = nullptr;
      check(tap_server_start(serve_port, &server));
      std::cout << "listening on 127.0.0.1:" << tap_server_port(server) << std::endl;
      wait_for_signal();
      tap_server_stop(server);
    } else if (*policy_serve) {
      block_signals();
      tap_server* server = nullptr;
      check(tap_policy_server_start(ps_policy.c_str(), ps_seed, ps_port, &server));
      std::cout << "policy " << ps_policy << " listening on 127.0.0.1:" << tap_server_port(server) << std::endl;
      wait_for_signal();
      tap_server_stop(server);
    } else if (*exp) {
      char* out = nullptr;
      check(tap_export(read_file(exp_input).c_str(), exp_format.c_str(), &out));
      write_output(exp_out, take(out));
    } else if (*rep) {
      char* out = nullptr;
      check(tap_replay(read_file(rep_record).c_str(), &out));
      const json report = json::parse(take(out));
      std::cout << "replay ok: " << report.at("steps") << " steps, C=" << report.at("metrics").at("C") << "\n";
    }
  } catch (const Failure& f) {
    std::cerr << "tapcore: " << f.message << "\n";
    if (f.exit_code == kExitUsage) std::cerr << "run 'tapcore " << (app.get_subcommands().empty() ? "" : app.get_subcommands()[0]->get_name()) << " --help' for usage\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "tapcore: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
