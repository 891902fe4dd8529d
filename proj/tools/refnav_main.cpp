#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "refnav/agents.hpp"
#include "refnav/model/train.hpp"
#include "refnav/server.hpp"
#include "refnav/synth.hpp"

namespace fs = std::filesystem;
using namespace refnav;

namespace {

std::vector<World> load_suite(const std::vector<std::string>& envs, const std::vector<std::string>& tasks) {
  if (envs.size() != tasks.size()) throw CLI::ValidationError("--env and --tasks must be given the same number of times");
  std::vector<World> suite;
  for (std::size_t i = 0; i < envs.size(); ++i) {
    Environment env = load_environment(envs[i]);
    auto t = load_tasks(tasks[i], env);
    suite.push_back({std::move(env), std::move(t)});
  }
  return suite;
}

void write_report(const std::vector<ReportRow>& rows, const std::string& path) {
  std::cout << render_table(rows);
  if (path.empty()) return;
  const bool csv = fs::path(path).extension() == ".csv";
  write_text_file(path, csv ? render_csv(rows) : render_table(rows));
}

HttpServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote referring-expression navigation: worlds, benchmark, training and episode server"};
  app.require_subcommand(1);

  // gen-world
  auto* gen = app.add_subcommand("gen-world", "generate a synthetic environment and its tasks");
  SynthesisParams sp;
  std::string gen_out;
  gen->add_option("--seed", sp.rng_seed, "generator seed")->required();
  gen->add_option("--viewpoints", sp.n_viewpoints, "number of viewpoints")->check(CLI::Range(2, 100000));
  gen->add_option("--objects", sp.n_objects, "number of objects")->check(CLI::Range(1, 100000));
  gen->add_option("--categories", sp.n_categories, "categories in use")->check(CLI::Range(1, 48));
  gen->add_option("--room-extent", sp.room_extent, "room side in meters")->check(CLI::Range(2.0, 1000.0));
  gen->add_option("--templates", sp.instruction_template_set, "instruction template set")
      ->check(CLI::IsMember({"standard", "short"}));
  gen->add_option("--out", gen_out, "output prefix; writes <out>.env.json and <out>.tasks.json")->required();

  // run-bench
  auto* bench = app.add_subcommand("run-bench", "run agents over a suite and print the metrics table");
  std::vector<std::string> b_env, b_tasks, b_agents{"shortest"};
  std::uint64_t b_seed = 0;
  std::string b_report, b_traj, b_checkpoint, b_pointer = "gt";
  int b_max_steps = 40, b_random_steps = 10;
  bench->add_option("--env", b_env, "environment file (repeatable)")->required()->check(CLI::ExistingFile);
  bench->add_option("--tasks", b_tasks, "task file, paired with --env")->required()->check(CLI::ExistingFile);
  bench->add_option("--agent", b_agents, "random | shortest | stopnow | navpoint (repeatable)")
      ->check(CLI::IsMember({"random", "shortest", "stopnow", "navpoint"}));
  bench->add_option("--seed", b_seed, "seed for the random agent");
  bench->add_option("--checkpoint", b_checkpoint, "NavPoint checkpoint")->check(CLI::ExistingFile);
  bench->add_option("--pointer", b_pointer, "pointer used by the shortest agent: gt | model")
      ->check(CLI::IsMember({"gt", "model"}));
  bench->add_option("--max-steps", b_max_steps, "episode step limit")->check(CLI::Range(1, 100000));
  bench->add_option("--max-random-steps", b_random_steps, "random agent step cap")->check(CLI::Range(1, 1000));
  bench->add_option("--report", b_report, "also write the table here (.csv for CSV)");
  bench->add_option("--trajectories", b_traj, "write JSON-lines trajectories here (one agent only)");

  // score
  auto* sc = app.add_subcommand("score", "score a JSON-lines trajectory file");
  std::vector<std::string> s_env, s_tasks;
  std::string s_traj, s_report, s_name = "submission";
  sc->add_option("--env", s_env, "environment file (repeatable)")->required()->check(CLI::ExistingFile);
  sc->add_option("--tasks", s_tasks, "task file, paired with --env")->required()->check(CLI::ExistingFile);
  sc->add_option("--trajectories", s_traj, "JSON-lines trajectories")->required()->check(CLI::ExistingFile);
  sc->add_option("--report", s_report, "also write the table here (.csv for CSV)");
  sc->add_option("--name", s_name, "row label");

  // train
  auto* tr = app.add_subcommand("train", "train the NavPoint model");
  std::vector<std::string> t_env, t_tasks;
  std::string t_config, t_out, t_curve;
  tr->add_option("--env", t_env, "environment file (repeatable)")->required()->check(CLI::ExistingFile);
  tr->add_option("--tasks", t_tasks, "task file, paired with --env")->required()->check(CLI::ExistingFile);
  tr->add_option("--config", t_config, "flat key = value training config")->check(CLI::ExistingFile);
  tr->add_option("--out", t_out, "checkpoint path")->required();
  tr->add_option("--loss-csv", t_curve, "loss curve CSV (default <out>.loss.csv)");

  // serve
  auto* sv = app.add_subcommand("serve", "serve episodes over HTTP");
  std::vector<std::string> v_env, v_tasks;
  std::string v_config, v_host = "127.0.0.1";
  int v_port = -1;
  sv->add_option("--env", v_env, "environment file (repeatable)")->required()->check(CLI::ExistingFile);
  sv->add_option("--tasks", v_tasks, "task file, paired with --env")->required()->check(CLI::ExistingFile);
  sv->add_option("--port", v_port, "port (default REFNAV_PORT, else 8080)")->check(CLI::Range(0, 65535));
  sv->add_option("--host", v_host, "bind address");
  sv->add_option("--config", v_config, "server config (idle_timeout_s, max_steps)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      const World w = generate_synthetic_world(sp);
      save_environment(w.env, gen_out + ".env.json");
      save_tasks(w.tasks, gen_out + ".tasks.json");
      std::cout << "wrote " << gen_out << ".env.json (" << w.env.viewpoints().size() << " viewpoints, "
                << w.env.objects().size() << " objects) and " << gen_out << ".tasks.json (" << w.tasks.size()
                << " tasks)\n";
      return 0;
    }

    if (bench->parsed()) {
      const auto suite = load_suite(b_env, b_tasks);
      std::shared_ptr<const model::NavPointModel> m;
      if (!b_checkpoint.empty()) m = std::make_shared<model::NavPointModel>(model::NavPointModel::load(b_checkpoint));
      std::vector<AgentConfig> agents;
      for (const auto& name : b_agents) {
        AgentConfig a;
        a.kind = parse_agent_kind(name);
        a.seed = b_seed;
        a.max_random_steps = b_random_steps;
        a.ground_truth_pointer = b_pointer == "gt";
        a.model = m;
        if ((a.kind == AgentKind::kNavPoint || (a.kind == AgentKind::kShortest && !a.ground_truth_pointer)) && !m) {
          std::cerr << "error: --checkpoint is required for " << name << (a.ground_truth_pointer ? "" : " with --pointer model")
                    << "\n";
          return 2;
        }
        agents.push_back(a);
      }
      if (!b_traj.empty() && agents.size() != 1) {
        std::cerr << "error: --trajectories needs exactly one --agent\n";
        return 2;
      }
      EngineConfig engine;
      engine.max_steps = b_max_steps;
      if (m) engine.feature_dim = m->config().d_visual_base;
      const auto runs = run_benchmark(suite, agents, engine);
      std::vector<ReportRow> rows;
      for (const auto& r : runs) rows.push_back({r.agent, r.report.summary});
      write_report(rows, b_report);
      if (!b_traj.empty()) {
        std::string out;
        for (const auto& t : runs[0].trajectories) out += trajectory_to_json_line(t) + "\n";
        write_text_file(b_traj, out);
      }
      return 0;
    }

    if (sc->parsed()) {
      const auto suite = load_suite(s_env, s_tasks);
      const auto trajectories = parse_trajectories(read_text_file(s_traj));
      if (trajectories.empty()) {
        std::cerr << "error: " << s_traj << " holds no trajectories (N=0)\n";
        return 1;
      }
      const MetricsReport report = score(suite, trajectories);
      write_report({{s_name, report.summary}}, s_report);
      return 0;
    }

    if (tr->parsed()) {
      const auto suite = load_suite(t_env, t_tasks);
      model::ModelConfig cfg;
      if (!t_config.empty()) cfg = model::parse_config_text(read_text_file(t_config));
      model::NavPointModel m(cfg, model::Vocabulary::from_worlds(suite));
      const auto report = model::train(m, suite, &std::cerr);
      m.save(t_out);
      write_text_file(t_curve.empty() ? t_out + ".loss.csv" : t_curve, model::loss_curve_csv(report));
      std::cout << "wrote " << t_out << "\n";
      return 0;
    }

    if (sv->parsed()) {
      ServerConfig cfg;
      if (!v_config.empty()) cfg = parse_server_config(read_text_file(v_config));
      EpisodeService service(load_suite(v_env, v_tasks), cfg);
      HttpServer server(service);
      const int port = server.bind(v_host, v_port >= 0 ? v_port : port_from_env(8080));
      if (port < 0) {
        std::cerr << "error: cannot bind " << v_host << "\n";
        return 1;
      }
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << v_host << ":" << port << std::endl;
      server.listen();
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const model::TrainingError& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
