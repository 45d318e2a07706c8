#include <cstdio>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "gact/constraint_graph.hpp"
#include "gact/detectors.hpp"
#include "gact/forward_sampler.hpp"
#include "gact/io.hpp"
#include "gact/mcmc.hpp"
#include "gact/metrics.hpp"
#include "gact/tree_prior.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int classify(const std::exception& e) {
  const std::string what = e.what();
  if (what.find("factoriz") != std::string::npos ||
      what.find("non-finite") != std::string::npos ||
      what.find("numerical") != std::string::npos)
    return kExitNumerical;
  return kExitData;
}

gact::ModelConfig load_or_default(const std::string& path) {
  if (path.empty()) return gact::ModelConfig{};
  return gact::load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical group-activity model: simulate, detect, infer"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand(
      "generate", "sample or script a scene and its ground-truth tree");
  std::string scenario = "RANDOM", out_dir = ".";
  std::uint64_t seed = 1;
  int actors = 5, horizon = 20;
  std::string gen_config;
  generate->add_option("--scenario", scenario, "SYNTH1|SYNTH2|RANDOM");
  generate->add_option("--seed", seed, "rng seed");
  generate->add_option("--actors", actors, "actor count (RANDOM only)");
  generate->add_option("--horizon", horizon, "frame count (RANDOM only)");
  generate->add_option("--out-dir", out_dir, "output directory");
  generate->add_option("--config", gen_config, "config file");

  // detect
  auto* detect = app.add_subcommand(
      "detect", "run the bottom-up detectors on a scene");
  std::string det_scene, det_groups, det_labels, det_tree, det_config;
  detect->add_option("--scene", det_scene, "scene csv")->required();
  detect->add_option("--groups-out", det_groups, "group track csv (default stdout)");
  detect->add_option("--labels-out", det_labels, "physical label csv (default stdout)");
  detect->add_option("--tree-out", det_tree, "initial tree json");
  detect->add_option("--config", det_config, "config file");

  // infer
  auto* infer = app.add_subcommand("infer", "MAP inference over activity trees");
  std::string inf_scene, inf_out = "tree.json", inf_trace, inf_config;
  int iterations = -1, chains = -1;
  std::uint64_t inf_seed = 0;
  bool have_seed = false;
  infer->add_option("--scene", inf_scene, "scene csv")->required();
  infer->add_option("--iterations", iterations, "MH steps per chain");
  infer->add_option("--chains", chains, "independent chains");
  infer->add_option("--seed", inf_seed, "rng seed")
      ->each([&](const std::string&) { have_seed = true; });
  infer->add_option("--out", inf_out, "inferred tree json");
  infer->add_option("--trace", inf_trace, "trace csv");
  infer->add_option("--config", inf_config, "config file");

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "score an inferred tree against ground truth");
  std::string gt_path, pred_path, eval_csv;
  evaluate->add_option("--gt", gt_path, "ground-truth tree json")->required();
  evaluate->add_option("--pred", pred_path, "inferred tree json")->required();
  evaluate->add_option("--csv", eval_csv, "also write metrics csv here");

  // render
  auto* render = app.add_subcommand("render", "render a scene to SVG");
  std::string ren_scene, ren_tree, ren_out = "scene.svg";
  render->add_option("--scene", ren_scene, "scene csv")->required();
  render->add_option("--tree", ren_tree, "tree json for group boxes");
  render->add_option("--out", ren_out, "output svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*generate) {
      gact::ModelConfig config = load_or_default(gen_config);
      gact::ScenarioSpec spec;
      if (!gact::parse_scenario_id(scenario, &spec.id))
        throw std::runtime_error("unknown scenario '" + scenario + "'");
      spec.actors = actors;
      spec.horizon = horizon;
      spec.seed = seed;
      std::mt19937_64 rng(seed);
      gact::ScriptedScene out = gact::scripted_scene(spec, config, rng);
      gact::save_scene(out.scene, out_dir + "/scene.csv");
      gact::save_tree(out.ground_truth, out_dir + "/truth.json");
      gact::write_file(out_dir + "/scene.svg",
                       gact::render_svg(out.scene, &out.ground_truth));
      std::printf("wrote %s/{scene.csv,truth.json,scene.svg}\n",
                  out_dir.c_str());
    } else if (*detect) {
      gact::ModelConfig config = load_or_default(det_config);
      gact::Scene scene = gact::load_scene(det_scene);
      gact::Detections det = gact::run_detectors(scene, config);

      std::string groups = "frame,actor,group\n";
      for (size_t k = 0; k < det.tracks.size(); ++k) {
        const auto& track = det.tracks[k];
        for (size_t f = 0; f < track.members.size(); ++f)
          for (int j : track.members[f])
            groups += std::to_string(track.start + static_cast<int>(f)) + "," +
                      std::to_string(scene.actor_ids[j]) + "," +
                      std::to_string(track.id) + "\n";
      }
      std::string labels = "frame,actor,label\n";
      for (int t = 1; t <= scene.horizon; ++t)
        for (size_t j = 0; j < scene.actor_ids.size(); ++j)
          labels += std::to_string(t) + "," +
                    std::to_string(scene.actor_ids[j]) + "," +
                    gact::to_string(det.labels[j][t - 1]) + "\n";
      if (det_groups.empty())
        std::fputs(groups.c_str(), stdout);
      else
        gact::write_file(det_groups, groups);
      if (det_labels.empty())
        std::fputs(labels.c_str(), stdout);
      else
        gact::write_file(det_labels, labels);
      if (!det_tree.empty())
        gact::save_tree(gact::detections_to_tree(det, scene, config), det_tree);
    } else if (*infer) {
      gact::ModelConfig config = load_or_default(inf_config);
      if (iterations >= 0) config.sampler.iterations = iterations;
      if (chains >= 1) config.sampler.chains = chains;
      if (have_seed) config.sampler.seed = inf_seed;
      gact::Scene scene = gact::load_scene(inf_scene);
      gact::SamplerResult result = gact::run_sampler(scene, config);
      gact::save_tree(result.best, inf_out);
      if (!inf_trace.empty()) {
        std::string csv = "iteration,move,accepted,log_posterior\n";
        for (const auto& e : result.traces[result.best_chain].entries)
          csv += std::to_string(e.iteration) + "," + gact::to_string(e.move) +
                 "," + (e.accepted ? "1" : "0") + "," +
                 std::to_string(e.log_posterior) + "\n";
        gact::write_file(inf_trace, csv);
      }
      std::printf("best log-posterior %.6f (chain %d) -> %s\n",
                  result.best_log_posterior, result.best_chain,
                  inf_out.c_str());
    } else if (*evaluate) {
      gact::ActivityTree gt = gact::load_tree(gt_path);
      gact::ActivityTree pred = gact::load_tree(pred_path);
      gact::MetricsReport report = gact::evaluate(gt, pred);
      std::fputs(gact::format_report(report).c_str(), stdout);
      if (!eval_csv.empty())
        gact::write_file(eval_csv, gact::report_csv(report));
    } else if (*render) {
      gact::Scene scene = gact::load_scene(ren_scene);
      gact::ActivityTree tree;
      const gact::ActivityTree* tree_ptr = nullptr;
      if (!ren_tree.empty()) {
        tree = gact::load_tree(ren_tree);
        tree_ptr = &tree;
      }
      gact::write_file(ren_out, gact::render_svg(scene, tree_ptr));
      std::printf("wrote %s\n", ren_out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify(e);
  }
  return 0;
}
