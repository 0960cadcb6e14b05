// semmap command-line tool. Exit codes: 0 success, 1 runtime error, 2 usage error.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semmap/semmap.hpp"

using namespace semmap;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  return in;
}

void write_text(const std::string& path, const std::string& text) { write_file(path, text); }

template <typename Fn>
std::string to_text(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

struct Args {
  std::uint64_t seed = 1;
  std::string out, scene, traj, config, pipeline, pred, gt, report, episodes, map, free = "pred", results,
      questions, answers;
  int count = 20;
  int window_cells = 0;
  bool with_scores = false;
};

void cmd_scene_gen(const Args& a) { save_scene(a.out, generate_scene(a.seed)); }

void cmd_traj_record(const Args& a) {
  const SceneModel scene = load_scene(a.scene);
  save_trajectory(a.out, coverage_trajectory(scene, a.seed));
}

void cmd_map_build(const Args& a) {
  BuildConfig cfg;
  if (!a.config.empty()) cfg = load_config(a.config);
  if (!a.pipeline.empty()) cfg.pipeline.kind = parse_pipeline_kind(a.pipeline);
  const SceneModel scene = load_scene(a.scene);
  const Trajectory traj = load_trajectory(a.traj);
  if (!validate_trajectory(traj)) throw Error(ErrorCode::InvalidArgument, "trajectory contains an illegal action");
  const GridSpec g = scene.grid();
  std::optional<TopDownLabeler> labeler;
  if (cfg.pipeline.kind == PipelineKind::Proj2Seg)
    labeler = train_labeler(cfg.pipeline.proj2seg, SceneParams{}, cfg.render);
  const PipelineResult r = run_pipeline(scene, traj, g, cfg.pipeline, cfg.render, labeler ? &*labeler : nullptr);
  save_grid_file(a.out, make_grid_file(r.map, r.heights, r.observed, r.memory ? &*r.memory : nullptr, a.with_scores));
}

void cmd_map_gt(const Args& a) {
  const SceneModel scene = load_scene(a.scene);
  const GroundTruth gt = ground_truth(scene, scene.grid());
  const BinaryRaster all(gt.map.labels.width(), gt.map.labels.height(), 1);
  save_grid_file(a.out, make_grid_file(gt.map, gt.heights, all));
}

void cmd_eval_seg(const Args& a) {
  const GridFile pred = load_grid_file(a.pred);
  const GridFile gt = load_grid_file(a.gt);
  const SegReport r = eval_segmentation(pred.semantic_map(), gt.semantic_map(), pred.observed());
  write_text(a.report, to_text([&](std::ostream& os) { write_seg_report(os, r); }));
  std::cerr << "acc " << r.acc << "  miou " << r.mean_iou << "  mbf1 " << r.mean_bf1 << '\n';
}

void cmd_nav_run(const Args& a) {
  auto in = open_in(a.episodes);
  const std::vector<Episode> eps = read_episodes(in);
  const GridFile mf = load_grid_file(a.map);
  const SceneModel scene = load_scene(a.scene);
  const GroundTruthWorld world = GroundTruthWorld::from_scene(scene, mf.grid);
  require_same_grid(world.map.grid, mf.grid);
  PlanningMaps maps;
  maps.semantic = mf.semantic_map();
  maps.observed = mf.observed();
  maps.free = a.free == "gt" ? world.free : estimate_freespace(mf.heights(), maps.observed);
  std::vector<EpisodeResult> results;
  for (const Episode& ep : eps) results.push_back(run_episode(ep, maps, world));
  write_text(a.results, to_text([&](std::ostream& os) { write_results(os, results); }));
  const NavSummary s = eval_navigation(results);
  std::cerr << "success " << s.success_rate << "  spl " << s.spl << "  soft_spl " << s.soft_spl << '\n';
}

void cmd_nav_episodes(const Args& a) {
  const SceneModel scene = load_scene(a.scene);
  const auto eps = generate_episodes(scene, scene.grid(), a.count, a.seed);
  write_text(a.out, to_text([&](std::ostream& os) { write_episodes(os, eps); }));
}

void cmd_qa_questions(const Args& a) {
  std::vector<CountQuestion> qs;
  for (int c = 1; c < kNumClasses; ++c) qs.push_back({c, static_cast<ClassId>(c)});
  write_text(a.out, to_text([&](std::ostream& os) { write_questions(os, qs); }));
}

void cmd_qa_run(const Args& a) {
  auto in = open_in(a.questions);
  const auto qs = read_questions(in);
  const SemanticMap map = load_grid_file(a.map).semantic_map();
  CountOptions opt;
  opt.window_cells = a.window_cells;
  std::vector<std::pair<int, int>> answers;
  for (const CountQuestion& q : qs) answers.emplace_back(q.id, count_instances(map, q.target, opt));
  write_text(a.answers, to_text([&](std::ostream& os) { write_answers(os, answers); }));
}

void cmd_render(const Args& a) { write_ppm(load_grid_file(a.map).labels(), a.out); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semmap: top-down semantic mapping toolkit"};
  app.require_subcommand(1);
  Args a;
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: SEMMAP_THREADS or hardware)")
      ->check(CLI::PositiveNumber);

  std::function<void()> action;
  auto bind = [&](CLI::App* sub, void (*fn)(const Args&)) {
    sub->callback([&action, &a, fn] { action = [&a, fn] { fn(a); }; });
  };

  auto* scene = app.add_subcommand("scene", "scene files")->require_subcommand(1);
  auto* scene_gen = scene->add_subcommand("gen", "generate a seeded scene");
  scene_gen->add_option("--seed", a.seed)->required();
  scene_gen->add_option("--out", a.out)->required();
  bind(scene_gen, cmd_scene_gen);

  auto* traj = app.add_subcommand("traj", "trajectories")->require_subcommand(1);
  auto* traj_rec = traj->add_subcommand("record", "record a coverage trajectory");
  traj_rec->add_option("--scene", a.scene)->required();
  traj_rec->add_option("--seed", a.seed)->required();
  traj_rec->add_option("--out", a.out)->required();
  bind(traj_rec, cmd_traj_record);

  auto* map = app.add_subcommand("map", "top-down maps")->require_subcommand(1);
  auto* build = map->add_subcommand("build", "build a map with a pipeline");
  build->add_option("--pipeline", a.pipeline)->required()->check(CLI::IsMember({"smnet", "seg2proj", "proj2seg"}));
  build->add_option("--scene", a.scene)->required();
  build->add_option("--traj", a.traj)->required();
  build->add_option("--config", a.config, "flat key = value config");
  build->add_option("--out", a.out)->required();
  build->add_flag("--scores", a.with_scores, "store per-class score layers (smnet)");
  bind(build, cmd_map_build);
  auto* gtmap = map->add_subcommand("gt", "ground-truth map, every cell observed");
  gtmap->add_option("--scene", a.scene)->required();
  gtmap->add_option("--out", a.out)->required();
  bind(gtmap, cmd_map_gt);

  auto* eval = app.add_subcommand("eval", "evaluation")->require_subcommand(1);
  auto* seg = eval->add_subcommand("seg", "segmentation metrics on the prediction's observed cells");
  seg->add_option("--pred", a.pred)->required();
  seg->add_option("--gt", a.gt)->required();
  seg->add_option("--report", a.report)->required();
  bind(seg, cmd_eval_seg);

  auto* nav = app.add_subcommand("nav", "object navigation")->require_subcommand(1);
  auto* nav_run = nav->add_subcommand("run", "run episodes on a map");
  nav_run->add_option("--episodes", a.episodes)->required();
  nav_run->add_option("--map", a.map)->required();
  nav_run->add_option("--free", a.free)->check(CLI::IsMember({"pred", "gt"}));
  nav_run->add_option("--scene", a.scene, "scene providing ground truth for execution")->required();
  nav_run->add_option("--results", a.results)->required();
  bind(nav_run, cmd_nav_run);
  auto* nav_eps = nav->add_subcommand("episodes", "generate seeded episodes for a scene");
  nav_eps->add_option("--scene", a.scene)->required();
  nav_eps->add_option("--seed", a.seed)->required();
  nav_eps->add_option("--count", a.count)->check(CLI::PositiveNumber);
  nav_eps->add_option("--out", a.out)->required();
  bind(nav_eps, cmd_nav_episodes);

  auto* qa = app.add_subcommand("qa", "counting questions")->require_subcommand(1);
  auto* qa_run = qa->add_subcommand("run", "answer counting questions from a map");
  qa_run->add_option("--questions", a.questions)->required();
  qa_run->add_option("--map", a.map)->required();
  qa_run->add_option("--answers", a.answers)->required();
  qa_run->add_option("--window-cells", a.window_cells, "count per tile of this side and sum")
      ->check(CLI::NonNegativeNumber);
  bind(qa_run, cmd_qa_run);
  auto* qa_q = qa->add_subcommand("questions", "one counting question per object class");
  qa_q->add_option("--out", a.out)->required();
  bind(qa_q, cmd_qa_questions);

  auto* render = app.add_subcommand("render", "palette PPM of a map's labels");
  render->add_option("--map", a.map)->required();
  render->add_option("--out", a.out)->required();
  bind(render, cmd_render);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cerr << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  if (threads > 0) set_thread_count(threads);
  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
