// Command-line surface: scene generation, rendering, benchmark construction,
// training, evaluation, exploration, spectrum analysis, and the loopback
// prior service.
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 provider/transport error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "gsblur/benchmark.hpp"
#include "gsblur/config_json.hpp"
#include "gsblur/image_io.hpp"
#include "gsblur/json_conv.hpp"
#include "gsblur/metrics.hpp"
#include "gsblur/priors.hpp"
#include "gsblur/service.hpp"
#include "gsblur/spectrum.hpp"
#include "gsblur/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gsblur;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  json j;
  f >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

std::unique_ptr<PriorProvider> provider_for(const std::string& spec,
                                            const Benchmark& b,
                                            std::uint64_t seed) {
  return make_provider(spec, &b.gt_scene, &b.dataset.intr, seed);
}

json pose_trace(const ScoredCandidate& c) {
  return {{"pose", pose_to_json(c.pose)},
          {"s", c.s},
          {"s_tilde", c.s_tilde},
          {"accepted", c.accepted},
          {"scored", c.scored}};
}

int run(int argc, char** argv) {
  CLI::App app{"sparse blurry-view gaussian splatting toolkit"};
  app.require_subcommand(1);

  // ---- gen-scene ----
  auto* gen = app.add_subcommand("gen-scene", "generate a synthetic scene");
  SceneRecipe recipe;
  std::string gen_out = "scene.json";
  std::string gen_layout = "textured-wall", gen_colors = "checker";
  gen->add_option("--seed", recipe.seed);
  gen->add_option("--count", recipe.count);
  gen->add_option("--layout", gen_layout);
  gen->add_option("--colors", gen_colors);
  gen->add_option("--sh-degree", recipe.sh_degree);
  gen->add_option("--out", gen_out);

  // ---- render ----
  auto* rnd = app.add_subcommand("render", "render a scene at a pose");
  std::string rnd_scene, rnd_pose, rnd_out = "render.png", rnd_depth;
  int rnd_size = 64;
  double rnd_focal = 0;
  std::uint64_t rnd_seed = 0;
  rnd->add_option("--scene", rnd_scene)->required();
  rnd->add_option("--pose", rnd_pose)->description("pose JSON file; default identity");
  rnd->add_option("--size", rnd_size);
  rnd->add_option("--focal", rnd_focal);
  rnd->add_option("--out", rnd_out);
  rnd->add_option("--depth", rnd_depth)->description("optional depth PFM path");
  rnd->add_option("--seed", rnd_seed);

  // ---- blur-dataset ----
  auto* bd = app.add_subcommand("blur-dataset", "build a synthetic benchmark");
  std::string bd_spec, bd_out = "dataset";
  BenchmarkSpec spec;
  std::string bd_traj = "arc";
  bd->add_option("--spec", bd_spec)->description("BenchmarkSpec JSON file");
  bd->add_option("--out", bd_out);
  bd->add_option("--seed", spec.seed);
  bd->add_option("--traj", bd_traj);
  bd->add_option("--amplitude", spec.exposure_amplitude);
  bd->add_option("--frames", spec.frame_count);
  bd->add_option("--size", spec.image_size);
  bd->add_option("--k", spec.n_train);
  bd->add_option("--count", spec.scene.count);

  // ---- train ----
  auto* tr = app.add_subcommand("train", "joint optimization");
  std::string tr_dataset, tr_config, tr_provider = "oracle", tr_out = "run";
  std::string tr_ablation;
  std::uint64_t tr_seed = 0;
  bool tr_seed_set = false;
  tr->add_option("--dataset", tr_dataset)->required();
  tr->add_option("--config", tr_config)->description("TrainConfig JSON file");
  tr->add_option("--provider", tr_provider);
  tr->add_option("--out", tr_out);
  tr->add_option("--ablation", tr_ablation)
      ->description("baseline | geo | deblur | depth/full");
  tr->add_option("--seed", tr_seed)->each([&](const std::string&) {
    tr_seed_set = true;
  });

  // ---- eval ----
  auto* ev = app.add_subcommand("eval", "held-out evaluation of run dirs");
  std::string ev_dataset, ev_out;
  std::vector<std::string> ev_runs;
  std::uint64_t ev_seed = 0;
  ev->add_option("--dataset", ev_dataset)->required();
  ev->add_option("--run", ev_runs)->required()->description("run dir (repeatable)");
  ev->add_option("--out", ev_out)->description("report JSON path");
  ev->add_option("--seed", ev_seed);

  // ---- explore ----
  auto* ex = app.add_subcommand("explore", "one exploration round with trace");
  std::string ex_dataset, ex_scene, ex_provider = "oracle", ex_out = "trace.json";
  ExplorationConfig ecfg;
  std::uint64_t ex_seed = 0;
  ex->add_option("--dataset", ex_dataset)->required();
  ex->add_option("--scene", ex_scene)
      ->description("scene to score; default: dataset init scene");
  ex->add_option("--provider", ex_provider);
  ex->add_option("--out", ex_out);
  ex->add_option("--s-min", ecfg.s_min);
  ex->add_option("--s-max", ecfg.s_max);
  ex->add_option("--candidates-per-pair", ecfg.candidates_per_pair);
  ex->add_option("--margin", ecfg.extrapolation_margin);
  ex->add_flag("--literal-sign", ecfg.literal_sign);
  ex->add_option("--seed", ex_seed);

  // ---- fft ----
  auto* ff = app.add_subcommand("fft", "radial spectrum of an image");
  std::string ff_image, ff_out, ff_mag;
  std::uint64_t ff_seed = 0;
  ff->add_option("--image", ff_image)->required();
  ff->add_option("--out", ff_out)->description("profile JSON path");
  ff->add_option("--magnitude", ff_mag)->description("log-magnitude PNG path");
  ff->add_option("--seed", ff_seed);

  // ---- serve-oracle ----
  auto* sv = app.add_subcommand("serve-oracle", "loopback prior service");
  std::string sv_dataset, sv_host = "127.0.0.1";
  int sv_port = 8080;
  double sv_sigma = 0.0;
  std::uint64_t sv_seed = 0;
  sv->add_option("--dataset", sv_dataset)->required();
  sv->add_option("--host", sv_host);
  sv->add_option("--port", sv_port);
  sv->add_option("--sigma", sv_sigma);
  sv->add_option("--seed", sv_seed);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    recipe.layout = layout_from_string(gen_layout);
    recipe.colors = color_scheme_from_string(gen_colors);
    std::cout << "seed: " << recipe.seed << "\n";
    save_scene(gen_out, generate_scene(recipe));
    std::cout << "wrote " << gen_out << "\n";
    return 0;
  }

  if (rnd->parsed()) {
    std::cout << "seed: " << rnd_seed << "\n";
    const GaussianScene scene = load_scene(rnd_scene);
    PoseSE3 pose;
    if (!rnd_pose.empty()) pose = pose_from_json(load_json_file(rnd_pose));
    const double focal = rnd_focal > 0 ? rnd_focal : 1.2 * rnd_size;
    const auto intr = CameraIntrinsics::simple(rnd_size, rnd_size, focal);
    const RenderOutput out = render(scene, pose, intr);
    write_png(rnd_out, out.color);
    if (!rnd_depth.empty()) write_pfm(rnd_depth, out.depth);
    std::cout << "wrote " << rnd_out << "\n";
    return 0;
  }

  if (bd->parsed()) {
    if (!bd_spec.empty()) spec = spec_from_json(load_json_file(bd_spec));
    else spec.traj = trajectory_from_string(bd_traj);
    std::cout << "seed: " << spec.seed << "\n";
    const Benchmark b = build_benchmark(spec);
    write_benchmark(bd_out, b);
    std::cout << "wrote " << bd_out << " (config hash " << spec_hash(spec)
              << ")\n";
    return 0;
  }

  if (tr->parsed()) {
    const Benchmark b = read_benchmark(tr_dataset);
    TrainConfig cfg;
    if (!tr_config.empty()) cfg = train_config_from_json(load_json_file(tr_config));
    if (tr_seed_set) cfg.seed = tr_seed;
    if (!tr_ablation.empty()) apply_ablation_stage(cfg, tr_ablation);
    std::cout << "seed: " << cfg.seed << "\n";
    std::unique_ptr<PriorProvider> provider;
    if (cfg.enable_pr || cfg.enable_explore)
      provider = provider_for(tr_provider, b, cfg.seed);
    const TrainResult res = train(b.dataset, cfg, provider.get());

    fs::create_directories(tr_out);
    save_scene((fs::path(tr_out) / "scene.json").string(), res.scene);
    json poses = json::array();
    for (const auto& s : res.segments)
      poses.push_back({{"start", pose_to_json(s.t_start)},
                       {"end", pose_to_json(s.t_end)}});
    json resolved = train_config_to_json(cfg);
    resolved["provider"] = provider ? provider->identity() : "none";
    resolved["dataset_config_hash"] = spec_hash(b.spec);
    write_text((fs::path(tr_out) / "poses.json").string(),
               json{{"segments", poses}}.dump(2));
    write_text((fs::path(tr_out) / "config.json").string(), resolved.dump(2));
    write_metrics_csv((fs::path(tr_out) / "metrics.csv").string(),
                      res.report.rows);
    std::cout << "explored rounds " << res.report.explored_rounds
              << ", accepted views " << res.report.accepted_views
              << ", pruned " << res.report.pruned_total << ", skipped steps "
              << res.report.skipped_steps << "\n";
    std::cout << "final heldout psnr " << res.report.final_psnr << " dB, ssim "
              << res.report.final_ssim << "\n";
    return 0;
  }

  if (ev->parsed()) {
    std::cout << "seed: " << ev_seed << "\n";
    const Benchmark b = read_benchmark(ev_dataset);
    json reports = json::array();
    for (const auto& run : ev_runs) {
      const fs::path sp = fs::path(run) / "scene.json";
      if (!fs::exists(sp))
        throw std::runtime_error("missing checkpoint: " + sp.string());
      const GaussianScene scene = load_scene(sp.string());
      const EvalReport rep = evaluate_scene(scene, b);
      json views = json::array();
      for (const auto& v : rep.views)
        views.push_back({{"index", v.index}, {"psnr", v.psnr}, {"ssim", v.ssim}});
      reports.push_back({{"run", run},
                         {"mean_psnr", rep.mean_psnr},
                         {"mean_ssim", rep.mean_ssim},
                         {"hf_ratio_render", rep.hf_ratio_render},
                         {"hf_ratio_gt", rep.hf_ratio_gt},
                         {"views", views}});
      std::cout << run << ": psnr " << rep.mean_psnr << " dB, ssim "
                << rep.mean_ssim << ", hf " << rep.hf_ratio_render << " (gt "
                << rep.hf_ratio_gt << ")\n";
    }
    if (!ev_out.empty())
      write_text(ev_out, json{{"dataset_config_hash", spec_hash(b.spec)},
                              {"runs", reports}}
                             .dump(2));
    return 0;
  }

  if (ex->parsed()) {
    std::cout << "seed: " << ex_seed << "\n";
    const Benchmark b = read_benchmark(ex_dataset);
    const GaussianScene scene =
        ex_scene.empty() ? b.dataset.init_scene : load_scene(ex_scene);
    auto provider = provider_for(ex_provider, b, ex_seed);
    std::vector<PoseImage> refs;
    for (std::size_t i = 0; i < b.dataset.blurry.size(); ++i)
      refs.push_back({b.dataset.init_mid[i],
                      provider->deblur(b.dataset.blurry[i], b.dataset.init_mid[i])});
    std::vector<PoseSE3> buffer = b.dataset.init_mid;
    const ExplorationRound round =
        explore(scene, b.dataset.intr, *provider, buffer, refs, ecfg);
    json trace = json::array();
    for (const auto& c : round.candidates) trace.push_back(pose_trace(c));
    write_text(ex_out, json{{"skipped", round.skipped},
                            {"baseline", round.baseline},
                            {"accepted", round.accepted.size()},
                            {"candidates", trace}}
                           .dump(2));
    std::cout << "baseline " << round.baseline << " dB, accepted "
              << round.accepted.size() << "/" << round.candidates.size()
              << ", wrote " << ex_out << "\n";
    return 0;
  }

  if (ff->parsed()) {
    std::cout << "seed: " << ff_seed << "\n";
    const Image img = read_png(ff_image);
    const SpectrumProfile prof = radial_spectrum(img);
    std::cout << "hf_ratio: " << prof.hf_ratio << "\n";
    if (!ff_out.empty())
      write_text(ff_out, json{{"hf_ratio", prof.hf_ratio},
                              {"radial", prof.radial}}
                             .dump(2));
    if (!ff_mag.empty()) {
      // Normalize the log magnitude into [0,1] for inspection.
      Image mag(prof.log_magnitude.width, prof.log_magnitude.height, 1);
      double mx = 1e-12;
      for (double v : prof.log_magnitude.data) mx = std::max(mx, v);
      for (std::size_t i = 0; i < mag.data.size(); ++i)
        mag.data[i] = float(prof.log_magnitude.data[i] / mx);
      write_png(ff_mag, mag);
    }
    return 0;
  }

  if (sv->parsed()) {
    std::cout << "seed: " << sv_seed << "\n";
    const Benchmark b = read_benchmark(sv_dataset);
    OracleService svc(b.gt_scene, b.dataset.intr, sv_sigma, sv_seed);
    std::cout << "serving on " << sv_host << ":" << sv_port << "\n";
    if (!svc.listen(sv_host, sv_port))
      throw std::runtime_error("bind failed on " + sv_host + ":" +
                               std::to_string(sv_port));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 4;
  } catch (const UnsupportedOperation& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
