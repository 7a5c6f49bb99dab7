#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detkit/augment.hpp"
#include "detkit/data_io.hpp"
#include "detkit/eval.hpp"
#include "detkit/fusion.hpp"
#include "detkit/image_codec.hpp"
#include "detkit/mim_mask.hpp"
#include "detkit/parallel.hpp"
#include "detkit/rng.hpp"
#include "detkit/tta.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace detkit;

namespace {

void log_line(const std::string& msg) { std::cerr << "detkit: " << msg << "\n"; }

/// Seed precedence: --seed flag > DETKIT_SEED env > config file > default.
uint64_t resolve_seed(const CLI::Option* seed_opt, uint64_t flag_value, const PipelineConfig& cfg) {
  if (seed_opt && seed_opt->count() > 0) return flag_value;
  if (const char* env = std::getenv("DETKIT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw DataError(std::string("DETKIT_SEED is not an integer: ") + env);
    }
  }
  return cfg.seed;
}

PipelineConfig maybe_load_config(const std::string& path) {
  if (path.empty()) return {};
  return load_config(path);
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
  std::string config_path, annotations_path, image_dir, out_dir;
  int n = 1;
  int size = 640;
  uint64_t seed = 0;
  int threads = 0;
};

AugSample make_base_sample(const std::vector<AnnotatedImage>& images, int out_size, Rng& rng) {
  const auto pick = [&] {
    return static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(images.size()) - 1));
  };
  const AnnotatedImage& img = images[pick()];
  AugSample s{img.pixels, img.truths};
  LetterboxPlacement place;
  return letterbox(s, out_size, out_size, 114, &place);
}

int run_augment(const AugmentArgs& args, const CLI::Option* seed_opt) {
  const PipelineConfig cfg = maybe_load_config(args.config_path);
  const uint64_t seed = resolve_seed(seed_opt, args.seed, cfg);

  Annotations anns = load_annotations(args.annotations_path);
  if (anns.images.empty()) throw DataError(args.annotations_path + ": no images");
  for (auto& img : anns.images) load_pixels(img, args.image_dir);
  if (anns.clipped_boxes > 0)
    log_line("clipped " + std::to_string(anns.clipped_boxes) + " truth boxes to image bounds");

  fs::create_directories(args.out_dir);
  const int threads = args.threads > 0 ? args.threads : hardware_threads();
  std::vector<AugSample> outputs(args.n);

  // One independent RNG stream per output index, so results do not depend
  // on the thread count.
  parallel_for(static_cast<size_t>(args.n), threads, [&](size_t k) {
    Rng rng(mix_seed(seed, k));
    AugSample sample;
    if (rng.uniform() < cfg.mosaic_probability) {
      std::vector<AugSample> sources;
      for (int i = 0; i < 4; ++i) sources.push_back(make_base_sample(anns.images, args.size, rng));
      const double cx = rng.uniform(0.25, 0.75);
      const double cy = rng.uniform(0.25, 0.75);
      sample = mosaic(sources, cx, cy, args.size);
    } else {
      sample = make_base_sample(anns.images, args.size, rng);
    }
    if (rng.uniform() < cfg.mixup_probability) {
      const AugSample other = make_base_sample(anns.images, args.size, rng);
      const double lambda = rng.beta(cfg.mixup_beta, cfg.mixup_beta);
      sample = mixup(sample, other, lambda);
    }
    if (rng.uniform() < 0.5) sample = hflip(sample);
    const double gh = rng.uniform(-0.015, 0.015);
    const double gs = rng.uniform(-0.7, 0.7);
    const double gv = rng.uniform(-0.4, 0.4);
    sample = color_jitter(sample, gh, gs, gv);
    outputs[k] = std::move(sample);
  });

  json out_images = json::array();
  json out_annotations = json::array();
  int ann_id = 1;
  for (int k = 0; k < args.n; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "aug_%06d.png", k);
    const AugSample& s = outputs[k];
    write_png(s.image, (fs::path(args.out_dir) / name).string());

    json jimg;
    jimg["id"] = k;
    jimg["width"] = s.image.width;
    jimg["height"] = s.image.height;
    jimg["file_name"] = name;
    out_images.push_back(std::move(jimg));
    for (const auto& gt : s.boxes) {
      json ja;
      ja["id"] = ann_id++;
      ja["image_id"] = k;
      ja["category_id"] = gt.label;
      ja["bbox"] = {gt.box.x1 * s.image.width, gt.box.y1 * s.image.height,
                    gt.box.width() * s.image.width, gt.box.height() * s.image.height};
      ja["area"] = gt.box.area() * s.image.width * s.image.height;
      out_annotations.push_back(std::move(ja));
    }
  }
  json root;
  root["images"] = std::move(out_images);
  root["annotations"] = std::move(out_annotations);
  json cats = json::array();
  for (const auto& c : anns.categories) cats.push_back({{"id", c.id}, {"name", c.name}});
  root["categories"] = std::move(cats);
  write_text_file((fs::path(args.out_dir) / "annotations.json").string(), root.dump(2) + "\n");

  log_line("wrote " + std::to_string(args.n) + " augmented images to " + args.out_dir);
  return 0;
}

// ------------------------------------------------------------------- mask

struct MaskArgs {
  std::string image_path, out_path, viz_path, mode = "whole", region;
  std::string config_path;
  double ratio = -1.0;
  int patch = 0;
  uint64_t seed = 0;
};

Box parse_region(const std::string& text) {
  std::istringstream ss(text);
  double v[4];
  char sep = ',';
  for (int i = 0; i < 4; ++i) {
    if (i > 0 && !(ss >> sep && sep == ',')) throw DataError("bad --region, want x1,y1,x2,y2");
    if (!(ss >> v[i])) throw DataError("bad --region, want x1,y1,x2,y2");
  }
  return Box{v[0], v[1], v[2], v[3]};
}

int run_mask(const MaskArgs& args, const CLI::Option* seed_opt) {
  const PipelineConfig cfg = maybe_load_config(args.config_path);
  const uint64_t seed = resolve_seed(seed_opt, args.seed, cfg);
  const double ratio = args.ratio >= 0.0 ? args.ratio : cfg.mask_ratio;
  const int patch = args.patch > 0 ? args.patch : cfg.patch_size;

  const Image img = read_image(args.image_path);
  Rng rng(seed);

  MaskRequest req;
  req.image_w = img.width;
  req.image_h = img.height;
  req.patch_size = patch;
  req.ratio = ratio;

  MaskPlan plan;
  if (args.mode == "whole") {
    plan = restrict_to_region(req, Box{0.0, 0.0, 1.0, 1.0}, MaskMode::whole, rng);
  } else if (args.mode == "cut") {
    if (args.region.empty()) throw DataError("--mode cut requires --region");
    plan = restrict_to_region(req, parse_region(args.region), MaskMode::cut, rng);
  } else {
    throw CLI::ValidationError("--mode must be whole or cut");
  }

  json root;
  root["grid_w"] = plan.grid_w;
  root["grid_h"] = plan.grid_h;
  root["patch_size"] = plan.patch_size;
  root["ratio"] = plan.ratio;
  root["masked"] = plan.masked;
  root["origin_x"] = plan.origin_x;
  root["origin_y"] = plan.origin_y;
  write_text_file(args.out_path, root.dump(2) + "\n");

  if (!args.viz_path.empty()) write_png(render_mask_viz(img, plan), args.viz_path);

  log_line("masked " + std::to_string(plan.masked.size()) + " of " +
           std::to_string(size_t(plan.grid_w) * plan.grid_h) + " patches");
  return 0;
}

// -------------------------------------------------------------- tta-merge

struct TtaMergeArgs {
  std::string views_path, annotations_path, out_path;
  std::vector<std::string> results;
};

std::vector<ViewTransform> load_views(const std::string& path) {
  json root;
  try {
    root = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!root.is_object() || !root.contains("views") || !root["views"].is_array())
    throw DataError(path + ": expected {\"views\": [...]}");
  std::vector<ViewTransform> views;
  for (const auto& jv : root["views"]) views.push_back(parse_view(jv.get<std::string>()));
  if (views.empty() || views.front().kind != ViewKind::identity)
    throw DataError(path + ": first view must be identity");
  return views;
}

int run_tta_merge(const TtaMergeArgs& args) {
  const std::vector<ViewTransform> views = load_views(args.views_path);
  if (args.results.size() != views.size())
    throw DataError("got " + std::to_string(args.results.size()) + " results files for " +
                    std::to_string(views.size()) + " views");

  const Annotations anns = load_annotations(args.annotations_path);

  // Per-view results are in the view image's pixel frame; rebuild the
  // annotation dims per view so normalization lands in that frame.
  std::vector<ResultSet> per_view_sets;
  for (size_t v = 0; v < views.size(); ++v) {
    Annotations view_anns = anns;
    for (auto& img : view_anns.images) {
      const ViewRecord rec = make_record(views[v], img.width, img.height);
      img.width = rec.view_w;
      img.height = rec.view_h;
    }
    per_view_sets.push_back(load_results(args.results[v], static_cast<int>(v), view_anns));
  }

  ResultSet merged;
  merged.model_id = 0;
  for (const auto& img : anns.images) {
    std::vector<std::vector<Detection>> per_view(views.size());
    std::vector<ViewRecord> records;
    for (size_t v = 0; v < views.size(); ++v) {
      records.push_back(make_record(views[v], img.width, img.height));
      for (const auto& e : per_view_sets[v].entries)
        if (e.image_id == img.id) per_view[v].push_back(e.det);
    }
    for (const auto& det : invert_detections(per_view, records))
      merged.entries.push_back(ResultEntry{img.id, det});
  }

  save_results(merged, args.out_path, anns);
  log_line("merged " + std::to_string(views.size()) + " views into " + args.out_path);
  return 0;
}

// ------------------------------------------------------------------- fuse

struct FuseArgs {
  std::vector<std::string> results;
  std::string weights, annotations_path, out_path, conf = "avg";
  std::string config_path;
  double iou = -1.0;
  double skip = -1.0;
};

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw DataError("bad --weights entry: " + tok);
    }
  }
  return out;
}

int run_fuse(const FuseArgs& args) {
  const PipelineConfig cfg = maybe_load_config(args.config_path);

  FusionParams params;
  params.iou_thr = args.iou >= 0.0 ? args.iou : cfg.wbf_iou_threshold;
  params.skip_thr = args.skip >= 0.0 ? args.skip : cfg.wbf_skip_threshold;
  if (args.conf == "avg") {
    params.conf_mode = ConfMode::Average;
  } else if (args.conf == "max") {
    params.conf_mode = ConfMode::Max;
  } else {
    throw CLI::ValidationError("--conf must be avg or max");
  }
  if (!args.weights.empty()) params.weights = parse_weights(args.weights);

  const Annotations anns = load_annotations(args.annotations_path);
  std::vector<ResultSet> sets;
  for (size_t m = 0; m < args.results.size(); ++m)
    sets.push_back(load_results(args.results[m], static_cast<int>(m), anns));

  ResultSet fused;
  fused.model_id = 0;
  for (const auto& img : anns.images) {
    std::vector<std::vector<Detection>> per_model(sets.size());
    for (size_t m = 0; m < sets.size(); ++m)
      for (const auto& e : sets[m].entries)
        if (e.image_id == img.id) per_model[m].push_back(e.det);
    for (const auto& det : wbf(per_model, params))
      fused.entries.push_back(ResultEntry{img.id, det});
  }

  save_results(fused, args.out_path, anns);
  log_line("fused " + std::to_string(sets.size()) + " models into " + args.out_path);
  return 0;
}

// ----------------------------------------------------------------- select

struct SelectArgs {
  std::string reports_dir, out_path, config_path;
  int k = 0;
};

int run_select(const SelectArgs& args) {
  const PipelineConfig cfg = maybe_load_config(args.config_path);
  const int k = args.k > 0 ? args.k : cfg.ensemble_top_k;

  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(args.reports_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());

  std::vector<RankedModel> pool;
  for (const auto& p : paths) {
    const auto [model_id, report] = load_report(p.string());
    pool.push_back(RankedModel{model_id, report.ap, report.ap50});
  }
  if (pool.empty()) throw DataError(args.reports_dir + ": no report JSON files");

  const std::vector<RankedModel> picked = rank_and_select(pool, k);
  std::ostringstream out;
  for (const auto& m : picked) out << m.model_id << "\n";
  write_text_file(args.out_path, out.str());
  log_line("selected " + std::to_string(picked.size()) + " of " + std::to_string(pool.size()) +
           " models");
  return 0;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string results_path, annotations_path, out_path;
  int model_id = 0;
  int max_dets = 0;
  int threads = 0;
};

int run_eval(const EvalArgs& args) {
  const Annotations anns = load_annotations(args.annotations_path);
  const ResultSet results = load_results(args.results_path, args.model_id, anns);

  EvalOptions opts;
  opts.max_dets = args.max_dets;
  opts.threads = args.threads > 0 ? args.threads : hardware_threads();
  const EvalReport report = evaluate(results, anns, opts);

  if (!args.out_path.empty()) write_text_file(args.out_path, report_to_json(report, args.model_id));
  std::cout << format_report_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detection pipeline toolkit: augmentation, MIM masking, TTA, fusion, evaluation"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: all cores)");

  AugmentArgs aug;
  CLI::App* aug_cmd = app.add_subcommand("augment", "Emit augmented images plus their boxes");
  aug_cmd->add_option("--config", aug.config_path, "Pipeline config JSON");
  aug_cmd->add_option("--annotations", aug.annotations_path, "COCO annotation JSON")->required();
  aug_cmd->add_option("--images", aug.image_dir, "Directory holding the image files")->required();
  aug_cmd->add_option("--out", aug.out_dir, "Output directory")->required();
  aug_cmd->add_option("--n", aug.n, "Number of augmented samples")->check(CLI::PositiveNumber);
  aug_cmd->add_option("--size", aug.size, "Output canvas size (default 640)")
      ->check(CLI::PositiveNumber);
  const CLI::Option* aug_seed = aug_cmd->add_option("--seed", aug.seed, "RNG seed");

  MaskArgs mask;
  CLI::App* mask_cmd = app.add_subcommand("mask", "Sample an MIM mask plan for one image");
  mask_cmd->add_option("--image", mask.image_path, "Input image")->required();
  mask_cmd->add_option("--config", mask.config_path, "Pipeline config JSON");
  mask_cmd->add_option("--ratio", mask.ratio, "Mask ratio (default 0.60)");
  mask_cmd->add_option("--patch", mask.patch, "Patch size in pixels (default 32)");
  mask_cmd->add_option("--mode", mask.mode, "whole or cut (default whole)");
  mask_cmd->add_option("--region", mask.region, "Crop region x1,y1,x2,y2 normalized (cut mode)");
  const CLI::Option* mask_seed = mask_cmd->add_option("--seed", mask.seed, "RNG seed");
  mask_cmd->add_option("--out", mask.out_path, "Mask plan JSON output")->required();
  mask_cmd->add_option("--viz", mask.viz_path, "Optional PNG visualization");

  TtaMergeArgs tta;
  CLI::App* tta_cmd = app.add_subcommand("tta-merge", "Map per-view detections back and merge");
  tta_cmd->add_option("--results", tta.results, "Per-view results JSON, one per view, in order")
      ->required()
      ->expected(-1);
  tta_cmd->add_option("--views", tta.views_path, "Views JSON: {\"views\": [...]}")->required();
  tta_cmd->add_option("--annotations", tta.annotations_path, "COCO annotation JSON")->required();
  tta_cmd->add_option("--out", tta.out_path, "Merged results JSON")->required();

  FuseArgs fuse;
  CLI::App* fuse_cmd = app.add_subcommand("fuse", "Weighted box fusion over model results");
  fuse_cmd->add_option("--results", fuse.results, "Per-model results JSON files")
      ->required()
      ->expected(-1);
  fuse_cmd->add_option("--weights", fuse.weights, "Comma-separated model weights");
  fuse_cmd->add_option("--iou", fuse.iou, "Cluster IoU threshold (default 0.55)");
  fuse_cmd->add_option("--skip", fuse.skip, "Drop detections scoring below this (default 0)");
  fuse_cmd->add_option("--conf", fuse.conf, "Cluster confidence: avg or max (default avg)");
  fuse_cmd->add_option("--config", fuse.config_path, "Pipeline config JSON");
  fuse_cmd->add_option("--annotations", fuse.annotations_path, "COCO annotation JSON")->required();
  fuse_cmd->add_option("--out", fuse.out_path, "Fused results JSON")->required();

  SelectArgs sel;
  CLI::App* sel_cmd = app.add_subcommand("select", "Rank evaluation reports, keep the top k");
  sel_cmd->add_option("--reports", sel.reports_dir, "Directory of report JSON files")->required();
  sel_cmd->add_option("--k", sel.k, "How many models to keep (default 30)");
  sel_cmd->add_option("--config", sel.config_path, "Pipeline config JSON");
  sel_cmd->add_option("--out", sel.out_path, "Output: selected model ids, one per line")
      ->required();

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "COCO-style AP over a results file");
  eval_cmd->add_option("--results", ev.results_path, "Results JSON")->required();
  eval_cmd->add_option("--annotations", ev.annotations_path, "COCO annotation JSON")->required();
  eval_cmd->add_option("--out", ev.out_path, "Report JSON output");
  eval_cmd->add_option("--model-id", ev.model_id, "Model id recorded in the report");
  eval_cmd->add_option("--max-dets", ev.max_dets,
                       "Cap detections per image and class (0 = no cap)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    aug.threads = threads;
    ev.threads = threads;
    if (aug_cmd->parsed()) return run_augment(aug, aug_seed);
    if (mask_cmd->parsed()) return run_mask(mask, mask_seed);
    if (tta_cmd->parsed()) return run_tta_merge(tta);
    if (fuse_cmd->parsed()) return run_fuse(fuse);
    if (sel_cmd->parsed()) return run_select(sel);
    if (eval_cmd->parsed()) return run_eval(ev);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "detkit: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "detkit: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "detkit: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
