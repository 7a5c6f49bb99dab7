#include "detkit/data_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "detkit/image_codec.hpp"
#include "json.hpp"

namespace detkit {

namespace {

using nlohmann::json;

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

double get_number(const json& j, const char* field, const std::string& context) {
  if (!j.contains(field) || !j[field].is_number())
    throw DataError(context + ": missing or non-numeric field '" + field + "'");
  return j[field].get<double>();
}

/// Pixel [x,y,w,h] to a normalized xyxy box, clipped to the image.
/// Sets *clipped when any part of the bbox fell outside.
Box bbox_to_box(const json& bbox, int img_w, int img_h, bool* clipped, const std::string& ctx) {
  if (!bbox.is_array() || bbox.size() != 4)
    throw DataError(ctx + ": bbox must be a 4-element array");
  const double x = bbox[0].get<double>();
  const double y = bbox[1].get<double>();
  const double w = bbox[2].get<double>();
  const double h = bbox[3].get<double>();
  Box b{x / img_w, y / img_h, (x + w) / img_w, (y + h) / img_h};
  const Box c = clip(b);
  if (clipped)
    *clipped = b.x1 != c.x1 || b.y1 != c.y1 || b.x2 != c.x2 || b.y2 != c.y2;
  return c;
}

}  // namespace

const AnnotatedImage* Annotations::find(int64_t image_id) const {
  for (const auto& img : images)
    if (img.id == image_id) return &img;
  return nullptr;
}

Annotations load_annotations(const std::string& path) {
  const json root = parse_json_file(path);
  if (!root.is_object() || !root.contains("images") || !root.contains("annotations"))
    throw DataError(path + ": expected object with 'images' and 'annotations' arrays");

  Annotations anns;
  std::unordered_map<int64_t, size_t> index;
  for (const auto& jimg : root["images"]) {
    AnnotatedImage img;
    img.id = static_cast<int64_t>(get_number(jimg, "id", path + " images[]"));
    img.width = static_cast<int>(get_number(jimg, "width", path + " images[]"));
    img.height = static_cast<int>(get_number(jimg, "height", path + " images[]"));
    if (img.width <= 0 || img.height <= 0)
      throw DataError(path + ": image " + std::to_string(img.id) + " has non-positive dimensions");
    if (jimg.contains("file_name")) img.file_name = jimg["file_name"].get<std::string>();
    if (index.count(img.id))
      throw DataError(path + ": duplicate image id " + std::to_string(img.id));
    index[img.id] = anns.images.size();
    anns.images.push_back(std::move(img));
  }

  for (const auto& jann : root["annotations"]) {
    const auto image_id = static_cast<int64_t>(get_number(jann, "image_id", path + " annotations[]"));
    const int label = static_cast<int>(get_number(jann, "category_id", path + " annotations[]"));
    auto it = index.find(image_id);
    if (it == index.end())
      throw DataError(path + ": annotation references unknown image id " + std::to_string(image_id));
    AnnotatedImage& img = anns.images[it->second];
    bool clipped = false;
    const Box b = bbox_to_box(jann["bbox"], img.width, img.height, &clipped,
                              path + " annotations[]");
    if (clipped) anns.clipped_boxes++;
    img.truths.push_back(GtBox{b, label});
  }

  if (root.contains("categories")) {
    for (const auto& jcat : root["categories"]) {
      Category c;
      c.id = static_cast<int>(get_number(jcat, "id", path + " categories[]"));
      if (jcat.contains("name")) c.name = jcat["name"].get<std::string>();
      anns.categories.push_back(std::move(c));
    }
  }
  return anns;
}

ResultSet load_results(const std::string& path, int model_id, const Annotations& anns) {
  const json root = parse_json_file(path);
  if (!root.is_array()) throw DataError(path + ": expected a JSON array of results");

  std::unordered_map<int64_t, const AnnotatedImage*> index;
  for (const auto& img : anns.images) index[img.id] = &img;

  ResultSet set;
  set.model_id = model_id;
  std::vector<int64_t> unknown;
  for (const auto& jr : root) {
    const auto image_id = static_cast<int64_t>(get_number(jr, "image_id", path));
    auto it = index.find(image_id);
    if (it == index.end()) {
      if (std::find(unknown.begin(), unknown.end(), image_id) == unknown.end())
        unknown.push_back(image_id);
      continue;
    }
    const double score = get_number(jr, "score", path);
    if (score < 0.0 || score > 1.0)
      throw DataError(path + ": score " + std::to_string(score) + " outside [0,1] for image " +
                      std::to_string(image_id));
    Detection det;
    det.label = static_cast<int>(get_number(jr, "category_id", path));
    det.score = score;
    det.model_id = model_id;
    det.box = bbox_to_box(jr["bbox"], it->second->width, it->second->height, nullptr, path);
    set.entries.push_back(ResultEntry{image_id, det});
  }
  if (!unknown.empty()) {
    std::ostringstream msg;
    msg << path << ": results reference unknown image ids:";
    for (int64_t id : unknown) msg << ' ' << id;
    throw DataError(msg.str());
  }
  return set;
}

void save_results(const ResultSet& set, const std::string& path, const Annotations& anns) {
  std::unordered_map<int64_t, const AnnotatedImage*> index;
  for (const auto& img : anns.images) index[img.id] = &img;

  json root = json::array();
  for (const auto& e : set.entries) {
    auto it = index.find(e.image_id);
    if (it == index.end())
      throw DataError("save_results: unknown image id " + std::to_string(e.image_id));
    const double w = it->second->width;
    const double h = it->second->height;
    const Box& b = e.det.box;
    json jr;
    jr["image_id"] = e.image_id;
    jr["category_id"] = e.det.label;
    jr["bbox"] = {b.x1 * w, b.y1 * h, (b.x2 - b.x1) * w, (b.y2 - b.y1) * h};
    jr["score"] = e.det.score;
    root.push_back(std::move(jr));
  }
  write_text_file(path, root.dump(2) + "\n");
}

PipelineConfig load_config(const std::string& path) {
  const json root = parse_json_file(path);
  if (!root.is_object()) throw DataError(path + ": config must be a JSON object");

  PipelineConfig cfg;
  for (const auto& [key, value] : root.items()) {
    try {
      if (key == "mask_ratio") cfg.mask_ratio = value.get<double>();
      else if (key == "patch_size") cfg.patch_size = value.get<int>();
      else if (key == "mosaic_probability") cfg.mosaic_probability = value.get<double>();
      else if (key == "mixup_probability") cfg.mixup_probability = value.get<double>();
      else if (key == "mixup_beta") cfg.mixup_beta = value.get<double>();
      else if (key == "tta_transforms") cfg.tta_transforms = value.get<std::vector<std::string>>();
      else if (key == "wbf_iou_threshold") cfg.wbf_iou_threshold = value.get<double>();
      else if (key == "wbf_skip_threshold") cfg.wbf_skip_threshold = value.get<double>();
      else if (key == "ensemble_top_k") cfg.ensemble_top_k = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<uint64_t>();
      else throw DataError(path + ": unknown config field '" + key + "'");
    } catch (const json::exception& e) {
      throw DataError(path + ": bad value for '" + key + "': " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

void validate(const PipelineConfig& cfg) {
  if (!(cfg.mask_ratio > 0.0 && cfg.mask_ratio < 1.0))
    throw DataError("config: mask_ratio must be in (0,1)");
  if (cfg.patch_size <= 0) throw DataError("config: patch_size must be positive");
  if (cfg.ensemble_top_k < 1) throw DataError("config: ensemble_top_k must be >= 1");
  for (double p : {cfg.mosaic_probability, cfg.mixup_probability})
    if (p < 0.0 || p > 1.0) throw DataError("config: probabilities must be in [0,1]");
  if (!(cfg.mixup_beta > 0.0)) throw DataError("config: mixup_beta must be > 0");
  if (!(cfg.wbf_iou_threshold > 0.0 && cfg.wbf_iou_threshold <= 1.0))
    throw DataError("config: wbf_iou_threshold must be in (0,1]");
}

void load_pixels(AnnotatedImage& img, const std::string& image_dir) {
  if (img.file_name.empty())
    throw DataError("image " + std::to_string(img.id) + " has no file_name");
  img.pixels = read_image(image_dir + "/" + img.file_name);
  if (img.pixels.width != img.width || img.pixels.height != img.height)
    throw DataError("image " + std::to_string(img.id) + ": file dimensions " +
                    std::to_string(img.pixels.width) + "x" + std::to_string(img.pixels.height) +
                    " disagree with annotations " + std::to_string(img.width) + "x" +
                    std::to_string(img.height));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace detkit
