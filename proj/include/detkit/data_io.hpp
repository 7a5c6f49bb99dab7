#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "detkit/box.hpp"
#include "detkit/image.hpp"

namespace detkit {

/// Malformed or inconsistent input data. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GtBox {
  Box box;
  int label = 0;
};

/// One dataset image: dimensions, ground-truth boxes, and (once loaded)
/// its pixel buffer. Pixels stay empty until load_pixels is called.
struct AnnotatedImage {
  int64_t id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;
  Image pixels;
  std::vector<GtBox> truths;
};

struct Category {
  int id = 0;
  std::string name;
};

struct Annotations {
  std::vector<AnnotatedImage> images;
  std::vector<Category> categories;
  size_t clipped_boxes = 0;  // truth boxes that fell outside their image

  const AnnotatedImage* find(int64_t image_id) const;
};

struct ResultEntry {
  int64_t image_id = 0;
  Detection det;
};

/// All detections one model produced over a dataset.
struct ResultSet {
  int model_id = 0;
  std::vector<ResultEntry> entries;
};

struct PipelineConfig {
  double mask_ratio = 0.60;
  int patch_size = 32;
  double mosaic_probability = 1.0;
  double mixup_probability = 0.15;
  double mixup_beta = 32.0;
  std::vector<std::string> tta_transforms = {"identity", "hflip", "letterbox:1.25",
                                             "letterbox:0.75"};
  double wbf_iou_threshold = 0.55;
  double wbf_skip_threshold = 0.0;
  int ensemble_top_k = 30;
  uint64_t seed = 0;
};

/// COCO-style annotation JSON (images / annotations / categories arrays,
/// pixel [x,y,w,h] bboxes). Boxes come back normalized; boxes reaching
/// outside their image are clipped and counted in clipped_boxes.
Annotations load_annotations(const std::string& path);

/// COCO results JSON: array of {image_id, category_id, bbox, score}.
/// Needs previously loaded annotations for the image dimensions.
ResultSet load_results(const std::string& path, int model_id, const Annotations& anns);

/// Inverse of load_results; bboxes de-normalized to pixel [x,y,w,h].
void save_results(const ResultSet& set, const std::string& path, const Annotations& anns);

PipelineConfig load_config(const std::string& path);
void validate(const PipelineConfig& cfg);

/// Fill img.pixels from image_dir/img.file_name (PNG or JPEG).
void load_pixels(AnnotatedImage& img, const std::string& image_dir);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace detkit
