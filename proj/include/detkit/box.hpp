#pragma once

namespace detkit {

/// Axis-aligned rectangle in normalized [0,1] image coordinates, x1<=x2, y1<=y2.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
};

enum class SizeClass { Small, Medium, Large };

/// One box proposed by one model for one image.
struct Detection {
  Box box;
  int label = 0;
  double score = 0.0;
  int model_id = 0;
};

/// Intersection over union. Returns 0 when the union is empty.
double iou(const Box& a, const Box& b);

/// Clamp all coordinates to [0,1] and re-establish x1<=x2, y1<=y2.
Box clip(const Box& b);

/// COCO size buckets from the box's pixel area on a img_w x img_h image:
/// Small < 32^2, Medium < 96^2, Large otherwise.
SizeClass size_class(const Box& b, int img_w, int img_h);

const char* size_class_name(SizeClass s);

}  // namespace detkit
