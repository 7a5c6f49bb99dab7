#include "detkit/tta.hpp"

#include <cmath>
#include <stdexcept>

namespace detkit {

std::vector<ViewTransform> default_views() {
  return {ViewTransform::identity(), ViewTransform::hflip(),
          ViewTransform::letterbox_scale(1.25), ViewTransform::letterbox_scale(0.75)};
}

ViewTransform parse_view(const std::string& text) {
  if (text == "identity") return ViewTransform::identity();
  if (text == "hflip") return ViewTransform::hflip();
  const std::string prefix = "letterbox:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string arg = text.substr(prefix.size());
    const auto xpos = arg.find('x');
    try {
      if (xpos == std::string::npos) {
        const double s = std::stod(arg);
        if (s <= 0.0) throw std::invalid_argument("scale");
        return ViewTransform::letterbox_scale(s);
      }
      const int w = std::stoi(arg.substr(0, xpos));
      const int h = std::stoi(arg.substr(xpos + 1));
      if (w <= 0 || h <= 0) throw std::invalid_argument("size");
      return ViewTransform::letterbox_size(w, h);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad letterbox view spec: " + text);
    }
  }
  throw std::invalid_argument("unknown view: " + text);
}

std::string view_name(const ViewTransform& v) {
  switch (v.kind) {
    case ViewKind::identity: return "identity";
    case ViewKind::hflip: return "hflip";
    case ViewKind::letterbox:
      if (v.target_w > 0)
        return "letterbox:" + std::to_string(v.target_w) + "x" + std::to_string(v.target_h);
      {
        std::string s = std::to_string(v.scale);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return "letterbox:" + s;
      }
  }
  return "unknown";
}

ViewRecord make_record(const ViewTransform& view, int src_w, int src_h) {
  if (src_w <= 0 || src_h <= 0) throw std::invalid_argument("make_record: bad source dims");
  ViewRecord rec;
  rec.kind = view.kind;
  rec.src_w = src_w;
  rec.src_h = src_h;
  rec.view_w = src_w;
  rec.view_h = src_h;
  if (view.kind == ViewKind::letterbox) {
    int tw = view.target_w;
    int th = view.target_h;
    if (tw <= 0) {
      tw = std::max(1, static_cast<int>(std::lround(view.scale * src_w)));
      th = std::max(1, static_cast<int>(std::lround(view.scale * src_h)));
    }
    rec.placement = letterbox_placement(src_w, src_h, tw, th);
    rec.view_w = tw;
    rec.view_h = th;
  }
  return rec;
}

Box ViewRecord::forward(const Box& b) const {
  switch (kind) {
    case ViewKind::identity: return b;
    case ViewKind::hflip: return Box{1.0 - b.x2, b.y1, 1.0 - b.x1, b.y2};
    case ViewKind::letterbox: return placement.forward(b);
  }
  return b;
}

Box ViewRecord::inverse(const Box& b) const {
  switch (kind) {
    case ViewKind::identity: return b;
    case ViewKind::hflip: return Box{1.0 - b.x2, b.y1, 1.0 - b.x1, b.y2};
    case ViewKind::letterbox: return placement.inverse(b);
  }
  return b;
}

std::vector<ViewImage> apply_views(const Image& img, const std::vector<ViewTransform>& views) {
  if (views.empty()) throw std::invalid_argument("apply_views: views must be nonempty");
  if (views.front().kind != ViewKind::identity)
    throw std::invalid_argument("apply_views: first view must be identity");

  std::vector<ViewImage> out;
  out.reserve(views.size());
  for (const auto& view : views) {
    ViewImage vi;
    vi.record = make_record(view, img.width, img.height);
    switch (view.kind) {
      case ViewKind::identity:
        vi.image = img;
        break;
      case ViewKind::hflip:
        vi.image = hflip(AugSample{img, {}}).image;
        break;
      case ViewKind::letterbox:
        vi.image = letterbox(AugSample{img, {}}, vi.record.view_w, vi.record.view_h, 114).image;
        break;
    }
    out.push_back(std::move(vi));
  }
  return out;
}

std::vector<Detection> invert_detections(const std::vector<std::vector<Detection>>& per_view,
                                         const std::vector<ViewRecord>& records) {
  if (per_view.size() != records.size())
    throw std::invalid_argument("invert_detections: detection list / record count mismatch");
  std::vector<Detection> merged;
  for (size_t v = 0; v < per_view.size(); ++v) {
    for (const Detection& det : per_view[v]) {
      Detection m = det;
      m.box = clip(records[v].inverse(det.box));
      merged.push_back(m);
    }
  }
  return merged;
}

}  // namespace detkit
