#include "adgen/composition.hpp"

#include "adgen/errors.hpp"
#include "adgen/prompts.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace adgen {

std::string_view to_string(Slot slot) {
  switch (slot) {
  case Slot::Left:
    return "left";
  case Slot::Center:
    return "center";
  case Slot::Right:
    return "right";
  }
  return "center";
}

Slot parse_slot(std::string_view s) {
  if (s == "left")
    return Slot::Left;
  if (s == "center")
    return Slot::Center;
  if (s == "right")
    return Slot::Right;
  throw InputError("unknown slot '" + std::string(s) + "' (expected left, center or right)");
}

double slot_center(Slot slot) {
  switch (slot) {
  case Slot::Left:
    return 1.0 / 6.0;
  case Slot::Center:
    return 0.5;
  case Slot::Right:
    return 5.0 / 6.0;
  }
  return 0.5;
}

void PlanOptions::validate() const {
  if (canvas_width < 16 || canvas_height < 16)
    throw InputError("plan.canvas size must be at least 16x16");
  if (slots.empty())
    throw InputError("plan.slots must not be empty");
  if (rotations_deg.empty())
    throw InputError("plan.rotations_deg must not be empty");
  for (int r : rotations_deg)
    if (r < 0 || r >= 360)
      throw InputError("plan.rotations_deg entries must be in [0, 360)");
  if (!(scale_min > 0 && scale_min <= scale_max && scale_max <= 1))
    throw InputError("plan.scale_bounds must satisfy 0 < min <= max <= 1");
  if (!(fallback_scale.s_w > 0 && fallback_scale.s_w <= 1 && fallback_scale.s_h > 0 &&
        fallback_scale.s_h <= 1))
    throw InputError("plan.fallback_scale factors must be in (0, 1]");
  if (!(vertical_anchor > 0 && vertical_anchor <= 1))
    throw InputError("plan.vertical_anchor must be in (0, 1]");
  if (!(reduction_factor > 0 && reduction_factor < 1))
    throw InputError("plan.reduction_factor must be in (0, 1)");
  if (max_reductions < 0)
    throw InputError("plan.max_reductions must not be negative");
}

namespace {

double radians(int deg) { return deg * std::numbers::pi / 180.0; }

// Premultiplied bilinear sample at continuous pixel coordinates (pixel centers
// at integers); samples outside the raster are transparent.
void sample_premultiplied(const Raster &src, double x, double y, double out[4]) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  for (int c = 0; c < 4; ++c)
    out[c] = 0.0;
  for (int dy = 0; dy < 2; ++dy) {
    const int yy = y0 + dy;
    if (yy < 0 || yy >= src.height())
      continue;
    const double wy = dy ? fy : 1 - fy;
    for (int dx = 0; dx < 2; ++dx) {
      const int xx = x0 + dx;
      if (xx < 0 || xx >= src.width())
        continue;
      const double w = wy * (dx ? fx : 1 - fx);
      const std::uint8_t *p = src.pixel(xx, yy);
      const double a = p[3];
      for (int c = 0; c < 3; ++c)
        out[c] += w * p[c] * a;
      out[3] += w * a;
    }
  }
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

Raster alpha_mask(const Raster &rgba) {
  Raster mask(rgba.width(), rgba.height(), 1);
  for (int y = 0; y < rgba.height(); ++y)
    for (int x = 0; x < rgba.width(); ++x)
      mask.at(x, y, 0) = rgba.at(x, y, 3) > 0 ? 255 : 0;
  return mask;
}

} // namespace

std::pair<int, int> rotated_extent(int w, int h, double deg) {
  const double t = deg * std::numbers::pi / 180.0;
  const double c = std::abs(std::cos(t)), s = std::abs(std::sin(t));
  // The epsilon keeps exact multiples (0, 90 degrees) from rounding up.
  const int bw = static_cast<int>(std::ceil(w * c + h * s - 1e-9));
  const int bh = static_cast<int>(std::ceil(w * s + h * c - 1e-9));
  return {std::max(bw, 1), std::max(bh, 1)};
}

PlacedProduct place_product(const Raster &product_rgba, int width, int height, int rotation_deg) {
  if (!product_rgba.has_alpha())
    throw InputError("product raster needs an alpha channel");
  Raster scaled = resize_bilinear(product_rgba, width, height);
  if (rotation_deg % 360 == 0) {
    Raster mask = alpha_mask(scaled);
    return {std::move(scaled), std::move(mask)};
  }

  const auto [bw, bh] = rotated_extent(width, height, rotation_deg);
  const double t = radians(rotation_deg);
  const double c = std::cos(t), s = std::sin(t);
  PlacedProduct out{Raster(bw, bh, 4), Raster(bw, bh, 1)};
  for (int py = 0; py < bh; ++py) {
    for (int px = 0; px < bw; ++px) {
      // Counterclockwise on screen (y down): invert by rotating the offset back.
      const double u = px + 0.5 - bw / 2.0;
      const double v = py + 0.5 - bh / 2.0;
      const double sx = u * c - v * s + width / 2.0;
      const double sy = u * s + v * c + height / 2.0;
      const int ix = static_cast<int>(std::floor(sx));
      const int iy = static_cast<int>(std::floor(sy));
      if (ix < 0 || iy < 0 || ix >= width || iy >= height || scaled.at(ix, iy, 3) == 0)
        continue;
      out.mask.at(px, py, 0) = 255;
      double acc[4];
      sample_premultiplied(scaled, sx - 0.5, sy - 0.5, acc);
      std::uint8_t *q = out.patch.pixel(px, py);
      if (acc[3] > 0)
        for (int k = 0; k < 3; ++k)
          q[k] = to_byte(acc[k] / acc[3]);
      q[3] = std::max<std::uint8_t>(1, to_byte(acc[3]));
    }
  }
  return out;
}

Canvas make_canvas(const Asset *background, const PlanOptions &options) {
  Canvas canvas;
  if (background) {
    canvas.raster = resize_bilinear(to_rgb(background->raster), options.canvas_width, options.canvas_height);
    canvas.background_asset_id = background->asset_id;
  } else {
    canvas.raster = Raster(options.canvas_width, options.canvas_height, 3, 255);
  }
  return canvas;
}

CompositionVariant composite(const Canvas &canvas, const Raster &product_rgba, Slot slot,
                             int rotation_deg, ScaleFactors scale, const PlanOptions &options) {
  if (!product_rgba.has_alpha())
    throw InputError("product raster needs an alpha channel");
  if (!(scale.s_w > 0 && scale.s_w <= 1 && scale.s_h > 0 && scale.s_h <= 1))
    throw InputError("scale factors must be in (0, 1]");
  const int W = canvas.width(), H = canvas.height();
  const long baseline = std::lround(options.vertical_anchor * H);

  CompositionVariant v;
  v.slot = slot;
  v.rotation_deg = rotation_deg;
  v.variant_id = std::string(to_string(slot)) + "-r" + std::to_string(rotation_deg);

  int w = 0, h = 0;
  for (;;) {
    w = std::max(1, static_cast<int>(std::floor(scale.s_w * W)));
    h = std::max(1, static_cast<int>(std::floor(scale.s_h * H)));
    const auto [bw, bh] = rotated_extent(w, h, rotation_deg);
    v.placed_bbox = {static_cast<int>(std::lround(slot_center(slot) * W - bw / 2.0)),
                     static_cast<int>(baseline - bh), bw, bh};
    if (v.placed_bbox.inside(W, H) || v.reduction_steps == options.max_reductions)
      break;
    scale.s_w *= options.reduction_factor;
    scale.s_h *= options.reduction_factor;
    ++v.reduction_steps;
  }
  v.scale = scale;
  if (!v.placed_bbox.inside(W, H)) {
    Rect &b = v.placed_bbox;
    if (b.width > W || b.height > H)
      throw InputError("product does not fit the canvas after " +
                       std::to_string(options.max_reductions) + " scale reductions");
    b.x = std::clamp(b.x, 0, W - b.width);
    b.y = std::clamp(b.y, 0, H - b.height);
    v.shifted = true;
  }

  const auto placed = place_product(product_rgba, w, h, rotation_deg);
  v.composed = canvas.raster.channels() == 3 ? canvas.raster : to_rgb(canvas.raster);
  v.mask = Raster(W, H, 1);
  const Rect &b = v.placed_bbox;
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const std::uint8_t *p = placed.patch.pixel(x, y);
      const unsigned a = p[3];
      if (a == 0)
        continue;
      std::uint8_t *q = v.composed.pixel(b.x + x, b.y + y);
      for (int c = 0; c < 3; ++c)
        q[c] = static_cast<std::uint8_t>((p[c] * a + q[c] * (255 - a) + 127) / 255);
      v.mask.at(b.x + x, b.y + y, 0) = placed.mask.at(x, y, 0);
    }
  }
  return v;
}

CompositionPlanner::CompositionPlanner(std::shared_ptr<const backend::StructuredCompleter> advisor,
                                       PlanOptions options)
    : advisor_(std::move(advisor)), options_(std::move(options)) {
  if (!advisor_)
    throw InputError("CompositionPlanner needs an advisor model");
  options_.validate();
}

ScaleAdvice CompositionPlanner::advise_scale(const Canvas &canvas, const Asset &product,
                                             const SceneCaption &caption) const {
  backend::TextCompletionRequest req;
  req.system_instructions = prompts::get(prompts::kCompositionAdvisor);
  std::ostringstream content;
  content << "caption: " << caption.text << "\nproduct_label: " << product.label
          << "\ncategory: " << product.category << "\ncanvas_width: " << canvas.width()
          << "\ncanvas_height: " << canvas.height() << "\nproduct_width: " << product.raster.width()
          << "\nproduct_height: " << product.raster.height()
          << "\ncanvas_kind: " << (canvas.background_asset_id ? "background" : "empty");
  req.user_content = content.str();
  req.attached_images = {canvas.raster, product.raster};
  req.expected_schema_id = backend::schema_id::kScaleAdvice;

  ScaleAdvice advice;
  try {
    const auto reply = advisor_->complete(req);
    advice.scale = {reply.at("s_w").get<double>(), reply.at("s_h").get<double>()};
  } catch (const BackendError &e) {
    advice.scale = options_.fallback_scale;
    advice.fallback = true;
    advice.warnings.push_back(std::string("composition advisor failed, using default scale: ") + e.what());
    return advice;
  }
  auto clamp = [&](double &v, const char *name) {
    const double c = std::clamp(v, options_.scale_min, options_.scale_max);
    if (c != v) {
      std::ostringstream msg;
      msg << "advisor " << name << "=" << v << " clamped to " << c;
      advice.warnings.push_back(msg.str());
      v = c;
    }
  };
  clamp(advice.scale.s_w, "s_w");
  clamp(advice.scale.s_h, "s_h");
  return advice;
}

std::vector<CompositionVariant> CompositionPlanner::enumerate_variants(const Canvas &canvas,
                                                                       const Asset &product,
                                                                       ScaleFactors scale) const {
  if (!product.raster.has_alpha())
    throw InputError("product asset " + product.asset_id + " has no alpha channel");
  std::vector<CompositionVariant> out;
  out.reserve(options_.slots.size() * options_.rotations_deg.size());
  for (Slot slot : options_.slots)
    for (int rot : options_.rotations_deg)
      out.push_back(composite(canvas, product.raster, slot, rot, scale, options_));
  return out;
}

} // namespace adgen
