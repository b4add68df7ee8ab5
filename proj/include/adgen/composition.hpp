#pragma once

#include "adgen/asset_store.hpp"
#include "adgen/caption.hpp"
#include "adgen/raster.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace adgen {

enum class Slot { Left, Center, Right };

std::string_view to_string(Slot slot);
/// "left" / "center" / "right"; throws InputError otherwise.
Slot parse_slot(std::string_view s);
/// Horizontal center of a slot as a fraction of canvas width (1/6, 1/2, 5/6).
double slot_center(Slot slot);

struct Canvas {
  Raster raster; // RGB
  std::optional<std::string> background_asset_id; // nullopt: empty canvas

  int width() const { return raster.width(); }
  int height() const { return raster.height(); }
};

struct ScaleFactors {
  double s_w = 0.33;
  double s_h = 0.33;
  friend bool operator==(const ScaleFactors &, const ScaleFactors &) = default;
};

struct ScaleAdvice {
  ScaleFactors scale;
  bool fallback = false; // backend failed; default factors used
  std::vector<std::string> warnings;
};

struct PlanOptions {
  int canvas_width = 1024;
  int canvas_height = 1024;
  std::vector<Slot> slots{Slot::Left, Slot::Center, Slot::Right};
  std::vector<int> rotations_deg{0, 15, 345};
  double scale_min = 0.1;
  double scale_max = 0.8;
  ScaleFactors fallback_scale{0.33, 0.33};
  /// Product bottom edge, as a fraction of canvas height.
  double vertical_anchor = 0.85;
  double reduction_factor = 0.95;
  int max_reductions = 20;

  /// Throws InputError describing the first invalid field.
  void validate() const;
};

struct CompositionVariant {
  std::string variant_id; // "<slot>-r<deg>"
  Slot slot = Slot::Center;
  int rotation_deg = 0;
  ScaleFactors scale;         // after any overflow reduction
  int reduction_steps = 0;    // times the advised scale was multiplied by the reduction factor
  bool shifted = false;       // still overflowing after the last reduction, so moved inside the canvas
  Rect placed_bbox;
  Raster composed;            // RGB, canvas sized
  Raster mask;                // 1 channel, canvas sized, 255 on the product footprint
};

/// Width and height of the axis-aligned box enclosing a w x h rectangle
/// rotated by `deg` about its center.
std::pair<int, int> rotated_extent(int w, int h, double deg);

/// Product resized to (floor(s_w * W), floor(s_h * H)) and rotated
/// counterclockwise about its center. `patch` is RGBA and `mask` single
/// channel; both have the rotated extent's size and mask == (patch alpha > 0).
struct PlacedProduct {
  Raster patch;
  Raster mask;
};
PlacedProduct place_product(const Raster &product_rgba, int width, int height, int rotation_deg);

/// White canvas, or the background stretched to the canvas size.
Canvas make_canvas(const Asset *background, const PlanOptions &options);

/// Alpha-over compositing of one placement. Throws InputError when the product
/// has no alpha channel or the placement cannot be made to fit.
CompositionVariant composite(const Canvas &canvas, const Raster &product_rgba, Slot slot,
                             int rotation_deg, ScaleFactors scale, const PlanOptions &options);

class CompositionPlanner {
public:
  CompositionPlanner(std::shared_ptr<const backend::StructuredCompleter> advisor, PlanOptions options = {});

  /// Asks the multimodal advisor for scale factors; out-of-bounds answers are
  /// clamped with a warning and backend failure falls back to the defaults.
  ScaleAdvice advise_scale(const Canvas &canvas, const Asset &product, const SceneCaption &caption) const;

  /// slots x rotations variants, slot-major in configured order.
  std::vector<CompositionVariant> enumerate_variants(const Canvas &canvas, const Asset &product,
                                                     ScaleFactors scale) const;

  const PlanOptions &options() const { return options_; }

private:
  std::shared_ptr<const backend::StructuredCompleter> advisor_;
  PlanOptions options_;
};

} // namespace adgen
