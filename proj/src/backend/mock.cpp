#include "adgen/backend/mock.hpp"

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"
#include "adgen/text_util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace adgen::backend {

namespace {

const std::set<std::string> kPrepositions = {
    "on",     "in",    "at",     "with",    "near",   "under", "by",     "against", "beside",
    "inside", "during", "for",   "over",    "atop",   "along", "among",  "across",  "behind",
    "beneath", "below", "above", "around",  "between", "into", "onto",   "outside", "within"};

const std::set<std::string> kArticles = {"a", "an", "the", "some"};

// Words that turn a prepositional phrase into a theme rather than scenery.
const std::set<std::string> kThemeWords = {
    "sunset",    "sunrise",  "dusk",     "dawn",      "twilight", "night",     "midnight",
    "evening",   "morning",  "noon",     "midday",    "afternoon", "christmas", "holiday",
    "holidays",  "halloween", "easter",  "thanksgiving", "valentine's", "valentines", "birthday",
    "wedding",   "summer",   "winter",   "spring",    "autumn",   "fall",      "friday",
    "sale",      "new",      "year",     "anniversary", "festive", "season",   "hour"};

const std::set<std::string> kStopWords = {"a",   "an",  "the", "of",  "and", "or",
                                          "on",  "in",  "at",  "with", "to", "for"};

std::string strip_articles(const std::vector<std::string> &words) {
  std::vector<std::string> kept;
  for (const auto &w : words)
    if (!kArticles.contains(w))
      kept.push_back(w);
  return text::join(kept, " ");
}

json brief_reply(const std::map<std::string, std::string> &fields) {
  auto it = fields.find("prompt");
  const auto brief = rule_based_brief(it == fields.end() ? "" : it->second);
  return {{"primary_product", brief.primary_product},
          {"background_elements", brief.background_elements},
          {"theme", brief.theme}};
}

std::set<std::string> content_words(std::string_view s) {
  std::set<std::string> out;
  for (auto &w : text::words(s))
    if (!kStopWords.contains(w))
      out.insert(std::move(w));
  return out;
}

json verdict_reply(const std::map<std::string, std::string> &fields, ValidatorPolicy policy) {
  int verdict = 0;
  switch (policy) {
  case ValidatorPolicy::AcceptAll:
    verdict = 1;
    break;
  case ValidatorPolicy::RejectAll:
    verdict = 0;
    break;
  case ValidatorPolicy::TokenOverlap: {
    auto get = [&](const char *k) {
      auto it = fields.find(k);
      return it == fields.end() ? std::string() : it->second;
    };
    const auto wanted = content_words(get("background_elements"));
    for (const auto &w : content_words(get("candidate_label")))
      if (wanted.contains(w))
        verdict = 1;
    break;
  }
  }
  return {{"verdict", verdict}};
}

json caption_reply(const std::map<std::string, std::string> &fields, bool has_image) {
  auto get = [&](const char *k) {
    auto it = fields.find(k);
    return it == fields.end() ? std::string() : it->second;
  };
  std::string caption = "A marketing photograph of a " + get("primary_product");
  if (const auto bg = get("background_elements"); !bg.empty())
    caption += " set in " + bg;
  if (const auto theme = get("theme"); !theme.empty())
    caption += ", " + theme + " mood";
  if (has_image)
    caption += ", colors and lighting matched to the reference backdrop";
  caption += ", sharp focus, natural shadows";
  return {{"caption", caption}};
}

json scale_reply(const std::map<std::string, std::string> &fields,
                 const std::vector<Raster> &images) {
  auto it = fields.find("category");
  const double base = mock_category_size(it == fields.end() ? "" : it->second);
  double canvas_aspect = 1.0;
  double product_aspect = 1.0;
  if (images.size() >= 2 && !images[0].empty() && !images[1].empty()) {
    canvas_aspect = static_cast<double>(images[0].width()) / images[0].height();
    product_aspect = static_cast<double>(images[1].width()) / images[1].height();
  }
  double s_w = base, s_h = base;
  if (product_aspect >= 1.0)
    s_h = base * canvas_aspect / product_aspect;
  else
    s_w = base * product_aspect / canvas_aspect;
  return {{"s_w", s_w}, {"s_h", s_h}};
}

json rubric_reply(const std::map<std::string, std::string> &fields) {
  const auto notes_it = fields.find("generator_notes");
  const std::string notes = notes_it == fields.end() ? std::string() : notes_it->second;
  auto has = [&](std::string_view flag) { return notes.find(flag) != std::string::npos; };
  return {{"caption_alignment", has(kFlagCaptionMiss) ? 0 : 1},
          {"product_uniqueness", has(kFlagDuplicate) ? 0 : 1},
          {"physical_realism", has(kFlagFloating) ? 0 : 1},
          {"lighting_consistency", has(kFlagLightingMismatch) ? 0 : 1}};
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return SplitMix64(a ^ (b * 0x9e3779b97f4a7c15ULL)).next();
}

} // namespace

RuleBasedBrief rule_based_brief(std::string_view prompt) {
  const auto tokens = text::words(prompt);
  std::vector<std::string> product;
  std::vector<std::vector<std::string>> phrases;
  bool in_product = true;
  for (const auto &t : tokens) {
    if (kPrepositions.contains(t)) {
      in_product = false;
      phrases.emplace_back();
      continue;
    }
    if (in_product)
      product.push_back(t);
    else
      phrases.back().push_back(t);
  }

  std::vector<std::string> background, theme;
  for (const auto &phrase : phrases) {
    auto stripped = strip_articles(phrase);
    if (stripped.empty())
      continue;
    const bool thematic =
        std::any_of(phrase.begin(), phrase.end(), [](const auto &w) { return kThemeWords.contains(w); });
    (thematic ? theme : background).push_back(std::move(stripped));
  }
  return {strip_articles(product), text::join(background, ", "), text::join(theme, ", ")};
}

double mock_category_size(std::string_view category) {
  static const std::array<std::pair<const char *, double>, 22> table{{
      {"sofa", 0.6},     {"couch", 0.6},    {"bed", 0.65},      {"table", 0.55},
      {"desk", 0.55},    {"chair", 0.45},   {"lamp", 0.35},     {"luggage", 0.4},
      {"suitcase", 0.4}, {"bag", 0.3},      {"backpack", 0.3},  {"shoe", 0.3},
      {"shoes", 0.3},    {"boot", 0.3},     {"hat", 0.25},      {"mug", 0.2},
      {"cup", 0.2},      {"bottle", 0.22},  {"phone", 0.18},    {"watch", 0.15},
      {"toaster", 0.3},  {"broom", 0.5},
  }};
  const auto key = text::to_lower(text::trim(category));
  for (const auto &[name, size] : table)
    if (key == name)
      return size;
  return 0.35;
}

std::string MockLanguageModel::respond(const TextCompletionRequest &request,
                                       std::string_view /*repair_hint*/) {
  const auto fields = text::parse_field_lines(request.user_content);
  const auto &id = request.expected_schema_id;
  json reply;
  if (id == schema_id::kBrief)
    reply = brief_reply(fields);
  else if (id == schema_id::kBackgroundVerdict)
    reply = verdict_reply(fields, options_.validator);
  else if (id == schema_id::kCaption)
    reply = caption_reply(fields, !request.attached_images.empty());
  else if (id == schema_id::kScaleAdvice)
    reply = scale_reply(fields, request.attached_images);
  else if (id == schema_id::kRubric)
    reply = rubric_reply(fields);
  else
    throw BackendError(BackendErrorKind::MalformedResponse, "mock has no answer for " + id);
  return reply.dump();
}

MockEmbeddingBackend::MockEmbeddingBackend(int dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ < 1)
    throw InputError("embedding dimension must be positive");
}

std::string MockEmbeddingBackend::model_tag() const {
  return "mock-hash-" + std::to_string(dimension_) + "-" + std::to_string(seed_);
}

EmbeddingVector MockEmbeddingBackend::hashed(std::uint64_t key) const {
  SplitMix64 rng(key ^ seed_);
  EmbeddingVector v{std::vector<double>(static_cast<std::size_t>(dimension_)), model_tag()};
  for (double &x : v.values)
    x = 2.0 * rng.uniform() - 1.0;
  return v;
}

EmbeddingVector MockEmbeddingBackend::embed_text(std::string_view text) {
  if (text.empty())
    throw InputError("cannot embed empty text");
  const auto tokens = text::words(text);
  if (tokens.empty())
    return normalized(hashed(fnv1a64(text, fnv1a64("text-raw:"))));
  EmbeddingVector sum{std::vector<double>(static_cast<std::size_t>(dimension_), 0.0), model_tag()};
  for (const auto &t : tokens) {
    const auto v = hashed(fnv1a64(t, fnv1a64("text:")));
    for (std::size_t i = 0; i < v.values.size(); ++i)
      sum.values[i] += v.values[i];
  }
  return normalized(std::move(sum));
}

EmbeddingVector MockEmbeddingBackend::embed_image(const Raster &image) {
  if (image.empty())
    throw InputError("cannot embed an empty image");
  std::uint64_t h = fnv1a64("image:");
  const std::string dims = std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                           "x" + std::to_string(image.channels());
  h = fnv1a64(dims, h);
  h = fnv1a64(image.bytes(), h);
  return normalized(hashed(h));
}

GeneratedScene MockSceneGenerator::generate_scene(const GenerationRequest &request) {
  check_request(request);
  const Raster &canvas = request.composed_canvas;
  const Raster &mask = request.product_mask;
  const int w = canvas.width(), h = canvas.height(), ch = canvas.channels();

  const std::uint64_t base = request.seed ^ fnv1a64(request.caption);
  SplitMix64 rng(base);

  if (options_.failure_rate > 0 && rng.uniform() < options_.failure_rate)
    throw BackendError(BackendErrorKind::ServiceUnavailable, "mock generator injected failure");

  auto color = [&] {
    return std::array<double, 3>{40 + 200 * rng.uniform(), 40 + 200 * rng.uniform(),
                                 40 + 200 * rng.uniform()};
  };
  const auto sky_top = color(), sky = color(), ground = color();
  const double horizon = h * (0.45 + 0.25 * rng.uniform());
  const int amp = 6 + static_cast<int>(26 * rng.uniform());

  struct Blob {
    double cx, cy, r;
    std::array<double, 3> rgb;
  };
  std::array<Blob, 5> blobs{};
  for (auto &b : blobs) {
    b.cx = w * rng.uniform();
    b.cy = h * rng.uniform();
    b.r = std::max(w, h) * (0.04 + 0.14 * rng.uniform());
    b.rgb = color();
  }

  Raster out(w, h, ch, 255);
  for (int y = 0; y < h; ++y) {
    std::array<double, 3> row{};
    if (y < horizon) {
      const double t = y / std::max(horizon, 1.0);
      for (int c = 0; c < 3; ++c)
        row[c] = sky_top[c] + (sky[c] - sky_top[c]) * t;
    } else {
      const double t = (y - horizon) / std::max(h - horizon, 1.0);
      for (int c = 0; c < 3; ++c)
        row[c] = ground[c] * (0.8 + 0.2 * t);
    }
    for (int x = 0; x < w; ++x) {
      std::uint8_t *q = out.pixel(x, y);
      if (mask.at(x, y, 0) != 0) {
        const std::uint8_t *p = canvas.pixel(x, y);
        for (int c = 0; c < ch; ++c)
          q[c] = p[c];
        continue;
      }
      auto px = row;
      for (const auto &b : blobs) {
        const double d = std::hypot(x - b.cx, y - b.cy);
        if (d < b.r) {
          const double t = 1.0 - d / b.r;
          for (int c = 0; c < 3; ++c)
            px[c] += (b.rgb[c] - px[c]) * std::min(1.0, 2.0 * t);
        }
      }
      const auto hv = mix(base, (static_cast<std::uint64_t>(y) << 32) | static_cast<std::uint32_t>(x));
      const int noise = static_cast<int>(hv % static_cast<std::uint64_t>(2 * amp + 1)) - amp;
      for (int c = 0; c < std::min(ch, 3); ++c)
        q[c] = static_cast<std::uint8_t>(std::clamp(std::lround(px[c]) + noise, 0L, 255L));
    }
  }

  if (options_.perturb_product > 0) {
    const double amplitude = options_.perturb_product * 255.0;
    SplitMix64 noise(base ^ 0x5eedULL);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (mask.at(x, y, 0) == 0)
          continue;
        std::uint8_t *q = out.pixel(x, y);
        for (int c = 0; c < std::min(ch, 3); ++c) {
          const double d = amplitude * (2.0 * noise.uniform() - 1.0);
          q[c] = static_cast<std::uint8_t>(std::clamp(std::lround(q[c] + d), 0L, 255L));
        }
      }
  }

  GeneratedScene scene{std::move(out), options_.always_flags};
  if (options_.flag_rate > 0 && rng.uniform() < options_.flag_rate) {
    static constexpr std::array<const char *, 4> flags{kFlagCaptionMiss, kFlagDuplicate,
                                                      kFlagFloating, kFlagLightingMismatch};
    const std::string flag = flags[rng.next() % flags.size()];
    if (std::find(scene.annotations.begin(), scene.annotations.end(), flag) == scene.annotations.end())
      scene.annotations.push_back(flag);
  }
  return scene;
}

double mean_local_contrast(const Raster &image) {
  if (image.empty())
    throw InputError("cannot score an empty image");
  const Plane lum = luminance(image);
  double sum = 0;
  std::size_t n = 0;
  for (int y = 0; y < lum.height; ++y)
    for (int x = 0; x < lum.width; ++x) {
      if (x + 1 < lum.width) {
        sum += std::abs(lum(x + 1, y) - lum(x, y));
        ++n;
      }
      if (y + 1 < lum.height) {
        sum += std::abs(lum(x, y + 1) - lum(x, y));
        ++n;
      }
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double MockAestheticScorer::score(const Raster &image) {
  const double c = mean_local_contrast(image);
  return 10.0 * c / (c + 8.0);
}

} // namespace adgen::backend
