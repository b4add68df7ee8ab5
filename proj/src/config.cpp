#include "adgen/config.hpp"

#include "adgen/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace adgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one JSON object, remembering the keys it consumed so leftovers can be
// reported as unknown.
class Section {
public:
  Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw InputError(where() + " must be a mapping");
  }

  bool has(const std::string &key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json &raw(const std::string &key) { return (seen_.insert(key), j_.at(key)); }

  void number(const std::string &key, double &out) {
    if (!has(key))
      return;
    const auto &v = j_.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw InputError(key_path(key) + " must be a finite number");
    out = v.get<double>();
  }

  void integer(const std::string &key, int &out) {
    if (!has(key))
      return;
    const auto &v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < INT32_MIN || v.get<std::int64_t>() > INT32_MAX)
      throw InputError(key_path(key) + " must be an integer");
    out = v.get<int>();
  }

  void unsigned64(const std::string &key, std::uint64_t &out) {
    if (!has(key))
      return;
    const auto &v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw InputError(key_path(key) + " must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void boolean(const std::string &key, bool &out) {
    if (!has(key))
      return;
    if (!j_.at(key).is_boolean())
      throw InputError(key_path(key) + " must be true or false");
    out = j_.at(key).get<bool>();
  }

  void string(const std::string &key, std::string &out) {
    if (!has(key))
      return;
    if (!j_.at(key).is_string())
      throw InputError(key_path(key) + " must be a string");
    out = j_.at(key).get<std::string>();
  }

  void path(const std::string &key, fs::path &out) {
    std::string s = out.string();
    string(key, s);
    out = s;
  }

  Section child(const std::string &key) { return Section(raw(key), key_path(key)); }

  std::string key_path(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "configuration" : path_; }
  const json &value() const { return j_; }

  void finish() const {
    for (const auto &[key, _] : j_.items())
      if (!seen_.contains(key))
        throw InputError("unknown configuration key '" + key_path(key) + "'");
  }

private:
  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string validator_name(backend::ValidatorPolicy p) {
  switch (p) {
  case backend::ValidatorPolicy::TokenOverlap:
    return "token_overlap";
  case backend::ValidatorPolicy::AcceptAll:
    return "accept_all";
  case backend::ValidatorPolicy::RejectAll:
    return "reject_all";
  }
  return "token_overlap";
}

backend::ValidatorPolicy parse_validator(const std::string &s) {
  if (s == "token_overlap")
    return backend::ValidatorPolicy::TokenOverlap;
  if (s == "accept_all")
    return backend::ValidatorPolicy::AcceptAll;
  if (s == "reject_all")
    return backend::ValidatorPolicy::RejectAll;
  throw InputError("backend.mock.validator must be token_overlap, accept_all or reject_all");
}

json http_to_json(const HttpBackendConfig &h) {
  json j = {{"url", h.url},
            {"api_key_env", h.api_key_env},
            {"timeout_ms", h.timeout_ms},
            {"max_in_flight", h.max_in_flight}};
  if (!h.model_tag.empty())
    j["model_tag"] = h.model_tag;
  if (h.dimension != 0)
    j["dimension"] = h.dimension;
  return j;
}

HttpBackendConfig http_from_json(Section s) {
  HttpBackendConfig h;
  s.string("url", h.url);
  s.string("api_key_env", h.api_key_env);
  s.integer("timeout_ms", h.timeout_ms);
  s.integer("max_in_flight", h.max_in_flight);
  s.string("model_tag", h.model_tag);
  s.integer("dimension", h.dimension);
  s.finish();
  return h;
}

// Scalars: quoted YAML stays a string; plain scalars become null, booleans,
// integers or floats when they parse as such.
json yaml_to_json(const YAML::Node &node) {
  switch (node.Type()) {
  case YAML::NodeType::Null:
  case YAML::NodeType::Undefined:
    return nullptr;
  case YAML::NodeType::Sequence: {
    json arr = json::array();
    for (const auto &item : node)
      arr.push_back(yaml_to_json(item));
    return arr;
  }
  case YAML::NodeType::Map: {
    json obj = json::object();
    for (const auto &kv : node)
      obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
    return obj;
  }
  case YAML::NodeType::Scalar:
    break;
  }
  const std::string s = node.Scalar();
  if (node.Tag() == "!")
    return s;
  if (s == "~" || s == "null")
    return nullptr;
  if (s == "true")
    return true;
  if (s == "false")
    return false;
  const char *first = s.data(), *last = s.data() + s.size();
  if (!s.empty() && s[0] != '+') {
    if (s[0] == '-') {
      std::int64_t i = 0;
      if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc() && p == last)
        return i;
    } else {
      std::uint64_t u = 0;
      if (auto [p, ec] = std::from_chars(first, last, u); ec == std::errc() && p == last)
        return u;
    }
    double d = 0;
    if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc() && p == last)
      return d;
  }
  return s;
}

void resolve(fs::path &p, const fs::path &base) {
  if (!p.empty() && p.is_relative())
    p = (base / p).lexically_normal();
}

} // namespace

void PipelineConfig::validate() const {
  auto check_binding = [&](const std::string &name, const std::string &value) {
    if (value != "mock" && value != "http")
      throw InputError("backend." + name + " must be mock or http");
    if (value == "http") {
      auto it = backend.http.find(name);
      if (it == backend.http.end() || it->second.url.empty())
        throw InputError("backend.http." + name + ".url is required when backend." + name + " is http");
    }
  };
  check_binding("llm", backend.llm);
  check_binding("embed", backend.embed);
  check_binding("generate", backend.generate);
  check_binding("aesthetic", backend.aesthetic);
  for (const auto &[role, binding] : backend.roles) {
    if (std::find(llm_roles().begin(), llm_roles().end(), role) == llm_roles().end())
      throw InputError("backend.roles." + role + " is not a known role");
    if (binding == "mock")
      continue;
    const std::string key = binding == "http" ? "llm" : binding;
    auto it = backend.http.find(key);
    if (it == backend.http.end() || it->second.url.empty())
      throw InputError("backend.roles." + role + " refers to '" + binding + "', which has no backend.http." +
                       key + ".url");
  }
  for (const auto &[name, h] : backend.http) {
    if (h.timeout_ms <= 0)
      throw InputError("backend.http." + name + ".timeout_ms must be positive");
    if (h.max_in_flight <= 0)
      throw InputError("backend.http." + name + ".max_in_flight must be positive");
  }
  if (backend.embed == "http") {
    const auto &h = backend.http.at("embed");
    if (h.model_tag.empty() || h.dimension <= 0)
      throw InputError("backend.http.embed needs model_tag and a positive dimension");
  }
  if (backend.max_attempts < 1)
    throw InputError("backend.max_attempts must be positive");
  if (backend.mock.embed_dimension < 2)
    throw InputError("backend.mock.embed_dimension must be at least 2");
  const auto &g = backend.mock.generator;
  if (!(g.perturb_product >= 0 && g.perturb_product <= 1) || !(g.flag_rate >= 0 && g.flag_rate <= 1) ||
      !(g.failure_rate >= 0 && g.failure_rate <= 1))
    throw InputError("backend.mock.generator rates must be in [0, 1]");

  if (!(retrieval.product_threshold >= -1 && retrieval.product_threshold <= 1))
    throw InputError("retrieval.product_threshold must be in [-1, 1]");
  if (retrieval.background_k < 1)
    throw InputError("retrieval.background_k must be positive");
  if (retrieval.product_limit < 1)
    throw InputError("retrieval.product_limit must be positive");
  if (caption.max_words < 1)
    throw InputError("caption.max_words must be positive");
  plan.validate();
  if (generation.seeds_per_variant < 1)
    throw InputError("generation.seeds_per_variant must be positive");
  if (generation.max_in_flight < 1)
    throw InputError("generation.max_in_flight must be positive");
  if (regeneration_passes < 0)
    throw InputError("generation.regeneration_passes must not be negative");
  quality.validate();
  if (quality_max_in_flight < 1)
    throw InputError("quality.max_in_flight must be positive");
  if (evaluation.ms_ssim_scales < 1 || evaluation.ms_ssim_scales > 5)
    throw InputError("evaluation.ms_ssim_scales must be between 1 and 5");
  if (server.port < 0 || server.port > 65535)
    throw InputError("server.port must be a valid TCP port");
  if (store_path.empty() || runs_dir.empty())
    throw InputError("store.path and runs_dir must be set");
}

json config_to_json(const PipelineConfig &c) {
  json http = json::object();
  for (const auto &[name, h] : c.backend.http)
    http[name] = http_to_json(h);
  const auto &g = c.backend.mock.generator;
  std::vector<std::string> slots;
  for (Slot s : c.plan.slots)
    slots.emplace_back(to_string(s));
  return {
      {"run_seed", c.run_seed},
      {"store", {{"path", c.store_path.string()}}},
      {"runs_dir", c.runs_dir.string()},
      {"backend",
       {{"llm", c.backend.llm},
        {"embed", c.backend.embed},
        {"generate", c.backend.generate},
        {"aesthetic", c.backend.aesthetic},
        {"http", http},
        {"roles", c.backend.roles},
        {"max_attempts", c.backend.max_attempts},
        {"mock",
         {{"validator", validator_name(c.backend.mock.validator)},
          {"embed_dimension", c.backend.mock.embed_dimension},
          {"embed_seed", c.backend.mock.embed_seed},
          {"generator",
           {{"perturb_product", g.perturb_product},
            {"always_flags", g.always_flags},
            {"flag_rate", g.flag_rate},
            {"failure_rate", g.failure_rate}}}}}}},
      {"retrieval",
       {{"product_threshold", c.retrieval.product_threshold},
        {"background_k", c.retrieval.background_k},
        {"product_limit", c.retrieval.product_limit},
        {"embed_label", c.retrieval.embed_label}}},
      {"caption", {{"max_words", c.caption.max_words}}},
      {"plan",
       {{"canvas", {c.plan.canvas_width, c.plan.canvas_height}},
        {"slots", slots},
        {"rotations_deg", c.plan.rotations_deg},
        {"scale_bounds", {c.plan.scale_min, c.plan.scale_max}},
        {"fallback_scale", {c.plan.fallback_scale.s_w, c.plan.fallback_scale.s_h}},
        {"vertical_anchor", c.plan.vertical_anchor},
        {"reduction_factor", c.plan.reduction_factor},
        {"max_reductions", c.plan.max_reductions}}},
      {"generation",
       {{"seeds_per_variant", c.generation.seeds_per_variant},
        {"max_in_flight", c.generation.max_in_flight},
        {"regeneration_passes", c.regeneration_passes}}},
      {"quality",
       {{"mode", to_string(c.quality.mode)},
        {"patterns", c.quality.patterns},
        {"k", c.quality.k},
        {"aesthetic_threshold", c.quality.aesthetic_threshold},
        {"alpha", c.quality.alpha},
        {"beta", c.quality.beta},
        {"use_clip_filter", c.quality.use_clip_filter},
        {"clip_threshold", c.quality.clip_threshold},
        {"clip_weight", c.quality.clip_weight},
        {"max_in_flight", c.quality_max_in_flight}}},
      {"evaluation", {{"ms_ssim_scales", c.evaluation.ms_ssim_scales}}},
      {"server",
       {{"host", c.server.host}, {"port", c.server.port}, {"static_dir", c.server.static_dir.string()}}},
  };
}

PipelineConfig config_from_json(const json &j) {
  PipelineConfig c;
  Section root(j, "");
  root.unsigned64("run_seed", c.run_seed);
  if (root.has("store")) {
    auto s = root.child("store");
    s.path("path", c.store_path);
    s.finish();
  }
  root.path("runs_dir", c.runs_dir);

  if (root.has("backend")) {
    auto b = root.child("backend");
    b.string("llm", c.backend.llm);
    b.string("embed", c.backend.embed);
    b.string("generate", c.backend.generate);
    b.string("aesthetic", c.backend.aesthetic);
    if (b.has("http")) {
      auto h = b.child("http");
      for (const auto &[name, _] : h.value().items())
        c.backend.http[name] = http_from_json(h.child(name));
      h.finish();
    }
    if (b.has("roles")) {
      auto r = b.child("roles");
      for (const auto &[role, _] : r.value().items())
        r.string(role, c.backend.roles[role]);
      r.finish();
    }
    b.integer("max_attempts", c.backend.max_attempts);
    if (b.has("mock")) {
      auto m = b.child("mock");
      std::string validator = validator_name(c.backend.mock.validator);
      m.string("validator", validator);
      c.backend.mock.validator = parse_validator(validator);
      m.integer("embed_dimension", c.backend.mock.embed_dimension);
      m.unsigned64("embed_seed", c.backend.mock.embed_seed);
      if (m.has("generator")) {
        auto g = m.child("generator");
        auto &opt = c.backend.mock.generator;
        g.number("perturb_product", opt.perturb_product);
        if (g.has("always_flags")) {
          const auto &flags = g.raw("always_flags");
          if (!flags.is_array() || !std::all_of(flags.begin(), flags.end(), [](const json &f) { return f.is_string(); }))
            throw InputError("backend.mock.generator.always_flags must be a list of strings");
          opt.always_flags = flags.get<std::vector<std::string>>();
        }
        g.number("flag_rate", opt.flag_rate);
        g.number("failure_rate", opt.failure_rate);
        g.finish();
      }
      m.finish();
    }
    b.finish();
  }

  if (root.has("retrieval")) {
    auto r = root.child("retrieval");
    r.number("product_threshold", c.retrieval.product_threshold);
    r.integer("background_k", c.retrieval.background_k);
    r.integer("product_limit", c.retrieval.product_limit);
    r.boolean("embed_label", c.retrieval.embed_label);
    r.finish();
  }
  if (root.has("caption")) {
    auto s = root.child("caption");
    s.integer("max_words", c.caption.max_words);
    s.finish();
  }

  auto number_pair = [](const json &v, const std::string &key) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw InputError(key + " must be a list of two numbers");
    return std::pair{v[0].get<double>(), v[1].get<double>()};
  };
  if (root.has("plan")) {
    auto p = root.child("plan");
    if (p.has("canvas")) {
      const auto &v = p.raw("canvas");
      if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw InputError("plan.canvas must be [width, height] in pixels");
      c.plan.canvas_width = v[0].get<int>();
      c.plan.canvas_height = v[1].get<int>();
    }
    if (p.has("slots")) {
      const auto &v = p.raw("slots");
      if (!v.is_array())
        throw InputError("plan.slots must be a list");
      c.plan.slots.clear();
      for (const auto &s : v) {
        if (!s.is_string())
          throw InputError("plan.slots entries must be strings");
        c.plan.slots.push_back(parse_slot(s.get<std::string>()));
      }
    }
    if (p.has("rotations_deg")) {
      const auto &v = p.raw("rotations_deg");
      if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json &x) { return x.is_number_integer(); }))
        throw InputError("plan.rotations_deg must be a list of integers");
      c.plan.rotations_deg = v.get<std::vector<int>>();
    }
    if (p.has("scale_bounds"))
      std::tie(c.plan.scale_min, c.plan.scale_max) = number_pair(p.raw("scale_bounds"), "plan.scale_bounds");
    if (p.has("fallback_scale"))
      std::tie(c.plan.fallback_scale.s_w, c.plan.fallback_scale.s_h) =
          number_pair(p.raw("fallback_scale"), "plan.fallback_scale");
    p.number("vertical_anchor", c.plan.vertical_anchor);
    p.number("reduction_factor", c.plan.reduction_factor);
    p.integer("max_reductions", c.plan.max_reductions);
    p.finish();
  }

  if (root.has("generation")) {
    auto g = root.child("generation");
    g.integer("seeds_per_variant", c.generation.seeds_per_variant);
    g.integer("max_in_flight", c.generation.max_in_flight);
    g.integer("regeneration_passes", c.regeneration_passes);
    g.finish();
  }

  if (root.has("quality")) {
    auto q = root.child("quality");
    std::string mode(to_string(c.quality.mode));
    q.string("mode", mode);
    c.quality.mode = parse_selection_mode(mode);
    if (q.has("patterns")) {
      const auto &v = q.raw("patterns");
      if (!v.is_array())
        throw InputError("quality.patterns must be a list of 4-element 0/1 lists");
      c.quality.patterns.clear();
      for (const auto &p : v) {
        if (!p.is_array() || p.size() != 4 ||
            !std::all_of(p.begin(), p.end(), [](const json &b) { return b.is_number_integer(); }))
          throw InputError("quality.patterns must be a list of 4-element 0/1 lists");
        c.quality.patterns.push_back(p.get<Pattern>());
      }
    }
    q.integer("k", c.quality.k);
    q.number("aesthetic_threshold", c.quality.aesthetic_threshold);
    q.number("alpha", c.quality.alpha);
    q.number("beta", c.quality.beta);
    q.boolean("use_clip_filter", c.quality.use_clip_filter);
    q.number("clip_threshold", c.quality.clip_threshold);
    q.number("clip_weight", c.quality.clip_weight);
    q.integer("max_in_flight", c.quality_max_in_flight);
    q.finish();
  }

  if (root.has("evaluation")) {
    auto e = root.child("evaluation");
    e.integer("ms_ssim_scales", c.evaluation.ms_ssim_scales);
    e.finish();
  }
  if (root.has("server")) {
    auto s = root.child("server");
    s.string("host", c.server.host);
    s.integer("port", c.server.port);
    s.path("static_dir", c.server.static_dir);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

PipelineConfig parse_config_yaml(const std::string &yaml_text) {
  YAML::Node node;
  try {
    node = YAML::Load(yaml_text);
  } catch (const YAML::Exception &e) {
    throw InputError(std::string("configuration is not valid YAML: ") + e.what());
  }
  json j = yaml_to_json(node);
  if (j.is_null())
    j = json::object();
  return config_from_json(j);
}

PipelineConfig load_config(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot read configuration file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  PipelineConfig c = parse_config_yaml(buf.str());
  const auto base = fs::absolute(path).parent_path();
  resolve(c.store_path, base);
  resolve(c.runs_dir, base);
  resolve(c.server.static_dir, base);
  return c;
}

} // namespace adgen
