// Copyright 2026 The Dropfield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dropfield/config.hpp"

#include <fstream>
#include <set>

#include "dropfield/common.hpp"

namespace dropfield {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string where(const std::string& key) const { return path_ + "." + key; }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    const auto x = v.get<long long>();
    if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(where(key) + ": out of range");
    out = static_cast<int>(x);
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(where(key) + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    out = v.get<double>();
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    out = v.get<bool>();
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    out = v.get<std::string>();
  }

  void path(const std::string& key, std::filesystem::path& out) {
    std::string s;
    string(key, s);
    if (has(key)) out = s;
  }

  std::vector<double> numbers(const json& v, const std::string& where_, std::size_t n) const {
    if (!v.is_array() || v.size() != n) {
      throw ConfigError(where_ + ": expected an array of " + std::to_string(n) + " numbers");
    }
    std::vector<double> out;
    for (const json& x : v) {
      if (!x.is_number()) throw ConfigError(where_ + ": expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  void vec3(const std::string& key, Vec3& out) {
    if (!has(key)) return;
    const auto v = numbers(j_.at(key), where(key), 3);
    out = Vec3(v[0], v[1], v[2]);
  }

  void color(const std::string& key, Color& out) {
    if (!has(key)) return;
    const auto v = numbers(j_.at(key), where(key), 3);
    out = {v[0], v[1], v[2]};
  }

  void pair(const std::string& key, double& a, double& b) {
    if (!has(key)) return;
    const auto v = numbers(j_.at(key), where(key), 2);
    a = v[0];
    b = v[1];
  }

  std::optional<Section> sub(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), where(key));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(where(item.key()) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
json color_json(const Color& c) { return {c[0], c[1], c[2]}; }

DropMode parse_mode(const std::string& s) {
  if (s == "lens_fixed") return DropMode::lens_fixed;
  if (s == "scene_fixed") return DropMode::scene_fixed;
  throw ConfigError("drops.mode: expected \"lens_fixed\" or \"scene_fixed\"");
}

const char* mode_name(DropMode m) { return m == DropMode::lens_fixed ? "lens_fixed" : "scene_fixed"; }

void parse_sphere(Section s, Sphere& out) {
  s.vec3("center", out.center);
  s.number("radius", out.radius);
  s.color("color", out.color);
  s.finish();
}

void parse_ground(Section s, GroundPlane& g) {
  s.number("height", g.height);
  s.color("color_a", g.color_a);
  s.color("color_b", g.color_b);
  s.number("period", g.period);
  s.number("extent", g.extent);
  s.finish();
}

void parse_scene(Section s, SceneSpec& scene) {
  if (s.has("spheres")) {
    const json& list = s.raw("spheres");
    if (!list.is_array()) throw ConfigError("scene.spheres: expected an array");
    scene.spheres.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      Sphere sp;
      parse_sphere(Section(list[i], "scene.spheres[" + std::to_string(i) + "]"), sp);
      scene.spheres.push_back(sp);
    }
  }
  if (s.has("ground")) {
    if (s.raw("ground").is_null()) {
      scene.ground.reset();
    } else {
      GroundPlane g = scene.ground.value_or(GroundPlane{});
      parse_ground(Section(s.raw("ground"), "scene.ground"), g);
      scene.ground = g;
    }
  }
  s.color("background", scene.background);
  if (s.has("light_direction")) {
    s.vec3("light_direction", scene.light_direction);
    if (!(scene.light_direction.norm() > 0.0)) {
      throw ConfigError("scene.light_direction: must be nonzero");
    }
    scene.light_direction.normalize();
  }
  s.number("ambient", scene.ambient);
  s.finish();
}

void parse_random(Section s, RandomDropSettings& r) {
  s.integer("count", r.count);
  s.number("min_radius", r.min_radius);
  s.number("max_radius", r.max_radius);
  s.number("min_distortion", r.min_distortion);
  s.number("max_distortion", r.max_distortion);
  s.number("min_brightness", r.min_brightness);
  s.number("max_brightness", r.max_brightness);
  s.finish();
}

void parse_drops(Section s, DropConfig& d) {
  std::string mode = mode_name(d.mode);
  s.string("mode", mode);
  d.mode = parse_mode(mode);
  if (s.has("random")) {
    if (s.raw("random").is_null()) {
      d.random.reset();
    } else {
      RandomDropSettings r = d.random.value_or(RandomDropSettings{});
      parse_random(Section(s.raw("random"), "drops.random"), r);
      d.random = r;
    }
  }
  if (s.has("list")) {
    const json& list = s.raw("list");
    if (!list.is_array()) throw ConfigError("drops.list: expected an array");
    d.list.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section e(list[i], "drops.list[" + std::to_string(i) + "]");
      Drop drop;
      e.pair("center", drop.center_x, drop.center_y);
      e.pair("radii", drop.radius_x, drop.radius_y);
      e.number("distortion", drop.distortion);
      e.number("brightness", drop.brightness);
      e.finish();
      d.list.push_back(drop);
    }
  }
  if (auto g = s.sub("glass")) {
    g->vec3("normal", d.glass.normal);
    g->number("distance", d.glass.distance);
    g->finish();
  }
  s.number("glass_extent", d.glass_extent);
  s.finish();
}

void parse_field(Section s, FieldConfig& f) {
  s.integer("depth", f.depth);
  s.integer("width", f.width);
  if (s.has("skip_layer")) {
    if (s.raw("skip_layer").is_null()) {
      f.skip_layer.reset();
    } else {
      int k = 0;
      s.integer("skip_layer", k);
      f.skip_layer = k;
    }
  }
  std::string density = f.density == DensityActivation::softplus ? "softplus" : "relu";
  s.string("density", density);
  if (density == "softplus") {
    f.density = DensityActivation::softplus;
  } else if (density == "relu") {
    f.density = DensityActivation::relu;
  } else {
    throw ConfigError("field.density: expected \"softplus\" or \"relu\"");
  }
  s.integer("pos_frequencies", f.encoding.pos_frequencies);
  s.integer("dir_frequencies", f.encoding.dir_frequencies);
  s.finish();
}

void parse_train(Section s, TrainConfig& t) {
  s.integer("iterations", t.iterations);
  s.integer("batch_rays", t.batch_rays);
  s.number("lr_start", t.lr_start);
  s.number("lr_end", t.lr_end);
  s.integer("samples_per_ray", t.samples_per_ray);
  s.boolean("jitter", t.jitter);
  s.color("background", t.background);
  s.integer("log_every", t.log_every);
  s.integer("checkpoint_every", t.checkpoint_every);
  s.integer("chunk_rays", t.chunk_rays);
  if (auto a = s.sub("adam")) {
    a->number("beta1", t.adam.beta1);
    a->number("beta2", t.adam.beta2);
    a->number("epsilon", t.adam.epsilon);
    a->finish();
  }
  s.finish();
}

template <typename F>
void wrap_invalid(F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

json to_json(const FieldConfig& f) {
  return {{"depth", f.depth},
          {"width", f.width},
          {"skip_layer", f.skip_layer ? json(*f.skip_layer) : json(nullptr)},
          {"density", f.density == DensityActivation::softplus ? "softplus" : "relu"},
          {"pos_frequencies", f.encoding.pos_frequencies},
          {"dir_frequencies", f.encoding.dir_frequencies}};
}

FieldConfig parse_field_config(const json& doc) {
  FieldConfig f;
  parse_field(Section(doc, "field"), f);
  wrap_invalid([&] { f.validate(); });
  return f;
}

void RunConfig::validate() const {
  if (width < 1 || height < 1) throw ConfigError("image: width and height must be positive");
  if (!(hfov_degrees > 0.0 && hfov_degrees < 180.0)) {
    throw ConfigError("image.hfov_degrees: must lie in (0, 180)");
  }
  if (!(t_near >= 0.0 && t_near < t_far)) throw ConfigError("bounds: need 0 <= t_near < t_far");
  ring.validate();
  scene.validate();
  detector.validate();
  if (drops.list.empty() && !drops.random) {
    throw ConfigError("drops: give either a list or random settings");
  }
  if (drops.random) {
    const RandomDropSettings& r = *drops.random;
    if (r.count < 0) throw ConfigError("drops.random.count: must be >= 0");
    if (!(r.min_radius > 0.0 && r.min_radius <= r.max_radius)) {
      throw ConfigError("drops.random: need 0 < min_radius <= max_radius");
    }
    if (!(r.min_distortion >= 0.0 && r.min_distortion <= r.max_distortion && r.max_distortion <= 1.0)) {
      throw ConfigError("drops.random: need 0 <= min_distortion <= max_distortion <= 1");
    }
    if (!(r.min_brightness <= r.max_brightness)) {
      throw ConfigError("drops.random: need min_brightness <= max_brightness");
    }
  }
  DropSpec listed{drops.mode, drops.list, drops.glass};
  listed.validate();
  if (!(drops.glass_extent > 0.0)) throw ConfigError("drops.glass_extent: must be positive");
  wrap_invalid([&] { mask.validate(); });
  wrap_invalid([&] { field.validate(); });
  wrap_invalid([&] { train.validate(); });
  if (output.dataset_dir.empty() || output.run_dir.empty()) {
    throw ConfigError("output: paths must be non-empty");
  }
}

SynthSpec RunConfig::synth_spec() const {
  SynthSpec spec;
  spec.scene = scene;
  spec.detector = detector;
  spec.detector.seed = seed;
  spec.ring = ring;
  spec.intrinsics = Intrinsics::from_fov(width, height, hfov_degrees);
  spec.t_near = t_near;
  spec.t_far = t_far;
  if (drops.list.empty()) {
    spec.drops = random_drops(drops.mode, spec.intrinsics, *drops.random, seed, drops.glass,
                              drops.glass_extent);
  } else {
    spec.drops = DropSpec{drops.mode, drops.list, drops.glass};
  }
  return spec;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

RunConfig parse_run_config(const json& doc) {
  RunConfig cfg;
  Section root(doc, "config");
  root.unsigned64("seed", cfg.seed);
  if (auto s = root.sub("image")) {
    s->integer("width", cfg.width);
    s->integer("height", cfg.height);
    s->number("hfov_degrees", cfg.hfov_degrees);
    s->finish();
  }
  if (auto s = root.sub("bounds")) {
    s->number("t_near", cfg.t_near);
    s->number("t_far", cfg.t_far);
    s->finish();
  }
  if (auto s = root.sub("camera_ring")) {
    s->integer("views", cfg.ring.views);
    s->number("radius", cfg.ring.radius);
    s->number("elevation_degrees", cfg.ring.elevation_degrees);
    s->number("arc_degrees", cfg.ring.arc_degrees);
    s->number("start_degrees", cfg.ring.start_degrees);
    s->finish();
  }
  if (auto s = root.sub("scene")) parse_scene(*s, cfg.scene);
  if (auto s = root.sub("drops")) parse_drops(*s, cfg.drops);
  if (auto s = root.sub("detector")) {
    s->integer("blur_radius", cfg.detector.blur_radius);
    s->number("noise_amplitude", cfg.detector.noise_amplitude);
    s->number("p_miss", cfg.detector.p_miss);
    s->finish();
  }
  if (auto s = root.sub("mask")) {
    s->number("threshold", cfg.mask.threshold);
    s->integer("dilation_radius", cfg.mask.dilation_radius);
    s->boolean("enhancement", cfg.mask.enhancement);
    s->finish();
  }
  if (auto s = root.sub("field")) parse_field(*s, cfg.field);
  if (auto s = root.sub("train")) parse_train(*s, cfg.train);
  if (auto s = root.sub("output")) {
    s->path("dataset_dir", cfg.output.dataset_dir);
    s->path("run_dir", cfg.output.run_dir);
    s->finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& c) {
  json spheres = json::array();
  for (const Sphere& s : c.scene.spheres) {
    spheres.push_back({{"center", vec_json(s.center)}, {"radius", s.radius}, {"color", color_json(s.color)}});
  }
  json ground = nullptr;
  if (c.scene.ground) {
    const GroundPlane& g = *c.scene.ground;
    ground = {{"height", g.height},
              {"color_a", color_json(g.color_a)},
              {"color_b", color_json(g.color_b)},
              {"period", g.period},
              {"extent", g.extent}};
  }
  json random = nullptr;
  if (c.drops.random) {
    const RandomDropSettings& r = *c.drops.random;
    random = {{"count", r.count},
              {"min_radius", r.min_radius},
              {"max_radius", r.max_radius},
              {"min_distortion", r.min_distortion},
              {"max_distortion", r.max_distortion},
              {"min_brightness", r.min_brightness},
              {"max_brightness", r.max_brightness}};
  }
  json list = json::array();
  for (const Drop& d : c.drops.list) {
    list.push_back({{"center", {d.center_x, d.center_y}},
                    {"radii", {d.radius_x, d.radius_y}},
                    {"distortion", d.distortion},
                    {"brightness", d.brightness}});
  }
  const TrainConfig& t = c.train;
  return {
      {"seed", c.seed},
      {"image", {{"width", c.width}, {"height", c.height}, {"hfov_degrees", c.hfov_degrees}}},
      {"bounds", {{"t_near", c.t_near}, {"t_far", c.t_far}}},
      {"camera_ring",
       {{"views", c.ring.views},
        {"radius", c.ring.radius},
        {"elevation_degrees", c.ring.elevation_degrees},
        {"arc_degrees", c.ring.arc_degrees},
        {"start_degrees", c.ring.start_degrees}}},
      {"scene",
       {{"spheres", spheres},
        {"ground", ground},
        {"background", color_json(c.scene.background)},
        {"light_direction", vec_json(c.scene.light_direction)},
        {"ambient", c.scene.ambient}}},
      {"drops",
       {{"mode", mode_name(c.drops.mode)},
        {"random", random},
        {"list", list},
        {"glass", {{"normal", vec_json(c.drops.glass.normal)}, {"distance", c.drops.glass.distance}}},
        {"glass_extent", c.drops.glass_extent}}},
      {"detector",
       {{"blur_radius", c.detector.blur_radius},
        {"noise_amplitude", c.detector.noise_amplitude},
        {"p_miss", c.detector.p_miss}}},
      {"mask",
       {{"threshold", c.mask.threshold},
        {"dilation_radius", c.mask.dilation_radius},
        {"enhancement", c.mask.enhancement}}},
      {"field", to_json(c.field)},
      {"train",
       {{"iterations", t.iterations},
        {"batch_rays", t.batch_rays},
        {"lr_start", t.lr_start},
        {"lr_end", t.lr_end},
        {"samples_per_ray", t.samples_per_ray},
        {"jitter", t.jitter},
        {"background", color_json(t.background)},
        {"log_every", t.log_every},
        {"checkpoint_every", t.checkpoint_every},
        {"chunk_rays", t.chunk_rays},
        {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"epsilon", t.adam.epsilon}}}}},
      {"output", {{"dataset_dir", c.output.dataset_dir.string()}, {"run_dir", c.output.run_dir.string()}}},
  };
}

}  // namespace dropfield
