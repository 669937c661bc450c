#include "virtview/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "virtview/errors.hpp"
#include "virtview/kitti_io.hpp"

namespace virtview {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("config key '" + std::string(key) + "': bad number '" +
                                std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw std::invalid_argument("config key '" + std::string(key) + "': bad boolean '" +
                              std::string(text) + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::string name;
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

Field real(std::string name, double& ref) {
  const std::string key = name;
  return {std::move(name), [&ref, key](std::string_view v) { ref = parse_number<double>(key, v); },
          [&ref] { return format_double(ref); }};
}

Field integer(std::string name, int& ref) {
  const std::string key = name;
  return {std::move(name), [&ref, key](std::string_view v) { ref = parse_number<int>(key, v); },
          [&ref] { return std::to_string(ref); }};
}

Field flag(std::string name, bool& ref) {
  const std::string key = name;
  return {std::move(name), [&ref, key](std::string_view v) { ref = parse_bool(key, v); },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f{
      integer("view_height_px", c.views.view_height_px),
      integer("view_width_px", c.views.view_width_px),
      real("viewport_height", c.views.viewport_height),
      real("depth_resolution", c.views.depth_resolution),
      real("z_min", c.views.z_min),
      real("z_max", c.views.z_max),
      real("depth_mean", c.views.depth_mean),
      real("depth_std", c.views.depth_std),
      integer("views_per_image", c.views.views_per_image),
      real("guided_probability", c.views.guided_probability),
      real("y_perturb_range", c.views.y_perturb_range),
      integer("width_round_multiple", c.views.width_round_multiple),
      real("inference_y_offset", c.views.inference_y_offset),
  };
  for (ClassPrior& p : c.priors) {
    const std::string base = "prior." + lower(class_name(p.class_id)) + ".";
    f.push_back(real(base + "width", p.reference.width));
    f.push_back(real(base + "height", p.reference.height));
    f.push_back(real(base + "length", p.reference.length));
  }
  const std::vector<Field> rest{
      real("loss.weight_conf_2d", c.loss_weights.conf_2d),
      real("loss.weight_reg_2d", c.loss_weights.reg_2d),
      real("loss.weight_reg_3d", c.loss_weights.reg_3d),
      real("loss.weight_conf_3d", c.loss_weights.conf_3d),
      real("loss.focal_gamma", c.loss_constants.focal_gamma),
      real("loss.focal_alpha", c.loss_constants.focal_alpha),
      real("loss.huber_delta", c.loss_constants.huber_delta),
      real("loss.temperature", c.loss_constants.temperature),
      real("loss.smooth_l1_beta", c.loss_constants.smooth_l1_beta),
      real("score_threshold", c.score_threshold),
      real("view_nms_iou", c.view_nms_iou),
      flag("global_nms", c.global_nms),
      real("global_nms_iou", c.global_nms_iou),
      real("oracle.noise_2d", c.oracle.noise_2d),
      real("oracle.noise_center", c.oracle.noise_center),
      real("oracle.noise_depth", c.oracle.noise_depth),
      real("oracle.noise_size", c.oracle.noise_size),
      real("oracle.noise_rotation", c.oracle.noise_rotation),
      real("oracle.drop_probability", c.oracle.drop_probability),
      real("oracle.clutter_rate", c.oracle.clutter_rate),
      real("eval.car_iou_3d", c.eval_threshold_3d[0]),
      real("eval.pedestrian_iou_3d", c.eval_threshold_3d[1]),
      real("eval.cyclist_iou_3d", c.eval_threshold_3d[2]),
      real("eval.car_iou_bev", c.eval_threshold_bev[0]),
      real("eval.pedestrian_iou_bev", c.eval_threshold_bev[1]),
      real("eval.cyclist_iou_bev", c.eval_threshold_bev[2]),
      {"data_root", [&c](std::string_view v) { c.data_root = std::string(v); },
       [&c] { return c.data_root; }},
      {"seed", [&c](std::string_view v) { c.seed = parse_number<std::uint64_t>("seed", v); },
       [&c] { return std::to_string(c.seed); }},
      integer("jobs", c.jobs),
  };
  f.insert(f.end(), rest.begin(), rest.end());
  return f;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  for (Field& f : fields(*this)) {
    if (f.name == key) {
      f.set(trim(value));
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply_text(std::string_view text) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  try {
    apply_text(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void RunConfig::validate() const {
  views.validate();
  inference().validate();
  evaluation().validate();
  oracle.validate();
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  if (!(loss_constants.huber_delta > 0.0) || !(loss_constants.temperature > 0.0) ||
      !(loss_constants.smooth_l1_beta > 0.0) || loss_constants.focal_gamma < 0.0 ||
      !(loss_constants.focal_alpha >= 0.0 && loss_constants.focal_alpha <= 1.0)) {
    throw std::invalid_argument("loss constants out of range");
  }
  if (loss_weights.conf_2d < 0.0 || loss_weights.reg_2d < 0.0 || loss_weights.reg_3d < 0.0 ||
      loss_weights.conf_3d < 0.0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
}

InferenceConfig RunConfig::inference() const {
  InferenceConfig c;
  c.views = views;
  c.priors = priors;
  for (ClassPrior& p : c.priors) {
    p.depth_mean = views.depth_mean;
    p.depth_std = views.depth_std;
  }
  c.score_threshold = score_threshold;
  c.view_nms_iou = view_nms_iou;
  c.global_nms = global_nms;
  c.global_nms_iou = global_nms_iou;
  c.jobs = jobs;
  return c;
}

EvalConfig RunConfig::evaluation() const {
  EvalConfig c;
  c.threshold_3d = eval_threshold_3d;
  c.threshold_bev = eval_threshold_bev;
  c.jobs = jobs;
  return c;
}

std::string RunConfig::to_text() const {
  RunConfig copy = *this;
  std::string out;
  for (const Field& f : fields(copy)) out += f.name + " = " + f.get() + "\n";
  return out;
}

std::vector<std::string> RunConfig::keys() {
  RunConfig c;
  std::vector<std::string> out;
  for (const Field& f : fields(c)) out.push_back(f.name);
  return out;
}

}  // namespace virtview
