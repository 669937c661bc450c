#include "virtview/kitti_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace virtview {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <class T>
T parse_number(std::string_view tok, int line_no, const char* field) {
  T value{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError("bad " + std::string(field) + " '" + std::string(tok) + "'", line_no);
  }
  return value;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    ++line_no;
    fn(text.substr(pos, end - pos), line_no);
    pos = end + 1;
  }
}

void append_fmt(std::string& out, const char* fmt, double v) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, fmt, v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::vector<KittiLabelRecord> parse_label_file(std::string_view text) {
  std::vector<KittiLabelRecord> out;
  for_each_line(text, [&](std::string_view line, int n) {
    const auto tok = split_ws(line);
    if (tok.empty()) return;
    if (tok.size() != 15 && tok.size() != 16) {
      throw ParseError("expected 15 or 16 fields, got " + std::to_string(tok.size()), n);
    }
    KittiLabelRecord r;
    r.type = std::string(tok[0]);
    r.truncated = parse_number<double>(tok[1], n, "truncated");
    r.occluded = parse_number<int>(tok[2], n, "occluded");
    r.alpha = parse_number<double>(tok[3], n, "alpha");
    for (int i = 0; i < 4; ++i) r.bbox[i] = parse_number<double>(tok[4 + i], n, "bbox");
    r.height = parse_number<double>(tok[8], n, "height");
    r.width = parse_number<double>(tok[9], n, "width");
    r.length = parse_number<double>(tok[10], n, "length");
    r.location.x = parse_number<double>(tok[11], n, "location");
    r.location.y = parse_number<double>(tok[12], n, "location");
    r.location.z = parse_number<double>(tok[13], n, "location");
    r.rotation_y = parse_number<double>(tok[14], n, "rotation_y");
    if (tok.size() == 16) r.score = parse_number<double>(tok[15], n, "score");
    if (!r.dont_care()) {
      if (r.height < 0.0 || r.width < 0.0 || r.length < 0.0) {
        throw ParseError("negative dimensions", n);
      }
      // Result files conventionally carry -1 for the unknown occlusion state.
      const int min_occlusion = r.score ? -1 : 0;
      if (r.occluded < min_occlusion || r.occluded > 3) throw ParseError("occlusion outside 0..3", n);
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::string format_label_file(std::span<const KittiLabelRecord> records) {
  std::string out;
  for (const KittiLabelRecord& r : records) {
    out += r.type;
    out += ' ';
    append_fmt(out, "%.2f", r.truncated);
    out += ' ';
    out += std::to_string(r.occluded);
    for (double v : {r.alpha, r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3], r.height, r.width,
                     r.length, r.location.x, r.location.y, r.location.z, r.rotation_y}) {
      out += ' ';
      append_fmt(out, "%.2f", v);
    }
    if (r.score) {
      out += ' ';
      append_fmt(out, "%.4f", *r.score);
    }
    out += '\n';
  }
  return out;
}

const std::vector<double>* Calibration::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

CameraIntrinsics intrinsics_from_p2(const std::array<double, 12>& p, int w, int h) {
  CameraIntrinsics k;
  k.f_x = p[0];
  k.f_y = p[5];
  k.c_u = p[2];
  k.c_v = p[6];
  k.image_width = w;
  k.image_height = h;
  // P = K [I | t]  =>  t = K^-1 * (P03, P13, P23).
  k.baseline.z = p[11];
  k.baseline.x = (p[3] - k.c_u * p[11]) / k.f_x;
  k.baseline.y = (p[7] - k.c_v * p[11]) / k.f_y;
  return k;
}

}  // namespace

Calibration parse_calib(std::string_view text, int image_width, int image_height) {
  Calibration c;
  for_each_line(text, [&](std::string_view line, int n) {
    const auto tok = split_ws(line);
    if (tok.empty()) return;
    std::string_view key = tok[0];
    if (key.empty() || key.back() != ':') throw ParseError("expected 'key:'", n);
    key.remove_suffix(1);
    std::vector<double> values;
    values.reserve(tok.size() - 1);
    for (std::size_t i = 1; i < tok.size(); ++i) values.push_back(parse_number<double>(tok[i], n, "value"));
    if (key == "P2" && values.size() != 12) {
      throw ParseError("P2 needs 12 numbers, got " + std::to_string(values.size()), n);
    }
    c.entries.emplace_back(std::string(key), std::move(values));
  });
  const auto* p2 = c.find("P2");
  if (!p2) throw ParseError("calibration has no P2 line");
  std::copy(p2->begin(), p2->end(), c.p2.begin());
  c.camera = intrinsics_from_p2(c.p2, image_width, image_height);
  c.camera.validate();
  return c;
}

std::string format_calib(const Calibration& calib) {
  std::string out;
  for (const auto& [key, values] : calib.entries) {
    out += key;
    out += ':';
    for (double v : values) {
      out += ' ';
      append_fmt(out, "%.12e", v);
    }
    out += '\n';
  }
  return out;
}

Calibration make_calibration(const CameraIntrinsics& k) {
  Calibration c;
  const Point3 t = k.baseline;
  c.p2 = {k.f_x, 0.0, k.c_u, k.f_x * t.x + k.c_u * t.z,
          0.0, k.f_y, k.c_v, k.f_y * t.y + k.c_v * t.z,
          0.0, 0.0, 1.0, t.z};
  const std::vector<double> p(c.p2.begin(), c.p2.end());
  for (const char* key : {"P0", "P1", "P2", "P3"}) c.entries.emplace_back(key, p);
  c.entries.emplace_back("R0_rect", std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  c.entries.emplace_back("Tr_velo_to_cam", std::vector<double>(12, 0.0));
  c.entries.emplace_back("Tr_imu_to_velo", std::vector<double>(12, 0.0));
  c.camera = intrinsics_from_p2(c.p2, k.image_width, k.image_height);
  return c;
}

Box3D kitti_to_box3d(const KittiLabelRecord& rec) {
  Box3D b;
  b.center = {rec.location.x, rec.location.y - 0.5 * rec.height, rec.location.z};
  b.size = {rec.width, rec.height, rec.length};
  b.yaw = rec.rotation_y;
  b.class_id = class_from_name(rec.type);
  b.score = rec.score;
  b.truncation = rec.truncated;
  b.occlusion = rec.occluded;
  return b;
}

KittiLabelRecord box3d_to_kitti(const Box3D& box, const Box2D& bbox, std::optional<std::string> type) {
  KittiLabelRecord r;
  r.type = type ? std::move(*type) : std::string(class_name(box.class_id));
  r.truncated = box.truncation;
  r.occluded = box.occlusion;
  r.alpha = egocentric_to_allocentric(box.yaw, box.center);
  r.bbox = {bbox.u_min, bbox.v_min, bbox.u_max, bbox.v_max};
  r.height = box.size.height;
  r.width = box.size.width;
  r.length = box.size.length;
  r.location = {box.center.x, box.center.y + 0.5 * box.size.height, box.center.z};
  r.rotation_y = box.yaw;
  r.score = box.score;
  return r;
}

const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "Easy";
    case Difficulty::kModerate: return "Moderate";
    case Difficulty::kHard: return "Hard";
    case Difficulty::kNone: break;
  }
  return "None";
}

DifficultyLimits difficulty_limits(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return {40.0, 0, 0.15};
    case Difficulty::kModerate: return {25.0, 1, 0.30};
    case Difficulty::kHard: return {25.0, 2, 0.50};
    case Difficulty::kNone: break;
  }
  throw std::invalid_argument("no limits for difficulty None");
}

bool meets_difficulty(double h, int occlusion, double truncation, Difficulty d) {
  if (d == Difficulty::kNone) return false;
  const DifficultyLimits lim = difficulty_limits(d);
  return h >= lim.min_height_px && occlusion <= lim.max_occlusion && truncation <= lim.max_truncation;
}

Difficulty difficulty(double h, int occlusion, double truncation) {
  for (Difficulty d : kDifficulties) {
    if (meets_difficulty(h, occlusion, truncation, d)) return d;
  }
  return Difficulty::kNone;
}

std::vector<std::string> parse_split(std::string_view text) {
  std::vector<std::string> ids;
  for_each_line(text, [&](std::string_view line, int n) {
    const auto tok = split_ws(line);
    if (tok.empty()) return;
    if (tok.size() != 1 || tok[0].size() != 6 ||
        !std::all_of(tok[0].begin(), tok[0].end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      throw ParseError("expected a six-digit frame id", n);
    }
    ids.emplace_back(tok[0]);
  });
  return ids;
}

std::vector<std::string> load_split(const std::filesystem::path& path) {
  try {
    return parse_split(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_split(const std::filesystem::path& path, std::span<const std::string> ids) {
  std::string text;
  for (const auto& id : ids) text += id + '\n';
  write_text_file(path, text);
}

std::string frame_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_results(const std::filesystem::path& dir, const std::string& frame,
                   std::span<const KittiLabelRecord> detections) {
  write_text_file(dir / (frame + ".txt"), format_label_file(detections));
}

std::filesystem::path KittiDataset::label_path(const std::string& id) const {
  return root / "label_2" / (id + ".txt");
}
std::filesystem::path KittiDataset::calib_path(const std::string& id) const {
  return root / "calib" / (id + ".txt");
}
std::filesystem::path KittiDataset::image_path(const std::string& id) const {
  return root / "image_2" / (id + ".png");
}

std::vector<std::string> KittiDataset::frames() const {
  std::vector<std::string> ids;
  for (const char* sub : {"label_2", "calib"}) {
    const auto dir = root / sub;
    if (!std::filesystem::is_directory(dir)) continue;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.path().extension() == ".txt") ids.push_back(e.path().stem().string());
    }
    if (!ids.empty()) break;
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<KittiLabelRecord> KittiDataset::labels(const std::string& id) const {
  const auto path = label_path(id);
  try {
    return parse_label_file(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Calibration KittiDataset::calib(const std::string& id) const {
  const auto path = calib_path(id);
  try {
    return parse_calib(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace virtview
