#include "gswm/scene_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "gswm/error.hpp"
#include "gswm/fileio.hpp"

namespace gswm {
namespace {

constexpr char kMagic[4] = {'G', 'S', 'W', 'M'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes_[pos_++]); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

std::string serialize_scene(const GaussianScene& scene) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kSceneFormatVersion);
  w.u32(static_cast<std::uint32_t>(scene.primitives.size()));
  for (int c = 0; c < 3; ++c) w.f32(scene.background[c]);
  for (const auto& g : scene.primitives) {
    for (int i = 0; i < 3; ++i) w.f32(g.center[i]);
    for (int i = 0; i < 3; ++i) w.f32(g.log_scale[i]);
    for (int i = 0; i < 4; ++i) w.f32(g.rotation[i]);
    w.f32(g.opacity_logit);
    for (int i = 0; i < 3; ++i) w.f32(g.color[i]);
    w.u8(g.frozen ? 1 : 0);
  }
  return w.take();
}

GaussianScene parse_scene(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "scene file does not start with GSWM");
  }
  require(bytes.size() >= kSceneHeaderBytes, ErrorCode::kTruncated, "scene header truncated");
  Reader r(bytes.substr(4));
  const std::uint32_t version = r.u32();
  require(version == kSceneFormatVersion, ErrorCode::kVersionMismatch,
          "unsupported scene version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  GaussianScene scene;
  for (int c = 0; c < 3; ++c) scene.background[c] = r.f32();
  require(scene.background.allFinite(), ErrorCode::kValidation, "background is not finite");
  const std::size_t expected = kSceneHeaderBytes + static_cast<std::size_t>(count) * kSceneRecordBytes;
  if (bytes.size() < expected) {
    const std::size_t complete = (bytes.size() - kSceneHeaderBytes) / kSceneRecordBytes;
    fail(ErrorCode::kTruncated, "scene record " + std::to_string(complete) + " of " +
                                    std::to_string(count) + " is truncated");
  }
  scene.primitives.resize(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    auto& g = scene.primitives[k];
    for (int i = 0; i < 3; ++i) g.center[i] = r.f32();
    for (int i = 0; i < 3; ++i) g.log_scale[i] = r.f32();
    for (int i = 0; i < 4; ++i) g.rotation[i] = r.f32();
    g.opacity_logit = r.f32();
    for (int i = 0; i < 3; ++i) g.color[i] = r.f32();
    g.frozen = r.u8() != 0;
    const bool finite = g.center.allFinite() && g.log_scale.allFinite() &&
                        g.rotation.allFinite() && std::isfinite(g.opacity_logit) &&
                        g.color.allFinite();
    require(finite, ErrorCode::kValidation,
            "scene record " + std::to_string(k) + " has a non-finite field");
  }
  return scene;
}

void save_scene(const std::filesystem::path& path, const GaussianScene& scene) {
  atomic_write_file(path, serialize_scene(scene));
}

GaussianScene load_scene(const std::filesystem::path& path) { return parse_scene(read_file(path)); }

GaussianScene quantize_scene(const GaussianScene& scene) {
  GaussianScene out = scene;
  out.background = scene.background.unaryExpr(&round_f32);
  for (auto& g : out.primitives) {
    g.center = g.center.unaryExpr(&round_f32);
    g.log_scale = g.log_scale.unaryExpr(&round_f32);
    g.rotation = g.rotation.unaryExpr(&round_f32);
    g.opacity_logit = round_f32(g.opacity_logit);
    g.color = g.color.unaryExpr(&round_f32);
  }
  return out;
}

std::string format_cameras(const std::vector<Camera>& cameras) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const Camera& c = cameras[i];
    if (i > 0) out << '\n';
    out << "# camera " << i << '\n';
    out << "fx " << c.focal.x() << '\n' << "fy " << c.focal.y() << '\n';
    out << "cx " << c.principal_point.x() << '\n' << "cy " << c.principal_point.y() << '\n';
    out << "width " << c.width << '\n' << "height " << c.height << '\n';
    out << "world_to_view";
    for (int r = 0; r < 4; ++r) {
      out << '\n';
      for (int col = 0; col < 4; ++col) out << (col ? " " : "") << c.world_to_view(r, col);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Camera> parse_cameras(std::string_view text) {
  std::vector<Camera> cameras;
  std::istringstream in{std::string(text)};
  std::string line;
  std::map<std::string, double> keys;
  std::vector<double> matrix;
  bool reading_matrix = false;
  int line_no = 0;

  auto flush = [&] {
    if (keys.empty() && matrix.empty()) return;
    for (const char* k : {"fx", "fy", "cx", "cy", "width", "height"}) {
      require(keys.contains(k), ErrorCode::kParse,
              "camera " + std::to_string(cameras.size()) + " is missing key '" + k + "'");
    }
    require(matrix.size() == 16, ErrorCode::kParse,
            "camera " + std::to_string(cameras.size()) + " world_to_view needs 16 values, got " +
                std::to_string(matrix.size()));
    Camera cam;
    cam.focal = Vec2(keys["fx"], keys["fy"]);
    cam.principal_point = Vec2(keys["cx"], keys["cy"]);
    cam.width = static_cast<int>(keys["width"]);
    cam.height = static_cast<int>(keys["height"]);
    for (int i = 0; i < 16; ++i) cam.world_to_view(i / 4, i % 4) = matrix[i];
    cam.validate();
    cameras.push_back(cam);
    keys.clear();
    matrix.clear();
    reading_matrix = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) {
      // Blank line ends a block unless we are between matrix rows.
      if (!reading_matrix || matrix.size() == 16) flush();
      continue;
    }
    auto parse_number = [&](const std::string& tok) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
      } catch (const std::exception&) {
        fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
    };
    if (key == "world_to_view") {
      reading_matrix = true;
    } else if (reading_matrix && matrix.size() < 16) {
      matrix.push_back(parse_number(key));
    } else {
      // A repeated key starts the next camera even without a blank line.
      if (keys.contains(key)) flush();
      if (key != "fx" && key != "fy" && key != "cx" && key != "cy" && key != "width" &&
          key != "height") {
        fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
      std::string value;
      require(static_cast<bool>(fields >> value), ErrorCode::kParse,
              "line " + std::to_string(line_no) + ": key '" + key + "' has no value");
      keys[key] = parse_number(value);
      continue;
    }
    std::string tok;
    while (fields >> tok) {
      require(matrix.size() < 16, ErrorCode::kParse,
              "line " + std::to_string(line_no) + ": too many world_to_view values");
      matrix.push_back(parse_number(tok));
    }
  }
  flush();
  return cameras;
}

void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras) {
  atomic_write_file(path, format_cameras(cameras));
}

std::vector<Camera> load_cameras(const std::filesystem::path& path) {
  return parse_cameras(read_file(path));
}

}  // namespace gswm
