#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gswm/camera.hpp"
#include "gswm/scene.hpp"

namespace gswm {

/// Binary scene file, little-endian:
///   "GSWM" | u32 version (=1) | u32 count | background 3 x f32
///   per record: center 3 x f32 | log_scale 3 x f32 | quaternion w,x,y,z 4 x f32 |
///               opacity_logit f32 | color 3 x f32 | frozen u8
/// Fields are stored as f32, so a round trip is exact for f32-representable values.
inline constexpr std::uint32_t kSceneFormatVersion = 1;
inline constexpr std::size_t kSceneHeaderBytes = 4 + 4 + 4 + 12;
inline constexpr std::size_t kSceneRecordBytes = 14 * 4 + 1;

std::string serialize_scene(const GaussianScene& scene);
GaussianScene parse_scene(std::string_view bytes);

void save_scene(const std::filesystem::path& path, const GaussianScene& scene);
GaussianScene load_scene(const std::filesystem::path& path);

/// Rounds every field to f32, i.e. the scene a save/load round trip produces.
GaussianScene quantize_scene(const GaussianScene& scene);

/// Camera text file: blocks separated by blank lines, each with
///   fx <r>, fy <r>, cx <r>, cy <r>, width <i>, height <i>, world_to_view <16 reals row-major>
/// '#' starts a comment.
std::string format_cameras(const std::vector<Camera>& cameras);
std::vector<Camera> parse_cameras(std::string_view text);

void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras);
std::vector<Camera> load_cameras(const std::filesystem::path& path);

}  // namespace gswm
