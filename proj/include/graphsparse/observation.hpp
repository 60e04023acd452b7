#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "graphsparse/grid.hpp"
#include "graphsparse/tree.hpp"

namespace graphsparse {

enum Channel : int { kObstacleChannel = 0, kExploredChannel = 1, kGraphChannel = 2, kRobotChannel = 3 };
inline constexpr int kObservationChannels = 4;

/// Interleaved H x W x C planes with values in [0, 1].
struct ObservationImage {
  int width = 0;
  int height = 0;
  int channels = kObservationChannels;
  std::vector<float> pixels;

  float at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  friend bool operator==(const ObservationImage&, const ObservationImage&) = default;
};

/// Row-major patch tokens: row k of `patches` is patch (k / cols, k % cols),
/// flattened as (patch_y, patch_x, channel).
struct TokenSequence {
  Eigen::MatrixXf patches;
  int rows = 0;
  int cols = 0;
  int patch_size = 0;
  int channels = 0;
};

ObservationImage render(const GridMap& map, const ExplorationTree& tree, const RobotState& robot);

/// Throws std::invalid_argument when the image is not divisible into patches.
TokenSequence tokenize(const ObservationImage& image, int patch_size);
ObservationImage detokenize(const TokenSequence& tokens);

inline int token_width(int patch_size, int channels = kObservationChannels) {
  return patch_size * patch_size * channels;
}

using Rgb = std::array<std::uint8_t, 3>;

namespace palette {
inline constexpr Rgb kObstacle{255, 0, 255};
inline constexpr Rgb kHiddenObstacle{90, 0, 90};
inline constexpr Rgb kExplored{128, 128, 128};
inline constexpr Rgb kUnexplored{0, 0, 0};
inline constexpr Rgb kFieldOfView{255, 255, 0};
inline constexpr Rgb kTree{0, 64, 255};
inline constexpr Rgb kRobot{255, 32, 32};
}  // namespace palette

/// Human-facing composite in the obstacle/explored/graph/FOV palette above.
std::vector<Rgb> composite(const GridMap& map, const ExplorationTree& tree, const RobotState& robot);

/// Binary P6 portable pixmap. Throws std::runtime_error on I/O failure.
void write_ppm(const std::string& path, int width, int height, const std::vector<Rgb>& pixels);

/// One grayscale P5 image per observation channel, tiled horizontally.
void write_channels_pgm(const std::string& path, const ObservationImage& image);

}  // namespace graphsparse
