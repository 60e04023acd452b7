#include "graphsparse/observation.hpp"

#include <fstream>
#include <stdexcept>

namespace graphsparse {

namespace {

template <typename Fn>
void for_each_fov_cell(const GridMap& map, const RobotState& robot, Fn&& fn) {
  const int r = robot.fov_radius;
  const long r2 = static_cast<long>(r) * r;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const Cell c{robot.position.x + dx, robot.position.y + dy};
      if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy <= r2 && map.in_bounds(c)) fn(c);
    }
}

template <typename Fn>
void for_each_edge_cell(const ExplorationTree& tree, Fn&& fn) {
  for (std::size_t i = 0; i < tree.capacity(); ++i) {
    const TreeNode& n = tree.node(static_cast<NodeId>(i));
    if (!n.alive) continue;
    fn(n.cell);
    if (n.parent != kNoNode)
      for_each_supercover_cell(n.cell, tree.node(n.parent).cell, [&](Cell c) {
        fn(c);
        return true;
      });
  }
}

}  // namespace

ObservationImage render(const GridMap& map, const ExplorationTree& tree, const RobotState& robot) {
  ObservationImage img;
  img.width = map.width();
  img.height = map.height();
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height * img.channels, 0.0f);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (!map.is_explored({x, y})) continue;
      img.at(x, y, map.is_obstacle({x, y}) ? kObstacleChannel : kExploredChannel) = 1.0f;
    }
  for_each_edge_cell(tree, [&](Cell c) { img.at(c.x, c.y, kGraphChannel) = 1.0f; });
  for_each_fov_cell(map, robot, [&](Cell c) { img.at(c.x, c.y, kRobotChannel) = 0.5f; });
  img.at(robot.position.x, robot.position.y, kRobotChannel) = 1.0f;
  return img;
}

TokenSequence tokenize(const ObservationImage& image, int patch_size) {
  if (patch_size < 1 || image.width % patch_size != 0 || image.height % patch_size != 0)
    throw std::invalid_argument("tokenize: image " + std::to_string(image.width) + "x" +
                                std::to_string(image.height) + " is not divisible by patch size " +
                                std::to_string(patch_size));
  TokenSequence t;
  t.rows = image.height / patch_size;
  t.cols = image.width / patch_size;
  t.patch_size = patch_size;
  t.channels = image.channels;
  const int dim = patch_size * patch_size * image.channels;
  t.patches.resize(t.rows * t.cols, dim);
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < t.cols; ++c) {
      const int k = r * t.cols + c;
      int j = 0;
      for (int py = 0; py < patch_size; ++py)
        for (int px = 0; px < patch_size; ++px)
          for (int ch = 0; ch < image.channels; ++ch)
            t.patches(k, j++) = image.at(c * patch_size + px, r * patch_size + py, ch);
    }
  return t;
}

ObservationImage detokenize(const TokenSequence& t) {
  ObservationImage img;
  img.width = t.cols * t.patch_size;
  img.height = t.rows * t.patch_size;
  img.channels = t.channels;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height * img.channels, 0.0f);
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < t.cols; ++c) {
      const int k = r * t.cols + c;
      int j = 0;
      for (int py = 0; py < t.patch_size; ++py)
        for (int px = 0; px < t.patch_size; ++px)
          for (int ch = 0; ch < t.channels; ++ch)
            img.at(c * t.patch_size + px, r * t.patch_size + py, ch) = t.patches(k, j++);
    }
  return img;
}

std::vector<Rgb> composite(const GridMap& map, const ExplorationTree& tree, const RobotState& robot) {
  std::vector<Rgb> px(static_cast<std::size_t>(map.width()) * map.height(), palette::kUnexplored);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      const Cell c{x, y};
      if (map.is_obstacle(c))
        px[map.index(c)] = map.is_explored(c) ? palette::kObstacle : palette::kHiddenObstacle;
      else if (map.is_explored(c))
        px[map.index(c)] = palette::kExplored;
    }
  for_each_fov_cell(map, robot, [&](Cell c) {
    if (map.is_free(c) && map.is_explored(c)) px[map.index(c)] = palette::kFieldOfView;
  });
  for_each_edge_cell(tree, [&](Cell c) { px[map.index(c)] = palette::kTree; });
  px[map.index(robot.position)] = palette::kRobot;
  return px;
}

void write_ppm(const std::string& path, int width, int height, const std::vector<Rgb>& pixels) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "P6\n" << width << ' ' << height << "\n255\n";
  for (const auto& p : pixels) os.write(reinterpret_cast<const char*>(p.data()), 3);
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_channels_pgm(const std::string& path, const ObservationImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  const int w = image.width * image.channels;
  os << "P5\n" << w << ' ' << image.height << "\n255\n";
  for (int y = 0; y < image.height; ++y)
    for (int ch = 0; ch < image.channels; ++ch)
      for (int x = 0; x < image.width; ++x)
        os.put(static_cast<char>(static_cast<std::uint8_t>(image.at(x, y, ch) * 255.0f + 0.5f)));
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace graphsparse
