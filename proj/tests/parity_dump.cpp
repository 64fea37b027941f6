// Writes a weights file, voxel grids and the library's forward-pass output
// for the Python model to reproduce. With --check, loads the model the
// Python side wrote and compares against its output instead.
//   parity_dump <dir>
//   parity_dump --check <dir>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "evocr/io.hpp"
#include "evocr/recon.hpp"
#include "evocr/shaping.hpp"

using namespace evocr;
namespace fs = std::filesystem;

namespace {

constexpr int kVectors = 10;

shaping::VoxelGrid grid_for(int k) {
  shaping::FoveatedStream fov;
  fov.origins = {{0, 0, 0}};
  if (k == 0) return shaping::build_voxel_grid(fov, 0);
  std::mt19937 rng(static_cast<std::uint32_t>(100 + k));
  // Clustered events so some bins saturate and others stay sparse.
  const int cx = static_cast<int>(rng() % 200), cy = static_cast<int>(rng() % 100);
  std::normal_distribution<double> spread(0.0, 10.0 + 8.0 * k);
  const std::size_t n = 200 + 300 * static_cast<std::size_t>(k);
  for (std::size_t i = 0; i < n; ++i) {
    const int x = std::clamp(cx + static_cast<int>(spread(rng)), 0, 199);
    const int y = std::clamp(cy + static_cast<int>(spread(rng) / 2), 0, 99);
    fov.events.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), i * 7,
                          static_cast<std::int8_t>(rng() % 3 ? -1 : 1)});
  }
  return shaping::build_voxel_grid(fov, fov.events.size());
}

std::vector<float> read_floats(const fs::path& path) {
  const auto bytes = io::read_file(path);
  io::Reader r(bytes);
  std::vector<float> out(bytes.size() / 4);
  for (auto& v : out) v = r.f32();
  return out;
}

int check(const fs::path& dir) {
  const auto weights = recon::load_weights(io::read_file(dir / "torch_model.brw1"));
  shaping::VoxelGrid grid;
  grid.values = read_floats(dir / "torch_grid.f32");
  const auto expect = read_floats(dir / "torch_prob.f32");
  const auto prob = recon::infer_probabilities(weights, grid);
  const auto got = prob.values();
  if (got.size() != expect.size()) {
    std::printf("FAIL output size %zu, expected %zu\n", got.size(), expect.size());
    return 1;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::fabs(double(got[i]) - expect[i]));
  const bool ok = worst <= 1e-4;
  std::printf("%s torch-written weights: max |diff| %.2e\n", ok ? "PASS" : "FAIL", worst);
  return ok ? 0 : 1;
}

io::Bytes floats(std::span<const float> v) {
  io::Bytes out;
  out.reserve(v.size() * 4);
  for (float f : v) io::put_f32(out, f);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc == 3 && std::string(argv[1]) == "--check") return check(argv[2]);
  if (argc != 2) {
    std::fprintf(stderr, "usage: parity_dump [--check] <dir>\n");
    return 2;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir);
  const auto weights = recon::ModelWeights::random(2024, 1.25);
  io::write_file(dir / "model.brw1", recon::save_weights(weights));
  for (int k = 0; k < kVectors; ++k) {
    const auto grid = grid_for(k);
    const auto prob = recon::infer_probabilities(weights, grid);
    const auto bin = recon::infer_binary(weights, grid);
    io::write_file(dir / ("grid_" + std::to_string(k) + ".f32"), floats(grid.values));
    io::write_file(dir / ("prob_" + std::to_string(k) + ".f32"), floats(prob.values()));
    const auto px = bin.pixels.values();
    io::write_file(dir / ("bin_" + std::to_string(k) + ".u8"), io::Bytes(px.begin(), px.end()));
  }
  std::printf("wrote %d vectors to %s\n", kVectors, dir.c_str());
  return 0;
}
