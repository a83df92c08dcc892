#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "brickstage/runtime.hpp"

namespace brickstage {

// Canonical scene record, compact JSON with fixed key order:
//   {"tick":T,"entries":[{"sprite":S,"x":X,"y":Y,"visible":B,"size":N,"layer":L,"costume":C},...]}
// X and Y are the 16-hex-digit big-endian IEEE-754 bit patterns of the
// coordinates (zero is always encoded as +0.0).
std::string canonical_scene_bytes(const Scene& scene);

// Canonical outputs record:
//   {"tick":T,"events":[E,...]} with E one of
//   {"kind":"speak","sprite":S,"text":X} | {"kind":"sound","sprite":S,"sound":I}
//   {"kind":"broadcast","message":M}     | {"kind":"ended"}
std::string canonical_outputs_bytes(const TickOutputs& outputs);

std::string double_bits_hex(double value);

struct Image {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGBA

  Image() = default;
  Image(std::int64_t w, std::int64_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w * h * 4), fill) {}

  std::uint8_t* at(std::int64_t x, std::int64_t y) {
    return pixels.data() + static_cast<std::size_t>((y * width + x) * 4);
  }
  const std::uint8_t* at(std::int64_t x, std::int64_t y) const {
    return pixels.data() + static_cast<std::size_t>((y * width + x) * 4);
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Costume images keyed by (sprite name, costume id).
using CostumeImages = std::map<std::pair<std::string, std::string>, Image>;

class MissingAssetError : public std::runtime_error {
 public:
  MissingAssetError(std::string sprite, std::string costume)
      : std::runtime_error("no image for costume \"" + costume + "\" of sprite \"" + sprite + "\""),
        sprite_(std::move(sprite)),
        costume_(std::move(costume)) {}
  const std::string& sprite() const noexcept { return sprite_; }
  const std::string& costume() const noexcept { return costume_; }

 private:
  std::string sprite_;
  std::string costume_;
};

// Composites the visible entries of a scene, in order, onto an opaque white
// stage-sized canvas. Throws MissingAssetError for a visible sprite whose
// costume image is absent.
Image rasterize(const Scene& scene, std::int64_t stage_width, std::int64_t stage_height,
                const CostumeImages& assets);

// Binary P6 with maxval 255; alpha is composited against white.
std::string write_ppm(const Image& image);

// Decodes a PNG into 8-bit RGBA. Throws std::runtime_error naming the path.
Image load_png(const std::filesystem::path& path);

// Writes an RGBA PNG (used for fixtures and tooling).
void save_png(const Image& image, const std::filesystem::path& path);

struct AssetLoadResult {
  CostumeImages images;
  // (sprite, costume) -> asset path, for costumes whose file could not be loaded.
  std::map<std::pair<std::string, std::string>, std::filesystem::path> missing;
};

// Loads every costume of the project relative to base_dir. Unreadable files and
// images whose size differs from the declared costume size are
// collected rather than thrown so hidden sprites need no assets.
AssetLoadResult load_costume_images(const Project& project, const std::filesystem::path& base_dir);

}  // namespace brickstage
