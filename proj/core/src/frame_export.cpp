#include "brickstage/frame_export.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "json.hpp"

namespace brickstage {
namespace {

using OrderedJson = nlohmann::ordered_json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::uint8_t blend(std::uint8_t src, std::uint8_t dst, std::uint8_t alpha) {
  return static_cast<std::uint8_t>((src * alpha + dst * (255 - alpha) + 127) / 255);
}

std::int64_t round_half_away(double value) {
  const double clamped = std::clamp(value, -1e15, 1e15);
  return static_cast<std::int64_t>(std::llround(clamped));
}

}  // namespace

std::string double_bits_hex(double value) {
  if (value == 0.0) value = 0.0;  // fold -0.0
  const auto bits = std::bit_cast<std::uint64_t>(value);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = kHex[(bits >> (4 * i)) & 0xf];
  return out;
}

std::string canonical_scene_bytes(const Scene& scene) {
  OrderedJson root;
  root["tick"] = scene.tick;
  OrderedJson entries = OrderedJson::array();
  for (const SceneEntry& e : scene.entries) {
    OrderedJson j;
    j["sprite"] = e.sprite_name;
    j["x"] = double_bits_hex(e.x);
    j["y"] = double_bits_hex(e.y);
    j["visible"] = e.visible;
    j["size"] = e.size_percent;
    j["layer"] = e.layer;
    j["costume"] = e.costume_id;
    entries.push_back(std::move(j));
  }
  root["entries"] = std::move(entries);
  return root.dump();
}

std::string canonical_outputs_bytes(const TickOutputs& outputs) {
  OrderedJson root;
  root["tick"] = outputs.tick;
  OrderedJson events = OrderedJson::array();
  for (const OutputEvent& event : outputs.emitted) {
    OrderedJson j;
    std::visit(Overloaded{
                   [&](const output::Speak& e) {
                     j["kind"] = "speak";
                     j["sprite"] = e.sprite;
                     j["text"] = e.text;
                   },
                   [&](const output::SoundStart& e) {
                     j["kind"] = "sound";
                     j["sprite"] = e.sprite;
                     j["sound"] = e.sound;
                   },
                   [&](const output::BroadcastSent& e) {
                     j["kind"] = "broadcast";
                     j["message"] = e.message;
                   },
                   [&](const output::ProgramEnded&) { j["kind"] = "ended"; },
               },
               event);
    events.push_back(std::move(j));
  }
  root["events"] = std::move(events);
  return root.dump();
}

Image rasterize(const Scene& scene, std::int64_t stage_width, std::int64_t stage_height,
                const CostumeImages& assets) {
  Image canvas(stage_width, stage_height, 255);
  for (const SceneEntry& entry : scene.entries) {
    if (!entry.visible || entry.costume_id.empty()) continue;
    const auto it = assets.find({entry.sprite_name, entry.costume_id});
    if (it == assets.end()) throw MissingAssetError(entry.sprite_name, entry.costume_id);
    const Image& costume = it->second;
    if (costume.width <= 0 || costume.height <= 0) continue;

    const std::int64_t dest_w = (costume.width * entry.size_percent + 50) / 100;
    const std::int64_t dest_h = (costume.height * entry.size_percent + 50) / 100;
    if (dest_w <= 0 || dest_h <= 0) continue;
    const std::int64_t left = stage_width / 2 + round_half_away(entry.x) - dest_w / 2;
    const std::int64_t top = stage_height / 2 - round_half_away(entry.y) - dest_h / 2;

    const std::int64_t row_begin = std::max<std::int64_t>(0, -top);
    const std::int64_t row_end = std::min<std::int64_t>(dest_h, stage_height - top);
    const std::int64_t col_begin = std::max<std::int64_t>(0, -left);
    const std::int64_t col_end = std::min<std::int64_t>(dest_w, stage_width - left);
    for (std::int64_t dy = row_begin; dy < row_end; ++dy) {
      const auto sy = static_cast<std::int64_t>((static_cast<__int128>(2 * dy + 1) * costume.height) /
                                                (static_cast<__int128>(2) * dest_h));
      for (std::int64_t dx = col_begin; dx < col_end; ++dx) {
        const auto sx = static_cast<std::int64_t>((static_cast<__int128>(2 * dx + 1) * costume.width) /
                                                  (static_cast<__int128>(2) * dest_w));
        const std::uint8_t* src = costume.at(sx, sy);
        std::uint8_t* dst = canvas.at(left + dx, top + dy);
        const std::uint8_t alpha = src[3];
        if (alpha == 0) continue;
        for (int c = 0; c < 3; ++c) dst[c] = blend(src[c], dst[c], alpha);
        dst[3] = 255;
      }
    }
  }
  return canvas;
}

std::string write_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(image.width * image.height * 3));
  char* dst = out.data() + header;
  for (std::size_t i = 0; i + 4 <= image.pixels.size(); i += 4) {
    const std::uint8_t alpha = image.pixels[i + 3];
    for (int c = 0; c < 3; ++c) *dst++ = static_cast<char>(blend(image.pixels[i + c], 255, alpha));
  }
  return out;
}

Image load_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&png, path.c_str()) == 0) {
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGBA;
  Image image(png.width, png.height);
  if (png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr) == 0) {
    png_image_free(&png);
    throw std::runtime_error("cannot decode PNG " + path.string() + ": " + png.message);
  }
  return image;
}

void save_png(const Image& image, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGBA;
  if (png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr) == 0) {
    throw std::runtime_error("cannot write PNG " + path.string() + ": " + png.message);
  }
}

AssetLoadResult load_costume_images(const Project& project, const std::filesystem::path& base_dir) {
  AssetLoadResult result;
  for (const Sprite& sprite : project.sprites) {
    for (const Costume& costume : sprite.costumes) {
      const auto path = base_dir / costume.file;
      try {
        Image image = load_png(path);
        if (image.width != costume.width || image.height != costume.height) {
          result.missing.emplace(std::pair{sprite.name, costume.id}, path);
          continue;
        }
        result.images.emplace(std::pair{sprite.name, costume.id}, std::move(image));
      } catch (const std::runtime_error&) {
        result.missing.emplace(std::pair{sprite.name, costume.id}, path);
      }
    }
  }
  return result;
}

}  // namespace brickstage
