#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace brickstage {

// Incremental SHA-256 producing a 64-char lowercase hex digest.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(Sha256&&) noexcept;
  Sha256& operator=(Sha256&&) noexcept;
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  // Finalizes the hash; the object must not be updated afterwards.
  std::string hex_digest();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view bytes);

bool is_hex_digest(std::string_view text);

}  // namespace brickstage
