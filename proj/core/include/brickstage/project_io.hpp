#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "brickstage/project.hpp"

namespace brickstage {

// Raised for any document that cannot become a valid Project. path() names the
// deepest failing node, e.g. "sprites[0].scripts[1].bricks[2].count".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)),
        message_(message) {}

  const std::string& path() const noexcept { return path_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string path_;
  std::string message_;
};

// Structural parse only: JSON shape, field names and literal types. The result
// may still have validate() violations.
Project parse_project_document(std::string_view text);

// Strict parse: structural parse followed by validate(); the first violation
// becomes a ParseError.
Project parse_project(std::string_view text);

// Canonical compact JSON, fixed field order, no trailing newline. Throws
// std::invalid_argument for projects with violations.
std::string serialize_project(const Project& project);

// SHA-256 of serialize_project(project).
std::string project_digest(const Project& project);

}  // namespace brickstage
