#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "liftrc/errors.hpp"
#include "liftrc/model.hpp"

namespace liftrc {

struct Diagnostic {
  std::size_t line = 0;  // 1-based
  std::size_t column = 0;  // 1-based
  std::string message;

  std::string to_string() const;
};

class ParseError : public Error {
 public:
  explicit ParseError(Diagnostic d) : Error(ErrorCode::kParse, d.to_string()), diagnostic_(std::move(d)) {}
  const Diagnostic& diagnostic() const noexcept { return diagnostic_; }

 private:
  Diagnostic diagnostic_;
};

struct ParseResult {
  std::optional<Model> model;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

// Never throws: malformed input yields a diagnostic.
ParseResult parse_model(std::string_view text);
// Throws ParseError.
Model parse_model_or_throw(std::string_view text);
// Throws ParseError, or InvalidArgumentError when the file cannot be read.
Model load_model_file(const std::string& path);

// DSL text that parses back to an equal Model.
std::string print_model(const Model& model);

}  // namespace liftrc
