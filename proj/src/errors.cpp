// Copyright (C) 2026 The sepal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "errors.hpp"

namespace sepal {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax: return "syntax error";
    case ErrorCode::kUnknownName: return "unknown name";
    case ErrorCode::kMalformedTree: return "malformed tree";
    case ErrorCode::kEmptyCorpus: return "empty corpus";
    case ErrorCode::kDegenerateData: return "degenerate data";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kInvalidArgument: return "invalid argument";
  }
  return "error";
}

static std::string syntax_message(const std::string& source, int line, int col,
                                  const std::string& msg) {
  std::string out = source.empty() ? std::string("<input>") : source;
  out += ":" + std::to_string(line);
  if (col > 0) out += ":" + std::to_string(col);
  out += ": " + msg;
  return out;
}

SyntaxError::SyntaxError(std::string source, int line, int col,
                         const std::string& msg)
    : Error(ErrorCode::kSyntax, syntax_message(source, line, col, msg)),
      line_(line),
      col_(col) {}

}  // namespace sepal
