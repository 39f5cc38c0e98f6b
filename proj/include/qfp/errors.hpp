/**
 * Copyright 2026 The qfpsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef QFP_ERRORS_HPP
#define QFP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qfp {

/// Malformed or inconsistent user input: bad files, unknown keys, shape
/// mismatches, out-of-range options.  CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical contract was violated: a matrix failed a required invariant,
/// a truncation defect exceeded its bound, a fit did not converge.
/// CLI exit code 3.
class ToleranceError : public std::runtime_error {
 public:
  explicit ToleranceError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested computation exceeds a configured resource cap (basis size,
/// permanent budget, window growth).  CLI exit code 4.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qfp

#endif  // QFP_ERRORS_HPP
