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

#ifndef QFP_SERIALIZE_HPP
#define QFP_SERIALIZE_HPP

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "qfp/errors.hpp"

namespace qfp {

/// Throw ConfigError unless `j` is a JSON object.
void require_object(const nlohmann::json& j, const std::string& context);

/// Throw ConfigError when `j` holds a key not in `allowed`.  Strict-key
/// parsing: a typo in a config never passes silently.
void require_keys(const nlohmann::json& j,
                  std::initializer_list<const char*> allowed,
                  const std::string& context);

/// Fetch a required field, rethrowing type errors as ConfigError.
template <typename T>
T get_required(const nlohmann::json& j, const char* key,
               const std::string& context) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(context + ": missing required key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(context + ": bad value for '" + key + "': " + e.what());
  }
}

/// Fetch an optional field with a default.
template <typename T>
T get_default(const nlohmann::json& j, const char* key, T fallback,
              const std::string& context) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(context + ": bad value for '" + key + "': " + e.what());
  }
}

/// Serialize with sorted keys, 2-space indent, and a trailing newline —
/// the canonical on-disk form used everywhere so reruns are byte-identical.
std::string canonical_dump(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Parse a JSON file; parse failures carry the path in a ConfigError.
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

/// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Shortest decimal text that round-trips the double exactly; used by the
/// CSV writers so exports are byte-stable across runs.
std::string double_repr(double x);

}  // namespace qfp

#endif  // QFP_SERIALIZE_HPP
