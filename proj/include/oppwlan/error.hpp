/*
 * Copyright 2026 The oppwlan Authors
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
#pragma once

#include <stdexcept>
#include <string>

namespace oppwlan {

/// A caller supplied a value outside the operation's domain.
class invalid_parameter : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A probability identity was violated by more than rounding error.
class consistency_error : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// The renewal or tagged-success linear system could not be factorized.
class singular_system : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration; carries the offending key.
class config_error : public std::runtime_error {
public:
  config_error(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

}  // namespace oppwlan
