/*
 * Copyright 2026 The uscore Authors
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

#include "uscore/common.hpp"
#include "uscore/driver/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <memory>
#include <string>

namespace uscore::driver {

/// Hex SHA-1 of "blob <size>\0<content>", the identifier git assigns to a
/// file with that content.
inline std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size() + 1) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1) {
    throw Error("sha1: digest setup failed");
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw Error("sha1: digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

/// The resolved run configuration and its content hash. The output path is
/// not part of the identity of a run.
struct RunManifest {
  std::string command;
  Config config;

  std::string canonical() const {
    return "command=" + command + "\n" + config.canonical({"out", "csv"});
  }
  std::string hash() const { return git_blob_hash(canonical()); }
};

}  // namespace uscore::driver
