/*
 * Copyright 2026 The Dispel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dispel/dataset.hpp"
#include "dispel/groupeval.hpp"
#include "dispel/linmodel.hpp"

namespace dispel {

enum class FileFormat { csv, bin };

FileFormat parse_format(const std::string& name);  // "csv" or "bin"

// CSV: header y,a,g,x0,...,x{d-1}; g is the "a|y" string; floats printed
// as shortest round-trip decimals; LF line endings, locale independent.
// Binary: magic DSPL, u32 version 1, u64 n, u64 d, n*d little-endian f32
// row major, then n records of (i8 y, i8 a).
void save_dataset(const Dataset& data, const std::string& path,
                  FileFormat format);
Dataset load_dataset(const std::string& path, FileFormat format);

// Single-row CSV with header w0,...,w{d-1},b. Ridge fits without a bias
// write b = 0.
void save_weights(const ModelWeights& weights, const std::string& path);
ModelWeights load_weights(const std::string& path);

// CSV with columns group,count,value; one row per universe group, then
// summary rows labelled worst and avg.
void save_report(const GroupReport& report, const std::string& path);

// 64-bit FNV-1a digest of a file's bytes, as 16 hex characters.
std::string file_digest(const std::string& path);

// Flat key-value manifest written next to an experiment's outputs as
// <stem>.manifest.json. Output digests get keys digest:<basename>.
struct ManifestEntry {
  std::string key;
  std::string value;
};

void write_manifest(const std::string& manifest_path,
                    const std::string& command,
                    const std::vector<ManifestEntry>& params,
                    const std::vector<std::string>& output_files,
                    double duration_seconds, bool partial = false);

}  // namespace dispel
