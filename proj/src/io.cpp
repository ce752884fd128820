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
#include "dispel/io.hpp"

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "dispel/errors.hpp"
#include "json.hpp"

namespace dispel {
namespace {

constexpr char kMagic[4] = {'D', 'S', 'P', 'L'};
constexpr std::uint32_t kBinaryVersion = 1;

template <typename T>
void append_number(std::string& out, T value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, result.ptr);
}

template <typename T>
T parse_number(std::string_view text, const std::string& what) {
  T value{};
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ValidationError("cannot parse " + what + " from '" +
                          std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::ifstream open_input(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  return out;
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
  auto out = open_output(path, std::ios::out | std::ios::binary);
  std::string line = "y,a,g";
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    line += ",x";
    append_number(line, static_cast<long long>(j));
  }
  line += '\n';
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    line.clear();
    append_number(line, data.y[i]);
    line += ',';
    append_number(line, data.a[i]);
    line += ',';
    line += to_string(data.group(i));
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      line += ',';
      append_number(line, data.x(i, j));
    }
    line += '\n';
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  if (!out) throw ValidationError("short write to '" + path + "'");
}

Dataset load_dataset_csv(const std::string& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  std::string header;
  if (!std::getline(in, header)) {
    throw ValidationError("'" + path + "' is empty");
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto head_fields = split_csv_line(header);
  if (head_fields.size() < 4 || head_fields[0] != "y" ||
      head_fields[1] != "a" || head_fields[2] != "g") {
    throw ValidationError("'" + path +
                          "' header must start with y,a,g,x0,...");
  }
  const auto d = static_cast<Eigen::Index>(head_fields.size() - 3);
  for (Eigen::Index j = 0; j < d; ++j) {
    std::string expect = "x" + std::to_string(j);
    if (head_fields[static_cast<std::size_t>(j) + 3] != expect) {
      throw ValidationError("'" + path + "' header column " +
                            std::to_string(j + 3) + " is not " + expect);
    }
  }
  std::vector<float> values;
  std::vector<int> ys, as;
  std::string line;
  Eigen::Index row = 0;  // 1-based data rows in messages
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const std::string where = "'" + path + "' row " + std::to_string(row);
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != d + 3) {
      throw ValidationError(
          where + " has " +
          std::to_string(static_cast<std::int64_t>(fields.size()) - 3) +
          " features, expected " + std::to_string(d));
    }
    try {
      const int y = parse_number<int>(fields[0], "label");
      const int a = parse_number<int>(fields[1], "attribute");
      const GroupId g = parse_group(fields[2]);
      if (g.a != a || g.y != y) {
        throw ValidationError("group " + std::string(fields[2]) +
                              " disagrees with its (a, y) columns");
      }
      ys.push_back(y);
      as.push_back(a);
      for (Eigen::Index j = 0; j < d; ++j) {
        values.push_back(parse_number<float>(
            fields[static_cast<std::size_t>(j) + 3], "feature"));
      }
    } catch (const ValidationError& err) {
      throw ValidationError(where + ": " + err.what());
    }
  }
  Dataset out;
  out.x.resize(row, d);
  std::memcpy(out.x.data(), values.data(), values.size() * sizeof(float));
  out.y = Eigen::Map<Eigen::VectorXi>(ys.data(), row);
  out.a = Eigen::Map<Eigen::VectorXi>(as.data(), row);
  out.rebuild_index();
  return out;
}

void save_dataset_bin(const Dataset& data, const std::string& path) {
  auto out = open_output(path, std::ios::out | std::ios::binary);
  out.write(kMagic, 4);
  const std::uint32_t version = kBinaryVersion;
  const std::uint64_t n = static_cast<std::uint64_t>(data.rows());
  const std::uint64_t d = static_cast<std::uint64_t>(data.dim());
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  out.write(reinterpret_cast<const char*>(data.x.data()),
            static_cast<std::streamsize>(n * d * sizeof(float)));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const std::int8_t y = static_cast<std::int8_t>(data.y[i]);
    const std::int8_t a = static_cast<std::int8_t>(data.a[i]);
    out.write(reinterpret_cast<const char*>(&y), 1);
    out.write(reinterpret_cast<const char*>(&a), 1);
  }
  if (!out) throw ValidationError("short write to '" + path + "'");
}

Dataset load_dataset_bin(const std::string& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("'" + path + "' lacks the DSPL magic at byte 0");
  }
  std::uint32_t version = 0;
  std::uint64_t n = 0, d = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof(version)) ||
      version != kBinaryVersion) {
    throw ValidationError("'" + path + "' has unsupported version " +
                          std::to_string(version));
  }
  if (!in.read(reinterpret_cast<char*>(&n), sizeof(n)) ||
      !in.read(reinterpret_cast<char*>(&d), sizeof(d))) {
    throw ValidationError("'" + path + "' truncated in the size header");
  }
  if (d < 1 || n > (1ull << 40) || d > (1ull << 24)) {
    throw ValidationError("'" + path + "' declares implausible sizes n=" +
                          std::to_string(n) + " d=" + std::to_string(d));
  }
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const auto payload = static_cast<std::streamsize>(n * d * sizeof(float));
  if (!in.read(reinterpret_cast<char*>(out.x.data()), payload)) {
    throw ValidationError("'" + path + "' truncated in the feature block");
  }
  out.y.resize(static_cast<Eigen::Index>(n));
  out.a.resize(static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    std::int8_t rec[2];
    if (!in.read(reinterpret_cast<char*>(rec), 2)) {
      throw ValidationError("'" + path + "' truncated at label record " +
                            std::to_string(i));
    }
    out.y[static_cast<Eigen::Index>(i)] = rec[0];
    out.a[static_cast<Eigen::Index>(i)] = rec[1];
  }
  if (!out.x.allFinite()) {
    throw ValidationError("'" + path + "' contains non-finite features");
  }
  out.rebuild_index();
  return out;
}

}  // namespace

FileFormat parse_format(const std::string& name) {
  if (name == "csv") return FileFormat::csv;
  if (name == "bin") return FileFormat::bin;
  throw ValidationError("unknown format '" + name + "' (expected csv or bin)");
}

void save_dataset(const Dataset& data, const std::string& path,
                  FileFormat format) {
  if (format == FileFormat::csv) {
    save_dataset_csv(data, path);
  } else {
    save_dataset_bin(data, path);
  }
}

Dataset load_dataset(const std::string& path, FileFormat format) {
  return format == FileFormat::csv ? load_dataset_csv(path)
                                   : load_dataset_bin(path);
}

void save_weights(const ModelWeights& weights, const std::string& path) {
  auto out = open_output(path, std::ios::out | std::ios::binary);
  std::string line;
  for (Eigen::Index j = 0; j < weights.w.size(); ++j) {
    if (j > 0) line += ',';
    line += 'w';
    append_number(line, static_cast<long long>(j));
  }
  line += ",b\n";
  for (Eigen::Index j = 0; j < weights.w.size(); ++j) {
    if (j > 0) line += ',';
    append_number(line, weights.w[j]);
  }
  line += ',';
  append_number(line, weights.b.value_or(0.0));
  line += '\n';
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (!out) throw ValidationError("short write to '" + path + "'");
}

ModelWeights load_weights(const std::string& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  std::string header, row;
  if (!std::getline(in, header) || !std::getline(in, row)) {
    throw ValidationError("'" + path + "' needs a header and one value row");
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (!row.empty() && row.back() == '\r') row.pop_back();
  const auto names = split_csv_line(header);
  const auto fields = split_csv_line(row);
  if (names.size() < 2 || names.back() != "b" ||
      names.size() != fields.size()) {
    throw ValidationError("'" + path + "' is not a w0..w{d-1},b weights file");
  }
  ModelWeights out;
  out.w.resize(static_cast<Eigen::Index>(names.size() - 1));
  for (std::size_t j = 0; j + 1 < names.size(); ++j) {
    if (names[j] != "w" + std::to_string(j)) {
      throw ValidationError("'" + path + "' header column " +
                            std::to_string(j) + " is not w" +
                            std::to_string(j));
    }
    out.w[static_cast<Eigen::Index>(j)] =
        parse_number<double>(fields[j], "weight");
  }
  out.b = parse_number<double>(fields.back(), "bias");
  return out;
}

void save_report(const GroupReport& report, const std::string& path) {
  auto out = open_output(path, std::ios::out | std::ios::binary);
  std::string text = "group,count,value\n";
  Eigen::Index total = 0;
  for (const auto& [gid, stat] : report.per_group) {
    text += to_string(gid);
    text += ',';
    append_number(text, static_cast<long long>(stat.count));
    text += ',';
    append_number(text, stat.value);
    text += '\n';
    total += stat.count;
  }
  Eigen::Index worst_count = 0;
  for (const auto& [gid, stat] : report.per_group) {
    if (gid == report.worst_group) worst_count = stat.count;
  }
  text += "worst,";
  append_number(text, static_cast<long long>(worst_count));
  text += ',';
  append_number(text, report.worst_value);
  text += '\n';
  text += "avg,";
  append_number(text, static_cast<long long>(total));
  text += ',';
  append_number(text, report.average);
  text += '\n';
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ValidationError("short write to '" + path + "'");
}

std::string file_digest(const std::string& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string(hex, 16);
}

void write_manifest(const std::string& manifest_path,
                    const std::string& command,
                    const std::vector<ManifestEntry>& params,
                    const std::vector<std::string>& output_files,
                    double duration_seconds, bool partial) {
  nlohmann::ordered_json doc;
  doc["command"] = command;
  doc["library_version"] = "dispel 0.1.0";
  for (const auto& entry : params) doc[entry.key] = entry.value;
  doc["duration_seconds"] = duration_seconds;
  doc["partial"] = partial;
  for (const auto& file : output_files) {
    doc["digest:" + std::filesystem::path(file).filename().string()] =
        file_digest(file);
  }
  auto out = open_output(manifest_path, std::ios::out | std::ios::binary);
  const std::string text = doc.dump(2) + "\n";
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ValidationError("short write to '" + manifest_path + "'");
}

}  // namespace dispel
