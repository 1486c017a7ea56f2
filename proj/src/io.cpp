#include "motlab/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace motlab::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int parse_int(std::string_view text) {
  int value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string trajectory_csv(const std::vector<TrainRecord>& records) {
  std::string out(kTrajectoryHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.epoch);
    out += ',';
    out += std::to_string(static_cast<int>(r.stage));
    out += ',';
    out += format_double(r.expert_loss);
    out += ',';
    out += format_double(r.router_loss);
    out += ',';
    for (std::size_t i = 0; i < r.routed_counts.size(); ++i) {
      if (i) out += '|';
      out += std::to_string(r.routed_counts[i]);
    }
    out += ',';
    out += format_double(r.mean_margin);
    out += ',';
    out += format_double(r.mean_pvv);
    out += '\n';
  }
  return out;
}

void write_trajectory_csv(const fs::path& path, const std::vector<TrainRecord>& records) {
  write_text(path, trajectory_csv(records));
}

std::vector<TrainRecord> read_trajectory_csv(const fs::path& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader) {
    throw std::runtime_error(path.string() + ": bad trajectory header");
  }
  std::vector<TrainRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 7) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 7 fields");
    }
    try {
      TrainRecord r;
      r.epoch = parse_int(fields[0]);
      const int stage = parse_int(fields[1]);
      if (stage < 1 || stage > 3) throw std::invalid_argument("stage out of range");
      r.stage = static_cast<Stage>(stage);
      r.expert_loss = parse_double(fields[2]);
      r.router_loss = parse_double(fields[3]);
      if (!fields[4].empty()) {
        for (auto c : split(fields[4], '|')) r.routed_counts.push_back(parse_int(c));
      }
      r.mean_margin = parse_double(fields[5]);
      r.mean_pvv = parse_double(fields[6]);
      records.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

void write_text(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_text(path)); }

namespace {

template <typename T>
void append_raw(std::string& buf, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  buf.append(p, sizeof(T));
}

void append_matrix(std::string& buf, const Eigen::MatrixXd& m) {
  append_raw(buf, static_cast<std::int64_t>(m.rows()));
  append_raw(buf, static_cast<std::int64_t>(m.cols()));
  buf.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
}

}  // namespace

std::string corpus_checksum(const Corpus& corpus) {
  std::string buf;
  append_matrix(buf, corpus.dictionary.class_signals);
  append_matrix(buf, corpus.dictionary.cls_signals);
  for (const auto& s : corpus.samples) {
    append_matrix(buf, s.tokens);
    for (int v : {s.label, s.class_index, s.distractor_index, s.distractor_sign, s.pos_class, s.pos_signal,
                  s.pos_distractor}) {
      append_raw(buf, static_cast<std::int32_t>(v));
    }
  }
  return sha256_hex(buf);
}

std::string model_checksum(const ModelState& model) {
  std::string buf;
  append_matrix(buf, model.theta);
  for (const auto& e : model.experts) {
    append_matrix(buf, e.w);
    append_matrix(buf, e.w_kq);
  }
  return sha256_hex(buf);
}

// Matrices are stored row-major as nested arrays. nlohmann serializes doubles
// with round-trip precision.
json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j.at(r).size()) != cols) {
      throw std::invalid_argument("ragged matrix in json");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json to_json(const SignalDictionary& dict) {
  return {{"dim", dict.dim},
          {"num_classes", dict.num_classes},
          {"class_signals", to_json(dict.class_signals)},
          {"cls_signals", to_json(dict.cls_signals)}};
}

SignalDictionary dictionary_from_json(const json& j) {
  SignalDictionary d;
  d.dim = j.at("dim").get<int>();
  d.num_classes = j.at("num_classes").get<int>();
  d.class_signals = matrix_from_json(j.at("class_signals"));
  d.cls_signals = matrix_from_json(j.at("cls_signals"));
  return d;
}

json to_json(const Corpus& corpus) {
  json samples = json::array();
  for (const auto& s : corpus.samples) {
    samples.push_back({{"label", s.label},
                       {"class_index", s.class_index},
                       {"distractor_index", s.distractor_index},
                       {"distractor_sign", s.distractor_sign},
                       {"positions", {s.pos_class, s.pos_signal, s.pos_distractor}},
                       {"tokens", to_json(s.tokens)}});
  }
  return {{"format_version", kFormatVersion},
          {"dictionary", to_json(corpus.dictionary)},
          {"num_tokens", corpus.num_tokens},
          {"noise_std", corpus.noise_std},
          {"samples_per_type", corpus.samples_per_type},
          {"seed", corpus.seed},
          {"samples", std::move(samples)}};
}

Corpus corpus_from_json(const json& j) {
  Corpus c;
  c.dictionary = dictionary_from_json(j.at("dictionary"));
  c.num_tokens = j.at("num_tokens").get<int>();
  c.noise_std = j.at("noise_std").get<double>();
  c.samples_per_type = j.at("samples_per_type").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& js : j.at("samples")) {
    Sample s;
    s.label = js.at("label").get<int>();
    s.class_index = js.at("class_index").get<int>();
    s.distractor_index = js.at("distractor_index").get<int>();
    s.distractor_sign = js.at("distractor_sign").get<int>();
    const auto& pos = js.at("positions");
    s.pos_class = pos.at(0).get<int>();
    s.pos_signal = pos.at(1).get<int>();
    s.pos_distractor = pos.at(2).get<int>();
    s.noise_std = c.noise_std;
    s.tokens = matrix_from_json(js.at("tokens"));
    s.token_sum = s.tokens.rowwise().sum();
    c.samples.push_back(std::move(s));
  }
  return c;
}

json to_json(const ModelState& model) {
  json experts = json::array();
  for (const auto& e : model.experts) {
    experts.push_back({{"w", to_json(Eigen::MatrixXd(e.w))}, {"w_kq", to_json(e.w_kq)}});
  }
  return {{"epoch", model.epoch}, {"theta", to_json(model.theta)}, {"experts", std::move(experts)}};
}

ModelState model_from_json(const json& j) {
  ModelState m;
  m.epoch = j.at("epoch").get<int>();
  m.theta = matrix_from_json(j.at("theta"));
  for (const auto& je : j.at("experts")) {
    ExpertParams e;
    e.w = matrix_from_json(je.at("w")).col(0);
    e.w_kq = matrix_from_json(je.at("w_kq"));
    m.experts.push_back(std::move(e));
  }
  return m;
}

}  // namespace motlab::io
