#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "motlab/datagen.hpp"
#include "motlab/model.hpp"
#include "motlab/signal_space.hpp"
#include "motlab/trainer.hpp"

namespace motlab::io {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kTrajectoryHeader =
    "epoch,stage,expert_loss,router_loss,routed_counts,mean_margin,mean_pvv";

/// Shortest decimal form that parses back to the same double ("nan", "inf", "-inf" otherwise).
std::string format_double(double value);
/// Inverse of format_double. Throws std::invalid_argument on junk.
double parse_double(std::string_view text);

std::string trajectory_csv(const std::vector<TrainRecord>& records);
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrainRecord>& records);
/// Throws std::runtime_error naming the file on a missing file or malformed row.
std::vector<TrainRecord> read_trajectory_csv(const std::filesystem::path& path);

/// Writes `contents` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view contents);
std::string read_text(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);
/// Hash of the exact binary contents (tokens, labels, positions) of a corpus.
std::string corpus_checksum(const Corpus& corpus);
std::string model_checksum(const ModelState& model);

nlohmann::json to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SignalDictionary& dict);
SignalDictionary dictionary_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Corpus& corpus);
Corpus corpus_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelState& model);
ModelState model_from_json(const nlohmann::json& j);

}  // namespace motlab::io
