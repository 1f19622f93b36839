#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "stgcast/nn.hpp"
#include "stgcast/train.hpp"

namespace stgcast {

/// A trained forecaster plus everything needed to run it on raw data.
struct Checkpoint {
  std::unique_ptr<nn::SequenceModel> model;
  train::NormStats stats;
  std::vector<std::string> detector_ids;
  std::size_t k_hops = 1;
  std::uint64_t seed = 0;
};

/// Line-oriented text, first line "STGCAST-CKPT-1". Values are written in
/// shortest round-trip form so save/load is exact and the bytes depend only
/// on the parameters.
std::string format_checkpoint(const nn::SequenceModel& model, const train::NormStats& stats,
                              const std::vector<std::string>& detector_ids, std::size_t k_hops, std::uint64_t seed);

Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const nn::SequenceModel& model, const train::NormStats& stats,
                     const std::vector<std::string>& detector_ids, std::size_t k_hops, std::uint64_t seed);

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws ShapeError naming both sides when the checkpoint's detectors differ
/// from the data's.
void check_compatible(const Checkpoint& ckpt, const std::vector<std::string>& data_ids);

}  // namespace stgcast
