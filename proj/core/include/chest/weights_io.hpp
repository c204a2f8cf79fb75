#pragma once

#include "chest/denoiser.hpp"
#include "chest/diffusion.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace chest {

/// Weight container:
///   "DMWT" | u32 version=1 | u32 header length | UTF-8 JSON header |
///   parameter_count little-endian f64 values in layout order.
/// The header carries dims, S_init, widths, the layer shapes, the linear
/// schedule (steps, beta endpoints), the expert id and the training seed.
inline constexpr std::uint32_t kWeightsVersion = 1;

struct ScheduleSpec {
  int steps = kDefaultSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;

  [[nodiscard]] NoiseSchedule build() const { return linear_schedule(steps, beta_start, beta_end); }
};

struct WeightsFile {
  std::shared_ptr<DenoiserNetwork> network;
  ScheduleSpec schedule;
  std::string expert_id;
  std::uint64_t seed = 0;
};

void write_weights(const WeightsFile& weights, const std::filesystem::path& path);
WeightsFile read_weights(const std::filesystem::path& path);

}  // namespace chest
