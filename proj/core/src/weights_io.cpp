#include "chest/weights_io.hpp"

#include "binary_io.hpp"
#include "json_util.hpp"

#include <fstream>
#include <stdexcept>

namespace chest {

using detail::json;

void write_weights(const WeightsFile& weights, const std::filesystem::path& path) {
  if (!weights.network) throw std::invalid_argument("write_weights: no network");
  const DenoiserNetwork& net = *weights.network;
  const DenoiserConfig& cfg = net.config();
  json layers = json::array();
  for (const auto& block : net.layout()) layers.push_back({{"name", block.name}, {"shape", block.shape}});
  const json header = {
      {"nr", cfg.nr},
      {"nt", cfg.nt},
      {"time_dim", cfg.time_dim},
      {"widths", cfg.widths},
      {"layers", layers},
      {"schedule",
       {{"steps", weights.schedule.steps},
        {"beta_start", weights.schedule.beta_start},
        {"beta_end", weights.schedule.beta_end}}},
      {"expert_id", weights.expert_id},
      {"seed", weights.seed},
  };
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write("DMWT", 4);
  detail::put<std::uint32_t>(out, kWeightsVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double w : net.parameters()) detail::put<double>(out, w);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

WeightsFile read_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weights file '" + path.string() + "'");
  detail::expect_magic(in, "DMWT");
  const auto version = detail::get<std::uint32_t>(in, "version");
  if (version != kWeightsVersion) {
    throw std::runtime_error("unsupported weights version " + std::to_string(version));
  }
  const auto length = detail::get<std::uint32_t>(in, "header length");
  std::string text(length, '\0');
  if (!in.read(text.data(), length)) throw std::runtime_error("truncated weights header");

  const std::string where = "weights header";
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(where + ": " + e.what());
  }
  detail::require_keys(header, {"nr", "nt", "time_dim", "widths", "layers", "schedule", "expert_id", "seed"},
                       where);
  DenoiserConfig cfg;
  cfg.nr = detail::get_required<int>(header, "nr", where);
  cfg.nt = detail::get_required<int>(header, "nt", where);
  cfg.time_dim = detail::get_required<int>(header, "time_dim", where);
  cfg.widths = detail::get_required<std::array<int, 4>>(header, "widths", where);

  WeightsFile result;
  result.network = std::make_shared<DenoiserNetwork>(cfg);
  const auto& layout = result.network->layout();
  const json& layers = header.at("layers");
  if (!layers.is_array() || layers.size() != layout.size()) {
    throw std::runtime_error(where + ": layer list does not match the architecture");
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layers[i].value("name", "") != layout[i].name ||
        layers[i].value("shape", std::vector<int>{}) != layout[i].shape) {
      throw std::runtime_error(where + ": layer " + std::to_string(i) + " does not match '" +
                               layout[i].name + "'");
    }
  }
  const json& sched = header.at("schedule");
  detail::require_keys(sched, {"steps", "beta_start", "beta_end"}, where + ".schedule");
  result.schedule.steps = detail::get_required<int>(sched, "steps", where);
  result.schedule.beta_start = detail::get_required<double>(sched, "beta_start", where);
  result.schedule.beta_end = detail::get_required<double>(sched, "beta_end", where);
  result.expert_id = detail::get_required<std::string>(header, "expert_id", where);
  result.seed = detail::get_required<std::uint64_t>(header, "seed", where);

  for (double& w : result.network->parameters()) w = detail::get<double>(in, "weights");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("trailing bytes after weights in '" + path.string() + "'");
  }
  return result;
}

}  // namespace chest
