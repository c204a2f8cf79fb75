#include "chest/dataset_io.hpp"

#include "binary_io.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace chest {

namespace detail {

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
  }
}

json matrix_to_json(const ComplexMatrix& m) {
  json re = json::array();
  json im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json rr = json::array();
    json ii = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rr.push_back(m(i, j).real());
      ii.push_back(m(i, j).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  return json{{"re", re}, {"im", im}};
}

ComplexMatrix matrix_from_json(const json& j, const std::string& where) {
  require_keys(j, {"re", "im"}, where);
  const auto re = get_required<std::vector<std::vector<double>>>(j, "re", where);
  std::vector<std::vector<double>> im;
  if (j.contains("im")) im = j.at("im").get<std::vector<std::vector<double>>>();
  if (re.empty() || re.front().empty()) throw std::invalid_argument(where + ": empty matrix");
  ComplexMatrix m(re.size(), re.front().size());
  for (std::size_t r = 0; r < re.size(); ++r) {
    if (re[r].size() != re.front().size()) throw std::invalid_argument(where + ": ragged rows");
    for (std::size_t c = 0; c < re[r].size(); ++c) {
      double imag = 0.0;
      if (!im.empty()) {
        if (im.size() != re.size() || im[r].size() != re[r].size()) {
          throw std::invalid_argument(where + ": re/im shape mismatch");
        }
        imag = im[r][c];
      }
      m(r, c) = Complex(re[r][c], imag);
    }
  }
  return m;
}

json spec_to_json_value(const ChannelModelSpec& spec) {
  json j{{"kind", std::string(to_string(spec.kind))}, {"nr", spec.nr}, {"nt", spec.nt}};
  switch (spec.kind) {
    case ChannelKind::CorrelatedGaussian:
      j["correlation"] = spec.correlation;
      break;
    case ChannelKind::ClusteredMultipath:
      j["clusters"] = spec.clusters;
      j["rays_per_cluster"] = spec.rays_per_cluster;
      j["angle_spread"] = spec.angle_spread;
      j["los_factor"] = spec.los_factor;
      break;
    case ChannelKind::SparseAngular:
      j["active_taps"] = spec.active_taps;
      break;
    case ChannelKind::AnalyticGaussian:
      j["covariance"] = matrix_to_json(spec.covariance);
      break;
  }
  return j;
}

ChannelModelSpec spec_from_json_value(const json& j, const std::string& where,
                                      std::initializer_list<const char*> extra_keys) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  ChannelModelSpec spec;
  spec.kind = parse_channel_kind(get_required<std::string>(j, "kind", where));
  std::vector<const char*> allowed{"kind", "nr", "nt"};
  switch (spec.kind) {
    case ChannelKind::CorrelatedGaussian:
      allowed.push_back("correlation");
      break;
    case ChannelKind::ClusteredMultipath:
      allowed.insert(allowed.end(), {"clusters", "rays_per_cluster", "angle_spread", "los_factor"});
      break;
    case ChannelKind::SparseAngular:
      allowed.push_back("active_taps");
      break;
    case ChannelKind::AnalyticGaussian:
      allowed.push_back("covariance");
      break;
  }
  allowed.insert(allowed.end(), extra_keys.begin(), extra_keys.end());
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
  }
  spec.nr = get_or(j, "nr", spec.nr);
  spec.nt = get_or(j, "nt", spec.nt);
  spec.correlation = get_or(j, "correlation", spec.correlation);
  spec.clusters = get_or(j, "clusters", spec.clusters);
  spec.rays_per_cluster = get_or(j, "rays_per_cluster", spec.rays_per_cluster);
  spec.angle_spread = get_or(j, "angle_spread", spec.angle_spread);
  spec.los_factor = get_or(j, "los_factor", spec.los_factor);
  spec.active_taps = get_or(j, "active_taps", spec.active_taps);
  if (spec.kind == ChannelKind::AnalyticGaussian) {
    if (!j.contains("covariance")) {
      throw std::invalid_argument(where + ": analytic-gaussian requires 'covariance'");
    }
    spec.covariance = matrix_from_json(j.at("covariance"), where + ".covariance");
  }
  return spec;
}

}  // namespace detail

std::string spec_to_json(const ChannelModelSpec& spec) {
  return detail::spec_to_json_value(spec).dump();
}

ChannelModelSpec spec_from_json(const std::string& text) {
  return detail::spec_from_json_value(detail::json::parse(text), "channel spec");
}

void write_dataset(const Dataset& data, const std::filesystem::path& path, SampleType type) {
  if (data.samples.empty()) throw std::invalid_argument("write_dataset: empty dataset");
  const auto nr = data.samples.front().rows();
  const auto nt = data.samples.front().cols();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write("CHDS", 4);
  detail::put<std::uint32_t>(out, kDatasetVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(nr));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(nt));
  detail::put<std::uint64_t>(out, data.samples.size());
  detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(type));
  for (const auto& s : data.samples) {
    if (s.rows() != nr || s.cols() != nt) {
      throw std::invalid_argument("write_dataset: samples have inconsistent shapes");
    }
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const Complex z = s.data()[i];
      if (type == SampleType::F64) {
        detail::put<double>(out, z.real());
        detail::put<double>(out, z.imag());
      } else {
        detail::put<float>(out, static_cast<float>(z.real()));
        detail::put<float>(out, static_cast<float>(z.imag()));
      }
    }
  }
  const detail::json trailer{{"spec", detail::spec_to_json_value(data.spec)}, {"seed", data.seed}};
  const std::string text = trailer.dump();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  detail::expect_magic(in, "CHDS");
  const auto version = detail::get<std::uint32_t>(in, "version");
  if (version != kDatasetVersion) {
    throw std::runtime_error("unsupported dataset version " + std::to_string(version));
  }
  const auto nr = detail::get<std::uint32_t>(in, "nr");
  const auto nt = detail::get<std::uint32_t>(in, "nt");
  const auto count = detail::get<std::uint64_t>(in, "count");
  const auto dtype = detail::get<std::uint8_t>(in, "dtype");
  if (dtype > 1) throw std::runtime_error("unknown dataset dtype " + std::to_string(dtype));
  if (nr == 0 || nt == 0 || count == 0) throw std::runtime_error("dataset header has zero extent");

  Dataset data;
  data.samples.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    ComplexMatrix s(nr, nt);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      double re = 0.0;
      double im = 0.0;
      if (dtype == 1) {
        re = detail::get<double>(in, "sample");
        im = detail::get<double>(in, "sample");
      } else {
        re = detail::get<float>(in, "sample");
        im = detail::get<float>(in, "sample");
      }
      s.data()[i] = Complex(re, im);
    }
    data.samples.push_back(std::move(s));
  }
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  detail::json trailer;
  try {
    trailer = detail::json::parse(text);
  } catch (const detail::json::exception& e) {
    throw std::runtime_error("dataset trailer is not valid JSON: " + std::string(e.what()));
  }
  detail::require_keys(trailer, {"spec", "seed"}, "dataset trailer");
  data.spec = detail::spec_from_json_value(trailer.at("spec"), "dataset trailer spec");
  data.seed = trailer.at("seed").get<std::uint64_t>();
  if (data.spec.nr != static_cast<int>(nr) || data.spec.nt != static_cast<int>(nt)) {
    throw std::runtime_error("dataset trailer dims disagree with header");
  }
  return data;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return fnv1a64(bytes);
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace chest
