#pragma once

// Internal JSON helpers: strict object reading plus ChannelModelSpec
// conversion shared by the dataset trailer and the experiment config.

#include "chest/channelgen.hpp"

#include <json.hpp>

#include <initializer_list>
#include <stdexcept>
#include <string>

namespace chest::detail {

using nlohmann::json;

/// Throws if `obj` is not an object or carries a key outside `allowed`.
void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where);

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
T get_required(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(where + ": missing key '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(where + ": bad value for '" + key + "': " + e.what());
  }
}

json spec_to_json_value(const ChannelModelSpec& spec);
ChannelModelSpec spec_from_json_value(const json& j, const std::string& where,
                                      std::initializer_list<const char*> extra_keys = {});

json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const json& j, const std::string& where);

}  // namespace chest::detail
