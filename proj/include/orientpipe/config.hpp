#pragma once

// Strict JSON configuration reading: every key must be known, every value
// must have the expected type.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "orientpipe/error.hpp"

namespace orientpipe::config {

using Json = nlohmann::json;

inline Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::Parse, path.string() + ": " + e.what());
  }
}

class Reader {
 public:
  explicit Reader(const Json& j, std::string context = "config") : json_(j), context_(std::move(context)) {
    if (!json_.is_object()) throw Error(Errc::InvalidConfig, context_ + " must be a JSON object");
  }

  template <class T>
  T get(std::string_view key, T fallback) {
    known_.emplace(key);
    const auto it = json_.find(std::string(key));
    if (it == json_.end() || it->is_null()) return fallback;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw Error(Errc::InvalidConfig, "");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) throw Error(Errc::InvalidConfig, "");
        if constexpr (std::is_integral_v<T>) {
          if (!it->is_number_integer()) throw Error(Errc::InvalidConfig, "");
          if constexpr (std::is_unsigned_v<T>) {
            if (it->is_number_integer() && it->template get<long long>() < 0) throw Error(Errc::InvalidConfig, "");
          }
        }
      }
      return it->template get<T>();
    } catch (const std::exception&) {
      throw Error(Errc::InvalidConfig, context_ + ": key '" + std::string(key) + "' has the wrong type");
    }
  }

  /// Rejects any key that was never requested.
  void finish() const {
    for (const auto& [key, _] : json_.items()) {
      if (!known_.contains(key)) throw Error(Errc::InvalidConfig, context_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const Json& json_;
  std::string context_;
  std::set<std::string, std::less<>> known_;
};

/// 64-bit FNV-1a, used for stable content hashes in manifests.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

}  // namespace orientpipe::config
