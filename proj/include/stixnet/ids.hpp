#pragma once

#include <boost/uuid/name_generator_sha1.hpp>
#include <boost/uuid/random_generator.hpp>
#include <boost/uuid/string_generator.hpp>
#include <boost/uuid/uuid.hpp>
#include <boost/uuid/uuid_io.hpp>
#include <chrono>
#include <ctime>
#include <random>
#include <string>
#include <string_view>

namespace stixnet::ids {

/// Namespace used by STIX 2.1 for deterministic identifiers.
inline const boost::uuids::uuid& stix_namespace() {
  static const boost::uuids::uuid ns = boost::uuids::string_generator()("00abedb4-aa42-466c-9c01-fed23315a9b7");
  return ns;
}

inline std::string uuid5(std::string_view name) {
  boost::uuids::name_generator_sha1 gen(stix_namespace());
  return boost::uuids::to_string(gen(name.data(), name.size()));
}

/// Version-4 UUID drawn from a caller-owned engine (seedable for tests).
inline std::string uuid4(std::mt19937_64& engine) {
  boost::uuids::basic_random_generator<std::mt19937_64> gen(&engine);
  return boost::uuids::to_string(gen());
}

inline std::string uuid4() {
  static thread_local std::mt19937_64 engine{std::random_device{}()};
  return uuid4(engine);
}

/// UTC timestamp in the STIX form "2024-01-31T12:00:00.000Z".
inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

}  // namespace stixnet::ids
