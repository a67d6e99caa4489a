#pragma once

// Field access on parsed JSON with dotted error paths and source line lookup.

#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsdej/config.hpp"

namespace bsdej::detail {

/// 1-based line of the field at `keys` in the source, found by locating each
/// quoted key in turn after the previous one. 0 when the source is empty.
int locate_line(const std::string& source, const std::vector<std::string>& keys);

class Reader {
 public:
  Reader(const nlohmann::json& node, std::vector<std::string> keys, const std::string& source)
      : node_(node), keys_(std::move(keys)), source_(source) {}

  const nlohmann::json& node() const noexcept { return node_; }
  std::string path() const;
  std::string path(const std::string& key) const;

  [[noreturn]] void fail(const std::string& key, const std::string& message) const;
  [[noreturn]] void fail_here(const std::string& message) const;

  void require_object() const;
  void allow_only(std::initializer_list<const char*> keys) const;
  bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::optional<double> optional_number(const std::string& key) const;
  long long integer(const std::string& key) const;
  long long integer(const std::string& key, long long fallback) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;

  Reader child(const std::string& key) const;
  /// Child object, or an empty object when absent.
  Reader child_or_empty(const std::string& key) const;
  Reader element(std::size_t index) const;

 private:
  const nlohmann::json& at(const std::string& key) const;

  const nlohmann::json& node_;
  std::vector<std::string> keys_;
  const std::string& source_;
};

}  // namespace bsdej::detail
