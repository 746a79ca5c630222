#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace josc {

/// Configuration parsing or validation failure; key() names the offending entry.
class config_error : public std::runtime_error {
 public:
  config_error(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Model evaluated outside its domain (zero rate, utility argument, malformed x row).
class model_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A selection admits no resource assignment satisfying every constraint.
/// vehicle_id() is 1-based; 0 when the failure is not tied to one vehicle.
class infeasible_error : public std::runtime_error {
 public:
  infeasible_error(int vehicle_id, const std::string& what)
      : std::runtime_error(what), vehicle_id_(vehicle_id) {}
  int vehicle_id() const { return vehicle_id_; }

 private:
  int vehicle_id_;
};

/// Request exceeds a hard instance limit (exhaustive-search guard).
class refusal_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace josc
