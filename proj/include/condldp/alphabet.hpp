#pragma once

#include <string>
#include <vector>

#include "condldp/errors.hpp"

namespace condldp {

// A finite symbol set with a fixed iteration order. All simplices, matrices
// and enumeration orders in the library are anchored to this order, which is
// what makes report output reproducible byte for byte.
class Alphabet {
 public:
  explicit Alphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw argument_error("Alphabet: needs at least one label");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      for (std::size_t j = i + 1; j < labels_.size(); ++j)
        if (labels_[i] == labels_[j])
          throw argument_error("Alphabet: duplicate label '" + labels_[i] + "'");
  }

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == label) return i;
    throw argument_error("Alphabet: unknown label '" + label + "'");
  }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.labels_ == b.labels_; }
  friend bool operator!=(const Alphabet& a, const Alphabet& b) { return !(a == b); }

  // Convenience for tests and defaults: "r1", "r2", ... rk.
  static Alphabet numbered(const std::string& prefix, std::size_t k) {
    std::vector<std::string> labels;
    labels.reserve(k);
    for (std::size_t i = 1; i <= k; ++i) labels.push_back(prefix + std::to_string(i));
    return Alphabet(std::move(labels));
  }

 private:
  std::vector<std::string> labels_;
};

}  // namespace condldp
