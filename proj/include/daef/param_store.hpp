#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "daef/rng.hpp"
#include "daef/tensor.hpp"

namespace daef {

// Named learnable tensors in insertion order. Tensors are shared handles, so
// layers holding a parameter see optimizer updates made through the store.
class ParamStore {
 public:
  using Entry = std::pair<std::string, Tensor>;

  // Registers `t` as a requires_grad leaf. Throws std::invalid_argument on a duplicate name.
  Tensor add(const std::string& name, Tensor t);

  Tensor truncated_normal(const std::string& name, Shape shape, Rng& rng, double std = 0.02);
  Tensor zeros(const std::string& name, Shape shape);
  Tensor ones(const std::string& name, Shape shape);

  bool contains(const std::string& name) const { return index_.contains(name); }
  const Tensor& get(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  // Total scalar learnables.
  std::size_t scalar_count() const;

  void zero_grad();

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace daef
