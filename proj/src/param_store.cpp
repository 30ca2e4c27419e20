#include "daef/param_store.hpp"

#include <stdexcept>

namespace daef {

Tensor ParamStore::add(const std::string& name, Tensor t) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  t.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParamStore::truncated_normal(const std::string& name, Shape shape, Rng& rng, double std) {
  const std::size_t n = shape_numel(shape);
  std::vector<double> values(n);
  for (double& v : values) v = rng.truncated_normal(std);
  return add(name, Tensor::from(std::move(shape), std::move(values)));
}

Tensor ParamStore::zeros(const std::string& name, Shape shape) {
  return add(name, Tensor::zeros(std::move(shape)));
}

Tensor ParamStore::ones(const std::string& name, Shape shape) {
  return add(name, Tensor::full(std::move(shape), 1.0));
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return entries_[it->second].second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : entries_) t.clear_grad();
}

}  // namespace daef
