#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "hyperite/linalg.hpp"

namespace hyperite {

struct Tensor {
  std::string name;
  int rows = 0;
  int cols = 0;  // 1 for vectors / scalars
  Vec value;
  Vec grad;

  size_t size() const { return value.size(); }
};

// Named parameter tensors with stable iteration order and one gradient
// buffer per parameter. Each tensor is initialized from its own RNG stream
// keyed by (seed, name), so constructing or skipping one head never changes
// the initialization of another.
class ParamStore {
 public:
  Tensor& add_matrix(const std::string& name, int rows, int cols, uint64_t seed);
  Tensor& add_bias(const std::string& name, int rows);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  void zero_grads();
  double squared_l2() const;
  // adds 2 * weight * theta to every gradient buffer
  void accumulate_l2_grad(double weight);
  bool grads_finite(std::string* offender = nullptr) const;

 private:
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, size_t> index_;
};

void save_params(const ParamStore& params, const std::string& path, const std::string& config_json);
ParamStore load_params(const std::string& path, std::string* config_json);

}  // namespace hyperite
