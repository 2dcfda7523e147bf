#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dergcn/rng.hpp"
#include "dergcn/tensor.hpp"

namespace dergcn {

// Named registry of trainable leaf tensors. Iteration order is the sorted
// name order, which fixes optimizer update order and checkpoint layout.
class ParamStore {
 public:
  // uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
  Tensor create(const std::string& name, std::vector<std::size_t> shape,
                std::size_t fan_in, Rng& rng);
  Tensor create_zeros(const std::string& name, std::vector<std::size_t> shape);
  void add(const std::string& name, Tensor t);

  bool has(const std::string& name) const { return params_.count(name) > 0; }
  Tensor get(const std::string& name) const;

  const std::map<std::string, Tensor>& items() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t total_scalars() const;
  void zero_grads();

 private:
  std::map<std::string, Tensor> params_;
};

// Versioned binary checkpoint: magic, format version, JSON manifest,
// then named parameter blobs as little-endian 64-bit floats.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& manifest_json);
// returns the manifest; parameters are loaded into `store` (created fresh)
std::string load_checkpoint(const std::string& path, ParamStore& store);

}  // namespace dergcn
