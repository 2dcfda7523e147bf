#include "dergcn/params.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dergcn/errors.hpp"

namespace dergcn {

Tensor ParamStore::create(const std::string& name,
                          std::vector<std::size_t> shape, std::size_t fan_in,
                          Rng& rng) {
  if (fan_in == 0) throw ConfigInvalid("fan_in must be positive");
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  std::vector<double> data(n);
  for (double& v : data) v = rng.uniform(-bound, bound);
  Tensor t = Tensor::from_data(std::move(data), std::move(shape), true);
  add(name, t);
  return t;
}

Tensor ParamStore::create_zeros(const std::string& name,
                                std::vector<std::size_t> shape) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  add(name, t);
  return t;
}

void ParamStore::add(const std::string& name, Tensor t) {
  if (!t.is_leaf() || !t.requires_grad()) {
    throw ConfigInvalid("parameters must be requires_grad leaves: " + name);
  }
  if (params_.count(name)) throw ConfigInvalid("duplicate parameter: " + name);
  params_.emplace(name, std::move(t));
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigInvalid("unknown parameter: " + name);
  return it->second;
}

std::size_t ParamStore::total_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : params_) {
    Tensor copy = t;
    copy.zero_grad();
  }
}

namespace {

constexpr char kMagic[8] = {'D', 'E', 'R', 'G', 'C', 'N', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& manifest_json) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 8);
  put_u32(os, kFormatVersion);
  put_u64(os, manifest_json.size());
  os.write(manifest_json.data(),
           static_cast<std::streamsize>(manifest_json.size()));
  put_u64(os, store.size());
  for (const auto& [name, t] : store.items()) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) put_u64(os, e);
    for (double v : t.data()) put_f64(os, v);
  }
  if (!os) throw IoError("checkpoint write failed: " + path);
}

std::string load_checkpoint(const std::string& path, ParamStore& store) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("not a checkpoint file: " + path);
  }
  std::uint32_t version = get_u32(is);
  if (version != kFormatVersion) {
    throw IoError("unsupported checkpoint version");
  }
  std::uint64_t mlen = get_u64(is);
  std::string manifest(mlen, '\0');
  is.read(manifest.data(), static_cast<std::streamsize>(mlen));
  std::uint64_t count = get_u64(is);
  store = ParamStore();
  for (std::uint64_t p = 0; p < count; ++p) {
    std::uint32_t nlen = get_u32(is);
    std::string name(nlen, '\0');
    is.read(name.data(), nlen);
    std::uint32_t rank = get_u32(is);
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<std::size_t>(get_u64(is));
      numel *= shape[d];
    }
    std::vector<double> data(numel);
    for (std::size_t i = 0; i < numel; ++i) data[i] = get_f64(is);
    if (!is) throw IoError("truncated checkpoint: " + path);
    store.add(name, Tensor::from_data(std::move(data), std::move(shape), true));
  }
  return manifest;
}

}  // namespace dergcn
