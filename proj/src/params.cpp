#include "hyperite/params.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "hyperite/rng.hpp"

namespace hyperite {

Tensor& ParamStore::add_matrix(const std::string& name, int rows, int cols, uint64_t seed) {
  if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate tensor " + name);
  Tensor t;
  t.name = name;
  t.rows = rows;
  t.cols = cols;
  t.value.resize(static_cast<size_t>(rows) * cols);
  t.grad.assign(t.value.size(), 0.0);
  Rng rng(stream_seed(seed, name));
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : t.value) v = rng.uniform(-bound, bound);
  index_[name] = tensors_.size();
  tensors_.push_back(std::move(t));
  return tensors_.back();
}

Tensor& ParamStore::add_bias(const std::string& name, int rows) {
  if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate tensor " + name);
  Tensor t;
  t.name = name;
  t.rows = rows;
  t.cols = 1;
  t.value.assign(rows, 0.0);
  t.grad.assign(rows, 0.0);
  index_[name] = tensors_.size();
  tensors_.push_back(std::move(t));
  return tensors_.back();
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamStore: no tensor named " + name);
  return tensors_[it->second];
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamStore: no tensor named " + name);
  return tensors_[it->second];
}

void ParamStore::zero_grads() {
  for (Tensor& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

double ParamStore::squared_l2() const {
  double s = 0.0;
  for (const Tensor& t : tensors_)
    for (double v : t.value) s += v * v;
  return s;
}

void ParamStore::accumulate_l2_grad(double weight) {
  for (Tensor& t : tensors_)
    for (size_t i = 0; i < t.value.size(); ++i) t.grad[i] += 2.0 * weight * t.value[i];
}

bool ParamStore::grads_finite(std::string* offender) const {
  for (const Tensor& t : tensors_) {
    if (!all_finite(t.grad)) {
      if (offender) *offender = t.name;
      return false;
    }
  }
  return true;
}

namespace {

constexpr char kMagic[] = "HYPERITE_CKPT1\n";

void write_u64(std::ofstream& out, uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

uint64_t read_u64(std::ifstream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_params(const ParamStore& params, const std::string& path, const std::string& config_json) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic) - 1);
  write_u64(out, config_json.size());
  out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  write_u64(out, params.tensors().size());
  for (const Tensor& t : params.tensors()) {
    write_u64(out, t.name.size());
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_u64(out, static_cast<uint64_t>(t.rows));
    write_u64(out, static_cast<uint64_t>(t.cols));
    // doubles written as little-endian u64 bit patterns
    for (double v : t.value) {
      uint64_t bits;
      std::memcpy(&bits, &v, 8);
      write_u64(out, bits);
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

ParamStore load_params(const std::string& path, std::string* config_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(kMagic) - 1);
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic) - 1) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const uint64_t cfg_len = read_u64(in);
  std::string cfg(cfg_len, '\0');
  in.read(cfg.data(), static_cast<std::streamsize>(cfg_len));
  if (!in) throw std::runtime_error("checkpoint: truncated config in " + path);
  if (config_json) *config_json = cfg;

  ParamStore params;
  const uint64_t count = read_u64(in);
  for (uint64_t k = 0; k < count; ++k) {
    const uint64_t name_len = read_u64(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const auto rows = static_cast<int>(read_u64(in));
    const auto cols = static_cast<int>(read_u64(in));
    Tensor& t = params.add_bias(name, 1);  // placeholder, overwritten below
    t.rows = rows;
    t.cols = cols;
    t.value.resize(static_cast<size_t>(rows) * cols);
    t.grad.assign(t.value.size(), 0.0);
    for (double& v : t.value) {
      const uint64_t bits = read_u64(in);
      std::memcpy(&v, &bits, 8);
    }
  }
  return params;
}

}  // namespace hyperite
