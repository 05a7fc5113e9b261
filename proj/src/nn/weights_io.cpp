#include "tracked/nn/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace tracked::nn {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
  out.write(b, 8);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v(i));
}

void read_exact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw std::runtime_error("weights: truncated file");
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(v);
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > 4096) throw std::runtime_error("weights: implausible string length");
  std::string s(n, '\0');
  read_exact(in, s.data(), n);
  return s;
}

Eigen::VectorXd get_vector(std::istream& in, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = get_f64(in);
  return v;
}

}  // namespace

void write_weights(std::ostream& out, const ModelBundle& bundle) {
  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  put_u32(out, kWeightsFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(bundle.models.size()));
  for (const auto& [tag, model] : bundle.models) {
    const ModelConfig& c = model.config;
    put_string(out, tag);
    for (int d : {c.input_dim, c.hidden_dim, c.window_len, c.output_dim, c.attention_dim}) {
      put_u32(out, static_cast<std::uint32_t>(d));
    }
    put_vector(out, model.norm.in_min);
    put_vector(out, model.norm.in_max);
    put_vector(out, model.norm.out_min);
    put_vector(out, model.norm.out_max);
    const auto tensors = model.params.tensors();
    const auto& names = ModelParams::tensor_names();
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const Matrix& t = *tensors[k];
      put_string(out, names[k]);
      put_u32(out, static_cast<std::uint32_t>(t.rows()));
      put_u32(out, static_cast<std::uint32_t>(t.cols()));
      for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) put_f64(out, t(i, j));
      }
    }
  }
  if (!out) throw std::runtime_error("weights: write failed");
}

ModelBundle read_weights(std::istream& in) {
  char magic[sizeof(kWeightsMagic)];
  read_exact(in, magic, sizeof(magic));
  if (std::memcmp(magic, kWeightsMagic, sizeof(magic)) != 0) throw std::runtime_error("weights: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kWeightsFormatVersion) {
    throw std::runtime_error("weights: unsupported format_version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(in);
  if (count == 0 || count > 16) throw std::runtime_error("weights: implausible model count");

  ModelBundle bundle;
  for (std::uint32_t m = 0; m < count; ++m) {
    Model model;
    const std::string tag = get_string(in);
    ModelConfig& c = model.config;
    c.input_dim = static_cast<int>(get_u32(in));
    c.hidden_dim = static_cast<int>(get_u32(in));
    c.window_len = static_cast<int>(get_u32(in));
    c.output_dim = static_cast<int>(get_u32(in));
    c.attention_dim = static_cast<int>(get_u32(in));
    if (c.hidden_dim > 4096 || c.window_len > 4096 || c.attention_dim > 4096) {
      throw std::runtime_error("weights: implausible dimensions");
    }
    c.validate();
    model.norm.in_min = get_vector(in, c.input_dim);
    model.norm.in_max = get_vector(in, c.input_dim);
    model.norm.out_min = get_vector(in, c.output_dim);
    model.norm.out_max = get_vector(in, c.output_dim);
    model.norm.validate();

    model.params = ModelParams::zeros(c);
    auto tensors = model.params.tensors();
    const auto& names = ModelParams::tensor_names();
    if (get_u32(in) != tensors.size()) throw std::runtime_error("weights: tensor count mismatch");
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      Matrix& t = *tensors[k];
      const std::string name = get_string(in);
      const std::uint32_t rows = get_u32(in);
      const std::uint32_t cols = get_u32(in);
      if (name != names[k] || rows != t.rows() || cols != t.cols()) {
        throw std::runtime_error("weights: unexpected tensor '" + name + "'");
      }
      for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = get_f64(in);
      }
    }
    if (!model.params.all_finite()) throw std::runtime_error("weights: non-finite parameter");
    bundle.models.emplace_back(tag, std::move(model));
  }
  return bundle;
}

void save_weights(const std::string& path, const ModelBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("weights: cannot open '" + path + "' for writing");
  write_weights(out, bundle);
}

ModelBundle load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("weights: cannot open '" + path + "'");
  return read_weights(in);
}

}  // namespace tracked::nn
