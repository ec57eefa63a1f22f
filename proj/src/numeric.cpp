// Copyright 2026 The BAED Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "baed/numeric.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace baed {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid_argument";
    case ErrorCode::kShapeMismatch:
      return "shape_mismatch";
    case ErrorCode::kParse:
      return "parse_error";
    case ErrorCode::kIo:
      return "io_error";
    case ErrorCode::kNumeric:
      return "numeric_error";
    case ErrorCode::kState:
      return "state_error";
  }
  return "unknown";
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

namespace {

std::uint64_t stream_key(std::uint64_t base, std::string_view label,
                         std::uint64_t counter) {
  std::uint64_t k = splitmix64(base);
  k = splitmix64(k ^ fnv1a64(label));
  return splitmix64(k ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::string_view label, std::uint64_t counter) {
  reseed(stream_key(seed, label, counter));
}

Rng Rng::stream(std::string_view label, std::uint64_t counter) const {
  Rng child(0);
  child.reseed(stream_key(key_, label, counter));
  return child;
}

void Rng::reseed(std::uint64_t key) {
  key_ = key;
  std::uint64_t x = key;
  for (auto& s : s_) {
    x += 0x9e3779b97f4a7c15ULL;
    s = splitmix64(x);
  }
  has_spare_ = false;
}

// xoshiro256**
std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "uniform_index(0)");
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

Matrix sample_bernoulli_matrix(Rng& rng, const Matrix& probs, bool symmetric) {
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs.data()[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bernoulli probability outside [0,1]: " + std::to_string(p));
    }
  }
  Matrix out = Matrix::Zero(probs.rows(), probs.cols());
  if (!symmetric) {
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
      for (Eigen::Index j = 0; j < probs.cols(); ++j)
        out(i, j) = rng.bernoulli(probs(i, j)) ? 1.0 : 0.0;
    return out;
  }
  if (probs.rows() != probs.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "symmetric sampling needs square");
  }
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (probs(i, i) != 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "symmetric sampling needs a zero diagonal");
    }
    for (Eigen::Index j = i + 1; j < probs.cols(); ++j) {
      if (probs(i, j) != probs(j, i)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "symmetric sampling needs symmetric probabilities");
      }
      const double bit = rng.bernoulli(probs(i, j)) ? 1.0 : 0.0;
      out(i, j) = bit;
      out(j, i) = bit;
    }
  }
  return out;
}

Matrix sample_gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                              double mean, double stddev) {
  if (!(stddev >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "negative standard deviation");
  }
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = mean + stddev * rng.normal();
  }
  return out;
}

Parameter& ParamStore::add(const std::string& name, Matrix init) {
  if (contains(name)) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  }
  Parameter p;
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown parameter " + name);
  }
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown parameter " + name);
  }
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.setZero();
}

std::size_t ParamStore::coefficient_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void adam_step(ParamStore& params, AdamState& state, double lr) {
  for (auto& [name, p] : params) {
    if (!p.grad.allFinite()) {
      throw Error(ErrorCode::kNumeric, "non-finite gradient in " + name);
    }
  }
  state.step += 1;
  const auto& c = state.constants;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (auto& [name, p] : params) {
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() == 0) {
      m = Matrix::Zero(p.value.rows(), p.value.cols());
      v = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
    v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (m.array() / bc1) /
                       ((v.array() / bc2).sqrt() + c.eps);
    p.grad.setZero();
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::string encode_le(const Matrix& m) {
  std::string out(static_cast<std::size_t>(m.size()) * 8, '\0');
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, m.data() + i, 8);
    for (int b = 0; b < 8; ++b) {
      out[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] =
          static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
  return out;
}

Matrix decode_le(std::string_view bytes, Eigen::Index rows, Eigen::Index cols) {
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * 8) {
    throw Error(ErrorCode::kParse, "checkpoint blob size mismatch");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(
                  bytes[static_cast<std::size_t>(i) * 8 +
                        static_cast<std::size_t>(b)]))
              << (8 * b);
    }
    std::memcpy(m.data() + i, &bits, 8);
  }
  return m;
}

}  // namespace

void save_checkpoint(const ParamStore& params,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "baed-checkpoint-v1";
  manifest["params"] = nlohmann::json::array();
  std::size_t index = 0;
  for (const auto& [name, p] : params) {
    const std::string file = "param_" + std::to_string(index++) + ".bin";
    const std::string blob = encode_le(p.value);
    write_file_atomic(dir / file, blob);
    manifest["params"].push_back({{"name", name},
                                  {"rows", p.value.rows()},
                                  {"cols", p.value.cols()},
                                  {"file", file},
                                  {"checksum", hex64(fnv1a64(blob))}});
  }
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

ParamStore load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse,
                "bad checkpoint manifest in " + dir.string() + ": " + e.what());
  }
  ParamStore store;
  for (const auto& entry : manifest.at("params")) {
    const std::string blob =
        read_file(dir / entry.at("file").get<std::string>());
    if (hex64(fnv1a64(blob)) != entry.at("checksum").get<std::string>()) {
      throw Error(ErrorCode::kParse, "checksum mismatch for parameter " +
                                         entry.at("name").get<std::string>());
    }
    store.add(entry.at("name").get<std::string>(),
              decode_le(blob, entry.at("rows").get<Eigen::Index>(),
                        entry.at("cols").get<Eigen::Index>()));
  }
  return store;
}

Matrix glorot(Rng& rng, Eigen::Index fan_in, Eigen::Index fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
  }
  return w;
}

}  // namespace baed
