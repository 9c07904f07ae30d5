#include "acdnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_map>

namespace acdnet {

namespace {

constexpr char kMagic[8] = {'A', 'C', 'D', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void real(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void string(const std::string& s) {
    uint<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  void need(std::size_t n) const {
    if (pos_ + n > size_) throw CheckpointError("checkpoint truncated");
  }
  template <typename T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  double real() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string string() {
    const auto n = uint<std::uint64_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  void reals(std::span<double> out) {
    need(out.size() * 8);
    for (auto& v : out) v = real();
  }
  std::size_t position() const { return pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size, std::uint64_t hash) {
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= data[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.uint<std::uint32_t>(kVersion);
  w.string(ck.config_text);
  w.uint<std::uint64_t>(ck.params.size());
  for (const auto& p : ck.params) {
    w.string(p.name);
    const Shape s = p.tensor.shape();
    w.uint<std::uint64_t>(s.n);
    w.uint<std::uint64_t>(s.c);
    w.uint<std::uint64_t>(s.h);
    w.uint<std::uint64_t>(s.w);
    for (double v : p.tensor.data()) w.real(v);
  }
  w.uint<std::uint8_t>(ck.state ? 1 : 0);
  if (ck.state) {
    if (ck.state->adam.size() != ck.params.size())
      throw CheckpointError("optimizer state does not match parameter count");
    w.uint<std::uint64_t>(ck.state->epoch);
    w.uint<std::uint64_t>(ck.state->step);
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      const std::size_t n = ck.params[i].tensor.numel();
      const auto& st = ck.state->adam[i];
      for (std::size_t j = 0; j < n; ++j) w.real(st.m.empty() ? 0.0 : st.m[j]);
      for (std::size_t j = 0; j < n; ++j) w.real(st.v.empty() ? 0.0 : st.v[j]);
    }
  }
  auto& buf = w.buffer();
  w.uint<std::uint64_t>(fnv1a64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) + 12 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("'" + path.string() + "' is not a checkpoint");
  const std::size_t body = buf.size() - 8;
  Reader tail(buf.data() + body, 8);
  if (tail.uint<std::uint64_t>() != fnv1a64(buf.data(), body))
    throw CheckpointError("checkpoint checksum mismatch in '" + path.string() + "'");

  Reader r(buf.data() + sizeof(kMagic), body - sizeof(kMagic));
  if (r.uint<std::uint32_t>() != kVersion) throw CheckpointError("unsupported checkpoint version");
  Checkpoint ck;
  ck.config_text = r.string();
  const auto count = r.uint<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor p;
    p.name = r.string();
    Shape s;
    s.n = r.uint<std::uint64_t>();
    s.c = r.uint<std::uint64_t>();
    s.h = r.uint<std::uint64_t>();
    s.w = r.uint<std::uint64_t>();
    p.tensor = Tensor(s, true);
    r.reals(p.tensor.mutable_data());
    ck.params.push_back(std::move(p));
  }
  if (r.uint<std::uint8_t>() != 0) {
    TrainingState st;
    st.epoch = r.uint<std::uint64_t>();
    st.step = r.uint<std::uint64_t>();
    for (const auto& p : ck.params) {
      AdamState a;
      a.m.resize(p.tensor.numel());
      a.v.resize(p.tensor.numel());
      r.reals(a.m);
      r.reals(a.v);
      st.adam.push_back(std::move(a));
    }
    ck.state = std::move(st);
  }
  return ck;
}

void assign_parameters(const ParameterList& source, ParameterList& targets) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& p : source) by_name[p.name] = &p.tensor;
  for (auto& t : targets) {
    auto it = by_name.find(t.name);
    if (it == by_name.end()) throw CheckpointError("checkpoint lacks parameter '" + t.name + "'");
    if (!(it->second->shape() == t.tensor.shape()))
      throw CheckpointError("shape mismatch for '" + t.name + "': checkpoint " +
                            to_string(it->second->shape()) + ", model " +
                            to_string(t.tensor.shape()));
    auto src = it->second->data();
    std::copy(src.begin(), src.end(), t.tensor.mutable_data().begin());
  }
}

}  // namespace acdnet
