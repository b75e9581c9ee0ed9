#include "motion/grad/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

namespace motion::grad {

namespace {

constexpr char kMagic[4] = {'M', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw CheckpointError("checkpoint: truncated file");
    }
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint64_t u64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw CheckpointError("checkpoint: unreasonable string length");
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const std::map<std::string, std::string>& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open '" + path + "' for writing");

  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, store.seed());
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {  // std::map iterates sorted
    put_str(out, k);
    put_str(out, v);
  }
  put_u64(out, store.step());
  put_u32(out, static_cast<std::uint32_t>(store.names().size()));

  for (const auto& name : store.names()) {
    const Tensor& value = store.get(name);
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(value.rank()));
    for (std::size_t d : value.shape()) put_u64(out, d);
    for (std::size_t i = 0; i < value.numel(); ++i) put_f64(out, value[i]);
    const Tensor& m1 = store.moment1(name);
    const Tensor& m2 = store.moment2(name);
    for (std::size_t i = 0; i < m1.numel(); ++i) put_f64(out, m1[i]);
    for (std::size_t i = 0; i < m2.numel(); ++i) put_f64(out, m2[i]);
  }
  out.flush();
  if (!out) throw CheckpointError("checkpoint: write to '" + path + "' failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open '" + path + "'");
  Reader r(in);

  char magic[4];
  r.bytes(magic, 4);
  if (std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw CheckpointError("checkpoint: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint64_t seed = r.u64();

  LoadedCheckpoint out{ParameterStore(seed), {}};
  const std::uint32_t meta_count = r.u32();
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string k = r.str();
    std::string v = r.str();
    out.meta[std::move(k)] = std::move(v);
  }
  const std::uint64_t step = r.u64();
  const std::uint32_t tensor_count = r.u32();
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw CheckpointError("checkpoint: unreasonable tensor rank");
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(r.u64());
      numel *= d;
    }
    if (numel > (1u << 28)) throw CheckpointError("checkpoint: unreasonable tensor size");
    out.store.create(name, shape, Init::Zero);
    Tensor& value = out.store.get(name);
    Tensor& m1 = out.store.moment1(name);
    Tensor& m2 = out.store.moment2(name);
    for (std::size_t j = 0; j < numel; ++j) value[j] = r.f64();
    for (std::size_t j = 0; j < numel; ++j) m1[j] = r.f64();
    for (std::size_t j = 0; j < numel; ++j) m2[j] = r.f64();
  }
  out.store.set_step(step);
  return out;
}

}  // namespace motion::grad
