#include "s2cgan/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unistd.h>

#include "s2cgan/error.hpp"

namespace s2cgan {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) u64(e);
    for (double v : t.data()) f64(v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Tensor tensor() {
    const std::uint32_t rank = u32();
    if (rank > 8) throw FormatError("load_checkpoint: implausible tensor rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t count = 1;
    for (auto& e : shape) {
      e = u64();
      if (e == 0) throw FormatError("load_checkpoint: zero tensor extent");
      count *= e;
      if (count > remaining() / 8) throw FormatError("load_checkpoint: truncated file");
    }
    std::vector<double> values(count);
    for (double& v : values) v = f64();
    return Tensor(shape, std::move(values));
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw FormatError("load_checkpoint: truncated file");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::vector<std::size_t> widths_from_entries(const std::vector<NamedTensor>& entries) {
  std::vector<std::size_t> widths;
  for (std::size_t i = 0;; ++i) {
    const std::string name = "W" + std::to_string(i);
    auto it = std::find_if(entries.begin(), entries.end(), [&](const NamedTensor& e) { return e.name == name; });
    if (it == entries.end()) break;
    if (it->value.rank() != 2) throw FormatError("load_checkpoint: weight " + name + " is not a matrix");
    if (widths.empty()) widths.push_back(it->value.shape()[0]);
    widths.push_back(it->value.shape()[1]);
  }
  return widths;
}

}  // namespace

bool Checkpoint::operator==(const Checkpoint& other) const {
  if (networks != other.networks || config_hash != other.config_hash) return false;
  if (moments.has_value() != other.moments.has_value()) return false;
  if (!moments) return true;
  return *moments == *other.moments;
}

const NetworkParams& Checkpoint::network(NetworkRole role) const {
  for (const auto& n : networks) {
    if (n.role == role) return n;
  }
  throw FormatError(std::string("checkpoint: no ") + role_name(role) + " network");
}

Checkpoint make_checkpoint(const TrainState& state, bool with_moments) {
  Checkpoint c;
  c.networks = {state.generator.params, state.discriminator.params, state.labeller.params};
  if (with_moments) {
    c.moments = std::vector<std::vector<AdamMoments>>{state.generator.moments, state.discriminator.moments,
                                                      state.labeller.moments};
  }
  c.config_hash = config_hash(state.config);
  return c;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes("S2CG", 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.networks.size()));
  for (const auto& net : ckpt.networks) {
    w.u8(static_cast<std::uint8_t>(net.role));
    w.u32(static_cast<std::uint32_t>(net.entries.size()));
    for (const auto& e : net.entries) {
      if (e.name.size() > 0xFFFF) throw InvalidArgument("save_checkpoint: entry name too long");
      w.u16(static_cast<std::uint16_t>(e.name.size()));
      w.bytes(e.name.data(), e.name.size());
      w.tensor(e.value);
    }
  }
  w.u8(ckpt.moments ? 1 : 0);
  if (ckpt.moments) {
    if (ckpt.moments->size() != ckpt.networks.size()) {
      throw InvalidArgument("save_checkpoint: moments do not mirror the networks");
    }
    for (std::size_t n = 0; n < ckpt.networks.size(); ++n) {
      const auto& m = (*ckpt.moments)[n];
      if (m.size() != ckpt.networks[n].entries.size()) {
        throw InvalidArgument("save_checkpoint: moments do not mirror the entries");
      }
      for (const auto& mm : m) {
        w.tensor(mm.first);
        w.tensor(mm.second);
      }
    }
  }
  w.bytes(ckpt.config_hash.data(), ckpt.config_hash.size());
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.remaining() < 4 || r.str(4) != "S2CG") throw FormatError("load_checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("load_checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  const std::uint32_t count = r.u32();
  if (count > 16) throw FormatError("load_checkpoint: implausible network count");
  for (std::uint32_t n = 0; n < count; ++n) {
    const std::uint8_t role = r.u8();
    if (role > 2) throw FormatError("load_checkpoint: unknown network role " + std::to_string(role));
    NetworkParams net;
    net.role = static_cast<NetworkRole>(role);
    const std::uint32_t entries = r.u32();
    for (std::uint32_t i = 0; i < entries; ++i) {
      const std::uint16_t len = r.u16();
      std::string name = r.str(len);
      net.entries.push_back({std::move(name), r.tensor()});
    }
    net.widths = widths_from_entries(net.entries);
    c.networks.push_back(std::move(net));
  }
  const std::uint8_t flag = r.u8();
  if (flag > 1) throw FormatError("load_checkpoint: bad moments flag");
  if (flag == 1) {
    std::vector<std::vector<AdamMoments>> moments;
    for (const auto& net : c.networks) {
      std::vector<AdamMoments> m;
      for (std::size_t i = 0; i < net.entries.size(); ++i) {
        Tensor first = r.tensor();
        Tensor second = r.tensor();
        m.push_back({std::move(first), std::move(second)});
      }
      moments.push_back(std::move(m));
    }
    c.moments = std::move(moments);
  }
  if (r.remaining() != 32) throw FormatError("load_checkpoint: truncated file or trailing bytes");
  const std::string hash = r.str(32);
  std::memcpy(c.config_hash.data(), hash.data(), 32);
  for (const auto& net : c.networks) {
    try {
      net.validate();
    } catch (const Error& e) {
      throw FormatError(std::string("load_checkpoint: ") + e.what());
    }
  }
  return c;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("write: cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write: cannot open " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw IoError("write: failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("write: cannot rename into " + path.string() + ": " + ec.message());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  save_checkpoint(make_checkpoint(state), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void restore_state(TrainState& state, const Checkpoint& ckpt) {
  if (ckpt.config_hash != config_hash(state.config)) {
    throw InvalidArgument("restore_state: checkpoint was written under a different config");
  }
  OptimizedNetwork* targets[] = {&state.generator, &state.discriminator, &state.labeller};
  for (std::size_t n = 0; n < ckpt.networks.size(); ++n) {
    const NetworkParams& net = ckpt.networks[n];
    OptimizedNetwork& dst = *targets[static_cast<std::size_t>(net.role)];
    if (net.widths != dst.params.widths) {
      throw ShapeError(std::string("restore_state: ") + role_name(net.role) + " architecture differs");
    }
    dst.params = net;
    if (ckpt.moments) dst.moments = (*ckpt.moments)[n];
  }
}

}  // namespace s2cgan
