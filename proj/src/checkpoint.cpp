#include "samba/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "samba/errors.hpp"

namespace samba {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

void put_str(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

  template <class T>
  T get() {
    unsigned char bytes[sizeof(T)];
    read(bytes, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string get_str() {
    const auto len = get<std::uint32_t>();
    if (len > (1u << 20)) fail("string length out of range");
    std::string s(len, '\0');
    read(s.data(), len);
    return s;
  }

  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated checkpoint");
  }

  [[noreturn]] void fail(const std::string& what) const { throw SchemaError(origin_ + ": " + what); }

 private:
  std::istream& in_;
  std::string origin_;
};

}  // namespace

void write_container(const std::filesystem::path& path, const CheckpointContainer& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 6);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.hyper.size()));
  for (const auto& [name, value] : c.hyper) {
    put_str(out, name);
    put<std::int64_t>(out, value);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.strings.size()));
  for (const auto& s : c.strings) put_str(out, s);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.arrays.size()));
  for (const auto& a : c.arrays) {
    if (shape_numel(a.shape) != a.values.size()) throw ShapeError("checkpoint array " + a.name + " has inconsistent shape");
    put_str(out, a.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put<std::uint64_t>(out, d);
    for (double v : a.values) put<double>(out, v);
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

CheckpointContainer read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[6];
  r.read(magic, 6);
  if (std::memcmp(magic, kCheckpointMagic, 6) != 0) r.fail("not a SAMBA1 checkpoint (bad magic)");
  CheckpointContainer c;
  const auto n_hyper = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_hyper; ++i) {
    auto name = r.get_str();
    c.hyper.emplace_back(std::move(name), r.get<std::int64_t>());
  }
  const auto n_str = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_str; ++i) c.strings.push_back(r.get_str());
  const auto n_arr = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_arr; ++i) {
    CheckpointArray a;
    a.name = r.get_str();
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) r.fail("array rank out of range for " + a.name);
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      a.shape.push_back(r.get<std::uint64_t>());
      count *= a.shape.back();
    }
    if (count > (std::size_t{1} << 32)) r.fail("array too large: " + a.name);
    a.values.resize(count);
    for (auto& v : a.values) v = r.get<double>();
    c.arrays.push_back(std::move(a));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const Hyper& h = ckpt.model.hyper;
  CheckpointContainer c;
  c.hyper = {{"N", h.features},        {"L", h.window},          {"E", h.embed},
             {"H", h.state},           {"U", h.ffn_hidden},      {"R", h.layers},
             {"K", h.cheb_order},      {"d_e", h.node_dim},      {"conv_width", h.conv_width},
             {"delta_rank", h.delta_rank}};
  c.strings = ckpt.feature_names;
  for (const auto& p : ckpt.model.parameters()) {
    c.arrays.push_back({p.name, p.tensor.shape(), {p.tensor.data().begin(), p.tensor.data().end()}});
  }
  if (ckpt.scaler.fitted) {
    c.arrays.push_back({"data.scaler_min", {ckpt.scaler.min.size()}, ckpt.scaler.min});
    c.arrays.push_back({"data.scaler_max", {ckpt.scaler.max.size()}, ckpt.scaler.max});
  }
  c.arrays.push_back({"data.split", {3}, {ckpt.split.train_frac, ckpt.split.val_frac, ckpt.split.test_frac}});
  write_container(path, c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto c = read_container(path);
  std::map<std::string, std::int64_t> hyper(c.hyper.begin(), c.hyper.end());
  auto field = [&](const char* name) -> std::size_t {
    auto it = hyper.find(name);
    if (it == hyper.end() || it->second < 0) throw SchemaError(path.string() + ": missing hyperparameter " + name);
    return static_cast<std::size_t>(it->second);
  };
  Hyper h;
  h.features = field("N");
  h.window = field("L");
  h.embed = field("E");
  h.state = field("H");
  h.ffn_hidden = field("U");
  h.layers = field("R");
  h.cheb_order = field("K");
  h.node_dim = field("d_e");
  h.conv_width = field("conv_width");
  h.delta_rank = field("delta_rank");

  Checkpoint ckpt;
  ckpt.model = SambaModel::init(h, 0);
  ckpt.feature_names = c.strings;
  if (ckpt.feature_names.size() != h.features) {
    throw SchemaError(path.string() + ": feature name count does not match N");
  }
  std::map<std::string, const CheckpointArray*> arrays;
  for (const auto& a : c.arrays) arrays[a.name] = &a;
  for (const auto& p : ckpt.model.parameters()) {
    auto it = arrays.find(p.name);
    if (it == arrays.end()) throw SchemaError(path.string() + ": missing parameter " + p.name);
    if (it->second->shape != p.tensor.shape()) {
      throw SchemaError(path.string() + ": parameter " + p.name + " has shape " + shape_str(it->second->shape) +
                        ", expected " + shape_str(p.tensor.shape()));
    }
    Tensor t = p.tensor;
    std::copy(it->second->values.begin(), it->second->values.end(), t.mutable_data().begin());
  }
  if (arrays.count("data.scaler_min") && arrays.count("data.scaler_max")) {
    ckpt.scaler.min = arrays["data.scaler_min"]->values;
    ckpt.scaler.max = arrays["data.scaler_max"]->values;
    ckpt.scaler.fitted = true;
  }
  if (auto it = arrays.find("data.split"); it != arrays.end() && it->second->values.size() == 3) {
    ckpt.split = {it->second->values[0], it->second->values[1], it->second->values[2]};
  }
  return ckpt;
}

}  // namespace samba
