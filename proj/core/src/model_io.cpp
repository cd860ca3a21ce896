#include "cscg/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cscg/error.hpp"

namespace cscg {

namespace {

constexpr std::array<std::uint8_t, 8> kMagic = {'C', 'S', 'C', 'G',
                                                'M', 'D', 'L', '\0'};
constexpr std::uint32_t kFlagQuantizer = 1;

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw FormatError("model file truncated at byte " + std::to_string(pos_));
    }
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    auto b = bytes(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[i]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = bytes(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64s(std::uint64_t n) {
    // Guard the allocation against absurd headers before reading.
    if (n > (in_.size() - pos_) / 8) {
      throw FormatError("model file truncated: header announces more data "
                        "than present");
    }
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint64_t checked_product(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) throw FormatError("model header overflow");
  return a * b;
}

}  // namespace

std::vector<std::uint8_t> serialize(const ModelBundle& bundle) {
  const GroundedSchema& m = bundle.schema;
  if (auto v = validate(m); !v.empty()) {
    throw InvalidArgument("serialize: invalid model: " + v.front().message);
  }
  Writer w;
  w.bytes(kMagic);
  w.u32(kModelFormatVersion);
  w.u32(bundle.quantizer ? kFlagQuantizer : 0);
  w.u64(m.n_actions());
  w.u64(m.n_states());
  w.u64(m.n_obs());
  w.u64(m.clones.n_groups());
  for (std::size_t s : m.clones.sizes()) w.u64(s);
  w.u32(m.version);
  w.u64(m.name.size());
  w.bytes({reinterpret_cast<const std::uint8_t*>(m.name.data()), m.name.size()});
  w.f64s(m.transitions.data());
  w.f64s(m.emissions.data());
  w.f64s(m.initial.probs);
  if (bundle.quantizer) {
    const Quantizer& q = *bundle.quantizer;
    w.u64(q.k());
    w.u64(q.dim);
    w.f64s(q.centroids);
    w.f64s(q.priors);
    w.f64(q.sigma2);
  }
  return w.take();
}

ModelBundle deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.bytes(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw FormatError("not a model file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw FormatError("model format version mismatch: file has " +
                      std::to_string(version) + ", expected " +
                      std::to_string(kModelFormatVersion));
  }
  const std::uint32_t flags = r.u32();
  const std::uint64_t n_actions = r.u64();
  const std::uint64_t n_states = r.u64();
  const std::uint64_t n_obs = r.u64();
  const std::uint64_t n_groups = r.u64();
  if (n_groups > n_states) throw FormatError("more clone groups than states");
  std::vector<std::size_t> sizes(n_groups);
  std::uint64_t total = 0;
  for (auto& s : sizes) {
    s = r.u64();
    total += s;
  }
  if (total != n_states) {
    throw FormatError("clone group sizes do not sum to the state count");
  }

  ModelBundle out;
  GroundedSchema& m = out.schema;
  m.version = r.u32();
  const std::uint64_t name_len = r.u64();
  auto name = r.bytes(name_len);
  m.name.assign(name.begin(), name.end());

  try {
    m.clones = CloneStructure::from_sizes(sizes);
    m.transitions = TransitionTensor(
        n_actions, n_states,
        r.f64s(checked_product(checked_product(n_actions, n_states), n_states)));
    m.emissions = EmissionMatrix(n_states, n_obs,
                                 r.f64s(checked_product(n_states, n_obs)));
    m.initial.probs = r.f64s(n_states);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("malformed model payload: ") + e.what());
  }

  if (flags & kFlagQuantizer) {
    Quantizer q;
    const std::uint64_t k = r.u64();
    q.dim = r.u64();
    q.centroids = r.f64s(checked_product(k, q.dim));
    q.priors = r.f64s(k);
    q.sigma2 = r.f64();
    out.quantizer = std::move(q);
  }
  if (!r.at_end()) throw FormatError("trailing bytes after model payload");

  if (auto v = validate(m); !v.empty()) {
    throw FormatError("model violates invariants: " + v.front().message);
  }
  return out;
}

void save_model(const std::filesystem::path& path, const ModelBundle& bundle) {
  auto bytes = serialize(bundle);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("failed writing " + path.string());
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace cscg
