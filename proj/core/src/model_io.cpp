#include <bit>
#include <fstream>
#include <iterator>

#include "pseudolabel/error.hpp"
#include "pseudolabel/linear_model.hpp"

namespace pseudolabel {
namespace {

constexpr char kMagic[4] = {'P', 'L', 'L', 'M'};

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  const std::string& str() const { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, const std::filesystem::path& path) : buf_(buf), path_(path) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string_view bytes(std::size_t n) {
    need(n);
    std::string_view out(buf_.data() + pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("model file '" + path_.string() + "': " + what);
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail("truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string& buf_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_model(const LinearModel& model, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kModelFormatVersion);
  const FeatureConfig& f = model.features();
  w.u64(f.dimension);
  w.u32(f.max_input_length);
  w.u32(static_cast<std::uint32_t>(f.ngram_orders.size()));
  for (int order : f.ngram_orders) w.u32(static_cast<std::uint32_t>(order));
  for (double b : model.bias()) w.f64(b);
  for (double x : model.weights()) w.f64(x);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file '" + path.string() + "'");
  out.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
  if (!out) throw DataError("write failed for model file '" + path.string() + "'");
}

LinearModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path.string() + "'");
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r(buf, path);
  if (r.bytes(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) r.fail("bad magic");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    r.fail("format version " + std::to_string(version) + " is not supported (expected " +
           std::to_string(kModelFormatVersion) + ")");
  }
  FeatureConfig f;
  f.dimension = r.u64();
  f.max_input_length = r.u32();
  const std::uint32_t n_orders = r.u32();
  if (n_orders > 8) r.fail("implausible n-gram order count");
  f.ngram_orders.clear();
  for (std::uint32_t i = 0; i < n_orders; ++i) f.ngram_orders.push_back(static_cast<int>(r.u32()));
  try {
    f.validate();
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  if (r.remaining() != (kNumClasses + kNumClasses * f.dimension) * 8) {
    r.fail("size does not match dimension " + std::to_string(f.dimension));
  }
  LinearModel model(f);
  for (double& b : model.bias()) b = r.f64();
  for (double& x : model.weights()) x = r.f64();
  if (!model.all_finite()) r.fail("non-finite parameters");
  return model;
}

}  // namespace pseudolabel
