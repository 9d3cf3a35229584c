#include "tfprop/record_io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tfprop {

static_assert(std::endian::native == std::endian::little, "record files assume a little-endian host");

namespace {

constexpr char kStftMagic[] = "TFPSTFT1";
constexpr char kSignalMagic[] = "TFPSIG01";
constexpr char kMatrixMagic[] = "TFPMAT01";

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(const std::string& s) { out_ += s; }
  void complex_body(const Complex* data, Index count) {
    for (Index i = 0; i < count; ++i) {
      put(data[i].real());
      put(data[i].imag());
    }
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, s_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string r = s_.substr(pos_, n);
    pos_ += n;
    return r;
  }
  void complex_body(Complex* data, Index count) {
    for (Index i = 0; i < count; ++i) {
      const double re = get<double>();
      const double im = get<double>();
      data[i] = Complex(re, im);
    }
  }
  void expect_end() const {
    if (pos_ != s_.size()) throw FormatError("trailing bytes after record body");
  }

 private:
  void need(size_t n) const {
    if (pos_ + n > s_.size()) throw FormatError("record truncated");
  }
  const std::string& s_;
  size_t pos_ = 0;
};

void put_axes(Writer& w, const std::vector<LatticeAxis>& axes) {
  for (const auto& a : axes) {
    w.put(a.start);
    w.put(a.step);
    w.put(static_cast<std::uint64_t>(a.count));
  }
}

std::vector<LatticeAxis> get_axes(Reader& r, std::uint32_t d) {
  std::vector<LatticeAxis> axes(d);
  for (auto& a : axes) {
    a.start = r.get<double>();
    a.step = r.get<double>();
    a.count = static_cast<Index>(r.get<std::uint64_t>());
  }
  return axes;
}

std::uint32_t get_dim(Reader& r) {
  const auto d = r.get<std::uint32_t>();
  if (d < 1 || d > 8) throw FormatError(fmt::format("implausible dimension {} in record header", d));
  return d;
}

}  // namespace

std::string encode_stft_record(const StftArray& F) {
  Writer w;
  w.bytes(std::string(kStftMagic, 8));
  w.put(static_cast<std::uint32_t>(F.lattice.dim()));
  put_axes(w, F.lattice.x_axes());
  put_axes(w, F.lattice.eta_axes());
  w.put(static_cast<std::uint32_t>(F.window_id.size()));
  w.bytes(F.window_id);
  w.complex_body(F.values.data(), F.values.size());
  return w.take();
}

StftArray decode_stft_record(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(8) != std::string(kStftMagic, 8)) throw FormatError("not an STFT record");
  const auto d = get_dim(r);
  auto xs = get_axes(r, d);
  auto es = get_axes(r, d);
  PhaseLattice lat(std::move(xs), std::move(es));
  const auto len = r.get<std::uint32_t>();
  std::string id = r.bytes(len);
  StftArray F{lat, StftValues(lat.x_count(), lat.eta_count()), std::move(id)};
  r.complex_body(F.values.data(), F.values.size());
  r.expect_end();
  return F;
}

std::string encode_matrix_record(const GaborMatrixSample& k) {
  Writer w;
  w.bytes(std::string(kMatrixMagic, 8));
  w.put(static_cast<std::uint32_t>(k.w_lattice.dim()));
  w.put(k.t);
  for (const auto* lat : {&k.w_lattice, &k.z_lattice}) {
    put_axes(w, lat->x_axes());
    put_axes(w, lat->eta_axes());
  }
  for (const auto* s : {&k.window_id, &k.descriptor}) {
    w.put(static_cast<std::uint32_t>(s->size()));
    w.bytes(*s);
  }
  w.complex_body(k.values.data(), k.values.size());
  return w.take();
}

GaborMatrixSample decode_matrix_record(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(8) != std::string(kMatrixMagic, 8)) throw FormatError("not a matrix record");
  const auto d = get_dim(r);
  GaborMatrixSample k;
  k.t = r.get<double>();
  for (auto* lat : {&k.w_lattice, &k.z_lattice}) {
    auto xs = get_axes(r, d);
    auto es = get_axes(r, d);
    *lat = PhaseLattice(std::move(xs), std::move(es));
  }
  for (auto* s : {&k.window_id, &k.descriptor}) {
    const auto len = r.get<std::uint32_t>();
    *s = r.bytes(len);
  }
  k.values.resize(k.w_lattice.size(), k.z_lattice.size());
  r.complex_body(k.values.data(), k.values.size());
  r.expect_end();
  return k;
}

std::string encode_signal_record(const SampledSignal& f) {
  Writer w;
  w.bytes(std::string(kSignalMagic, 8));
  const auto& g = f.grid;
  w.put(static_cast<std::uint32_t>(g.dim()));
  for (int a = 0; a < g.dim(); ++a) {
    w.put(g.origin()(a));
    w.put(g.spacing()(a));
    w.put(static_cast<std::uint64_t>(g.points_per_axis()));
  }
  w.complex_body(f.values.data(), f.values.size());
  return w.take();
}

SampledSignal decode_signal_record(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(8) != std::string(kSignalMagic, 8)) throw FormatError("not a signal record");
  const auto d = get_dim(r);
  VectorXd origin(d), dx(d);
  Index n = 0;
  for (std::uint32_t a = 0; a < d; ++a) {
    origin(a) = r.get<double>();
    dx(a) = r.get<double>();
    const auto na = static_cast<Index>(r.get<std::uint64_t>());
    if (a > 0 && na != n) throw FormatError("signal record axes must share n");
    n = na;
  }
  SpatialGrid grid(static_cast<int>(d), n, origin, dx);
  VectorXcd v(grid.size());
  r.complex_body(v.data(), v.size());
  r.expect_end();
  return {grid, std::move(v)};
}

std::string stft_abs_csv(const StftArray& F) {
  const int d = F.lattice.dim();
  std::string out;
  for (int a = 0; a < d; ++a) out += fmt::format("x{},", a + 1);
  for (int a = 0; a < d; ++a) out += fmt::format("eta{},", a + 1);
  out += "abs\n";
  for (Index i = 0; i < F.lattice.x_count(); ++i) {
    const VectorXd x = F.lattice.x_point(i);
    for (Index j = 0; j < F.lattice.eta_count(); ++j) {
      const VectorXd e = F.lattice.eta_point(j);
      for (int a = 0; a < d; ++a) out += fmt::format("{},", x(a));
      for (int a = 0; a < d; ++a) out += fmt::format("{},", e(a));
      out += fmt::format("{:.17g}\n", std::abs(F.values(i, j)));
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(fmt::format("cannot write '{}'", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(fmt::format("short write to '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace tfprop
