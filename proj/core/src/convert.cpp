#include "tsmor/convert.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include <zlib.h>

#include "tsmor/errors.hpp"
#include "tsmor/matrix_io.hpp"

namespace tsmor {

namespace {

// MAT-file level 5 data types and array classes.
enum : std::uint32_t {
  miINT8 = 1,
  miUINT8 = 2,
  miINT16 = 3,
  miUINT16 = 4,
  miINT32 = 5,
  miUINT32 = 6,
  miSINGLE = 7,
  miDOUBLE = 9,
  miINT64 = 12,
  miUINT64 = 13,
  miMATRIX = 14,
  miCOMPRESSED = 15,
};

enum : std::uint32_t {
  mxSPARSE_CLASS = 5,
  mxDOUBLE_CLASS = 6,
  mxUINT64_CLASS = 15,
};

constexpr std::uint32_t kComplexFlag = 0x0800;

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, bool swap, std::string origin)
      : data_(data), size_(size), swap_(swap), origin_(std::move(origin)) {}

  bool done() const { return pos_ >= size_; }
  std::size_t remaining() const { return size_ - pos_; }

  const std::uint8_t* take(std::size_t n) {
    if (n > remaining()) fail("truncated data");
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  void skip(std::size_t n) { take(n); }
  void align8() {
    const std::size_t pad = (8 - pos_ % 8) % 8;
    if (pad <= remaining()) pos_ += pad;
  }

  std::uint32_t u32() { return decode<std::uint32_t>(take(4)); }

  template <typename T>
  T decode(const std::uint8_t* p) const {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, p, sizeof(T));
    if (swap_) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  bool swapped() const { return swap_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError(origin_ + ": " + what);
  }
  const std::string& origin() const { return origin_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  bool swap_;
  std::string origin_;
};

struct Element {
  std::uint32_t type = 0;
  const std::uint8_t* data = nullptr;
  std::size_t bytes = 0;
};

Element read_element(ByteReader& r) {
  Element e;
  const std::uint32_t first = r.u32();
  if ((first >> 16) != 0) {
    // Small data element: type and size packed in one word, data in the next 4 bytes.
    e.type = first & 0xFFFF;
    e.bytes = first >> 16;
    if (e.bytes > 4) r.fail("invalid small data element");
    e.data = r.take(4);
    return e;
  }
  e.type = first;
  e.bytes = r.u32();
  e.data = r.take(e.bytes);
  if (e.type != miCOMPRESSED) r.align8();
  return e;
}

std::size_t type_size(std::uint32_t type) {
  switch (type) {
    case miINT8:
    case miUINT8:
      return 1;
    case miINT16:
    case miUINT16:
      return 2;
    case miINT32:
    case miUINT32:
    case miSINGLE:
      return 4;
    case miDOUBLE:
    case miINT64:
    case miUINT64:
      return 8;
    default:
      return 0;
  }
}

std::vector<double> numeric_values(const ByteReader& r, const Element& e) {
  const std::size_t sz = type_size(e.type);
  if (sz == 0) r.fail("unsupported numeric data type " + std::to_string(e.type));
  const std::size_t count = e.bytes / sz;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* p = e.data + i * sz;
    switch (e.type) {
      case miINT8: out[i] = static_cast<std::int8_t>(*p); break;
      case miUINT8: out[i] = *p; break;
      case miINT16: out[i] = r.decode<std::int16_t>(p); break;
      case miUINT16: out[i] = r.decode<std::uint16_t>(p); break;
      case miINT32: out[i] = r.decode<std::int32_t>(p); break;
      case miUINT32: out[i] = r.decode<std::uint32_t>(p); break;
      case miSINGLE: out[i] = r.decode<float>(p); break;
      case miDOUBLE: out[i] = r.decode<double>(p); break;
      case miINT64: out[i] = static_cast<double>(r.decode<std::int64_t>(p)); break;
      case miUINT64: out[i] = static_cast<double>(r.decode<std::uint64_t>(p)); break;
      default: break;
    }
  }
  return out;
}

std::vector<std::uint8_t> inflate_all(const ByteReader& r, const Element& e) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) r.fail("zlib initialisation failed");
  std::vector<std::uint8_t> out;
  zs.next_in = const_cast<Bytef*>(e.data);
  zs.avail_in = static_cast<uInt>(e.bytes);
  std::uint8_t chunk[1 << 15];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof chunk;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      r.fail("corrupt compressed element");
    }
    out.insert(out.end(), chunk, chunk + (sizeof chunk - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) break;
  }
  inflateEnd(&zs);
  return out;
}

void parse_matrix(const ByteReader& parent, const Element& e,
                  std::map<std::string, Eigen::MatrixXd>& out) {
  ByteReader r(e.data, e.bytes, parent.swapped(), parent.origin());
  if (r.done()) return;
  const Element flags_el = read_element(r);
  if (flags_el.bytes < 8) r.fail("invalid array flags");
  const auto flags = r.decode<std::uint32_t>(flags_el.data);
  const std::uint32_t cls = flags & 0xFF;
  const Element dims_el = read_element(r);
  const std::vector<double> dims = numeric_values(r, dims_el);
  const Element name_el = read_element(r);
  const std::string name(reinterpret_cast<const char*>(name_el.data), name_el.bytes);

  const bool numeric = cls == mxSPARSE_CLASS || (cls >= mxDOUBLE_CLASS && cls <= mxUINT64_CLASS);
  if (!numeric) return;  // cells, structs, objects, chars
  if (dims.size() != 2) r.fail("variable '" + name + "' is not two-dimensional");
  const auto rows = static_cast<Eigen::Index>(dims[0]);
  const auto cols = static_cast<Eigen::Index>(dims[1]);
  if (flags & kComplexFlag) r.fail("variable '" + name + "' is complex");

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  if (cls == mxSPARSE_CLASS) {
    const std::vector<double> ir = numeric_values(r, read_element(r));
    const std::vector<double> jc = numeric_values(r, read_element(r));
    const std::vector<double> pr = numeric_values(r, read_element(r));
    if (jc.size() != static_cast<std::size_t>(cols) + 1) r.fail("bad sparse column index");
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (auto idx = static_cast<std::size_t>(jc[j]); idx < static_cast<std::size_t>(jc[j + 1]);
           ++idx) {
        if (idx >= ir.size() || idx >= pr.size()) r.fail("bad sparse structure");
        const auto i = static_cast<Eigen::Index>(ir[idx]);
        if (i < 0 || i >= rows) r.fail("sparse row index out of range");
        m(i, j) = pr[idx];
      }
    }
  } else {
    const std::vector<double> pr = numeric_values(r, read_element(r));
    if (pr.size() != static_cast<std::size_t>(rows * cols)) r.fail("bad data length");
    m = Eigen::Map<const Eigen::MatrixXd>(pr.data(), rows, cols);
  }
  out[name] = std::move(m);
}

void parse_elements(ByteReader& r, std::map<std::string, Eigen::MatrixXd>& out) {
  while (r.remaining() >= 8) {
    const Element e = read_element(r);
    if (e.type == miCOMPRESSED) {
      const std::vector<std::uint8_t> raw = inflate_all(r, e);
      ByteReader inner(raw.data(), raw.size(), r.swapped(), r.origin());
      parse_elements(inner, out);
    } else if (e.type == miMATRIX) {
      parse_matrix(r, e, out);
    }
  }
}

}  // namespace

std::map<std::string, Eigen::MatrixXd> read_mat_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open MAT-file '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (bytes.size() < 128) throw InputError(path.string() + ": not a level-5 MAT-file");
  bool swap = false;
  if (bytes[126] == 'I' && bytes[127] == 'M') {
    swap = false;
  } else if (bytes[126] == 'M' && bytes[127] == 'I') {
    swap = true;
  } else {
    throw InputError(path.string() + ": not a level-5 MAT-file (bad endian indicator)");
  }
  ByteReader r(bytes.data() + 128, bytes.size() - 128, swap, path.string());
  std::map<std::string, Eigen::MatrixXd> out;
  parse_elements(r, out);
  return out;
}

Eigen::MatrixXd read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open MatrixMarket file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  std::istringstream banner(line);
  std::string tag, object, layout, field, symmetry;
  banner >> tag >> object >> layout >> field >> symmetry;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  layout = lower(layout);
  field = lower(field);
  symmetry = lower(symmetry);
  if (tag != "%%MatrixMarket" || lower(object) != "matrix") {
    throw InputError(path.string() + ": missing %%MatrixMarket matrix banner");
  }
  if (field == "complex") throw InputError(path.string() + ": complex matrices not supported");
  const bool pattern = field == "pattern";
  const bool symmetric = symmetry == "symmetric";
  const bool skew = symmetry == "skew-symmetric";

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream size_line(line);
  long rows = 0, cols = 0, entries = 0;
  if (layout == "coordinate") {
    if (!(size_line >> rows >> cols >> entries)) throw InputError(path.string() + ": bad size line");
  } else if (layout == "array") {
    if (!(size_line >> rows >> cols)) throw InputError(path.string() + ": bad size line");
  } else {
    throw InputError(path.string() + ": unknown layout '" + layout + "'");
  }

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  if (layout == "coordinate") {
    for (long e = 0; e < entries; ++e) {
      long i = 0, j = 0;
      double v = 1.0;
      if (!(in >> i >> j) || (!pattern && !(in >> v))) {
        throw InputError(path.string() + ": truncated entry list");
      }
      if (i < 1 || i > rows || j < 1 || j > cols) {
        throw InputError(path.string() + ": entry index out of range");
      }
      m(i - 1, j - 1) = v;
      if ((symmetric || skew) && i != j) m(j - 1, i - 1) = skew ? -v : v;
    }
  } else {
    for (long j = 0; j < cols; ++j) {
      for (long i = (symmetric || skew) ? j : 0; i < rows; ++i) {
        if (skew && i == j) continue;
        double v = 0.0;
        if (!(in >> v)) throw InputError(path.string() + ": truncated array data");
        m(i, j) = v;
        if ((symmetric || skew) && i != j) m(j, i) = skew ? -v : v;
      }
    }
  }
  return m;
}

std::map<std::string, std::filesystem::path> convert_to_dense_text(
    const std::filesystem::path& input, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::map<std::string, std::filesystem::path> written;
  const std::string ext = input.extension().string();
  if (ext == ".mat") {
    for (const auto& [name, m] : read_mat_file(input)) {
      const auto target = out_dir / (name + ".txt");
      write_matrix_file(target, m);
      written[name] = target;
    }
  } else if (ext == ".mtx") {
    const auto target = out_dir / (input.stem().string() + ".txt");
    write_matrix_file(target, read_matrix_market(input));
    written[input.stem().string()] = target;
  } else {
    throw InputError("convert: unsupported input '" + input.string() + "' (expected .mat or .mtx)");
  }
  if (written.empty()) throw InputError(input.string() + ": no numeric variables found");
  return written;
}

}  // namespace tsmor
