#include "sroc/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "sroc/error.hpp"

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace sroc {
namespace {

constexpr unsigned char kMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kAlign = 64;

// Minimal parser for the Python-literal dict that makes up an NPY header.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  void parse(std::string& descr, bool& fortran, std::vector<std::size_t>& shape) {
    bool have_descr = false, have_fortran = false, have_shape = false;
    skip_ws();
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        descr = parse_string();
        have_descr = true;
      } else if (key == "fortran_order") {
        fortran = parse_bool();
        have_fortran = true;
      } else if (key == "shape") {
        shape = parse_shape();
        have_shape = true;
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    if (!have_descr || !have_fortran || !have_shape) {
      fail("header missing one of descr/fortran_order/shape");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("malformed NPY header: " + msg, base_ + pos_);
  }
  char peek() const {
    if (pos_ >= text_.size()) fail("unexpected end of header");
    return text_[pos_];
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  std::string parse_string() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected string literal");
    ++pos_;
    const std::size_t start = pos_;
    while (peek() != quote) ++pos_;
    std::string out(text_.substr(start, pos_ - start));
    ++pos_;
    return out;
  }
  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }
  std::vector<std::size_t> parse_shape() {
    std::vector<std::size_t> dims;
    expect('(');
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected dimension");
      std::size_t value = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
        ++pos_;
      }
      // Python longs may carry an 'L' suffix in old files.
      if (peek() == 'L') ++pos_;
      dims.push_back(value);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

std::string shape_literal(std::span<const std::size_t> shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  if (shape.size() == 1) out << ',';
  out << ')';
  return out.str();
}

}  // namespace

std::size_t NpyArray::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

NpyArray parse_npy(std::span<const unsigned char> bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("missing NPY magic string", 0);
  }
  const unsigned major = bytes[6];
  std::size_t header_len = 0;
  std::size_t header_start = 0;
  if (major == 1) {
    header_len = bytes[8] | (std::size_t{bytes[9]} << 8);
    header_start = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw ParseError("truncated NPY preamble", bytes.size());
    header_len = bytes[8] | (std::size_t{bytes[9]} << 8) | (std::size_t{bytes[10]} << 16) |
                 (std::size_t{bytes[11]} << 24);
    header_start = 12;
  } else {
    throw ParseError("unsupported NPY version " + std::to_string(major), 6);
  }
  if (header_start + header_len > bytes.size()) {
    throw ParseError("NPY header extends past end of file", bytes.size());
  }
  const std::string_view header(reinterpret_cast<const char*>(bytes.data()) + header_start, header_len);

  std::string descr;
  bool fortran = false;
  NpyArray array;
  HeaderParser(header, header_start).parse(descr, fortran, array.shape);
  if (descr != "<f4") {
    throw ParseError("unsupported dtype '" + descr + "', expected '<f4'", header_start);
  }
  if (fortran) throw ParseError("fortran_order arrays are not supported", header_start);

  const std::size_t payload = header_start + header_len;
  const std::size_t count = array.element_count();
  if (bytes.size() - payload != count * sizeof(float)) {
    throw ParseError("payload holds " + std::to_string(bytes.size() - payload) + " bytes, shape " +
                         shape_literal(array.shape) + " needs " + std::to_string(count * sizeof(float)),
                     payload);
  }
  array.data.resize(count);
  if (count) std::memcpy(array.data.data(), bytes.data() + payload, count * sizeof(float));
  return array;
}

NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_npy(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte_offset());
  }
}

std::vector<unsigned char> encode_npy(std::span<const std::size_t> shape, std::span<const float> data) {
  const std::size_t count =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (count != data.size()) throw ShapeError("shape does not match data length");
  if (shape.empty() || count == 0) throw ShapeError("refusing to write an empty array");

  std::string header =
      "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape_literal(shape) + ", }";
  std::size_t preamble = 10;
  if (header.size() + 1 + preamble > 0xffff) preamble = 12;
  const std::size_t total = header.size() + 1 + preamble;
  header.append((kAlign - total % kAlign) % kAlign, ' ');
  header.push_back('\n');

  std::vector<unsigned char> out(kMagic, kMagic + sizeof(kMagic));
  out.push_back(preamble == 10 ? 1 : 2);
  out.push_back(0);
  const std::size_t len = header.size();
  out.push_back(static_cast<unsigned char>(len & 0xff));
  out.push_back(static_cast<unsigned char>((len >> 8) & 0xff));
  if (preamble == 12) {
    out.push_back(static_cast<unsigned char>((len >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((len >> 24) & 0xff));
  }
  out.insert(out.end(), header.begin(), header.end());
  const auto* raw = reinterpret_cast<const unsigned char*>(data.data());
  out.insert(out.end(), raw, raw + data.size_bytes());
  return out;
}

void save_array_npy(std::span<const std::size_t> shape, std::span<const float> data,
                    const std::filesystem::path& path) {
  const auto bytes = encode_npy(shape, data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sroc
