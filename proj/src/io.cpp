#include "pmgeo/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "pmgeo/error.hpp"

namespace pmgeo {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

namespace {

constexpr char kSampleMagic[8] = {'P', 'M', 'G', 'S', 'A', 'M', 'P', 'L'};
constexpr char kModelMagic[8] = {'P', 'M', 'G', 'M', 'O', 'D', 'E', 'L'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out_.append(b, sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  std::string finish() {
    put<std::uint32_t>(crc32(out_));
    return std::move(out_);
  }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : data_(data), end_(end) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void doubles(double* out, std::size_t n) {
    if (n > (end_ - pos_) / sizeof(double)) throw IntegrityError("truncated file");
    std::memcpy(out, data_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw IntegrityError("truncated file");
  }
  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

// Checks magic, version and checksum; returns a reader positioned after
// the version field and bounded before the checksum.
Reader open_checked(const std::string& bytes, const char (&magic)[8], std::uint32_t version, const char* what) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), magic, 8) != 0)
    throw IntegrityError(std::string(what) + ": bad magic bytes");
  if (bytes.size() < 12 + 4) throw IntegrityError(std::string(what) + ": truncated file");
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + 8, 4);
  if (v != version)
    throw UnsupportedVersion(std::string(what) + ": format version " + std::to_string(v) + ", expected " +
                             std::to_string(version));
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  if (crc32(bytes.substr(0, body)) != stored) throw IntegrityError(std::string(what) + ": checksum mismatch");
  Reader r(bytes, body);
  r.str(12);
  return r;
}

}  // namespace

std::uint32_t crc32(const std::string& bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    c = ::crc32(c, reinterpret_cast<const Bytef*>(bytes.data() + off), chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::string encode_sample_set(const SampleSet& s) {
  Writer w;
  w.bytes(kSampleMagic, 8);
  w.put<std::uint32_t>(kSampleSetVersion);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(s.size()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(s.dim()));
  w.put<std::uint64_t>(s.meta.seed);
  w.put<std::int64_t>(s.meta.label);
  w.put<std::uint64_t>(s.meta.attempts);
  w.put<std::uint64_t>(s.meta.successes);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.meta.source.size()));
  w.bytes(s.meta.source.data(), s.meta.source.size());
  w.bytes(reinterpret_cast<const char*>(s.points.data()), static_cast<std::size_t>(s.points.size()) * sizeof(double));
  return w.finish();
}

SampleSet decode_sample_set(const std::string& bytes) {
  Reader r = open_checked(bytes, kSampleMagic, kSampleSetVersion, "sample set");
  const auto n = r.get<std::uint64_t>();
  const auto d = r.get<std::uint64_t>();
  SampleSet s;
  s.meta.seed = r.get<std::uint64_t>();
  s.meta.label = r.get<std::int64_t>();
  s.meta.attempts = r.get<std::uint64_t>();
  s.meta.successes = r.get<std::uint64_t>();
  s.meta.source = r.str(r.get<std::uint32_t>());
  if (d != 0 && n > (bytes.size() / sizeof(double)) / d) throw IntegrityError("sample set: truncated file");
  const std::size_t expected = r.pos() + n * d * sizeof(double) + 4;
  if (bytes.size() != expected) throw IntegrityError("sample set: size does not match N x D");
  s.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  r.doubles(s.points.data(), n * d);
  return s;
}

std::string encode_model(const MlpModel& m) {
  m.validate();
  Writer w;
  w.bytes(kModelMagic, 8);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.activation));
  w.put<std::uint64_t>(m.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.layer_dims.size()));
  for (Eigen::Index d : m.layer_dims) w.put<std::uint64_t>(static_cast<std::uint64_t>(d));
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    const RowMatrix wr = m.weights[l];
    w.bytes(reinterpret_cast<const char*>(wr.data()), static_cast<std::size_t>(wr.size()) * sizeof(double));
    w.bytes(reinterpret_cast<const char*>(m.biases[l].data()), static_cast<std::size_t>(m.biases[l].size()) * sizeof(double));
  }
  return w.finish();
}

MlpModel decode_model(const std::string& bytes) {
  Reader r = open_checked(bytes, kModelMagic, kCheckpointVersion, "checkpoint");
  MlpModel m;
  const auto act = r.get<std::uint32_t>();
  if (act > 2) throw IntegrityError("checkpoint: unknown activation code");
  m.activation = static_cast<Activation>(act);
  m.seed = r.get<std::uint64_t>();
  const auto n_dims = r.get<std::uint32_t>();
  if (n_dims < 2 || n_dims > 64) throw IntegrityError("checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < n_dims; ++i) {
    const auto d = r.get<std::uint64_t>();
    if (d == 0 || d > (1u << 24)) throw IntegrityError("checkpoint: implausible layer width");
    m.layer_dims.push_back(static_cast<Eigen::Index>(d));
  }
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    RowMatrix wr(m.layer_dims[l + 1], m.layer_dims[l]);
    r.doubles(wr.data(), static_cast<std::size_t>(wr.size()));
    Vector b(m.layer_dims[l + 1]);
    r.doubles(b.data(), static_cast<std::size_t>(b.size()));
    m.weights.push_back(wr);
    m.biases.push_back(std::move(b));
  }
  if (r.pos() != bytes.size() - 4) throw IntegrityError("checkpoint: trailing bytes");
  m.validate();
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw InvalidInput("cannot read " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("cannot write " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_sample_set(const std::filesystem::path& path, const SampleSet& s) { write_file(path, encode_sample_set(s)); }
SampleSet read_sample_set(const std::filesystem::path& path) { return decode_sample_set(read_file(path)); }
void write_model(const std::filesystem::path& path, const MlpModel& m) { write_file(path, encode_model(m)); }
MlpModel read_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_sample_set_csv(const std::filesystem::path& path, const SampleSet& s) {
  std::string out;
  out += "# seed=" + std::to_string(s.meta.seed) + "\n";
  out += "# source=" + s.meta.source + "\n";
  out += "# label=" + std::to_string(s.meta.label) + "\n";
  out += "# attempts=" + std::to_string(s.meta.attempts) + "\n";
  out += "# successes=" + std::to_string(s.meta.successes) + "\n";
  out += "# dim=" + std::to_string(s.dim()) + "\n";
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    for (Eigen::Index j = 0; j < s.dim(); ++j) {
      if (j) out += ',';
      out += format_double(s.points(i, j));
    }
    out += '\n';
  }
  write_file(path, out);
}

SampleSet read_sample_set_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  SampleSet s;
  std::vector<double> values;
  Eigen::Index dim = -1;
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& why) {
    return InvalidInput(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2), val = line.substr(eq + 1);
      try {
        if (key == "seed") s.meta.seed = std::stoull(val);
        else if (key == "source") s.meta.source = val;
        else if (key == "label") s.meta.label = std::stoll(val);
        else if (key == "attempts") s.meta.attempts = std::stoull(val);
        else if (key == "successes") s.meta.successes = std::stoull(val);
        else if (key == "dim") dim = std::stoll(val);
      } catch (const std::exception&) {
        throw bad("bad metadata value");
      }
      continue;
    }
    Eigen::Index cols = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      double v;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw bad("not a number");
      values.push_back(v);
      ++cols;
      p = res.ptr;
      if (p == end) break;
      if (*p != ',') throw bad("expected ','");
      ++p;
    }
    if (dim < 0) dim = cols;
    if (cols != dim) throw bad("row has " + std::to_string(cols) + " values, expected " + std::to_string(dim));
  }
  if (dim < 0) dim = 0;
  const auto n = dim ? static_cast<Eigen::Index>(values.size()) / dim : 0;
  s.points = Eigen::Map<const RowMatrix>(values.data(), n, dim);
  return s;
}

}  // namespace pmgeo
