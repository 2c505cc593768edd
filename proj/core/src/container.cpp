#include "mjo/container.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace mjo {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian and written directly");

namespace {

void append_raw(std::string& out, const void* p, std::size_t n) {
  out.append(reinterpret_cast<const char*>(p), n);
}
template <typename T>
void append_val(std::string& out, T v) {
  append_raw(out, &v, sizeof(T));
}

class ByteCursor {
public:
  ByteCursor(const std::string& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}
  template <typename T>
  T take() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string take_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void take_into(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size())
      throw DataError(path_ + ": truncated file (size mismatch)");
  }
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string read_all_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("read failure: " + path.string());
  return bytes;
}

}  // namespace

void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for write: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failure: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
  atomic_write_bytes(path, text);
}

void write_grid_file(const AnomalyField& field, const std::filesystem::path& path) {
  field.validate();  // refuses non-finite values and bad shapes

  std::string out;
  out.reserve(kGridHeaderBytes + field.values.size() * sizeof(float));
  out.append("MJOG", 4);
  append_val<std::uint32_t>(out, kFormatVersion);
  append_val<std::uint64_t>(out, static_cast<std::uint64_t>(field.grid.n_lat));
  append_val<std::uint64_t>(out, static_cast<std::uint64_t>(field.grid.n_lon));
  append_val<double>(out, field.grid.lat_start_deg);
  append_val<double>(out, field.grid.lat_step_deg);
  append_val<double>(out, field.grid.lon_start_deg);
  append_val<double>(out, field.grid.lon_step_deg);
  append_val<std::uint64_t>(out, static_cast<std::uint64_t>(kNumVars));
  append_val<std::uint64_t>(out, static_cast<std::uint64_t>(field.n_leads));
  append_val<std::int64_t>(out, field.init_date);
  for (double v : field.values) append_val<float>(out, static_cast<float>(v));

  atomic_write_bytes(path, out);
}

AnomalyField read_grid_file(const std::filesystem::path& path) {
  const std::string bytes = read_all_bytes(path);
  ByteCursor cur(bytes, path.string());

  if (cur.take_bytes(4) != "MJOG")
    throw DataError(path.string() + ": bad magic (expected MJOG)");
  const auto version = cur.take<std::uint32_t>();
  if (version != kFormatVersion)
    throw DataError(path.string() + ": unsupported format version " + std::to_string(version));

  AnomalyField f;
  f.grid.n_lat = static_cast<int>(cur.take<std::uint64_t>());
  f.grid.n_lon = static_cast<int>(cur.take<std::uint64_t>());
  f.grid.lat_start_deg = cur.take<double>();
  f.grid.lat_step_deg = cur.take<double>();
  f.grid.lon_start_deg = cur.take<double>();
  f.grid.lon_step_deg = cur.take<double>();
  const auto n_vars = cur.take<std::uint64_t>();
  if (n_vars != static_cast<std::uint64_t>(kNumVars))
    throw DataError(path.string() + ": unexpected variable count " + std::to_string(n_vars));
  f.n_leads = static_cast<int>(cur.take<std::uint64_t>());
  f.init_date = cur.take<std::int64_t>();

  f.grid.validate();
  if (f.n_leads <= 0) throw DataError(path.string() + ": non-positive lead count");
  const std::size_t count =
      static_cast<std::size_t>(kNumVars) * f.n_leads * f.grid.n_lat * f.grid.n_lon;
  if (cur.remaining() != count * sizeof(float))
    throw DataError(path.string() + ": payload size mismatch");
  f.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) f.values[i] = static_cast<double>(cur.take<float>());
  f.validate();
  return f;
}

void write_grid_csv(const AnomalyField& field, const std::filesystem::path& path) {
  field.validate();
  std::string out = "var,lead,lat_idx,lon_idx,value\n";
  char line[96];
  for (int v = 0; v < kNumVars; ++v) {
    for (int lead = 0; lead < field.n_leads; ++lead) {
      for (int lat = 0; lat < field.grid.n_lat; ++lat) {
        for (int lon = 0; lon < field.grid.n_lon; ++lon) {
          std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%.9g\n", var_name(v), lead + 1, lat, lon,
                        field.at(v, lead, lat, lon));
          out += line;
        }
      }
    }
  }
  atomic_write_text(path, out);
}

ArtifactWriter::ArtifactWriter(std::string magic4) : magic_(std::move(magic4)) {
  if (magic_.size() != 4) throw DataError("artifact magic must be 4 bytes");
}

void ArtifactWriter::add(const std::string& name, const std::vector<std::uint64_t>& dims,
                         const std::vector<double>& data) {
  std::uint64_t count = 1;
  for (auto d : dims) count *= d;
  if (count != data.size())
    throw DataError("artifact record '" + name + "': dims do not match data length");
  records_.push_back(Record{name, dims, data});
}

void ArtifactWriter::add_scalar(const std::string& name, double value) {
  add(name, {1}, {value});
}

std::string ArtifactWriter::serialize() const {
  std::string out;
  out.append(magic_);
  append_val<std::uint32_t>(out, kFormatVersion);
  append_val<std::uint64_t>(out, records_.size());
  for (const auto& r : records_) {
    append_val<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
    out.append(r.name);
    append_val<std::uint64_t>(out, r.dims.size());
    for (auto d : r.dims) append_val<std::uint64_t>(out, d);
    append_raw(out, r.data.data(), r.data.size() * sizeof(double));
  }
  return out;
}

void ArtifactWriter::save(const std::filesystem::path& path) const {
  atomic_write_bytes(path, serialize());
}

ArtifactReader::ArtifactReader(const std::filesystem::path& path, const std::string& expect_magic)
    : path_(path.string()) {
  const std::string bytes = read_all_bytes(path);
  ByteCursor cur(bytes, path_);
  if (cur.take_bytes(4) != expect_magic)
    throw DataError(path_ + ": bad magic (expected " + expect_magic + ")");
  const auto version = cur.take<std::uint32_t>();
  if (version != kFormatVersion)
    throw DataError(path_ + ": unsupported format version " + std::to_string(version));
  const auto n_records = cur.take<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_records; ++i) {
    const auto name_len = cur.take<std::uint32_t>();
    std::string name = cur.take_bytes(name_len);
    const auto rank = cur.take<std::uint64_t>();
    Record rec;
    std::uint64_t count = 1;
    for (std::uint64_t d = 0; d < rank; ++d) {
      rec.dims.push_back(cur.take<std::uint64_t>());
      count *= rec.dims.back();
    }
    rec.data.resize(count);
    cur.take_into(rec.data.data(), count * sizeof(double));
    records_.emplace(std::move(name), std::move(rec));
  }
  if (cur.remaining() != 0) throw DataError(path_ + ": trailing bytes after records");
}

bool ArtifactReader::has(const std::string& name) const { return records_.count(name) != 0; }

const ArtifactReader::Record& ArtifactReader::find(const std::string& name) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw DataError(path_ + ": missing record '" + name + "'");
  return it->second;
}

const std::vector<std::uint64_t>& ArtifactReader::dims(const std::string& name) const {
  return find(name).dims;
}

const std::vector<double>& ArtifactReader::data(const std::string& name) const {
  return find(name).data;
}

double ArtifactReader::scalar(const std::string& name) const {
  const auto& rec = find(name);
  if (rec.data.size() != 1) throw DataError(path_ + ": record '" + name + "' is not a scalar");
  return rec.data[0];
}

std::vector<std::string> ArtifactReader::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : records_) out.push_back(k);
  return out;
}

}  // namespace mjo
