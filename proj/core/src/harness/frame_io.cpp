#include "chainhydro/harness/frame_io.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace chainhydro::harness {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'H', 'F', 'R'};
constexpr std::uint32_t kBinaryVersion = 1;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& msg) {
  throw std::runtime_error(path.string() + ": " + msg);
}

std::vector<double> parse_row(const std::string& line) {
  std::vector<double> out;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    double v = 0.0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) throw std::runtime_error("malformed number in row '" + line + "'");
    out.push_back(v);
    p = next;
    if (p < end && *p == ',') ++p;
  }
  return out;
}

void expect_schema(std::istream& in, const std::filesystem::path& path) {
  std::string first;
  if (!std::getline(in, first) || first != kSchemaLine) fail(path, "missing '# schema=1' header");
}

} // namespace

std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), p);
}

CsvFrameSink::CsvFrameSink(const std::filesystem::path& path) : out_(path) {
  if (!out_) fail(path, "cannot open for writing");
  out_ << kSchemaLine << '\n' << "t,i,r,p\n";
}

void CsvFrameSink::write(const Frame& frame) {
  const std::string t = format_double(frame.t);
  for (std::size_t i = 0; i < frame.r.size(); ++i) {
    line_.clear();
    line_ += t;
    line_ += ',';
    line_ += std::to_string(i + 1);
    line_ += ',';
    line_ += format_double(frame.r[i]);
    line_ += ',';
    line_ += format_double(frame.p[i]);
    line_ += '\n';
    out_ << line_;
  }
}

BinaryFrameSink::BinaryFrameSink(const std::filesystem::path& path, std::size_t N)
    : out_(path, std::ios::binary), n_(N) {
  if (!out_) fail(path, "cannot open for writing");
  const std::uint64_t n64 = N;
  out_.write(kMagic.data(), kMagic.size());
  out_.write(reinterpret_cast<const char*>(&kBinaryVersion), sizeof kBinaryVersion);
  out_.write(reinterpret_cast<const char*>(&n64), sizeof n64);
}

void BinaryFrameSink::write(const Frame& frame) {
  if (frame.r.size() != n_ || frame.p.size() != n_)
    throw std::runtime_error("binary frame sink: frame size does not match N");
  out_.write(reinterpret_cast<const char*>(&frame.t), sizeof(double));
  out_.write(reinterpret_cast<const char*>(frame.r.data()), static_cast<std::streamsize>(n_ * sizeof(double)));
  out_.write(reinterpret_cast<const char*>(frame.p.data()), static_cast<std::streamsize>(n_ * sizeof(double)));
}

std::vector<Frame> read_frames_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  expect_schema(in, path);
  std::string line;
  if (!std::getline(in, line) || line != "t,i,r,p") fail(path, "expected header 't,i,r,p'");
  std::vector<Frame> frames;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = parse_row(line);
    if (row.size() != 4) fail(path, "expected four columns");
    const auto i = static_cast<std::size_t>(row[1]);
    if (i == 1) frames.push_back(Frame{row[0], {}, {}});
    if (frames.empty() || frames.back().t != row[0] || frames.back().r.size() + 1 != i)
      fail(path, "rows are not grouped by frame with i = 1..N");
    frames.back().r.push_back(row[2]);
    frames.back().p.push_back(row[3]);
  }
  return frames;
}

std::vector<Frame> read_frames_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::array<char, 4> magic{};
  std::uint32_t version = 0;
  std::uint64_t n = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || magic != kMagic || version != kBinaryVersion) fail(path, "not a version-1 frame file");
  std::vector<Frame> frames;
  while (true) {
    Frame f;
    f.r.resize(n);
    f.p.resize(n);
    if (!in.read(reinterpret_cast<char*>(&f.t), sizeof(double))) break;
    in.read(reinterpret_cast<char*>(f.r.data()), static_cast<std::streamsize>(n * sizeof(double)));
    in.read(reinterpret_cast<char*>(f.p.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) fail(path, "truncated frame");
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<Frame> read_frames(const std::filesystem::path& path) {
  if (path.extension() == ".bin") return read_frames_binary(path);
  return read_frames_csv(path);
}

void write_lengths_csv(const std::filesystem::path& path, const std::vector<double>& times,
                       const std::vector<double>& lengths) {
  std::vector<std::string> rows;
  rows.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k)
    rows.push_back(format_double(times[k]) + "," + format_double(lengths[k]));
  write_table(path, "t,L", rows);
}

void read_lengths_csv(const std::filesystem::path& path, std::vector<double>& times,
                      std::vector<double>& lengths) {
  const Table t = read_table(path);
  if (t.header != std::vector<std::string>{"t", "L"}) fail(path, "expected header 't,L'");
  times.clear();
  lengths.clear();
  for (const auto& row : t.rows) {
    times.push_back(row.at(0));
    lengths.push_back(row.at(1));
  }
}

void write_table(const std::filesystem::path& path, const std::string& header,
                 const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  out << kSchemaLine << '\n' << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  expect_schema(in, path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) fail(path, "missing header row");
  std::stringstream hs(line);
  for (std::string field; std::getline(hs, field, ',');) t.header.push_back(field);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(parse_row(line));
  return t;
}

} // namespace chainhydro::harness
