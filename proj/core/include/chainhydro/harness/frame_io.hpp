#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "chainhydro/microsim.hpp"

namespace chainhydro::harness {

// Every CSV written by the harness starts with this line.
inline constexpr std::string_view kSchemaLine = "# schema=1";

// Shortest round-trip decimal form, so identical doubles give identical bytes.
std::string format_double(double x);

// One row per site per frame: t,i,r,p with i = 1..N.
class CsvFrameSink : public FrameSink {
public:
  explicit CsvFrameSink(const std::filesystem::path& path);
  void write(const Frame& frame) override;

private:
  std::ofstream out_;
  std::string line_;
};

// Little-endian native doubles: magic "CHFR", u32 version, u64 N, then per
// frame t, r[0..N), p[0..N).
class BinaryFrameSink : public FrameSink {
public:
  BinaryFrameSink(const std::filesystem::path& path, std::size_t N);
  void write(const Frame& frame) override;

private:
  std::ofstream out_;
  std::size_t n_;
};

std::vector<Frame> read_frames_csv(const std::filesystem::path& path);
std::vector<Frame> read_frames_binary(const std::filesystem::path& path);
// Dispatches on the extension (.csv or .bin).
std::vector<Frame> read_frames(const std::filesystem::path& path);

// t,L series used for the work integral.
void write_lengths_csv(const std::filesystem::path& path, const std::vector<double>& times,
                       const std::vector<double>& lengths);
void read_lengths_csv(const std::filesystem::path& path, std::vector<double>& times,
                      std::vector<double>& lengths);

// Writes `# schema=1`, the header row and the rows, each row already joined.
void write_table(const std::filesystem::path& path, const std::string& header,
                 const std::vector<std::string>& rows);

// Reads a schema-1 CSV; returns the header fields and the numeric rows.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
Table read_table(const std::filesystem::path& path);

} // namespace chainhydro::harness
