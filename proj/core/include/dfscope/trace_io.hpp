#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dfscope/trace.hpp"

namespace dfscope {

// Streaming JSONL encoder. One JSON object per line; record types:
// "meta", "config_phase", "cycle", "cycle_rle", "layer_totals", "dram".
// Runs of identical cycle records are folded into a single cycle_rle line.
// Single-writer: feed records in stream order, then finish().
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out);
  ~TraceWriter();

  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void write(const TraceRecord& record);
  // Flushes any pending run. Must be called before the stream is used.
  void finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Decodes a JSONL stream back into records, expanding cycle_rle lines.
// decode(encode(records)) == records for every writer-produced stream.
std::vector<TraceRecord> decode_trace(std::istream& in);

// Convenience wrappers.
std::string encode_trace(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> decode_trace_string(const std::string& bytes);
void write_trace_file(const std::string& path, const std::vector<TraceRecord>& records);
std::vector<TraceRecord> read_trace_file(const std::string& path);

}  // namespace dfscope
