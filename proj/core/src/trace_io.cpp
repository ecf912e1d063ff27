#include "dfscope/trace_io.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dfscope {

namespace {

using nlohmann::ordered_json;

ordered_json cycle_counts_json(const CycleRecord& c) {
  ordered_json j;
  j["w"] = c.w;
  j["i"] = c.i;
  j["o"] = c.o;
  j["psr"] = c.psr;
  j["psw"] = c.psw;
  return j;
}

void read_cycle_counts(const ordered_json& j, CycleRecord& c) {
  c.w = j.at("w").get<uint64_t>();
  c.i = j.at("i").get<uint64_t>();
  c.o = j.at("o").get<uint64_t>();
  c.psr = j.at("psr").get<uint64_t>();
  c.psw = j.at("psw").get<uint64_t>();
}

ordered_json totals_json(const LayerTrace& t) {
  ordered_json j;
  j["type"] = "layer_totals";
  j["layer"] = t.layer_index;
  j["wr"] = t.weight_reads;
  j["ir"] = t.input_reads;
  j["ow"] = t.output_writes;
  j["psr"] = t.psum_reads;
  j["psw"] = t.psum_writes;
  j["dram_writes"] = t.dram_writes;
  j["total_cycles"] = t.total_cycles;
  if (t.first_two_weight_addrs) {
    j["w_addrs_first2"] = {t.first_two_weight_addrs->first,
                           t.first_two_weight_addrs->second};
  }
  return j;
}

LayerTrace totals_from_json(const ordered_json& j) {
  LayerTrace t;
  t.layer_index = j.at("layer").get<int64_t>();
  t.weight_reads = j.at("wr").get<uint64_t>();
  t.input_reads = j.at("ir").get<uint64_t>();
  t.output_writes = j.at("ow").get<uint64_t>();
  t.psum_reads = j.at("psr").get<uint64_t>();
  t.psum_writes = j.at("psw").get<uint64_t>();
  t.dram_writes = j.at("dram_writes").get<uint64_t>();
  t.total_cycles = j.at("total_cycles").get<uint64_t>();
  if (j.contains("w_addrs_first2")) {
    t.first_two_weight_addrs = {j["w_addrs_first2"][0].get<uint64_t>(),
                                j["w_addrs_first2"][1].get<uint64_t>()};
  }
  return t;
}

}  // namespace

struct TraceWriter::Impl {
  std::ostream& out;
  // Pending run of identical cycle records awaiting RLE flush.
  std::optional<LayerCycleRecord> run_head;
  int64_t run_length = 0;
  int64_t last_cycle_t = 0;
  int64_t last_cycle_layer = -1;

  explicit Impl(std::ostream& o) : out(o) {}

  void emit(const ordered_json& j) { out << j.dump() << "\n"; }

  void flush_run() {
    if (!run_head) {
      return;
    }
    const auto& head = *run_head;
    if (run_length == 1) {
      ordered_json j;
      j["type"] = "cycle";
      j["layer"] = head.layer_index;
      j["t"] = head.cycle.t;
      j.update(cycle_counts_json(head.cycle));
      if (!head.cycle.w_addrs.empty()) {
        j["w_addrs"] = head.cycle.w_addrs;
      }
      emit(j);
    } else {
      ordered_json j;
      j["type"] = "cycle_rle";
      j["layer"] = head.layer_index;
      j["t0"] = head.cycle.t;
      j["count"] = run_length;
      j.update(cycle_counts_json(head.cycle));
      emit(j);
    }
    run_head.reset();
    run_length = 0;
  }

  void push_cycle(const LayerCycleRecord& rec) {
    if (rec.layer_index == last_cycle_layer && rec.cycle.t != last_cycle_t + 1) {
      throw EncodingError("trace writer: cycle " + std::to_string(rec.cycle.t) +
                          " out of order in layer " + std::to_string(rec.layer_index));
    }
    if (rec.layer_index != last_cycle_layer && rec.cycle.t != 1) {
      throw EncodingError("trace writer: layer " + std::to_string(rec.layer_index) +
                          " must start at cycle 1");
    }
    last_cycle_layer = rec.layer_index;
    last_cycle_t = rec.cycle.t;

    // Records carrying addresses are never folded into a run.
    const bool can_extend = run_head && run_head->layer_index == rec.layer_index &&
                            run_head->cycle.same_counts(rec.cycle) &&
                            run_head->cycle.w_addrs.empty() && rec.cycle.w_addrs.empty();
    if (can_extend) {
      ++run_length;
      return;
    }
    flush_run();
    run_head = rec;
    run_length = 1;
  }
};

TraceWriter::TraceWriter(std::ostream& out) : impl_(std::make_unique<Impl>(out)) {}

TraceWriter::~TraceWriter() {
  // finish() is the normal path; a destructor flush keeps partial streams sane.
  try {
    impl_->flush_run();
  } catch (...) {
  }
}

void TraceWriter::write(const TraceRecord& record) {
  if (const auto* cycle = std::get_if<LayerCycleRecord>(&record)) {
    impl_->push_cycle(*cycle);
    return;
  }
  impl_->flush_run();
  if (const auto* meta = std::get_if<MetaRecord>(&record)) {
    ordered_json j;
    j["type"] = "meta";
    j["dataflow"] = dataflow_name(meta->dataflow);
    j["m"] = meta->pes_per_array;
    j["n"] = meta->arrays;
    j["mode"] = meta->mode == TraceMode::kFull ? "full" : "prefix";
    j["prefix_margin"] = meta->prefix_margin;
    impl_->emit(j);
  } else if (const auto* config = std::get_if<ConfigPhaseRecord>(&record)) {
    ordered_json j;
    j["type"] = "config_phase";
    j["layer"] = config->layer_index;
    j["cycle"] = config->cycle;
    j["payload"] = config->payload;
    impl_->emit(j);
  } else if (const auto* dram = std::get_if<DramRecord>(&record)) {
    ordered_json j;
    j["type"] = "dram";
    j["layer"] = dram->layer_index;
    j["dir"] = dram->dir == DramDir::kRead ? "read" : "write";
    j["base"] = dram->base_addr;
    j["count"] = dram->count;
    j["cycle"] = dram->cycle;
    impl_->emit(j);
  } else {
    impl_->emit(totals_json(std::get<LayerTotalsRecord>(record).totals));
  }
}

void TraceWriter::finish() { impl_->flush_run(); }

std::vector<TraceRecord> decode_trace(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedTrace("trace line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "meta") {
        MetaRecord meta;
        meta.dataflow = dataflow_from_name(j.at("dataflow").get<std::string>());
        meta.pes_per_array = j.at("m").get<int64_t>();
        meta.arrays = j.at("n").get<int64_t>();
        meta.mode = j.at("mode").get<std::string>() == "full" ? TraceMode::kFull
                                                              : TraceMode::kPrefix;
        meta.prefix_margin = j.at("prefix_margin").get<int64_t>();
        records.emplace_back(meta);
      } else if (type == "config_phase") {
        ConfigPhaseRecord config;
        config.layer_index = j.at("layer").get<int64_t>();
        config.cycle = j.at("cycle").get<int64_t>();
        config.payload = j.at("payload").get<int64_t>();
        records.emplace_back(config);
      } else if (type == "cycle") {
        LayerCycleRecord rec;
        rec.layer_index = j.at("layer").get<int64_t>();
        rec.cycle.t = j.at("t").get<int64_t>();
        read_cycle_counts(j, rec.cycle);
        if (j.contains("w_addrs")) {
          rec.cycle.w_addrs = j["w_addrs"].get<std::vector<uint64_t>>();
        }
        records.emplace_back(rec);
      } else if (type == "cycle_rle") {
        LayerCycleRecord rec;
        rec.layer_index = j.at("layer").get<int64_t>();
        const int64_t t0 = j.at("t0").get<int64_t>();
        const int64_t count = j.at("count").get<int64_t>();
        if (count < 1) {
          throw MalformedTrace("cycle_rle with count < 1");
        }
        read_cycle_counts(j, rec.cycle);
        for (int64_t k = 0; k < count; ++k) {
          rec.cycle.t = t0 + k;
          records.emplace_back(rec);
        }
      } else if (type == "layer_totals") {
        records.emplace_back(LayerTotalsRecord{totals_from_json(j)});
      } else if (type == "dram") {
        DramRecord dram;
        dram.layer_index = j.at("layer").get<int64_t>();
        dram.dir = j.at("dir").get<std::string>() == "read" ? DramDir::kRead
                                                            : DramDir::kWrite;
        dram.base_addr = j.at("base").get<uint64_t>();
        dram.count = j.at("count").get<uint64_t>();
        dram.cycle = j.at("cycle").get<int64_t>();
        records.emplace_back(dram);
      } else {
        throw MalformedTrace("unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw MalformedTrace("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::string encode_trace(const std::vector<TraceRecord>& records) {
  std::ostringstream out;
  TraceWriter writer(out);
  for (const auto& record : records) {
    writer.write(record);
  }
  writer.finish();
  return out.str();
}

std::vector<TraceRecord> decode_trace_string(const std::string& bytes) {
  std::istringstream in(bytes);
  return decode_trace(in);
}

void write_trace_file(const std::string& path, const std::vector<TraceRecord>& records) {
  std::ofstream out(path);
  if (!out) {
    throw EncodingError("cannot open trace file for writing: " + path);
  }
  TraceWriter writer(out);
  for (const auto& record : records) {
    writer.write(record);
  }
  writer.finish();
}

std::vector<TraceRecord> read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw MalformedTrace("cannot open trace file: " + path);
  }
  return decode_trace(in);
}

}  // namespace dfscope
