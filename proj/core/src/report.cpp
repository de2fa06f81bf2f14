// CostReport serialization: JSON (schema "streamcnn-cost-report/1") and CSV.

#include <charconv>
#include <sstream>

#include "json.hpp"
#include "streamcnn/estimator.hpp"
#include "streamcnn/svg.hpp"

namespace streamcnn::estimate {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kSchema = "streamcnn-cost-report/1";

const std::vector<std::string>& columns() {
  static const std::vector<std::string> cols{
      "layer", "kind",   "weight_precision", "output_precision", "weights",     "nonzero_weights",
      "flops", "macs",   "bits",             "energy_nj",        "reuse",       "reuse_effective",
      "cycles", "multipliers", "dsp",        "lut",              "ff",          "bram"};
  return cols;
}

ordered_json cost_json(const LayerCost& c) {
  ordered_json j;
  j["layer"] = c.layer;
  j["kind"] = c.kind;
  j["weight_precision"] = c.weight_precision;
  j["output_precision"] = c.output_precision;
  j["weights"] = c.weights;
  j["nonzero_weights"] = c.nonzero_weights;
  j["flops"] = c.flops;
  j["macs"] = c.macs;
  j["bits"] = c.bits;
  j["energy_nj"] = c.energy_nj;
  j["reuse"] = c.reuse;
  j["reuse_effective"] = c.reuse_effective;
  j["cycles"] = c.cycles;
  j["multipliers"] = c.multipliers;
  j["dsp"] = c.dsp;
  j["lut"] = c.lut;
  j["ff"] = c.ff;
  j["bram"] = c.bram;
  return j;
}

LayerCost cost_from_json(const ordered_json& j) {
  LayerCost c;
  c.layer = j.at("layer").get<std::string>();
  c.kind = j.at("kind").get<std::string>();
  c.weight_precision = j.at("weight_precision").get<std::string>();
  c.output_precision = j.at("output_precision").get<std::string>();
  c.weights = j.at("weights").get<std::size_t>();
  c.nonzero_weights = j.at("nonzero_weights").get<std::size_t>();
  c.flops = j.at("flops").get<std::size_t>();
  c.macs = j.at("macs").get<std::size_t>();
  c.bits = j.at("bits").get<std::size_t>();
  c.energy_nj = j.at("energy_nj").get<double>();
  c.reuse = j.at("reuse").get<int>();
  c.reuse_effective = j.at("reuse_effective").get<int>();
  c.cycles = j.at("cycles").get<std::size_t>();
  c.multipliers = j.at("multipliers").get<std::size_t>();
  c.dsp = j.at("dsp").get<std::size_t>();
  c.lut = j.at("lut").get<std::size_t>();
  c.ff = j.at("ff").get<std::size_t>();
  c.bram = j.at("bram").get<double>();
  return c;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& what) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("cost report CSV: bad value '" + s + "' for " + what);
  }
  return v;
}

std::vector<std::string> cost_row(const LayerCost& c) {
  return {c.layer,
          c.kind,
          c.weight_precision,
          c.output_precision,
          std::to_string(c.weights),
          std::to_string(c.nonzero_weights),
          std::to_string(c.flops),
          std::to_string(c.macs),
          std::to_string(c.bits),
          svg::number(c.energy_nj),
          std::to_string(c.reuse),
          std::to_string(c.reuse_effective),
          std::to_string(c.cycles),
          std::to_string(c.multipliers),
          std::to_string(c.dsp),
          std::to_string(c.lut),
          std::to_string(c.ff),
          svg::number(c.bram)};
}

LayerCost cost_from_row(const std::vector<std::string>& f) {
  if (f.size() != columns().size()) {
    throw std::invalid_argument("cost report CSV: expected " + std::to_string(columns().size()) + " columns, got " +
                                std::to_string(f.size()));
  }
  LayerCost c;
  c.layer = f[0];
  c.kind = f[1];
  c.weight_precision = f[2];
  c.output_precision = f[3];
  c.weights = parse_number<std::size_t>(f[4], "weights");
  c.nonzero_weights = parse_number<std::size_t>(f[5], "nonzero_weights");
  c.flops = parse_number<std::size_t>(f[6], "flops");
  c.macs = parse_number<std::size_t>(f[7], "macs");
  c.bits = parse_number<std::size_t>(f[8], "bits");
  c.energy_nj = parse_number<double>(f[9], "energy_nj");
  c.reuse = parse_number<int>(f[10], "reuse");
  c.reuse_effective = parse_number<int>(f[11], "reuse_effective");
  c.cycles = parse_number<std::size_t>(f[12], "cycles");
  c.multipliers = parse_number<std::size_t>(f[13], "multipliers");
  c.dsp = parse_number<std::size_t>(f[14], "dsp");
  c.lut = parse_number<std::size_t>(f[15], "lut");
  c.ff = parse_number<std::size_t>(f[16], "ff");
  c.bram = parse_number<double>(f[17], "bram");
  return c;
}

}  // namespace

std::string report_json(const CostReport& r) {
  ordered_json doc;
  doc["schema"] = kSchema;
  doc["model"] = r.model;
  ordered_json config;
  config["clock_mhz"] = r.clock_mhz;
  config["energy_table"] = r.energy_table;
  config["energy_mode"] = r.energy_mode;
  config["pipeline_depth"] = r.pipeline_depth;
  config["device"] = r.device;
  doc["config"] = std::move(config);
  ordered_json layers = ordered_json::array();
  for (const auto& c : r.layers) layers.push_back(cost_json(c));
  doc["layers"] = std::move(layers);
  doc["total"] = cost_json(r.total);
  ordered_json timing;
  timing["ii_cycles"] = r.ii;
  timing["latency_cycles"] = r.latency_cycles;
  timing["latency_us"] = r.latency_us;
  doc["timing"] = std::move(timing);
  ordered_json util;
  util["dsp"] = r.dsp_percent;
  util["lut"] = r.lut_percent;
  util["ff"] = r.ff_percent;
  util["bram"] = r.bram_percent;
  doc["utilization_percent"] = std::move(util);
  return doc.dump(2) + "\n";
}

CostReport report_from_json(const std::string& text) {
  try {
    const auto doc = ordered_json::parse(text);
    if (doc.value("schema", std::string()) != kSchema) throw std::invalid_argument("not a streamcnn cost report");
    CostReport r;
    r.model = doc.at("model").get<std::string>();
    const auto& config = doc.at("config");
    r.clock_mhz = config.at("clock_mhz").get<double>();
    r.energy_table = config.at("energy_table").get<std::string>();
    r.energy_mode = config.at("energy_mode").get<std::string>();
    r.pipeline_depth = config.at("pipeline_depth").get<std::size_t>();
    r.device = config.at("device").get<std::string>();
    for (const auto& j : doc.at("layers")) r.layers.push_back(cost_from_json(j));
    r.total = cost_from_json(doc.at("total"));
    r.ii = doc.at("timing").at("ii_cycles").get<std::size_t>();
    r.latency_cycles = doc.at("timing").at("latency_cycles").get<std::size_t>();
    r.latency_us = doc.at("timing").at("latency_us").get<double>();
    const auto& util = doc.at("utilization_percent");
    r.dsp_percent = util.at("dsp").get<double>();
    r.lut_percent = util.at("lut").get<double>();
    r.ff_percent = util.at("ff").get<double>();
    r.bram_percent = util.at("bram").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("cost report JSON: ") + e.what());
  }
}

std::string report_csv(const CostReport& r) {
  std::ostringstream os;
  const auto meta = [&](const std::string& key, const std::string& value) {
    os << '#' << key << ',' << csv_field(value) << '\n';
  };
  meta("schema", kSchema);
  meta("model", r.model);
  meta("clock_mhz", svg::number(r.clock_mhz));
  meta("energy_table", r.energy_table);
  meta("energy_mode", r.energy_mode);
  meta("pipeline_depth", std::to_string(r.pipeline_depth));
  meta("device", r.device);
  meta("ii_cycles", std::to_string(r.ii));
  meta("latency_cycles", std::to_string(r.latency_cycles));
  meta("latency_us", svg::number(r.latency_us));
  meta("dsp_percent", svg::number(r.dsp_percent));
  meta("lut_percent", svg::number(r.lut_percent));
  meta("ff_percent", svg::number(r.ff_percent));
  meta("bram_percent", svg::number(r.bram_percent));
  const auto write_row = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << csv_field(fields[i]);
    os << '\n';
  };
  write_row(columns());
  for (const auto& c : r.layers) write_row(cost_row(c));
  write_row(cost_row(r.total));
  return os.str();
}

CostReport report_from_csv(const std::string& text) {
  CostReport r;
  std::istringstream in(text);
  std::string line;
  bool header = false, have_total = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto f = split_csv(line.substr(1));
      if (f.size() != 2) throw std::invalid_argument("cost report CSV: bad metadata line '" + line + "'");
      const auto& k = f[0];
      const auto& v = f[1];
      if (k == "schema" && v != kSchema) throw std::invalid_argument("not a streamcnn cost report");
      if (k == "model") r.model = v;
      if (k == "clock_mhz") r.clock_mhz = parse_number<double>(v, k);
      if (k == "energy_table") r.energy_table = v;
      if (k == "energy_mode") r.energy_mode = v;
      if (k == "pipeline_depth") r.pipeline_depth = parse_number<std::size_t>(v, k);
      if (k == "device") r.device = v;
      if (k == "ii_cycles") r.ii = parse_number<std::size_t>(v, k);
      if (k == "latency_cycles") r.latency_cycles = parse_number<std::size_t>(v, k);
      if (k == "latency_us") r.latency_us = parse_number<double>(v, k);
      if (k == "dsp_percent") r.dsp_percent = parse_number<double>(v, k);
      if (k == "lut_percent") r.lut_percent = parse_number<double>(v, k);
      if (k == "ff_percent") r.ff_percent = parse_number<double>(v, k);
      if (k == "bram_percent") r.bram_percent = parse_number<double>(v, k);
      continue;
    }
    const auto fields = split_csv(line);
    if (!header) {
      if (fields != columns()) throw std::invalid_argument("cost report CSV: unexpected header");
      header = true;
      continue;
    }
    auto c = cost_from_row(fields);
    if (c.layer == "TOTAL") {
      r.total = std::move(c);
      have_total = true;
    } else {
      r.layers.push_back(std::move(c));
    }
  }
  if (!header || !have_total) throw std::invalid_argument("cost report CSV: missing header or TOTAL row");
  return r;
}

}  // namespace streamcnn::estimate
