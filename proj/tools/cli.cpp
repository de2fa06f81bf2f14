#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "streamcnn/compression.hpp"
#include "streamcnn/estimator.hpp"
#include "streamcnn/instruction.hpp"
#include "streamcnn/precision_config.hpp"
#include "streamcnn/reference.hpp"
#include "streamcnn/stream_engine.hpp"
#include "streamcnn/svg.hpp"
#include "streamcnn/verify.hpp"

namespace streamcnn::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct RunConfig {
  std::string model;
  std::string weights;
  std::string input;
  std::string engine = "stream";
  std::string mode = "fixed";
  std::string scheduling = "cooperative";
  std::string precision;
  std::string reuse;
  double sparsity = 0.0;
  std::string scope = "per-layer";
  double clock_mhz = 200.0;
  std::uint64_t seed = 1;
  std::string format = "json";
  std::string out;
  std::string energy_table;
  std::string energy_mode = "fixed";
  std::string device;
  std::size_t pipeline_depth = 5;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes `content` to `out_dir/name`, or to `out` when no directory is set.
void emit(const RunConfig& cfg, const std::string& name, const std::string& content, std::ostream& out) {
  if (cfg.out.empty()) {
    out << content;
    return;
  }
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot write '" + path.string() + "'");
  f << content;
  out << "wrote " << path.string() << '\n';
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

/// `value` is either one integer applied to every layer or a JSON file
/// {"default": R, "layers": {"name": R}}.
void apply_reuse(ModelGraph& g, const std::string& value) {
  if (value.empty()) return;
  const auto check = [](long long r) {
    if (r < 1) throw std::invalid_argument("reuse factor must be >= 1, got " + std::to_string(r));
    return static_cast<int>(r);
  };
  if (all_digits(value)) {
    const int r = check(std::stoll(value));
    for (auto& layer : g.layers) layer.reuse_factor = r;
    return;
  }
  try {
    const auto j = ordered_json::parse(read_file(value));
    if (j.contains("default")) {
      const int r = check(j.at("default").get<long long>());
      for (auto& layer : g.layers) layer.reuse_factor = r;
    }
    if (j.contains("layers")) {
      for (const auto& [name, value] : j.at("layers").items()) {
        Layer* layer = g.find(name);
        if (!layer) throw ModelError("reuse config names unknown layer '" + name + "'");
        layer->reuse_factor = check(value.get<long long>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("reuse config '" + value + "': " + e.what());
  }
}

/// Load, prune, quantize and set reuse factors, in that order.
ModelGraph prepare(const RunConfig& cfg) {
  ModelGraph g = load_model(cfg.model, cfg.weights);
  if (cfg.sparsity > 0.0) {
    g = compress::prune_magnitude(std::move(g), cfg.sparsity, compress::prune_scope_from_string(cfg.scope)).graph;
  }
  if (!cfg.precision.empty()) g = compress::ptq(std::move(g), load_precision_config(cfg.precision));
  apply_reuse(g, cfg.reuse);
  return infer_shapes(std::move(g));
}

Tensor scaled(Tensor image) {
  for (double& v : image.values()) v /= 255.0;
  return image;
}

Tensor load_input(const RunConfig& cfg, const ModelGraph& g) {
  if (cfg.input.empty()) return scaled(random_image(g.input_shape, cfg.seed));
  const fs::path path(cfg.input);
  if (!fs::exists(path)) throw std::invalid_argument("input file '" + path.string() + "' does not exist");
  Tensor x = path.extension() == ".f32" ? load_raw_f32(path, g.input_shape) : scaled(load_image(path, g.input_shape));
  if (x.shape() != g.input_shape) {
    throw ShapeError("input has shape " + shape_to_string(x.shape()) + ", model expects " +
                     shape_to_string(g.input_shape));
  }
  return x;
}

estimate::EstimateOptions estimate_options(const RunConfig& cfg) {
  estimate::EstimateOptions o;
  o.clock_mhz = cfg.clock_mhz;
  if (!cfg.energy_table.empty()) o.energy_table = estimate::EnergyTable::load(cfg.energy_table);
  if (cfg.energy_mode == "float32") o.energy_mode = estimate::EnergyMode::Float32;
  if (!cfg.device.empty()) o.device = estimate::DeviceCapacity::load(cfg.device);
  o.cycles.pipeline_depth = cfg.pipeline_depth;
  return o;
}

std::string report_text(const estimate::CostReport& r, const std::string& format) {
  return format == "csv" ? estimate::report_csv(r) : estimate::report_json(r);
}

std::string stats_table(const stream::PipelineStats& s) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "layer" << std::right << std::setw(9) << "items_in" << std::setw(9) << "padding"
     << std::setw(10) << "items_out" << std::setw(7) << "reuse" << std::setw(8) << "cycles" << std::setw(7) << "drain"
     << std::setw(10) << "win_cap" << std::setw(9) << "win_peak" << std::setw(9) << "entries" << '\n';
  for (const auto& l : s.layers) {
    os << std::left << std::setw(12) << l.layer << std::right << std::setw(9) << l.items_in << std::setw(9)
       << l.padding_items << std::setw(10) << l.items_out << std::setw(7) << l.reuse << std::setw(8)
       << l.consumption_cycles << std::setw(7) << l.drain_cycles << std::setw(10) << l.window_capacity << std::setw(9)
       << l.window_peak << std::setw(9) << l.instruction_entries << '\n';
  }
  os << "II " << s.ii << " cycles, latency " << s.latency_cycles << " cycles (" << svg::number(s.latency_us)
     << " us)\n";
  return os.str();
}

// -- commands ------------------------------------------------------------------

int cmd_run(const RunConfig& cfg, std::ostream& out) {
  const ModelGraph g = prepare(cfg);
  const Tensor x = load_input(cfg, g);
  const ArithMode mode = arith_mode_from_string(cfg.mode);
  Tensor y;
  std::optional<stream::PipelineStats> stats;
  if (cfg.engine == "direct") {
    y = reference::run_direct(g, x, mode);
  } else {
    stream::StreamOptions so;
    so.scheduling = stream::scheduling_mode_from_string(cfg.scheduling);
    so.clock_mhz = cfg.clock_mhz;
    so.cycles.pipeline_depth = cfg.pipeline_depth;
    auto r = stream::run_stream(g, x, mode, so);
    y = std::move(r.output);
    stats = std::move(r.stats);
  }
  const auto values = y.values();
  const auto argmax = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());

  std::string text;
  if (cfg.format == "csv") {
    std::ostringstream os;
    os << "class,probability\n";
    for (std::size_t i = 0; i < values.size(); ++i) os << i << ',' << svg::number(values[i]) << '\n';
    os << "#argmax," << argmax << '\n';
    text = os.str();
  } else {
    ordered_json doc;
    doc["model"] = g.name;
    doc["engine"] = cfg.engine;
    doc["mode"] = cfg.mode;
    doc["input"] = cfg.input.empty() ? "random:" + std::to_string(cfg.seed) : cfg.input;
    doc["probabilities"] = std::vector<double>(values.begin(), values.end());
    doc["argmax"] = argmax;
    if (stats) {
      ordered_json c;
      c["ii_cycles"] = stats->ii;
      c["latency_cycles"] = stats->latency_cycles;
      c["latency_us"] = stats->latency_us;
      ordered_json layers = ordered_json::array();
      for (const auto& l : stats->layers) {
        layers.push_back({{"layer", l.layer},
                          {"items_in", l.items_in},
                          {"padding_items", l.padding_items},
                          {"items_out", l.items_out},
                          {"reuse", l.reuse},
                          {"consumption_cycles", l.consumption_cycles},
                          {"drain_cycles", l.drain_cycles},
                          {"window_capacity", l.window_capacity},
                          {"window_peak", l.window_peak},
                          {"instruction_entries", l.instruction_entries},
                          {"compressed", l.compressed}});
      }
      c["layers"] = std::move(layers);
      doc["cycles"] = std::move(c);
    }
    text = doc.dump(2) + "\n";
  }
  emit(cfg, "prediction." + cfg.format, text, out);
  if (stats && !cfg.out.empty()) out << stats_table(*stats);
  return kOk;
}

int cmd_verify(const RunConfig& cfg, std::size_t trials, bool inject_fault, std::ostream& out, std::ostream& err) {
  verify::VerifyOptions vo;
  vo.trials = trials;
  vo.seed = cfg.seed;
  vo.mode = arith_mode_from_string(cfg.mode);
  vo.scheduling = stream::scheduling_mode_from_string(cfg.scheduling);
  vo.inject_fault = inject_fault;
  const verify::VerifyReport report =
      cfg.model.empty() ? verify::run_verification(vo) : verify::run_verification(prepare(cfg), vo);
  emit(cfg, "verify." + std::string(cfg.format == "json" ? "json" : "txt"),
       cfg.format == "json" ? verify::report_json(report) : verify::report_text(report), out);
  if (!report.ok()) {
    err << "verification failed: " << report.mismatches << " mismatches, first failing seed "
        << *report.first_failing_seed << '\n';
    return kVerificationFailure;
  }
  return kOk;
}

int cmd_prune(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.sparsity >= 0.0 && cfg.sparsity < 1.0)) throw std::invalid_argument("--sparsity must be in [0, 1)");
  RunConfig load = cfg;
  load.sparsity = 0.0;
  auto result = compress::prune_magnitude(prepare(load), cfg.sparsity, compress::prune_scope_from_string(cfg.scope));
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    const std::string stem = result.graph.name + "_pruned";
    save_model(result.graph, fs::path(cfg.out) / (stem + ".json"), fs::path(cfg.out) / (stem + ".bin"));
    out << "wrote " << (fs::path(cfg.out) / (stem + ".json")).string() << '\n';
  }
  const bool csv = cfg.format == "csv";
  emit(cfg, csv ? "sparsity.csv" : "sparsity.json",
       csv ? compress::sparsity_csv(result.report) : compress::sparsity_json(result.report), out);
  return kOk;
}

int cmd_quantize(const RunConfig& cfg, std::ostream& out) {
  if (cfg.precision.empty()) throw std::invalid_argument("quantize requires --precision");
  const ModelGraph g = prepare(cfg);
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    const std::string stem = g.name + "_quantized";
    save_model(g, fs::path(cfg.out) / (stem + ".json"), fs::path(cfg.out) / (stem + ".bin"));
    out << "wrote " << (fs::path(cfg.out) / (stem + ".json")).string() << '\n';
  }
  ordered_json doc;
  doc["model"] = g.name;
  doc["input_precision"] = g.input_format.to_string();
  ordered_json layers = ordered_json::array();
  for (const auto& layer : g.layers) {
    ordered_json j;
    j["layer"] = layer.name;
    j["kind"] = to_string(layer.kind);
    if (layer.has_parameters()) {
      j["weight_precision"] = layer.weight_format.to_string();
      j["quantizer"] = fx::to_string(layer.quantizer.kind);
    }
    j["output_precision"] = layer.output_format.to_string();
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  emit(cfg, "quantized.json", doc.dump(2) + "\n", out);
  return kOk;
}

int cmd_profile(const RunConfig& cfg, std::size_t probes, std::ostream& out) {
  if (probes == 0) throw std::invalid_argument("--probes must be >= 1");
  const ModelGraph g = prepare(cfg);
  std::vector<Tensor> probe;
  for (std::size_t i = 0; i < probes; ++i) probe.push_back(scaled(random_image(g.input_shape, cfg.seed + i)));
  const auto p = compress::profile(g, probe, arith_mode_from_string(cfg.mode));
  if (cfg.format == "svg") {
    emit(cfg, "profile.svg", compress::profile_svg(p), out);
  } else if (cfg.format == "csv") {
    emit(cfg, "profile.csv", compress::profile_csv(p), out);
  } else {
    emit(cfg, "profile.json", compress::profile_json(p), out);
  }
  return kOk;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  const ModelGraph g = prepare(cfg);
  const auto report = estimate::estimate(g, estimate_options(cfg));
  emit(cfg, g.name + "_cost." + cfg.format, report_text(report, cfg.format), out);
  return kOk;
}

// Weight widths and reuse factors scanned by the sweep.
constexpr int kMaxSweepWidth = 16;
const std::vector<int> kSweepReuse{1, 2, 3, 4, 6};

/// Every parameterised layer gets <width, 1> weights; activations stay at <16,6>.
PrecisionConfig sweep_precision(const ModelGraph& g, int width) {
  PrecisionConfig c;
  c.default_format = fx::kDefaultFormat;
  for (const auto& layer : g.layers) {
    if (!layer.has_parameters()) continue;
    PrecisionEntry e;
    e.layer_name = layer.name;
    e.format = fx::FxFormat{width, 1};
    c.entries.push_back(std::move(e));
  }
  return c;
}

struct SweepPoint {
  int width = 0;
  int reuse = 0;
  estimate::CostReport report;
};

ordered_json sweep_trends(const std::vector<SweepPoint>& points) {
  const auto at = [&](int w, int r) -> const estimate::CostReport& {
    return std::find_if(points.begin(), points.end(), [&](const SweepPoint& p) { return p.width == w && p.reuse == r; })
        ->report;
  };
  bool energy_monotone = true, latency_increasing = true, latency_affine = true, dsp_nonincreasing = true,
       dsp_reuse_constant = true;
  for (int w = 2; w <= kMaxSweepWidth; ++w) {
    energy_monotone = energy_monotone && at(w, 1).total.energy_nj >= at(w - 1, 1).total.energy_nj;
  }
  for (int w = 1; w <= kMaxSweepWidth; ++w) {
    const auto& base = at(w, 1);
    const double slope = static_cast<double>(at(w, 2).latency_cycles - base.latency_cycles);
    for (std::size_t k = 1; k < kSweepReuse.size(); ++k) {
      const auto& prev = at(w, kSweepReuse[k - 1]);
      const auto& cur = at(w, kSweepReuse[k]);
      latency_increasing = latency_increasing && cur.latency_cycles > prev.latency_cycles;
      dsp_nonincreasing = dsp_nonincreasing && cur.total.dsp <= prev.total.dsp;
      const double expected = static_cast<double>(base.latency_cycles) + slope * (kSweepReuse[k] - 1);
      latency_affine = latency_affine && static_cast<double>(cur.latency_cycles) == expected;
    }
    if (w <= 10) continue;
    for (int r : kSweepReuse) {
      const auto& rep = at(w, r);
      for (std::size_t i = 0; i < rep.layers.size(); ++i) {
        const auto& l = rep.layers[i];
        const auto product = static_cast<long long>(l.dsp) * l.reuse_effective;
        const auto full = static_cast<long long>(base.layers[i].dsp);
        dsp_reuse_constant = dsp_reuse_constant && product >= full && product < full + l.reuse_effective;
      }
    }
  }
  ordered_json t;
  t["energy_nondecreasing_in_width"] = energy_monotone;
  t["latency_increasing_in_reuse"] = latency_increasing;
  t["latency_affine_in_reuse"] = latency_affine;
  t["dsp_nonincreasing_in_reuse"] = dsp_nonincreasing;
  t["dsp_times_reuse_constant_above_10_bits"] = dsp_reuse_constant;
  return t;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ModelGraph base = prepare(cfg);
  const auto options = estimate_options(cfg);
  std::vector<SweepPoint> points;
  for (int w = 1; w <= kMaxSweepWidth; ++w) {
    const ModelGraph q = compress::ptq(base, sweep_precision(base, w));
    for (int r : kSweepReuse) {
      ModelGraph g = q;
      for (auto& layer : g.layers) layer.reuse_factor = r;
      points.push_back({w, r, estimate::estimate(g, options)});
    }
  }

  std::ostringstream csv;
  csv << "width,reuse,energy_nj,ii_cycles,latency_cycles,latency_us,multipliers,dsp,lut,ff,bram\n";
  for (const auto& p : points) {
    const auto& r = p.report;
    csv << p.width << ',' << p.reuse << ',' << svg::number(r.total.energy_nj) << ',' << r.ii << ',' << r.latency_cycles
        << ',' << svg::number(r.latency_us) << ',' << r.total.multipliers << ',' << r.total.dsp << ',' << r.total.lut
        << ',' << r.total.ff << ',' << svg::number(r.total.bram) << '\n';
  }

  const ordered_json trends = sweep_trends(points);
  ordered_json summary;
  summary["model"] = base.name;
  summary["widths"] = {1, kMaxSweepWidth};
  summary["reuse_factors"] = kSweepReuse;
  summary["points"] = points.size();
  summary["trends"] = trends;
  const std::string summary_text = summary.dump(2) + "\n";

  if (cfg.out.empty()) {
    out << csv.str() << summary_text;
  } else {
    const std::string ext = cfg.format == "csv" ? "csv" : "json";
    RunConfig point_cfg = cfg;
    point_cfg.out = (fs::path(cfg.out) / "points").string();
    std::ostringstream quiet;
    for (const auto& p : points) {
      emit(point_cfg, "w" + std::to_string(p.width) + "_r" + std::to_string(p.reuse) + "." + ext,
           report_text(p.report, cfg.format), quiet);
    }
    emit(cfg, "sweep.csv", csv.str(), out);
    emit(cfg, "sweep_summary.json", summary_text, out);

    const auto series_over_width = [&](const std::string& label, int r, auto value) {
      svg::Series s{label, {}};
      for (const auto& p : points)
        if (p.reuse == r) s.points.emplace_back(p.width, value(p.report));
      return s;
    };
    const auto series_over_reuse = [&](const std::string& label, int w, auto value) {
      svg::Series s{label, {}};
      for (const auto& p : points)
        if (p.width == w) s.points.emplace_back(p.reuse, value(p.report));
      return s;
    };
    const auto energy = [](const estimate::CostReport& r) { return r.total.energy_nj; };
    const auto latency = [](const estimate::CostReport& r) { return static_cast<double>(r.latency_cycles); };
    const auto dsp = [](const estimate::CostReport& r) { return static_cast<double>(r.total.dsp); };
    const auto lut = [](const estimate::CostReport& r) { return static_cast<double>(r.total.lut); };

    emit(cfg, "energy_vs_width.svg",
         svg::line_chart("Energy vs weight width", "weight bits", "energy (nJ)",
                         {series_over_width("all R", 1, energy)}),
         out);
    std::vector<svg::Series> lat, dsps, luts;
    for (int w : {4, 8, 16}) {
      lat.push_back(series_over_reuse(std::to_string(w) + " bits", w, latency));
    }
    for (int w : {12, 14, 16}) dsps.push_back(series_over_reuse(std::to_string(w) + " bits", w, dsp));
    for (int r : kSweepReuse) luts.push_back(series_over_width("R=" + std::to_string(r), r, lut));
    emit(cfg, "latency_vs_reuse.svg", svg::line_chart("Latency vs reuse factor", "reuse factor", "cycles", lat), out);
    emit(cfg, "dsp_vs_reuse.svg", svg::line_chart("DSP vs reuse factor", "reuse factor", "DSP", dsps), out);
    emit(cfg, "lut_vs_width.svg", svg::line_chart("LUT vs weight width", "weight bits", "LUT", luts), out);
  }

  for (const auto& [name, ok] : trends.items()) {
    if (!ok.get<bool>()) {
      err << "trend check failed: " << name << '\n';
      return kVerificationFailure;
    }
  }
  return kOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw std::invalid_argument("synth requires --out");
  ModelGraph g = load_model(cfg.model, cfg.weights);
  g = synthesize_weights(std::move(g), cfg.seed);
  fs::create_directories(cfg.out);
  const fs::path manifest = fs::path(cfg.out) / (g.name + ".json");
  save_model(g, manifest, fs::path(cfg.out) / (g.name + ".bin"));
  out << "wrote " << manifest.string() << '\n';
  return kOk;
}

struct InstructionArgs {
  std::size_t height = 8, width = 8;
  int kernel = 3, stride = 1;
  std::string padding = "valid";
  bool no_compress = false;
};

int cmd_export_instructions(const RunConfig& cfg, const InstructionArgs& a, std::ostream& out) {
  if (a.kernel < 1 || a.kernel > stream::kMaxKernel) {
    throw std::invalid_argument("--kernel must be in [1, " + std::to_string(stream::kMaxKernel) + "]");
  }
  if (a.stride < 1) throw std::invalid_argument("--stride must be >= 1");
  Padding padding;
  if (a.padding == "valid") {
    padding = Padding::Valid;
  } else if (a.padding == "same") {
    padding = Padding::Same;
  } else {
    throw std::invalid_argument("--padding must be valid or same");
  }
  const auto ia = stream::build_instruction_array(a.height, a.width, a.kernel, a.stride, padding, !a.no_compress);
  emit(cfg, "instructions.json", stream::instruction_array_json(ia), out);
  return kOk;
}

// -- option wiring -------------------------------------------------------------

void add_model(CLI::App* cmd, RunConfig& cfg, bool required = true) {
  auto* opt = cmd->add_option("model", cfg.model, "Model manifest (JSON)");
  if (required) opt->required();
  opt->check(CLI::ExistingFile);
  cmd->add_option("--weights", cfg.weights, "Weight file overriding the manifest's weights_file");
}

void add_model_passes(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--precision", cfg.precision, "Precision config (JSON) applied by post-training quantization")
      ->check(CLI::ExistingFile);
  cmd->add_option("--sparsity", cfg.sparsity, "Magnitude-prune this fraction of weights first")
      ->check(CLI::Range(0.0, 0.999999));
  cmd->add_option("--scope", cfg.scope, "Pruning scope")->check(CLI::IsMember({"per-layer", "global"}));
  cmd->add_option("--reuse", cfg.reuse, "Reuse factor for every layer, or a JSON reuse config");
}

void add_engine(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--mode", cfg.mode, "Arithmetic")->check(CLI::IsMember({"real", "fixed"}));
  cmd->add_option("--scheduling", cfg.scheduling, "Stream engine scheduler")
      ->check(CLI::IsMember({"cooperative", "threaded"}));
}

void add_estimator(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--clock-mhz", cfg.clock_mhz, "Clock frequency")->check(CLI::PositiveNumber);
  cmd->add_option("--energy-table", cfg.energy_table, "Energy table (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--energy-mode", cfg.energy_mode, "Price operations as fixed point or float32")
      ->check(CLI::IsMember({"fixed", "float32"}));
  cmd->add_option("--device", cfg.device, "Device capacities (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--pipeline-depth", cfg.pipeline_depth, "Pipeline depth constant in cycles");
}

void add_output(CLI::App* cmd, RunConfig& cfg, std::map<CLI::App*, std::string>& format,
                std::vector<std::string> formats) {
  format[cmd] = formats.front();
  cmd->add_option("--format", format[cmd], "Output format")->check(CLI::IsMember(formats));
  cmd->add_option("--out", cfg.out, "Write outputs into this directory instead of stdout");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"streamcnn: streaming CNN inference engine, compression passes and cost estimator", "streamcnn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "streamcnn 0.1.0");

  RunConfig cfg;
  std::size_t trials = 100;
  std::size_t probes = 16;
  bool inject_fault = false;
  std::string profile_mode = "real";
  std::map<CLI::App*, std::string> formats;
  InstructionArgs ia;

  auto* run_cmd = app.add_subcommand("run", "Run inference on one input and write class probabilities");
  add_model(run_cmd, cfg);
  add_model_passes(run_cmd, cfg);
  add_engine(run_cmd, cfg);
  run_cmd->add_option("--engine", cfg.engine, "Engine")->check(CLI::IsMember({"direct", "stream"}));
  run_cmd->add_option("--input", cfg.input, "Input image: PNG, raw u8 or .f32; random when omitted");
  run_cmd->add_option("--clock-mhz", cfg.clock_mhz, "Clock frequency")->check(CLI::PositiveNumber);
  run_cmd->add_option("--pipeline-depth", cfg.pipeline_depth, "Pipeline depth constant in cycles");
  run_cmd->add_option("--seed", cfg.seed, "Seed for the random input");
  add_output(run_cmd, cfg, formats, {"json", "csv"});

  auto* verify_cmd = app.add_subcommand("verify", "Check the stream engine against the direct engine");
  add_model(verify_cmd, cfg, false);
  add_model_passes(verify_cmd, cfg);
  add_engine(verify_cmd, cfg);
  verify_cmd->add_option("--trials", trials, "Number of randomized trials")
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  verify_cmd->add_option("--seed", cfg.seed, "Seed of the first trial");
  verify_cmd->add_flag("--inject-fault", inject_fault, "Flip one instruction-mask bit (negative control)");
  add_output(verify_cmd, cfg, formats, {"text", "json"});

  auto* prune_cmd = app.add_subcommand("prune", "Magnitude-prune weights and report sparsity");
  add_model(prune_cmd, cfg);
  prune_cmd->add_option("--sparsity", cfg.sparsity, "Fraction of weights to zero")
      ->required()
      ->check(CLI::Range(0.0, 0.999999));
  prune_cmd->add_option("--scope", cfg.scope, "Pruning scope")->check(CLI::IsMember({"per-layer", "global"}));
  add_output(prune_cmd, cfg, formats, {"json", "csv"});

  auto* quantize_cmd = app.add_subcommand("quantize", "Apply a precision config to a model");
  add_model(quantize_cmd, cfg);
  quantize_cmd->add_option("--precision", cfg.precision, "Precision config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  add_output(quantize_cmd, cfg, formats, {"json"});

  auto* profile_cmd = app.add_subcommand("profile", "Weight and activation range profile");
  add_model(profile_cmd, cfg);
  add_model_passes(profile_cmd, cfg);
  profile_cmd->add_option("--mode", profile_mode, "Arithmetic")->check(CLI::IsMember({"real", "fixed"}));
  profile_cmd->add_option("--probes", probes, "Number of random probe inputs");
  profile_cmd->add_option("--seed", cfg.seed, "Seed of the first probe input");
  add_output(profile_cmd, cfg, formats, {"json", "csv", "svg"});

  auto* estimate_cmd = app.add_subcommand("estimate", "Weights, FLOPs, energy, latency and resource estimate");
  add_model(estimate_cmd, cfg);
  add_model_passes(estimate_cmd, cfg);
  add_estimator(estimate_cmd, cfg);
  add_output(estimate_cmd, cfg, formats, {"json", "csv"});

  auto* sweep_cmd = app.add_subcommand("sweep", "Cost estimates over weight widths 1..16 and R in {1,2,3,4,6}");
  add_model(sweep_cmd, cfg);
  sweep_cmd->add_option("--sparsity", cfg.sparsity, "Magnitude-prune this fraction of weights first")
      ->check(CLI::Range(0.0, 0.999999));
  sweep_cmd->add_option("--scope", cfg.scope, "Pruning scope")->check(CLI::IsMember({"per-layer", "global"}));
  add_estimator(sweep_cmd, cfg);
  add_output(sweep_cmd, cfg, formats, {"json", "csv"});

  auto* synth_cmd = app.add_subcommand("synth", "Write a copy of a model with seeded synthetic weights");
  add_model(synth_cmd, cfg);
  synth_cmd->add_option("--seed", cfg.seed, "Weight seed");
  synth_cmd->add_option("--out", cfg.out, "Output directory")->required();

  auto* export_cmd = app.add_subcommand("export-instructions", "Instruction mask array for one convolution geometry");
  export_cmd->add_option("--height", ia.height, "Input height")->check(CLI::PositiveNumber);
  export_cmd->add_option("--width", ia.width, "Input width")->check(CLI::PositiveNumber);
  export_cmd->add_option("--kernel", ia.kernel, "Kernel size");
  export_cmd->add_option("--stride", ia.stride, "Stride");
  export_cmd->add_option("--padding", ia.padding, "valid or same");
  export_cmd->add_flag("--no-compress", ia.no_compress, "Emit the full per-pixel array");
  export_cmd->add_option("--out", cfg.out, "Write outputs into this directory instead of stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  for (const auto& [cmd, format] : formats) {
    if (*cmd) cfg.format = format;
  }

  try {
    if (*run_cmd) return cmd_run(cfg, out);
    if (*verify_cmd) return cmd_verify(cfg, trials, inject_fault, out, err);
    if (*prune_cmd) return cmd_prune(cfg, out);
    if (*quantize_cmd) return cmd_quantize(cfg, out);
    if (*profile_cmd) {
      cfg.mode = profile_mode;
      return cmd_profile(cfg, probes, out);
    }
    if (*estimate_cmd) return cmd_estimate(cfg, out);
    if (*sweep_cmd) return cmd_sweep(cfg, out, err);
    if (*synth_cmd) return cmd_synth(cfg, out);
    if (*export_cmd) return cmd_export_instructions(cfg, ia, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace streamcnn::cli
