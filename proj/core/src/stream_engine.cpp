#include "streamcnn/stream_engine.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

namespace streamcnn::stream {

std::string to_string(SchedulingMode mode) { return mode == SchedulingMode::Cooperative ? "cooperative" : "threaded"; }

SchedulingMode scheduling_mode_from_string(const std::string& s) {
  if (s == "cooperative") return SchedulingMode::Cooperative;
  if (s == "threaded") return SchedulingMode::Threaded;
  throw std::invalid_argument("unknown scheduling mode '" + s + "' (expected cooperative or threaded)");
}

std::vector<StreamItem> to_stream(const Tensor& x) {
  std::vector<StreamItem> items;
  if (x.rank() != 3) {
    items.emplace_back(x.storage());
    return items;
  }
  const std::size_t C = x.channels();
  items.reserve(x.height() * x.width());
  for (std::size_t i = 0; i < x.size(); i += C) {
    items.emplace_back(std::vector<double>(x.storage().begin() + static_cast<std::ptrdiff_t>(i),
                                           x.storage().begin() + static_cast<std::ptrdiff_t>(i + C)));
  }
  return items;
}

Tensor from_stream(const std::vector<StreamItem>& items, const Shape& shape) {
  std::vector<double> data;
  data.reserve(element_count(shape));
  for (const auto& item : items) data.insert(data.end(), item.values().begin(), item.values().end());
  if (data.size() != element_count(shape)) {
    throw StreamError("stream carried " + std::to_string(data.size()) + " values, expected " +
                      std::to_string(element_count(shape)) + " for shape " + shape_to_string(shape));
  }
  return Tensor(shape, std::move(data));
}

namespace {

class Task {
 public:
  virtual ~Task() = default;
  /// One unit of work; false when blocked or finished.
  virtual bool step() = 0;
  virtual bool done() const = 0;
  virtual std::string waiting_on() const = 0;
};

class SourceTask : public Task {
 public:
  SourceTask(std::vector<StreamItem> items, FifoChannel* out) : items_(std::move(items)), out_(out) {}
  bool step() override {
    if (next_ == items_.size() || !out_->try_push(items_[next_])) return false;
    ++next_;
    return true;
  }
  bool done() const override { return next_ == items_.size(); }
  std::string waiting_on() const override { return out_->name(); }

 private:
  std::vector<StreamItem> items_;
  FifoChannel* out_;
  std::size_t next_ = 0;
};

class SinkTask : public Task {
 public:
  SinkTask(FifoChannel* in, std::size_t expected_values) : in_(in), expected_(expected_values) {}
  bool step() override {
    if (done()) return false;
    StreamItem item;
    if (!in_->try_pop(item)) return false;
    values_ += item.size();
    items_.push_back(std::move(item));
    return true;
  }
  bool done() const override { return values_ >= expected_; }
  std::string waiting_on() const override { return in_->name(); }
  const std::vector<StreamItem>& items() const { return items_; }

 private:
  FifoChannel* in_;
  std::size_t expected_;
  std::size_t values_ = 0;
  std::vector<StreamItem> items_;
};

/// Common shell: one input item in, at most one output item pending.
class LayerTask : public Task {
 public:
  LayerTask(const Layer& layer, Shape in_shape, ArithMode mode, fx::FxFormat in_format, FifoChannel* in,
            FifoChannel* out)
      : layer_(layer), in_shape_(std::move(in_shape)), mode_(mode), in_format_(in_format), in_(in), out_(out) {
    stats_.layer = layer.name;
  }

  bool step() override {
    if (pending_) {
      if (!out_->try_push(*pending_)) return false;
      pending_.reset();
      ++stats_.items_out;
      return true;
    }
    if (exhausted()) return false;
    StreamItem item;
    if (!fetch(item)) return false;
    process(item);
    if (exhausted()) finish();
    return true;
  }

  bool done() const override { return exhausted() && !pending_; }
  std::string waiting_on() const override { return pending_ ? out_->name() : in_->name(); }
  const CycleStats& stats() const { return stats_; }

 protected:
  // Default input side: pop from the input FIFO until `expected_items_` are read.
  virtual bool fetch(StreamItem& item) {
    if (!in_->try_pop(item)) return false;
    ++stats_.items_in;
    return true;
  }
  virtual bool exhausted() const { return stats_.items_in >= expected_items_; }
  virtual void process(const StreamItem& item) = 0;
  virtual void finish() {}
  void emit(std::vector<double> values) { pending_.emplace(std::move(values)); }

  const Layer& layer_;
  Shape in_shape_;
  ArithMode mode_;
  fx::FxFormat in_format_;
  FifoChannel* in_;
  FifoChannel* out_;
  std::optional<StreamItem> pending_;
  std::size_t expected_items_ = 0;
  CycleStats stats_;
};

class ConvTask : public LayerTask {
 public:
  ConvTask(const Layer& layer, const Shape& in_shape, ArithMode mode, fx::FxFormat in_format, FifoChannel* in,
           FifoChannel* out, InstructionArray ia, std::optional<std::size_t> capacity,
           std::optional<FaultInjection> fault)
      : LayerTask(layer, in_shape, mode, in_format, in, out),
        ia_(std::move(ia)),
        geo_(ia_.geometry),
        mv_(layer, static_cast<std::size_t>(layer.kernel_size * layer.kernel_size) * in_shape.back(), in_format, mode),
        zero_(std::vector<double>(in_shape.back(), 0.0)),
        fault_(fault) {
    if (geo_.height != in_shape[0] || geo_.width != in_shape[1]) {
      throw StreamError("layer '" + layer.name + "': instruction array built for a different input size");
    }
    const std::size_t cap = capacity.value_or(window_capacity(geo_.kernel, geo_.padded_width));
    for (int j = 0; j < geo_.kernel; ++j) {
      for (int k = 0; k < geo_.kernel; ++k) {
        windows_.emplace_back(layer.name + ".window[" + std::to_string(j) + "," + std::to_string(k) + "]", cap);
      }
    }
    expected_items_ = geo_.height * geo_.width;
    stats_.window_capacity = cap;
    stats_.instruction_entries = ia_.entry_count();
    stats_.compressed = ia_.compressed;
    column_.resize(mv_.terms());
  }

 protected:
  bool exhausted() const override { return position_ == geo_.padded_height * geo_.padded_width; }

  bool fetch(StreamItem& item) override {
    const std::size_t pv = position_ / geo_.padded_width, pu = position_ % geo_.padded_width;
    const bool padding = pv < geo_.pad_top || pv >= geo_.pad_top + geo_.height || pu < geo_.pad_left ||
                         pu >= geo_.pad_left + geo_.width;
    if (padding) {
      item = zero_;
      ++stats_.padding_items;
      return true;
    }
    return LayerTask::fetch(item);
  }

  void process(const StreamItem& item) override {
    const std::size_t pv = position_ / geo_.padded_width, pu = position_ % geo_.padded_width;
    ++position_;
    InstructionMask mask = ia_.lookup(pv, pu);
    if (fault_ && fault_->pv == pv && fault_->pu == pu) mask ^= InstructionMask{1} << fault_->bit;
    for (std::size_t b = 0; b < windows_.size(); ++b) {
      if (mask >> b & 1U) windows_[b].push(item);
    }
    if (!(mask & trigger_bit(geo_.kernel))) return;

    const std::size_t C = in_shape_.back();
    for (std::size_t b = 0; b < windows_.size(); ++b) {
      const StreamItem member = windows_[b].pop();
      std::copy(member.values().begin(), member.values().end(), column_.begin() + static_cast<std::ptrdiff_t>(b * C));
    }
    std::vector<double> y(mv_.outputs());
    mv_.apply(column_, y);
    emit(std::move(y));
  }

  void finish() override {
    for (const auto& w : windows_) {
      stats_.window_peak = std::max(stats_.window_peak, w.max_occupancy());
      if (!w.empty()) throw StreamError("layer '" + layer_.name + "': window FIFO '" + w.name() + "' not drained");
    }
  }

 private:
  InstructionArray ia_;
  ConvGeometry geo_;
  kernels::MatVec mv_;
  StreamItem zero_;
  std::optional<FaultInjection> fault_;
  std::vector<FifoChannel> windows_;
  std::vector<double> column_;
  std::size_t position_ = 0;
};

class PoolTask : public LayerTask {
 public:
  PoolTask(const Layer& layer, const Shape& in_shape, ArithMode mode, fx::FxFormat in_format, FifoChannel* in,
           FifoChannel* out, PoolLookup lookup)
      : LayerTask(layer, in_shape, mode, in_format, in, out),
        lookup_(std::move(lookup)),
        avg_(layer, static_cast<std::size_t>(layer.pool * layer.pool), in_format, mode),
        channels_(in_shape.back()) {
    expected_items_ = in_shape[0] * in_shape[1];
    const std::size_t out_w = in_shape[1] / static_cast<std::size_t>(layer.pool);
    init_ = layer.kind == LayerKind::MaxPool ? -std::numeric_limits<double>::infinity() : 0.0;
    partial_.assign(out_w, std::vector<double>(channels_, init_));
  }

 protected:
  void process(const StreamItem& item) override {
    const std::size_t pos = stats_.items_in - 1;
    const auto& re = lookup_.row_table[pos / in_shape_[1]];
    const auto& ce = lookup_.col_table[pos % in_shape_[1]];
    if (re.boundary || ce.boundary) return;
    auto& acc = partial_[ce.index];
    const bool is_max = layer_.kind == LayerKind::MaxPool;
    for (std::size_t c = 0; c < channels_; ++c) {
      const double xv = kernels::quantize_input(item[c], in_format_, mode_);
      acc[c] = is_max ? std::max(acc[c], xv) : avg_.add(acc[c], xv);
    }
    if (!(re.last && ce.last)) return;
    std::vector<double> y(channels_);
    for (std::size_t c = 0; c < channels_; ++c) {
      y[c] = is_max ? kernels::cast_output(acc[c], layer_, mode_) : avg_.finish(acc[c]);
    }
    std::fill(acc.begin(), acc.end(), init_);
    emit(std::move(y));
  }

 private:
  PoolLookup lookup_;
  kernels::Averager avg_;
  std::size_t channels_;
  double init_ = 0.0;
  std::vector<std::vector<double>> partial_;
};

/// Layers that need the whole input vector: dense, and softmax over a vector.
class GatherTask : public LayerTask {
 public:
  GatherTask(const Layer& layer, const Shape& in_shape, ArithMode mode, fx::FxFormat in_format, FifoChannel* in,
             FifoChannel* out, std::size_t items)
      : LayerTask(layer, in_shape, mode, in_format, in, out) {
    expected_items_ = items;
    if (layer.kind == LayerKind::Dense) mv_.emplace(layer, element_count(in_shape), in_format, mode);
    buffer_.reserve(element_count(in_shape));
  }

 protected:
  void process(const StreamItem& item) override {
    buffer_.insert(buffer_.end(), item.values().begin(), item.values().end());
  }

  void finish() override {
    if (buffer_.size() != element_count(in_shape_)) {
      throw StreamError("layer '" + layer_.name + "': gathered " + std::to_string(buffer_.size()) +
                        " values, expected " + std::to_string(element_count(in_shape_)));
    }
    std::vector<double> y;
    if (mv_) {
      y.resize(mv_->outputs());
      mv_->apply(buffer_, y);
    } else {
      for (double& v : buffer_) v = kernels::quantize_input(v, in_format_, mode_);
      y.resize(buffer_.size());
      kernels::softmax(buffer_, y, layer_, mode_);
    }
    emit(std::move(y));
  }

 private:
  std::optional<kernels::MatVec> mv_;
  std::vector<double> buffer_;
};

/// ReLU, scale/bias, flatten and per-pixel softmax.
class ElementwiseTask : public LayerTask {
 public:
  ElementwiseTask(const Layer& layer, const Shape& in_shape, ArithMode mode, fx::FxFormat in_format,
                  FifoChannel* in, FifoChannel* out, std::size_t items)
      : LayerTask(layer, in_shape, mode, in_format, in, out), channels_(in_shape.back()) {
    expected_items_ = items;
    if (layer.kind == LayerKind::ScaleBias) affine_.emplace(layer, in_format, mode);
  }

 protected:
  void process(const StreamItem& item) override {
    std::vector<double> y(item.size());
    switch (layer_.kind) {
      case LayerKind::ReLU:
        for (std::size_t i = 0; i < y.size(); ++i) {
          y[i] = kernels::cast_output(std::max(kernels::quantize_input(item[i], in_format_, mode_), 0.0), layer_, mode_);
        }
        break;
      case LayerKind::ScaleBias:
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = affine_->apply(item[i], (offset_ + i) % channels_);
        break;
      case LayerKind::Softmax: {
        std::vector<double> x(item.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = kernels::quantize_input(item[i], in_format_, mode_);
        kernels::softmax(x, y, layer_, mode_);
        break;
      }
      default:
        for (std::size_t i = 0; i < y.size(); ++i) {
          y[i] = kernels::cast_output(kernels::quantize_input(item[i], in_format_, mode_), layer_, mode_);
        }
        break;
    }
    offset_ += item.size();
    emit(std::move(y));
  }

 private:
  std::size_t channels_;
  std::size_t offset_ = 0;
  std::optional<kernels::ChannelAffine> affine_;
};

struct Pipeline {
  std::vector<std::unique_ptr<FifoChannel>> channels;
  std::vector<std::unique_ptr<Task>> tasks;  // source, layers..., sink
  std::vector<LayerTask*> layers;
  SinkTask* sink = nullptr;
};

[[noreturn]] void report_deadlock(const Pipeline& p) {
  for (const auto& t : p.tasks) {
    if (t->done()) continue;
    const auto buffer = t->waiting_on();
    throw DeadlockError("pipeline deadlock: no task can make progress; blocked on FIFO '" + buffer + "'", buffer);
  }
  throw DeadlockError("pipeline deadlock", "");
}

void run_cooperative(Pipeline& p) {
  for (;;) {
    bool progress = false, all_done = true;
    for (auto& t : p.tasks) {
      while (t->step()) progress = true;
      all_done = all_done && t->done();
    }
    if (all_done) return;
    if (!progress) report_deadlock(p);
  }
}

// One worker per task. Every FIFO access happens under one mutex; a worker
// that cannot progress sleeps until another task changes some state. If every
// unfinished worker is asleep at the same generation, the pipeline is stuck.
void run_threaded(Pipeline& p) {
  std::mutex m;
  std::condition_variable cv;
  std::size_t generation = 0, blocked = 0, running = p.tasks.size();
  bool stop = false, deadlock = false;
  std::exception_ptr error;

  const auto worker = [&](Task& task) {
    std::unique_lock lock(m);
    while (!stop) {
      bool progressed = false;
      try {
        progressed = task.step();
      } catch (...) {
        if (!error) error = std::current_exception();
        stop = true;
        cv.notify_all();
        break;
      }
      if (progressed) {
        ++generation;
        blocked = 0;
        cv.notify_all();
        continue;
      }
      if (task.done()) break;
      if (++blocked == running) {
        deadlock = stop = true;
        cv.notify_all();
        break;
      }
      const std::size_t seen = generation;
      cv.wait(lock, [&] { return stop || generation != seen; });
    }
    --running;
    ++generation;
    blocked = 0;
    cv.notify_all();
  };

  std::vector<std::thread> threads;
  threads.reserve(p.tasks.size());
  for (auto& t : p.tasks) threads.emplace_back(worker, std::ref(*t));
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
  if (deadlock) report_deadlock(p);
  for (const auto& t : p.tasks) {
    if (!t->done()) report_deadlock(p);
  }
}

void run_pipeline(Pipeline& p, SchedulingMode mode) {
  if (mode == SchedulingMode::Threaded) {
    run_threaded(p);
  } else {
    run_cooperative(p);
  }
}

std::size_t stream_item_count(const Shape& s) { return s.size() == 3 ? s[0] * s[1] : 1; }

FifoChannel* add_channel(Pipeline& p, std::string name, std::size_t capacity) {
  p.channels.push_back(std::make_unique<FifoChannel>(std::move(name), std::max<std::size_t>(capacity, 1)));
  return p.channels.back().get();
}

}  // namespace

LayerStreamResult conv2d_stream(const std::vector<StreamItem>& x, const Shape& input_shape, const Layer& layer,
                                const InstructionArray& ia, ArithMode mode, const fx::FxFormat& in_format) {
  if (input_shape.size() != 3 || x.size() != input_shape[0] * input_shape[1]) {
    throw StreamError("conv2d_stream: expected H*W items for input " + shape_to_string(input_shape));
  }
  Pipeline p;
  auto* in = add_channel(p, layer.name + ".in", x.size());
  const auto out_shape = layer_output_shape(layer, input_shape);
  auto* out = add_channel(p, "output", stream_item_count(out_shape));
  p.tasks.push_back(std::make_unique<SourceTask>(x, in));
  auto conv = std::make_unique<ConvTask>(layer, input_shape, mode, in_format, in, out, ia, std::nullopt, std::nullopt);
  auto* conv_ptr = conv.get();
  p.tasks.push_back(std::move(conv));
  auto sink = std::make_unique<SinkTask>(out, element_count(out_shape));
  auto* sink_ptr = sink.get();
  p.tasks.push_back(std::move(sink));
  run_cooperative(p);
  CycleStats stats = conv_ptr->stats();
  stats.consumption_cycles = timing::consumption_cycles(stats.items_in, 1);
  return {sink_ptr->items(), stats};
}

LayerStreamResult pool_stream(const std::vector<StreamItem>& x, const Shape& input_shape, const Layer& layer,
                              const PoolLookup& lookup, ArithMode mode, const fx::FxFormat& in_format) {
  if (input_shape.size() != 3 || x.size() != input_shape[0] * input_shape[1]) {
    throw StreamError("pool_stream: expected H*W items for input " + shape_to_string(input_shape));
  }
  Pipeline p;
  auto* in = add_channel(p, layer.name + ".in", x.size());
  const auto out_shape = layer_output_shape(layer, input_shape);
  auto* out = add_channel(p, "output", stream_item_count(out_shape));
  p.tasks.push_back(std::make_unique<SourceTask>(x, in));
  auto pool = std::make_unique<PoolTask>(layer, input_shape, mode, in_format, in, out, lookup);
  auto* pool_ptr = pool.get();
  p.tasks.push_back(std::move(pool));
  auto sink = std::make_unique<SinkTask>(out, element_count(out_shape));
  auto* sink_ptr = sink.get();
  p.tasks.push_back(std::move(sink));
  run_cooperative(p);
  CycleStats stats = pool_ptr->stats();
  stats.consumption_cycles = stats.items_in;
  return {sink_ptr->items(), stats};
}

StreamResult run_stream(const ModelGraph& g, const Tensor& x, ArithMode mode, const StreamOptions& options) {
  if (x.shape() != g.input_shape) {
    throw ShapeError("input shape " + shape_to_string(x.shape()) + " does not match the model input " +
                     shape_to_string(g.input_shape));
  }
  if (g.layers.empty()) return {x, {}};
  if (options.fault && (options.fault->layer >= g.layers.size() || g.layers[options.fault->layer].kind != LayerKind::Conv2D)) {
    throw StreamError("fault injection must target a convolution layer");
  }

  Tensor input = x;
  if (mode == ArithMode::Fixed) {
    for (double& v : input.values()) v = fx::quantize_value(v, g.input_format);
  }

  const auto items = timing::input_item_counts(g);
  Pipeline p;
  std::vector<FifoChannel*> links;
  for (const auto& layer : g.layers) links.push_back(add_channel(p, layer.name + ".in", options.channel_capacity));
  links.push_back(add_channel(p, "output", options.channel_capacity));

  p.tasks.push_back(std::make_unique<SourceTask>(to_stream(input), links.front()));
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const Layer& layer = g.layers[i];
    const Shape& in_shape = g.input_shapes[i];
    const auto fmt = g.input_format_of(i);
    FifoChannel* in = links[i];
    FifoChannel* out = links[i + 1];
    std::unique_ptr<LayerTask> task;
    switch (layer.kind) {
      case LayerKind::Conv2D: {
        auto ia = build_instruction_array(in_shape[0], in_shape[1], layer.kernel_size, layer.stride, layer.padding,
                                          options.compress);
        std::optional<FaultInjection> fault;
        if (options.fault && options.fault->layer == i) fault = options.fault;
        task = std::make_unique<ConvTask>(layer, in_shape, mode, fmt, in, out, std::move(ia), options.window_capacity,
                                          fault);
        break;
      }
      case LayerKind::MaxPool:
      case LayerKind::AvgPool:
        task = std::make_unique<PoolTask>(layer, in_shape, mode, fmt, in, out,
                                          build_pool_lookup(in_shape[0], in_shape[1], layer.pool));
        break;
      case LayerKind::Dense:
        task = std::make_unique<GatherTask>(layer, in_shape, mode, fmt, in, out, items[i]);
        break;
      case LayerKind::Softmax:
        if (in_shape.size() == 1) {
          task = std::make_unique<GatherTask>(layer, in_shape, mode, fmt, in, out, items[i]);
          break;
        }
        [[fallthrough]];
      default:
        task = std::make_unique<ElementwiseTask>(layer, in_shape, mode, fmt, in, out, items[i]);
        break;
    }
    p.layers.push_back(task.get());
    p.tasks.push_back(std::move(task));
  }
  auto sink = std::make_unique<SinkTask>(links.back(), element_count(g.output_shape()));
  p.sink = sink.get();
  p.tasks.push_back(std::move(sink));

  run_pipeline(p, options.scheduling);

  StreamResult result;
  result.output = from_stream(p.sink->items(), g.output_shape());
  std::size_t slowest = 0, drain = 0;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    CycleStats s = p.layers[i]->stats();
    s.reuse = timing::layer_reuse(g, i);
    s.consumption_cycles = timing::consumption_cycles(s.items_in, s.reuse);
    s.drain_cycles = timing::drain_cycles(g.layers[i], options.cycles);
    slowest = std::max(slowest, s.consumption_cycles);
    drain += s.drain_cycles;
    result.stats.layers.push_back(std::move(s));
  }
  result.stats.ii = slowest + options.cycles.pipeline_depth;
  result.stats.latency_cycles = result.stats.ii + drain;
  result.stats.latency_us = timing::cycles_to_us(result.stats.latency_cycles, options.clock_mhz);
  return result;
}

}  // namespace streamcnn::stream
