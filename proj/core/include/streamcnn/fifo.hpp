#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace streamcnn::stream {

class StreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bounded buffer overflowed, or no task could make progress.
class DeadlockError : public StreamError {
 public:
  DeadlockError(const std::string& message, std::string buffer)
      : StreamError(message), buffer_(std::move(buffer)) {}
  const std::string& buffer() const { return buffer_; }

 private:
  std::string buffer_;
};

/// One pixel's C channel values. Copies share the payload.
class StreamItem {
 public:
  StreamItem() = default;
  explicit StreamItem(std::vector<double> values)
      : data_(std::make_shared<const std::vector<double>>(std::move(values))) {}

  std::size_t size() const { return data_ ? data_->size() : 0; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  const std::vector<double>& values() const { return *data_; }

 private:
  std::shared_ptr<const std::vector<double>> data_;
};

/// Bounded FIFO with push/pop bookkeeping. Not internally synchronised; the
/// scheduler serialises access.
class FifoChannel {
 public:
  FifoChannel(std::string name, std::size_t capacity) : name_(std::move(name)), capacity_(capacity) {}

  const std::string& name() const { return name_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return queue_.size(); }
  bool empty() const { return queue_.empty(); }
  bool full() const { return queue_.size() >= capacity_; }

  std::size_t push_count() const { return pushes_; }
  std::size_t pop_count() const { return pops_; }
  std::size_t max_occupancy() const { return peak_; }

  bool try_push(StreamItem item) {
    if (full()) return false;
    queue_.push_back(std::move(item));
    ++pushes_;
    if (queue_.size() > peak_) peak_ = queue_.size();
    return true;
  }

  /// Push that treats a full buffer as a hardware deadlock.
  void push(StreamItem item) {
    if (!try_push(std::move(item))) {
      throw DeadlockError("FIFO '" + name_ + "' overflowed its capacity of " + std::to_string(capacity_), name_);
    }
  }

  bool try_pop(StreamItem& out) {
    if (queue_.empty()) return false;
    out = std::move(queue_.front());
    queue_.pop_front();
    ++pops_;
    return true;
  }

  StreamItem pop() {
    StreamItem item;
    if (!try_pop(item)) throw StreamError("internal error: pop from empty FIFO '" + name_ + "'");
    return item;
  }

 private:
  std::string name_;
  std::size_t capacity_;
  std::deque<StreamItem> queue_;
  std::size_t pushes_ = 0, pops_ = 0, peak_ = 0;
};

}  // namespace streamcnn::stream
