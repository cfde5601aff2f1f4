#include "dissipanet/rl/replay.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dissipanet/errors.hpp"

namespace dissipanet::rl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidParameter("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition tr) {
  if (!std::isfinite(tr.r)) throw InvalidParameter("ReplayBuffer: non-finite reward");
  if (data_.size() < capacity_) {
    data_.push_back(std::move(tr));
    return;
  }
  data_[head_] = std::move(tr);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size())
    throw InvalidParameter("ReplayBuffer: index " + std::to_string(i) + " out of range");
  return data_[(head_ + i) % data_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (n > data_.size())
    throw InvalidParameter("ReplayBuffer: cannot draw " + std::to_string(n) + " from " +
                           std::to_string(data_.size()));
  // Floyd's algorithm: n distinct slots without touching the whole buffer.
  const std::size_t total = data_.size();
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  for (std::size_t j = total - n; j < total; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng);
    const bool seen = std::find(chosen.begin(), chosen.end(), t) != chosen.end();
    chosen.push_back(seen ? j : t);
  }
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i : chosen) out.push_back(&data_[i]);
  return out;
}

}  // namespace dissipanet::rl
