#pragma once

#include <cstdint>
#include <vector>

#include "gbc/graph.hpp"

namespace gbc::detail {

/// Addressable binary max-heap over ids [0, n). Equal keys pop the smaller id
/// first, which keeps gain-ordered moves deterministic.
template <typename Key>
class IndexedMaxHeap {
 public:
  explicit IndexedMaxHeap(std::size_t n = 0) : pos_(n, kAbsent), key_(n) {}

  void resize(std::size_t n) {
    clear();
    pos_.assign(n, kAbsent);
    key_.assign(n, Key{});
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  bool contains(NodeId id) const { return pos_[id] != kAbsent; }
  NodeId top() const { return heap_.front(); }
  Key top_key() const { return key_[heap_.front()]; }
  Key key(NodeId id) const { return key_[id]; }

  void push(NodeId id, Key k) {
    key_[id] = k;
    pos_[id] = heap_.size();
    heap_.push_back(id);
    sift_up(heap_.size() - 1);
  }

  void update(NodeId id, Key k) {
    const Key old = key_[id];
    key_[id] = k;
    if (k > old) {
      sift_up(pos_[id]);
    } else {
      sift_down(pos_[id]);
    }
  }

  void erase(NodeId id) {
    const std::size_t i = pos_[id];
    const NodeId last = heap_.back();
    heap_.pop_back();
    pos_[id] = kAbsent;
    if (last == id) return;
    heap_[i] = last;
    pos_[last] = i;
    sift_up(i);
    sift_down(pos_[last]);
  }

  NodeId pop() {
    const NodeId id = heap_.front();
    erase(id);
    return id;
  }

  void clear() {
    for (NodeId id : heap_) pos_[id] = kAbsent;
    heap_.clear();
  }

 private:
  static constexpr std::size_t kAbsent = ~std::size_t{0};

  bool before(NodeId a, NodeId b) const {
    return key_[a] > key_[b] || (key_[a] == key_[b] && a < b);
  }

  void sift_up(std::size_t i) {
    while (i > 0) {
      const std::size_t parent = (i - 1) / 2;
      if (!before(heap_[i], heap_[parent])) break;
      swap_at(i, parent);
      i = parent;
    }
  }

  void sift_down(std::size_t i) {
    const std::size_t n = heap_.size();
    while (true) {
      std::size_t best = i;
      const std::size_t l = 2 * i + 1;
      const std::size_t r = l + 1;
      if (l < n && before(heap_[l], heap_[best])) best = l;
      if (r < n && before(heap_[r], heap_[best])) best = r;
      if (best == i) return;
      swap_at(i, best);
      i = best;
    }
  }

  void swap_at(std::size_t a, std::size_t b) {
    std::swap(heap_[a], heap_[b]);
    pos_[heap_[a]] = a;
    pos_[heap_[b]] = b;
  }

  std::vector<NodeId> heap_;
  std::vector<std::size_t> pos_;
  std::vector<Key> key_;
};

}  // namespace gbc::detail
