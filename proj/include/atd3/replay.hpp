#pragma once

#include "atd3/env.hpp"
#include "atd3/rng.hpp"

#include <cstddef>
#include <vector>

namespace atd3::agent {

struct Transition {
    env::StateWindow s;
    double a = 0.0;
    double r = 0.0;
    env::StateWindow s_next;
    bool terminal = false;
};

// Fixed-capacity circular store; once full, each insert evicts the oldest
// element. Sampling is uniform (with replacement) over what is stored.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        store_.reserve(capacity);
    }

    void push(Transition t) {
        if (store_.size() < capacity_) {
            store_.push_back(std::move(t));
        } else {
            store_[next_] = std::move(t);
            next_ = (next_ + 1) % capacity_;
        }
        ++inserted_;
    }

    std::size_t size() const { return store_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t total_inserted() const { return inserted_; }

    const Transition& at(std::size_t i) const { return store_[i]; }

    // i-th oldest currently stored transition (0 = oldest)
    const Transition& oldest(std::size_t i = 0) const {
        return store_[(next_ + i) % store_.size()];
    }

    void sample_indices(Rng& rng, std::size_t count, std::vector<std::size_t>& out) const {
        out.resize(count);
        for (std::size_t i = 0; i < count; ++i)
            out[i] = static_cast<std::size_t>(rng.below(store_.size()));
    }

private:
    std::size_t capacity_;
    std::vector<Transition> store_;
    std::size_t next_ = 0;      // overwrite cursor once full
    std::size_t inserted_ = 0;
};

}  // namespace atd3::agent
