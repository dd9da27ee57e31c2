#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace weaklabel::detail {

// Splits [0, count) into `shards` contiguous ranges and runs
// fn(shard, begin, end) for each, on separate threads when shards > 1.
// Shard boundaries depend only on (count, shards), so per-shard partial
// results combined in shard order are reproducible.
template <class Fn>
void for_each_shard(std::size_t count, unsigned shards, Fn&& fn) {
    shards = std::max(1u, std::min<unsigned>(shards, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    auto bounds = [&](unsigned s) { return count * s / shards; };
    if (shards == 1) {
        fn(0u, std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(shards);
    workers.reserve(shards);
    for (unsigned s = 0; s < shards; ++s) {
        workers.emplace_back([&, s] {
            try {
                fn(s, bounds(s), bounds(s + 1));
            } catch (...) {
                errors[s] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace weaklabel::detail
