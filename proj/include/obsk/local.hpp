#pragma once

// In-process two-party execution: runs one callable per server on its own
// thread over a paired in-memory transport. An exception on either side
// closes both channels so the peer unblocks, and is rethrown to the caller.

#include <chrono>
#include <exception>
#include <functional>
#include <memory>
#include <thread>
#include <utility>

#include "obsk/engine.hpp"
#include "obsk/transport.hpp"

namespace obsk {

template <typename F1, typename F2>
void run_pair(InMemTransport& t1, InMemTransport& t2, F1&& f1, F2&& f2) {
  std::exception_ptr e1, e2;
  std::thread th1([&] {
    try {
      f1();
    } catch (...) {
      e1 = std::current_exception();
      t1.close();
      t2.close();
    }
  });
  std::thread th2([&] {
    try {
      f2();
    } catch (...) {
      e2 = std::current_exception();
      t1.close();
      t2.close();
    }
  });
  th1.join();
  th2.join();
  if (e1) std::rethrow_exception(e1);
  if (e2) std::rethrow_exception(e2);
}

// Paired engines over fresh in-memory transports; owns the transports and
// correlation sets for the lifetime of a test/bench session.
template <typename W>
struct LocalSession {
  std::unique_ptr<InMemTransport> t1, t2;
  CorrelationSet<W> c1, c2;
  std::unique_ptr<Engine<W>> e1, e2;

  LocalSession(DealerOutput<W> dealt, std::uint64_t seed,
               std::chrono::microseconds delay = std::chrono::microseconds(0))
      : c1(std::move(dealt.p1)), c2(std::move(dealt.p2)) {
    auto pair = InMemTransport::make_pair(delay);
    t1 = std::move(pair.first);
    t2 = std::move(pair.second);
    e1 = std::make_unique<Engine<W>>(Party::p1, *t1, c1, seed, seed * 2 + 1);
    e2 = std::make_unique<Engine<W>>(Party::p2, *t2, c2, seed, seed * 2 + 2);
  }

  template <typename F1, typename F2>
  void run(F1&& f1, F2&& f2) {
    run_pair(*t1, *t2, std::forward<F1>(f1), std::forward<F2>(f2));
  }
};

}  // namespace obsk
