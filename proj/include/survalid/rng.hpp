#pragma once

#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

namespace survalid {

// Counter-based random stream (splitmix64): every output is a hash of
// (key, counter), and child streams re-key by hashing in an extra word.
// Substreams keyed by (seed, scenario, replicate, trial, patient) therefore
// produce identical draws regardless of worker count or scheduling.
class RngStream {
  public:
    explicit RngStream(std::uint64_t key) : key_(key) {}

    // Fold a tuple of identifying words into a stream key.
    static RngStream keyed(std::initializer_list<std::uint64_t> words);

    // Derive an independent sub-stream identified by `word`.
    RngStream child(std::uint64_t word) const;

    std::uint64_t next_u64();

    // Uniform on the open interval (0,1); never returns 0 or 1.
    double uniform01();

    // Standard normal via the inverse-cdf transform (reproducible across platforms).
    double normal();

    // Exponential with the given rate; rate <= 0 yields +infinity.
    double exponential(double rate);

    // Uniform integer on [0, n); n >= 1.
    std::uint64_t below(std::uint64_t n);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Standard normal quantile (Acklam's rational approximation polished with one
// Halley step); |error| < 1e-13 over (0,1).
double normal_quantile(double p);

// Standard normal cdf.
double normal_cdf(double x);

}  // namespace survalid
