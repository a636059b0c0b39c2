#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace chainexit
{

//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * Output is a pure function of (key, counter); there is no mutable state, so
 * any (path, block, step) draw can be produced independently on any worker.
 */
class Philox4x32
{
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter generate(Counter ctr, Key key) noexcept
    {
        for (int round = 0; round < 10; ++round)
        {
            if (round > 0)
            {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            auto lo0 = static_cast<std::uint32_t>(p0);
            auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

//---------------------------------------------------------------------------//
/*!
 * Gaussian draws keyed by (master seed, path id, block, step).
 *
 * Each key tuple plus a chunk index yields one Philox block, i.e. two
 * standard normals via Box-Muller.
 */
class NormalStream
{
  public:
    NormalStream(std::uint64_t master_seed, std::uint64_t path_id) noexcept
        : path_id_(path_id)
    {
        std::uint64_t k = splitmix64(master_seed);
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    }

    //! Two independent N(0,1) values for (block, step, chunk).
    std::array<double, 2>
    pair(std::uint32_t block, std::uint64_t step, std::uint32_t chunk) const noexcept
    {
        Philox4x32::Counter ctr{
            static_cast<std::uint32_t>(step),
            (static_cast<std::uint32_t>(step >> 32) << 24) ^ (block << 16) ^ chunk,
            static_cast<std::uint32_t>(path_id_),
            static_cast<std::uint32_t>(path_id_ >> 32)};
        auto r = Philox4x32::generate(ctr, key_);
        double u1 = to_open_unit(r[0], r[1]);
        double u2 = to_open_unit(r[2], r[3]);
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    //! Fill \a out with normals for (block, step).
    template<class Span>
    void fill(std::uint32_t block, std::uint64_t step, Span&& out) const noexcept
    {
        std::size_t n = out.size();
        for (std::size_t i = 0; i < n; i += 2)
        {
            auto z = pair(block, step, static_cast<std::uint32_t>(i / 2));
            out[i] = z[0];
            if (i + 1 < n)
                out[i + 1] = z[1];
        }
    }

    //! Uniform on (0, 1] built from 53 random bits.
    static double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept
    {
        std::uint64_t bits = (std::uint64_t{hi} << 21) ^ (lo >> 11);
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

  private:
    Philox4x32::Key key_{};
    std::uint64_t path_id_;
};

//! Sequential uniforms on [0, 1) for diagnostic sampling, keyed by seed.
class UniformSampler
{
  public:
    explicit UniformSampler(std::uint64_t seed) noexcept
    {
        std::uint64_t k = splitmix64(seed ^ 0x5157a4d1c0ffeeull);
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    }

    double operator()() noexcept
    {
        if (used_ == 2)
        {
            Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                    static_cast<std::uint32_t>(counter_ >> 32),
                                    0u, 0x756e6966u};
            block_ = Philox4x32::generate(ctr, key_);
            ++counter_;
            used_ = 0;
        }
        std::uint32_t hi = block_[2 * used_];
        std::uint32_t lo = block_[2 * used_ + 1];
        ++used_;
        return NormalStream::to_open_unit(hi, lo) - 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * (*this)(); }

  private:
    Philox4x32::Key key_{};
    Philox4x32::Counter block_{};
    std::uint64_t counter_ = 0;
    int used_ = 2;
};

}  // namespace chainexit
