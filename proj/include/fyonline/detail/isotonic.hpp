#ifndef FYONLINE_DETAIL_ISOTONIC_HPP
#define FYONLINE_DETAIL_ISOTONIC_HPP

#include "../common.hpp"

#include <vector>

namespace fyo::detail {

/// Least-squares fit of a non-increasing sequence (pool adjacent violators).
inline Vector isotonic_nonincreasing(const Vector& s) {
    struct Block {
        double sum;
        Eigen::Index count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    blocks.reserve(static_cast<std::size_t>(s.size()));
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        blocks.push_back({s[i], 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
            Block top = blocks.back();
            blocks.pop_back();
            blocks.back().sum += top.sum;
            blocks.back().count += top.count;
        }
    }
    Vector out(s.size());
    Eigen::Index pos = 0;
    for (const Block& b : blocks) {
        out.segment(pos, b.count).setConstant(b.mean());
        pos += b.count;
    }
    return out;
}

}  // namespace fyo::detail

#endif
