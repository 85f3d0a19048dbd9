#include "dosefind/pava.hpp"

#include <stdexcept>

namespace dosefind {

std::vector<double> pava(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) {
        throw std::invalid_argument("pava: values and weights differ in length");
    }
    struct Block {
        double mean;
        double weight;
        std::size_t count;
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(weights[i] > 0.0)) {
            throw std::invalid_argument("pava: weights must be positive");
        }
        blocks.push_back({values[i], weights[i], 1});
        // Merge backwards while the newest block violates monotonicity.
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
            Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            const double w = prev.weight + top.weight;
            prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / w;
            prev.weight = w;
            prev.count += top.count;
        }
    }
    std::vector<double> fit;
    fit.reserve(values.size());
    for (const Block& b : blocks) {
        fit.insert(fit.end(), b.count, b.mean);
    }
    return fit;
}

}  // namespace dosefind
