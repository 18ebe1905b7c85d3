#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedmt/tensor.hpp"

namespace fedmt {

// Names of the two weight blocks a model is partitioned into: the shared
// trunk that gets aggregated across nodes, and the per-task head that
// never leaves its node.
enum class Block { representation, task };

struct BlockPartition {
    std::vector<std::string> representation_keys;
    std::vector<std::string> task_keys;

    const std::vector<std::string>& keys(Block b) const {
        return b == Block::representation ? representation_keys : task_keys;
    }
    bool is_task_key(const std::string& name) const;
    void validate() const;  // throws IntegrityError on overlap
};

using GradientMap = std::map<std::string, Tensor>;

// Named, shaped weight tensors plus their block partition; the unit of
// exchange in the federation. Mutation always goes through copies.
struct ParameterSet {
    std::map<std::string, Tensor> entries;
    BlockPartition partition;

    bool has(const std::string& name) const { return entries.count(name) != 0; }
    const Tensor& at(const std::string& name) const;
    std::vector<std::string> names() const;
    bool same_entries(const ParameterSet& other) const { return entries == other.entries; }
};

// Restrict to one block. Originals are untouched; a key listed in the
// partition but missing from entries raises IntegrityError.
ParameterSet split(const ParameterSet& params, Block block);

// Overlay entries replace base entries by name; other entries unchanged.
// Unknown keys or dim mismatches raise errors.
ParameterSet merge(const ParameterSet& base, const ParameterSet& overlay);

}  // namespace fedmt
