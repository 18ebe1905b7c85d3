#include "fedmt/params.hpp"

#include <algorithm>

#include "fedmt/errors.hpp"

namespace fedmt {

bool BlockPartition::is_task_key(const std::string& name) const {
    return std::find(task_keys.begin(), task_keys.end(), name) != task_keys.end();
}

void BlockPartition::validate() const {
    std::set<std::string> rep(representation_keys.begin(), representation_keys.end());
    for (const auto& k : task_keys) {
        if (rep.count(k)) {
            throw IntegrityError("parameter '" + k + "' appears in both blocks");
        }
    }
}

const Tensor& ParameterSet::at(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) {
        throw IntegrityError("parameter '" + name + "' not present");
    }
    return it->second;
}

std::vector<std::string> ParameterSet::names() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& [k, v] : entries) out.push_back(k);
    return out;
}

ParameterSet split(const ParameterSet& params, Block block) {
    ParameterSet out;
    out.partition = params.partition;
    for (const auto& key : params.partition.keys(block)) {
        auto it = params.entries.find(key);
        if (it == params.entries.end()) {
            throw IntegrityError("partition key '" + key + "' missing from entries");
        }
        out.entries.emplace(key, it->second);
    }
    return out;
}

ParameterSet merge(const ParameterSet& base, const ParameterSet& overlay) {
    ParameterSet out = base;
    for (const auto& [key, tensor] : overlay.entries) {
        auto it = out.entries.find(key);
        if (it == out.entries.end()) {
            throw IntegrityError("overlay key '" + key + "' not present in base");
        }
        if (!it->second.same_dims(tensor)) {
            throw ShapeError("merge dims mismatch for '" + key + "': " +
                             it->second.dims_str() + " vs " + tensor.dims_str());
        }
        it->second = tensor;
    }
    return out;
}

}  // namespace fedmt
