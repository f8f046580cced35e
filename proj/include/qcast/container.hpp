#pragma once

#include <map>
#include <string>
#include <vector>

#include "qcast/tensor.hpp"

namespace qcast {

// On-disk container shared by model checkpoints and windowed-dataset
// caches: a text header listing named tensors (shape, dtype, byte offset
// into the payload) plus free-form metadata, followed by raw
// little-endian float64 data. Layout:
//
//   QCASTBIN 1\n
//   meta <key> <value...>\n          (zero or more)
//   tensor <name> <ndim> <d0>..<dk> f64 <offset>\n   (zero or more)
//   end\n
//   <payload bytes>
//
// Offsets are relative to the first payload byte. Tensor names must be
// unique and contain no whitespace.
struct Container {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> meta;

    void save(const std::string& path) const;
    static Container load(const std::string& path);

    const Tensor& get(const std::string& name) const;
    const std::string& get_meta(const std::string& key) const;
};

}  // namespace qcast
