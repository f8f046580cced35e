#include "qcast/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace qcast {

void Container::save(const std::string& path) const {
    std::ostringstream header;
    header << "QCASTBIN 1\n";
    for (const auto& [k, v] : meta) header << "meta " << k << " " << v << "\n";
    std::size_t offset = 0;
    for (const auto& [name, t] : tensors) {
        header << "tensor " << name << " " << t.ndim();
        for (auto d : t.shape) header << " " << d;
        header << " f64 " << offset << "\n";
        offset += t.numel() * sizeof(double);
    }
    header << "end\n";

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("container: cannot write " + path);
    const std::string h = header.str();
    out.write(h.data(), std::streamsize(h.size()));
    for (const auto& [name, t] : tensors)
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  std::streamsize(t.numel() * sizeof(double)));
    if (!out) throw std::runtime_error("container: write failed for " + path);
}

Container Container::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("container: cannot open " + path);

    Container c;
    std::string line;
    if (!std::getline(in, line) || line != "QCASTBIN 1")
        throw std::runtime_error("container: bad magic in " + path);

    struct Entry {
        std::string name;
        std::vector<std::size_t> shape;
        std::size_t offset;
    };
    std::vector<Entry> entries;
    while (std::getline(in, line)) {
        if (line == "end") break;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "meta") {
            std::string key;
            ls >> key;
            std::string value;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            c.meta[key] = value;
        } else if (kind == "tensor") {
            Entry e;
            std::size_t ndim;
            ls >> e.name >> ndim;
            e.shape.resize(ndim);
            for (auto& d : e.shape) ls >> d;
            std::string dtype;
            ls >> dtype >> e.offset;
            if (!ls || dtype != "f64")
                throw std::runtime_error("container: bad tensor line: " + line);
            entries.push_back(std::move(e));
        } else {
            throw std::runtime_error("container: bad header line: " + line);
        }
    }
    if (line != "end")
        throw std::runtime_error("container: truncated header in " + path);

    const std::streampos payload_start = in.tellg();
    for (const auto& e : entries) {
        Tensor t(e.shape);
        in.seekg(payload_start + std::streamoff(e.offset));
        in.read(reinterpret_cast<char*>(t.data.data()),
                std::streamsize(t.numel() * sizeof(double)));
        if (!in) throw std::runtime_error("container: truncated payload in " + path);
        c.tensors.emplace(e.name, std::move(t));
    }
    return c;
}

const Tensor& Container::get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end())
        throw std::runtime_error("container: missing tensor " + name);
    return it->second;
}

const std::string& Container::get_meta(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end())
        throw std::runtime_error("container: missing meta " + key);
    return it->second;
}

}  // namespace qcast
