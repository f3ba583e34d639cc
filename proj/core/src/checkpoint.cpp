#include "atcl/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace atcl {

namespace {
constexpr char kMagic[] = "ATCL1\n";
}

void save_checkpoint(const TransformerModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << kMagic;
    for (const auto& [name, t] : model.parameters()) {
        out << name;
        for (auto d : t->shape) out << ' ' << d;
        out << '\n';
    }
    out << "data\n";
    // doubles written verbatim; the build targets little-endian hosts
    for (const auto& [name, t] : model.parameters()) {
        (void)name;
        out.write(reinterpret_cast<const char*>(t->value.data()),
                  static_cast<std::streamsize>(t->value.size() * sizeof(double)));
    }
    if (!out) throw IoError("short write on checkpoint: " + path);
}

void load_checkpoint(TransformerModel& model, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string magic(6, '\0');
    in.read(magic.data(), 6);
    require(in && magic == kMagic, "checkpoint: bad magic in " + path);

    for (const auto& [name, t] : model.parameters()) {
        std::string line;
        require(static_cast<bool>(std::getline(in, line)),
                "checkpoint: truncated header in " + path);
        std::istringstream ss(line);
        std::string got_name;
        ss >> got_name;
        require(got_name == name,
                "checkpoint: parameter name mismatch, expected " + name + " got " + got_name);
        Shape shape;
        std::size_t d;
        while (ss >> d) shape.push_back(d);
        require(shape == t->shape, "checkpoint: shape mismatch for " + name);
    }
    std::string sep;
    require(static_cast<bool>(std::getline(in, sep)) && sep == "data",
            "checkpoint: missing data separator in " + path);
    for (const auto& [name, t] : model.parameters()) {
        in.read(reinterpret_cast<char*>(t->value.data()),
                static_cast<std::streamsize>(t->value.size() * sizeof(double)));
        require(static_cast<bool>(in), "checkpoint: truncated data for " + name);
    }
}

} // namespace atcl
