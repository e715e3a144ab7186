#include "bgnn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace bgnn::model {

namespace {

constexpr char kMagic[8] = {'B', 'G', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw ContractError("checkpoint: truncated file");
    return v;
}

void put_net(std::ostream& os, const ad::DenseNet& net) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.layers.size()));
    for (const ad::DenseLayer& l : net.layers) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.rows()));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.cols()));
        put<std::uint8_t>(os, static_cast<std::uint8_t>(l.act));
    }
    for (const ad::DenseLayer& l : net.layers) {
        os.write(reinterpret_cast<const char*>(l.W.data()),
                 static_cast<std::streamsize>(l.W.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(l.b.data()),
                 static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    }
}

ad::DenseNet get_net(std::istream& is) {
    const std::uint32_t layer_count = get<std::uint32_t>(is);
    if (layer_count == 0 || layer_count > 64) throw ContractError("checkpoint: bad layer count");
    ad::DenseNet net;
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        const int in = static_cast<int>(get<std::uint32_t>(is));
        const int out = static_cast<int>(get<std::uint32_t>(is));
        const std::uint8_t act = get<std::uint8_t>(is);
        if (in < 1 || out < 1 || act > 3) throw ContractError("checkpoint: bad layer header");
        net.layers.push_back({ad::Tensor(in, out), ad::Tensor(1, out), static_cast<ad::Act>(act)});
    }
    for (ad::DenseLayer& l : net.layers) {
        is.read(reinterpret_cast<char*>(l.W.data()),
                static_cast<std::streamsize>(l.W.size() * sizeof(double)));
        is.read(reinterpret_cast<char*>(l.b.data()),
                static_cast<std::streamsize>(l.b.size() * sizeof(double)));
        if (!is) throw ContractError("checkpoint: truncated weights");
    }
    return net;
}

} // namespace

void save_checkpoint(const std::string& path, const BgnnParams& params) {
    params.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ContractError("checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(os, kVersion);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(params.mode));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(params.msg_dim));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(params.iterations));
    put<std::uint8_t>(os, 3);
    put_net(os, params.user_net);
    put_net(os, params.antenna_net);
    put_net(os, params.decision_net);
    if (!os) throw ContractError("checkpoint: write failed for " + path);
}

BgnnParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ContractError("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw ContractError("checkpoint: bad magic");
    if (get<std::uint32_t>(is) != kVersion) throw ContractError("checkpoint: unsupported version");
    BgnnParams params;
    const std::uint8_t mode = get<std::uint8_t>(is);
    if (mode > 1) throw ContractError("checkpoint: bad utility mode");
    params.mode = static_cast<beam::Utility>(mode);
    params.msg_dim = static_cast<int>(get<std::uint32_t>(is));
    params.iterations = static_cast<int>(get<std::uint32_t>(is));
    if (get<std::uint8_t>(is) != 3) throw ContractError("checkpoint: unexpected network count");
    params.user_net = get_net(is);
    params.antenna_net = get_net(is);
    params.decision_net = get_net(is);
    params.validate();
    return params;
}

} // namespace bgnn::model
