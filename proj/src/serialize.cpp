#include <json.hpp>

#include <array>
#include <cstring>
#include <sstream>

#include "tntopo/errors.hpp"
#include "tntopo/network.hpp"

// Format version 1:
//   { "version": 1,
//     "nodes":  [ { "id", "mode_labels", "shape", "data" } ... ],
//     "bonds":  [ { "label", "a", "b", "rank" } ... ],
//     "physical": { "<node id>": { "label", "dim" } ... } }
// "data" is base64 over little-endian IEEE doubles in row-major order; a
// plain JSON number array is accepted on input as well.

namespace tntopo {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const double* values, std::size_t count) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(values);
    const std::size_t len = count * sizeof(double);
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
        if (i + 1 < len) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
        if (i + 2 < len) chunk |= static_cast<std::uint32_t>(bytes[i + 2]);
        out.push_back(kAlphabet[(chunk >> 18) & 0x3f]);
        out.push_back(kAlphabet[(chunk >> 12) & 0x3f]);
        out.push_back(i + 1 < len ? kAlphabet[(chunk >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < len ? kAlphabet[chunk & 0x3f] : '=');
    }
    return out;
}

std::vector<double> base64_decode(const std::string& text, const std::string& where) {
    static const auto value_of = [] {
        std::array<int, 256> table;
        table.fill(-1);
        for (int i = 0; i < 64; ++i) table[static_cast<unsigned char>(kAlphabet[i])] = i;
        return table;
    }();

    if (text.size() % 4 != 0)
        throw ParseError(where + ": base64 payload length not a multiple of 4");
    std::vector<unsigned char> bytes;
    bytes.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=') {
                vals[k] = 0;
                ++pad;
            } else {
                vals[k] = value_of[static_cast<unsigned char>(c)];
                if (vals[k] < 0 || pad > 0)
                    throw ParseError(where + ": invalid base64 character");
            }
        }
        const std::uint32_t chunk = (static_cast<std::uint32_t>(vals[0]) << 18) |
                                    (static_cast<std::uint32_t>(vals[1]) << 12) |
                                    (static_cast<std::uint32_t>(vals[2]) << 6) |
                                    static_cast<std::uint32_t>(vals[3]);
        bytes.push_back(static_cast<unsigned char>((chunk >> 16) & 0xff));
        if (pad < 2) bytes.push_back(static_cast<unsigned char>((chunk >> 8) & 0xff));
        if (pad < 1) bytes.push_back(static_cast<unsigned char>(chunk & 0xff));
    }
    if (bytes.size() % sizeof(double) != 0)
        throw ParseError(where + ": payload is not a whole number of doubles");
    std::vector<double> out(bytes.size() / sizeof(double));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

} // namespace

std::string serialize(const TensorNetwork& net) {
    nlohmann::json doc;
    doc["version"] = 1;

    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, tensor] : net.nodes()) {
        nlohmann::json n;
        n["id"] = id;
        n["mode_labels"] = tensor.labels();
        n["shape"] = tensor.shape();
        n["data"] = base64_encode(tensor.data().data(), tensor.data().size());
        nodes.push_back(std::move(n));
    }
    doc["nodes"] = std::move(nodes);

    nlohmann::json bonds = nlohmann::json::array();
    for (const Bond& b : net.bonds()) {
        nlohmann::json e;
        e["label"] = b.label;
        e["a"] = b.a;
        e["b"] = b.b;
        e["rank"] = b.rank;
        bonds.push_back(std::move(e));
    }
    doc["bonds"] = std::move(bonds);

    nlohmann::json phys = nlohmann::json::object();
    for (const auto& [id, modes] : net.physical()) {
        if (modes.size() != 1)
            throw ArgumentError("serialize: node carries more than one physical mode");
        phys[std::to_string(id)] = {{"label", modes[0].label}, {"dim", modes[0].dim}};
    }
    doc["physical"] = std::move(phys);

    return doc.dump(2) + "\n";
}

TensorNetwork deserialize(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("json parse failed: ") + e.what());
    }

    try {
        if (!doc.contains("version") || !doc["version"].is_number_integer())
            throw ParseError("missing integer 'version'");
        if (doc["version"].get<int>() != 1)
            throw ParseError("unsupported format version " + doc["version"].dump());

        TensorNetwork net;

        std::map<NodeId, std::vector<PhysicalMode>> phys_by_node;
        if (!doc.contains("physical") || !doc["physical"].is_object())
            throw ParseError("missing 'physical' object");
        for (const auto& [key, val] : doc["physical"].items()) {
            NodeId id = 0;
            try {
                id = static_cast<NodeId>(std::stoul(key));
            } catch (...) {
                throw ParseError("physical: key '" + key + "' is not a node id");
            }
            phys_by_node[id].push_back(
                PhysicalMode{val.at("label").get<std::string>(), val.at("dim").get<std::int64_t>()});
        }

        if (!doc.contains("nodes") || !doc["nodes"].is_array())
            throw ParseError("missing 'nodes' array");
        std::size_t node_index = 0;
        for (const auto& n : doc["nodes"]) {
            const std::string where = "nodes[" + std::to_string(node_index++) + "]";
            const NodeId id = n.at("id").get<NodeId>();
            const auto labels = n.at("mode_labels").get<std::vector<std::string>>();
            const auto shape = n.at("shape").get<std::vector<std::int64_t>>();
            std::vector<double> data;
            if (n.at("data").is_string()) {
                data = base64_decode(n["data"].get<std::string>(), where);
            } else if (n.at("data").is_array()) {
                data = n["data"].get<std::vector<double>>();
            } else {
                throw ParseError(where + ": 'data' must be base64 text or a number array");
            }
            auto phys_it = phys_by_node.find(id);
            if (phys_it == phys_by_node.end())
                throw ParseError(where + ": node " + std::to_string(id) +
                                 " has no entry in 'physical'");
            DenseTensor tensor(labels, shape, std::move(data));
            net.add_node_with_id(id, std::move(tensor), phys_it->second);
        }

        if (!doc.contains("bonds") || !doc["bonds"].is_array())
            throw ParseError("missing 'bonds' array");
        std::size_t bond_index = 0;
        for (const auto& e : doc["bonds"]) {
            const std::string where = "bonds[" + std::to_string(bond_index++) + "]";
            const std::string label = e.at("label").get<std::string>();
            if (net.has_bond_label(label))
                throw ParseError(where + ": duplicate bond label '" + label + "'");
            net.add_bond(label, e.at("a").get<NodeId>(), e.at("b").get<NodeId>(),
                         e.at("rank").get<std::int64_t>());
        }

        const std::vector<Violation> problems = validate(net);
        if (!problems.empty()) {
            std::ostringstream msg;
            msg << "document describes an invalid network:";
            for (const Violation& v : problems) msg << " [" << v.code << "] " << v.message << ";";
            throw ParseError(msg.str());
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
}

} // namespace tntopo
