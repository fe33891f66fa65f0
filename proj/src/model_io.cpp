#include "promissing/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "promissing/errors.hpp"
#include "text_util.hpp"

namespace promissing {

namespace {

std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double unhex(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw IoError("bad number '" + s + "' in model file");
  return v;
}

std::size_t to_size(const std::string& s) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw IoError("bad integer '" + s + "' in model file");
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw IoError("bad integer '" + s + "' in model file");
  }
}

void write_block(std::ostringstream& out, NodeId id, const char* tag, std::size_t rows,
                 std::size_t cols, std::span<const double> values) {
  out << "param " << id << ' ' << tag << ' ' << rows << ' ' << cols;
  for (const double v : values) out << ' ' << hex(v);
  out << '\n';
}

}  // namespace

std::string serialize_network(const Network& net) {
  std::ostringstream out;
  out << "promissing-model " << kModelFormatVersion << '\n';
  const auto& nodes = net.nodes();
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const auto& n = nodes[id];
    out << "node " << id << " type=" << to_string(n.type) << " name=" << n.name << " inputs=";
    for (std::size_t i = 0; i < n.inputs.size(); ++i) out << (i ? "," : "") << n.inputs[i];
    out << " width=" << n.width;
    if (n.type == NodeType::kDropout) out << " rate=" << hex(n.rate);
    if (n.type == NodeType::kLayer) {
      out << " kind=" << to_string(n.layer.kind) << " mode=" << to_string(n.layer.mode)
          << " transfer=" << to_string(n.layer.transfer) << " units=" << n.layer.units();
    }
    out << '\n';
  }
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const auto& n = nodes[id];
    if (n.type != NodeType::kLayer) continue;
    const auto& l = n.layer;
    write_block(out, id, "W", l.units(), l.inputs(), l.weights.flat());
    write_block(out, id, "b", l.units(), 1, l.bias);
    if (l.has_compensatory()) write_block(out, id, "wc", l.units(), 1, l.compensatory);
  }
  for (const auto& h : net.loss_heads()) {
    out << "head " << h.node << ' ' << to_string(h.kind) << ' ' << hex(h.weight) << '\n';
  }
  out << "output " << net.output() << '\n';
  return out.str();
}

Network deserialize_network(const std::string& text) {
  const auto lines = detail::lines_of(text);
  if (lines.empty() || lines[0] != "promissing-model " + std::to_string(kModelFormatVersion)) {
    throw IoError("not a promissing model file (version " +
                  std::to_string(kModelFormatVersion) + " expected)");
  }
  Network net;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::istringstream in(lines[ln]);
    std::string tag;
    in >> tag;
    if (tag == "node") {
      std::string id_text;
      in >> id_text;
      if (to_size(id_text) != net.nodes().size()) throw IoError("node ids out of order");
      std::map<std::string, std::string> kv;
      std::string tok;
      while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw IoError("bad node token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
      const auto type = parse_node_type(kv.at("type"));
      std::vector<NodeId> inputs;
      if (!kv["inputs"].empty()) {
        for (const auto& s : detail::split(kv["inputs"], ',')) inputs.push_back(to_size(s));
      }
      const std::size_t width = to_size(kv.at("width"));
      switch (type) {
        case NodeType::kInput:
          net.add_input(kv.at("name"), width);
          break;
        case NodeType::kDropout:
          net.add_dropout(inputs.at(0), unhex(kv.at("rate")), kv.at("name"));
          break;
        case NodeType::kConcat:
          net.add_concat(inputs, kv.at("name"));
          break;
        case NodeType::kLayer: {
          const auto kind = parse_layer_kind(kv.at("kind"));
          const auto transfer = parse_transfer(kv.at("transfer"));
          const std::size_t units = to_size(kv.at("units"));
          const std::size_t in_width = net.nodes().at(inputs.at(0)).width;
          Layer l = kind == LayerKind::kDense
                        ? Layer::dense(in_width, units, transfer)
                        : Layer::nan_dense(in_width, units, transfer, parse_nan_mode(kv.at("mode")));
          net.add_layer(inputs.at(0), std::move(l), kv.at("name"));
          break;
        }
      }
    } else if (tag == "param") {
      std::string id_s, which, rows_s, cols_s;
      in >> id_s >> which >> rows_s >> cols_s;
      const NodeId id = to_size(id_s);
      auto& nodes = net.mutable_nodes();
      if (id >= nodes.size() || nodes[id].type != NodeType::kLayer) {
        throw IoError("param line refers to a non-layer node");
      }
      auto& l = nodes[id].layer;
      std::span<double> dst;
      if (which == "W") {
        dst = l.weights.flat();
      } else if (which == "b") {
        dst = l.bias;
      } else if (which == "wc") {
        dst = l.compensatory;
      } else {
        throw IoError("unknown parameter block '" + which + "'");
      }
      if (to_size(rows_s) * to_size(cols_s) != dst.size()) throw IoError("parameter shape mismatch");
      std::string v;
      std::size_t c = 0;
      while (in >> v) {
        if (c >= dst.size()) throw IoError("too many parameter values");
        dst[c++] = unhex(v);
      }
      if (c != dst.size()) throw IoError("too few parameter values");
    } else if (tag == "head") {
      std::string id_s, kind, weight;
      in >> id_s >> kind >> weight;
      net.add_loss_head(to_size(id_s), parse_loss_kind(kind), unhex(weight));
    } else if (tag == "output") {
      std::string id_s;
      in >> id_s;
      net.set_output(to_size(id_s));
    } else {
      throw IoError("unknown model line '" + tag + "'");
    }
  }
  net.validate();
  return net;
}

void save_network(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_network(net);
}

Network load_network(const std::filesystem::path& path) {
  return deserialize_network(detail::read_file(path.string()));
}

}  // namespace promissing
