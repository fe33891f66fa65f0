#include "promissing/presets.hpp"

#include <algorithm>

#include "promissing/errors.hpp"
#include "text_util.hpp"

namespace promissing {

const char* to_string(FirstLayer f) {
  switch (f) {
    case FirstLayer::kDense: return "dense";
    case FirstLayer::kPromissing: return "promissing";
    case FirstLayer::kMPromissing: return "m_promissing";
  }
  return "?";
}

FirstLayer parse_first_layer(const std::string& text) {
  const auto t = detail::lower(text);
  if (t == "dense") return FirstLayer::kDense;
  if (t == "promissing") return FirstLayer::kPromissing;
  if (t == "m_promissing" || t == "mpromissing") return FirstLayer::kMPromissing;
  throw SpecError("unknown first-layer kind '" + text + "'");
}

namespace {

Layer first_layer(std::size_t inputs, std::size_t units, Transfer transfer, FirstLayer first) {
  switch (first) {
    case FirstLayer::kDense: return Layer::dense(inputs, units, transfer);
    case FirstLayer::kPromissing:
      return Layer::nan_dense(inputs, units, transfer, NanMode::kPromissing);
    case FirstLayer::kMPromissing:
      return Layer::nan_dense(inputs, units, transfer, NanMode::kMPromissing);
  }
  throw SpecError("unknown first-layer kind");
}

}  // namespace

Network xor_preset(std::size_t p, FirstLayer first) {
  if (p == 0) throw SpecError("xor preset needs at least one input");
  Network net;
  const auto in = net.add_input("x", p);
  const auto hidden = net.add_layer(in, first_layer(p, 4, Transfer::kTanh, first), "hidden");
  const auto out = net.add_layer(hidden, Layer::dense(4, 1, Transfer::kSigmoid), "output");
  net.add_loss_head(out, LossKind::kBinaryCrossEntropy);
  net.set_output(out);
  return net;
}

Network benchmark_preset(std::size_t p, Task task, FirstLayer first) {
  if (p == 0) throw SpecError("benchmark preset needs at least one input");
  const std::size_t h1 = (p + 1) / 2;
  Network net;
  const auto in = net.add_input("x", p);
  const auto a = net.add_layer(in, first_layer(p, h1, Transfer::kRelu, first), "hidden1");
  const auto b = net.add_layer(a, Layer::dense(h1, 2, Transfer::kRelu), "hidden2");
  const bool cls = task == Task::kClassification;
  const auto out = net.add_layer(
      b, Layer::dense(2, 1, cls ? Transfer::kSigmoid : Transfer::kLinear), "output");
  net.add_loss_head(out, cls ? LossKind::kBinaryCrossEntropy : LossKind::kMeanSquaredError);
  net.set_output(out);
  return net;
}

std::size_t default_representation_size(std::size_t width) {
  return std::clamp<std::size_t>((width + 1) / 2, 2, 10);
}

Network fusion_preset(const std::vector<FusionModality>& modalities, FirstLayer first,
                      const FusionOptions& options) {
  if (modalities.size() < 2) throw SpecError("fusion preset needs at least 2 modalities");
  Network net;
  std::vector<NodeId> representations;
  std::vector<NodeId> heads;
  for (const auto& m : modalities) {
    if (m.width == 0 || m.representation == 0) {
      throw SpecError("modality '" + m.name + "' needs positive widths");
    }
    const auto in = net.add_input(m.name, m.width);
    const auto drop_in = net.add_dropout(in, options.dropout, m.name + ".drop_in");
    const auto rep = net.add_layer(
        drop_in, first_layer(m.width, m.representation, options.representation_transfer, first),
        m.name + ".representation");
    const auto drop_rep = net.add_dropout(rep, options.dropout, m.name + ".drop_rep");
    const auto head = net.add_layer(drop_rep, Layer::dense(m.representation, 2, Transfer::kSoftmax),
                                    m.name + ".head");
    net.add_loss_head(head, LossKind::kCategoricalCrossEntropy, options.head_weight);
    representations.push_back(rep);
    heads.push_back(head);
  }
  std::vector<NodeId> merged = representations;
  merged.insert(merged.end(), heads.begin(), heads.end());
  const auto concat = net.add_concat(merged, "fusion_in");
  const auto drop_f = net.add_dropout(concat, options.dropout, "fusion.drop");
  const auto fusion = net.add_layer(
      drop_f, Layer::dense(net.nodes()[concat].width, options.fusion_units, Transfer::kRelu),
      "fusion");
  const auto drop_o = net.add_dropout(fusion, options.dropout, "output.drop");
  const auto out =
      net.add_layer(drop_o, Layer::dense(options.fusion_units, 2, Transfer::kSoftmax), "output");
  net.add_loss_head(out, LossKind::kCategoricalCrossEntropy, options.main_weight);
  net.set_output(out);
  return net;
}

Network build_network(const ArchitectureSpec& spec) {
  const auto& widths = spec.input_widths;
  if (spec.preset == "xor" || spec.preset == "benchmark") {
    if (widths.size() != 1) throw SpecError(spec.preset + " preset takes exactly one input");
    if (spec.preset == "xor") return xor_preset(widths[0], spec.first);
    return benchmark_preset(widths[0], spec.task, spec.first);
  }
  if (spec.preset == "fusion") {
    if (!spec.modality_names.empty() && spec.modality_names.size() != widths.size()) {
      throw SpecError("modality names do not match input count");
    }
    if (!spec.representation_sizes.empty() && spec.representation_sizes.size() != widths.size()) {
      throw SpecError("representation sizes do not match input count");
    }
    std::vector<FusionModality> mods;
    for (std::size_t m = 0; m < widths.size(); ++m) {
      mods.push_back({spec.modality_names.empty() ? "m" + std::to_string(m) : spec.modality_names[m],
                      widths[m],
                      spec.representation_sizes.empty() ? default_representation_size(widths[m])
                                                        : spec.representation_sizes[m]});
    }
    return fusion_preset(mods, spec.first, spec.fusion);
  }
  throw SpecError("unknown preset '" + spec.preset + "'");
}

}  // namespace promissing
