#include <algorithm>
#include <cmath>
#include <sstream>

#include "promissing/errors.hpp"
#include "promissing/experiments.hpp"
#include "text_util.hpp"

namespace promissing {

Unit parse_unit(const std::string& text) {
  if (text == "modality") return Unit::kModality;
  if (text == "feature") return Unit::kFeature;
  throw ConfigError("unit must be 'modality' or 'feature', got '" + text + "'");
}

const char* to_string(Unit u) { return u == Unit::kModality ? "modality" : "feature"; }

Interpretation counterfactual_interpret(const Network& net, const std::vector<MaskedMatrix>& row,
                                        Unit unit) {
  const auto widths = net.input_widths();
  if (row.size() != widths.size()) throw ShapeError("sample has the wrong number of inputs");
  for (std::size_t s = 0; s < row.size(); ++s) {
    if (row[s].rows() != 1 || row[s].cols() != widths[s]) {
      throw ShapeError("sample input " + std::to_string(s) + " must be one row of width " +
                       std::to_string(widths[s]));
    }
  }
  for (const auto id : net.input_nodes()) {
    bool reaches_nan_layer = false;
    for (const auto& n : net.nodes()) {
      if (n.type != NodeType::kLayer || n.layer.kind != LayerKind::kNanDense) continue;
      const auto src = n.inputs.at(0);
      if (src == id || (net.nodes()[src].type == NodeType::kDropout && net.nodes()[src].inputs[0] == id)) {
        reaches_nan_layer = true;
      }
    }
    if (!reaches_nan_layer) {
      throw MissingNotAllowedError("counterfactual masking needs a PROMISSING-type first layer on "
                                   "every input");
    }
  }

  Interpretation out;
  out.base = net.predict_positive(row).at(0);
  const auto& nodes = net.nodes();
  for (std::size_t s = 0; s < row.size(); ++s) {
    const std::string input_name = nodes[net.input_nodes()[s]].name;
    auto masked_delta = [&](std::size_t from, std::size_t to, const std::string& name,
                            std::size_t feature) {
      Attribution a;
      a.unit = name;
      a.input = s;
      a.feature = feature;
      bool all_missing = true;
      for (std::size_t j = from; j < to; ++j) all_missing = all_missing && row[s].is_missing(0, j);
      if (all_missing) {
        a.already_missing = true;
      } else {
        auto changed = row;
        for (std::size_t j = from; j < to; ++j) changed[s].set_missing(0, j);
        a.delta = out.base - net.predict_positive(changed).at(0);
      }
      out.attributions.push_back(a);
    };
    if (unit == Unit::kModality) {
      masked_delta(0, widths[s], input_name, 0);
    } else {
      for (std::size_t j = 0; j < widths[s]; ++j) {
        masked_delta(j, j + 1, input_name + "[" + std::to_string(j) + "]", j);
      }
    }
  }
  std::stable_sort(out.attributions.begin(), out.attributions.end(),
                   [](const Attribution& a, const Attribution& b) {
                     return std::abs(a.delta) > std::abs(b.delta);
                   });
  return out;
}

std::string interpretation_csv(const Interpretation& in) {
  std::ostringstream out;
  out << "unit,input,feature,delta,already_missing\n";
  out << "base,,," << detail::format_double(in.base) << ",0\n";
  for (const auto& a : in.attributions) {
    out << a.unit << ',' << a.input << ',' << a.feature << ',' << detail::format_double(a.delta)
        << ',' << (a.already_missing ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace promissing
