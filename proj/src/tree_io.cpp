#include <charconv>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "dtpo/error.hpp"
#include "dtpo/tree.hpp"

namespace dtpo {

using ordered_json = nlohmann::ordered_json;

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

namespace {

std::vector<std::string> default_names(const std::vector<std::string>& given,
                                       Eigen::Index count, const char* prefix) {
  if (!given.empty()) return given;
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedInput, "malformed policy document: " + what);
}

std::vector<std::string> read_names(const ordered_json& doc, const char* key) {
  std::vector<std::string> names;
  if (!doc.contains(key)) return names;
  const ordered_json& arr = doc.at(key);
  if (!arr.is_array()) malformed(std::string(key) + " is not an array");
  for (const auto& v : arr) {
    if (!v.is_string()) malformed(std::string(key) + " contains a non-string");
    names.push_back(v.get<std::string>());
  }
  return names;
}

int read_index(const ordered_json& node, const char* key, std::size_t i) {
  if (!node.contains(key) || !node.at(key).is_number_integer()) {
    malformed("node " + std::to_string(i) + " lacks integer field '" + key + "'");
  }
  return node.at(key).get<int>();
}

}  // namespace

std::string serialize(const DecisionTree& tree, const std::vector<std::string>& feature_names,
                      const std::vector<std::string>& action_names) {
  ordered_json doc;
  doc["feature_names"] = default_names(feature_names, tree.feature_count(), "f_");
  doc["action_names"] = default_names(action_names, tree.output_size(), "a_");
  ordered_json nodes = ordered_json::array();
  for (const TreeNode& n : tree.nodes()) {
    ordered_json j;
    if (n.is_leaf()) {
      j["type"] = "leaf";
      j["output"] = std::vector<double>(n.output.data(), n.output.data() + n.output.size());
    } else {
      j["type"] = "split";
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

PolicyDocument deserialize(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    malformed(e.what());
  }
  if (!doc.is_object()) malformed("top level is not an object");
  if (!doc.contains("nodes") || !doc.at("nodes").is_array()) malformed("missing 'nodes' array");

  PolicyDocument out;
  out.feature_names = read_names(doc, "feature_names");
  out.action_names = read_names(doc, "action_names");

  std::vector<TreeNode> nodes;
  int max_feature = -1;
  const ordered_json& arr = doc.at("nodes");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const ordered_json& j = arr[i];
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
      malformed("node " + std::to_string(i) + " has no type");
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "leaf") {
      if (!j.contains("output") || !j.at("output").is_array()) {
        malformed("leaf " + std::to_string(i) + " has no output array");
      }
      const ordered_json& o = j.at("output");
      Eigen::VectorXd output(static_cast<Eigen::Index>(o.size()));
      for (std::size_t c = 0; c < o.size(); ++c) {
        if (!o[c].is_number()) malformed("leaf " + std::to_string(i) + " has a non-number");
        output[static_cast<Eigen::Index>(c)] = o[c].get<double>();
      }
      nodes.push_back(TreeNode::leaf(std::move(output)));
    } else if (type == "split") {
      if (!j.contains("threshold") || !j.at("threshold").is_number()) {
        malformed("split " + std::to_string(i) + " has no numeric threshold");
      }
      const int feature = read_index(j, "feature", i);
      if (feature < 0) malformed("split " + std::to_string(i) + " has a negative feature");
      max_feature = std::max(max_feature, feature);
      nodes.push_back(TreeNode::split(feature, j.at("threshold").get<double>(),
                                      read_index(j, "left", i), read_index(j, "right", i)));
    } else {
      malformed("node " + std::to_string(i) + " has unknown type '" + type + "'");
    }
  }

  const Eigen::Index feature_count = out.feature_names.empty()
                                         ? max_feature + 1
                                         : static_cast<Eigen::Index>(out.feature_names.size());
  out.tree = DecisionTree(std::move(nodes), feature_count);
  if (!out.action_names.empty() &&
      static_cast<Eigen::Index>(out.action_names.size()) != out.tree.output_size()) {
    malformed("action_names length does not match leaf outputs");
  }
  out.feature_names = default_names(out.feature_names, out.tree.feature_count(), "f_");
  out.action_names = default_names(out.action_names, out.tree.output_size(), "a_");
  return out;
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string to_dot(const PolicyTree& policy, const std::vector<std::string>& feature_names,
                   const std::vector<std::string>& action_names) {
  const DecisionTree& tree = policy.tree;
  const auto features = default_names(feature_names, tree.feature_count(), "f_");
  const auto actions = default_names(action_names, tree.output_size(), "a_");

  std::ostringstream dot;
  dot << "digraph policy {\n";
  dot << "  node [fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const TreeNode& n = tree.nodes()[i];
    dot << "  n" << i << " [";
    if (n.is_leaf()) {
      std::string label;
      if (policy.mode == PolicyMode::Deterministic) {
        label = actions.at(static_cast<std::size_t>(argmax(n.output)));
      } else {
        label = "[";
        for (Eigen::Index c = 0; c < n.output.size(); ++c) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.3f", n.output[c]);
          label += (c ? ", " : "") + std::string(buf);
        }
        label += "]";
      }
      dot << "shape=ellipse, label=\"" << escape(label) << "\"";
    } else {
      dot << "shape=box, label=\"" << escape(features.at(static_cast<std::size_t>(n.feature)))
          << " ≤ " << format_number(n.threshold) << "\"";
    }
    dot << "];\n";
  }
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const TreeNode& n = tree.nodes()[i];
    if (n.is_leaf()) continue;
    dot << "  n" << i << " -> n" << n.left << " [label=\"true\"];\n";
    dot << "  n" << i << " -> n" << n.right << " [label=\"false\"];\n";
  }
  dot << "}\n";
  return dot.str();
}

}  // namespace dtpo
