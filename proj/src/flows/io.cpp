#include "flowbn/flows/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flowbn/error.hpp"

namespace flowbn::flows {

namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InputError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw InputError("unknown field '" + key + "' in " + where);
  }
}

std::size_t positive_int(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1) throw InputError(where + " must be a positive integer");
  return v.get<std::size_t>();
}

// Either a bare string tag or a single-key object {tag: payload}.
std::pair<std::string, const json*> tagged(const json& v, const std::string& where) {
  if (v.is_string()) return {v.get<std::string>(), nullptr};
  if (v.is_object() && v.size() == 1) return {v.begin().key(), &v.begin().value()};
  throw InputError(where + " must be a string or a single-key object");
}

ConditionerSpec parse_conditioner(const json& v, const std::string& where) {
  const auto [tag, payload] = tagged(v, where);
  if (tag == "autoregressive" && !payload) return Autoregressive{};
  if (tag == "constant" && !payload) return Constant{};
  if (tag == "coupling" && payload) {
    only_keys(*payload, {"k"}, where + ".coupling");
    if (!payload->contains("k")) throw InputError(where + ".coupling needs 'k'");
    return Coupling{positive_int(payload->at("k"), where + ".coupling.k")};
  }
  throw InputError(where + ": unknown conditioner '" + tag + "'");
}

NormalizerSpec parse_normalizer(const json& v, const std::string& where) {
  const auto [tag, payload] = tagged(v, where);
  if (tag == "affine" && !payload) return Affine{};
  if (tag == "monotone_pwl" && payload) {
    only_keys(*payload, {"bins"}, where + ".monotone_pwl");
    MonotonePwl m;
    if (payload->contains("bins")) m.bins = positive_int(payload->at("bins"), where + ".monotone_pwl.bins");
    return m;
  }
  throw InputError(where + ": unknown normalizer '" + tag + "'");
}

PermutationSpec parse_permutation(const json& v, const std::string& where) {
  const auto [tag, payload] = tagged(v, where);
  if (tag == "identity" && !payload) return IdentityPermutation{};
  if (tag == "reverse" && !payload) return ReversePermutation{};
  if (tag == "explicit" && payload) {
    if (!payload->is_array()) throw InputError(where + ".explicit must be an array");
    ExplicitPermutation p;
    for (const auto& i : *payload) p.order.push_back(positive_int(i, where + ".explicit entry") - 1);
    return p;
  }
  throw InputError(where + ": unknown permutation '" + tag + "'");
}

json spec_json(const FlowSpec& spec) {
  json steps = json::array();
  for (const auto& s : spec.steps) {
    json j;
    j["conditioner"] = std::visit(overloaded{
                                      [](const Autoregressive&) { return json("autoregressive"); },
                                      [](const Coupling& c) { return json{{"coupling", {{"k", c.k}}}}; },
                                      [](const Constant&) { return json("constant"); },
                                  },
                                  s.conditioner);
    j["normalizer"] = std::visit(overloaded{
                                     [](const Affine&) { return json("affine"); },
                                     [](const MonotonePwl& m) { return json{{"monotone_pwl", {{"bins", m.bins}}}}; },
                                 },
                                 s.normalizer);
    j["permutation"] = std::visit(overloaded{
                                      [](const IdentityPermutation&) { return json("identity"); },
                                      [](const ReversePermutation&) { return json("reverse"); },
                                      [](const ExplicitPermutation& e) {
                                        json order = json::array();
                                        for (auto i : e.order) order.push_back(i + 1);
                                        return json{{"explicit", order}};
                                      },
                                  },
                                  s.permutation);
    steps.push_back(std::move(j));
  }
  return json{{"dim", spec.dim}, {"steps", std::move(steps)}};
}

FlowSpec spec_from(const json& doc) {
  only_keys(doc, {"dim", "steps"}, "flow spec");
  if (!doc.contains("dim")) throw InputError("flow spec needs 'dim'");
  if (!doc.contains("steps") || !doc["steps"].is_array()) throw InputError("flow spec needs a 'steps' array");
  FlowSpec spec;
  spec.dim = positive_int(doc["dim"], "flow spec dim");
  for (std::size_t i = 0; i < doc["steps"].size(); ++i) {
    const json& js = doc["steps"][i];
    const std::string where = "step " + std::to_string(i + 1);
    only_keys(js, {"conditioner", "normalizer", "permutation"}, where);
    if (!js.contains("conditioner") || !js.contains("normalizer")) {
      throw InputError(where + " needs 'conditioner' and 'normalizer'");
    }
    StepSpec step;
    step.conditioner = parse_conditioner(js["conditioner"], where + ".conditioner");
    step.normalizer = parse_normalizer(js["normalizer"], where + ".normalizer");
    if (js.contains("permutation")) step.permutation = parse_permutation(js["permutation"], where + ".permutation");
    spec.steps.push_back(std::move(step));
  }
  spec.validate();
  return spec;
}

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(what + ": " + e.what());
  }
}

}  // namespace

FlowSpec spec_from_json(const std::string& text) { return spec_from(parse(text, "flow spec")); }

std::string spec_to_json(const FlowSpec& spec) { return spec_json(spec).dump(2) + "\n"; }

std::string checkpoint_to_json(const FlowModel& model) {
  json blocks = json::array();
  const auto flat = model.flat_parameters();
  for (const auto& b : model.parameter_blocks()) {
    blocks.push_back({{"name", b.name},
                      {"values", std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(b.offset),
                                                     flat.begin() + static_cast<std::ptrdiff_t>(b.offset + b.size))}});
  }
  json doc = {{"format_version", kCheckpointVersion},
              {"spec", spec_json(model.spec())},
              {"hidden", model.options().hidden},
              {"blocks", std::move(blocks)}};
  return doc.dump(1) + "\n";
}

FlowModel checkpoint_from_json(const std::string& text) {
  const json doc = parse(text, "checkpoint");
  only_keys(doc, {"format_version", "spec", "hidden", "blocks"}, "checkpoint");
  if (!doc.contains("format_version") || doc["format_version"] != kCheckpointVersion) {
    throw InputError("checkpoint: unsupported or missing format_version");
  }
  if (!doc.contains("spec") || !doc.contains("hidden") || !doc.contains("blocks")) {
    throw InputError("checkpoint needs 'spec', 'hidden' and 'blocks'");
  }
  ModelOptions options;
  options.hidden.clear();
  if (!doc["hidden"].is_array()) throw InputError("checkpoint: 'hidden' must be an array");
  for (const auto& w : doc["hidden"]) options.hidden.push_back(positive_int(w, "checkpoint hidden width"));
  num::Rng rng(0);
  FlowModel model(spec_from(doc["spec"]), rng, options);

  const auto layout = model.parameter_blocks();
  const json& blocks = doc["blocks"];
  if (!blocks.is_array() || blocks.size() != layout.size()) throw InputError("checkpoint: block count mismatch");
  std::vector<double> flat(model.parameter_count());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    only_keys(blocks[i], {"name", "values"}, "checkpoint block");
    if (blocks[i].value("name", "") != layout[i].name) {
      throw InputError("checkpoint: expected block '" + layout[i].name + "'");
    }
    const json& values = blocks[i]["values"];
    if (!values.is_array() || values.size() != layout[i].size) {
      throw InputError("checkpoint: block '" + layout[i].name + "' has the wrong size");
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!values[k].is_number()) throw InputError("checkpoint: non-numeric parameter");
      flat[layout[i].offset + k] = values[k].get<double>();
    }
  }
  model.set_flat_parameters(flat);
  return model;
}

num::Matrix read_csv(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    bool numeric = true;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      const std::string t = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!line.empty() && line.back() == ',') numeric = false;
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw InputError(source + ":" + std::to_string(line_no) + ": not a numeric row");
    }
    first = false;
    if (cols == 0) cols = row.size();
    if (row.size() != cols) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) + " columns");
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw InputError(source + ": no data rows");
  num::Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.values().begin());
  if (!m.all_finite()) throw InputError(source + ": non-finite value");
  return m;
}

num::Matrix read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_csv(in, path.string());
}

std::string to_csv(const num::Matrix& m, const std::string& header) {
  std::string out;
  if (!header.empty()) out += header + "\n";
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), m(r, c));
      if (c) out += ',';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace flowbn::flows
