#include <charconv>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "flowbn/error.hpp"
#include "flowbn/lab/experiments.hpp"

namespace flowbn::lab {

namespace {

using json = nlohmann::ordered_json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& v, const std::string& where) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw InputError("report: '" + where + "' must be a number or null");
  return v.get<double>();
}

json named(const Named& values) {
  json obj = json::object();
  for (const auto& [k, v] : values) obj[k] = number(v);
  return obj;
}

Named named_from(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw InputError("report: '" + where + "' must be an object");
  Named out;
  for (const auto& [k, v] : obj.items()) out.emplace_back(k, number_from(v, where + "." + k));
  return out;
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw InputError(std::string("report: missing field '") + key + "'");
  return obj.at(key);
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

// Quotes a CSV cell when it holds a separator or a quote.
std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json runs = json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"label", r.label},
                    {"spec", r.spec},
                    {"seed", r.seed},
                    {"steps", r.steps},
                    {"status", r.status},
                    {"train_nll", number(r.train_nll)},
                    {"validation_nll", number(r.validation_nll)},
                    {"test_nll", number(r.test_nll)},
                    {"extras", named(r.extras)}});
  }
  json summary = json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"label", s.label},
                       {"runs", s.runs},
                       {"mean_test_nll", number(s.mean_test_nll)},
                       {"sd_test_nll", number(s.sd_test_nll)}});
  }
  const json doc = {{"schema_version", kReportSchemaVersion},
                    {"experiment", report.experiment},
                    {"target", report.target},
                    {"seeds", report.seeds},
                    {"runs", std::move(runs)},
                    {"summary", std::move(summary)},
                    {"results", named(report.results)}};
  return doc.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("report: ") + e.what());
  }
  if (field(doc, "schema_version") != kReportSchemaVersion) throw InputError("report: unsupported schema_version");
  ExperimentReport report;
  report.experiment = field(doc, "experiment").get<std::string>();
  report.target = field(doc, "target").get<std::string>();
  report.seeds = field(doc, "seeds").get<std::vector<std::uint64_t>>();
  for (const auto& r : field(doc, "runs")) {
    RunResult run;
    run.label = field(r, "label").get<std::string>();
    run.spec = field(r, "spec").get<std::string>();
    run.seed = field(r, "seed").get<std::uint64_t>();
    run.steps = field(r, "steps").get<std::size_t>();
    run.status = field(r, "status").get<std::string>();
    run.train_nll = number_from(field(r, "train_nll"), "train_nll");
    run.validation_nll = number_from(field(r, "validation_nll"), "validation_nll");
    run.test_nll = number_from(field(r, "test_nll"), "test_nll");
    run.extras = named_from(field(r, "extras"), "extras");
    report.runs.push_back(std::move(run));
  }
  for (const auto& s : field(doc, "summary")) {
    report.summary.push_back({field(s, "label").get<std::string>(), field(s, "runs").get<std::size_t>(),
                              number_from(field(s, "mean_test_nll"), "mean_test_nll"),
                              number_from(field(s, "sd_test_nll"), "sd_test_nll")});
  }
  report.results = named_from(field(doc, "results"), "results");
  return report;
}

std::string report_metadata_json(const ExperimentReport& report, double total_wall_seconds) {
  json runs = json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"label", r.label}, {"seed", r.seed}, {"wall_seconds", r.wall_seconds}});
  }
  const json doc = {{"schema_version", kReportSchemaVersion},
                    {"experiment", report.experiment},
                    {"total_wall_seconds", total_wall_seconds},
                    {"runs", std::move(runs)}};
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const ExperimentReport& report) {
  std::string out = "experiment,target,label,seed,steps,status,train_nll,validation_nll,test_nll,extras\n";
  for (const auto& r : report.runs) {
    std::string extras;
    for (const auto& [k, v] : r.extras) {
      if (!extras.empty()) extras += ';';
      extras += k + "=" + csv_number(v);
    }
    out += csv_cell(report.experiment) + "," + csv_cell(report.target) + "," + csv_cell(r.label) + "," +
           std::to_string(r.seed) + "," + std::to_string(r.steps) + "," + csv_cell(r.status) + "," +
           csv_number(r.train_nll) + "," + csv_number(r.validation_nll) + "," + csv_number(r.test_nll) + "," +
           csv_cell(extras) + "\n";
  }
  return out;
}

}  // namespace flowbn::lab
