#include "purebox/transfer/report.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"
#include "purebox/core/error.hpp"
#include "purebox/core/hash.hpp"

namespace purebox::transfer {

using nlohmann::json;

std::string eval_set_digest(const std::vector<ImageSample>& eval_set) {
  std::string buffer;
  for (const auto& s : eval_set) {
    buffer.append(reinterpret_cast<const char*>(s.pixels.data()),
                  sizeof(Scalar) * static_cast<std::size_t>(s.pixels.size()));
    buffer.append(reinterpret_cast<const char*>(&s.label), sizeof(s.label));
  }
  return sha256_hex(buffer);
}

TransferReport evaluate_transfer(const std::vector<gen::Perturbation>& perturbations,
                                 const TargetOracle& target,
                                 const std::vector<ImageSample>& eval_set,
                                 const std::string& config_digest) {
  if (eval_set.empty()) raise(ErrorKind::EmptyEvalSet, "evaluation set is empty");
  if (perturbations.empty()) raise(ErrorKind::EmptyEvalSet, "need at least one perturbation");
  for (const auto& p : perturbations) {
    if (p.delta.size() != eval_set.front().pixels.size()) {
      raise(ErrorKind::ShapeMismatch, "perturbation does not match the working resolution");
    }
  }

  const long n_images = static_cast<long>(eval_set.size());
  const long n_perts = static_cast<long>(perturbations.size());

  std::vector<int> clean_labels(eval_set.size());
  long clean_correct = 0;
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    try {
      clean_labels[i] = target(eval_set[i].pixels);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      raise(ErrorKind::OracleFailure, "clean query on image " + std::to_string(i) + ": " + e.what());
    }
    if (clean_labels[i] == eval_set[i].label) ++clean_correct;
  }

  long adv_correct = 0;
  long fooled = 0;  // over pairs whose clean prediction was correct
  for (std::size_t p = 0; p < perturbations.size(); ++p) {
    for (std::size_t i = 0; i < eval_set.size(); ++i) {
      const VecX perturbed = clip01(eval_set[i].pixels + perturbations[p].delta);
      int label = 0;
      try {
        label = target(perturbed);
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        raise(ErrorKind::OracleFailure, "pair (" + std::to_string(p) + "," + std::to_string(i) +
                                            "): " + e.what());
      }
      if (label == eval_set[i].label) ++adv_correct;
      if (clean_labels[i] == eval_set[i].label && label != eval_set[i].label) ++fooled;
    }
  }

  TransferReport report;
  report.n_images = static_cast<int>(n_images);
  report.n_perturbations = static_cast<int>(n_perts);
  report.clean_accuracy = static_cast<double>(clean_correct) / static_cast<double>(n_images);
  report.adversarial_accuracy =
      static_cast<double>(adv_correct) / static_cast<double>(n_images * n_perts);
  report.accuracy_drop = 100.0 * (report.clean_accuracy - report.adversarial_accuracy);
  report.fooling_rate = clean_correct == 0
                            ? 0.0
                            : 100.0 * static_cast<double>(fooled) /
                                  static_cast<double>(clean_correct * n_perts);
  report.config_digest = config_digest;
  report.eval_set_digest = eval_set_digest(eval_set);
  return report;
}

bool GridKey::operator<(const GridKey& other) const {
  if (ensemble != other.ensemble) return ensemble < other.ensemble;
  if (n_sms != other.n_sms) return n_sms < other.n_sms;
  return n_classes < other.n_classes;
}

GridTable aggregate_grid(const std::vector<std::pair<GridKey, TransferReport>>& reports) {
  if (reports.empty()) raise(ErrorKind::EmptyRecords, "no reports to aggregate");
  const std::string digest = reports.front().second.eval_set_digest;
  for (const auto& [key, report] : reports) {
    if (report.eval_set_digest != digest) {
      raise(ErrorKind::ProtocolMismatch, "reports use different eval sets");
    }
  }

  std::map<GridKey, std::pair<double, std::pair<double, int>>> acc;  // drop, (fooling, n)
  for (const auto& [key, report] : reports) {
    auto& slot = acc[key];
    slot.first += report.accuracy_drop;
    slot.second.first += report.fooling_rate;
    slot.second.second += 1;
  }

  GridTable table;
  table.eval_set_digest = digest;
  for (const auto& [key, slot] : acc) {
    GridRow row;
    row.key = key;
    row.n_reports = slot.second.second;
    row.mean_drop = slot.first / row.n_reports;
    row.mean_fooling = slot.second.first / row.n_reports;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string report_to_json(const TransferReport& r) {
  json j;
  j["clean_accuracy"] = r.clean_accuracy;
  j["adversarial_accuracy"] = r.adversarial_accuracy;
  j["accuracy_drop"] = r.accuracy_drop;
  j["fooling_rate"] = r.fooling_rate;
  j["n_images"] = r.n_images;
  j["n_perturbations"] = r.n_perturbations;
  j["config_digest"] = r.config_digest;
  j["eval_set_digest"] = r.eval_set_digest;
  return j.dump(2);
}

TransferReport report_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  TransferReport r;
  r.clean_accuracy = j.at("clean_accuracy").get<double>();
  r.adversarial_accuracy = j.at("adversarial_accuracy").get<double>();
  r.accuracy_drop = j.at("accuracy_drop").get<double>();
  r.fooling_rate = j.at("fooling_rate").get<double>();
  r.n_images = j.at("n_images").get<int>();
  r.n_perturbations = j.at("n_perturbations").get<int>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.eval_set_digest = j.at("eval_set_digest").get<std::string>();
  return r;
}

std::string grid_to_csv(const GridTable& table) {
  std::ostringstream out;
  out << "ensemble,n_sms,n_classes,mean_drop,mean_fooling,n_reports,eval_set_digest\n";
  out << std::setprecision(17);
  for (const auto& row : table.rows) {
    out << row.key.ensemble << "," << row.key.n_sms << "," << row.key.n_classes << ","
        << row.mean_drop << "," << row.mean_fooling << "," << row.n_reports << ","
        << table.eval_set_digest << "\n";
  }
  return out.str();
}

GridTable grid_from_csv(const std::string& csv_text) {
  GridTable table;
  std::istringstream in(csv_text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;  // header
    }
    std::istringstream row(line);
    std::string field;
    GridRow r;
    std::getline(row, r.key.ensemble, ',');
    std::getline(row, field, ',');
    r.key.n_sms = std::stoi(field);
    std::getline(row, field, ',');
    r.key.n_classes = std::stoi(field);
    std::getline(row, field, ',');
    r.mean_drop = std::stod(field);
    std::getline(row, field, ',');
    r.mean_fooling = std::stod(field);
    std::getline(row, field, ',');
    r.n_reports = std::stoi(field);
    std::getline(row, field, ',');
    table.eval_set_digest = field;
    table.rows.push_back(std::move(r));
  }
  return table;
}

std::string grid_to_json(const GridTable& table) {
  json j;
  j["eval_set_digest"] = table.eval_set_digest;
  j["rows"] = json::array();
  for (const auto& row : table.rows) {
    j["rows"].push_back({{"ensemble", row.key.ensemble},
                         {"n_sms", row.key.n_sms},
                         {"n_classes", row.key.n_classes},
                         {"mean_drop", row.mean_drop},
                         {"mean_fooling", row.mean_fooling},
                         {"n_reports", row.n_reports}});
  }
  return j.dump(2);
}

std::string grid_to_text(const GridTable& table) {
  std::size_t width = std::string("ensemble").size();
  for (const auto& row : table.rows) width = std::max(width, row.key.ensemble.size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width) + 2) << "ensemble" << std::right
      << std::setw(7) << "#SMs" << std::setw(10) << "#classes" << std::setw(12) << "drop(%)"
      << "\n";
  out << std::string(width + 2 + 7 + 10 + 12, '-') << "\n";
  for (const auto& row : table.rows) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << row.key.ensemble << std::right
        << std::setw(7) << row.key.n_sms << std::setw(10) << row.key.n_classes << std::setw(12)
        << std::fixed << std::setprecision(2) << row.mean_drop << "\n";
  }
  return out.str();
}

}  // namespace purebox::transfer
