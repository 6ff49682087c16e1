#include "inpaint_gan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "inpaint_gan/errors.hpp"

namespace inpaint_gan {

using nlohmann::json;

json to_json(const MetricsReport& r) {
  return {{"acc", r.acc}, {"sen", r.sen}, {"spe", r.spe}, {"auc", r.auc}, {"tp", r.tp},
          {"tn", r.tn},   {"fp", r.fp},   {"fn", r.fn},   {"n", r.n}};
}

MetricsReport metrics_from_json(const json& j) {
  try {
    MetricsReport r;
    r.acc = j.at("acc").get<double>();
    r.sen = j.at("sen").get<double>();
    r.spe = j.at("spe").get<double>();
    r.auc = j.at("auc").get<double>();
    r.tp = j.at("tp").get<std::int64_t>();
    r.tn = j.at("tn").get<std::int64_t>();
    r.fp = j.at("fp").get<std::int64_t>();
    r.fn = j.at("fn").get<std::int64_t>();
    r.n = j.at("n").get<std::int64_t>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed metrics report: ") + e.what());
  }
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("auc: scores and labels differ in length");
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("auc: scores must be finite");
  }
  std::int64_t positives = 0, negatives = 0;
  for (int l : labels) {
    if (l == 1) {
      ++positives;
    } else if (l == 0) {
      ++negatives;
    } else {
      throw ValidationError("auc: labels must be 0 or 1");
    }
  }
  if (positives == 0 || negatives == 0) throw ValidationError("auc needs both classes present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Walk the ROC curve from the highest score down. Each tied group moves the curve by
  // (fp_inc, tp_inc); twice its trapezoid area is fp_inc * (2 * tp_before + tp_inc).
  std::int64_t tp = 0, twice_area = 0;
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g;
    std::int64_t tp_inc = 0, fp_inc = 0;
    while (end < order.size() && scores[order[end]] == scores[order[g]]) {
      (labels[order[end]] == 1 ? tp_inc : fp_inc) += 1;
      ++end;
    }
    twice_area += fp_inc * (2 * tp + tp_inc);
    tp += tp_inc;
    g = end;
  }
  return static_cast<double>(twice_area) / static_cast<double>(2 * positives * negatives);
}

MetricsReport metrics_from_scores(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.empty()) throw ValidationError("cannot evaluate an empty split");
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  MetricsReport r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? r.tp : r.fn) += 1;
    } else {
      (predicted ? r.fp : r.tn) += 1;
    }
  }
  r.n = static_cast<std::int64_t>(scores.size());
  r.acc = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.n);
  r.sen = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.spe = r.tn + r.fp > 0 ? static_cast<double>(r.tn) / static_cast<double>(r.tn + r.fp) : 0.0;
  r.auc = auc(scores, labels);
  return r;
}

std::size_t select_best_epoch(std::span<const double> aucs) {
  if (aucs.empty()) throw ValidationError("no epochs to select from");
  return static_cast<std::size_t>(std::max_element(aucs.begin(), aucs.end()) - aucs.begin());
}

namespace {

template <typename Fn>
MetricsReport reduce(std::span<const MetricsReport> reports, Fn fn) {
  if (reports.empty()) throw ValidationError("no reports to aggregate");
  auto field = [&](auto member) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(static_cast<double>(r.*member));
    return fn(v);
  };
  MetricsReport out;
  out.acc = field(&MetricsReport::acc);
  out.sen = field(&MetricsReport::sen);
  out.spe = field(&MetricsReport::spe);
  out.auc = field(&MetricsReport::auc);
  out.tp = std::llround(field(&MetricsReport::tp));
  out.tn = std::llround(field(&MetricsReport::tn));
  out.fp = std::llround(field(&MetricsReport::fp));
  out.fn = std::llround(field(&MetricsReport::fn));
  out.n = std::llround(field(&MetricsReport::n));
  return out;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

MetricsReport mean_report(std::span<const MetricsReport> reports) { return reduce(reports, mean_of); }

MetricsReport spread_report(std::span<const MetricsReport> reports) {
  return reduce(reports, [](const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
  });
}

std::string format_metrics_table(std::span<const TableSection> sections) {
  std::string out;
  char line[160];
  auto row = [&](const std::string& name, const MetricsReport& m) {
    std::snprintf(line, sizeof(line), "%-24s %-8.4f %-8.4f %-8.4f %-8.4f\n", name.c_str(), m.acc, m.sen, m.spe, m.auc);
    out += line;
  };
  const std::string rule(60, '-');
  std::snprintf(line, sizeof(line), "%-24s %-8s %-8s %-8s %-8s\n", "Network", "ACC", "SEN", "SPE", "AUC");
  out += line;
  for (const auto& section : sections) {
    out += rule + "\n" + section.title + "\n" + rule + "\n";
    for (const auto& r : section.rows) row(r.name, r.metrics);
    row("Mean", section.mean);
  }
  out += rule + "\n";
  return out;
}

}  // namespace inpaint_gan
