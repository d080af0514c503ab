#include "blendfit/eval.hpp"

#include "blendfit/error.hpp"
#include "blendfit/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace blendfit::eval {

void EventMatchConfig::validate() const {
  const auto check = [](double v) {
    if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCode::InvalidArgument, "f_min must lie in (0, 1)");
  };
  check(default_f_min);
  for (const auto& v : f_min) {
    if (v) check(*v);
  }
}

std::vector<std::size_t> detect_events(std::span<const double> series, double f_min) {
  std::vector<std::size_t> out;
  bool above = false;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const bool now = series[i] >= f_min;
    if (now && !above) out.push_back(i);
    above = now;
  }
  return out;
}

MatchCounts match_events(std::span<const std::size_t> detections,
                         std::span<const std::size_t> annotations, std::size_t delta_k) {
  std::vector<std::size_t> det(detections.begin(), detections.end());
  std::vector<std::size_t> ann(annotations.begin(), annotations.end());
  std::sort(det.begin(), det.end());
  std::sort(ann.begin(), ann.end());
  std::vector<bool> used(ann.size(), false);

  MatchCounts m;
  for (std::size_t d : det) {
    const std::size_t lo = d > delta_k ? d - delta_k : 0;
    const std::size_t hi = d + delta_k;
    bool matched = false;
    for (auto it = std::lower_bound(ann.begin(), ann.end(), lo); it != ann.end() && *it <= hi; ++it) {
      const auto k = static_cast<std::size_t>(it - ann.begin());
      if (used[k]) continue;
      used[k] = true;
      matched = true;
      break;
    }
    if (matched) {
      ++m.tp;
    } else {
      ++m.fp;
    }
  }
  m.fn = ann.size() - m.tp;
  return m;
}

F1Score f1(std::size_t tp, std::size_t fp, std::size_t fn) noexcept {
  F1Score s;
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

namespace {

bool varies(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) != v.end();
}

EventScores score_events(const std::vector<double>& series, double f_min,
                         const std::vector<std::size_t>& annotations, std::size_t delta_k) {
  EventScores s;
  s.counts = match_events(detect_events(series, f_min), annotations, delta_k);
  s.score = f1(s.counts.tp, s.counts.fp, s.counts.fn);
  return s;
}

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  std::optional<double> get() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

}  // namespace

EvalReport compare_streams(const BlendshapeStream& a, const BlendshapeStream& b,
                           const std::optional<std::vector<EventAnnotation>>& annotations,
                           const EventMatchConfig& config, std::span<const BlendshapeName> channels) {
  config.validate();
  if (a.frames.size() != b.frames.size()) {
    throw Error(ErrorCode::AlignmentFailure, std::to_string(a.frames.size()) + " frames vs " +
                                                 std::to_string(b.frames.size()));
  }
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    if (a.frames[i].timestamp_ms() != b.frames[i].timestamp_ms()) {
      throw Error(ErrorCode::AlignmentFailure, "timestamps differ at frame " + std::to_string(i));
    }
  }
  if (a.frames.empty()) throw Error(ErrorCode::AlignmentFailure, "streams are empty");

  std::array<std::vector<std::size_t>, kBlendshapeCount> per_channel;
  if (annotations) {
    for (const auto& e : *annotations) {
      if (e.frame >= a.frames.size()) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "annotation frame " + std::to_string(e.frame) + " past stream end " +
                        std::to_string(a.frames.size()));
      }
      per_channel[index_of(e.blendshape)].push_back(e.frame);
    }
  }

  EvalReport report;
  report.has_annotations = annotations.has_value();
  std::vector<BlendshapeName> selected(channels.begin(), channels.end());
  const bool auto_select = selected.empty();
  if (auto_select) {
    for (std::size_t c = 0; c < kBlendshapeCount; ++c) selected.push_back(blendshape_at(c));
  }

  for (const auto name : selected) {
    const auto c = index_of(name);
    const auto sa = a.channel(name);
    const auto sb = b.channel(name);
    const bool va = varies(sa);
    const bool vb = varies(sb);
    if (auto_select && !va && !vb && per_channel[c].empty()) continue;

    ChannelReport row;
    row.blendshape = name;
    row.annotations = per_channel[c].size();
    const double f_min = config.f_min_for(name);
    if (annotations) {
      row.events_a = score_events(sa, f_min, per_channel[c], config.delta_k);
      row.events_b = score_events(sb, f_min, per_channel[c], config.delta_k);
    }
    if (va && vb) {
      row.pearson = stats::pearson(sa, sb);
      row.spearman = stats::spearman(sa, sb);
    }
    if (vb) row.xi = stats::xi_correlation(sa, sb);

    const auto n = static_cast<double>(sa.size());
    std::size_t close = 0;
    double sq = 0.0;
    double signed_sum = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
      const double d = sb[i] - sa[i];
      if (std::abs(d) <= f_min) ++close;
      sq += d * d;
      signed_sum += d;
      row.deviation = std::max(row.deviation, std::abs(d));
    }
    row.accuracy = static_cast<double>(close) / n;
    row.msd = sq / n;
    row.mean_deviation = signed_sum / n;
    report.rows.push_back(row);
  }

  Mean pa, ra, fa, pb, rb, fb, pc, sc, xi, acc, msd, dev, mdev;
  for (const auto& r : report.rows) {
    if (r.events_a) {
      pa.add(r.events_a->score.precision);
      ra.add(r.events_a->score.recall);
      fa.add(r.events_a->score.f1);
    }
    if (r.events_b) {
      pb.add(r.events_b->score.precision);
      rb.add(r.events_b->score.recall);
      fb.add(r.events_b->score.f1);
    }
    pc.add(r.pearson);
    sc.add(r.spearman);
    xi.add(r.xi);
    acc.add(r.accuracy);
    msd.add(r.msd);
    dev.add(r.deviation);
    mdev.add(r.mean_deviation);
  }
  auto& avg = report.averages;
  avg.precision_a = pa.get();
  avg.recall_a = ra.get();
  avg.f1_a = fa.get();
  avg.precision_b = pb.get();
  avg.recall_b = rb.get();
  avg.f1_b = fb.get();
  avg.pearson = pc.get();
  avg.spearman = sc.get();
  avg.xi = xi.get();
  avg.accuracy = acc.get().value_or(0.0);
  avg.msd = msd.get().value_or(0.0);
  avg.deviation = dev.get().value_or(0.0);
  avg.mean_deviation = mdev.get().value_or(0.0);
  return report;
}

std::vector<EventAnnotation> read_annotations(std::istream& in) {
  std::vector<EventAnnotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::MalformedRecord, "annotation is not a JSON object", line_no);
    }
    const auto bs = j.find("bs");
    const auto frame = j.find("frame");
    if (bs == j.end() || !bs->is_string() || frame == j.end() || !frame->is_number_integer()) {
      throw Error(ErrorCode::MalformedRecord, "annotation needs \"bs\" and integer \"frame\"", line_no);
    }
    const auto name = parse_blendshape(bs->get<std::string>());
    if (!name) throw Error(ErrorCode::MalformedRecord, "unknown blendshape " + bs->dump(), line_no);
    if (frame->get<std::int64_t>() < 0) {
      throw Error(ErrorCode::MalformedRecord, "annotation frame must be >= 0", line_no);
    }
    out.push_back({*name, frame->get<std::size_t>()});
  }
  return out;
}

namespace {

std::string fixed(const std::optional<double>& v, int decimals) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

void csv_events(std::ostream& out, const std::optional<EventScores>& e) {
  if (!e) {
    out << ",,,";
    return;
  }
  out << ',' << fixed(e->score.precision, 2) << ',' << fixed(e->score.recall, 2) << ','
      << fixed(e->score.f1, 2);
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json events_json(const std::optional<EventScores>& e) {
  if (!e) return nullptr;
  return {{"tp", e->counts.tp},           {"fp", e->counts.fp},
          {"fn", e->counts.fn},           {"precision", e->score.precision},
          {"recall", e->score.recall},    {"f1", e->score.f1}};
}

}  // namespace

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "Blendshape,A_Pr,A_Re,A_F1,B_Pr,B_Re,B_F1,P_Corr,S_Corr,Xi,Accuracy,MSD,Deviation\n";
  for (const auto& r : report.rows) {
    out << name_of(r.blendshape);
    csv_events(out, r.events_a);
    csv_events(out, r.events_b);
    out << ',' << fixed(r.pearson, 3) << ',' << fixed(r.spearman, 3) << ',' << fixed(r.xi, 3) << ','
        << fixed(r.accuracy, 3) << ',' << fixed(r.msd, 3) << ',' << fixed(r.deviation, 3) << '\n';
  }
  const auto& a = report.averages;
  out << "Average," << fixed(a.precision_a, 2) << ',' << fixed(a.recall_a, 2) << ',' << fixed(a.f1_a, 2)
      << ',' << fixed(a.precision_b, 2) << ',' << fixed(a.recall_b, 2) << ',' << fixed(a.f1_b, 2) << ','
      << fixed(a.pearson, 3) << ',' << fixed(a.spearman, 3) << ',' << fixed(a.xi, 3) << ','
      << fixed(a.accuracy, 3) << ',' << fixed(a.msd, 3) << ',' << fixed(a.deviation, 3) << '\n';
  if (!out) throw Error(ErrorCode::SinkFailure, "failed writing CSV report");
}

void write_report_json(const EvalReport& report, std::ostream& out) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"blendshape", name_of(r.blendshape)},
                    {"annotations", r.annotations},
                    {"events_a", events_json(r.events_a)},
                    {"events_b", events_json(r.events_b)},
                    {"pearson", opt_json(r.pearson)},
                    {"spearman", opt_json(r.spearman)},
                    {"xi", opt_json(r.xi)},
                    {"accuracy", r.accuracy},
                    {"msd", r.msd},
                    {"deviation", r.deviation},
                    {"mean_deviation", r.mean_deviation}});
  }
  const auto& a = report.averages;
  nlohmann::ordered_json avg{{"precision_a", opt_json(a.precision_a)},
                             {"recall_a", opt_json(a.recall_a)},
                             {"f1_a", opt_json(a.f1_a)},
                             {"precision_b", opt_json(a.precision_b)},
                             {"recall_b", opt_json(a.recall_b)},
                             {"f1_b", opt_json(a.f1_b)},
                             {"pearson", opt_json(a.pearson)},
                             {"spearman", opt_json(a.spearman)},
                             {"xi", opt_json(a.xi)},
                             {"accuracy", a.accuracy},
                             {"msd", a.msd},
                             {"deviation", a.deviation},
                             {"mean_deviation", a.mean_deviation}};
  nlohmann::ordered_json doc{{"has_annotations", report.has_annotations},
                             {"rows", std::move(rows)},
                             {"averages", std::move(avg)}};
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::SinkFailure, "failed writing JSON report");
}

}  // namespace blendfit::eval
