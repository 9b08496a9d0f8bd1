#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

#include "swmlp/evaluation.hpp"
#include "swmlp/text_io.hpp"

namespace swmlp {

Trace make_trace(std::span<const TripPrediction> preds, std::span<const std::string> names,
                 bool include_predictions) {
  if (preds.empty()) throw std::invalid_argument("make_trace: no predictions");
  if (include_predictions && names.size() != preds.size())
    throw std::invalid_argument("make_trace: one name per prediction required");

  Trace t;
  t.trip_id = preds.front().trip_id;
  t.truth.name = "truth";
  std::map<std::size_t, double> truth;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto& p = preds[k];
    if (p.trip_id != t.trip_id)
      throw std::invalid_argument("make_trace: predictions of trips " + std::to_string(t.trip_id) +
                                  " and " + std::to_string(p.trip_id) + " mixed");
    for (std::size_t i = 0; i < p.indices.size(); ++i) {
      auto [it, inserted] = truth.emplace(p.indices[i], p.truth[i]);
      if (!inserted && it->second != p.truth[i])
        throw std::invalid_argument("make_trace: inconsistent truth at index " + std::to_string(p.indices[i]));
    }
    if (include_predictions) t.predictions.push_back({names[k], p.indices, p.predicted});
  }
  for (const auto& [idx, v] : truth) {
    t.truth.indices.push_back(idx);
    t.truth.values.push_back(v);
  }
  return t;
}

std::string trace_csv(const Trace& t) {
  std::string out = "index,truth";
  for (const auto& s : t.predictions) out += "," + s.name;
  out += "\n";

  std::vector<std::map<std::size_t, double>> lookup;
  for (const auto& s : t.predictions) {
    std::map<std::size_t, double> m;
    for (std::size_t i = 0; i < s.indices.size(); ++i) m[s.indices[i]] = s.values[i];
    lookup.push_back(std::move(m));
  }
  for (std::size_t r = 0; r < t.truth.indices.size(); ++r) {
    const std::size_t idx = t.truth.indices[r];
    out += std::to_string(idx) + "," + text::format_double(t.truth.values[r]);
    for (const auto& m : lookup) {
      out += ",";
      if (auto it = m.find(idx); it != m.end()) out += text::format_double(it->second);
    }
    out += "\n";
  }
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr std::array<const char*, 6> kColors{"#222222", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace

std::string trace_svg(const Trace& t) {
  constexpr double W = 800, H = 320, left = 60, right = 150, top = 30, bottom = 45;
  const double pw = W - left - right, ph = H - top - bottom;

  std::vector<const TraceSeries*> series{&t.truth};
  for (const auto& s : t.predictions) series.push_back(&s);

  double max_idx = 1.0, max_v = 1.0;
  for (const auto* s : series) {
    for (auto i : s->indices) max_idx = std::max(max_idx, static_cast<double>(i));
    for (auto v : s->values)
      if (std::isfinite(v)) max_v = std::max(max_v, v);
  }
  max_v = std::ceil(max_v / 5.0) * 5.0;
  const auto sx = [&](double i) { return left + pw * i / max_idx; };
  const auto sy = [&](double v) { return top + ph * (1.0 - std::clamp(v, 0.0, max_v) / max_v); };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) +
         "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) + "\">\n";
  out += "  <rect x=\"0\" y=\"0\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) + "\" fill=\"white\"/>\n";
  out += "  <text x=\"" + fmt(left) + "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">trip " +
         std::to_string(t.trip_id) + "</text>\n";
  out += "  <line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top + ph) + "\" x2=\"" + fmt(left + pw) + "\" y2=\"" +
         fmt(top + ph) + "\" stroke=\"black\"/>\n";
  out += "  <line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) + "\" y2=\"" +
         fmt(top + ph) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = max_v * k / 5.0;
    out += "  <text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(sy(v) + 4) +
           "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
  }
  out += "  <text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(H - 10) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">data point index</text>\n";
  out += "  <text x=\"15\" y=\"" + fmt(top + ph / 2) + "\" font-family=\"sans-serif\" font-size=\"11\" "
         "transform=\"rotate(-90 15 " + fmt(top + ph / 2) + ")\" text-anchor=\"middle\">speed (m/s)</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = *series[k];
    const char* color = kColors[k % kColors.size()];
    std::string pts;
    for (std::size_t i = 0; i < s.indices.size(); ++i) {
      if (i) pts += ' ';
      pts += fmt(sx(static_cast<double>(s.indices[i]))) + "," + fmt(sy(s.values[i]));
    }
    out += "  <polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"" +
           (k == 0 ? "2" : "1.3") + "\" points=\"" + pts + "\"><title>" + xml_escape(s.name) +
           "</title></polyline>\n";
    const double ly = top + 14.0 * static_cast<double>(k) + 6.0;
    out += "  <text x=\"" + fmt(left + pw + 12) + "\" y=\"" + fmt(ly) + "\" font-family=\"sans-serif\" "
           "font-size=\"11\" fill=\"" + color + "\">" + xml_escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void emit_trace(const Trace& t, const std::filesystem::path& out, TraceFormat format) {
  text::write_file(out, format == TraceFormat::Csv ? trace_csv(t) : trace_svg(t));
}

}  // namespace swmlp
