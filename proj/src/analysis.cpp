#include "alloydpo/analysis.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::analysis {

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string pct(double v) { return textio::format_fixed(v, 1) + "%"; }

std::string summary_text(const AnalysisReport& r) {
  std::string s;
  if (r.wdl) {
    s += "win/draw/loss over " + std::to_string(r.wdl->n) + " paired samples: " + pct(r.wdl->win_pct) + " / " +
         pct(r.wdl->draw_pct) + " / " + pct(r.wdl->loss_pct) + "\n";
  }
  if (!r.objectives.empty()) {
    s += "objective satisfaction (before -> after, relative change):\n";
    for (const auto& o : r.objectives) {
      s += "  " + o.criterion + ": " + textio::format_fixed(o.rate_before, 3) + " -> " +
           textio::format_fixed(o.rate_after, 3) + ", " +
           (o.pct_change ? (*o.pct_change >= 0 ? "+" : "") + pct(*o.pct_change) : std::string("undefined")) + "\n";
    }
  }
  if (!r.element_freq.empty()) {
    s += "element frequency:\n";
    for (const auto& e : r.element_freq) s += "  " + e.element + " " + textio::format_fixed(e.frequency, 4) + "\n";
  }
  if (r.top_combos) {
    s += "top BCC element sets:\n";
    int rank = 1;
    for (const auto& c : r.top_combos->top) {
      s += "  " + std::to_string(rank++) + ". " + join(c.elements, '-') + " " + pct(c.percent) + "\n";
    }
    if (r.top_combos->subset_percent) {
      s += "  BCC elements within {" + join(r.top_combos->query, ',') + "}: " + pct(*r.top_combos->subset_percent) +
           "\n";
    }
  }
  return s;
}

}  // namespace

ComparisonResult win_draw_loss(std::span<const double> a, std::span<const double> b, double tie_eps) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "win/draw/loss needs equally sized lists");
  if (a.empty()) throw Error(ErrorCode::EmptyInput, "win/draw/loss needs at least one pair");
  std::size_t win = 0, loss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    win += d > tie_eps;
    loss += d < -tie_eps;
  }
  const double n = static_cast<double>(a.size());
  const std::size_t draw = a.size() - win - loss;
  return {100.0 * static_cast<double>(win) / n, 100.0 * static_cast<double>(draw) / n,
          100.0 * static_cast<double>(loss) / n, a.size()};
}

ComparisonResult win_draw_loss(std::span<const reward::ScoredCandidate> a, std::span<const reward::ScoredCandidate> b,
                               double tie_eps) {
  std::vector<double> ra, rb;
  for (const auto& s : a) ra.push_back(s.reward);
  for (const auto& s : b) rb.push_back(s.reward);
  return win_draw_loss(ra, rb, tie_eps);
}

std::array<double, 4> objective_satisfaction(std::span<const reward::CriteriaResult> criteria) {
  if (criteria.empty()) throw Error(ErrorCode::EmptyInput, "objective satisfaction needs candidates");
  std::array<double, 4> count{};
  for (const auto& c : criteria) {
    count[0] += c.bcc_b2_exist;
    count[1] += c.bcc_forms_first;
    count[2] += c.b2_room_temp;
    count[3] += !c.others_exceed_10pct;
  }
  for (auto& v : count) v /= static_cast<double>(criteria.size());
  return count;
}

std::array<double, 4> objective_satisfaction(std::span<const reward::ScoredCandidate> scored) {
  std::vector<reward::CriteriaResult> c;
  c.reserve(scored.size());
  for (const auto& s : scored) c.push_back(s.criteria);
  return objective_satisfaction(c);
}

std::optional<double> relative_change(double before, double after) {
  if (before == 0.0) return std::nullopt;
  return 100.0 * (after - before) / before;
}

std::vector<ObjectiveDelta> objective_delta(const std::array<double, 4>& before, const std::array<double, 4>& after) {
  std::vector<ObjectiveDelta> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out.push_back({std::string(kCriterionNames[i]), before[i], after[i], relative_change(before[i], after[i])});
  }
  return out;
}

std::vector<ElementFrequency> element_frequency(std::span<const chem::CandidateTriple> triples, Which which) {
  if (triples.empty()) throw Error(ErrorCode::EmptyInput, "element frequency needs candidates");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  auto add = [&](const chem::Composition& c) {
    for (const auto& [sym, x] : c.entries()) {
      ++counts[sym];
      ++total;
    }
  };
  for (const auto& t : triples) {
    if (which != Which::B2) add(t.bcc);
    if (which != Which::Bcc) add(t.b2);
  }
  std::vector<ElementFrequency> out;
  for (const auto& [sym, n] : counts) {
    out.push_back({sym, static_cast<double>(n) / static_cast<double>(total)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ElementFrequency& a, const ElementFrequency& b) { return a.frequency > b.frequency; });
  return out;
}

TopCombinations top_combinations(std::span<const chem::CandidateTriple> triples, int k,
                                 std::span<const std::string> query) {
  if (triples.empty()) throw Error(ErrorCode::EmptyInput, "top combinations needs candidates");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  const std::set<std::string> q(query.begin(), query.end());
  std::map<std::vector<std::string>, std::size_t> counts;
  std::size_t inside = 0;
  for (const auto& t : triples) {
    auto els = t.bcc.elements();  // already sorted
    inside += std::all_of(els.begin(), els.end(), [&](const std::string& e) { return q.count(e) > 0; });
    ++counts[std::move(els)];
  }
  const double n = static_cast<double>(triples.size());
  std::vector<Combination> all;
  for (const auto& [els, c] : counts) all.push_back({els, c, 100.0 * static_cast<double>(c) / n});
  std::stable_sort(all.begin(), all.end(),
                   [](const Combination& a, const Combination& b) { return a.count > b.count; });
  if (all.size() > static_cast<std::size_t>(k)) all.resize(static_cast<std::size_t>(k));

  TopCombinations out;
  out.top = std::move(all);
  out.query.assign(q.begin(), q.end());
  if (!q.empty()) out.subset_percent = 100.0 * static_cast<double>(inside) / n;
  return out;
}

nlohmann::ordered_json to_json(const AnalysisReport& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (r.wdl) {
    j["win_draw_loss"] = {{"win_pct", r.wdl->win_pct},
                          {"draw_pct", r.wdl->draw_pct},
                          {"loss_pct", r.wdl->loss_pct},
                          {"n", r.wdl->n}};
  }
  if (!r.objectives.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& o : r.objectives) {
      arr.push_back({{"criterion", o.criterion},
                     {"rate_before", o.rate_before},
                     {"rate_after", o.rate_after},
                     {"pct_change", o.pct_change ? nlohmann::ordered_json(*o.pct_change) : nlohmann::ordered_json()}});
    }
    j["objectives"] = std::move(arr);
  }
  if (!r.element_freq.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : r.element_freq) arr.push_back({{"element", e.element}, {"frequency", e.frequency}});
    j["element_frequency"] = std::move(arr);
  }
  if (r.top_combos) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : r.top_combos->top) {
      arr.push_back({{"elements", c.elements}, {"count", c.count}, {"percent", c.percent}});
    }
    nlohmann::ordered_json tc;
    tc["top"] = std::move(arr);
    tc["query"] = r.top_combos->query;
    tc["subset_percent"] =
        r.top_combos->subset_percent ? nlohmann::ordered_json(*r.top_combos->subset_percent) : nlohmann::ordered_json();
    j["top_combinations"] = std::move(tc);
  }
  return j;
}

AnalysisReport report_from_json(const nlohmann::json& j) {
  try {
    AnalysisReport r;
    if (j.contains("win_draw_loss")) {
      const auto& w = j.at("win_draw_loss");
      r.wdl = ComparisonResult{w.at("win_pct").get<double>(), w.at("draw_pct").get<double>(),
                               w.at("loss_pct").get<double>(), w.at("n").get<std::size_t>()};
    }
    if (j.contains("objectives")) {
      for (const auto& o : j.at("objectives")) {
        ObjectiveDelta d{o.at("criterion").get<std::string>(), o.at("rate_before").get<double>(),
                         o.at("rate_after").get<double>(), std::nullopt};
        if (!o.at("pct_change").is_null()) d.pct_change = o.at("pct_change").get<double>();
        r.objectives.push_back(std::move(d));
      }
    }
    if (j.contains("element_frequency")) {
      for (const auto& e : j.at("element_frequency")) {
        r.element_freq.push_back({e.at("element").get<std::string>(), e.at("frequency").get<double>()});
      }
    }
    if (j.contains("top_combinations")) {
      const auto& t = j.at("top_combinations");
      TopCombinations tc;
      for (const auto& c : t.at("top")) {
        tc.top.push_back({c.at("elements").get<std::vector<std::string>>(), c.at("count").get<std::size_t>(),
                          c.at("percent").get<double>()});
      }
      tc.query = t.at("query").get<std::vector<std::string>>();
      if (!t.at("subset_percent").is_null()) tc.subset_percent = t.at("subset_percent").get<double>();
      r.top_combos = std::move(tc);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("analysis report: ") + e.what());
  }
}

void emit_report(const AnalysisReport& r, const std::filesystem::path& dir) {
  if (r.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to report");
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, "output directory missing: " + dir.string());
  using textio::format_double;
  textio::write_file_atomic(dir / "analysis.json", to_json(r).dump(2) + "\n");
  textio::write_file_atomic(dir / "summary.txt", summary_text(r));
  if (r.wdl) {
    textio::write_file_atomic(dir / "wdl.csv", "win,draw,loss\n" + format_double(r.wdl->win_pct) + "," +
                                                   format_double(r.wdl->draw_pct) + "," +
                                                   format_double(r.wdl->loss_pct) + "\n");
  }
  if (!r.objectives.empty()) {
    std::string s = "criterion,rate_before,rate_after,pct_change\n";
    for (const auto& o : r.objectives) {
      s += o.criterion + "," + format_double(o.rate_before) + "," + format_double(o.rate_after) + "," +
           (o.pct_change ? format_double(*o.pct_change) : "") + "\n";
    }
    textio::write_file_atomic(dir / "objectives.csv", s);
  }
  if (!r.element_freq.empty()) {
    std::string s = "element,frequency\n";
    for (const auto& e : r.element_freq) s += e.element + "," + format_double(e.frequency) + "\n";
    textio::write_file_atomic(dir / "element_freq.csv", s);
  }
  if (r.top_combos) {
    std::string s = "rank,elements,percent\n";
    int rank = 1;
    for (const auto& c : r.top_combos->top) {
      s += std::to_string(rank++) + "," + join(c.elements, '-') + "," + format_double(c.percent) + "\n";
    }
    textio::write_file_atomic(dir / "top_combos.csv", s);
  }
}

AnalysisReport read_report(const std::filesystem::path& dir) {
  const auto text = textio::read_file(dir / "analysis.json");
  try {
    return report_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("analysis.json: ") + e.what());
  }
}

}  // namespace alloydpo::analysis
