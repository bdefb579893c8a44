#include "alloydpo/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <unordered_set>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::data {

namespace {

// Calls `fn` with every k-subset of [0, n) in lexicographic order.
void for_each_subset(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

void push_unique(std::vector<chem::Composition>& out, std::set<std::string>& seen, chem::Composition c) {
  if (seen.insert(chem::format_composition(c)).second) out.push_back(std::move(c));
}

}  // namespace

std::vector<double> snap_concentrations(std::span<const double> concentrations) {
  std::vector<double> out;
  for (double c : concentrations) {
    if (!(c > 0.0 && c <= 1.0)) throw Error(ErrorCode::InvalidArgument, "concentration outside (0, 1]");
    const double thirds = std::round(c * 3.0);
    out.push_back(std::abs(c - thirds / 3.0) < 0.005 ? thirds / 3.0 : c);
  }
  return out;
}

std::vector<chem::Composition> enumerate_bcc_pool(const chem::RoleTable& roles, std::span<const double> concentrations,
                                                  int max_elements) {
  const auto formers = roles.bcc_formers();
  if (formers.empty()) throw Error(ErrorCode::EmptyRoleTable, "no BCC-forming elements");
  if (concentrations.empty()) throw Error(ErrorCode::InvalidArgument, "empty concentration set");
  const auto grid = snap_concentrations(concentrations);

  std::vector<chem::Composition> out;
  std::set<std::string> seen;
  for (const auto& sym : formers) push_unique(out, seen, chem::Composition::pure(sym));
  const std::size_t kmax = std::min<std::size_t>(static_cast<std::size_t>(max_elements), formers.size());
  for (std::size_t k = 2; k <= kmax; ++k) {
    for_each_subset(formers.size(), k, [&](const std::vector<std::size_t>& subset) {
      std::vector<std::size_t> pick(k, 0);  // odometer over grid values
      while (true) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) sum += grid[pick[i]];
        if (std::abs(sum - 1.0) < 1e-6) {
          std::map<std::string, double> amounts;
          for (std::size_t i = 0; i < k; ++i) amounts[formers[subset[i]]] = grid[pick[i]];
          push_unique(out, seen, chem::Composition::from_amounts(amounts));
        }
        std::size_t pos = 0;
        while (pos < k && ++pick[pos] == grid.size()) pick[pos++] = 0;
        if (pos == k) break;
      }
    });
  }
  return out;
}

std::vector<chem::Composition> enumerate_b2_pool(const chem::RoleTable& roles) {
  const auto a_site = roles.a_site();
  const auto b_site = roles.b_site();
  if (a_site.empty() || b_site.empty()) throw Error(ErrorCode::EmptyRoleTable, "B2 needs A-site and B-site elements");

  std::vector<std::vector<std::string>> a_fill;
  std::vector<std::vector<std::string>> b_fill;
  for (std::size_t k = 1; k <= 2; ++k) {
    for_each_subset(a_site.size(), k, [&](const std::vector<std::size_t>& s) {
      std::vector<std::string> fill;
      for (auto i : s) fill.push_back(a_site[i]);
      a_fill.push_back(std::move(fill));
    });
    for_each_subset(b_site.size(), k, [&](const std::vector<std::size_t>& s) {
      std::vector<std::string> fill;
      for (auto i : s) fill.push_back(b_site[i]);
      b_fill.push_back(std::move(fill));
    });
  }
  std::vector<chem::Composition> out;
  std::set<std::string> seen;
  for (const auto& a : a_fill) {
    for (const auto& b : b_fill) {
      std::map<std::string, double> amounts;
      bool overlap = false;
      for (const auto& sym : a) amounts[sym] = 0.5 / static_cast<double>(a.size());
      for (const auto& sym : b) {
        if (amounts.count(sym)) overlap = true;
        amounts[sym] = 0.5 / static_cast<double>(b.size());
      }
      if (!overlap) push_unique(out, seen, chem::Composition::from_amounts(amounts));
    }
  }
  return out;
}

std::vector<chem::Composition> filter_single_phase(std::span<const chem::Composition> pool,
                                                   const phase::PhaseOracle& oracle, std::span<const double> grid,
                                                   phase::PhaseClass target, double min_frac) {
  if (!(min_frac > 0.0 && min_frac <= 1.0)) throw Error(ErrorCode::InvalidArgument, "min_frac must be in (0, 1]");
  std::vector<chem::Composition> kept;
  for (const auto& c : pool) {
    const auto table = oracle.equilibrium(c, grid);
    for (std::size_t t = 0; t < table.grid.size(); ++t) {
      if (table.fraction(t, target) >= min_frac) {
        kept.push_back(c);
        break;
      }
    }
  }
  return kept;
}

std::string format_pool_csv(const CompositionPool& pool) {
  std::string out = "formula,role,provenance\n";
  for (const auto& e : pool.bcc) out += chem::format_composition(e.composition) + ",bcc," + e.provenance + "\n";
  for (const auto& e : pool.b2) out += chem::format_composition(e.composition) + ",b2," + e.provenance + "\n";
  return out;
}

CompositionPool read_pool_csv(const std::filesystem::path& path, const chem::ElementTable& table) {
  const auto lines = textio::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::EmptyPool, "pool file is empty: " + path.string());
  const auto header = textio::split(textio::trim(lines[0]), ',');
  auto column = [&](std::string_view name) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const auto c_formula = column("formula");
  const auto c_role = column("role");
  const auto c_prov = column("provenance");
  if (c_formula < 0 || c_role < 0) throw Error(ErrorCode::SchemaError, "pool file needs formula and role columns");
  CompositionPool pool;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (textio::trim(lines[i]).empty()) continue;
    const auto f = textio::split(textio::trim(lines[i]), ',');
    if (f.size() != header.size()) throw Error(ErrorCode::SchemaError, "pool row has wrong field count: " + lines[i]);
    PoolEntry e{chem::parse_formula(f[c_formula], table), c_prov >= 0 ? f[c_prov] : std::string()};
    if (f[c_role] == "bcc") {
      pool.bcc.push_back(std::move(e));
    } else if (f[c_role] == "b2") {
      pool.b2.push_back(std::move(e));
    } else {
      throw Error(ErrorCode::SchemaError, "pool role must be bcc or b2: " + lines[i]);
    }
  }
  return pool;
}

double VolumeSampler::draw(Rng& rng) const {
  if (kind == Kind::Uniform) return rng.uniform(chem::kMinB2Volume, chem::kMaxB2Volume);
  return std::clamp(rng.normal(mean, sd), chem::kMinB2Volume, chem::kMaxB2Volume);
}

std::vector<SftExample> build_sft_dataset(const CompositionPool& pool, int volumes_per_pair,
                                          const VolumeSampler& sampler, std::uint64_t seed) {
  if (pool.bcc.empty() || pool.b2.empty()) throw Error(ErrorCode::EmptyPool, "SFT pool needs BCC and B2 entries");
  if (volumes_per_pair < 1) throw Error(ErrorCode::InvalidArgument, "volumes_per_pair must be >= 1");
  Rng rng(seed);
  std::vector<SftExample> out;
  out.reserve(pool.bcc.size() * pool.b2.size() * static_cast<std::size_t>(volumes_per_pair));
  for (const auto& bcc : pool.bcc) {
    for (const auto& b2 : pool.b2) {
      for (int k = 0; k < volumes_per_pair; ++k) {
        const double v = std::round(sampler.draw(rng) * 1000.0) / 1000.0;
        auto triple = chem::CandidateTriple::make(bcc.composition, b2.composition, v);
        std::string completion = chem::format_triple(triple);
        out.push_back({std::string(kPromptTemplate), std::move(completion), std::move(triple)});
      }
    }
  }
  return out;
}

std::vector<PreferencePair> build_dpo_pairs(std::span<const reward::ScoredCandidate> scored, double top_frac,
                                            int rejected_per_chosen, std::uint64_t seed) {
  std::vector<RankedCompletion> ranked;
  ranked.reserve(scored.size());
  for (const auto& s : scored) ranked.push_back({chem::format_triple(s.triple), s.reward});
  return build_dpo_pairs(ranked, top_frac, rejected_per_chosen, seed);
}

std::vector<PreferencePair> build_dpo_pairs(std::span<const RankedCompletion> scored, double top_frac,
                                            int rejected_per_chosen, std::uint64_t seed) {
  if (scored.empty()) throw Error(ErrorCode::EmptyInput, "no scored candidates");
  if (!(top_frac > 0.0 && top_frac <= 1.0)) throw Error(ErrorCode::InvalidArgument, "top_frac must be in (0, 1]");
  if (rejected_per_chosen < 1) throw Error(ErrorCode::InvalidArgument, "rejected_per_chosen must be >= 1");
  const std::size_t n = scored.size();
  const std::size_t k = static_cast<std::size_t>(rejected_per_chosen);

  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].reward > scored[b].reward; });
  const auto n_chosen = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(top_frac * static_cast<double>(n) - 1e-9)));

  Rng rng(seed);
  std::vector<PreferencePair> pairs;
  pairs.reserve(n_chosen * k);
  std::size_t lower_start = 0;  // first rank with reward strictly below the current chosen
  std::vector<std::size_t> picked;
  std::unordered_set<std::size_t> picked_set;
  for (std::size_t i = 0; i < n_chosen; ++i) {
    const double r_chosen = scored[rank[i]].reward;
    lower_start = std::max(lower_start, i + 1);
    while (lower_start < n && !(scored[rank[lower_start]].reward < r_chosen)) ++lower_start;
    const std::size_t pool = n - lower_start;
    if (pool < k) {
      throw Error(ErrorCode::InsufficientRejectPool, "chosen rank " + std::to_string(i) + " has " +
                                                         std::to_string(pool) + " strictly lower candidates, " +
                                                         std::to_string(k) + " requested");
    }
    // Floyd's sampling of k distinct offsets from [0, pool).
    picked.clear();
    picked_set.clear();
    for (std::size_t j = pool - k; j < pool; ++j) {
      std::size_t t = static_cast<std::size_t>(rng.below(j + 1));
      if (picked_set.count(t)) t = j;
      picked_set.insert(t);
      picked.push_back(t);
    }
    for (std::size_t off : picked) {
      const std::size_t rej = rank[lower_start + off];
      pairs.push_back({std::string(kPromptTemplate), scored[rank[i]].text, scored[rej].text, r_chosen, scored[rej].reward});
    }
  }
  return pairs;
}

std::string format_sft_jsonl(std::span<const SftExample> examples) {
  std::string out;
  for (const auto& e : examples) {
    nlohmann::ordered_json j;
    j["prompt"] = e.prompt;
    j["completion"] = e.completion;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string format_pairs_jsonl(std::span<const PreferencePair> pairs) {
  std::string out;
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["prompt"] = p.prompt;
    j["chosen"] = p.chosen;
    j["rejected"] = p.rejected;
    j["chosen_reward"] = p.chosen_reward;
    j["rejected_reward"] = p.rejected_reward;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<SftExample> read_sft_jsonl(const std::filesystem::path& path, const chem::ElementTable& table) {
  std::vector<SftExample> out;
  for (const auto& line : textio::read_lines(path)) {
    if (textio::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SftExample e;
      e.prompt = j.at("prompt").get<std::string>();
      e.completion = j.at("completion").get<std::string>();
      e.triple = chem::parse_triple(e.completion, table);
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::SchemaError, std::string("SFT record: ") + ex.what());
    }
  }
  return out;
}

std::vector<PreferencePair> read_pairs_jsonl(const std::filesystem::path& path) {
  std::vector<PreferencePair> out;
  for (const auto& line : textio::read_lines(path)) {
    if (textio::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("prompt").get<std::string>(), j.at("chosen").get<std::string>(),
                     j.at("rejected").get<std::string>(), j.at("chosen_reward").get<double>(),
                     j.at("rejected_reward").get<double>()});
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::SchemaError, std::string("preference record: ") + ex.what());
    }
  }
  return out;
}

}  // namespace alloydpo::data
