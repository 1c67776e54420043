#pragma once

// Orchestration of the analysis chain: cluster -> specify -> posterior ->
// tracks -> decide, plus machine-readable and tabular export.

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsintel/analyst/corpus_io.hpp"
#include "dsintel/decision.hpp"
#include "dsintel/domain_posterior.hpp"
#include "dsintel/metacluster.hpp"
#include "dsintel/specifier.hpp"
#include "dsintel/track_graph.hpp"
#include <nlohmann/json.hpp>

namespace dsintel::analyst {

/// A failure inside one pipeline stage, tagged with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct Stages {
  bool cluster = true;
  bool specify = true;
  bool posterior = true;
  bool tracks = true;
  bool decide = true;
};

struct PipelineFlags {
  SearchConfig search;
  Stages stages;
  double v_max = 25.0;
  double q_cap = kDefaultEdgeCap;
  std::size_t top_k = 3;
  double rho = 0.5;
  std::size_t threads = 1;
};

struct ClusterTracks {
  std::size_t block = 0;
  std::vector<std::size_t> vertices;  // report indices in rank (time) order
  std::vector<std::size_t> excluded;  // block members lacking time/position
  std::optional<TrackGraph> graph;
  std::vector<RankedPath> best;
  std::optional<TrackAnalysis> oracle;
};

struct MakerDecision {
  DecisionMaker maker;
  RhoSegmentation segmentation;
  std::vector<double> competitive;
  std::size_t played = 0;
};

struct DecisionResult {
  double rho = 0.5;
  std::vector<MakerDecision> makers;
};

struct PipelineResult {
  std::optional<Partition> partition;
  std::optional<MetaConflictReport> metaconflict;
  std::optional<MembershipSpecification> membership;
  std::optional<PosteriorDistribution> posterior;
  std::vector<ClusterTracks> tracks;
  std::optional<DecisionResult> decision;
  std::vector<std::string> warnings;
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline ClusterTracks analyze_block(const EvidenceCorpus& corpus,
                                   const std::vector<std::size_t>& block,
                                   std::size_t block_index,
                                   const PipelineFlags& flags,
                                   std::vector<std::string>& warnings) {
  ClusterTracks ct;
  ct.block = block_index;
  for (std::size_t i : block) {
    if (corpus[i].time_s && corpus[i].position)
      ct.vertices.push_back(i);
    else
      ct.excluded.push_back(i);
  }
  for (std::size_t i : ct.excluded)
    warnings.push_back("report '" + corpus[i].id +
                       "' lacks time or position; excluded from track analysis");
  std::stable_sort(ct.vertices.begin(), ct.vertices.end(),
                   [&](std::size_t a, std::size_t b) {
                     return *corpus[a].time_s < *corpus[b].time_s;
                   });
  if (ct.vertices.empty()) return ct;

  std::vector<TrackVertex> vs;
  for (std::size_t i : ct.vertices) {
    const double p = std::min(1.0 - corpus[i].evidence.theta_mass(), flags.q_cap);
    vs.push_back({corpus[i].id, corpus[i].time_s, corpus[i].position, p});
  }
  ct.graph = build_kinematic_graph(std::move(vs), flags.v_max, flags.q_cap);
  ct.best = best_path_dp(*ct.graph, flags.top_k);
  if (ct.graph->size() <= kTrackOracleLimit)
    ct.oracle = combine_oracle(*ct.graph, flags.threads);
  return ct;
}

}  // namespace detail

inline PipelineResult run_pipeline(const CorpusFile& input, const PipelineFlags& flags) {
  PipelineResult out;
  const auto& corpus = input.corpus;
  const auto& prior = input.prior;
  const Stages& st = flags.stages;
  const bool need_partition = st.cluster || st.specify || st.posterior || st.tracks;

  if (need_partition) {
    detail::stage("cluster", [&] {
      SearchConfig cfg = flags.search;
      cfg.threads = flags.threads;
      auto found = partition_search(corpus, prior, cfg);
      out.partition = std::move(found.partition);
      out.metaconflict = std::move(found.report);
      return 0;
    });
  }
  if (st.specify) {
    out.membership = detail::stage("specify", [&] {
      return specify_corpus(corpus, *out.partition, prior);
    });
  }
  if (st.posterior) {
    out.posterior = detail::stage("posterior", [&] {
      const auto supports = partition_supports(corpus, *out.partition);
      return posterior_distribution(counting_bpa(supports), prior);
    });
  }
  if (st.tracks) {
    detail::stage("tracks", [&] {
      const auto& blocks = out.partition->blocks();
      for (std::size_t b = 0; b < blocks.size(); ++b)
        out.tracks.push_back(
            detail::analyze_block(corpus, blocks[b], b, flags, out.warnings));
      return 0;
    });
  }
  if (st.decide && input.decision) {
    out.decision = detail::stage("decide", [&] {
      DecisionResult dr;
      dr.rho = flags.rho;
      const auto makers = input.decision->interval_makers();
      const auto competitive = competitive_preferences(makers);
      const auto played = sequential_play(makers, flags.rho);
      for (std::size_t m = 0; m < makers.size(); ++m)
        dr.makers.push_back({makers[m], rho_segmentation(makers[m].choices),
                             competitive[m], played.choice[m]});
      return dr;
    });
  }
  return out;
}

inline nlohmann::ordered_json to_json(const EvidenceCorpus& corpus,
                                      const PipelineResult& r) {
  using ojson = nlohmann::ordered_json;
  ojson doc = ojson::object();
  auto ids = [&](const std::vector<std::size_t>& idx) {
    ojson a = ojson::array();
    for (std::size_t i : idx) a.push_back(corpus[i].id);
    return a;
  };

  if (r.partition) {
    ojson parts = ojson::array();
    for (const auto& b : r.partition->blocks()) parts.push_back(ids(b));
    doc["partition"] = parts;
  }
  if (r.metaconflict) {
    doc["metaconflict"] = {{"c0", r.metaconflict->c0},
                           {"clusters", r.metaconflict->cluster_conflicts},
                           {"mcf", r.metaconflict->mcf}};
  }
  if (r.membership) {
    ojson mem = ojson::object();
    for (std::size_t j = 0; j < corpus.size(); ++j) {
      const auto& rm = r.membership->reports[j];
      mem[corpus[j].id] = {{"block", r.partition->block_of(j)},
                           {"plausibility", rm.plausibility},
                           {"new", rm.fresh_plausibility},
                           {"weights", rm.weights}};
    }
    doc["membership"] = mem;
  }
  if (r.posterior) {
    ojson post = ojson::object();
    for (std::size_t k = 0; k < r.posterior->probabilities.size(); ++k)
      post[std::to_string(k + 1)] = r.posterior->probabilities[k];
    doc["posterior"] = post;
  }
  if (r.partition && !r.tracks.empty()) {
    ojson tracks = ojson::array();
    for (const auto& ct : r.tracks) {
      ojson t;
      t["block"] = ct.block;
      ojson paths = ojson::array();
      for (const auto& rp : ct.best) {
        ojson p;
        std::vector<std::size_t> members;
        for (std::size_t v : rp.path) members.push_back(ct.vertices[v]);
        p["vertices"] = ids(members);
        p["plausibility_unnorm"] = rp.plausibility_unnorm;
        if (ct.oracle) {
          const auto& a = ct.oracle->find(rp.path);
          p["plausibility_norm"] = a.plausibility;
          p["support"] = a.support;
        }
        paths.push_back(p);
      }
      t["best_paths"] = paths;
      if (ct.oracle) t["conflict"] = ct.oracle->conflict;
      if (!ct.excluded.empty()) t["excluded"] = ids(ct.excluded);
      tracks.push_back(t);
    }
    doc["tracks"] = tracks;
  }
  if (r.decision) {
    ojson dec;
    dec["rho"] = r.decision->rho;
    ojson makers = ojson::array();
    for (const auto& md : r.decision->makers) {
      ojson m;
      m["id"] = md.maker.id;
      ojson choices = ojson::array();
      for (std::size_t c = 0; c < md.maker.choices.size(); ++c) {
        const auto& ch = md.maker.choices[c];
        choices.push_back({{"id", ch.id},
                           {"e_low", ch.e_low},
                           {"e_high", ch.e_high},
                           {"preference", md.segmentation.preference[c]},
                           {"competitive_preference", md.competitive[c]}});
      }
      m["choices"] = choices;
      ojson segs = ojson::array();
      for (const auto& s : md.segmentation.segments) {
        ojson w = ojson::array();
        for (std::size_t i : s.winners) w.push_back(md.maker.choices[i].id);
        segs.push_back({{"from", s.lo}, {"to", s.hi}, {"winners", w}});
      }
      m["segments"] = segs;
      m["choice_at_rho"] = md.maker.choices[md.played].id;
      makers.push_back(m);
    }
    dec["makers"] = makers;
    doc["decision"] = dec;
  }
  if (!r.warnings.empty()) doc["warnings"] = r.warnings;
  return doc;
}

inline std::string to_json_text(const EvidenceCorpus& corpus, const PipelineResult& r) {
  return to_json(corpus, r).dump(2) + "\n";
}

/// Aligned human-readable tables of whatever stages ran.
inline void print_tables(std::ostream& os, const EvidenceCorpus& corpus,
                         const PipelineResult& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  std::size_t id_width = 8;
  for (const auto& rep : corpus.reports()) id_width = std::max(id_width, rep.id.size() + 2);

  if (r.partition && r.metaconflict) {
    out << "Partition (" << r.partition->block_count() << " blocks)\n";
    out << std::left << std::setw(8) << "block" << std::setw(12) << "conflict"
        << "reports\n";
    for (std::size_t b = 0; b < r.partition->block_count(); ++b) {
      out << std::setw(8) << b << std::setw(12) << r.metaconflict->cluster_conflicts[b];
      for (std::size_t i : r.partition->blocks()[b]) out << corpus[i].id << ' ';
      out << '\n';
    }
    out << "domain conflict c0 = " << r.metaconflict->c0
        << "   metaconflict = " << r.metaconflict->mcf << "\n\n";
  }
  if (r.membership) {
    out << "Membership plausibility\n" << std::left << std::setw(static_cast<int>(id_width))
        << "report";
    for (std::size_t b = 0; b < r.partition->block_count(); ++b)
      out << std::setw(12) << ("block " + std::to_string(b));
    out << std::setw(12) << "new" << '\n';
    for (std::size_t j = 0; j < corpus.size(); ++j) {
      out << std::setw(static_cast<int>(id_width)) << corpus[j].id;
      for (double p : r.membership->reports[j].plausibility) out << std::setw(12) << p;
      out << std::setw(12) << r.membership->reports[j].fresh_plausibility << '\n';
    }
    out << '\n';
  }
  if (r.posterior) {
    out << "Posterior over number of targets\n";
    for (std::size_t k = 0; k < r.posterior->probabilities.size(); ++k)
      out << "  r = " << std::setw(4) << k + 1 << r.posterior->probabilities[k] << '\n';
    out << '\n';
  }
  for (const auto& ct : r.tracks) {
    out << "Tracks for block " << ct.block << " (" << ct.vertices.size() << " vertices";
    if (ct.oracle) out << ", conflict " << ct.oracle->conflict;
    out << ")\n";
    for (std::size_t k = 0; k < ct.best.size(); ++k) {
      const auto& rp = ct.best[k];
      out << "  #" << k + 1 << "  pls_unnorm " << rp.plausibility_unnorm;
      if (ct.oracle) {
        const auto& a = ct.oracle->find(rp.path);
        out << "  pls " << a.plausibility << "  bel " << a.support;
      }
      out << "  path:";
      for (std::size_t v : rp.path) out << ' ' << corpus[ct.vertices[v]].id;
      out << '\n';
    }
    out << '\n';
  }
  if (r.decision) {
    out << "Decision analysis (choice at rho = " << r.decision->rho << ")\n";
    for (const auto& md : r.decision->makers) {
      out << "  maker " << md.maker.id << '\n';
      int w = 12;
      for (const auto& ch : md.maker.choices)
        w = std::max(w, static_cast<int>(ch.id.size()) + 2);
      out << "    " << std::left << std::setw(w) << "choice" << std::setw(12) << "E_low"
          << std::setw(12) << "E_high" << std::setw(12) << "pref" << std::setw(12)
          << "competitive" << '\n';
      for (std::size_t c = 0; c < md.maker.choices.size(); ++c) {
        const auto& ch = md.maker.choices[c];
        out << "    " << std::setw(w) << ch.id << std::setw(12) << ch.e_low
            << std::setw(12) << ch.e_high << std::setw(12) << md.segmentation.preference[c]
            << std::setw(12) << md.competitive[c] << (c == md.played ? " *" : "") << '\n';
      }
    }
    out << '\n';
  }
  os << out.str();
}

}  // namespace dsintel::analyst
