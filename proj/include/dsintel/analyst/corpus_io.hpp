#pragma once

// Reading the self-describing corpus file: frame, reports, domain prior and
// an optional decision problem.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "dsintel/decision.hpp"
#include "dsintel/ds_core.hpp"
#include "dsintel/metacluster.hpp"
#include <nlohmann/json.hpp>

namespace dsintel::analyst {

using json = nlohmann::json;

struct DecisionChoiceSpec {
  std::string id;
  MassFunction mass;
};

struct DecisionMakerSpec {
  std::string id;
  std::vector<DecisionChoiceSpec> choices;
};

struct DecisionProblem {
  std::vector<double> utilities;  // per frame element
  std::vector<DecisionMakerSpec> makers;

  /// Interval form of every maker's choices.
  std::vector<DecisionMaker> interval_makers() const {
    std::vector<DecisionMaker> out;
    for (const auto& m : makers) {
      DecisionMaker dm{m.id, {}};
      for (const auto& c : m.choices)
        dm.choices.push_back(expected_interval(UtilityBpa(c.mass, utilities), c.id));
      out.push_back(std::move(dm));
    }
    return out;
  }
};

struct CorpusFile {
  EvidenceCorpus corpus;
  DomainPrior prior;
  std::optional<DecisionProblem> decision;
};

namespace detail {

inline std::string where(const std::string& source, const std::string& path) {
  return source + ": " + path + ": ";
}

inline const json& require(const json& obj, const char* key,
                           const std::string& ctx) {
  if (!obj.is_object() || !obj.contains(key))
    throw ValidationError(ctx + "missing field '" + key + "'");
  return obj.at(key);
}

inline double number(const json& v, const std::string& ctx) {
  if (!v.is_number()) throw ValidationError(ctx + "expected a number");
  return v.get<double>();
}

inline MassFunction parse_masses(const json& masses, const FramePtr& frame,
                                 const std::string& ctx) {
  if (!masses.is_array()) throw ValidationError(ctx + "'masses' must be an array");
  std::vector<MassFunction::Entry> entries;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    const std::string here = ctx + "masses[" + std::to_string(k) + "]: ";
    const auto& set = require(masses[k], "set", here);
    if (!set.is_array()) throw ValidationError(here + "'set' must be an array");
    std::vector<std::string> labels;
    for (const auto& e : set) {
      if (!e.is_string()) throw ValidationError(here + "set elements must be strings");
      labels.push_back(e.get<std::string>());
    }
    Subset s;
    try {
      s = frame->subset_of(labels);
    } catch (const ValidationError& e) {
      throw ValidationError(here + e.what());
    }
    entries.emplace_back(s, number(require(masses[k], "mass", here), here + "mass: "));
  }
  try {
    return make_mass(frame, entries);
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + e.what());
  }
}

}  // namespace detail

inline CorpusFile parse_corpus(const json& doc, const std::string& source = "<input>") {
  using detail::require;
  const std::string top = source + ": ";
  if (!doc.is_object()) throw ValidationError(top + "document must be a JSON object");

  const auto& frame_json = require(doc, "frame", top);
  if (!frame_json.is_array()) throw ValidationError(top + "'frame' must be an array");
  std::vector<std::string> elements;
  for (const auto& e : frame_json) {
    if (!e.is_string()) throw ValidationError(top + "frame elements must be strings");
    elements.push_back(e.get<std::string>());
  }
  FramePtr frame;
  try {
    frame = Frame::make(std::move(elements));
  } catch (const ValidationError& e) {
    throw ValidationError(top + "frame: " + e.what());
  }

  const auto& reports_json = require(doc, "reports", top);
  if (!reports_json.is_array()) throw ValidationError(top + "'reports' must be an array");
  std::vector<Report> reports;
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < reports_json.size(); ++i) {
    const auto& r = reports_json[i];
    std::string ctx = detail::where(source, "reports[" + std::to_string(i) + "]");
    const auto& id_json = require(r, "id", ctx);
    if (!id_json.is_string()) throw ValidationError(ctx + "'id' must be a string");
    const std::string id = id_json.get<std::string>();
    ctx = detail::where(source, "reports[" + std::to_string(i) + "] (id '" + id + "')");
    if (!ids.insert(id).second) throw ValidationError(ctx + "duplicate report id '" + id + "'");

    Report rep{id, detail::parse_masses(require(r, "masses", ctx), frame, ctx),
               std::nullopt, std::nullopt};
    if (r.contains("time") && !r["time"].is_null())
      rep.time_s = detail::number(r["time"], ctx + "time: ");
    if (r.contains("pos") && !r["pos"].is_null()) {
      const auto& pos = r["pos"];
      if (!pos.is_array() || pos.size() != 2)
        throw ValidationError(ctx + "'pos' must be [x_km, y_km]");
      rep.position = Position{detail::number(pos[0], ctx + "pos: "),
                              detail::number(pos[1], ctx + "pos: ")};
    }
    reports.push_back(std::move(rep));
  }
  if (reports.empty()) throw ValidationError(top + "corpus has no reports");
  const std::size_t n_reports = reports.size();
  EvidenceCorpus corpus(frame, std::move(reports));

  std::optional<DomainPrior> prior;
  if (doc.contains("prior") && !doc["prior"].is_null()) {
    const auto& pj = doc["prior"];
    if (!pj.is_object()) throw ValidationError(top + "'prior' must be an object");
    std::map<int, double> by_count;
    for (const auto& [key, value] : pj.items()) {
      int r = 0;
      try {
        std::size_t used = 0;
        r = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ValidationError(top + "prior: key '" + key + "' is not a count");
      }
      if (r < 1) throw ValidationError(top + "prior: count " + key + " must be >= 1");
      by_count[r] = detail::number(value, top + "prior[" + key + "]: ");
    }
    try {
      prior = DomainPrior::from_map(by_count);
    } catch (const ValidationError& e) {
      throw ValidationError(top + "prior: " + e.what());
    }
  } else {
    prior = DomainPrior::uniform(n_reports);
  }

  std::optional<DecisionProblem> decision;
  if (doc.contains("decision") && !doc["decision"].is_null() &&
      !doc["decision"].empty()) {
    const auto& dj = doc["decision"];
    const std::string ctx = top + "decision: ";
    DecisionProblem dp;
    const auto& uj = require(dj, "utilities", ctx);
    if (!uj.is_object()) throw ValidationError(ctx + "'utilities' must be an object");
    dp.utilities.assign(frame->size(), 0.0);
    std::vector<bool> given(frame->size(), false);
    for (const auto& [key, value] : uj.items()) {
      auto idx = frame->index_of(key);
      if (!idx) throw ValidationError(ctx + "utility for unknown frame element '" + key + "'");
      dp.utilities[*idx] = detail::number(value, ctx + "utilities[" + key + "]: ");
      given[*idx] = true;
    }
    for (std::size_t i = 0; i < given.size(); ++i)
      if (!given[i])
        throw ValidationError(ctx + "no utility for frame element '" + frame->element(i) + "'");
    const auto& mj = require(dj, "makers", ctx);
    if (!mj.is_array()) throw ValidationError(ctx + "'makers' must be an array");
    for (std::size_t m = 0; m < mj.size(); ++m) {
      const std::string mctx = ctx + "makers[" + std::to_string(m) + "]: ";
      DecisionMakerSpec maker{require(mj[m], "id", mctx).get<std::string>(), {}};
      const auto& cj = require(mj[m], "choices", mctx);
      if (!cj.is_array() || cj.empty())
        throw ValidationError(mctx + "'choices' must be a nonempty array");
      for (std::size_t c = 0; c < cj.size(); ++c) {
        const std::string cctx = mctx + "choices[" + std::to_string(c) + "]: ";
        maker.choices.push_back({require(cj[c], "id", cctx).get<std::string>(),
                                 detail::parse_masses(require(cj[c], "masses", cctx),
                                                      frame, cctx)});
      }
      dp.makers.push_back(std::move(maker));
    }
    if (!dp.makers.empty()) decision = std::move(dp);
  }

  return {std::move(corpus), std::move(*prior), std::move(decision)};
}

inline CorpusFile ingest_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return parse_corpus(doc, path);
}

}  // namespace dsintel::analyst
