#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "weu/baselines.hpp"
#include "weu/errors.hpp"
#include "weu/probability.hpp"
#include "weu/utility.hpp"

namespace weu {

struct WeuModel {
  WeuParameters params;
  PwfKind kind = PwfKind::prelec_plus;
};

struct MfModel {
  MfParameters params;
  MfKind kind = MfKind::cf_lfm;
};

using Model = std::variant<WeuModel, MfModel>;

// Accepted --model values: eu, tf, tf+, prelec, prelec+, cf-lfm, bpr.
inline bool is_baseline_name(std::string_view name) { return name == "cf-lfm" || name == "bpr"; }

inline void check_model_name(std::string_view name) {
  if (is_baseline_name(name)) return;
  if (name == "identity") throw ConfigError("unknown model 'identity' (use 'eu')");
  parse_pwf_kind(name);
}

inline std::string model_name(const Model& m) {
  return std::visit(
      [](const auto& x) { return std::string(to_string(x.kind)); }, m);
}

inline nlohmann::json model_to_json(const Model& m) {
  return std::visit([](const auto& x) { return to_json(x.params, x.kind); }, m);
}

inline Model model_from_json(const nlohmann::json& j) {
  const auto type = j.at("model_type").get<std::string>();
  if (type == "cf-lfm") return MfModel{mf_parameters_from_json(j), MfKind::cf_lfm};
  if (type == "bpr") return MfModel{mf_parameters_from_json(j), MfKind::bpr};
  return WeuModel{weu_parameters_from_json(j), parse_pwf_kind(type)};
}

inline void save_model(const std::filesystem::path& path, const Model& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << model_to_json(m).dump() << '\n';
}

inline Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

inline void check_shape(const Model& m, const SplitDataset& ds) {
  const auto [users, items] = std::visit(
      [](const auto& x) { return std::pair{x.params.user_count(), x.params.item_count()}; }, m);
  if (users != ds.user_count || items != ds.item_count)
    throw ShapeMismatchError("checkpoint shape " + std::to_string(users) + " users x " +
                             std::to_string(items) + " items does not match dataset shape " +
                             std::to_string(ds.user_count) + " users x " +
                             std::to_string(ds.item_count) + " items");
  if (const auto* w = std::get_if<WeuModel>(&m); w && w->params.r_max() != ds.r_max)
    throw ShapeMismatchError("checkpoint r_max " + std::to_string(w->params.r_max()) +
                             " does not match dataset r_max " + std::to_string(ds.r_max));
}

// Deterministic batch scorer over a loaded model. WEU models score with
// histograms built from the dataset's training split.
class ModelScorer {
 public:
  ModelScorer(const Model& model, const SplitDataset& ds) : model_(&model) {
    check_shape(model, ds);
    if (std::holds_alternative<WeuModel>(model))
      hists_ = build_histograms(ds.train, ds.item_count, ds.r_max);
  }

  void operator()(UserIndex u, std::span<const ItemIndex> items, std::span<double> out) const {
    if (const auto* w = std::get_if<WeuModel>(model_))
      weu_scores(w->params, hists_, u, items, w->kind, out);
    else
      mf_scorer(std::get<MfModel>(*model_).params)(u, items, out);
  }

 private:
  const Model* model_;
  HistogramStore hists_;
};

}  // namespace weu
