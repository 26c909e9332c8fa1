#include "cocabo/cli/history.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cocabo/cli/spec.hpp"
#include "cocabo/errors.hpp"

namespace cocabo::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
json to_json(const Eigen::VectorXi& v) { return std::vector<int>(v.data(), v.data() + v.size()); }

Eigen::VectorXd doubles(const json& j) {
  require(j.is_array(), "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), "expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::VectorXi ints(const json& j) {
  require(j.is_array(), "expected an array of integers");
  Eigen::VectorXi v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number_integer(), "expected an array of integers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<int>();
  }
  return v;
}

/// Shortest text that parses back to the same double.
std::string fmt(double v) { return json(v).dump(); }

template <typename Vec>
std::string joined(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    if constexpr (std::is_integral_v<typename Vec::Scalar>) {
      out += std::to_string(v[i]);
    } else {
      out += fmt(v[i]);
    }
  }
  return out;
}

const json& field(const json& j, const char* key) {
  require(j.contains(key), std::string("missing field ") + key);
  return j.at(key);
}

}  // namespace

RunHeader make_header(const std::string& label, const std::string& method, int repetition,
                      std::uint64_t master_seed, const RunConfig& cfg) {
  RunHeader h;
  h.label = label;
  h.method = method;
  h.repetition = repetition;
  h.master_seed = master_seed;
  h.seed = cfg.seed;
  h.categories = cfg.space.choices();
  h.lower = cfg.space.bounds().lower;
  h.upper = cfg.space.bounds().upper;
  h.budget = cfg.budget;
  h.batch_size = cfg.batch_size;
  h.initial_design = cfg.initial_design;
  h.refit_period = cfg.refit_period;
  h.kappa = cfg.kappa;
  return h;
}

json params_to_json(const GpParams& p) {
  json j;
  j["form"] = p.form == KernelForm::Mixture ? "mixture" : "continuous";
  j["lengthscales"] = to_json(p.mixture.continuous.lengthscales);
  j["continuous_variance"] = p.mixture.continuous.variance;
  j["categorical_variance"] = p.mixture.categorical.variance;
  j["lambda"] = p.mixture.lambda;
  j["noise_variance"] = p.noise_variance;
  return j;
}

GpParams params_from_json(const json& j) {
  GpParams p;
  const std::string form = field(j, "form").get<std::string>();
  require(form == "mixture" || form == "continuous", "unknown kernel form " + form);
  p.form = form == "mixture" ? KernelForm::Mixture : KernelForm::ContinuousOnly;
  p.mixture.continuous.lengthscales = doubles(field(j, "lengthscales"));
  p.mixture.continuous.variance = field(j, "continuous_variance").get<double>();
  p.mixture.categorical.variance = field(j, "categorical_variance").get<double>();
  p.mixture.lambda = field(j, "lambda").get<double>();
  p.noise_variance = field(j, "noise_variance").get<double>();
  return p;
}

fs::path HistoryWriter::history_path(const fs::path& stem) { return fs::path(stem.string() + ".jsonl"); }
fs::path HistoryWriter::timing_path(const fs::path& stem) { return fs::path(stem.string() + ".timing.csv"); }

HistoryWriter::HistoryWriter(const fs::path& stem, const RunHeader& h) {
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  history_.open(history_path(stem), std::ios::out | std::ios::trunc);
  timing_.open(timing_path(stem), std::ios::out | std::ios::trunc);
  require(history_.good() && timing_.good(), "cannot open output files for " + stem.string());
  timing_ << "evaluation_index,wall_time_s\n" << std::flush;

  json j;
  j["type"] = "header";
  j["schema_version"] = kSchemaVersion;
  j["label"] = h.label;
  j["method"] = h.method;
  j["repetition"] = h.repetition;
  j["master_seed"] = h.master_seed;
  j["seed"] = h.seed;
  j["seed_scheme"] = "splitmix64(master_seed + (repetition + 1) * 0x9E3779B97F4A7C15)";
  j["space"] = {{"categories", h.categories}, {"lower", to_json(h.lower)}, {"upper", to_json(h.upper)}};
  j["config"] = {{"budget", h.budget},
                 {"batch_size", h.batch_size},
                 {"initial_design", h.initial_design},
                 {"refit_period", h.refit_period},
                 {"kappa", h.kappa}};
  write(j);
}

void HistoryWriter::write(const json& record) { history_ << record.dump() << '\n' << std::flush; }

void HistoryWriter::on_evaluation(const EvaluationRecord& r) {
  write({{"type", "eval"},
         {"iteration", r.iteration},
         {"index", r.index},
         {"h", to_json(r.point.h)},
         {"x", to_json(r.point.x)},
         {"f", r.value},
         {"best_so_far", r.best_so_far}});
  timing_ << r.index << ',' << fmt(r.wall_time_s) << '\n' << std::flush;
}

void HistoryWriter::on_bandit_snapshot(const BanditSnapshot& s) {
  json probs = json::array();
  for (const auto& p : s.probabilities) probs.push_back(to_json(p));
  write({{"type", "bandit"}, {"iteration", s.iteration}, {"probabilities", probs}});
}

void HistoryWriter::on_event(const std::string& message) { write({{"type", "event"}, {"message", message}}); }

void HistoryWriter::finish(const RunHistory& history) {
  write({{"type", "final"},
         {"aborted", history.aborted},
         {"abort_reason", history.abort_reason},
         {"evaluations", history.records.size()},
         {"params", params_to_json(history.final_params)}});
}

LoadedHistory load_history(const fs::path& file) {
  std::ifstream in(file);
  require(in.good(), "cannot read " + file.string());
  LoadedHistory out;
  std::string line;
  int number = 0;
  bool finished = false;
  try {
    while (std::getline(in, line)) {
      ++number;
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = field(j, "type").get<std::string>();
      if (number == 1) {
        require(type == "header", "first record must be a header");
        require(field(j, "schema_version").get<int>() == kSchemaVersion, "unsupported schema_version");
        RunHeader& h = out.header;
        h.label = field(j, "label").get<std::string>();
        h.method = field(j, "method").get<std::string>();
        h.repetition = field(j, "repetition").get<int>();
        h.master_seed = field(j, "master_seed").get<std::uint64_t>();
        h.seed = field(j, "seed").get<std::uint64_t>();
        const json& space = field(j, "space");
        h.categories = field(space, "categories").get<std::vector<int>>();
        h.lower = doubles(field(space, "lower"));
        h.upper = doubles(field(space, "upper"));
        const json& cfg = field(j, "config");
        h.budget = field(cfg, "budget").get<int>();
        h.batch_size = field(cfg, "batch_size").get<int>();
        h.initial_design = field(cfg, "initial_design").get<int>();
        h.refit_period = field(cfg, "refit_period").get<int>();
        h.kappa = field(cfg, "kappa").get<double>();
        continue;
      }
      require(!finished, "records after the final record");
      if (type == "eval") {
        EvaluationRecord r;
        r.iteration = field(j, "iteration").get<int>();
        r.index = field(j, "index").get<int>();
        r.point = {ints(field(j, "h")), doubles(field(j, "x"))};
        r.value = field(j, "f").get<double>();
        r.best_so_far = field(j, "best_so_far").get<double>();
        auto& recs = out.history.records;
        require(r.index == static_cast<int>(recs.size()), "evaluation indices are not contiguous");
        const double expected = recs.empty() ? r.value : std::max(recs.back().best_so_far, r.value);
        require(r.best_so_far == expected, "best_so_far is inconsistent");
        recs.push_back(r);
      } else if (type == "bandit") {
        BanditSnapshot s;
        s.iteration = field(j, "iteration").get<int>();
        for (const auto& p : field(j, "probabilities")) s.probabilities.push_back(doubles(p));
        out.history.bandit_trace.push_back(std::move(s));
      } else if (type == "event") {
        out.history.events.push_back(field(j, "message").get<std::string>());
      } else if (type == "final") {
        out.history.aborted = field(j, "aborted").get<bool>();
        out.history.abort_reason = field(j, "abort_reason").get<std::string>();
        out.history.final_params = params_from_json(field(j, "params"));
        require(field(j, "evaluations").get<std::size_t>() == out.history.records.size(),
                "final record disagrees with the evaluation count");
        finished = true;
      } else {
        throw ContractViolation("unknown record type " + type);
      }
    }
  } catch (const json::exception& e) {
    throw ContractViolation(file.string() + " line " + std::to_string(number) + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw ContractViolation(file.string() + " line " + std::to_string(number) + ": " + e.what());
  }
  require(number >= 1, file.string() + " is empty");

  std::string stem = file.string();
  if (stem.size() > 6 && stem.ends_with(".jsonl")) stem.resize(stem.size() - 6);
  std::ifstream timing(HistoryWriter::timing_path(stem));
  if (timing.good()) {
    std::getline(timing, line);
    std::size_t matched = 0;
    while (std::getline(timing, line)) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) break;
      const std::size_t index = std::stoul(line.substr(0, comma));
      if (index >= out.history.records.size()) break;
      out.history.records[index].wall_time_s = std::stod(line.substr(comma + 1));
      ++matched;
    }
    out.has_timing = matched == out.history.records.size();
  }
  return out;
}

void write_summary(const fs::path& file, const std::vector<std::vector<double>>& best_per_run) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::out | std::ios::trunc);
  require(out.good(), "cannot write " + file.string());
  out << "iteration,runs,mean_best_so_far,stderr_best_so_far\n";
  std::size_t rows = 0;
  for (const auto& run : best_per_run) rows = std::max(rows, run.size());
  for (std::size_t t = 0; t < rows; ++t) {
    std::vector<double> v;
    for (const auto& run : best_per_run)
      if (t < run.size() && std::isfinite(run[t])) v.push_back(run[t]);
    double mean = std::nan(""), se = std::nan("");
    if (!v.empty()) {
      mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      se = 0.0;
      if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        se = std::sqrt(ss / (static_cast<double>(v.size()) - 1.0) / static_cast<double>(v.size()));
      }
    }
    out << t + 1 << ',' << v.size() << ',' << (v.empty() ? "" : fmt(mean)) << ',' << (v.empty() ? "" : fmt(se))
        << '\n';
  }
}

ExportResult export_histories(const std::vector<fs::path>& inputs, const fs::path& out_dir, std::ostream& log) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& entry : fs::recursive_directory_iterator(in))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      log << "warning: " << in.string() << " does not exist\n";
    }
  }
  std::sort(files.begin(), files.end());

  fs::create_directories(out_dir);
  std::ofstream evals(out_dir / "evaluations.csv", std::ios::out | std::ios::trunc);
  std::ofstream trace(out_dir / "bandit_trace.csv", std::ios::out | std::ios::trunc);
  require(evals.good() && trace.good(), "cannot write into " + out_dir.string());
  evals << "run,iteration,evaluation_index,h,x,f,best_so_far,wall_time_s\n";
  trace << "run,iteration,agent,arm,probability\n";

  ExportResult result;
  for (const auto& file : files) {
    LoadedHistory loaded;
    try {
      loaded = load_history(file);
    } catch (const std::exception& e) {
      log << "warning: skipping " << file.string() << ": " << e.what() << '\n';
      ++result.skipped;
      continue;
    }
    const std::string run = file.stem().string();
    for (const auto& r : loaded.history.records) {
      evals << run << ',' << r.iteration << ',' << r.index << ',' << joined(r.point.h) << ',' << joined(r.point.x)
            << ',' << fmt(r.value) << ',' << fmt(r.best_so_far) << ',' << (loaded.has_timing ? fmt(r.wall_time_s) : "")
            << '\n';
    }
    for (const auto& s : loaded.history.bandit_trace) {
      for (std::size_t agent = 0; agent < s.probabilities.size(); ++agent) {
        const auto& p = s.probabilities[agent];
        for (Eigen::Index arm = 0; arm < p.size(); ++arm)
          trace << run << ',' << s.iteration << ',' << agent << ',' << arm << ',' << fmt(p[arm]) << '\n';
      }
    }
    ++result.exported;
  }
  return result;
}

}  // namespace cocabo::cli
