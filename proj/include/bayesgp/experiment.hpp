#pragma once

// Repetition harness: designs, chains, posterior prediction and scoring for
// every (target, prior, proposal) combination, persisted as CSV.

#include <bayesgp/benchfuncs.hpp>
#include <bayesgp/dataset_io.hpp>
#include <bayesgp/errors.hpp>
#include <bayesgp/gp_core.hpp>
#include <bayesgp/metrics.hpp>
#include <bayesgp/priors.hpp>
#include <bayesgp/proposals.hpp>
#include <bayesgp/rng.hpp>
#include <bayesgp/sampler.hpp>
#include <bayesgp/types.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bayesgp {

/// A synthetic test function or a CSV dataset.
struct TargetSpec {
  std::string name;
  std::optional<TestFunctionKind> function;
  std::filesystem::path dataset;
  std::size_t input_columns = 0;  ///< datasets only; 0 = all but the last column

  static TargetSpec of(TestFunctionKind kind) { return {std::string(to_string(kind)), kind, {}, 0}; }

  static TargetSpec from_file(const std::filesystem::path& path, std::size_t input_columns = 0) {
    return {path.stem().string(), std::nullopt, path, input_columns};
  }
};

/// Function name, or anything else as a dataset path.
inline TargetSpec parse_target(const std::string& text, std::size_t input_columns = 0) {
  if (auto kind = parse_test_function(text)) return TargetSpec::of(*kind);
  return TargetSpec::from_file(text, input_columns);
}

/// Proposal kind with an optional explicit step; unset steps follow the
/// dimension-dependent defaults.
struct ProposalChoice {
  ProposalKind kind = ProposalKind::MultiplicativeUniform;
  std::optional<double> step;

  ProposalSpec resolve(std::size_t dimension) const {
    if (!step) return ProposalSpec::defaults(kind, dimension);
    return kind == ProposalKind::MultiplicativeUniform ? ProposalSpec::multiplicative_uniform(*step)
                                                       : ProposalSpec::log_gaussian(*step);
  }
};

struct ExperimentConfig {
  std::vector<TargetSpec> targets;
  std::vector<PriorSpec> priors;
  std::vector<ProposalChoice> proposals;
  std::optional<std::size_t> n_train;     ///< default 10 d
  std::optional<std::size_t> n_test;      ///< default 100 d
  std::optional<std::size_t> iterations;  ///< default 10000 d
  double burn_in_fraction = 0.3;
  std::size_t repetitions = 100;
  std::uint64_t base_seed = 1;
  bool scale_inputs = true;
  std::size_t thinning = 1;
  std::filesystem::path output_dir = "results";
  bool trace = false;
  std::size_t workers = 0;  ///< 0 = BAYESGP_WORKERS or hardware concurrency
  GPConfig gp;

  std::size_t train_size(std::size_t d) const { return n_train.value_or(10 * d); }
  std::size_t test_size(std::size_t d) const { return n_test.value_or(100 * d); }
  std::size_t iteration_count(std::size_t d) const { return iterations.value_or(10000 * d); }
  std::size_t configuration_count() const { return targets.size() * priors.size() * proposals.size(); }
};

/// "gamma" for default hyperparameters, otherwise "gamma:1.5/2.6".
inline std::string prior_label(const PriorSpec& spec) {
  const PriorSpec def = PriorSpec::defaults(spec.kind);
  std::string label(to_string(spec.kind));
  if (spec.kind == PriorKind::Jeffreys || (spec.a == def.a && spec.b == def.b)) return label;
  std::ostringstream os;
  os.precision(17);
  os << label << ':' << spec.a;
  if (spec.kind != PriorKind::HalfCauchy) os << '/' << spec.b;
  return os.str();
}

struct ResultRow {
  std::size_t repetition = 0;
  std::string target;
  std::string prior;
  std::string proposal;
  double step = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double crps = std::numeric_limits<double>::quiet_NaN();
  double picr = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> acceptance;  ///< per dimension
  std::size_t large_candidates = 0;
  double seconds = 0.0;

  bool ok() const { return status == "ok"; }
};

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_field_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  const auto v = parse_double(s);
  if (!v) throw std::invalid_argument("bad number '" + std::string(s) + "' in results file");
  return *v;
}

inline std::string sanitize(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ' ');
  return s;
}

}  // namespace detail

inline constexpr const char* kResultsHeader =
    "repetition,target,prior,proposal,step,seed,status,rmse,crps,picr,acceptance,large_candidates,seconds";

inline std::string to_csv(const ResultRow& r) {
  std::string acc;
  for (std::size_t i = 0; i < r.acceptance.size(); ++i) {
    if (i) acc += ';';
    acc += detail::format_double(r.acceptance[i]);
  }
  std::ostringstream os;
  os << r.repetition << ',' << r.target << ',' << r.prior << ',' << r.proposal << ','
     << detail::format_double(r.step) << ',' << r.seed << ',' << detail::sanitize(r.status) << ','
     << detail::format_double(r.rmse) << ',' << detail::format_double(r.crps) << ','
     << detail::format_double(r.picr) << ',' << acc << ',' << r.large_candidates << ','
     << detail::format_double(r.seconds);
  return os.str();
}

inline ResultRow parse_result_row(std::string_view line) {
  const auto f = detail::split_commas(detail::trim(line));
  if (f.size() != 13) throw std::invalid_argument("results row has " + std::to_string(f.size()) + " fields");
  ResultRow r;
  r.repetition = std::stoull(std::string(f[0]));
  r.target = f[1];
  r.prior = f[2];
  r.proposal = f[3];
  r.step = detail::parse_field_double(f[4]);
  r.seed = std::stoull(std::string(f[5]));
  r.status = f[6];
  r.rmse = detail::parse_field_double(f[7]);
  r.crps = detail::parse_field_double(f[8]);
  r.picr = detail::parse_field_double(f[9]);
  std::string_view acc = f[10];
  while (!acc.empty()) {
    const auto semi = acc.find(';');
    r.acceptance.push_back(detail::parse_field_double(acc.substr(0, semi)));
    if (semi == std::string_view::npos) break;
    acc.remove_prefix(semi + 1);
  }
  r.large_candidates = std::stoull(std::string(f[11]));
  r.seconds = detail::parse_field_double(f[12]);
  return r;
}

inline std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open results file '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    rows.push_back(parse_result_row(line));
  }
  return rows;
}

/// Train/test split for one repetition, in the coordinates the GP is fitted on.
struct RepetitionData {
  Dataset train;
  Matrix test_inputs;
  Vector test_truth;  ///< raw output units
};

inline RepetitionData make_function_data(const TestFunction& fn, std::size_t n_train,
                                         std::size_t n_test, std::uint64_t seed, bool scale_inputs) {
  const std::size_t d = fn.dimension();
  const auto bounds = fn.bounds();
  const Design train = latin_hypercube(n_train, d, mix_seed(seed, 1));
  const Design test = latin_hypercube(n_test, d, mix_seed(seed, 2));
  const Matrix train_raw = scale_to_domain(train, bounds);
  const Matrix test_raw = scale_to_domain(test, bounds);
  const Vector y = evaluate_rows(fn, train_raw);
  Vector truth = evaluate_rows(fn, test_raw);
  if (scale_inputs) {
    return {Dataset(train.points, y, unit_bounds(d), true), test.points, std::move(truth)};
  }
  return {Dataset(train_raw, y, bounds, false), test_raw, std::move(truth)};
}

/// Random subsample: n_train rows to fit, up to n_test of the rest to score.
inline RepetitionData make_dataset_split(const Dataset& full, std::size_t n_train,
                                         std::size_t n_test, std::uint64_t seed, bool scale_inputs) {
  const std::size_t n = full.n();
  if (n_train < 2 || n < n_train + 1) {
    throw Error("dataset has " + std::to_string(n) + " rows; need more than n_train = " +
                std::to_string(n_train));
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(mix_seed(seed, 1));
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  const std::size_t m = std::min(n_test, n - n_train);
  const Matrix X = scale_inputs ? scale_to_unit(full.inputs(), full.bounds()) : full.inputs();
  const Vector y = full.raw_outputs();
  Matrix Xtr(static_cast<Eigen::Index>(n_train), X.cols());
  Vector ytr(static_cast<Eigen::Index>(n_train));
  Matrix Xte(static_cast<Eigen::Index>(m), X.cols());
  Vector yte(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n_train; ++i) {
    Xtr.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(perm[i]));
    ytr[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(perm[i])];
  }
  for (std::size_t i = 0; i < m; ++i) {
    Xte.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(perm[n_train + i]));
    yte[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(perm[n_train + i])];
  }
  auto bounds = scale_inputs ? unit_bounds(full.d()) : full.bounds();
  return {Dataset(std::move(Xtr), ytr, std::move(bounds), scale_inputs), std::move(Xte), std::move(yte)};
}

/// iteration, theta_1..theta_d, tau2, accept_1..accept_d; iteration 0 is the
/// initial state with all flags 0.
inline void write_trace(const Chain& chain, const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file '" + path.string() + "'");
  const std::size_t d = chain.dimension();
  out << "iteration";
  for (std::size_t i = 1; i <= d; ++i) out << ",theta_" << i;
  out << ",tau2";
  for (std::size_t i = 1; i <= d; ++i) out << ",accept_" << i;
  out << '\n';
  for (std::size_t t = 0; t < chain.samples.size(); ++t) {
    out << t;
    for (std::size_t i = 0; i < d; ++i) out << ',' << detail::format_double(chain.samples[t][i]);
    out << ',' << detail::format_double(chain.tau2_samples[t]);
    for (std::size_t i = 0; i < d; ++i) out << ',' << (t > 0 && chain.accepted_at(t, i) ? 1 : 0);
    out << '\n';
  }
}

/// One cell of the experiment grid.
struct Configuration {
  std::size_t target_index = 0;
  PriorSpec prior;
  ProposalChoice proposal;
};

inline std::vector<Configuration> expand_configurations(const ExperimentConfig& config) {
  std::vector<Configuration> out;
  for (std::size_t t = 0; t < config.targets.size(); ++t) {
    for (const auto& prior : config.priors) {
      for (const auto& proposal : config.proposals) out.push_back({t, prior, proposal});
    }
  }
  return out;
}

inline std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BAYESGP_WORKERS")) {
    try {
      const auto v = std::stoul(env);
      if (v > 0) return v;
    } catch (const std::logic_error&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline std::string trace_directory_name(const ResultRow& row) {
  return row.target + "_" + row.prior + "_" + row.proposal;
}

/// Runs one repetition of one configuration. Module errors become a failed
/// row instead of propagating.
inline ResultRow run_repetition(const ExperimentConfig& config, const Configuration& cell,
                                const Dataset* loaded, std::size_t repetition) {
  const TargetSpec& target = config.targets[cell.target_index];
  ResultRow row;
  row.repetition = repetition;
  row.target = target.name;
  row.prior = prior_label(cell.prior);
  row.proposal = std::string(to_string(cell.proposal.kind));
  row.seed = config.base_seed + repetition;
  const auto start = std::chrono::steady_clock::now();
  try {
    const std::size_t d = target.function ? TestFunction(*target.function).dimension() : loaded->d();
    const ProposalSpec proposal = cell.proposal.resolve(d);
    row.step = proposal.step;
    const RepetitionData data =
        target.function
            ? make_function_data(TestFunction(*target.function), config.train_size(d),
                                 config.test_size(d), row.seed, config.scale_inputs)
            : make_dataset_split(*loaded, config.train_size(d), config.test_size(d), row.seed,
                                 config.scale_inputs);
    const Chain chain = run_chain(data.train, cell.prior, proposal, config.gp,
                                  config.iteration_count(d), mix_seed(row.seed, 3));
    for (std::size_t i = 0; i < d; ++i) row.acceptance.push_back(chain.acceptance_rate(i));
    row.large_candidates = chain.large_candidates;
    if (config.trace) {
      write_trace(chain, config.output_dir / "traces" / trace_directory_name(row) /
                             ("trace_" + std::to_string(repetition) + ".csv"));
    }
    const MarginalSummary summary = posterior_predict_marginal(
        chain, data.train, data.test_inputs, config.gp, config.burn_in_fraction, config.thinning);
    const ScoreReport s = score(data.test_truth, summary.mean, summary.variance);
    row.rmse = s.rmse;
    row.crps = s.crps;
    row.picr = s.picr;
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// Emits rows in job order no matter which worker finishes first.
class OrderedWriter {
 public:
  OrderedWriter(std::ostream* out, std::function<void(const ResultRow&)> on_row)
      : out_(out), on_row_(std::move(on_row)) {}

  void submit(std::size_t index, ResultRow row) {
    std::lock_guard lock(mutex_);
    pending_.emplace(index, std::move(row));
    while (!pending_.empty() && pending_.begin()->first == next_) {
      ResultRow& ready = pending_.begin()->second;
      if (out_) *out_ << to_csv(ready) << '\n' << std::flush;
      if (on_row_) on_row_(ready);
      rows_.push_back(std::move(ready));
      pending_.erase(pending_.begin());
      ++next_;
    }
  }

  std::vector<ResultRow> take() { return std::move(rows_); }

 private:
  std::ostream* out_;
  std::function<void(const ResultRow&)> on_row_;
  std::mutex mutex_;
  std::map<std::size_t, ResultRow> pending_;
  std::vector<ResultRow> rows_;
  std::size_t next_ = 0;
};

/// Runs every configuration for every repetition. Rows are ordered by
/// configuration, then repetition; when `results_path` is set they are
/// appended to it as they complete.
inline std::vector<ResultRow> run_experiment(
    const ExperimentConfig& config, const std::optional<std::filesystem::path>& results_path = {},
    std::function<void(const ResultRow&)> on_row = {}) {
  if (config.targets.empty() || config.priors.empty() || config.proposals.empty()) {
    throw std::invalid_argument("experiment needs at least one target, prior and proposal");
  }
  if (config.repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
  if (!(config.burn_in_fraction >= 0.0 && config.burn_in_fraction < 1.0)) {
    throw std::invalid_argument("burn-in fraction must lie in [0, 1)");
  }
  if (config.thinning < 1) throw std::invalid_argument("thinning must be at least 1");

  std::vector<std::unique_ptr<Dataset>> loaded(config.targets.size());
  for (std::size_t t = 0; t < config.targets.size(); ++t) {
    if (!config.targets[t].function) {
      loaded[t] = std::make_unique<Dataset>(
          load_dataset(config.targets[t].dataset, config.targets[t].input_columns));
    }
  }

  std::ofstream file;
  if (results_path) {
    if (results_path->has_parent_path()) std::filesystem::create_directories(results_path->parent_path());
    file.open(*results_path);
    if (!file) throw Error("cannot write results file '" + results_path->string() + "'");
    file << kResultsHeader << '\n' << std::flush;
  }

  const auto cells = expand_configurations(config);
  const std::size_t jobs = cells.size() * config.repetitions;
  OrderedWriter writer(results_path ? &file : nullptr, std::move(on_row));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs; k = next++) {
      const Configuration& cell = cells[k / config.repetitions];
      const std::size_t rep = k % config.repetitions;
      writer.submit(k, run_repetition(config, cell, loaded[cell.target_index].get(), rep));
    }
  };
  const std::size_t n_workers = std::min(resolve_workers(config.workers), jobs);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  return writer.take();
}

/// Five-number summary. Quartiles are medians of the lower and upper halves,
/// the overall median excluded from both halves when the count is odd; a
/// single value is its own quartiles.
struct BoxStats {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  friend bool operator==(const BoxStats&, const BoxStats&) = default;
};

namespace detail {

inline double median_of_sorted(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  const std::size_t n = hi - lo;
  const std::size_t mid = lo + n / 2;
  return n % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace detail

inline BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  BoxStats s;
  s.min = values.front();
  s.max = values.back();
  s.median = detail::median_of_sorted(values, 0, n);
  if (n == 1) {
    s.q1 = s.q3 = values[0];
  } else {
    s.q1 = detail::median_of_sorted(values, 0, n / 2);
    s.q3 = detail::median_of_sorted(values, n - n / 2, n);
  }
  return s;
}

struct SummaryRow {
  std::string target, prior, proposal;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  BoxStats rmse, crps, picr;
  double mean_acceptance = std::numeric_limits<double>::quiet_NaN();

  friend bool operator==(const SummaryRow& a, const SummaryRow& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.target == b.target && a.prior == b.prior && a.proposal == b.proposal &&
           a.n_ok == b.n_ok && a.n_failed == b.n_failed && a.rmse == b.rmse && a.crps == b.crps &&
           a.picr == b.picr && same(a.mean_acceptance, b.mean_acceptance);
  }
};

/// One summary per (target, prior, proposal), in order of first appearance.
/// Failed rows are counted but excluded from the statistics.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("summarize: no rows");
  struct Group {
    SummaryRow head;
    std::vector<double> rmse, crps, picr, acc;
  };
  std::vector<Group> groups;
  for (const auto& r : rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.head.target == r.target && g.head.prior == r.prior && g.head.proposal == r.proposal;
    });
    if (it == groups.end()) {
      groups.push_back({});
      it = std::prev(groups.end());
      it->head.target = r.target;
      it->head.prior = r.prior;
      it->head.proposal = r.proposal;
    }
    if (!r.ok()) {
      ++it->head.n_failed;
      continue;
    }
    ++it->head.n_ok;
    it->rmse.push_back(r.rmse);
    it->crps.push_back(r.crps);
    it->picr.push_back(r.picr);
    for (double a : r.acceptance) it->acc.push_back(a);
  }
  std::vector<SummaryRow> out;
  for (auto& g : groups) {
    if (g.head.n_ok > 0) {
      g.head.rmse = box_stats(g.rmse);
      g.head.crps = box_stats(g.crps);
      g.head.picr = box_stats(g.picr);
      double sum = 0.0;
      for (double a : g.acc) sum += a;
      if (!g.acc.empty()) g.head.mean_acceptance = sum / static_cast<double>(g.acc.size());
    }
    out.push_back(std::move(g.head));
  }
  return out;
}

inline void write_summary(const std::vector<SummaryRow>& summary, std::ostream& out) {
  out << "target,prior,proposal,n_ok,n_failed";
  for (const char* metric : {"rmse", "crps", "picr"}) {
    for (const char* stat : {"min", "q1", "median", "q3", "max"}) out << ',' << metric << '_' << stat;
  }
  out << ",mean_acceptance\n";
  for (const auto& s : summary) {
    out << s.target << ',' << s.prior << ',' << s.proposal << ',' << s.n_ok << ',' << s.n_failed;
    for (const BoxStats* b : {&s.rmse, &s.crps, &s.picr}) {
      for (double v : {b->min, b->q1, b->median, b->q3, b->max}) {
        out << ',' << (s.n_ok ? detail::format_double(v) : "nan");
      }
    }
    out << ',' << detail::format_double(s.mean_acceptance) << '\n';
  }
}

inline void write_summary(const std::vector<SummaryRow>& summary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write summary file '" + path.string() + "'");
  write_summary(summary, out);
}

}  // namespace bayesgp
