// Command-line surface for the random subspace ensemble toolkit:
// simulate / fit / predict / rank / bench.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rase/ensemble.hpp"
#include "rase/error.hpp"
#include "rase/io.hpp"
#include "rase/rng.hpp"
#include "rase/sim_models.hpp"

namespace {

using rase::BaseKind;
using rase::CriterionType;

int env_default_threads() {
  const char* value = std::getenv("RASE_THREADS");
  if (value == nullptr) return 1;
  int threads = 0;
  const auto [ptr, ec] = std::from_chars(value, value + std::string_view(value).size(), threads);
  if (ec != std::errc() || threads < 1) return 1;
  return threads;
}

BaseKind parse_base(const std::string& name) {
  if (name == "lda") return BaseKind::Lda;
  if (name == "qda") return BaseKind::Qda;
  if (name == "knn") return BaseKind::Knn;
  if (name == "gamma") return BaseKind::Gamma;
  rase::raise(rase::ErrorKind::UsageError, "--base must be one of lda, qda, knn, gamma");
}

CriterionType parse_criterion(const std::string& name) {
  if (name == "ric") return CriterionType::RicParametric;
  if (name == "ric-np") return CriterionType::RicNonparametric;
  if (name == "train-err") return CriterionType::TrainingError;
  if (name == "loo") return CriterionType::LooCv;
  rase::raise(rase::ErrorKind::UsageError,
              "--criterion must be one of ric, ric-np, train-err, loo");
}

CriterionType default_criterion(BaseKind base) {
  return base == BaseKind::Knn ? CriterionType::LooCv : CriterionType::RicParametric;
}

double format_pct(double rate) { return 100.0 * rate; }

struct BenchMethod {
  std::string name;
  bool is_signal_oracle = false;
  int iterations = 0;
  BaseKind base = BaseKind::Lda;
  bool nonparametric = false;  // the "ldan" flavor
};

BenchMethod parse_method(const std::string& token) {
  BenchMethod method;
  method.name = token;
  std::string rest = token;
  if (rest.rfind("sig-", 0) == 0) {
    method.is_signal_oracle = true;
    rest = rest.substr(4);
    if (rest == "ldan") rase::raise(rase::ErrorKind::UsageError, "sig-ldan is not a method");
  } else if (rest.rfind("rase", 0) == 0) {
    rest = rest.substr(4);
    const size_t dash = rest.find('-');
    if (dash == std::string::npos) {
      rase::raise(rase::ErrorKind::UsageError, "method '" + token + "' is missing a base suffix");
    }
    const std::string iter_part = rest.substr(0, dash);
    if (!iter_part.empty()) {
      int iters = 0;
      const auto [ptr, ec] =
          std::from_chars(iter_part.data(), iter_part.data() + iter_part.size(), iters);
      if (ec != std::errc() || ptr != iter_part.data() + iter_part.size() || iters < 0) {
        rase::raise(rase::ErrorKind::UsageError, "bad iteration count in '" + token + "'");
      }
      method.iterations = iters;
    }
    rest = rest.substr(dash + 1);
  } else {
    rase::raise(rase::ErrorKind::UsageError,
                "method '" + token + "' must look like rase[T]-<base> or sig-<base>");
  }
  if (rest == "ldan") {
    method.base = BaseKind::Lda;
    method.nonparametric = true;
  } else {
    method.base = parse_base(rest);
  }
  return method;
}

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t comma = text.find(',', start);
    if (comma == std::string::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    if (comma > start) out.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

struct SimulateArgs {
  std::string model;
  int n = 200;
  int n_test = 1000;
  uint64_t seed = 0;
  std::string out_train;
  std::string out_test;
};

int run_simulate(const SimulateArgs& args) {
  rase::SimSpec spec;
  spec.model = rase::parse_sim_model(args.model);
  spec.n = args.n;
  spec.n_test = args.n_test;
  spec.seed = args.seed;
  const rase::SimData data = rase::generate(spec);
  rase::save_csv(data.train, args.out_train);
  if (!args.out_test.empty()) rase::save_csv(data.test, args.out_test);
  std::cout << "model " << args.model << ": wrote " << data.train.n() << " train rows";
  if (!args.out_test.empty()) std::cout << " and " << data.test.n() << " test rows";
  std::cout << " with p = " << data.train.p() << "\n";
  return 0;
}

struct FitArgs {
  std::string train_path;
  std::string base = "lda";
  std::string criterion;  // empty = per-base default
  rase::EnsembleConfig config;
  std::string model_out;
};

int run_fit(const FitArgs& args) {
  rase::EnsembleConfig config = args.config;
  config.base.kind = parse_base(args.base);
  config.criterion.type = args.criterion.empty() ? default_criterion(config.base.kind)
                                                 : parse_criterion(args.criterion);
  const rase::LabeledDataset train = rase::load_csv(args.train_path);
  const rase::RaseModel model = rase::fit(train, config);
  rase::save_model(model, args.model_out);
  const double train_error = rase::misclassification_rate(model, train, config.threads);
  std::printf("fit %d learners on n = %d, p = %d; alpha = %.6g, training error %.2f%%\n",
              config.b1, train.n(), train.p(), model.alpha_hat, format_pct(train_error));
  std::printf("model written to %s\n", args.model_out.c_str());
  return 0;
}

struct PredictArgs {
  std::string model_path;
  std::string data_path;
  std::string out_path;
  int threads = 1;
};

int run_predict(const PredictArgs& args) {
  const rase::RaseModel model = rase::load_model(args.model_path);
  const rase::LabeledDataset data = rase::load_csv(args.data_path);
  const Eigen::VectorXd nu = rase::predict_scores(model, data.features, args.threads);
  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) rase::raise(rase::ErrorKind::DataError, "cannot write '" + args.out_path + "'");
  out << "nu,pred\n";
  int errors = 0;
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    const int pred = nu[i] > model.alpha_hat ? 1 : 0;
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), nu[i]);
    out.write(buf, ptr - buf);
    out << ',' << pred << '\n';
    if (pred != data.labels[i]) ++errors;
  }
  std::printf("predicted %ld rows; error against provided labels: %.2f%%\n",
              static_cast<long>(nu.size()), format_pct(static_cast<double>(errors) / nu.size()));
  return 0;
}

struct RankArgs {
  std::string model_path;
  int top = 0;
};

int run_rank(const RankArgs& args) {
  const rase::RaseModel model = rase::load_model(args.model_path);
  auto ranking = rase::feature_ranking(model);
  const int limit = args.top > 0 ? std::min<int>(args.top, static_cast<int>(ranking.size()))
                                 : static_cast<int>(ranking.size());
  std::printf("feature  eta\n");
  for (int i = 0; i < limit; ++i) {
    std::printf("%7d  %.6g\n", ranking[static_cast<size_t>(i)].first + 1,
                ranking[static_cast<size_t>(i)].second);
  }
  return 0;
}

struct BenchArgs {
  std::string model_spec;
  int n = 200;
  int n_test = 1000;
  std::string methods = "rase-lda";
  int replicates = 20;
  uint64_t seed = 0;
  int threads = 1;
  std::string json_out;
  bool no_timing = false;
};

struct MethodSummary {
  BenchMethod method;
  std::vector<double> errors;       // per replicate, fractions
  Eigen::VectorXd eta_sum;
  double wall_seconds = 0.0;
};

int run_bench(const BenchArgs& args) {
  const rase::SimModel model_kind = rase::parse_sim_model(args.model_spec);
  if (args.replicates < 1) rase::raise(rase::ErrorKind::UsageError, "--replicates must be >= 1");
  std::vector<BenchMethod> methods;
  for (const auto& token : split_csv_list(args.methods)) methods.push_back(parse_method(token));
  if (methods.empty()) rase::raise(rase::ErrorKind::UsageError, "--methods is empty");

  const int p = rase::sim_feature_count(model_kind);
  std::vector<MethodSummary> summaries(methods.size());
  for (size_t m = 0; m < methods.size(); ++m) {
    summaries[m].method = methods[m];
    summaries[m].errors.assign(static_cast<size_t>(args.replicates), 0.0);
    summaries[m].eta_sum = Eigen::VectorXd::Zero(p);
  }
  std::vector<double> wall(methods.size() * static_cast<size_t>(args.replicates), 0.0);
  std::vector<Eigen::VectorXd> etas(methods.size() * static_cast<size_t>(args.replicates));

  const int outer_threads = std::max(1, std::min(args.threads, args.replicates));
  const int inner_threads = std::max(1, args.threads / outer_threads);

  auto run_replicate = [&](int r) {
    rase::SimSpec spec;
    spec.model = model_kind;
    spec.n = args.n;
    spec.n_test = args.n_test;
    spec.seed = rase::replicate_seed(args.seed, static_cast<uint64_t>(r));
    const rase::SimData data = rase::generate(spec);
    for (size_t m = 0; m < methods.size(); ++m) {
      const auto t0 = std::chrono::steady_clock::now();
      double error = 0.0;
      Eigen::VectorXd eta = Eigen::VectorXd::Zero(p);
      if (methods[m].is_signal_oracle) {
        const rase::TrainedLearner oracle = rase::signal_oracle(model_kind, data.train);
        error = rase::learner_test_error(oracle, data.test);
      } else {
        rase::EnsembleConfig config;
        config.base.kind = methods[m].base;
        config.criterion.type = methods[m].nonparametric
                                    ? CriterionType::RicNonparametric
                                    : default_criterion(methods[m].base);
        config.iterations = methods[m].iterations;
        config.seed = spec.seed;
        config.threads = inner_threads;
        const rase::RaseModel fitted = rase::fit(data.train, config);
        error = rase::misclassification_rate(fitted, data.test, inner_threads);
        eta = fitted.eta;
      }
      const auto t1 = std::chrono::steady_clock::now();
      const size_t slot = m * static_cast<size_t>(args.replicates) + static_cast<size_t>(r);
      wall[slot] = std::chrono::duration<double>(t1 - t0).count();
      etas[slot] = std::move(eta);
      summaries[m].errors[static_cast<size_t>(r)] = error;
    }
  };

#ifdef _OPENMP
  if (outer_threads > 1) {
#pragma omp parallel for num_threads(outer_threads) schedule(dynamic)
    for (int r = 0; r < args.replicates; ++r) run_replicate(r);
  } else {
    for (int r = 0; r < args.replicates; ++r) run_replicate(r);
  }
#else
  for (int r = 0; r < args.replicates; ++r) run_replicate(r);
#endif

  nlohmann::json report;
  report["model"] = args.model_spec;
  report["n"] = args.n;
  report["n_test"] = args.n_test;
  report["replicates"] = args.replicates;
  report["seed"] = args.seed;
  report["methods"] = nlohmann::json::array();

  std::printf("# rase bench: model %s, n = %d, n_test = %d, replicates = %d, seed = %llu\n",
              args.model_spec.c_str(), args.n, args.n_test, args.replicates,
              static_cast<unsigned long long>(args.seed));
  std::printf("# errors are percentages; sd uses the sample (n-1) convention\n");
  if (args.no_timing) {
    std::printf("%-14s %8s %8s %6s\n", "method", "mean", "sd", "reps");
  } else {
    std::printf("%-14s %8s %8s %6s %10s\n", "method", "mean", "sd", "reps", "wall_s");
  }

  for (size_t m = 0; m < methods.size(); ++m) {
    auto& summary = summaries[m];
    double mean = 0.0;
    for (double e : summary.errors) mean += e;
    mean /= args.replicates;
    double sd = 0.0;
    if (args.replicates > 1) {
      for (double e : summary.errors) sd += (e - mean) * (e - mean);
      sd = std::sqrt(sd / (args.replicates - 1));
    }
    double total_wall = 0.0;
    for (int r = 0; r < args.replicates; ++r) {
      const size_t slot = m * static_cast<size_t>(args.replicates) + static_cast<size_t>(r);
      total_wall += wall[slot];
      summary.eta_sum += etas[slot];
    }
    const Eigen::VectorXd mean_eta = summary.eta_sum / args.replicates;

    if (args.no_timing) {
      std::printf("%-14s %8.2f %8.2f %6d\n", summary.method.name.c_str(), format_pct(mean),
                  format_pct(sd), args.replicates);
    } else {
      std::printf("%-14s %8.2f %8.2f %6d %10.1f\n", summary.method.name.c_str(), format_pct(mean),
                  format_pct(sd), args.replicates, total_wall);
    }

    nlohmann::json entry;
    entry["name"] = summary.method.name;
    entry["mean_error_pct"] = format_pct(mean);
    entry["sd_error_pct"] = format_pct(sd);
    entry["replicates"] = args.replicates;
    if (!args.no_timing) entry["wall_seconds"] = total_wall;
    if (!summary.method.is_signal_oracle) {
      nlohmann::json eta_json = nlohmann::json::array();
      for (int j = 0; j < p; ++j) eta_json.push_back(mean_eta[j]);
      entry["mean_eta"] = std::move(eta_json);
    }
    report["methods"].push_back(std::move(entry));
  }

  if (!args.json_out.empty()) {
    std::ofstream out(args.json_out, std::ios::binary);
    if (!out) rase::raise(rase::ErrorKind::DataError, "cannot write '" + args.json_out + "'");
    out << report.dump(1) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random subspace ensemble classifier"};
  app.require_subcommand(1);
  const int default_threads = env_default_threads();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a benchmark dataset");
  simulate->add_option("--model", sim.model, "model id: 1, 1p, 2, 3, 4, 4p")->required();
  simulate->add_option("--n", sim.n, "training rows")->required();
  simulate->add_option("--n-test", sim.n_test, "test rows (default 1000)");
  simulate->add_option("--seed", sim.seed, "generator seed");
  simulate->add_option("--out-train", sim.out_train, "training CSV path")->required();
  simulate->add_option("--out-test", sim.out_test, "test CSV path");

  FitArgs fit_args;
  fit_args.config.threads = default_threads;
  auto* fit = app.add_subcommand("fit", "train an ensemble on a CSV");
  fit->add_option("--train", fit_args.train_path, "training CSV")->required();
  fit->add_option("--base", fit_args.base, "base classifier: lda, qda, knn, gamma")->required();
  fit->add_option("--criterion", fit_args.criterion,
                  "subspace criterion: ric, ric-np, train-err, loo (default: ric; loo for knn)");
  fit->add_option("--b1", fit_args.config.b1, "number of weak learners (default 200)");
  fit->add_option("--b2", fit_args.config.b2, "candidate subspaces per learner (default 500)");
  fit->add_option("--d", fit_args.config.d_max, "max subspace size (default min(p, sqrt(n)))");
  fit->add_option("--cn", fit_args.config.criterion.c_n,
                  "RIC penalty scale (default log(n)/n; 0 disables the penalty)");
  fit->add_option("--k0", fit_args.config.criterion.k0, "ric-np neighbor order, class 0");
  fit->add_option("--k1", fit_args.config.criterion.k1, "ric-np neighbor order, class 1");
  fit->add_option("--c0", fit_args.config.c0, "iterative weight floor constant (default 0.1)");
  fit->add_option("--iterations", fit_args.config.iterations, "iterative refits T (default 0)");
  fit->add_option("--seed", fit_args.config.seed, "fitting seed");
  fit->add_option("--threads", fit_args.config.threads, "worker threads (default RASE_THREADS or 1)");
  fit->add_option("--model-out", fit_args.model_out, "output model JSON")->required();

  PredictArgs pred;
  pred.threads = default_threads;
  auto* predict = app.add_subcommand("predict", "score a CSV with a fitted model");
  predict->add_option("--model", pred.model_path, "model JSON")->required();
  predict->add_option("--data", pred.data_path, "input CSV")->required();
  predict->add_option("--out", pred.out_path, "output CSV of nu,pred")->required();
  predict->add_option("--threads", pred.threads, "worker threads");

  RankArgs rank;
  auto* rank_cmd = app.add_subcommand("rank", "feature ranking by selection frequency");
  rank_cmd->add_option("--model", rank.model_path, "model JSON")->required();
  rank_cmd->add_option("--top", rank.top, "print only the top k features");

  BenchArgs bench;
  bench.threads = default_threads;
  auto* bench_cmd = app.add_subcommand("bench", "replicate benchmark on a simulation model");
  bench_cmd->add_option("--model-spec", bench.model_spec, "model id: 1, 1p, 2, 3, 4, 4p")->required();
  bench_cmd->add_option("--n", bench.n, "training rows per replicate (default 200)");
  bench_cmd->add_option("--n-test", bench.n_test, "test rows per replicate (default 1000)");
  bench_cmd->add_option("--methods", bench.methods,
                        "comma list, e.g. rase-lda,rase1-lda,sig-lda,rase2-gamma,rase-ldan")
      ->required();
  bench_cmd->add_option("--replicates", bench.replicates, "replicate count")->required();
  bench_cmd->add_option("--seed", bench.seed, "master seed");
  bench_cmd->add_option("--threads", bench.threads, "worker cap across replicates");
  bench_cmd->add_option("--json-out", bench.json_out, "also write the report as JSON");
  bench_cmd->add_flag("--no-timing", bench.no_timing, "omit wall time for byte-stable reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fit) return run_fit(fit_args);
    if (*predict) return run_predict(pred);
    if (*rank_cmd) return run_rank(rank);
    if (*bench_cmd) return run_bench(bench);
  } catch (const rase::RaseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case rase::ErrorKind::UsageError:
      case rase::ErrorKind::InvalidBound:
        return 1;
      case rase::ErrorKind::FitFailure:
      case rase::ErrorKind::NonConvergence:
      case rase::ErrorKind::SingularMatrix:
        return 3;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
