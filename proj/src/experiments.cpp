#include "sparselab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sparselab/csv.hpp"
#include "sparselab/dictlearn.hpp"
#include "sparselab/probes.hpp"
#include "sparselab/rng.hpp"
#include "sparselab/solvers.hpp"

namespace sparselab {

namespace {

using GridPoint = std::vector<std::pair<std::string, double>>;

std::string grid_to_string(const GridPoint& g) {
  std::string s;
  for (const auto& [key, value] : g) {
    s += key;
    s += '=';
    s += fmt_g17(value);
    s += ';';
  }
  return s;
}

struct CellSpec {
  int d_z = 0, k = 0, d_y = 0;
  long p_train = 0;
};

std::uint64_t data_seed_for(const ExperimentConfig& cfg, std::uint64_t replicate,
                            const CellSpec& cell) {
  // p_train deliberately excluded: test and probe splits must be identical
  // across sample-count cells so oracle records do not depend on p.
  std::uint64_t s = seed_combine(cfg.master_seed, cfg.experiment);
  s = seed_combine(s, replicate);
  s = seed_combine(s, "data");
  s = seed_combine(s, static_cast<std::uint64_t>(cell.d_z));
  s = seed_combine(s, static_cast<std::uint64_t>(cell.k));
  s = seed_combine(s, static_cast<std::uint64_t>(cell.d_y));
  return s;
}

struct CellData {
  MixingMatrix A;
  Matrix A_unit;  // A with unit-norm columns: the oracle inference dictionary
  Dataset train, probe, id_test, ood_test;
};

CellData make_cell_data(const ExperimentConfig& cfg, const CellSpec& cell,
                        std::uint64_t dseed) {
  CellData d;
  d.A = gen_mixing(cell.d_y, cell.d_z, seed_combine(dseed, "mixing"));
  // Row normalisation of A leaves columns at norm ~sqrt(d_y/d_z), which would
  // scale the effective l1 threshold by its inverse square (and zero out all
  // oracle codes once lambda exceeds ||D^T y||_inf at large d_z). Inference
  // always runs against unit-norm atoms, like the learned dictionaries.
  d.A_unit = d.A.entries;
  for (Eigen::Index c = 0; c < d.A_unit.cols(); ++c) {
    const double n = d.A_unit.col(c).norm();
    if (n > 0.0) d.A_unit.col(c) /= n;
  }
  GenConfig gc;
  gc.d_z = cell.d_z;
  gc.k = cell.k;
  gc.d_y = cell.d_y;
  gc.p = cell.p_train;
  gc.seed = seed_combine(dseed, "train");
  d.train = sample_split(gc, d.A, Split::IdTrain);
  gc.p = cfg.sizes.p_probe;
  gc.seed = seed_combine(dseed, "probe");
  d.probe = sample_split(gc, d.A, Split::IdTrain);
  gc.p = cfg.sizes.p_id_test;
  gc.seed = seed_combine(dseed, "id_test");
  d.id_test = sample_split(gc, d.A, Split::IdTest);
  gc.p = cfg.sizes.p_ood_test;
  gc.seed = seed_combine(dseed, "ood_test");
  d.ood_test = sample_split(gc, d.A, Split::OodTest);
  return d;
}

struct SplitCodes {
  Matrix probe, id, ood;
};

MetricRow evaluate_codes(const CellData& d, const SplitCodes& codes,
                         const Matrix* dict, double logistic_l2) {
  MetricRow row;
  auto [mcc_id, match_id] = mcc(codes.id, d.id_test.Z);
  row.mcc_id = mcc_id;
  row.mcc_ood = mcc(codes.ood, d.ood_test.Z).first;
  const AucResult auc =
      per_feature_auc(codes.id, d.id_test.labels, codes.ood, d.ood_test.labels);
  row.auc_id = auc.auc_id;
  row.auc_ood = auc.auc_ood;
  const LogisticProbe head = fit_logistic(codes.probe, d.probe.labels, logistic_l2);
  row.acc_id = eval_accuracy(head, codes.id, d.id_test.labels);
  row.acc_ood = eval_accuracy(head, codes.ood, d.ood_test.labels);

  // Dictionary methods reindex supports through decoder-column matching;
  // dictionary-less codes fall back to the MCC matching.
  Matching support_match = match_id;
  if (dict) {
    const DictDiagnostics dd = dict_diagnostics(*dict, d.A.entries);
    row.dict_cosine = dd.mean_cosine;
    row.dict_norm_ratio = dd.mean_norm_ratio;
    support_match = dd.matching;
  }
  const SupportMetrics sup = support_metrics(codes.id, d.id_test.Z, support_match);
  row.support_precision = sup.precision;
  row.support_recall = sup.recall;
  row.support_f1 = sup.f1;
  row.mean_active = sup.mean_active;
  return row;
}

/// Per-(cell, replicate) context with lazily trained artifacts so methods in
/// one cell share the SAE / dictionary they ablate.
class CellRunner {
 public:
  CellRunner(const ExperimentConfig& cfg, const CellSpec& cell,
             std::uint64_t replicate)
      : cfg_(cfg),
        cell_(cell),
        dseed_(data_seed_for(cfg, replicate, cell)),
        data_(make_cell_data(cfg, cell, dseed_)) {}

  const CellData& data() const { return data_; }
  const CellSpec& cell() const { return cell_; }

  const SaeTrainResult& sae(SaeKind kind) {
    auto& slot = sae_[static_cast<int>(kind)];
    if (!slot) {
      SaeTrainConfig sc = cfg_.sae;
      sc.seed = seed_combine(seed_combine(dseed_, "sae"), to_string(kind));
      slot = std::make_unique<SaeTrainResult>(train_sae(
          data_.train.Y, kind, cell_.k, cell_.d_z, sc, &data_.A.entries));
    }
    return *slot;
  }

  const SplitCodes& encoder_codes(SaeKind kind) {
    auto& slot = enc_codes_[static_cast<int>(kind)];
    if (!slot) {
      const SaeModel& m = sae(kind).model;
      slot = std::make_unique<SplitCodes>(
          SplitCodes{encode_batch(m, data_.probe.Y), encode_batch(m, data_.id_test.Y),
                     encode_batch(m, data_.ood_test.Y)});
    }
    return *slot;
  }

  DlConfig dl_config(DlInit init) const {
    DlConfig dc;
    dc.d_h = cell_.d_z;
    dc.lambda = cfg_.dl_lambda;
    dc.rounds = cfg_.dl_rounds;
    dc.inner.lambda = cfg_.dl_lambda;
    dc.inner.max_iters = cfg_.fista_iters;
    dc.inner.tol = cfg_.dl_inner_tol;
    dc.init = std::move(init);
    return dc;
  }

  std::uint64_t dl_seed() const { return seed_combine(dseed_, "dl_init"); }

  const LearnedDictionary& dl() {
    if (!dl_) {
      dl_ = std::make_unique<LearnedDictionary>(
          dl_fista(data_.train.Y, dl_config(DlInit::random(dl_seed())),
                   &data_.A.entries));
    }
    return *dl_;
  }

  SplitCodes fista_codes(const Matrix& D, const Vector* bias, double lambda,
                         int iters, double tol,
                         const SplitCodes* init = nullptr) const {
    SolverConfig sc;
    sc.lambda = lambda;
    sc.max_iters = iters;
    sc.tol = tol;
    auto solve = [&](const Matrix& Y, const Matrix* ini) {
      if (bias) {
        const Matrix Yc = Y.rowwise() - bias->transpose();
        return fista_batch(Yc, D, sc, ini).H;
      }
      return fista_batch(Y, D, sc, ini).H;
    };
    SplitCodes out;
    out.probe = solve(data_.probe.Y, init ? &init->probe : nullptr);
    out.id = solve(data_.id_test.Y, init ? &init->id : nullptr);
    out.ood = solve(data_.ood_test.Y, init ? &init->ood : nullptr);
    return out;
  }

  // Oracle rows: per-sample FISTA against the unit-column truth dictionary,
  // then least-squares magnitudes on each recovered support. The Lasso's
  // magnitude bias depends on the co-active set, which an ID-trained probe
  // would otherwise exploit through co-occurrence features that break OOD.
  SplitCodes oracle_codes(double lambda, int iters, double tol) const {
    SplitCodes codes = fista_codes(data_.A_unit, nullptr, lambda, iters, tol);
    auto refit = [this](const Matrix& Y, const Matrix& H) {
      Matrix out = Matrix::Zero(H.rows(), H.cols());
      for (Eigen::Index i = 0; i < H.rows(); ++i) {
        std::vector<int> support;
        for (Eigen::Index j = 0; j < H.cols(); ++j)
          if (std::abs(H(i, j)) > kSupportEps) support.push_back(static_cast<int>(j));
        out.row(i) =
            lstsq_on_support(Y.row(i).transpose(), data_.A_unit, support)
                .values.transpose();
      }
      return out;
    };
    codes.probe = refit(data_.probe.Y, codes.probe);
    codes.id = refit(data_.id_test.Y, codes.id);
    codes.ood = refit(data_.ood_test.Y, codes.ood);
    return codes;
  }

  SplitCodes lstsq_support_codes(SaeKind kind) {
    const SaeModel& m = sae(kind).model;
    const SplitCodes& enc = encoder_codes(kind);
    auto refit = [&](const Matrix& Y, const Matrix& H) {
      Matrix out = Matrix::Zero(H.rows(), H.cols());
      for (Eigen::Index i = 0; i < H.rows(); ++i) {
        std::vector<int> support;
        for (Eigen::Index j = 0; j < H.cols(); ++j)
          if (std::abs(H(i, j)) > kSupportEps) support.push_back(static_cast<int>(j));
        const Vector y = Y.row(i).transpose() - m.b_pre;
        out.row(i) = lstsq_on_support(y, m.W_dec, support).values.transpose();
      }
      return out;
    };
    SplitCodes out;
    out.probe = refit(data_.probe.Y, enc.probe);
    out.id = refit(data_.id_test.Y, enc.id);
    out.ood = refit(data_.ood_test.Y, enc.ood);
    return out;
  }

  MetricRow evaluate(const SplitCodes& codes, const Matrix* dict) const {
    return evaluate_codes(data_, codes, dict, cfg_.logistic_l2);
  }

 private:
  const ExperimentConfig& cfg_;
  CellSpec cell_;
  std::uint64_t dseed_;
  CellData data_;
  std::unique_ptr<SaeTrainResult> sae_[4];
  std::unique_ptr<SplitCodes> enc_codes_[4];
  std::unique_ptr<LearnedDictionary> dl_;
};

SaeKind kind_of_method(Method m) {
  switch (m) {
    case Method::SaeRelu: return SaeKind::Relu;
    case Method::SaeJumpRelu: return SaeKind::JumpRelu;
    case Method::SaeTopK: return SaeKind::TopK;
    case Method::SaeMp: return SaeKind::Mp;
    default: throw std::logic_error("not an SAE method");
  }
}

struct Task {
  CellSpec cell;
  GridPoint grid;
  std::uint64_t replicate = 0;
  bool feasible = true;
};

class StopWatch {
 public:
  StopWatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

template <typename Fn>
std::vector<ExperimentRecord> parallel_tasks(const ExperimentConfig& cfg,
                                             size_t n, Fn&& fn) {
  std::vector<std::vector<ExperimentRecord>> results(n);
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<size_t>(n, static_cast<size_t>(threads)));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<ExperimentRecord> flat;
  for (auto& r : results)
    for (auto& rec : r) flat.push_back(std::move(rec));
  return flat;
}

ExperimentRecord make_record(const ExperimentConfig& cfg, const Task& task,
                             const std::string& method, const std::string& kind,
                             MetricRow metrics, double seconds) {
  ExperimentRecord rec;
  rec.experiment = cfg.experiment;
  rec.grid = task.grid;
  rec.method = method;
  rec.sae_kind = kind;
  rec.seed = record_seed(cfg, task.replicate, task.grid, method, kind);
  rec.metrics = metrics;
  rec.wall_time = seconds;
  return rec;
}

MetricRow nan_metrics() {
  MetricRow row;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.mcc_id = row.mcc_ood = row.auc_id = row.auc_ood = nan;
  row.acc_id = row.acc_ood = nan;
  row.support_precision = row.support_recall = row.support_f1 = nan;
  row.mean_active = nan;
  return row;
}

// Sweep experiments (phase / vary-*): every requested method on every cell.
std::vector<ExperimentRecord> run_sweep_task(const ExperimentConfig& cfg,
                                             const Task& task) {
  std::vector<ExperimentRecord> out;
  if (!task.feasible) {
    out.push_back(make_record(cfg, task, "skipped", "", nan_metrics(), 0.0));
    return out;
  }
  CellRunner R(cfg, task.cell, task.replicate);
  const CellData& d = R.data();

  for (Method method : cfg.methods) {
    switch (method) {
      case Method::FistaOracle: {
        StopWatch sw;
        const SplitCodes codes =
            R.oracle_codes(cfg.fista_lambda, cfg.fista_iters, cfg.fista_tol);
        out.push_back(make_record(cfg, task, to_string(method), "",
                                  R.evaluate(codes, &d.A.entries), sw.seconds()));
        break;
      }
      case Method::DlFista: {
        StopWatch sw;
        const Matrix& W = R.dl().W;
        const SplitCodes codes =
            R.fista_codes(W, nullptr, cfg.fista_lambda, cfg.fista_iters, cfg.fista_tol);
        out.push_back(make_record(cfg, task, to_string(method), "",
                                  R.evaluate(codes, &W), sw.seconds()));
        break;
      }
      case Method::SaeRelu:
      case Method::SaeJumpRelu:
      case Method::SaeTopK:
      case Method::SaeMp: {
        StopWatch sw;
        const SaeKind kind = kind_of_method(method);
        const SplitCodes& codes = R.encoder_codes(kind);
        out.push_back(make_record(cfg, task, to_string(method), to_string(kind),
                                  R.evaluate(codes, &R.sae(kind).model.W_dec),
                                  sw.seconds()));
        break;
      }
      case Method::FrozenFista: {
        for (SaeKind kind : cfg.sae_kinds) {
          StopWatch sw;
          const SaeModel& m = R.sae(kind).model;
          const SplitCodes codes = R.fista_codes(m.W_dec, &m.b_pre, cfg.fista_lambda,
                                                 cfg.fista_iters, cfg.fista_tol);
          out.push_back(make_record(cfg, task, to_string(method), to_string(kind),
                                    R.evaluate(codes, &m.W_dec), sw.seconds()));
        }
        break;
      }
      case Method::Refined: {
        for (SaeKind kind : cfg.sae_kinds) {
          StopWatch sw;
          const SaeModel& m = R.sae(kind).model;
          const SplitCodes codes =
              R.fista_codes(m.W_dec, &m.b_pre, cfg.fista_lambda, cfg.fista_iters,
                            cfg.fista_tol, &R.encoder_codes(kind));
          out.push_back(make_record(cfg, task, to_string(method), to_string(kind),
                                    R.evaluate(codes, &m.W_dec), sw.seconds()));
        }
        break;
      }
      case Method::LinearProbe: {
        StopWatch sw;
        const RidgeProbe probe = fit_ridge(d.train.Y, d.train.Z, cfg.ridge_alpha);
        SplitCodes codes;
        codes.probe = ridge_predict(probe, d.probe.Y);
        codes.id = ridge_predict(probe, d.id_test.Y);
        codes.ood = ridge_predict(probe, d.ood_test.Y);
        out.push_back(make_record(cfg, task, to_string(method), "",
                                  R.evaluate(codes, nullptr), sw.seconds()));
        break;
      }
    }
  }
  return out;
}

std::vector<ExperimentRecord> run_frozen_task(const ExperimentConfig& cfg,
                                              const Task& task) {
  std::vector<ExperimentRecord> out;
  CellRunner R(cfg, task.cell, task.replicate);
  const CellData& d = R.data();

  {
    StopWatch sw;
    const SplitCodes codes =
        R.oracle_codes(cfg.fista_lambda, cfg.fista_iters, cfg.fista_tol);
    out.push_back(make_record(cfg, task, "fista_oracle", "",
                              R.evaluate(codes, &d.A.entries), sw.seconds()));
  }
  {
    StopWatch sw;
    const Matrix& W = R.dl().W;
    const SplitCodes codes =
        R.fista_codes(W, nullptr, cfg.fista_lambda, cfg.fista_iters, cfg.fista_tol);
    out.push_back(
        make_record(cfg, task, "dl_fista", "", R.evaluate(codes, &W), sw.seconds()));
  }
  for (SaeKind kind : cfg.sae_kinds) {
    const SaeModel& m = R.sae(kind).model;
    {
      StopWatch sw;
      const SplitCodes& codes = R.encoder_codes(kind);
      out.push_back(make_record(cfg, task, "sae_" + to_string(kind), to_string(kind),
                                R.evaluate(codes, &m.W_dec), sw.seconds()));
    }
    {
      StopWatch sw;
      const SplitCodes codes = R.fista_codes(m.W_dec, &m.b_pre, cfg.fista_lambda,
                                             cfg.fista_iters, cfg.fista_tol);
      out.push_back(make_record(cfg, task, "frozen_fista", to_string(kind),
                                R.evaluate(codes, &m.W_dec), sw.seconds()));
    }
    {
      StopWatch sw;
      const SplitCodes codes =
          R.fista_codes(m.W_dec, &m.b_pre, cfg.fista_lambda, cfg.fista_iters,
                        cfg.fista_tol, &R.encoder_codes(kind));
      out.push_back(make_record(cfg, task, "refined", to_string(kind),
                                R.evaluate(codes, &m.W_dec), sw.seconds()));
    }
  }
  return out;
}

std::vector<ExperimentRecord> run_warmstart_decoder_task(
    const ExperimentConfig& cfg, const Task& task) {
  std::vector<ExperimentRecord> out;
  CellRunner R(cfg, task.cell, task.replicate);
  const CellData& d = R.data();
  std::vector<int> checkpoints = cfg.round_checkpoints;
  if (checkpoints.empty()) checkpoints = {0, cfg.dl_rounds};
  const int max_round = *std::max_element(checkpoints.begin(), checkpoints.end());

  auto grid_at_round = [&task](int round) {
    GridPoint g = task.grid;
    g.insert(g.begin(), {"round", static_cast<double>(round)});
    return g;
  };

  // Oracle reference, constant across rounds.
  {
    StopWatch sw;
    const SplitCodes codes =
        R.oracle_codes(cfg.fista_lambda, cfg.fista_iters, cfg.fista_tol);
    const MetricRow row = R.evaluate(codes, &d.A.entries);
    const double secs = sw.seconds();
    for (int r : checkpoints) {
      Task t = task;
      t.grid = grid_at_round(r);
      out.push_back(make_record(cfg, t, "fista_oracle", "", row, secs));
    }
  }

  auto run_variant = [&](const std::string& method, const std::string& kind,
                         DlInit init) {
    DlConfig dc = R.dl_config(std::move(init));
    dc.rounds = std::max(1, max_round);
    dl_fista(d.train.Y, dc, nullptr, [&](int round, const Matrix& W) {
      if (std::find(checkpoints.begin(), checkpoints.end(), round) ==
          checkpoints.end())
        return;
      StopWatch sw;
      const SplitCodes codes =
          R.fista_codes(W, nullptr, cfg.fista_lambda, cfg.fista_iters, cfg.fista_tol);
      Task t = task;
      t.grid = grid_at_round(round);
      out.push_back(
          make_record(cfg, t, method, kind, R.evaluate(codes, &W), sw.seconds()));
    });
  };

  run_variant("dl_random", "", DlInit::random(R.dl_seed()));
  for (SaeKind kind : cfg.sae_kinds)
    run_variant("dl_warmstart", to_string(kind),
                DlInit::from_dictionary(R.sae(kind).model.W_dec));
  return out;
}

std::vector<ExperimentRecord> run_warmstart_encoder_task(
    const ExperimentConfig& cfg, const Task& task) {
  std::vector<ExperimentRecord> out;
  CellRunner R(cfg, task.cell, task.replicate);
  std::vector<int> budgets = cfg.iter_budgets;
  if (budgets.empty()) budgets = {1, 2, 5, 10, 20, 50, 100};

  for (SaeKind kind : cfg.sae_kinds) {
    const SaeModel& m = R.sae(kind).model;
    for (int iters : budgets) {
      GridPoint g = task.grid;
      g.insert(g.begin(), {"iters", static_cast<double>(iters)});
      Task t = task;
      t.grid = g;
      {
        StopWatch sw;
        const SplitCodes codes =
            R.fista_codes(m.W_dec, &m.b_pre, cfg.fista_lambda, iters, 0.0);
        out.push_back(make_record(cfg, t, "frozen_fista", to_string(kind),
                                  R.evaluate(codes, &m.W_dec), sw.seconds()));
      }
      {
        StopWatch sw;
        const SplitCodes codes = R.fista_codes(m.W_dec, &m.b_pre, cfg.fista_lambda,
                                               iters, 0.0, &R.encoder_codes(kind));
        out.push_back(make_record(cfg, t, "refined", to_string(kind),
                                  R.evaluate(codes, &m.W_dec), sw.seconds()));
      }
    }
  }
  return out;
}

std::vector<ExperimentRecord> run_lambda_task(const ExperimentConfig& cfg,
                                              const Task& task) {
  std::vector<ExperimentRecord> out;
  CellRunner R(cfg, task.cell, task.replicate);
  const CellData& d = R.data();
  std::vector<double> lambdas = cfg.lambda_list;
  if (lambdas.empty()) lambdas = {0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 0.5, 1.0, 2.0};

  // Encoder rows are lambda-independent; evaluate once per kind and replicate
  // across the sweep for flat reference lines.
  for (SaeKind kind : cfg.sae_kinds) {
    StopWatch sw;
    const MetricRow row =
        R.evaluate(R.encoder_codes(kind), &R.sae(kind).model.W_dec);
    const double secs = sw.seconds();
    for (double lambda : lambdas) {
      Task t = task;
      t.grid = task.grid;
      t.grid.insert(t.grid.begin(), {"lambda", lambda});
      out.push_back(make_record(cfg, t, "sae_" + to_string(kind), to_string(kind),
                                row, secs));
    }
  }

  for (double lambda : lambdas) {
    GridPoint g = task.grid;
    g.insert(g.begin(), {"lambda", lambda});
    Task t = task;
    t.grid = g;
    {
      StopWatch sw;
      const SplitCodes codes =
          R.oracle_codes(lambda, cfg.fista_iters, cfg.fista_tol);
      out.push_back(make_record(cfg, t, "fista_oracle", "",
                                R.evaluate(codes, &d.A.entries), sw.seconds()));
    }
    for (SaeKind kind : cfg.sae_kinds) {
      StopWatch sw;
      const SaeModel& m = R.sae(kind).model;
      const SplitCodes codes =
          R.fista_codes(m.W_dec, &m.b_pre, lambda, cfg.fista_iters, cfg.fista_tol);
      out.push_back(make_record(cfg, t, "frozen_fista", to_string(kind),
                                R.evaluate(codes, &m.W_dec), sw.seconds()));
    }
  }
  return out;
}

std::vector<ExperimentRecord> run_support_task(const ExperimentConfig& cfg,
                                               const Task& task) {
  std::vector<ExperimentRecord> out;
  CellRunner R(cfg, task.cell, task.replicate);
  const CellData& d = R.data();
  {
    StopWatch sw;
    const SplitCodes codes =
        R.oracle_codes(cfg.fista_lambda, cfg.fista_iters, cfg.fista_tol);
    out.push_back(make_record(cfg, task, "fista_oracle", "",
                              R.evaluate(codes, &d.A.entries), sw.seconds()));
  }
  for (SaeKind kind : cfg.sae_kinds) {
    const SaeModel& m = R.sae(kind).model;
    {
      StopWatch sw;
      out.push_back(make_record(cfg, task, "sae_" + to_string(kind), to_string(kind),
                                R.evaluate(R.encoder_codes(kind), &m.W_dec),
                                sw.seconds()));
    }
    {
      StopWatch sw;
      const SplitCodes codes = R.lstsq_support_codes(kind);
      out.push_back(make_record(cfg, task, "lstsq_support", to_string(kind),
                                R.evaluate(codes, &m.W_dec), sw.seconds()));
    }
    {
      StopWatch sw;
      const SplitCodes codes = R.fista_codes(m.W_dec, &m.b_pre, cfg.fista_lambda,
                                             cfg.fista_iters, cfg.fista_tol);
      out.push_back(make_record(cfg, task, "frozen_fista", to_string(kind),
                                R.evaluate(codes, &m.W_dec), sw.seconds()));
    }
  }
  return out;
}

GridPoint cell_grid(const std::string& x_key, double x_value, const CellSpec& cell) {
  GridPoint g;
  if (!x_key.empty()) g.emplace_back(x_key, x_value);
  g.emplace_back("d_z", cell.d_z);
  g.emplace_back("k", cell.k);
  g.emplace_back("d_y", cell.d_y);
  g.emplace_back("p", static_cast<double>(cell.p_train));
  return g;
}

std::vector<Task> build_tasks(const ExperimentConfig& cfg) {
  std::vector<Task> tasks;
  auto add_for_replicates = [&](Task t) {
    for (std::uint64_t rep : cfg.seeds) {
      t.replicate = rep;
      tasks.push_back(t);
    }
  };

  if (cfg.experiment == "phase") {
    for (int d_z : cfg.d_z_list)
      for (int k : cfg.k_list)
        for (double delta : cfg.delta_list) {
          Task t;
          t.cell = CellSpec{d_z, k, static_cast<int>(std::llround(delta * d_z)),
                            cfg.sizes.p_train};
          t.feasible = t.cell.d_y >= 1 && t.cell.d_y <= d_z && k <= d_z / 2;
          GridPoint g;
          g.emplace_back("delta", delta);
          g.emplace_back("d_z", d_z);
          g.emplace_back("k", k);
          g.emplace_back("d_y", t.cell.d_y);
          g.emplace_back("p", static_cast<double>(cfg.sizes.p_train));
          t.grid = g;
          add_for_replicates(t);
        }
    return tasks;
  }
  if (cfg.experiment == "vary-latents") {
    for (int d_z : cfg.d_z_list) {
      const int k = cfg.k_list.front();
      Task t;
      t.cell = CellSpec{d_z, k, cs_bound_dim(k, d_z), cfg.sizes.p_train};
      t.grid = cell_grid("", 0, t.cell);
      add_for_replicates(t);
    }
    return tasks;
  }
  if (cfg.experiment == "vary-samples") {
    const int d_z = cfg.d_z_list.front();
    const int k = cfg.k_list.front();
    const int d_y = cs_bound_dim(k, d_z);
    for (long p : cfg.p_list) {
      Task t;
      t.cell = CellSpec{d_z, k, d_y, p};
      GridPoint g;
      g.emplace_back("p", static_cast<double>(p));
      g.emplace_back("d_z", d_z);
      g.emplace_back("k", k);
      g.emplace_back("d_y", d_y);
      t.grid = g;
      add_for_replicates(t);
    }
    return tasks;
  }
  if (cfg.experiment == "vary-sparsity") {
    const int d_z = cfg.d_z_list.front();
    for (int k : cfg.k_list) {
      Task t;
      t.cell = CellSpec{d_z, k, cs_bound_dim(k, d_z), cfg.sizes.p_train};
      GridPoint g;
      g.emplace_back("k", k);
      g.emplace_back("d_z", d_z);
      g.emplace_back("d_y", t.cell.d_y);
      g.emplace_back("p", static_cast<double>(cfg.sizes.p_train));
      t.grid = g;
      add_for_replicates(t);
    }
    return tasks;
  }
  // Kind-parameterised experiments: one task per (d_z cell, replicate).
  for (int d_z : cfg.d_z_list) {
    const int k = cfg.k_list.front();
    Task t;
    t.cell = CellSpec{d_z, k, cs_bound_dim(k, d_z), cfg.sizes.p_train};
    t.grid = cell_grid("", 0, t.cell);
    add_for_replicates(t);
  }
  return tasks;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
  const bool sweep = cfg.experiment == "phase" || cfg.experiment == "vary-latents" ||
                     cfg.experiment == "vary-samples" ||
                     cfg.experiment == "vary-sparsity";
  if (sweep && cfg.methods.empty())
    throw std::invalid_argument("config: methods must be non-empty");
  if (!sweep && cfg.sae_kinds.empty() && cfg.experiment != "theory-grid")
    throw std::invalid_argument("config: sae_kinds must be non-empty");
  if (cfg.experiment == "phase" &&
      (cfg.d_z_list.empty() || cfg.k_list.empty() || cfg.delta_list.empty()))
    throw std::invalid_argument("config: phase needs d_z, k and delta grids");
  if (cfg.experiment == "vary-latents" && (cfg.d_z_list.empty() || cfg.k_list.empty()))
    throw std::invalid_argument("config: vary-latents needs d_z and k grids");
  if (cfg.experiment == "vary-samples" && cfg.p_list.empty())
    throw std::invalid_argument("config: vary-samples needs a p grid");
  if (cfg.experiment == "vary-sparsity" && cfg.k_list.empty())
    throw std::invalid_argument("config: vary-sparsity needs a k grid");
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::FistaOracle: return "fista_oracle";
    case Method::DlFista: return "dl_fista";
    case Method::SaeRelu: return "sae_relu";
    case Method::SaeJumpRelu: return "sae_jumprelu";
    case Method::SaeTopK: return "sae_topk";
    case Method::SaeMp: return "sae_mp";
    case Method::FrozenFista: return "frozen_fista";
    case Method::Refined: return "refined";
    case Method::LinearProbe: return "linear_probe";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::FistaOracle, Method::DlFista, Method::SaeRelu,
                   Method::SaeJumpRelu, Method::SaeTopK, Method::SaeMp,
                   Method::FrozenFista, Method::Refined, Method::LinearProbe})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown method: " + name);
}

std::uint64_t record_seed(const ExperimentConfig& cfg, std::uint64_t replicate,
                          const std::vector<std::pair<std::string, double>>& grid,
                          const std::string& method, const std::string& kind) {
  std::uint64_t s = seed_combine(cfg.master_seed, cfg.experiment);
  s = seed_combine(s, replicate);
  s = seed_combine(s, grid_to_string(grid));
  s = seed_combine(s, method);
  s = seed_combine(s, kind);
  return s;
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::vector<Task> tasks = build_tasks(cfg);
  if (tasks.empty()) throw std::invalid_argument("config: empty experiment grid");

  auto dispatch = [&cfg](const Task& task) {
    if (cfg.experiment == "frozen") return run_frozen_task(cfg, task);
    if (cfg.experiment == "warmstart-decoder")
      return run_warmstart_decoder_task(cfg, task);
    if (cfg.experiment == "warmstart-encoder")
      return run_warmstart_encoder_task(cfg, task);
    if (cfg.experiment == "lambda-sweep") return run_lambda_task(cfg, task);
    if (cfg.experiment == "support") return run_support_task(cfg, task);
    return run_sweep_task(cfg, task);
  };
  return parallel_tasks(cfg, tasks.size(),
                        [&](size_t i) { return dispatch(tasks[i]); });
}

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  if (experiment == "phase") {
    cfg.d_z_list = {50, 100, 200};
    cfg.k_list = {3, 5, 10};
    cfg.delta_list = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.6, 0.8, 1.0};
    cfg.methods = {Method::FistaOracle, Method::SaeRelu, Method::SaeTopK};
  } else if (experiment == "vary-latents") {
    cfg.d_z_list = {50, 100, 500, 1000};
    cfg.k_list = {10};
    cfg.methods = {Method::FistaOracle, Method::DlFista, Method::SaeRelu,
                   Method::SaeJumpRelu, Method::SaeTopK, Method::SaeMp,
                   Method::LinearProbe};
  } else if (experiment == "vary-samples") {
    cfg.d_z_list = {100};
    cfg.k_list = {10};
    cfg.p_list = {100, 1000, 10000};
    cfg.methods = {Method::FistaOracle, Method::DlFista, Method::SaeRelu,
                   Method::SaeJumpRelu, Method::SaeTopK, Method::SaeMp,
                   Method::LinearProbe};
  } else if (experiment == "vary-sparsity") {
    cfg.d_z_list = {1000};
    cfg.k_list = {3, 5, 10, 20};
    cfg.methods = {Method::FistaOracle, Method::SaeRelu, Method::SaeTopK,
                   Method::LinearProbe};
  } else if (experiment == "frozen") {
    cfg.d_z_list = {100};
    cfg.k_list = {10};
    cfg.methods = {Method::FistaOracle, Method::DlFista, Method::FrozenFista,
                   Method::Refined};
  } else if (experiment == "warmstart-decoder") {
    cfg.d_z_list = {100};
    cfg.k_list = {10};
    cfg.round_checkpoints = {0, 1, 2, 3, 5, 8, 12, 20, 30, 40, 50};
    cfg.methods = {Method::DlFista};
    cfg.seeds = {0, 1, 2};
  } else if (experiment == "warmstart-encoder") {
    cfg.d_z_list = {100};
    cfg.k_list = {10};
    cfg.iter_budgets = {1, 2, 5, 10, 20, 50, 100};
    cfg.methods = {Method::FrozenFista, Method::Refined};
    cfg.seeds = {0, 1, 2};
  } else if (experiment == "lambda-sweep") {
    cfg.d_z_list = {100};
    cfg.k_list = {10};
    cfg.lambda_list = {0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 0.5, 1.0, 2.0};
    cfg.methods = {Method::FistaOracle, Method::FrozenFista};
    cfg.seeds = {0, 1, 2};
  } else if (experiment == "support") {
    cfg.d_z_list = {100, 1000};
    cfg.k_list = {10};
    cfg.methods = {Method::FistaOracle, Method::FrozenFista};
    cfg.seeds = {0, 1, 2};
  } else if (experiment == "theory-grid") {
    // no grids; theory config fields apply
  } else if (experiment == "gen-data") {
    cfg.d_z_list = {100};
    cfg.k_list = {10};
  } else {
    throw std::invalid_argument("unknown experiment: " + experiment);
  }
  return cfg;
}

void apply_large(ExperimentConfig& cfg) {
  cfg.large = true;
  if (cfg.experiment == "vary-latents") {
    cfg.d_z_list.push_back(5000);
    cfg.d_z_list.push_back(10000);
  } else if (cfg.experiment == "vary-samples") {
    cfg.p_list.push_back(100000);
  } else if (cfg.experiment == "support" || cfg.experiment == "frozen" ||
             cfg.experiment == "lambda-sweep") {
    cfg.d_z_list.push_back(5000);
  }
}

namespace {

template <typename T, typename Conv>
std::vector<T> json_list(const nlohmann::json& j, Conv conv) {
  std::vector<T> out;
  for (const auto& v : j) out.push_back(conv(v));
  return out;
}

}  // namespace

void merge_config_json(ExperimentConfig& cfg, const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  try {
    if (j.contains("schema_version") && j["schema_version"].get<int>() != 1)
      throw std::invalid_argument("config: unsupported schema_version");
    if (j.contains("experiment")) cfg.experiment = j["experiment"].get<std::string>();
    if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("seeds"))
      cfg.seeds = json_list<std::uint64_t>(
          j["seeds"], [](const nlohmann::json& v) { return v.get<std::uint64_t>(); });
    if (j.contains("methods"))
      cfg.methods = json_list<Method>(j["methods"], [](const nlohmann::json& v) {
        return method_from_string(v.get<std::string>());
      });
    if (j.contains("sae_kinds"))
      cfg.sae_kinds = json_list<SaeKind>(j["sae_kinds"], [](const nlohmann::json& v) {
        return sae_kind_from_string(v.get<std::string>());
      });
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("format")) cfg.format = j["format"].get<std::string>();
    if (j.contains("sizes")) {
      const auto& s = j["sizes"];
      if (s.contains("p_train")) cfg.sizes.p_train = s["p_train"].get<long>();
      if (s.contains("p_probe")) cfg.sizes.p_probe = s["p_probe"].get<long>();
      if (s.contains("p_id_test")) cfg.sizes.p_id_test = s["p_id_test"].get<long>();
      if (s.contains("p_ood_test")) cfg.sizes.p_ood_test = s["p_ood_test"].get<long>();
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      if (g.contains("d_z"))
        cfg.d_z_list = json_list<int>(g["d_z"], [](const nlohmann::json& v) { return v.get<int>(); });
      if (g.contains("k"))
        cfg.k_list = json_list<int>(g["k"], [](const nlohmann::json& v) { return v.get<int>(); });
      if (g.contains("delta"))
        cfg.delta_list = json_list<double>(g["delta"], [](const nlohmann::json& v) { return v.get<double>(); });
      if (g.contains("lambda"))
        cfg.lambda_list = json_list<double>(g["lambda"], [](const nlohmann::json& v) { return v.get<double>(); });
      if (g.contains("p"))
        cfg.p_list = json_list<long>(g["p"], [](const nlohmann::json& v) { return v.get<long>(); });
      if (g.contains("rounds"))
        cfg.round_checkpoints = json_list<int>(g["rounds"], [](const nlohmann::json& v) { return v.get<int>(); });
      if (g.contains("iters"))
        cfg.iter_budgets = json_list<int>(g["iters"], [](const nlohmann::json& v) { return v.get<int>(); });
    }
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      if (s.contains("lambda")) cfg.fista_lambda = s["lambda"].get<double>();
      if (s.contains("max_iters")) cfg.fista_iters = s["max_iters"].get<int>();
      if (s.contains("tol")) cfg.fista_tol = s["tol"].get<double>();
    }
    if (j.contains("dl")) {
      const auto& s = j["dl"];
      if (s.contains("rounds")) cfg.dl_rounds = s["rounds"].get<int>();
      if (s.contains("lambda")) cfg.dl_lambda = s["lambda"].get<double>();
      if (s.contains("inner_tol")) cfg.dl_inner_tol = s["inner_tol"].get<double>();
    }
    if (j.contains("sae")) {
      const auto& s = j["sae"];
      if (s.contains("epochs")) cfg.sae.epochs = s["epochs"].get<int>();
      if (s.contains("batch_size")) cfg.sae.batch_size = s["batch_size"].get<int>();
      if (s.contains("learning_rate")) cfg.sae.learning_rate = s["learning_rate"].get<double>();
      if (s.contains("gamma_reg")) cfg.sae.gamma_reg = s["gamma_reg"].get<double>();
    }
    if (j.contains("probes")) {
      const auto& s = j["probes"];
      if (s.contains("ridge_alpha")) cfg.ridge_alpha = s["ridge_alpha"].get<double>();
      if (s.contains("logistic_l2")) cfg.logistic_l2 = s["logistic_l2"].get<double>();
    }
    if (j.contains("theory")) {
      const auto& s = j["theory"];
      if (s.contains("grid_points")) cfg.theory_grid_points = s["grid_points"].get<int>();
      if (s.contains("mc_samples")) cfg.theory_mc_samples = s["mc_samples"].get<long>();
    }
    if (j.contains("large") && j["large"].get<bool>()) apply_large(cfg);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: bad field: ") + e.what());
  }
}

ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const std::string& experiment_hint) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();

  // The file may change the experiment; resolve defaults for the final name.
  nlohmann::json probe;
  try {
    probe = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  std::string name = experiment_hint;
  if (probe.contains("experiment")) name = probe["experiment"].get<std::string>();
  ExperimentConfig cfg = default_config(name);
  merge_config_json(cfg, ss.str());
  return cfg;
}

}  // namespace sparselab
