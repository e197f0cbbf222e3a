#include "sparselab/sae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sparselab/csv.hpp"
#include "sparselab/metrics.hpp"
#include "sparselab/rng.hpp"

namespace sparselab {

namespace {

constexpr double kSteBandwidth = 1e-3;  // JumpRelu rectangular kernel width
constexpr double kThetaInit = 1e-3;

struct Forward {
  Matrix Xc;   // d_y x B, bias-subtracted inputs
  Matrix P;    // d_h x B, pre-activations (unused for Mp)
  Matrix H;    // d_h x B, codes
  Matrix mask; // d_h x B, dh/dp for the magnitude path (unused for Mp)
  // Mp bookkeeping, per sample: selected atoms, coefficients, residuals.
  std::vector<std::vector<int>> mp_sel;
  std::vector<std::vector<double>> mp_coef;
  std::vector<Matrix> mp_resid;  // d_y x (steps+1)
};

void topk_column(const Vector& values, int k, std::vector<int>& out) {
  const int d = static_cast<int>(values.size());
  out.resize(static_cast<size_t>(d));
  std::iota(out.begin(), out.end(), 0);
  if (k >= d) return;
  std::partial_sort(out.begin(), out.begin() + k, out.end(), [&](int a, int b) {
    if (values(a) != values(b)) return values(a) > values(b);
    return a < b;  // ties: smallest index wins
  });
  out.resize(static_cast<size_t>(k));
}

Forward forward_pass(const SaeModel& model, const Matrix& X /* d_y x B */) {
  const Eigen::Index B = X.cols();
  const Eigen::Index d_h = model.d_h();
  Forward f;
  f.Xc = X.colwise() - model.b_pre;

  if (model.kind == SaeKind::Mp) {
    f.H = Matrix::Zero(d_h, B);
    f.mp_sel.resize(static_cast<size_t>(B));
    f.mp_coef.resize(static_cast<size_t>(B));
    f.mp_resid.resize(static_cast<size_t>(B));
    for (Eigen::Index b = 0; b < B; ++b) {
      Vector r = f.Xc.col(b);
      const double stop = 1e-12 * std::max(1.0, r.norm());
      Matrix resid(model.d_y(), model.mp_steps + 1);
      resid.col(0) = r;
      auto& sel = f.mp_sel[static_cast<size_t>(b)];
      auto& coef = f.mp_coef[static_cast<size_t>(b)];
      for (int t = 0; t < model.mp_steps; ++t) {
        if (r.norm() <= stop) break;
        Vector c = model.W_dec.transpose() * r;
        int j = 0;
        for (Eigen::Index a = 1; a < d_h; ++a)
          if (c(a) > c(j)) j = static_cast<int>(a);
        if (c(j) == 0.0) break;
        sel.push_back(j);
        coef.push_back(c(j));
        f.H(j, b) += c(j);
        r -= c(j) * model.W_dec.col(j);
        resid.col(static_cast<Eigen::Index>(sel.size())) = r;
      }
      f.mp_resid[static_cast<size_t>(b)] =
          resid.leftCols(static_cast<Eigen::Index>(sel.size()) + 1);
    }
    return f;
  }

  f.P = (model.W_enc * f.Xc).colwise() + model.b_enc;
  switch (model.kind) {
    case SaeKind::Relu:
      f.mask = (f.P.array() > 0.0).cast<double>();
      f.H = f.P.cwiseProduct(f.mask);
      break;
    case SaeKind::JumpRelu: {
      f.mask = ((f.P.colwise() - model.theta).array() > 0.0).cast<double>();
      f.H = f.P.cwiseProduct(f.mask);
      break;
    }
    case SaeKind::TopK: {
      const Matrix relu_mask = (f.P.array() > 0.0).cast<double>();
      const Matrix Hr = f.P.cwiseProduct(relu_mask);
      f.H = Matrix::Zero(d_h, B);
      f.mask = Matrix::Zero(d_h, B);
      std::vector<int> sel;
      for (Eigen::Index b = 0; b < B; ++b) {
        topk_column(Hr.col(b), model.top_k, sel);
        for (int j : sel) {
          f.H(j, b) = Hr(j, b);
          f.mask(j, b) = relu_mask(j, b);
        }
      }
      break;
    }
    case SaeKind::Mp:
      break;  // handled above
  }
  return f;
}

double batch_loss(const SaeModel& model, const Forward& f, const Matrix& X,
                  double gamma) {
  const Matrix Yhat = (model.W_dec * f.H).colwise() + model.b_pre;
  const double recon = (Yhat - X).squaredNorm();
  const double l1 = f.H.cwiseAbs().sum();
  return (recon + gamma * l1) / static_cast<double>(X.cols());
}

SaeGradients backward_pass(const SaeModel& model, const Forward& f,
                           const Matrix& X, double gamma) {
  const Eigen::Index B = X.cols();
  const double inv_b = 1.0 / static_cast<double>(B);
  SaeGradients g;
  g.W_enc = Matrix::Zero(model.W_enc.rows(), model.W_enc.cols());
  g.b_enc = Vector::Zero(model.b_enc.size());
  g.W_dec = Matrix::Zero(model.W_dec.rows(), model.W_dec.cols());
  g.b_pre = Vector::Zero(model.b_pre.size());
  if (model.kind == SaeKind::JumpRelu) g.theta = Vector::Zero(model.theta.size());

  const Matrix Yhat = (model.W_dec * f.H).colwise() + model.b_pre;
  const Matrix E = Yhat - X;
  g.loss = (E.squaredNorm() + gamma * f.H.cwiseAbs().sum()) * inv_b;

  const Matrix GY = 2.0 * inv_b * E;
  g.W_dec = GY * f.H.transpose();
  g.b_pre = GY.rowwise().sum();

  Matrix GH = model.W_dec.transpose() * GY;
  if (gamma > 0.0)
    GH.array() += (gamma * inv_b) * f.H.array().sign();

  if (model.kind == SaeKind::Mp) {
    // Backprop through the unrolled pursuit, selection held fixed.
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& sel = f.mp_sel[static_cast<size_t>(b)];
      const auto& coef = f.mp_coef[static_cast<size_t>(b)];
      const Matrix& resid = f.mp_resid[static_cast<size_t>(b)];
      Vector gr = Vector::Zero(model.d_y());
      for (int t = static_cast<int>(sel.size()) - 1; t >= 0; --t) {
        const int j = sel[static_cast<size_t>(t)];
        const double dc = GH(j, b) - model.W_dec.col(j).dot(gr);
        g.W_dec.col(j) += resid.col(t) * dc - coef[static_cast<size_t>(t)] * gr;
        gr += model.W_dec.col(j) * dc;
      }
      g.b_pre -= gr;  // r_0 = y - b_pre
    }
    return g;
  }

  Matrix GP = GH.cwiseProduct(f.mask);
  if (model.kind == SaeKind::JumpRelu) {
    // d h / d theta_j via rectangular kernel around the gate.
    const Matrix centered = f.P.colwise() - model.theta;
    for (Eigen::Index j = 0; j < f.P.rows(); ++j) {
      double acc = 0.0;
      for (Eigen::Index b = 0; b < B; ++b) {
        if (std::abs(centered(j, b)) <= 0.5 * kSteBandwidth)
          acc += GH(j, b) * (-model.theta(j) / kSteBandwidth);
      }
      g.theta(j) = acc;
    }
  }

  g.W_enc = GP * f.Xc.transpose();
  g.b_enc = GP.rowwise().sum();
  g.b_pre -= (model.W_enc.transpose() * GP).rowwise().sum();
  return g;
}

struct AdamState {
  Matrix mW_enc, vW_enc, mW_dec, vW_dec;
  Vector mb_enc, vb_enc, mb_pre, vb_pre, mtheta, vtheta;
  long step = 0;

  explicit AdamState(const SaeModel& model) {
    mW_enc = Matrix::Zero(model.W_enc.rows(), model.W_enc.cols());
    vW_enc = mW_enc;
    mW_dec = Matrix::Zero(model.W_dec.rows(), model.W_dec.cols());
    vW_dec = mW_dec;
    mb_enc = Vector::Zero(model.b_enc.size());
    vb_enc = mb_enc;
    mb_pre = Vector::Zero(model.b_pre.size());
    vb_pre = mb_pre;
    if (model.theta.size()) {
      mtheta = Vector::Zero(model.theta.size());
      vtheta = mtheta;
    }
  }
};

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, const SaeTrainConfig& cfg,
                 double bc1, double bc2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v.array().matrix() +
      (1.0 - cfg.beta2) * grad.array().square().matrix();
  param.array() -=
      cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}

void apply_step(SaeModel& model, SaeGradients& g, AdamState& adam,
                const SaeTrainConfig& cfg) {
  // Remove the radial component of the decoder gradient so the l1 penalty
  // cannot be absorbed into column scale, then renormalise after the step.
  for (Eigen::Index j = 0; j < model.W_dec.cols(); ++j) {
    const double radial = g.W_dec.col(j).dot(model.W_dec.col(j));
    g.W_dec.col(j) -= radial * model.W_dec.col(j);
  }

  ++adam.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));

  const bool uses_encoder = model.kind != SaeKind::Mp;
  if (uses_encoder) {
    adam_update(model.W_enc, g.W_enc, adam.mW_enc, adam.vW_enc, cfg, bc1, bc2);
    adam_update(model.b_enc, g.b_enc, adam.mb_enc, adam.vb_enc, cfg, bc1, bc2);
  }
  adam_update(model.W_dec, g.W_dec, adam.mW_dec, adam.vW_dec, cfg, bc1, bc2);
  adam_update(model.b_pre, g.b_pre, adam.mb_pre, adam.vb_pre, cfg, bc1, bc2);
  if (model.kind == SaeKind::JumpRelu) {
    adam_update(model.theta, g.theta, adam.mtheta, adam.vtheta, cfg, bc1, bc2);
    model.theta = model.theta.cwiseMax(0.0);  // keeps JumpRelu codes >= 0
  }

  for (Eigen::Index j = 0; j < model.W_dec.cols(); ++j) {
    const double n = model.W_dec.col(j).norm();
    if (n > 1e-12) model.W_dec.col(j) /= n;
  }
}

}  // namespace

std::string to_string(SaeKind kind) {
  switch (kind) {
    case SaeKind::Relu: return "relu";
    case SaeKind::JumpRelu: return "jumprelu";
    case SaeKind::TopK: return "topk";
    case SaeKind::Mp: return "mp";
  }
  return "unknown";
}

SaeKind sae_kind_from_string(const std::string& name) {
  if (name == "relu") return SaeKind::Relu;
  if (name == "jumprelu") return SaeKind::JumpRelu;
  if (name == "topk") return SaeKind::TopK;
  if (name == "mp") return SaeKind::Mp;
  throw std::invalid_argument("unknown SAE kind: " + name);
}

SaeModel init_sae(SaeKind kind, int d_y, int d_h, int k_or_steps,
                  std::uint64_t seed) {
  if (d_y < 1 || d_h < 1) throw std::invalid_argument("init_sae: bad dimensions");
  if ((kind == SaeKind::TopK || kind == SaeKind::Mp) && k_or_steps < 1)
    throw std::invalid_argument("init_sae: TopK/Mp need k >= 1");
  SaeModel model;
  model.kind = kind;
  Rng rng(seed);
  model.W_dec = Matrix(d_y, d_h);
  for (int c = 0; c < d_h; ++c)
    for (int r = 0; r < d_y; ++r) model.W_dec(r, c) = rng.normal();
  for (int c = 0; c < d_h; ++c) model.W_dec.col(c).normalize();
  model.W_enc = model.W_dec.transpose();
  model.b_enc = Vector::Zero(d_h);
  model.b_pre = Vector::Zero(d_y);
  if (kind == SaeKind::JumpRelu) model.theta = Vector::Constant(d_h, kThetaInit);
  if (kind == SaeKind::TopK) model.top_k = k_or_steps;
  if (kind == SaeKind::Mp) model.mp_steps = k_or_steps;
  return model;
}

Matrix encode_batch(const SaeModel& model, const Matrix& Y) {
  if (Y.cols() != model.d_y())
    throw std::invalid_argument("encode: observation dimension mismatch");
  if (model.kind == SaeKind::Mp) {
    const Matrix Xc = Y.rowwise() - model.b_pre.transpose();
    return matching_pursuit_batch(Xc, model.W_dec, model.mp_steps);
  }
  const Forward f = forward_pass(model, Y.transpose());
  return f.H.transpose();
}

SparseCode encode(const SaeModel& model, const Vector& y) {
  const Matrix H = encode_batch(model, y.transpose());
  SparseCode code;
  code.values = H.row(0).transpose();
  for (int j = 0; j < code.values.size(); ++j)
    if (std::abs(code.values(j)) > kSupportEps) code.support.push_back(j);
  code.objective = 0.5 * (y - decode(model, code.values)).squaredNorm();
  code.iters_run = model.kind == SaeKind::Mp ? model.mp_steps : 0;
  return code;
}

Vector decode(const SaeModel& model, const Vector& h) {
  return model.W_dec * h + model.b_pre;
}

Matrix decode_batch(const SaeModel& model, const Matrix& H) {
  return (H * model.W_dec.transpose()).rowwise() + model.b_pre.transpose();
}

double sae_loss(const SaeModel& model, const Matrix& Y_batch, double gamma) {
  const Matrix X = Y_batch.transpose();
  const Forward f = forward_pass(model, X);
  return batch_loss(model, f, X, gamma);
}

SaeGradients sae_gradients(const SaeModel& model, const Matrix& Y_batch,
                           double gamma) {
  const Matrix X = Y_batch.transpose();
  const Forward f = forward_pass(model, X);
  return backward_pass(model, f, X, gamma);
}

SaeTrainResult train_sae(const Matrix& Y, SaeKind kind, int k_or_steps, int d_h,
                         const SaeTrainConfig& cfg, const Matrix* truth) {
  if (Y.rows() < 1) throw std::invalid_argument("train_sae: empty data");
  if (cfg.epochs < 1) throw std::invalid_argument("train_sae: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train_sae: batch_size must be >= 1");

  const long p = Y.rows();
  const int d_y = static_cast<int>(Y.cols());
  const double gamma =
      (kind == SaeKind::Relu || kind == SaeKind::JumpRelu) ? cfg.gamma_reg : 0.0;

  SaeTrainResult out;
  out.model = init_sae(kind, d_y, d_h, k_or_steps, cfg.seed);
  AdamState adam(out.model);
  Rng rng(seed_combine(cfg.seed, "sae_batches"));

  std::vector<long> order(static_cast<size_t>(p));
  std::iota(order.begin(), order.end(), 0L);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates shuffle on the deterministic stream.
    for (long i = p - 1; i > 0; --i) {
      const long j = rng.uniform_int(static_cast<int>(i + 1));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }

    double epoch_loss = 0.0;
    for (long start = 0; start < p; start += cfg.batch_size) {
      const long stop = std::min<long>(start + cfg.batch_size, p);
      const Eigen::Index B = stop - start;
      Matrix X(d_y, B);
      for (Eigen::Index b = 0; b < B; ++b)
        X.col(b) = Y.row(order[static_cast<size_t>(start + b)]).transpose();

      const Forward f = forward_pass(out.model, X);
      SaeGradients g = backward_pass(out.model, f, X, gamma);
      if (!std::isfinite(g.loss))
        throw numeric_error("train_sae: loss diverged (kind=" + to_string(kind) +
                            ", epoch=" + std::to_string(epoch) + ")");
      epoch_loss += g.loss * static_cast<double>(B);
      apply_step(out.model, g, adam, cfg);
    }

    EpochStat stat;
    stat.epoch = epoch;
    stat.loss = epoch_loss / static_cast<double>(p);
    stat.mean_cosine = truth ? dict_diagnostics(out.model.W_dec, *truth).mean_cosine
                             : std::numeric_limits<double>::quiet_NaN();
    out.trace.push_back(stat);
  }
  return out;
}

void write_sae_trace_csv(const std::filesystem::path& path,
                         const std::vector<EpochStat>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "epoch,loss,mean_cosine\n";
  for (const auto& e : trace)
    out << e.epoch << ',' << fmt_g17(e.loss) << ',' << fmt_g17(e.mean_cosine) << '\n';
}

void write_sae_checkpoint(const std::filesystem::path& path, const SaeModel& model,
                          const SaeTrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  nlohmann::json header{{"kind", to_string(model.kind)},
                        {"d_y", model.d_y()},
                        {"d_h", model.d_h()},
                        {"top_k", model.top_k},
                        {"mp_steps", model.mp_steps},
                        {"epochs", cfg.epochs},
                        {"batch_size", cfg.batch_size},
                        {"learning_rate", cfg.learning_rate},
                        {"gamma_reg", cfg.gamma_reg},
                        {"seed", cfg.seed}};
  out << header.dump() << '\n';
  auto block = [&out](const char* name, const Matrix& m) {
    out << "block," << name << ',' << m.rows() << ',' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) out << ',';
        out << fmt_g17(m(r, c));
      }
      out << '\n';
    }
  };
  block("W_enc", model.W_enc);
  block("b_enc", model.b_enc.transpose());
  block("W_dec", model.W_dec);
  block("b_pre", model.b_pre.transpose());
  if (model.theta.size()) block("theta", model.theta.transpose());
}

SaeModel read_sae_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty checkpoint");
  const nlohmann::json header = nlohmann::json::parse(line);

  SaeModel model;
  model.kind = sae_kind_from_string(header.at("kind").get<std::string>());
  model.top_k = header.at("top_k").get<int>();
  model.mp_steps = header.at("mp_steps").get<int>();

  auto read_block = [&in](const std::string& expect) -> Matrix {
    std::string head;
    if (!std::getline(in, head)) throw std::runtime_error("truncated checkpoint");
    const auto cells = split_csv_line(head);
    if (cells.size() != 4 || cells[0] != "block" || cells[1] != expect)
      throw std::runtime_error("bad checkpoint block: " + head);
    const Eigen::Index rows = std::stol(cells[2]);
    const Eigen::Index cols = std::stol(cells[3]);
    Matrix m(rows, cols);
    std::string row_line;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!std::getline(in, row_line)) throw std::runtime_error("truncated block");
      const auto vals = split_csv_line(row_line);
      if (static_cast<Eigen::Index>(vals.size()) != cols)
        throw std::runtime_error("bad block width");
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = std::stod(vals[static_cast<size_t>(c)]);
    }
    return m;
  };

  model.W_enc = read_block("W_enc");
  model.b_enc = read_block("b_enc").row(0).transpose();
  model.W_dec = read_block("W_dec");
  model.b_pre = read_block("b_pre").row(0).transpose();
  if (model.kind == SaeKind::JumpRelu) model.theta = read_block("theta").row(0).transpose();
  return model;
}

}  // namespace sparselab
