#include "denoise/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "denoise/errors.hpp"
#include "denoise/losses.hpp"

namespace denoise {

namespace {

enum StreamTag : std::uint64_t { kInitStream = 1, kPerturbStream = 2, kSamplingStream = 3 };

}  // namespace

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
  if (s1_steps < 1 || s2_steps < 1) bad("stage step counts must be >= 1");
  if (!(w >= 0.0)) bad("w must be >= 0");
  if (!(lr > 0.0)) bad("lr must be > 0");
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) bad("drop_rate must lie in [0, 1)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) bad("alpha must lie in [0, 1]");
  if (k < 1) bad("k must be >= 1");
  if (!(lambda_lo >= 0.0 && lambda_lo <= lambda_hi && lambda_hi <= 1.0)) bad("lambda interval must satisfy 0 <= lo <= hi <= 1");
  if (pool_size < 1) bad("K must be >= 1");
  if (!(beta2 > 0.0 && beta2 < beta1 && beta1 < 1.0)) bad("need 0 < beta2 < beta1 < 1");
  if (!(temp > 0.0)) bad("temp must be > 0");
  if (!std::isfinite(tau_exp)) bad("tau_exp must be finite");
  if (hidden < 1 || layers < 1) bad("hidden and layers must be >= 1");
}

void TrainHistory::write_csv(std::ostream& os) const {
  os << "epoch,L_recon,L_cont,flagged_count,seconds\n";
  const auto old = os.precision(17);
  for (const auto& e : epochs) {
    os << e.epoch << ',' << e.recon << ',' << e.cont << ',' << e.flagged << ',' << e.seconds << '\n';
  }
  os.precision(old);
}

bool TrainHistory::same_trajectory(const TrainHistory& other) const {
  if (epochs.size() != other.epochs.size()) return false;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& a = epochs[i];
    const auto& b = other.epochs[i];
    if (a.epoch != b.epoch || a.recon != b.recon || a.cont != b.cont || a.flagged != b.flagged) return false;
  }
  return true;
}

std::vector<PreparedGraph> prepare_graphs(std::span<const Graph> graphs) {
  std::vector<PreparedGraph> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) {
    Matrix adj = g.adjacency();
    auto prop = ad::Tensor::constant(normalize_adjacency(adj));
    out.push_back({ad::Tensor::constant(g.attrs()), std::move(adj), std::move(prop)});
  }
  return out;
}

GraphEmbeddings embed_graphs(const ModelParams& model, std::span<const PreparedGraph> graphs) {
  const auto frozen = model.frozen();
  GraphEmbeddings out;
  out.graphs.resize(static_cast<Eigen::Index>(graphs.size()), static_cast<Eigen::Index>(model.hidden_dim()));
  out.nodes.reserve(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    auto z = encode(graphs[i].attrs, graphs[i].clean_propagation, frozen.encoder);
    out.graphs.row(static_cast<Eigen::Index>(i)) = readout(z).value();
    out.nodes.push_back(z.value());
  }
  return out;
}

GraphEmbeddings embed_graphs(const ModelParams& model, std::span<const Graph> graphs) {
  const auto prepared = prepare_graphs(graphs);
  return embed_graphs(model, prepared);
}

ContrastTargets make_targets(const Matrix& graph_embeddings, const SamplePools& pools) {
  auto gather = [&](const std::vector<std::size_t>& ids) {
    Matrix m(static_cast<Eigen::Index>(ids.size()), graph_embeddings.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
      m.row(static_cast<Eigen::Index>(r)) = graph_embeddings.row(static_cast<Eigen::Index>(ids[r]));
    }
    return m;
  };
  return {gather(pools.positives), gather(pools.negatives)};
}

double stage1_step(std::span<const PreparedGraph> graphs, std::span<const ad::Tensor> propagations,
                   const ModelParams& model, ad::Adam& optimizer, double tau_exp) {
  if (graphs.empty()) fail(ErrorCode::TooFewGraphs, "stage 1 needs at least one graph");
  const double inv_m = 1.0 / static_cast<double>(graphs.size());
  optimizer.zero_grad();
  double total = 0.0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    auto z = encode(g.attrs, propagations[i], model.encoder);
    auto a_hat = decode_structure(z, model.decoder, propagations[i]);
    auto x_hat = decode_attributes(z, model.decoder, propagations[i]);
    auto recon = ad::add(feature_loss(g.attrs, x_hat).total, structure_loss(g.adjacency, a_hat, tau_exp).total);
    total += recon.item();
    ad::backward(ad::scale(recon, inv_m));
  }
  optimizer.step();
  return total * inv_m;
}

double stage2_step(std::span<const PreparedGraph> graphs, std::span<const ad::Tensor> propagations,
                   const ModelParams& model, const AnchorBank& bank, const ContrastTargets& targets,
                   ad::Adam& optimizer, double w, double lambda, double temp, MixupMode mode) {
  if (graphs.empty()) fail(ErrorCode::TooFewGraphs, "stage 2 needs at least one graph");
  const double inv_m = 1.0 / static_cast<double>(graphs.size());
  const bool update = w > 0.0;
  // Without an update the pass is for logging only; keep it off the tape.
  const auto encoder = update ? model.encoder : model.frozen().encoder;
  if (update) optimizer.zero_grad();
  double total = 0.0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    auto z = encode(graphs[i].attrs, propagations[i], encoder);
    auto fused = mixup_fuse(z, bank, lambda, mode);
    auto cont = contrastive_loss(readout(fused), targets.positives, targets.negatives, temp);
    total += cont.item();
    if (update) ad::backward(ad::scale(cont, -w * inv_m));
  }
  if (update) optimizer.step();
  return total * inv_m;
}

TrainResult train(std::span<const Graph> graphs, const TrainConfig& cfg) {
  cfg.validate();
  if (graphs.empty()) fail(ErrorCode::TooFewGraphs, "training split is empty");

  TrainResult result;
  result.model = init_model({graphs.front().attr_dim(), cfg.hidden, cfg.layers}, derive_seed(cfg.seed, kInitStream));
  if (cfg.epochs == 0) return result;

  const auto prepared = prepare_graphs(graphs);
  Rng perturb_rng = make_rng(cfg.seed, kPerturbStream);
  Rng sample_rng = make_rng(cfg.seed, kSamplingStream);

  ad::Adam recon_opt(result.model.all(), {.lr = cfg.lr});
  ad::Adam contrast_opt(result.model.encoder_params(), {.lr = cfg.lr});

  std::vector<ad::Tensor> propagations(prepared.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      propagations[i] = cfg.drop_rate > 0.0
                            ? ad::Tensor::constant(normalize_adjacency(perturb_edges(graphs[i], cfg.drop_rate, perturb_rng)))
                            : prepared[i].clean_propagation;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t s = 0; s < cfg.s1_steps; ++s) {
      rec.recon = stage1_step(prepared, propagations, result.model, recon_opt, cfg.tau_exp);
    }

    // Discriminator refresh on clean embeddings.
    const auto emb = embed_graphs(result.model, prepared);
    const auto eta = graph_similarity_scores(emb.graphs);
    const auto labels = assign_pseudo_labels(eta, cfg.alpha);
    rec.flagged = labels.flagged();
    const auto normal_ids = labels.normal_indices();
    if (normal_ids.empty()) fail(ErrorCode::NoNormalGraphs, "discriminator flagged every training graph");

    std::vector<NormalGraphNodes> normals;
    Matrix normal_graphs(static_cast<Eigen::Index>(normal_ids.size()), emb.graphs.cols());
    for (std::size_t r = 0; r < normal_ids.size(); ++r) {
      normals.push_back({normal_ids[r], emb.nodes[normal_ids[r]]});
      normal_graphs.row(static_cast<Eigen::Index>(r)) = emb.graphs.row(static_cast<Eigen::Index>(normal_ids[r]));
    }
    const auto scores = node_info_scores(normals, normal_graphs);
    result.bank = select_topk_nodes(scores, normals, cfg.k);
    const auto pools = sample_pools(eta, cfg.beta1, cfg.beta2, cfg.pool_size, sample_rng);
    const auto targets = make_targets(emb.graphs, pools);
    const double lambda = draw_lambda(cfg.lambda_lo, cfg.lambda_hi, sample_rng);

    for (std::size_t s = 0; s < cfg.s2_steps; ++s) {
      rec.cont = stage2_step(prepared, propagations, result.model, result.bank, targets, contrast_opt, cfg.w, lambda,
                             cfg.temp, cfg.mixup);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(rec);
  }
  return result;
}

}  // namespace denoise
