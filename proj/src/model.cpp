#include "dergcn/model.hpp"

#include <algorithm>
#include <cmath>

#include "dergcn/errors.hpp"

namespace dergcn {

Variant variant_from_string(const std::string& name) {
  if (name == "full") return Variant::kFull;
  if (name == "add-fusion") return Variant::kAddFusion;
  if (name == "concat-fusion") return Variant::kConcatFusion;
  if (name == "no-context") return Variant::kNoContext;
  if (name == "uni-gru") return Variant::kUniGru;
  if (name == "ce-only") return Variant::kCeOnly;
  if (name == "no-smgae") return Variant::kNoSmgae;
  if (name == "no-mit") return Variant::kNoMit;
  throw UnknownVariant("unknown variant: " + name);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kAddFusion: return "add-fusion";
    case Variant::kConcatFusion: return "concat-fusion";
    case Variant::kNoContext: return "no-context";
    case Variant::kUniGru: return "uni-gru";
    case Variant::kCeOnly: return "ce-only";
    case Variant::kNoSmgae: return "no-smgae";
    case Variant::kNoMit: return "no-mit";
  }
  throw UnknownVariant("unknown variant enum");
}

void ModelConfig::validate() const {
  if (dim_t < 1 || dim_a < 1 || dim_v < 1 || num_classes < 2) {
    throw ConfigInvalid("model config: dataset dims not set");
  }
  if (gru_hidden == 0 || rgcn_dim == 0 || rgcn_layers == 0 || qk_dim == 0 ||
      edge_dim == 0 || edge_score_hidden == 0 || conv_width == 0) {
    throw ConfigInvalid("model config: zero-sized component");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigInvalid("model config: dropout must be in [0,1)");
  }
  if (mask_node_ratio <= 0.0 || mask_node_ratio >= 1.0 ||
      mask_edge_ratio <= 0.0 || mask_edge_ratio >= 1.0) {
    throw ConfigInvalid("model config: mask ratios must be in (0,1)");
  }
  if (smgae_lambda_reg < 0.0) {
    throw ConfigInvalid("model config: smgae_lambda_reg must be >= 0");
  }
}

DerGcnModel::DerGcnModel(const ModelConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg) {
  cfg_.validate();
  Rng rng(init_seed);
  std::size_t h = cfg_.gru_hidden;
  std::size_t psi_dim = 2 * h;
  std::size_t node_dim = cfg_.node_dim();

  switch (cfg_.variant) {
    case Variant::kUniGru:
      uni_t_ = GruParams::init(store_, "enc.t", cfg_.dim_t, psi_dim, rng);
      uni_a_ = GruParams::init(store_, "enc.a", cfg_.dim_a, psi_dim, rng);
      uni_v_ = GruParams::init(store_, "enc.v", cfg_.dim_v, psi_dim, rng);
      break;
    case Variant::kNoContext:
      lin_W_t_ = store_.create("enc.t.W", {psi_dim, cfg_.dim_t}, cfg_.dim_t, rng);
      lin_b_t_ = store_.create_zeros("enc.t.b", {psi_dim});
      lin_W_a_ = store_.create("enc.a.W", {psi_dim, cfg_.dim_a}, cfg_.dim_a, rng);
      lin_b_a_ = store_.create_zeros("enc.a.b", {psi_dim});
      lin_W_v_ = store_.create("enc.v.W", {psi_dim, cfg_.dim_v}, cfg_.dim_v, rng);
      lin_b_v_ = store_.create_zeros("enc.v.b", {psi_dim});
      break;
    default:
      gru_t_ = BiGruParams::init(store_, "enc.t", cfg_.dim_t, h, rng);
      gru_a_ = BiGruParams::init(store_, "enc.a", cfg_.dim_a, h, rng);
      gru_v_ = BiGruParams::init(store_, "enc.v", cfg_.dim_v, h, rng);
      break;
  }

  if (cfg_.variant != Variant::kAddFusion &&
      cfg_.variant != Variant::kConcatFusion) {
    fusion_ = FusionParams::init(store_, "fusion", psi_dim, rng);
  }

  edge_params_ = SpeakerEdgeParams::init(store_, "edge", node_dim,
                                         cfg_.edge_score_hidden, rng);
  rgcn_ = RgcnParams::init(store_, "rgcn", node_dim, cfg_.rgcn_dim,
                           cfg_.num_relations(), cfg_.rgcn_layers, rng);
  gat_ = GatDecoderParams::init(store_, "gat", cfg_.rgcn_dim, node_dim, rng);
  gat_.leaky_slope = cfg_.gat_leaky_slope;
  mit_ = MitParams::init(store_, "mit", cfg_.rgcn_dim, cfg_.qk_dim,
                         cfg_.conv_width, rng);
  mit_.scale_sqrt = cfg_.mit_scale_sqrt;
  clf_ = ClassifierParams::init(store_, "clf", cfg_.rgcn_dim,
                                cfg_.num_classes, rng);
  edge_head_ = store_.create("smgae.edge_head", {cfg_.edge_dim, node_dim},
                             node_dim, rng);
  // mask tokens start at zero
  node_mask_token_ = store_.create_zeros("smgae.node_mask_token", {node_dim});
  edge_mask_token_ = store_.create_zeros("smgae.edge_mask_token", {1});
}

std::vector<std::string> DerGcnModel::relation_catalog() const {
  std::vector<std::string> rel = {"speaker-same", "speaker-inter"};
  for (std::size_t t = 0; t < cfg_.num_event_types; ++t) {
    rel.push_back("event-type-" + std::to_string(t));
  }
  return rel;
}

void DerGcnModel::load_params(const ParamStore& loaded) {
  if (loaded.size() != store_.size()) {
    throw DimensionMismatch("checkpoint parameter count differs from model");
  }
  for (const auto& [name, t] : store_.items()) {
    Tensor src = loaded.get(name);
    if (src.shape() != t.shape()) {
      throw DimensionMismatch("checkpoint shape differs for " + name);
    }
    Tensor dst = t;
    dst.mutable_data() = src.data();
  }
}

std::vector<Tensor> DerGcnModel::encode_modality(const std::vector<Tensor>& xs,
                                                 int which) {
  switch (cfg_.variant) {
    case Variant::kUniGru: {
      const GruParams& p = which == 0 ? uni_t_ : which == 1 ? uni_a_ : uni_v_;
      std::vector<Tensor> rows(xs.size());
      Tensor state = Tensor::zeros({p.hidden_dim()});
      for (std::size_t t = 0; t < xs.size(); ++t) {
        state = gru_cell(xs[t], state, p);
        rows[t] = state;
      }
      return rows;
    }
    case Variant::kNoContext: {
      const Tensor& W = which == 0 ? lin_W_t_ : which == 1 ? lin_W_a_ : lin_W_v_;
      const Tensor& b = which == 0 ? lin_b_t_ : which == 1 ? lin_b_a_ : lin_b_v_;
      std::vector<Tensor> rows(xs.size());
      for (std::size_t t = 0; t < xs.size(); ++t) {
        rows[t] = add(matvec(W, xs[t]), b);
      }
      return rows;
    }
    default: {
      const BiGruParams& p = which == 0 ? gru_t_ : which == 1 ? gru_a_ : gru_v_;
      Tensor hidden = bigru_encode(xs, p);
      std::vector<Tensor> rows(xs.size());
      for (std::size_t t = 0; t < xs.size(); ++t) rows[t] = row(hidden, t);
      return rows;
    }
  }
}

std::vector<Tensor> DerGcnModel::fuse(const Dialogue& d) {
  std::size_t T = d.utterances.size();
  std::vector<Tensor> xs_t(T), xs_a(T), xs_v(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Utterance& u = d.utterances[t];
    xs_t[t] = Tensor::from_data(u.feat_t, {cfg_.dim_t});
    xs_a[t] = Tensor::from_data(u.feat_a, {cfg_.dim_a});
    xs_v[t] = Tensor::from_data(u.feat_v, {cfg_.dim_v});
  }
  std::vector<Tensor> psi_t = encode_modality(xs_t, 0);
  std::vector<Tensor> psi_a = encode_modality(xs_a, 1);
  std::vector<Tensor> psi_v = encode_modality(xs_v, 2);

  // the table-4 baselines swap out the whole cross-modal block
  if (cfg_.variant == Variant::kAddFusion) {
    std::vector<Tensor> fused(T);
    for (std::size_t t = 0; t < T; ++t) {
      fused[t] = add(add(psi_t[t], psi_a[t]), psi_v[t]);
    }
    return fused;
  }
  if (cfg_.variant == Variant::kConcatFusion) {
    std::vector<Tensor> fused(T);
    for (std::size_t t = 0; t < T; ++t) {
      fused[t] = concat({psi_t[t], psi_a[t], psi_v[t]});
    }
    return fused;
  }

  std::size_t psi_dim = 2 * cfg_.gru_hidden;
  Tensor H_t = normalize_hidden(stack_rows(psi_t), psi_dim);
  Tensor H_a = normalize_hidden(stack_rows(psi_a), psi_dim);
  Tensor H_v = normalize_hidden(stack_rows(psi_v), psi_dim);
  return fuse_utterances(H_t, H_a, H_v, fusion_, cfg_.fusion_window,
                         cfg_.fusion_softmax);
}

MultiRelGraph DerGcnModel::build_graph(const Dialogue& d) {
  Dialogue windowed = d;
  if (cfg_.context_window > 0 &&
      windowed.utterances.size() > cfg_.context_window) {
    windowed.utterances.erase(
        windowed.utterances.begin(),
        windowed.utterances.end() - static_cast<std::ptrdiff_t>(
                                        cfg_.context_window));
  }
  std::vector<Tensor> fused = fuse(windowed);
  return assemble_graph(windowed, fused, edge_params_, cfg_.num_event_types,
                        cfg_.context_window);
}

DerGcnModel::Output DerGcnModel::forward(const Dialogue& d, bool training,
                                         bool with_smgae, Rng& rng) {
  Dialogue windowed = d;
  if (cfg_.context_window > 0 &&
      windowed.utterances.size() > cfg_.context_window) {
    windowed.utterances.erase(
        windowed.utterances.begin(),
        windowed.utterances.end() - static_cast<std::ptrdiff_t>(
                                        cfg_.context_window));
  }
  std::size_t T = windowed.utterances.size();

  std::vector<Tensor> fused = fuse(windowed);
  MultiRelGraph graph = assemble_graph(windowed, fused, edge_params_,
                                       cfg_.num_event_types,
                                       cfg_.context_window);

  Output out;
  out.labels.reserve(T);
  for (const Utterance& u : windowed.utterances) out.labels.push_back(u.label);
  out.recon_loss = Tensor::scalar(0.0);
  out.edge_loss = Tensor::scalar(0.0);

  // classifier path runs on the unmasked graph
  RelationEmbeddings I_rel(cfg_.num_relations());
  for (std::size_t r = 0; r < cfg_.num_relations(); ++r) {
    I_rel[r] = rgcn_encode_relation(graph, rgcn_, r);
  }
  std::vector<Tensor> E(T);
  if (cfg_.variant == Variant::kNoMit) {
    double inv = 1.0 / static_cast<double>(cfg_.num_relations());
    for (std::size_t i = 0; i < T; ++i) {
      Tensor acc = I_rel[0][i];
      for (std::size_t r = 1; r < cfg_.num_relations(); ++r) {
        acc = add(acc, I_rel[r][i]);
      }
      E[i] = scalar_mul(acc, inv);
    }
  } else {
    E = mit_forward(I_rel, mit_);
  }
  out.embeddings = E;

  bool smgae_active = with_smgae && cfg_.variant != Variant::kNoSmgae &&
                      cfg_.variant != Variant::kCeOnly;
  if (smgae_active) {
    std::uint64_t mask_seed = rng.next_u64();
    std::uint64_t neg_seed = rng.next_u64();
    MaskPlan plan = sample_masks(graph, cfg_.mask_node_ratio,
                                 cfg_.mask_edge_ratio, mask_seed);
    MultiRelGraph view =
        apply_masks(graph, plan, node_mask_token_, edge_mask_token_);
    std::vector<Tensor> I = rgcn_encode(view, rgcn_);
    std::vector<Tensor> Z = gat_decode(view, I, gat_);
    out.recon_loss = node_recon_loss(graph.nodes, Z, plan.masked_nodes,
                                     cfg_.smgae_lambda_reg, {gat_.W_dec});

    for (std::size_t i : plan.masked_nodes) {
      double na = 0.0, nb = 0.0, ab = 0.0;
      for (std::size_t c = 0; c < Z[i].numel(); ++c) {
        double a = graph.nodes[i].data()[c], b = Z[i].data()[c];
        na += a * a;
        nb += b * b;
        ab += a * b;
      }
      if (na > 0.0 && nb > 0.0) {
        out.masked_cosine_sum += ab / std::sqrt(na * nb);
      }
      ++out.masked_count;
    }

    if (!plan.masked_edges.empty()) {
      std::vector<std::pair<std::size_t, std::size_t>> positives;
      std::vector<std::size_t> rels;
      for (std::size_t e : plan.masked_edges) {
        positives.push_back({graph.edges[e].src, graph.edges[e].dst});
        rels.push_back(graph.edges[e].relation);
      }
      auto negatives = sample_edge_negatives(graph, positives, rels,
                                             cfg_.edge_negatives, neg_seed);
      std::vector<Tensor> D(T);
      for (std::size_t i = 0; i < T; ++i) D[i] = matvec(edge_head_, Z[i]);
      out.edge_loss = edge_contrastive_loss(D, positives, negatives);
    }
  }

  out.probabilities.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    Tensor x = E[i];
    if (training && cfg_.dropout > 0.0) {
      double keep = 1.0 - cfg_.dropout;
      std::vector<double> mask(x.numel());
      for (double& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
      x = hadamard(x, Tensor::from_data(std::move(mask), x.shape()));
    }
    out.probabilities[i] = classify(x, clf_);
  }
  return out;
}

}  // namespace dergcn
