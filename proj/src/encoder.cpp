#include "fcrl/encoder.hpp"

#include "fcrl/errors.hpp"

namespace fcrl {

std::string to_string(CriticKind k) {
  switch (k) {
    case CriticKind::Dot: return "dot";
    case CriticKind::Linear: return "linear";
    case CriticKind::Nonlinear: return "nonlinear";
    case CriticKind::NonlinearDeep1: return "nonlinear_deep1";
    case CriticKind::NonlinearDeep2: return "nonlinear_deep2";
  }
  throw InternalError("to_string: bad CriticKind");
}

CriticKind critic_from_string(const std::string& s) {
  if (s == "dot") return CriticKind::Dot;
  if (s == "linear") return CriticKind::Linear;
  if (s == "nonlinear") return CriticKind::Nonlinear;
  if (s == "nonlinear_deep1") return CriticKind::NonlinearDeep1;
  if (s == "nonlinear_deep2") return CriticKind::NonlinearDeep2;
  throw ConfigError("unknown critic kind: '" + s + "'");
}

int critic_hidden_layers(CriticKind k) {
  switch (k) {
    case CriticKind::Dot: return -1;
    case CriticKind::Linear: return 0;
    case CriticKind::Nonlinear: return 1;
    case CriticKind::NonlinearDeep1: return 2;
    case CriticKind::NonlinearDeep2: return 3;
  }
  throw InternalError("critic_hidden_layers: bad CriticKind");
}

EncoderParams make_encoder(int x_dim, int y_dim, int d_repr, CriticKind critic,
                           Rng& rng, bool critic_batch_norm) {
  if (d_repr < 1) throw ConfigError("make_encoder: d_repr must be >= 1");
  EncoderParams p;
  p.d_repr = d_repr;
  p.critic = critic;
  p.h = make_mlp({x_dim + y_dim, d_repr, d_repr, d_repr}, rng);
  int hidden = critic_hidden_layers(critic);
  if (hidden >= 0) {
    std::vector<int> dims(static_cast<std::size_t>(hidden) + 2, d_repr);
    p.rho = make_mlp(dims, rng, critic_batch_norm && hidden > 0);
  }
  return p;
}

Representation encode_base(const EncoderParams& params, const ContextSet& context) {
  context.validate();
  const int n = context.size();
  const int in = params.h.in_dim();
  if (context.x_dim + context.y_dim != in) {
    throw ConfigError("encode_base: context pair dim " +
                      std::to_string(context.x_dim + context.y_dim) +
                      " does not match encoder input dim " + std::to_string(in));
  }
  Matrix pts(n, in);
  for (int i = 0; i < n; ++i) {
    double* r = pts.row(i);
    std::copy(context.x_at(i), context.x_at(i) + context.x_dim, r);
    std::copy(context.y_at(i), context.y_at(i) + context.y_dim, r + context.x_dim);
  }
  Matrix h = mlp_forward(params.h, pts);
  Representation rep;
  rep.kind = Representation::Kind::Base;
  rep.values.assign(params.d_repr, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* hr = h.row(i);
    for (int c = 0; c < params.d_repr; ++c) rep.values[c] += hr[c];
  }
  for (double& v : rep.values) v /= n;
  return rep;
}

Representation project(const EncoderParams& params, const Representation& base) {
  if (base.kind != Representation::Kind::Base) {
    throw InternalError("project: input representation is already projected");
  }
  Representation out;
  out.kind = Representation::Kind::Projected;
  if (params.critic == CriticKind::Dot) {
    out.values = base.values;
    return out;
  }
  Matrix in(1, static_cast<int>(base.values.size()));
  std::copy(base.values.begin(), base.values.end(), in.data());
  Matrix z = mlp_forward(*params.rho, in, nullptr, /*training=*/false);
  out.values.assign(z.data(), z.data() + z.cols());
  return out;
}

Representation encode(const EncoderParams& params, const ContextSet& context) {
  return project(params, encode_base(params, context));
}

void GroupedPoints::add_group(const ContextSet& c) {
  c.validate();
  const int pair_dim = c.x_dim + c.y_dim;
  if (offsets.empty()) {
    offsets.push_back(0);
    pair_dim_ = pair_dim;
  }
  if (pair_dim_ != pair_dim) {
    throw InternalError("GroupedPoints: inconsistent pair dimension");
  }
  const int n = c.size();
  for (int i = 0; i < n; ++i) {
    buf_.insert(buf_.end(), c.x_at(i), c.x_at(i) + c.x_dim);
    buf_.insert(buf_.end(), c.y_at(i), c.y_at(i) + c.y_dim);
  }
  offsets.push_back(offsets.back() + n);
}

void GroupedPoints::finalize() {
  if (offsets.empty()) throw ConfigError("GroupedPoints: no groups");
  points = Matrix(offsets.back(), pair_dim_);
  std::copy(buf_.begin(), buf_.end(), points.raw().begin());
}

Matrix group_mean(const Matrix& h, const std::vector<int>& offsets) {
  const int g = static_cast<int>(offsets.size()) - 1;
  if (g < 1) throw ConfigError("group_mean: no groups");
  if (offsets.back() != h.rows()) {
    throw InternalError("group_mean: offsets do not cover the rows");
  }
  Matrix s(g, h.cols());
  for (int gi = 0; gi < g; ++gi) {
    const int lo = offsets[gi], hi = offsets[gi + 1];
    if (hi <= lo) throw ConfigError("group_mean: empty group");
    double* sr = s.row(gi);
    for (int i = lo; i < hi; ++i) {
      const double* hr = h.row(i);
      for (int c = 0; c < h.cols(); ++c) sr[c] += hr[c];
    }
    const double inv = 1.0 / (hi - lo);
    for (int c = 0; c < h.cols(); ++c) sr[c] *= inv;
  }
  return s;
}

Matrix group_mean_backward(const std::vector<int>& offsets, const Matrix& dmean) {
  const int g = static_cast<int>(offsets.size()) - 1;
  if (dmean.rows() != g) {
    throw InternalError("group_mean_backward: gradient shape mismatch");
  }
  Matrix dh(offsets.back(), dmean.cols());
  for (int gi = 0; gi < g; ++gi) {
    const int lo = offsets[gi], hi = offsets[gi + 1];
    const double inv = 1.0 / (hi - lo);
    const double* dr = dmean.row(gi);
    for (int i = lo; i < hi; ++i) {
      double* dhr = dh.row(i);
      for (int c = 0; c < dmean.cols(); ++c) dhr[c] = dr[c] * inv;
    }
  }
  return dh;
}

Matrix encode_base_batch(const EncoderParams& params, const GroupedPoints& pts,
                         MlpCache* cache) {
  if (pts.groups() < 1) throw ConfigError("encode_base_batch: no groups");
  if (pts.points.rows() != pts.offsets.back()) {
    throw InternalError("encode_base_batch: GroupedPoints not finalized");
  }
  Matrix h = mlp_forward(params.h, pts.points, cache);
  return group_mean(h, pts.offsets);
}

void encode_base_backward(const EncoderParams& params, const GroupedPoints& pts,
                          const MlpCache& cache, const Matrix& d_repr_grad,
                          Mlp& h_grads) {
  if (d_repr_grad.rows() != pts.groups() ||
      d_repr_grad.cols() != params.d_repr) {
    throw InternalError("encode_base_backward: gradient shape mismatch");
  }
  Matrix dh = group_mean_backward(pts.offsets, d_repr_grad);
  mlp_backward(params.h, cache, dh, h_grads);
}

}  // namespace fcrl
