#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fcrl/data.hpp"
#include "fcrl/mlp.hpp"

namespace fcrl {

enum class CriticKind { Dot, Linear, Nonlinear, NonlinearDeep1, NonlinearDeep2 };

std::string to_string(CriticKind k);
CriticKind critic_from_string(const std::string& s);
int critic_hidden_layers(CriticKind k);  // Dot -> -1, Linear -> 0, ...

// Pointwise network h over (x, y) pairs, mean pooling, and an optional
// projection head rho used only during contrastive training.
struct EncoderParams {
  Mlp h;
  std::optional<Mlp> rho;
  CriticKind critic = CriticKind::Nonlinear;
  int d_repr = 50;
};

// d_repr-sized vector plus provenance. Downstream heads only accept Base;
// Projected values exist solely for the contrastive objective.
struct Representation {
  enum class Kind { Base, Projected };
  std::vector<double> values;
  Kind kind = Kind::Base;
};

// Builds h: (x_dim + y_dim) -> d_repr -> d_repr -> d_repr (two hidden layers)
// and the critic head per kind. Critic output dimension equals d_repr.
EncoderParams make_encoder(int x_dim, int y_dim, int d_repr, CriticKind critic,
                           Rng& rng, bool critic_batch_norm = false);

// Mean of h over the context pairs. Order-independent by construction.
Representation encode_base(const EncoderParams& params, const ContextSet& context);

// Applies the critic head; identity for the dot critic.
Representation project(const EncoderParams& params, const Representation& base);

Representation encode(const EncoderParams& params, const ContextSet& context);

// --- batched path used by trainers -----------------------------------------

// Concatenated points of G variable-size groups; offsets has G+1 entries.
// Groups are appended into a flat buffer; finalize() builds the point matrix.
struct GroupedPoints {
  Matrix points;             // total_points x (x_dim + y_dim)
  std::vector<int> offsets;  // group g spans rows [offsets[g], offsets[g+1])
  int groups() const { return static_cast<int>(offsets.size()) - 1; }
  void add_group(const ContextSet& c);
  void finalize();

 private:
  int pair_dim_ = 0;
  std::vector<double> buf_;
};

// Mean of rows per group / its transpose-distribution backward.
Matrix group_mean(const Matrix& h, const std::vector<int>& offsets);
Matrix group_mean_backward(const std::vector<int>& offsets, const Matrix& dmean);

// Per-group mean of h over the concatenated points. Exactly equals the
// per-context encode_base since each group is averaged over its own rows only.
Matrix encode_base_batch(const EncoderParams& params, const GroupedPoints& pts,
                         MlpCache* cache = nullptr);

// Scatter of d(mean)/d(rows) followed by the pointwise backward pass.
void encode_base_backward(const EncoderParams& params, const GroupedPoints& pts,
                          const MlpCache& cache, const Matrix& d_repr_grad,
                          Mlp& h_grads);

// Anything that yields frozen base representations (FCRL encoder or pooled
// CNP encoder) for downstream heads.
class ReprEncoder {
 public:
  virtual ~ReprEncoder() = default;
  virtual int d_repr() const = 0;
  virtual Representation encode_base(const ContextSet& context) const = 0;
  virtual Matrix encode_base_batch(const GroupedPoints& pts) const = 0;
};

class FcrlReprEncoder : public ReprEncoder {
 public:
  explicit FcrlReprEncoder(const EncoderParams& params) : params_(&params) {}
  int d_repr() const override { return params_->d_repr; }
  Representation encode_base(const ContextSet& context) const override {
    return fcrl::encode_base(*params_, context);
  }
  Matrix encode_base_batch(const GroupedPoints& pts) const override {
    return fcrl::encode_base_batch(*params_, pts);
  }

 private:
  const EncoderParams* params_;
};

}  // namespace fcrl
