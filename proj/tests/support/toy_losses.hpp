#pragma once

// Small seeded graphs for the four training objectives, sized so a full
// finite-difference sweep stays cheap.

#include <functional>
#include <memory>
#include <vector>

#include "xlalign/encoders.hpp"
#include "xlalign/objectives.hpp"

namespace xlalign::testing {

struct ToyLoss {
  std::string name;
  std::vector<Parameter*> params;
  std::function<Graph::Var(Graph&)> build;
};

// Owns the parameters the closures refer to.
struct ToyModels {
  encoders::EncoderParams enc_a, enc_b, pivot;
  objectives::DecoderParams dec;
  objectives::ClassifierHead head;
  std::vector<text::IdSequence> src, tgt;
  std::vector<int> labels;
  text::NoiseParams noise{0.3, 0.3, 77};

  explicit ToyModels(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t V = 9, D = 3, H = 2;
    enc_a = encoders::EncoderParams::init("a", V, D, H, rng);
    enc_b = encoders::EncoderParams::init("b", V, D, H, rng);
    pivot = encoders::EncoderParams::init("p", V, D, H, rng);
    dec = objectives::DecoderParams::init("a", V, D, 2 * H, 3, rng);
    head = objectives::ClassifierHead::init(2 * H, 4, rng);
    // Larger logits so the cross-entropy gradients are not vanishingly small.
    for (auto& v : dec.projection.value.data()) v *= 3.0;
    src = {{4, 5, 6, 7}, {8, 4}, {5}};
    tgt = {{6, 7, 8}, {4, 4, 5, 6}, {7, 8}};
    labels = {0, 2, 1};
  }

  std::vector<ToyLoss> losses() {
    std::vector<ToyLoss> out;
    auto with = [](std::vector<Parameter*> a, const std::vector<Parameter*>& b) {
      a.insert(a.end(), b.begin(), b.end());
      return a;
    };
    out.push_back({"sdae", with(enc_a.parameters(), dec.parameters()), [this](Graph& g) {
                     // Fresh rng per evaluation keeps the corruption fixed.
                     Rng rng(5);
                     return objectives::seq2seq_loss(g, encoders::bind(g, enc_a),
                                                     objectives::bind(g, dec), src, src, &noise, &rng);
                   }});
    out.push_back({"nmt", with(enc_b.parameters(), dec.parameters()), [this](Graph& g) {
                     return objectives::seq2seq_loss(g, encoders::bind(g, enc_b),
                                                     objectives::bind(g, dec), src, tgt, nullptr,
                                                     nullptr);
                   }});
    out.push_back({"infersent", with(with(enc_a.parameters(), enc_b.parameters()), head.parameters()),
                   [this](Graph& g) {
                     auto u = encoders::encode_batch(g, encoders::bind(g, enc_a), src);
                     auto v = encoders::encode_batch(g, encoders::bind(g, enc_b), tgt);
                     auto logits = objectives::infersent_logits(g, head, u, v);
                     std::vector<double> ones(labels.size(), 1.0);
                     return g.softmax_cross_entropy(logits, labels, ones,
                                                    static_cast<double>(labels.size()));
                   }});
    out.push_back({"transfer_l1", enc_b.parameters(), [this](Graph& g) {
                     auto out_b = encoders::encode_batch(g, encoders::bind(g, enc_b), src);
                     auto out_p = encoders::encode_batch(g, encoders::bind_frozen(g, pivot), tgt);
                     return objectives::l1_loss(g, out_b, out_p);
                   }});
    return out;
  }
};

}  // namespace xlalign::testing
