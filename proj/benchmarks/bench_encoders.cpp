#include <benchmark/benchmark.h>

#include "xlalign/encoders.hpp"
#include "xlalign/objectives.hpp"

using namespace xlalign;

namespace {

std::vector<text::IdSequence> random_batch(std::size_t n, std::size_t vocab, Rng& rng) {
  std::vector<text::IdSequence> out(n);
  for (auto& s : out) {
    const std::size_t len = 3 + rng.below(6);
    for (std::size_t i = 0; i < len; ++i)
      s.push_back(text::kNumReserved + static_cast<int>(rng.below(vocab - text::kNumReserved)));
  }
  return out;
}

}  // namespace

static void BM_EncodeBiLstm(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  auto enc = encoders::EncoderParams::init("a", 44, 32, hidden, rng);
  auto batch = random_batch(256, 44, rng);
  for (auto _ : state) benchmark::DoNotOptimize(encoders::encode_bilstm_maxpool(batch, enc));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_EncodeBiLstm)->Arg(16)->Arg(32)->Arg(64);

static void BM_Seq2SeqStep(benchmark::State& state) {
  Rng rng(4);
  auto enc = encoders::EncoderParams::init("a", 44, 32, 32, rng);
  auto dec = objectives::DecoderParams::init("a", 44, 32, 64, 32, rng);
  auto batch = random_batch(16, 44, rng);
  auto params = enc.parameters();
  for (auto* p : dec.parameters()) params.push_back(p);
  for (auto _ : state) {
    for (auto* p : params) p->zero_grad();
    Graph g;
    auto loss = objectives::seq2seq_loss(g, encoders::bind(g, enc), objectives::bind(g, dec), batch,
                                         batch, nullptr, nullptr);
    g.backward(loss);
  }
}
BENCHMARK(BM_Seq2SeqStep);
