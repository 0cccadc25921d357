/*
 * Copyright 2026 The bvgsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <benchmark/benchmark.h>

#include <memory>

#include "bvg/attack.hpp"
#include "bvg/defenses.hpp"
#include "bvg/experiment.hpp"

namespace {

using namespace bvg;

struct CoraFederation {
  std::shared_ptr<const Graph> graph;
  DataSplit split;
  VerticalPartition partition;

  CoraFederation() {
    graph = shared_dataset(resolve_data_dir(BVG_BENCH_DATA_DIR), "cora");
    split = split_train_test(*graph, 0.1, 0);
    partition = partition_vertical(*graph, 2, 1, 0, 0);
  }

  Federation make(ModelKind kind) const {
    FederationConfig c;
    c.model = kind;
    c.init_seed = 1;
    return Federation(*graph, split, partition, c);
  }
};

const CoraFederation& cora() {
  static const CoraFederation f;
  return f;
}

void BM_ForwardRound(benchmark::State& state) {
  Federation fed = cora().make(static_cast<ModelKind>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fed.forward_round(cora().split.train_labeled).logits.data());
}
BENCHMARK(BM_ForwardRound)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_TrainingStep(benchmark::State& state) {
  Federation fed = cora().make(static_cast<ModelKind>(state.range(0)));
  for (auto _ : state) {
    const ForwardResult r = fed.forward_round(cora().split.train_labeled);
    fed.backward_round(r, fed.active_loss(r).dlogits);
  }
}
BENCHMARK(BM_TrainingStep)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_PredictTest(benchmark::State& state) {
  Federation fed = cora().make(ModelKind::gcn);
  for (auto _ : state) benchmark::DoNotOptimize(fed.predict(cora().split.test).data());
}
BENCHMARK(BM_PredictTest)->Unit(benchmark::kMillisecond);

void BM_DeployIsolated(benchmark::State& state) {
  Federation fed = cora().make(ModelKind::gcn);
  MultiHopTrigger trig = MultiHopTrigger::zeros(2, fed.party(1).slice.width(), 0.2, 0.02);
  for (auto& d : trig.deltas) d.setConstant(0.1);
  const NodeSet victims(cora().split.test.begin(), cora().split.test.begin() + state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(deploy_attack(fed, trig, victims).data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DeployIsolated)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_GradientCompression(benchmark::State& state) {
  const Matrix g = Matrix::Random(state.range(0), 16);
  for (auto _ : state) benchmark::DoNotOptimize(gradient_compression(g, 0.1).data());
}
BENCHMARK(BM_GradientCompression)->Arg(270)->Arg(1971)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
