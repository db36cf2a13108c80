# Copyright 2026 The pacsim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import random
from fractions import Fraction

import pytest

import pacsim


def test_exact_mac_matches_dot_product():
    rng = random.Random(1)
    for n in (1, 16, 513):
        x = [rng.randrange(256) for _ in range(n)]
        w = [rng.randrange(256) for _ in range(n)]
        assert pacsim.exact_mac(x, w) == sum(a * b for a, b in zip(x, w))


def test_bit_planes_round_trip():
    values = list(range(256))
    planes = pacsim.decompose(values)
    assert len(planes) == 8
    assert planes[7][200] == 1
    assert pacsim.recompose(planes) == values


def test_sparsity_and_speculation():
    s = pacsim.count_sparsity([1, 3, 0, 128])
    assert s.counts[0] == 2 and s.counts[7] == 1
    assert s.weighted_sum() == 132
    assert pacsim.speculate([255, 0]) == 0.5


def test_pac_estimate_is_exact():
    assert pacsim.pac_estimate(205, 410, 1024) == Fraction(205 * 410, 1024)


def test_hybrid_mac():
    rng = random.Random(2)
    x = [rng.randrange(256) for _ in range(512)]
    w = [rng.randrange(256) for _ in range(512)]
    exact = sum(a * b for a, b in zip(x, w))
    assert pacsim.hybrid_mac(x, w, approx_bits=0) == exact
    approx = pacsim.hybrid_mac(x, w)
    assert abs(approx - exact) < 0.01 * 512 * 255 * 255
    assert round(pacsim.hybrid_mac_exact(x, w)) == approx or abs(pacsim.hybrid_mac_exact(x, w) - approx) == Fraction(1, 2)
    assert pacsim.hybrid_mac([7] * 64, [9] * 64) == 64 * 63


def test_configure_cycles():
    assert len(pacsim.configure_cycles(0.9, (0.1, 0.2, 0.3))) == 16
    assert len(pacsim.configure_cycles(0.05, (0.1, 0.2, 0.3))) == 10


def test_encoder_resume():
    rng = random.Random(3)
    values = [rng.randrange(256) for _ in range(300)]
    state = pacsim.EncoderState(8, 300)
    state.absorb(values[:100])
    state = pacsim.EncoderState.deserialize(state.serialize())
    state.absorb(values[100:])
    assert state.finish() == pacsim.count_sparsity(values)
    assert pacsim.compression_stats(8, 128)["ratio"] == 0.9375


def test_errors_carry_code():
    with pytest.raises(pacsim.PacsimError) as info:
        pacsim.exact_binary_mac([1, 0], [1])
    assert info.value.code == "length mismatch"
    with pytest.raises(ValueError):
        pacsim.decompose([300 % 256, 9], 3)


def test_rmse_and_accounting():
    r = pacsim.rmse_experiment(n=256, trials=2000, seed=4)
    assert r["analytic_lsb"] == pytest.approx(pacsim.hypergeometric_std(256, 51, 102))
    assert r["rmse_lsb"] == pytest.approx(r["analytic_lsb"], rel=0.1)
    assert pacsim.count_cycles() == (64, 16.0, 75.0)
    assert pacsim.memory_traffic(1, 64)[2] == 39.0625
    assert pacsim.energy_ratio() == pytest.approx(2945.92 / 235.01)


def test_model_run(tmp_path):
    model = pacsim.Model.generate(seed=1)
    assert model.layer_names == ["conv1", "conv2", "fc"]
    model.save(tmp_path)
    loaded = pacsim.Model.load(tmp_path)
    x = loaded.random_inputs(1, seed=2)[0]
    out = loaded.run(x, compare_exact=True)
    assert len(out["logits"]) == 10
    assert len(out["layers"]) == 3
    assert out["layers"][0]["dev_rmse"] == 0.0
    assert model.run(x)["logits"] == out["logits"]


def test_cli_in_process():
    code, out, err = pacsim.run_cli(["cost", "--no-timestamp"])
    assert code == 0
    assert out.startswith("# pacsim cost")
    assert pacsim.run_cli(["rmse", "--sx", "2"])[0] == 2
