"""
실험 조합 테스트 (slow)
=======================
정방향 / 역방향 학습, horizon 스윕, sweep 커맨드를 소형 하천 데이터셋으로 검증하고
river-small 프리셋의 방향 민감도 / 하류 응답 / Δt 기준을 확인합니다.
기본 실행에서는 제외되며 -m slow 로 실행합니다.

실행:
  pytest tests/test_experiments.py -v -m slow
"""

import pytest
import numpy as np
import pandas as pd

# 프로젝트 모듈
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config_loader import ConfigLoader
from src.graph import downstream_neighbors
from src.main import run
from src.models import ModelConfig, influence_mask
from src.pdesim import generate_river_dataset
from src.traineval import direction_sensitivity, fit, horizon_sweep, perturbation_response, prepare_data

pytestmark = pytest.mark.slow

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# ============================================
# Fixture
# ============================================

@pytest.fixture(scope="module")
def river():
    return generate_river_dataset(seed=0, steps=600)


@pytest.fixture(scope="module")
def base_config():
    return ModelConfig(variant="river", layers=2, hidden=8, window=6, horizon=3, seed=0, edge_hidden=4)


# ============================================
# 1. 정방향 / 역방향 학습
# ============================================

class TestFit:
    """fit 테스트"""

    def test_forward_and_reverse(self, river, base_config):
        data = prepare_data(river.series, river.targets, window=6, horizon=3, stride=3)
        forward = fit(base_config, river.graph, data, epochs=5, batch_size=16)
        reverse = fit(base_config, river.graph, data, reverse=True, epochs=5, batch_size=16)

        assert forward.topology == "forward"
        assert reverse.topology == "reverse"
        assert np.isfinite(forward.test_mse) and np.isfinite(reverse.test_mse)
        assert forward.history.epochs == 5
        # 같은 시드 / 초기화여도 토폴로지가 다르면 학습 결과가 달라야 함
        assert forward.test_mse != reverse.test_mse

    def test_training_improves(self, river, base_config):
        data = prepare_data(river.series, river.targets, window=6, horizon=3, stride=3)
        result = fit(base_config, river.graph, data, epochs=20, batch_size=16, lr=0.01)
        assert min(result.history.val_loss) < result.history.val_loss[0]

    def test_delta_t_recorded(self, river, base_config):
        data = prepare_data(river.series, river.targets, window=6, horizon=3, stride=3)
        result = fit(base_config, river.graph, data, epochs=3, batch_size=16)
        assert len(result.history.delta_t) == 3
        assert result.model.delta_t == pytest.approx(result.history.delta_t[result.history.best_epoch])


# ============================================
# 2. horizon 스윕
# ============================================

class TestHorizonSweep:
    """horizon_sweep 테스트"""

    def test_rows(self, river, base_config):
        rows = horizon_sweep(river.graph, river.series, river.targets, base_config,
                             variants=("river", "gcn"), horizons=(3, 6), stride=4,
                             epochs=2, batch_size=32)
        assert [(r["horizon"], r["variant"]) for r in rows] == [(3, "river"), (3, "gcn"), (6, "river"), (6, "gcn")]
        assert all(r["test_mse"] >= 0.0 for r in rows)

    def test_sweep_command(self, tmp_path):
        data = str(tmp_path / "data")
        out = str(tmp_path / "sweep")
        assert run(["simulate", "--preset", "river-small", "--steps", "300", "--out", data], BASE_DIR) == 0
        assert run(["sweep", "--preset", "river-small", "--dataset", data, "--window", "4",
                    "--hidden", "4", "--epochs", "1", "--stride", "4", "--horizons", "3,6",
                    "--variants", "river,dm", "--out", out], BASE_DIR) == 0
        rows = pd.read_csv(os.path.join(out, "sweep.csv"))
        assert list(rows.columns) == ["variant", "horizon", "test_mse"]
        assert rows["horizon"].tolist() == [3, 3, 6, 6]
        assert rows["variant"].tolist() == ["river", "dm", "river", "dm"]


# ============================================
# 3. river-small 프리셋 수용 기준
# ============================================
# 프리셋 그대로 (백색 유입, CFL ≈ 0.5, 1 레이어, horizon 1) 학습한 결과의 방향성 검사

DELTA_T_SEEDS = (0, 1, 2)


def preset_dataset(config, seed):
    sim = config.simulation
    return generate_river_dataset(seed=seed, steps=sim.steps, dt=sim.dt, g_const=sim.g_const,
                                  slope=sim.slope, nu=sim.nu, noise_sigma=sim.noise_sigma,
                                  base=sim.base, amplitude=sim.amplitude, period=sim.period,
                                  inflow=sim.inflow)


def preset_fit(config, dataset, data, variant, reverse, seed):
    m, t = config.model, config.training
    model_config = ModelConfig(variant=variant, layers=m.layers, hidden=m.hidden, window=m.window,
                               horizon=m.horizon, seed=seed, edge_hidden=m.edge_hidden)
    return fit(model_config, dataset.graph, data, reverse=reverse, epochs=t.epochs, lr=t.lr,
               batch_size=t.batch_size, seed=seed)


@pytest.fixture(scope="module")
def preset():
    return ConfigLoader(BASE_DIR).build("river-small")


@pytest.fixture(scope="module")
def preset_runs(preset):
    """시드별 (dataset, data, {(variant, reverse): FitResult})"""
    runs = {}
    for seed in DELTA_T_SEEDS:
        dataset = preset_dataset(preset, seed)
        t = preset.training
        data = prepare_data(dataset.series, dataset.targets, preset.model.window,
                            preset.model.horizon, t.fractions, t.stride)
        variants = ("river", "gcn") if seed == 0 else ("river",)
        fits = {(v, rev): preset_fit(preset, dataset, data, v, rev, seed)
                for v in variants for rev in (False, True)}
        runs[seed] = (dataset, data, fits)
    return runs


class TestRiverPreset:
    """river-small 프리셋 학습 결과 테스트"""

    def test_preset_values(self, preset):
        assert preset.simulation.inflow == "white"
        assert (preset.model.layers, preset.model.horizon) == (1, 1)

    def test_direction_sensitivity(self, preset_runs):
        """하천 모델은 역방향 토폴로지에서 손해를 보고, 그 폭이 GCN 보다 큼"""
        _, _, fits = preset_runs[0]
        ds_river = direction_sensitivity(fits[("river", False)].test_mse, fits[("river", True)].test_mse)
        ds_gcn = direction_sensitivity(fits[("gcn", False)].test_mse, fits[("gcn", True)].test_mse)
        assert ds_river > 0.0
        assert ds_river > ds_gcn

    def test_downstream_response(self, preset, preset_runs):
        """r00 교란에 대한 하류 이웃 응답: 하천 모델이 GCN 의 2배 이상"""
        dataset, data, fits = preset_runs[0]
        graph = dataset.graph
        node = graph.index_of(preset.perturb.node)
        downstream = [j for j, _ in downstream_neighbors(graph, node)]
        assert downstream == [graph.index_of("r02")]

        test_set = data.samples["test"]
        river = perturbation_response(fits[("river", False)].model, graph, test_set, node,
                                      delta=preset.perturb.delta)
        gcn = perturbation_response(fits[("gcn", False)].model, graph, test_set, node,
                                    delta=preset.perturb.delta)
        river_mean = float(np.mean(river.mean[downstream]))
        gcn_mean = float(np.mean(np.abs(gcn.mean[downstream])))
        assert river_mean > 0.0
        assert river_mean >= 2.0 * gcn_mean

    def test_response_outside_reach(self, preset, preset_runs):
        """영향 범위 밖 노드의 응답은 정확히 0"""
        dataset, data, fits = preset_runs[0]
        graph = dataset.graph
        node = graph.index_of(preset.perturb.node)
        for variant in ("river", "gcn"):
            model = fits[(variant, False)].model
            response = perturbation_response(model, graph, data.samples["test"], node,
                                             delta=preset.perturb.delta)
            mask = influence_mask(model, graph, node)
            assert np.all(response.mean[~mask] == 0.0)
            assert np.all(response.std[~mask] == 0.0)

    @pytest.mark.parametrize("seed", DELTA_T_SEEDS)
    def test_reverse_delta_t_smaller(self, preset_runs, seed):
        """역방향 토폴로지에서 학습된 Δt 는 정방향보다 작음 (초기값 0.7 동일)"""
        _, _, fits = preset_runs[seed]
        forward = fits[("river", False)].model.delta_t
        reverse = fits[("river", True)].model.delta_t
        assert reverse < forward


# ============================================
# 실행
# ============================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short", "-m", "slow"])
