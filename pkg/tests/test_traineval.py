"""
학습 / 평가 모듈 단위 테스트
============================
정규화, 시간 순 분할, 윈도우 샘플링, 학습 루프, 평가 지표(MSE / DS / RDS / 교란 응답 / 과평활)를 검증합니다.

실행:
  pytest tests/test_traineval.py -v
"""

import pytest
import numpy as np

# 프로젝트 모듈
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.exceptions import ConfigError, TrainingDivergedError, UndefinedReferenceError
from src.graph import NodeSeries, Targets, path_graph
from src.models import ModelConfig, RiverModel
from src.traineval import (
    DSReport,
    Normalizer,
    SampleSet,
    Split,
    collect_layer_embeddings,
    direction_sensitivity,
    evaluate_mse,
    make_windows,
    perturbation_response,
    prepare_data,
    relative_ds,
    smoothing_profile,
    temporal_gradient,
    train,
)


# ============================================
# Fixture
# ============================================

class ZeroModel:
    """항상 0 을 예측하는 스텁 모델"""

    def predict(self, graph, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-3] + (x.shape[-2],))


def synthetic(steps=60, nodes=4, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(steps, nodes, 2))
    return NodeSeries(values=values, variables=("u", "z")), Targets(values=values[:, :, 0].copy())


@pytest.fixture
def path4():
    return path_graph(4)


@pytest.fixture
def small_data():
    series, targets = synthetic()
    return prepare_data(series, targets, window=3, horizon=1)


def small_model(seed=0):
    return RiverModel(ModelConfig(layers=2, hidden=3, window=3, horizon=1, edge_hidden=2, seed=seed),
                      num_features=2, edge_dim=1)


# ============================================
# 1. 정규화 / 분할
# ============================================

class TestNormalizer:
    """Normalizer 테스트"""

    def test_fit_apply_invert(self):
        values = np.random.default_rng(0).normal(3.0, 2.0, size=(50, 4, 2))
        norm = Normalizer.fit(values, names=("u", "z"))
        z = norm.apply(values)
        np.testing.assert_allclose(z.reshape(-1, 2).mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(z.reshape(-1, 2).std(axis=0), 1.0)
        np.testing.assert_allclose(norm.invert(z), values)

    def test_zero_variance(self):
        values = np.ones((10, 3, 1))
        norm = Normalizer.fit(values)
        assert norm.std[0] == 1.0
        np.testing.assert_array_equal(norm.apply(values), np.zeros((10, 3, 1)))

    def test_dict_round_trip(self):
        norm = Normalizer.fit(np.arange(12.0).reshape(6, 2), names=("a", "b"))
        again = Normalizer.from_dict(norm.to_dict())
        np.testing.assert_array_equal(again.mean, norm.mean)
        assert again.names == ("a", "b")


class TestSplit:
    """Split.chronological 테스트"""

    def test_default_fractions(self):
        split = Split.chronological(100)
        assert (split.train, split.val, split.test) == ((0, 70), (70, 85), (85, 100))

    def test_contiguous(self):
        split = Split.chronological(333)
        assert split.train[1] == split.val[0]
        assert split.val[1] == split.test[0]
        assert split.test[1] == 333

    @pytest.mark.parametrize("fractions", [(0.5, 0.5), (0.8, 0.3, -0.1), (0.5, 0.3, 0.3)])
    def test_invalid(self, fractions):
        with pytest.raises(ConfigError):
            Split.chronological(100, fractions)


# ============================================
# 2. 윈도우 샘플링
# ============================================

class TestMakeWindows:
    """make_windows / prepare_data 테스트"""

    @pytest.mark.parametrize("total, expected", [(30, 1), (100, 71)])
    def test_sample_count(self, total, expected):
        samples = make_windows(np.zeros((total, 2, 1)), np.zeros((total, 2)), window=24, horizon=6)
        assert len(samples) == expected

    def test_too_short(self):
        with pytest.raises(ValueError):
            make_windows(np.zeros((29, 2, 1)), np.zeros((29, 2)), window=24, horizon=6)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            make_windows(np.zeros((30, 2, 1)), np.zeros((31, 2)), window=3, horizon=1)

    def test_window_contents(self):
        values = np.arange(10.0).reshape(10, 1, 1)
        samples = make_windows(values, np.arange(10.0).reshape(10, 1), window=3, horizon=2)
        np.testing.assert_array_equal(samples.x[0, :, 0, 0], [0.0, 1.0, 2.0])
        assert samples.y[0, 0] == 4.0
        assert samples.end_index[0] == 2

    def test_stride(self):
        samples = make_windows(np.zeros((100, 2, 1)), np.zeros((100, 2)), window=24, horizon=6, stride=5)
        assert len(samples) == 15

    def test_no_leakage(self, small_data):
        """샘플의 입력 윈도우와 타겟 시점이 모두 자기 분할 구간 안에 있어야 함"""
        for name, (start, end) in small_data.split.parts().items():
            s = small_data.samples[name]
            assert len(s) > 0
            assert np.all(s.end_index - 3 + 1 >= start)
            assert np.all(s.end_index + 1 < end)

    def test_normalizer_from_train_only(self):
        series, targets = synthetic()
        series.values[50:] += 100.0
        data = prepare_data(series, targets, window=3, horizon=1)
        assert np.all(np.abs(data.series_norm.mean) < 1.0)


# ============================================
# 3. 학습 루프
# ============================================

class TestTrain:
    """train 테스트"""

    def test_history_length(self, path4, small_data):
        history = train(small_model(), path4, small_data.samples, epochs=3, batch_size=8)
        assert history.epochs == 3
        assert len(history.val_loss) == 3
        assert all(dt is not None for dt in history.delta_t)

    def test_zero_epochs(self, path4, small_data):
        model = small_model()
        before = model.state_dict()
        history = train(model, path4, small_data.samples, epochs=0)
        assert history.epochs == 0
        np.testing.assert_array_equal(model.state_dict()["W1_0"], before["W1_0"])

    def test_deterministic(self, path4, small_data):
        a = train(small_model(), path4, small_data.samples, epochs=2, seed=4, batch_size=8)
        b = train(small_model(), path4, small_data.samples, epochs=2, seed=4, batch_size=8)
        assert a == b

    def test_loss_decreases(self, path4, small_data):
        history = train(small_model(), path4, small_data.samples, epochs=15, lr=0.01, batch_size=8)
        assert min(history.train_loss) < history.train_loss[0]

    def test_divergence(self, mocker, path4, small_data):
        mocker.patch("src.traineval.trainer.evaluate_mse", return_value=float("nan"))
        with pytest.raises(TrainingDivergedError) as exc_info:
            train(small_model(), path4, small_data.samples, epochs=3)
        assert exc_info.value.epoch == 0

    def test_early_stopping(self, mocker, path4, small_data):
        """검증 loss 가 계속 나빠지면 patience 에폭 뒤 중단, 최적 에폭 복원"""
        mocker.patch("src.traineval.trainer.evaluate_mse", side_effect=[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        model = small_model()
        history = train(model, path4, small_data.samples, epochs=6, patience=3, batch_size=64)
        assert history.stopped_early
        assert history.epochs == 4
        assert history.best_epoch == 0

    def test_to_dict_excludes_wall_time(self, path4, small_data):
        history = train(small_model(), path4, small_data.samples, epochs=1)
        assert "wall_time" not in history.to_dict()


# ============================================
# 4. MSE / DS / RDS
# ============================================

class TestLossMetrics:
    """evaluate_mse / direction_sensitivity / relative_ds 테스트"""

    def test_mse_residual(self, path4):
        samples = SampleSet(x=np.zeros((1, 3, 2, 1)), y=np.array([[1.0, -1.0]]))
        assert evaluate_mse(ZeroModel(), path4, samples) == pytest.approx(1.0)

    def test_mse_empty(self, path4):
        with pytest.raises(ValueError):
            evaluate_mse(ZeroModel(), path4, SampleSet(x=np.zeros((0, 3, 2, 1)), y=np.zeros((0, 2))))

    def test_ds_sign(self):
        assert direction_sensitivity(0.0801, 0.0906) == pytest.approx(0.0105)
        assert direction_sensitivity(0.0724, 0.0696) < 0

    def test_ds_non_finite(self):
        with pytest.raises(ValueError):
            direction_sensitivity(float("inf"), 1.0)

    # (모델, F, R, 참조 DS, 참조 RDS %). 첫 행이 기준 모델
    RIVER_TABLE = [
        ("river", 0.0801, 0.0906, 0.0105, 0.0),
        ("dm", 0.0898, 0.0961, 0.0063, -40.0),
        ("gwn", 0.1101, 0.1132, 0.0031, -70.5),
        ("mp_pde", 0.1126, 0.1082, -0.0044, -141.9),
        ("mpnn", 0.1170, 0.1182, 0.0012, -88.6),
        ("graphsage", 0.1224, 0.1149, -0.0075, -171.4),
        ("gat", 0.1233, 0.1265, 0.0032, -69.5),
        ("gno", 0.1247, 0.1265, 0.0018, -82.9),
        ("gcn", 0.1365, 0.1357, -0.0008, -107.6),
    ]
    TRAFFIC_TABLE = [
        ("traffic", 0.0696, 0.0724, 0.0028, 0.0),
        ("dm", 0.0721, 0.0738, 0.0017, -39.3),
        ("gwn", 0.0709, 0.0706, -0.0003, -110.7),
        ("mp_pde", 0.0700, 0.0711, 0.0011, -60.7),
        ("mpnn", 0.0713, 0.0720, 0.0007, -75.0),
        ("graphsage", 0.0724, 0.0712, -0.0012, -142.9),
        ("gat", 0.0768, 0.0776, 0.0008, -71.4),
        ("gno", 0.0757, 0.0765, 0.0008, -71.4),
        ("gcn", 0.0769, 0.0778, 0.0009, -67.9),
    ]

    @pytest.mark.parametrize("table", [RIVER_TABLE, TRAFFIC_TABLE], ids=["river", "traffic"])
    def test_rds_table(self, table):
        """(F, R) → DS → 기준 모델 대비 RDS, 9행 모두 참조 값과 일치"""
        # 참조 값은 소수 4자리 손실에서 계산됨
        ds = {name: round(direction_sensitivity(f, r), 4) for name, f, r, _, _ in table}
        reference = table[0][0]
        for name, _, _, expected_ds, expected_rds in table:
            assert ds[name] == pytest.approx(expected_ds, abs=1e-12)
            rds = 100.0 * relative_ds(ds[reference], ds[name])
            assert round(rds, 1) == pytest.approx(expected_rds, abs=1e-9)

    def test_rds_zero_reference(self):
        with pytest.raises(UndefinedReferenceError):
            relative_ds(0.0, 0.01)

    def test_ds_report(self):
        report = DSReport.from_losses(0.0696, 0.0724, reference_ds=0.0028)
        assert report.ds == pytest.approx(0.0028)
        assert report.rds == pytest.approx(0.0, abs=1e-9)
        assert set(report.to_dict()) == {"loss_forward", "loss_reverse", "ds", "rds", "reference_ds"}

    def test_ds_report_without_reference(self):
        assert DSReport.from_losses(0.1, 0.1).rds is None


# ============================================
# 5. 교란 응답
# ============================================

class TestPerturbation:
    """perturbation_response 테스트"""

    @pytest.fixture
    def path6_samples(self):
        series, targets = synthetic(steps=20, nodes=6, seed=3)
        return make_windows(series, targets, window=3, horizon=1)

    def test_zero_delta(self, path6_samples):
        result = perturbation_response(small_model(), path_graph(6), path6_samples, node=0, delta=0.0)
        np.testing.assert_array_equal(result.mean, np.zeros(6))

    def test_out_of_reach_zero(self, path6_samples):
        """L=2 → 경로 그래프의 노드 0 교란은 노드 3 이후에 닿지 않음"""
        result = perturbation_response(small_model(), path_graph(6), path6_samples, node=0, delta=0.5)
        np.testing.assert_array_equal(result.mean[3:], 0.0)
        np.testing.assert_array_equal(result.std[3:], 0.0)
        assert np.any(result.mean[:3] != 0.0)

    def test_band_and_rows(self, path6_samples):
        result = perturbation_response(small_model(), path_graph(6), path6_samples, node=1)
        np.testing.assert_allclose(result.upper - result.lower, 6.0 * result.std)
        rows = result.to_rows()
        assert [r["node"] for r in rows] == list(path_graph(6).node_ids)
        assert set(rows[0]) == {"node", "mean_response", "std_response"}
        assert result.to_dict()["num_samples"] == len(path6_samples)

    def test_invalid_node(self, path6_samples):
        with pytest.raises(ValueError):
            perturbation_response(small_model(), path_graph(6), path6_samples, node=6)


# ============================================
# 6. 과평활 진단
# ============================================

class TestSmoothing:
    """temporal_gradient / smoothing_profile 테스트"""

    def test_two_steps(self):
        np.testing.assert_allclose(temporal_gradient(np.array([[0.0], [2.0]])), [1.0])

    def test_constant_series(self):
        np.testing.assert_array_equal(temporal_gradient(np.ones((5, 3))), np.zeros(3))

    def test_channel_average(self):
        values = np.zeros((2, 1, 2))
        values[1, 0] = [2.0, 4.0]
        np.testing.assert_allclose(temporal_gradient(values), [(1.0 + 4.0) / 2])

    def test_too_short(self):
        with pytest.raises(ValueError):
            temporal_gradient(np.ones((1, 3)))

    def test_profile_length(self, path4, small_data):
        model = small_model()
        embeddings = collect_layer_embeddings(model, path4, small_data.samples["test"])
        assert len(embeddings) == model.config.layers + 1
        assert embeddings[0].shape == (len(small_data.samples["test"]), 4, 3)
        profile = smoothing_profile(embeddings)
        assert len(profile) == 3
        assert all(v >= 0.0 for v in profile)


# ============================================
# 실행
# ============================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
