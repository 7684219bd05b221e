"""
모델 모듈 단위 테스트
=====================
하천 / 교통 레이어 수식, 학습형 엣지 사상, 비교 모델, 순전파 형태, 국소성, 기울기 검사를 검증합니다.

실행:
  pytest tests/test_models.py -v
"""

import pytest
import numpy as np

# 프로젝트 모듈
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.diffops import build_base_difference, build_d1, build_d2
from src.exceptions import ConfigError, ShapeError
from src.graph import (
    DirectedGraph,
    directed_ring,
    path_graph,
    permute_nodes,
    reverse_topology,
    river_tree,
    traffic_network,
)
from src.models import (
    DELTA_T_INIT,
    DMModel,
    EdgeMapParams,
    EdgeMLP,
    GCNModel,
    ModelConfig,
    RiverLayerParams,
    RiverModel,
    TrafficLayerParams,
    TrafficModel,
    build_model,
    build_operators,
    dm_layer,
    gcn_layer,
    influence_mask,
    normalized_adjacency,
    river_layer,
    stack_window,
    traffic_layer,
)
from src.pdesim import generate_river_dataset
from src.tensorad import Tensor, check_gradients, mse_loss, no_grad
from src.traineval import smoothing_profile


# ============================================
# Fixture
# ============================================

def scalar(value):
    return Tensor(value, requires_grad=True)


def eye(d):
    return Tensor(np.eye(d), requires_grad=True)


def constant_mlp(q, hidden, value):
    """모든 엣지에 value 를 출력하는 φ"""
    return EdgeMLP(w1=Tensor(np.zeros((q, hidden))), b1=Tensor(np.zeros(hidden)),
                   w2=Tensor(np.zeros((hidden, 1))), b2=Tensor([value]))


@pytest.fixture
def tree():
    g, _ = river_tree(np.random.default_rng(0))
    return g


@pytest.fixture
def small_config():
    return ModelConfig(variant="river", layers=2, hidden=4, window=3, horizon=2, seed=0, edge_hidden=3)


# ============================================
# 1. 설정 / 입력 펼치기
# ============================================

class TestModelConfig:
    """ModelConfig / stack_window 테스트"""

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            ModelConfig(variant="lstm")

    def test_non_positive_layers(self):
        with pytest.raises(ConfigError):
            ModelConfig(layers=0)

    def test_stack_window_single(self):
        x = np.arange(2 * 3 * 2, dtype=float).reshape(2, 3, 2)
        flat, batch = stack_window(x, window=2, num_nodes=3, num_features=2)
        assert batch == 0
        assert flat.shape == (3, 4)
        # 노드 1 행 = [t0 의 (p0, p1), t1 의 (p0, p1)]
        np.testing.assert_array_equal(flat[1], [x[0, 1, 0], x[0, 1, 1], x[1, 1, 0], x[1, 1, 1]])

    def test_stack_window_batch(self):
        flat, batch = stack_window(np.zeros((5, 2, 3, 2)), 2, 3, 2)
        assert (flat.shape, batch) == ((15, 4), 5)

    def test_incomplete_window(self):
        with pytest.raises(ShapeError):
            stack_window(np.zeros((2, 3, 2)), window=3, num_nodes=3, num_features=2)


# ============================================
# 2. 하천 레이어
# ============================================

class TestRiverLayer:
    """river_layer 테스트"""

    def test_zero_step_identity(self):
        g = path_graph(5)
        h = Tensor(np.random.default_rng(0).normal(size=(5, 2)))
        params = RiverLayerParams(W1=eye(2), W2=eye(2), delta_t=scalar(0.0), g_hat=scalar(9.81))
        out = river_layer(h, build_d1(g, 1.0), build_d2(g, 1.0, -0.2), params)
        np.testing.assert_array_equal(out.data, h.data)

    def test_constant_h_flat_terrain(self):
        g = path_graph(5)
        h = Tensor(np.full((5, 3), 0.4))
        params = RiverLayerParams(W1=eye(3), W2=eye(3), delta_t=scalar(0.7), g_hat=scalar(1.0))
        out = river_layer(h, build_d1(g, 1.0), build_d2(g, 1.0, 0.0), params)
        np.testing.assert_allclose(out.data, h.data, atol=1e-15)

    def test_hand_evaluated(self):
        """3노드 경로, d=1: 노드별 스칼라 계산과 비교"""
        g = path_graph(3)
        dx, dz = np.array([1.0, 2.0]), np.array([-0.5, -1.0])
        hv = np.array([1.0, 2.0, 4.0])
        dt, g_hat = 0.1, 9.81

        d1 = np.array([hv[0] - hv[1], (hv[1] - hv[0]) / dx[0], (hv[2] - hv[1]) / dx[1]])
        d2 = np.array([(hv[0] - hv[1]) * dz[0] / dx[0],
                       (hv[1] - hv[0]) * dz[0] / dx[0],
                       (hv[2] - hv[1]) * dz[1] / dx[1]])
        expected = hv - dt * (hv * d1 + g_hat * d2)

        params = RiverLayerParams(W1=eye(1), W2=eye(1), delta_t=scalar(dt), g_hat=scalar(g_hat))
        out = river_layer(Tensor(hv.reshape(3, 1)), build_d1(g, dx), build_d2(g, dx, dz), params)
        np.testing.assert_allclose(out.data[:, 0], expected, atol=1e-12)

    def test_weight_shape(self):
        g = path_graph(3)
        params = RiverLayerParams(W1=eye(2), W2=eye(3), delta_t=scalar(0.1), g_hat=scalar(1.0))
        with pytest.raises(ShapeError):
            river_layer(Tensor(np.ones((3, 2))), build_d1(g, 1.0), build_d2(g, 1.0, 0.0), params)


# ============================================
# 3. 교통 레이어
# ============================================

class TestTrafficLayer:
    """traffic_layer 테스트"""

    def test_zero_step_identity(self):
        g = directed_ring(4)
        h = Tensor(np.random.default_rng(1).normal(size=(4, 2)))
        v = Tensor(np.random.default_rng(2).normal(size=(4, 2)))
        params = TrafficLayerParams(W1=eye(2), W2=eye(2), delta_t=scalar(0.0))
        np.testing.assert_array_equal(traffic_layer(h, v, build_d1(g, 1.0), params).data, h.data)

    def test_zero_velocity(self):
        g = directed_ring(4)
        h = Tensor(np.random.default_rng(1).normal(size=(4, 2)))
        params = TrafficLayerParams(W1=eye(2), W2=eye(2), delta_t=scalar(0.7))
        out = traffic_layer(h, Tensor(np.zeros((4, 2))), build_d1(g, 1.0), params)
        np.testing.assert_array_equal(out.data, h.data)

    def test_hand_evaluated(self):
        """4노드 링, d=1: h' = h − Δt·(h·(D1 v) + v·(D1 h))"""
        g = directed_ring(4)
        hv = np.array([1.0, 3.0, 2.0, 0.5])
        vv = np.array([0.2, 0.4, 0.1, 0.3])
        dt, dx = 0.25, 2.0
        d1h = (hv - np.roll(hv, 1)) / dx
        d1v = (vv - np.roll(vv, 1)) / dx
        expected = hv - dt * (hv * d1v + vv * d1h)

        params = TrafficLayerParams(W1=eye(1), W2=eye(1), delta_t=scalar(dt))
        out = traffic_layer(Tensor(hv.reshape(4, 1)), Tensor(vv.reshape(4, 1)), build_d1(g, dx), params)
        np.testing.assert_allclose(out.data[:, 0], expected, atol=1e-12)

    def test_velocity_shape(self):
        g = directed_ring(4)
        params = TrafficLayerParams(W1=eye(2), W2=eye(2), delta_t=scalar(0.1))
        with pytest.raises(ShapeError):
            traffic_layer(Tensor(np.ones((4, 2))), Tensor(np.ones((3, 2))), build_d1(g, 1.0), params)


# ============================================
# 4. 학습형 엣지 사상
# ============================================

class TestEdgeMap:
    """build_operators 테스트"""

    def test_large_constant_phi1(self, tree):
        """φ1 ≡ c (큰 값) → D1 = D̂ / (softplus(c) + 1e-3)"""
        c = 40.0
        params = EdgeMapParams(phi1=constant_mlp(3, 4, c), phi2=constant_mlp(3, 4, 0.0))
        d1, d2 = build_operators(tree, tree.edge_features, params)
        expected = build_base_difference(tree).to_dense() / (c + 1e-3)
        np.testing.assert_allclose(d1.matrix.toarray(), expected, rtol=1e-12)

    def test_zero_phi2(self, tree):
        params = EdgeMapParams(phi1=constant_mlp(3, 4, 1.0), phi2=constant_mlp(3, 4, 0.0))
        _, d2 = build_operators(tree, tree.edge_features, params)
        assert np.all(d2.matrix.toarray() == 0.0)

    def test_traffic_has_no_d2(self):
        g = traffic_network(np.random.default_rng(0))
        _, d2 = build_operators(g, g.edge_features, EdgeMapParams(phi1=constant_mlp(2, 4, 1.0)))
        assert d2 is None

    def test_feature_width_checked(self, tree):
        params = EdgeMapParams(phi1=constant_mlp(2, 4, 1.0))
        with pytest.raises(ShapeError):
            build_operators(tree, tree.edge_features, params)

    def test_dx_positive(self, tree):
        params = EdgeMapParams(phi1=constant_mlp(3, 4, -50.0))
        d1, _ = build_operators(tree, tree.edge_features, params)
        assert np.all(np.isfinite(d1.weights.data))
        assert np.all(d1.weights.data > 0)


# ============================================
# 5. 비교 모델 레이어
# ============================================

class TestBaselineLayers:
    """gcn_layer / dm_layer 테스트"""

    def test_isolated_self_loop(self):
        g = DirectedGraph(num_nodes=1, edges=np.zeros((0, 2)), edge_features=np.zeros((0, 1)))
        h = Tensor([[-1.0, 2.0]])
        np.testing.assert_array_equal(gcn_layer(h, normalized_adjacency(g), eye(2)).data, [[0.0, 2.0]])

    def test_averaging_preserves_constants(self, tree):
        h = Tensor(np.full((16, 2), -0.3))
        h.data[:, 1] = 0.8
        out = gcn_layer(h, normalized_adjacency(tree), eye(2))
        np.testing.assert_allclose(out.data[:, 0], 0.0)
        np.testing.assert_allclose(out.data[:, 1], 0.8)

    def test_row_stochastic(self, tree):
        A = normalized_adjacency(tree)
        np.testing.assert_allclose(np.asarray(A.sum(axis=1)).ravel(), 1.0)

    def test_dm_zero_step(self, tree):
        h = Tensor(np.random.default_rng(0).normal(size=(16, 2)))
        out = dm_layer(h, build_base_difference(tree), eye(2), scalar(0.0))
        np.testing.assert_array_equal(out.data, h.data)


# ============================================
# 6. 모델 순전파
# ============================================

class TestModels:
    """BaseModel 하위 모델 테스트"""

    @pytest.mark.parametrize("variant", ["river", "gcn", "resgcn", "dm"])
    def test_forward_shapes(self, tree, small_config, variant):
        from dataclasses import replace
        model = build_model(replace(small_config, variant=variant), num_features=2, edge_dim=3)
        x = np.random.default_rng(0).normal(size=(3, 16, 2))
        assert model.predict(tree, x).shape == (16,)
        assert model.predict(tree, np.stack([x, x, x])).shape == (3, 16)

    def test_traffic_forward(self):
        g = traffic_network(np.random.default_rng(0))
        model = TrafficModel(ModelConfig(variant="traffic", hidden=4, window=3, edge_hidden=3), 2, 2)
        out = model.predict(g, np.random.default_rng(1).normal(size=(2, 3, 12, 2)))
        assert out.shape == (2, 12)
        assert "phi2_w1" not in model.params

    def test_delta_t_initialised(self, small_config):
        model = RiverModel(small_config, num_features=2, edge_dim=3)
        assert model.delta_t == pytest.approx(DELTA_T_INIT)
        assert model.manifest()["delta_t_final"] == pytest.approx(0.7)
        assert GCNModel(ModelConfig(variant="gcn"), 2).delta_t is None

    def test_shared_delta_t(self, small_config):
        model = RiverModel(small_config, num_features=2, edge_dim=3)
        assert model.layer_params[0].delta_t is model.layer_params[1].delta_t

    def test_deterministic_init(self, tree, small_config):
        x = np.random.default_rng(0).normal(size=(3, 16, 2))
        a = RiverModel(small_config, 2, 3).predict(tree, x)
        b = RiverModel(small_config, 2, 3).predict(tree, x)
        np.testing.assert_array_equal(a, b)

    def test_zero_input_bias_only(self, tree, small_config):
        """편향 없는 임베딩 → 0 입력의 예측은 readout 편향"""
        model = DMModel(small_config, num_features=2)
        model.params["readout_b"].data = np.array(0.25)
        np.testing.assert_allclose(model.predict(tree, np.zeros((3, 16, 2))), 0.25)

    def test_state_dict_round_trip(self, tree, small_config):
        x = np.random.default_rng(0).normal(size=(3, 16, 2))
        source = RiverModel(small_config, 2, 3)
        target = RiverModel(ModelConfig(**{**small_config.to_dict(), "seed": 9}), 2, 3)
        target.load_state_dict(source.state_dict())
        np.testing.assert_array_equal(target.predict(tree, x), source.predict(tree, x))

    def test_load_state_dict_shape(self, small_config):
        model = RiverModel(small_config, 2, 3)
        state = model.state_dict()
        state["W1_0"] = np.zeros((2, 2))
        with pytest.raises(ShapeError):
            model.load_state_dict(state)

    def test_direction_matters(self, tree, small_config):
        x = np.random.default_rng(0).normal(size=(3, 16, 2))
        model = RiverModel(small_config, 2, 3)
        assert not np.allclose(model.predict(tree, x), model.predict(reverse_topology(tree), x))


# ============================================
# 7. 국소성 / 기울기
# ============================================

class TestLocality:
    """influence_mask 와 실제 예측 의존성 비교"""

    def test_mask_on_path(self):
        g = path_graph(6)
        model = RiverModel(ModelConfig(layers=2, hidden=3, window=2, edge_hidden=2), 1, 1)
        mask = influence_mask(model, g, node=0)
        np.testing.assert_array_equal(mask, [True, True, True, False, False, False])

    def test_unreached_nodes_unchanged(self):
        g = path_graph(6)
        model = RiverModel(ModelConfig(layers=2, hidden=3, window=2, edge_hidden=2), 1, 1)
        x = np.random.default_rng(0).normal(size=(2, 6, 1))
        perturbed = x.copy()
        perturbed[-1, 0, 0] += 0.5
        diff = model.predict(g, perturbed) - model.predict(g, x)
        mask = influence_mask(model, g, node=0)
        np.testing.assert_array_equal(diff[~mask], 0.0)
        assert np.any(diff[mask] != 0.0)

    def test_gcn_mask_follows_edges(self):
        g = path_graph(5)
        model = GCNModel(ModelConfig(variant="gcn", layers=1, hidden=2, window=1), 1)
        np.testing.assert_array_equal(influence_mask(model, g, node=2), [False, False, True, True, False])


class TestGradients:
    """모델 파라미터 수치 기울기 검사"""

    @pytest.mark.parametrize("variant", ["river", "traffic"])
    def test_gradcheck(self, variant):
        if variant == "river":
            g, _ = river_tree(np.random.default_rng(0))
            q = 3
        else:
            g = traffic_network(np.random.default_rng(0))
            q = 2
        config = ModelConfig(variant=variant, layers=2, hidden=3, window=2, edge_hidden=2, seed=1)
        model = build_model(config, num_features=2, edge_dim=q)
        rng = np.random.default_rng(2)
        x = rng.normal(size=(2, 2, g.num_nodes, 2))
        y = rng.normal(size=(2, g.num_nodes))

        names = ["delta_t", "phi1_w1", "phi1_b2", "W1_0", "W2_1", "readout_w"]
        if variant == "river":
            names += ["g_hat", "phi2_w2", "embed"]
        else:
            names += ["embed_v1", "embed_h2"]
        params = [model.params[n] for n in names]
        errors = check_gradients(lambda: mse_loss(model.forward(g, x), Tensor(y)), params)
        assert max(errors.values()) < 1e-5, errors

    @pytest.mark.parametrize("variant", ["river", "traffic", "gcn"])
    @pytest.mark.parametrize("seed", range(20))
    def test_gradcheck_five_nodes(self, variant, seed):
        """5노드 그래프, 시드 20개: 모든 파라미터의 상대 오차 < 1e-5"""
        g = directed_ring(5) if variant == "traffic" else path_graph(5)
        config = ModelConfig(variant=variant, layers=2, hidden=3, window=2, edge_hidden=2, seed=seed)
        model = build_model(config, num_features=2, edge_dim=g.feature_dim)
        rng = np.random.default_rng(100 + seed)
        x = rng.normal(size=(2, 2, g.num_nodes, 2))
        y = rng.normal(size=(2, g.num_nodes))
        params = model.parameters()
        errors = check_gradients(lambda: mse_loss(model.forward(g, x), Tensor(y)), params)
        assert max(errors.values()) < 1e-5, errors


# ============================================
# 8. 성질 기반 검사 (무작위 사례)
# ============================================

NUM_CASES = 100


def random_case(seed: int):
    """무작위 하천 트리, 은닉 상태, 가중치, Δt"""
    rng = np.random.default_rng(seed)
    g, _ = river_tree(rng)
    d = int(rng.integers(1, 5))
    h = Tensor(rng.normal(size=(g.num_nodes, d)))
    W1 = Tensor(rng.normal(size=(d, d)), requires_grad=True)
    W2 = Tensor(rng.normal(size=(d, d)), requires_grad=True)
    dx = rng.uniform(0.2, 3.0, size=g.num_edges)
    return rng, g, d, h, W1, W2, dx


class TestLayerProperties:
    """레이어 variant 별 영-스텝 항등 / 상수 핵 성질 (사례당 무작위 그래프와 파라미터)"""

    @pytest.mark.parametrize("variant", ["river", "traffic", "dm"])
    def test_zero_step_identity(self, variant):
        for seed in range(NUM_CASES):
            rng, g, d, h, W1, W2, dx = random_case(seed)
            zero = scalar(0.0)
            if variant == "river":
                params = RiverLayerParams(W1=W1, W2=W2, delta_t=zero, g_hat=scalar(rng.normal()))
                out = river_layer(h, build_d1(g, dx), build_d2(g, dx, rng.normal(size=g.num_edges)), params)
            elif variant == "traffic":
                v = Tensor(rng.normal(size=h.shape))
                out = traffic_layer(h, v, build_d1(g, dx), TrafficLayerParams(W1=W1, W2=W2, delta_t=zero))
            else:
                out = dm_layer(h, build_base_difference(g), W1, zero)
            np.testing.assert_array_equal(out.data, h.data, err_msg=f"seed={seed}")

    @pytest.mark.parametrize("variant", ["river", "traffic", "dm", "gcn"])
    def test_constant_kernel(self, variant):
        """공간 상수 h (Δz = 0) 는 레이어를 거쳐도 공간 상수"""
        for seed in range(NUM_CASES):
            rng, g, d, _, W1, W2, dx = random_case(seed)
            row = rng.normal(size=d)
            h = Tensor(np.tile(row, (g.num_nodes, 1)))
            delta_t = scalar(rng.uniform(0.0, 2.0))
            if variant == "river":
                params = RiverLayerParams(W1=W1, W2=W2, delta_t=delta_t, g_hat=scalar(rng.normal()))
                out = river_layer(h, build_d1(g, dx), build_d2(g, dx, np.zeros(g.num_edges)), params)
                expected = h.data
            elif variant == "traffic":
                v = Tensor(np.tile(rng.normal(size=d), (g.num_nodes, 1)))
                out = traffic_layer(h, v, build_d1(g, dx), TrafficLayerParams(W1=W1, W2=W2, delta_t=delta_t))
                expected = h.data
            elif variant == "dm":
                out = dm_layer(h, build_base_difference(g), W1, delta_t)
                expected = h.data
            else:
                out = gcn_layer(h, normalized_adjacency(g), W1)
                expected = np.tile(np.maximum(row @ W1.data, 0.0), (g.num_nodes, 1))
            np.testing.assert_allclose(out.data, expected, atol=1e-10, err_msg=f"seed={seed}")


class TestEquivariance:
    """노드 재라벨링 → 예측도 같은 순열로 재배열"""

    @pytest.mark.parametrize("variant", ["river", "traffic", "gcn", "resgcn", "dm"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_permute_nodes(self, variant, seed):
        rng = np.random.default_rng(seed)
        g = traffic_network(rng) if variant == "traffic" else river_tree(rng)[0]
        config = ModelConfig(variant=variant, layers=2, hidden=4, window=3, edge_hidden=3, seed=seed)
        model = build_model(config, num_features=2, edge_dim=g.feature_dim)
        x = rng.normal(size=(4, 3, g.num_nodes, 2))
        perm = rng.permutation(g.num_nodes)

        original = model.predict(g, x)
        relabeled = model.predict(permute_nodes(g, perm), x[:, :, perm, :])
        np.testing.assert_allclose(relabeled, original[:, perm], atol=1e-10)


class TestSmoothing:
    """GCN 레이어별 과평활: temporal gradient 의 노드 간 퍼짐이 증가하지 않음"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_gcn_profile_non_increasing(self, seed):
        dataset = generate_river_dataset(seed=seed, steps=400)
        series = dataset.series.values
        values = (series - series.mean(axis=(0, 1))) / series.std(axis=(0, 1))
        x = np.stack([values[t - 3:t] for t in range(3, len(values))])
        model = GCNModel(ModelConfig(variant="gcn", layers=4, hidden=8, window=3, seed=seed), 2)
        with no_grad():
            layers = model.layer_embeddings(dataset.graph, x)
        embeddings = [h.data.reshape(len(x), dataset.graph.num_nodes, -1) for h in layers]
        profile = smoothing_profile(embeddings)
        assert all(b <= a for a, b in zip(profile, profile[1:])), profile


# ============================================
# 실행
# ============================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
