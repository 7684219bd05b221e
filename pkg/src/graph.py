"""
방향 흐름 그래프 (Directed Flow Graph)
======================================
노드/엣지 토폴로지, 엣지 특성, 노드 시계열을 담는 데이터 모델과
CSV 적재/저장, 토폴로지 역전, 합성 토폴로지 생성기를 제공합니다.

파일 스키마 (UTF-8):
  - 엣지 CSV     : src,dst,f1,...,fq        (엣지 1개당 1행)
  - 노드 시계열  : time,node,v1,...,vp      (모든 (time, node) 쌍 존재)
  - 타겟 CSV     : time,node,y

노드 ID 규칙:
  - 외부 라벨은 문자열, 내부 ID는 라벨 사전순 정렬 순서 (실행 간 결정적)
  - self-loop / 중복 엣지는 스키마 오류
"""

import csv
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from .exceptions import DataError, SchemaError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """
    방향 그래프 G(A) = (V, E)

    Attributes:
        num_nodes: |V|
        edges: (E, 2) 정수 배열, 각 행은 (src, dst)
        edge_features: (E, q) 실수 배열, 엣지 특성 e_ij
        node_ids: 내부 ID 순서의 외부 라벨
    """
    num_nodes: int
    edges: np.ndarray
    edge_features: np.ndarray
    node_ids: tuple = ()
    _upstream: tuple = field(default=(), repr=False, compare=False)
    _downstream: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        feats = np.asarray(self.edge_features, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats.reshape(len(edges), -1) if len(edges) else feats.reshape(0, 0)
        if feats.shape[0] != edges.shape[0]:
            raise SchemaError(
                f"엣지 특성 행 수({feats.shape[0]})가 엣지 수({edges.shape[0]})와 다릅니다."
            )
        if len(edges):
            if edges.min() < 0 or edges.max() >= self.num_nodes:
                raise SchemaError("엣지가 범위 밖의 노드를 참조합니다.")
            loops = edges[:, 0] == edges[:, 1]
            if loops.any():
                raise SchemaError(f"self-loop 엣지는 허용되지 않습니다: {edges[loops][0].tolist()}")
            pairs = {tuple(e) for e in edges.tolist()}
            if len(pairs) != len(edges):
                raise SchemaError("중복 엣지 (src, dst)가 존재합니다.")
        if not np.all(np.isfinite(feats)):
            raise DataError("엣지 특성에 NaN/Inf 값이 있습니다.")

        node_ids = tuple(self.node_ids) or tuple(str(i) for i in range(self.num_nodes))
        if len(node_ids) != self.num_nodes:
            raise SchemaError("node_ids 길이가 num_nodes와 다릅니다.")

        upstream = [[] for _ in range(self.num_nodes)]
        downstream = [[] for _ in range(self.num_nodes)]
        for e, (s, d) in enumerate(edges.tolist()):
            upstream[d].append((s, e))
            downstream[s].append((d, e))

        edges.setflags(write=False)
        feats.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "edge_features", feats)
        object.__setattr__(self, "node_ids", node_ids)
        object.__setattr__(self, "_upstream", tuple(tuple(sorted(u)) for u in upstream))
        object.__setattr__(self, "_downstream", tuple(tuple(sorted(d)) for d in downstream))

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def feature_dim(self) -> int:
        """엣지 특성 차원 q"""
        return int(self.edge_features.shape[1]) if self.edge_features.ndim == 2 else 0

    def index_of(self, label: str) -> int:
        """외부 라벨 → 내부 ID"""
        try:
            return self.node_ids.index(str(label))
        except ValueError:
            raise SchemaError(f"알 수 없는 노드 라벨입니다: {label}") from None

    def edge_set(self) -> set:
        return {tuple(e) for e in self.edges.tolist()}

    def headwaters(self) -> list[int]:
        """상류 이웃이 없는 노드 (경계 행 규칙 적용 대상)"""
        return [i for i in range(self.num_nodes) if not self._upstream[i]]

    def __repr__(self) -> str:
        return f"DirectedGraph(nodes={self.num_nodes}, edges={self.num_edges}, q={self.feature_dim})"


@dataclass(frozen=True, eq=False)
class NodeSeries:
    """
    노드 시계열 X

    Attributes:
        values: (T_total, |V|, p) 배열
        variables: 변수 이름 (길이 p)
    """
    values: np.ndarray
    variables: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise DataError(f"노드 시계열은 3차원(T, |V|, p)이어야 합니다: {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("노드 시계열에 NaN/Inf 값이 있습니다.")
        variables = tuple(self.variables) or tuple(f"v{k + 1}" for k in range(values.shape[2]))
        if len(variables) != values.shape[2]:
            raise DataError("변수 이름 수가 p와 다릅니다.")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variables", variables)

    @property
    def num_steps(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True, eq=False)
class Targets:
    """유량 타겟 y, (T_total, |V|)"""
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"타겟은 2차원(T, |V|)이어야 합니다: {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("타겟에 NaN/Inf 값이 있습니다.")
        object.__setattr__(self, "values", values)

    @property
    def num_steps(self) -> int:
        return int(self.values.shape[0])


# ============================================
# 토폴로지 질의 / 변환
# ============================================

def upstream_neighbors(g: DirectedGraph, i: int) -> list[tuple[int, int]]:
    """
    노드 i의 상류 이웃 {j : (j, i) ∈ E}를 (노드 ID, 엣지 인덱스) 목록으로 반환합니다.
    j 오름차순으로 정렬됩니다.
    """
    if not 0 <= i < g.num_nodes:
        raise IndexError(f"노드 ID {i}가 범위를 벗어났습니다 (|V|={g.num_nodes}).")
    return list(g._upstream[i])


def downstream_neighbors(g: DirectedGraph, i: int) -> list[tuple[int, int]]:
    """노드 i의 하류 이웃 {j : (i, j) ∈ E}"""
    if not 0 <= i < g.num_nodes:
        raise IndexError(f"노드 ID {i}가 범위를 벗어났습니다 (|V|={g.num_nodes}).")
    return list(g._downstream[i])


def reverse_topology(g: DirectedGraph) -> DirectedGraph:
    """모든 엣지 (s, d)를 (d, s)로 뒤집습니다. 엣지 특성과 순서는 유지됩니다."""
    return DirectedGraph(
        num_nodes=g.num_nodes,
        edges=g.edges[:, ::-1].copy(),
        edge_features=g.edge_features.copy(),
        node_ids=g.node_ids,
    )


def permute_nodes(g: DirectedGraph, perm: np.ndarray) -> DirectedGraph:
    """
    노드 재라벨링: 새 ID k는 기존 ID perm[k]에 해당합니다.
    (라벨은 함께 이동하므로 외부 라벨 기준으로는 같은 그래프)
    """
    perm = np.asarray(perm, dtype=np.int64)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(len(perm))
    return DirectedGraph(
        num_nodes=g.num_nodes,
        edges=inverse[g.edges],
        edge_features=g.edge_features.copy(),
        node_ids=tuple(g.node_ids[p] for p in perm),
    )


# ============================================
# CSV 적재 / 저장
# ============================================

def _read_csv(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise FileNotFoundError(f"파일을 찾을 수 없습니다: {path}")
    return pd.read_csv(path, dtype={"src": str, "dst": str, "node": str}, encoding="utf-8")


def load_graph(edge_file: str, feature_file: Optional[str] = None) -> DirectedGraph:
    """
    엣지 CSV(및 선택적 엣지 특성 CSV)를 읽어 DirectedGraph를 생성합니다.

    Args:
        edge_file: 헤더 `src,dst[,f1,...,fq]`
        feature_file: 헤더 `src,dst,f1,...,fq` (지정 시 엣지 파일의 특성 열을 대체)

    Returns:
        불변식이 검증된 DirectedGraph
    """
    edges_df = _read_csv(edge_file)
    if list(edges_df.columns[:2]) != ["src", "dst"]:
        raise SchemaError(f"엣지 CSV 헤더는 src,dst로 시작해야 합니다: {list(edges_df.columns)}")

    keys = list(zip(edges_df["src"], edges_df["dst"]))
    if len(set(keys)) != len(keys):
        dup = next(k for k in keys if keys.count(k) > 1)
        raise SchemaError(f"중복 엣지가 있습니다: {dup[0]}→{dup[1]}")

    labels = sorted(set(edges_df["src"]) | set(edges_df["dst"]))
    index = {label: i for i, label in enumerate(labels)}

    if feature_file is not None:
        feat_df = _read_csv(feature_file)
        if list(feat_df.columns[:2]) != ["src", "dst"]:
            raise SchemaError("엣지 특성 CSV 헤더는 src,dst로 시작해야 합니다.")
        lookup = {}
        known = set(keys)
        for row in feat_df.itertuples(index=False):
            key = (row[0], row[1])
            if key not in known:
                raise SchemaError(f"특성 파일이 존재하지 않는 엣지를 참조합니다: {key[0]}→{key[1]}")
            lookup[key] = [float(v) for v in row[2:]]
        missing = [k for k in keys if k not in lookup]
        if missing:
            raise SchemaError(f"특성이 없는 엣지가 있습니다: {missing[0][0]}→{missing[0][1]}")
        features = np.array([lookup[k] for k in keys], dtype=np.float64)
    else:
        features = edges_df.iloc[:, 2:].to_numpy(dtype=np.float64)

    if not np.all(np.isfinite(features)):
        raise DataError("엣지 특성에 NaN/Inf 값이 있습니다.")

    graph = DirectedGraph(
        num_nodes=len(labels),
        edges=np.array([[index[s], index[d]] for s, d in keys], dtype=np.int64).reshape(-1, 2),
        edge_features=features.reshape(len(keys), features.shape[1] if features.ndim == 2 else 0),
        node_ids=tuple(labels),
    )
    logger.info("📂 그래프 적재: %s (%s)", edge_file, graph)
    return graph


def save_graph(g: DirectedGraph, path: str) -> str:
    """엣지 CSV로 저장합니다 (load_graph와 왕복 가능)."""
    header = ["src", "dst"] + [f"f{k + 1}" for k in range(g.feature_dim)]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for (s, d), feats in zip(g.edges.tolist(), g.edge_features.tolist()):
            writer.writerow([g.node_ids[s], g.node_ids[d]] + [repr(float(v)) for v in feats])
    return path


def load_series(path: str, g: DirectedGraph) -> NodeSeries:
    """
    노드 시계열 CSV (`time,node,v1,...,vp`)를 (T, |V|, p) 배열로 적재합니다.
    모든 (time, node) 쌍이 존재해야 합니다.
    """
    df = _read_csv(path)
    if list(df.columns[:2]) != ["time", "node"]:
        raise SchemaError("노드 시계열 CSV 헤더는 time,node로 시작해야 합니다.")
    variables = tuple(df.columns[2:])
    if not variables:
        raise SchemaError("노드 시계열에 변수 열이 없습니다.")

    unknown = set(df["node"]) - set(g.node_ids)
    if unknown:
        raise SchemaError(f"그래프에 없는 노드를 참조합니다: {sorted(unknown)[:3]}")

    times = np.sort(df["time"].unique())
    if len(df) != len(times) * g.num_nodes or df.duplicated(["time", "node"]).any():
        raise SchemaError("노드 시계열이 조밀하지 않습니다 (모든 (time, node) 쌍 필요).")

    t_index = np.searchsorted(times, df["time"].to_numpy())
    n_index = np.array([g.index_of(n) for n in df["node"]])
    values = np.empty((len(times), g.num_nodes, len(variables)))
    values[t_index, n_index, :] = df.iloc[:, 2:].to_numpy(dtype=np.float64)
    return NodeSeries(values=values, variables=variables)


def load_targets(path: str, g: DirectedGraph) -> Targets:
    """타겟 CSV (`time,node,y`)를 (T, |V|) 배열로 적재합니다."""
    df = _read_csv(path)
    if list(df.columns) != ["time", "node", "y"]:
        raise SchemaError(f"타겟 CSV 헤더는 time,node,y 이어야 합니다: {list(df.columns)}")
    unknown = set(df["node"]) - set(g.node_ids)
    if unknown:
        raise SchemaError(f"그래프에 없는 노드를 참조합니다: {sorted(unknown)[:3]}")
    times = np.sort(df["time"].unique())
    if len(df) != len(times) * g.num_nodes or df.duplicated(["time", "node"]).any():
        raise SchemaError("타겟 CSV가 조밀하지 않습니다.")
    values = np.empty((len(times), g.num_nodes))
    values[np.searchsorted(times, df["time"].to_numpy()),
           [g.index_of(n) for n in df["node"]]] = df["y"].to_numpy(dtype=np.float64)
    return Targets(values=values)


# ============================================
# 합성 토폴로지
# ============================================

def path_graph(n: int, dx: float = 1.0) -> DirectedGraph:
    """v0 → v1 → ... → v(n-1) 경로 그래프 (특성: [dx])"""
    width = len(str(n - 1))
    return DirectedGraph(
        num_nodes=n,
        edges=np.array([[i, i + 1] for i in range(n - 1)], dtype=np.int64).reshape(-1, 2),
        edge_features=np.full((n - 1, 1), float(dx)),
        node_ids=tuple(f"v{i:0{width}d}" for i in range(n)),
    )


def directed_ring(n: int, dx: float = 1.0) -> DirectedGraph:
    """i → (i+1) mod n 방향 링 (모든 노드의 상류 이웃이 정확히 1개)"""
    width = len(str(n - 1))
    return DirectedGraph(
        num_nodes=n,
        edges=np.array([[i, (i + 1) % n] for i in range(n)], dtype=np.int64),
        edge_features=np.full((n, 1), float(dx)),
        node_ids=tuple(f"v{i:0{width}d}" for i in range(n)),
    )


# 16노드 하천 트리 (src → dst). 헤드워터: r00, r01, r04, r07, r10, r13 / 유출구: r15
RIVER_TREE_EDGES = [
    ("r00", "r02"), ("r01", "r02"), ("r02", "r03"), ("r03", "r06"),
    ("r04", "r05"), ("r05", "r06"), ("r06", "r09"), ("r07", "r08"),
    ("r08", "r09"), ("r09", "r12"), ("r10", "r11"), ("r11", "r12"),
    ("r12", "r15"), ("r13", "r14"), ("r14", "r15"),
]

# 12노드 교통망: 8노드 순환 + 우회 루프 (2 → 8 → 9 → 10 → 11 → 6)
TRAFFIC_EDGES = [
    ("t00", "t01"), ("t01", "t02"), ("t02", "t03"), ("t03", "t04"),
    ("t04", "t05"), ("t05", "t06"), ("t06", "t07"), ("t07", "t00"),
    ("t02", "t08"), ("t08", "t09"), ("t09", "t10"), ("t10", "t11"),
    ("t11", "t06"),
]


def river_tree(rng: np.random.Generator, slope: float = 0.01,
               length_range: tuple = (0.8, 1.2)) -> tuple[DirectedGraph, np.ndarray]:
    """
    16노드 하천 트리와 노드 고도를 생성합니다.

    엣지 특성 (q=3): [length, slope, distance]
      - length   : 엣지 길이 Δx
      - slope    : (z_dst - z_src) / Δx  (하류 방향 음수)
      - distance : 엣지 하류 끝에서 유출구까지의 경로 길이

    Returns:
        (graph, elevation): elevation은 내부 ID 순서의 노드 고도 z
    """
    labels = sorted({n for e in RIVER_TREE_EDGES for n in e})
    index = {label: i for i, label in enumerate(labels)}
    edges = np.array([[index[s], index[d]] for s, d in RIVER_TREE_EDGES], dtype=np.int64)
    lengths = rng.uniform(length_range[0], length_range[1], size=len(edges))

    # 유출구에서 거꾸로 올라가며 고도/거리 누적
    outlet = index["r15"]
    downstream = {int(s): (int(d), e) for e, (s, d) in enumerate(edges)}
    distance = np.zeros(len(labels))
    for node in range(len(labels)):
        cur, total = node, 0.0
        while cur != outlet:
            nxt, e = downstream[cur]
            total += lengths[e]
            cur = nxt
        distance[node] = total
    elevation = slope * distance

    dz = elevation[edges[:, 1]] - elevation[edges[:, 0]]
    features = np.column_stack([lengths, dz / lengths, distance[edges[:, 1]]])
    graph = DirectedGraph(num_nodes=len(labels), edges=edges,
                          edge_features=features, node_ids=tuple(labels))
    return graph, elevation


def traffic_network(rng: np.random.Generator,
                    length_range: tuple = (0.8, 1.2)) -> DirectedGraph:
    """
    12노드 순환 교통망을 생성합니다.
    엣지 특성 (q=2): [length, lanes]
    """
    labels = sorted({n for e in TRAFFIC_EDGES for n in e})
    index = {label: i for i, label in enumerate(labels)}
    edges = np.array([[index[s], index[d]] for s, d in TRAFFIC_EDGES], dtype=np.int64)
    lengths = rng.uniform(length_range[0], length_range[1], size=len(edges))
    lanes = rng.integers(1, 4, size=len(edges)).astype(np.float64)
    return DirectedGraph(num_nodes=len(labels), edges=edges,
                         edge_features=np.column_stack([lengths, lanes]),
                         node_ids=tuple(labels))
