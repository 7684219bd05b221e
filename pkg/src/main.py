"""
통합 실행 엔트리포인트 (main.py)
=================================
데이터 생성, 학습, 평가, 실험을 설정 기반으로 재현 가능하게 실행합니다.

실행 방법:
  python -m src.main simulate --preset river-small --out runs/river/data
  python -m src.main train --preset river-small --dataset runs/river/data --out runs/river/forward
  python -m src.main train --preset river-small --dataset runs/river/data --reverse --out runs/river/reverse
  python -m src.main eval --dataset runs/river/data --checkpoint runs/river/forward/checkpoint
  python -m src.main ds-report --dataset runs/river/data \\
        --forward runs/river/forward/checkpoint --reverse-checkpoint runs/river/reverse/checkpoint
  python -m src.main perturb --dataset runs/river/data --checkpoint runs/river/forward/checkpoint --node r00
  python -m src.main spectrum --preset ring --out runs/spectrum
  python -m src.main inverse-demo --preset ring --out runs/inverse
  python -m src.main sweep --preset river-small --dataset runs/river/data --out runs/sweep
  python -m src.main report --run-dir runs/river

종료 코드:
  0 성공 | 2 설정 오류 | 3 데이터/프로토콜 오류 | 4 수치 발산 | 1 예기치 않은 오류
"""

import argparse
import glob
import hashlib
import logging
import os
import sys
import time
from dataclasses import asdict

import pandas as pd
from tabulate import tabulate

from .config_loader import ConfigLoader, RunConfig, config_hash, verify_manifest
from .diffops import spectrum_table
from .exceptions import (
    ConfigError,
    DataError,
    FluxFrameworkError,
    InstabilityError,
    ProtocolError,
    TrainingDivergedError,
    UndefinedReferenceError,
)
from .graph import DirectedGraph, directed_ring, load_graph, load_series, load_targets, reverse_topology
from .models import BaseModel, ModelConfig, build_model
from .pdesim import (
    INFLOW_KINDS,
    SimConfig,
    generate_river_dataset,
    generate_traffic_dataset,
    reverse_reconstruction_demo,
)
from .reporter import CSVReporter, HTMLReporter, JSONReporter
from .tensorad import load_checkpoint, save_checkpoint
from .traineval import (
    DSReport,
    PreparedData,
    evaluate_mse,
    horizon_sweep,
    perturbation_response,
    prepare_data,
    train,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"
DATASET_FILES = ("edges.csv", "series.csv", "targets.csv")
CHECKPOINT_DIR = "checkpoint"

# 플래그 → 설정 경로
OVERRIDES = {
    "seed": "seed",
    "out": "out",
    "kind": "simulation.kind",
    "steps": "simulation.steps",
    "dt": "simulation.dt",
    "nu": "simulation.nu",
    "noise_sigma": "simulation.noise_sigma",
    "inflow": "simulation.inflow",
    "variant": "model.variant",
    "layers": "model.layers",
    "hidden": "model.hidden",
    "window": "model.window",
    "horizon": "model.horizon",
    "epochs": "training.epochs",
    "lr": "training.lr",
    "batch_size": "training.batch_size",
    "stride": "training.stride",
    "reverse": "training.reverse",
    "node": "perturb.node",
    "delta": "perturb.delta",
    "ring_size": "spectrum.ring_size",
    "alphas": "spectrum.alphas",
    "demo_ring_size": "inverse_demo.ring_size",
    "demo_steps": "inverse_demo.steps",
    "cfl": "inverse_demo.cfl",
    "sigma": "inverse_demo.sigma",
    "horizons": "sweep.horizons",
    "variants": "sweep.variants",
    "dataset": "data.dataset",
    "checkpoint": "data.checkpoint",
    "forward": "data.checkpoint",
    "reverse_checkpoint": "data.reverse_checkpoint",
    "reference_ds": "data.reference_ds",
    "run_dir": "data.run_dir",
}


# ============================================
# 인자 파싱
# ============================================

def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def parse_args(argv=None):
    """커맨드라인 인자를 파싱합니다."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="실행 설정 파일 (YAML / JSON)")
    common.add_argument("--preset", type=str, default=None, help="프리셋 (river-small / traffic-small / ring)")
    common.add_argument("--seed", type=int, default=None, help="난수 시드")
    common.add_argument("--out", type=str, default=None, help="출력 디렉토리")

    parser = argparse.ArgumentParser(description="Flux Prediction Framework - 물리 기반 그래프 유량 예측")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="합성 데이터셋 생성")
    p.add_argument("--kind", choices=["river", "traffic"], default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--inflow", choices=list(INFLOW_KINDS), default=None)

    for name, help_text in (("train", "모델 학습"), ("sweep", "예측 시점 스윕")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--dataset", type=str, default=None)
        p.add_argument("--variant", type=str, default=None)
        p.add_argument("--layers", type=int, default=None)
        p.add_argument("--hidden", type=int, default=None)
        p.add_argument("--window", type=int, default=None)
        p.add_argument("--horizon", type=int, default=None)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--lr", type=float, default=None)
        p.add_argument("--batch-size", type=int, default=None)
        p.add_argument("--stride", type=int, default=None)
        if name == "train":
            p.add_argument("--reverse", action="store_true", default=None, help="역방향 토폴로지로 학습")
        else:
            p.add_argument("--horizons", type=_int_list, default=None, help="예: 3,6,9")
            p.add_argument("--variants", type=_str_list, default=None, help="예: river,gcn")

    p = sub.add_parser("eval", parents=[common], help="체크포인트 테스트 MSE")
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--checkpoint", type=str, default=None)

    p = sub.add_parser("ds-report", parents=[common], help="방향 민감도 리포트")
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--forward", type=str, default=None, help="정방향 체크포인트")
    p.add_argument("--reverse-checkpoint", type=str, default=None, help="역방향 체크포인트")
    p.add_argument("--reference-ds", type=float, default=None, help="RDS 기준 DS")

    p = sub.add_parser("perturb", parents=[common], help="교란 응답 곡선")
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--checkpoint", type=str, default=None)
    p.add_argument("--node", type=str, default=None, help="교란 노드 라벨 (기본: 첫 헤드워터)")
    p.add_argument("--delta", type=float, default=None)

    p = sub.add_parser("spectrum", parents=[common], help="주파수 응답 표")
    p.add_argument("--ring-size", type=int, default=None)
    p.add_argument("--alphas", type=_float_list, default=None, help="예: 0,0.5,1")

    p = sub.add_parser("inverse-demo", parents=[common], help="역방향 재구성 노이즈 증폭 데모")
    p.add_argument("--ring-size", dest="demo_ring_size", type=int, default=None)
    p.add_argument("--steps", dest="demo_steps", type=int, default=None)
    p.add_argument("--cfl", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)

    p = sub.add_parser("report", parents=[common], help="실행 디렉토리 HTML 요약")
    p.add_argument("--run-dir", type=str, default=None)

    return parser.parse_args(argv)


def load_run_config(args, base_dir: str = None) -> RunConfig:
    overrides = {path: getattr(args, attr) for attr, path in OVERRIDES.items() if hasattr(args, attr)}
    return ConfigLoader(base_dir).build(preset=args.preset, config_path=args.config, overrides=overrides)


def setup_logging(out_dir: str):
    """stdout + <out>/experiment.log (UTF-8)"""
    os.makedirs(out_dir, exist_ok=True)
    logging.basicConfig(
        level=logging.INFO,
        format=LOG_FORMAT,
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=[
            logging.StreamHandler(sys.stdout),
            logging.FileHandler(os.path.join(out_dir, "experiment.log"), encoding="utf-8"),
        ],
        force=True,
    )


# ============================================
# 공통 헬퍼
# ============================================

def _command_manifest(command: str, config: RunConfig, **extra) -> dict:
    tree = config.to_dict()
    tree.pop("out", None)
    manifest = {"command": command, "config": tree, "config_hash": config_hash(tree)}
    manifest.update(extra)
    return manifest


def dataset_hash(dataset_dir: str) -> str:
    digest = hashlib.sha256()
    for name in DATASET_FILES:
        with open(os.path.join(dataset_dir, name), "rb") as f:
            digest.update(f.read())
    return digest.hexdigest()


def load_dataset(dataset_dir: str):
    """(graph, series, targets, dataset_hash)"""
    if not dataset_dir:
        raise ConfigError("data.dataset (--dataset) 경로가 필요합니다.")
    for name in DATASET_FILES:
        path = os.path.join(dataset_dir, name)
        if not os.path.exists(path):
            raise FileNotFoundError(f"데이터셋 파일을 찾을 수 없습니다: {path}")
    graph = load_graph(os.path.join(dataset_dir, "edges.csv"))
    series = load_series(os.path.join(dataset_dir, "series.csv"), graph)
    targets = load_targets(os.path.join(dataset_dir, "targets.csv"), graph)
    if series.num_steps != targets.num_steps:
        raise DataError(f"시계열 길이 {series.num_steps} ≠ 타겟 길이 {targets.num_steps}")
    return graph, series, targets, dataset_hash(dataset_dir)


def _prepare(config_tree: dict, series, targets) -> PreparedData:
    model, training = config_tree["model"], config_tree["training"]
    return prepare_data(series, targets, model["window"], model["horizon"],
                        tuple(training["fractions"]), training["stride"])


def load_trained(checkpoint_dir: str, graph: DirectedGraph, ds_hash: str) -> tuple[BaseModel, dict]:
    """
    체크포인트를 읽어 모델을 복원합니다 (config_hash / dataset_hash 검증).

    Returns:
        (model, manifest)
    """
    if not checkpoint_dir:
        raise ConfigError("체크포인트 경로가 필요합니다 (--checkpoint).")
    params, manifest = load_checkpoint(checkpoint_dir)
    verify_manifest(manifest)
    tree = manifest["config"]
    if tree["dataset_hash"] != ds_hash:
        raise ProtocolError(f"체크포인트가 다른 데이터셋으로 학습되었습니다: {checkpoint_dir}")
    model_cfg = ModelConfig(seed=tree["seed"], **tree["model"])
    model = build_model(model_cfg, tree["num_features"], graph.feature_dim)
    model.load_state_dict(params)
    return model, manifest


def _topology(graph: DirectedGraph, manifest: dict) -> DirectedGraph:
    return reverse_topology(graph) if manifest["config"]["topology"] == "reverse" else graph


def _protocol_key(manifest: dict) -> dict:
    tree = manifest["config"]
    return {
        "dataset_hash": tree["dataset_hash"],
        "window": tree["model"]["window"],
        "horizon": tree["model"]["horizon"],
        "stride": tree["training"]["stride"],
        "fractions": list(tree["training"]["fractions"]),
    }


# ============================================
# 커맨드
# ============================================

def cmd_simulate(config: RunConfig) -> dict:
    """합성 데이터셋 → edges.csv, series.csv, targets.csv, manifest.json"""
    sim = config.simulation
    if sim.kind == "river":
        dataset = generate_river_dataset(
            seed=config.seed, steps=sim.steps, dt=sim.dt, g_const=sim.g_const, slope=sim.slope,
            nu=sim.nu, noise_sigma=sim.noise_sigma, base=sim.base, amplitude=sim.amplitude,
            period=sim.period, extended=sim.extended, inflow=sim.inflow,
        )
    else:
        dataset = generate_traffic_dataset(
            seed=config.seed, steps=sim.steps, dt=sim.dt, noise_sigma=sim.noise_sigma,
            base=sim.base, amplitude=sim.amplitude, period=sim.period, inflow=sim.inflow,
        )
    paths = CSVReporter(config.out).write_dataset(dataset.graph, dataset.series, dataset.targets)
    paths["manifest"] = JSONReporter(config.out).write(
        "manifest.json", _command_manifest("simulate", config, dataset=dataset.manifest))
    logger.info("   노드 %d개, 엣지 %d개, 스텝 %d", dataset.graph.num_nodes,
                dataset.graph.num_edges, dataset.series.num_steps)
    return paths


def cmd_train(config: RunConfig) -> dict:
    """체크포인트 + history.json (에폭별 Δt 포함)"""
    graph, series, targets, ds_hash = load_dataset(config.data.dataset)
    tree = {
        "model": asdict(config.model),
        "training": config.to_dict()["training"],
        "seed": config.seed,
        "topology": "reverse" if config.training.reverse else "forward",
        "dataset_hash": ds_hash,
        "num_features": len(series.variables),
    }
    data = _prepare(tree, series, targets)
    topology = _topology(graph, {"config": tree})

    model = build_model(ModelConfig(seed=config.seed, **asdict(config.model)),
                        len(series.variables), graph.feature_dim)
    t = config.training
    history = train(model, topology, data.samples, epochs=t.epochs, lr=t.lr,
                    seed=config.seed, batch_size=t.batch_size)

    manifest = {
        "config": tree,
        "config_hash": config_hash(tree),
        "model": model.manifest(),
        "split": data.split.to_dict(),
        "normalizer": data.series_norm.to_dict(),
        "target_normalizer": data.target_norm.to_dict(),
    }
    ckpt_dir = os.path.join(config.out, CHECKPOINT_DIR)
    save_checkpoint(ckpt_dir, model.params, manifest)
    history_payload = dict(history.to_dict(), config_hash=manifest["config_hash"], topology=tree["topology"])
    history_path = JSONReporter(config.out).write("history.json", history_payload)
    logger.info("   ⏱️  학습 시간: %.1fs, 최종 Δt: %s", history.wall_time, model.delta_t)
    return {"checkpoint": ckpt_dir, "history": history_path}


def cmd_eval(config: RunConfig) -> dict:
    """테스트 MSE → eval.json"""
    graph, series, targets, ds_hash = load_dataset(config.data.dataset)
    model, manifest = load_trained(config.data.checkpoint, graph, ds_hash)
    data = _prepare(manifest["config"], series, targets)
    test_mse = evaluate_mse(model, _topology(graph, manifest), data.samples["test"])
    payload = _command_manifest("eval", config, checkpoint_hash=manifest["config_hash"],
                                topology=manifest["config"]["topology"], test_mse=test_mse)
    path = JSONReporter(config.out).write("eval.json", payload)
    logger.info("   📈 test MSE = %.5f", test_mse)
    return {"eval": path, "test_mse": test_mse}


def cmd_ds_report(config: RunConfig) -> dict:
    """정방향 / 역방향 체크포인트 → ds_report.json"""
    graph, series, targets, ds_hash = load_dataset(config.data.dataset)
    forward, f_manifest = load_trained(config.data.checkpoint, graph, ds_hash)
    reverse, r_manifest = load_trained(config.data.reverse_checkpoint, graph, ds_hash)
    if _protocol_key(f_manifest) != _protocol_key(r_manifest):
        raise ProtocolError("두 체크포인트의 테스트 분할(데이터셋 / W / n / stride / 비율)이 다릅니다.")

    data = _prepare(f_manifest["config"], series, targets)
    test = data.samples["test"]
    loss_f = evaluate_mse(forward, _topology(graph, f_manifest), test)
    loss_r = evaluate_mse(reverse, _topology(graph, r_manifest), test)
    report = DSReport.from_losses(loss_f, loss_r, reference_ds=config.data.reference_ds)

    payload = _command_manifest("ds-report", config, report=report.to_dict(),
                                checkpoints=[f_manifest["config_hash"], r_manifest["config_hash"]],
                                delta_t=[forward.delta_t, reverse.delta_t])
    path = JSONReporter(config.out).write("ds_report.json", payload)
    rds = "-" if report.rds is None else f"{report.rds * 100:+.1f}%"
    logger.info("\n" + tabulate([[f"{loss_f:.4f}", f"{loss_r:.4f}", f"{report.ds:+.4f}", rds]],
                                headers=["Forward", "Reverse", "DS", "RDS"]))
    return {"ds_report": path, "report": report}


def cmd_perturb(config: RunConfig) -> dict:
    """교란 응답 → perturbation.csv (+ 3σ 밴드 perturbation.json)"""
    graph, series, targets, ds_hash = load_dataset(config.data.dataset)
    model, manifest = load_trained(config.data.checkpoint, graph, ds_hash)
    heads = graph.headwaters()
    label = config.perturb.node or graph.node_ids[heads[0] if heads else 0]
    node = graph.index_of(label)

    data = _prepare(manifest["config"], series, targets)
    result = perturbation_response(model, _topology(graph, manifest), data.samples["test"],
                                   node, config.perturb.delta)
    csv_path = CSVReporter(config.out).write_perturbation(result)
    payload = _command_manifest("perturb", config, checkpoint_hash=manifest["config_hash"],
                                topology=manifest["config"]["topology"], response=result.to_dict())
    json_path = JSONReporter(config.out).write("perturbation.json", payload)
    return {"perturbation": csv_path, "band": json_path, "result": result}


def cmd_spectrum(config: RunConfig) -> dict:
    """주파수 응답 표 → spectrum.csv"""
    s = config.spectrum
    rows = spectrum_table(s.ring_size, list(s.alphas))
    worst = max(abs(r["closed_form"] - r["empirical"]) for r in rows)
    path = CSVReporter(config.out).write_spectrum(rows)
    JSONReporter(config.out).write("manifest.json", _command_manifest("spectrum", config, max_abs_error=worst))
    logger.info("   최대 |closed − empirical| = %.3e", worst)
    return {"spectrum": path, "rows": rows}


def cmd_inverse_demo(config: RunConfig) -> dict:
    """역재구성 → inverse_demo.json"""
    demo = config.inverse_demo
    ring = directed_ring(demo.ring_size)
    sim = SimConfig(dt=demo.cfl, dx=1.0, steps=demo.steps, seed=config.seed)
    report = reverse_reconstruction_demo(ring, sim, demo.sigma)
    path = JSONReporter(config.out).write(
        "inverse_demo.json", _command_manifest("inverse-demo", config, report=report.to_dict()))
    return {"inverse_demo": path, "report": report}


def cmd_sweep(config: RunConfig) -> dict:
    """예측 시점 스윕 → sweep.csv (variant, horizon, test_mse)"""
    graph, series, targets, _ = load_dataset(config.data.dataset)
    t = config.training
    base = ModelConfig(seed=config.seed, **asdict(config.model))
    rows = horizon_sweep(graph, series, targets, base, tuple(config.sweep.variants),
                         tuple(config.sweep.horizons), tuple(t.fractions), t.stride,
                         epochs=t.epochs, lr=t.lr, batch_size=t.batch_size, seed=config.seed)
    path = CSVReporter(config.out).write_sweep(rows)
    JSONReporter(config.out).write("manifest.json", _command_manifest("sweep", config))
    logger.info("\n" + tabulate(rows, headers="keys", floatfmt=".5f"))
    return {"sweep": path, "rows": rows}


def _read_csv_rows(path: str) -> list[dict]:
    return pd.read_csv(path, dtype={"node": str, "variant": str}).to_dict("records")


def cmd_report(config: RunConfig) -> dict:
    """실행 디렉토리 요약 → report.html (manifest 해시 검증)"""
    run_dir = config.data.run_dir or config.out
    if not os.path.isdir(run_dir):
        raise FileNotFoundError(f"실행 디렉토리를 찾을 수 없습니다: {run_dir}")

    verified = 0
    for path in sorted(glob.glob(os.path.join(run_dir, "**", "*.json"), recursive=True)):
        payload = JSONReporter.read(path)
        if isinstance(payload, dict) and "config_hash" in payload and "config" in payload:
            verify_manifest(payload)
            verified += 1

    def find(name):
        found = sorted(glob.glob(os.path.join(run_dir, "**", name), recursive=True))
        return found[0] if found else None

    summary = {"title": os.path.basename(os.path.abspath(run_dir)), "histories": []}
    if find("ds_report.json"):
        ds_payload = JSONReporter.read(find("ds_report.json"))
        summary["ds"] = ds_payload["report"]
        summary["config_hash"] = ds_payload["config_hash"]
    for path in sorted(glob.glob(os.path.join(run_dir, "**", "history.json"), recursive=True)):
        h = JSONReporter.read(path)
        dts = [v for v in h["delta_t"] if v is not None]
        summary["histories"].append({
            "name": os.path.relpath(os.path.dirname(path), run_dir),
            "epochs": h["epochs"],
            "first_dt": round(dts[0], 4) if dts else None,
            "last_dt": round(dts[-1], 4) if dts else None,
            "last_val": h["val_loss"][-1] if h["val_loss"] else None,
        })
    if find("perturbation.csv"):
        summary["perturbation"] = _read_csv_rows(find("perturbation.csv"))
    if find("inverse_demo.json"):
        summary["inverse"] = JSONReporter.read(find("inverse_demo.json"))["report"]
    if find("sweep.csv"):
        summary["sweep"] = _read_csv_rows(find("sweep.csv"))

    path = HTMLReporter(config.out).generate(summary)
    logger.info("   manifest 해시 검증: %d건", verified)
    return {"report": path}


COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "eval": cmd_eval,
    "ds-report": cmd_ds_report,
    "perturb": cmd_perturb,
    "spectrum": cmd_spectrum,
    "inverse-demo": cmd_inverse_demo,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def exit_code_for(error: BaseException) -> int:
    """예외 → 종료 코드"""
    if isinstance(error, (ConfigError, UndefinedReferenceError)):
        return 2
    if isinstance(error, (InstabilityError, TrainingDivergedError)):
        return 4
    if isinstance(error, (FluxFrameworkError, FileNotFoundError, OSError)):
        return 3
    return 1


def run(argv=None, base_dir: str = None) -> int:
    """
    커맨드를 실행하고 종료 코드를 반환합니다.

    Args:
        argv: 커맨드라인 인자 (None 이면 sys.argv)
        base_dir: config/ 를 포함한 프로젝트 루트 (테스트용)
    """
    args = parse_args(argv)
    start_time = time.time()
    try:
        config = load_run_config(args, base_dir)
        setup_logging(config.out)
        logger.info("=" * 50)
        logger.info("🚀 %s 시작 (preset=%s, seed=%d, out=%s)", args.command, config.preset or "-",
                    config.seed, config.out)
        logger.info("=" * 50)
        COMMANDS[args.command](config)
    except (ConfigError, UndefinedReferenceError) as e:
        logger.error("🔴 설정 오류: %s", e)
        return exit_code_for(e)
    except (InstabilityError, TrainingDivergedError) as e:
        logger.error("🔴 수치 발산: %s", e)
        return exit_code_for(e)
    except (FluxFrameworkError, OSError) as e:
        logger.error("🔴 데이터 오류: %s", e)
        return exit_code_for(e)
    except Exception as e:
        logger.error("🔴 예기치 않은 오류: %s", e, exc_info=True)
        return 1

    logger.info("✨ %s 완료! (소요 시간: %.2f초)", args.command, time.time() - start_time)
    return 0


def main():
    """메인 함수"""
    sys.exit(run())


if __name__ == "__main__":
    main()
