"""Acceptance criteria for the rotation-augmentation pipeline.

Each test checks one release criterion against pinned tolerances and prints a
single PASS/FAIL line with the measured numbers.  The heavyweight criteria
share one 20-seed cartwheel benchmark (full grid, single-angle baseline, and
windowed variants) built once per module.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from rotpose.benchmark import (
    cartwheel,
    circular_correlation,
    compensating_angles,
    evaluate,
    generate_sequence,
    upright_walk,
)
from rotpose.cli import main
from rotpose.estimator import (
    SyntheticBackend,
    SyntheticEstimatorModel,
    parse_wire_poses,
)
from rotpose.geometry import (
    AngleGrid,
    RotationSpec,
    circular_distance,
    forward_map,
    inverse_map,
)
from rotpose.pipeline import PipelineConfig, run_sequence
from rotpose.reconstructor import ReconstructionState, reconstruct
from rotpose.selector import RotationCandidate, SelectorConfig, select_frame
from rotpose.skeleton import BODY_25

from conftest import flat_schema, make_pose

SEEDS = tuple(range(1, 21))
BRIDGE_FIXTURES = Path(__file__).parent / "data" / "bridge"


def verdict(number: int, name: str, ok: bool, detail: str) -> str:
    line = f"acceptance {number} ({name}): {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    return line


@pytest.fixture(scope="module")
def suite():
    """Per-seed cartwheel runs: full grid, theta=0 baseline, windowed grid."""
    runs = {}
    t0 = time.perf_counter()
    for seed in SEEDS:
        frames = generate_sequence(cartwheel(), seed=seed)
        model = SyntheticEstimatorModel(rng_seed=seed)
        full = run_sequence(frames, SyntheticBackend(model, BODY_25),
                            PipelineConfig())
        raw = run_sequence(frames, SyntheticBackend(model, BODY_25),
                           PipelineConfig(step=360.0))
        runs[seed] = {
            "frames": frames,
            "gt": [f.truth for f in frames],
            "full": full,
            "raw": raw,
        }
    bench_elapsed = time.perf_counter() - t0
    for seed in SEEDS:
        model = SyntheticEstimatorModel(rng_seed=seed)
        runs[seed]["windowed"] = run_sequence(
            runs[seed]["frames"], SyntheticBackend(model, BODY_25),
            PipelineConfig(angle_window=30.0),
        )
    return {"runs": runs, "bench_elapsed": bench_elapsed}


def test_criterion_1_geometry_round_trip():
    """Mapping 10,000 points out and back stays under 1e-9 px, in under 1s."""
    rng = np.random.default_rng(2024)
    grid = AngleGrid(10.0).angles
    sizes = ((640, 480), (1920, 1080), (333, 717))
    worst = 0.0
    t0 = time.perf_counter()
    remaining = 10_000
    batches = []
    for theta in grid:
        batches.append((float(theta), 200))
        remaining -= 200
    while remaining > 0:
        batches.append((float(rng.uniform(0.0, 360.0)), min(200, remaining)))
        remaining -= 200
    total = 0
    for theta, count in batches:
        size = sizes[total % len(sizes)]
        spec = RotationSpec.for_rotation(theta, size)
        pts = rng.uniform(-100.0, 2100.0, size=(count, 2))
        back = inverse_map(forward_map(pts, spec), spec)
        worst = max(worst, float(np.abs(back - pts).max()))
        total += count
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 1.0 and total == 10_000
    line = verdict(1, "geometry round-trip", ok,
                   f"{total} points, max err {worst:.3e} (tol 1e-9), "
                   f"{elapsed:.2f}s (limit 1s)")
    assert ok, line


def _oracle_distance(cur, prev, floor, exclude_head, normalization, schema):
    shared = []
    for k in range(schema.joint_count):
        if exclude_head and k in schema.head_joints:
            continue
        if cur.keypoints[k][2] > floor and prev.keypoints[k][2] > floor:
            shared.append(k)
    if not shared:
        return None
    raw = 0.0
    for k in shared:
        raw += math.hypot(cur.keypoints[k][0] - prev.keypoints[k][0],
                          cur.keypoints[k][1] - prev.keypoints[k][1])
    if normalization == "raw_sum":
        return raw
    total = schema.joint_count
    if exclude_head:
        total -= len(schema.head_joints)
    return raw * (total / len(shared))


def _oracle_select(cands, prev, cfg, schema):
    def circ_to_zero(theta):
        d = abs(theta) % 360.0
        return min(d, 360.0 - d)

    def conf_key(item):
        theta, mean_conf, _ = item
        return (-mean_conf, circ_to_zero(theta), theta)

    scored = [
        (c.theta, c.mean_conf,
         _oracle_distance(c.pose, prev, cfg.confidence_floor, cfg.exclude_head,
                          cfg.distance_normalization, schema))
        for c in cands
    ]
    eligible = [s for s in scored
                if s[2] is not None and s[2] <= cfg.distance_threshold]
    if not eligible:
        return min(scored, key=conf_key)[0], True
    eligible.sort(key=lambda s: (s[2],) + conf_key(s))
    return min(eligible[: cfg.top_k], key=conf_key)[0], False


def test_criterion_2_selection_matches_brute_force():
    """200 random 36-candidate selections agree with an explicit-loop oracle."""
    rng = np.random.default_rng(2024)
    thetas = [10.0 * i for i in range(36)]
    mismatches = 0
    t0 = time.perf_counter()
    for trial in range(200):
        cfg = SelectorConfig(
            top_k=int(rng.choice([1, 2, 5])),
            distance_threshold=float(rng.choice([60.0, 300.0, 500.0])),
            exclude_head=bool(rng.integers(2)),
            distance_normalization=("raw_sum", "scaled_to_full")[
                int(rng.integers(2))],
        )
        base = 10000.0 if trial % 7 == 0 else 0.0
        prev = make_pose(BODY_25, base + rng.uniform(0, 50, size=(25, 2)),
                         (rng.uniform(size=25) > 0.2).astype(float))
        cands = []
        for theta in thetas:
            conf = (rng.uniform(size=25) > 0.3).astype(float)
            if rng.uniform() < 0.03:
                conf[:] = 0.0
            cands.append(RotationCandidate(
                theta=theta,
                pose=make_pose(BODY_25, rng.uniform(0, 50, size=(25, 2)), conf),
                mean_conf=float(np.round(rng.uniform(), 1)),
            ))
        winner, diag = select_frame(cands, prev, cfg, BODY_25)
        want_theta, want_fallback = _oracle_select(cands, prev, cfg, BODY_25)
        if winner.theta != want_theta or diag.fallback != want_fallback:
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 5.0
    line = verdict(2, "selection vs brute force", ok,
                   f"{200 - mismatches}/200 trials agree, "
                   f"{elapsed:.2f}s (limit 5s)")
    assert ok, line


def test_criterion_3_reconstruction_decay():
    """With w=0.8 the error to a constant target shrinks 5x per frame."""
    schema = flat_schema(2)
    start = make_pose(schema, [(100.0, -50.0), (37.0, 81.0)])
    target = make_pose(schema, np.zeros((2, 2)))
    state = ReconstructionState(w=0.8)
    reconstruct(start, state)
    errs = [float(np.abs(start.xy).max())]
    for _ in range(20):
        out = reconstruct(target, state)
        errs.append(float(np.abs(out.xy).max()))
    ratios = [b / a for a, b in zip(errs, errs[1:])]
    worst = max(abs(r / 0.2 - 1.0) for r in ratios)
    ok = worst <= 1e-12 and len(ratios) == 20
    line = verdict(3, "reconstruction decay", ok,
                   f"20 steps, worst ratio deviation {worst:.3e} (tol 1e-12)")
    assert ok, line


def test_criterion_4_defaults(tmp_path):
    """Library and CLI defaults: step 10, w 0.8, top_k 5, threshold 500."""
    cfg = PipelineConfig()
    sel = SelectorConfig()
    lib_ok = (cfg.step == 10.0 and cfg.w == 0.8 and cfg.angle_window is None
              and sel.top_k == 5 and sel.distance_threshold == 500.0
              and sel.confidence_floor == 0.05 and sel.exclude_head is True)

    out = tmp_path / "bare"
    code = main(["run", "--script", "cartwheel", "--frames-count", "5",
                 "--out", str(out)])
    manifest = json.loads((out / "run_manifest.json").read_text())
    got = manifest["config"]
    cli_ok = (code == 0 and got["step"] == 10.0 and got["w"] == 0.8
              and got["angle_window"] is None
              and got["selector"]["top_k"] == 5
              and got["selector"]["distance_threshold"] == 500.0)
    ok = lib_ok and cli_ok
    line = verdict(4, "default parameters", ok,
                   f"library defaults {'ok' if lib_ok else 'WRONG'}, "
                   f"bare-run manifest {'ok' if cli_ok else 'WRONG'}")
    assert ok, line


def test_criterion_5_benchmark_improvement(suite):
    """Across 20 seeds the augmented run must beat the raw baseline."""
    conf_wins = mpjpe_wins = 0
    for seed in SEEDS:
        run = suite["runs"][seed]
        report = evaluate(run["full"], run["gt"], run["raw"])
        if report.mean_conf_augmented > report.mean_conf_raw:
            conf_wins += 1
        if report.mpjpe_augmented < 0.5 * report.mpjpe_raw:
            mpjpe_wins += 1
    elapsed = suite["bench_elapsed"]
    ok = conf_wins >= 18 and mpjpe_wins >= 16 and elapsed < 30.0
    line = verdict(5, "benchmark improvement", ok,
                   f"confidence wins {conf_wins}/20 (need 18), "
                   f"mpjpe halved {mpjpe_wins}/20 (need 16), "
                   f"runs took {elapsed:.1f}s (limit 30s)")
    assert ok, line


def test_criterion_6_angle_tracking(suite):
    """Selected angles follow the motion: correlated on a cartwheel, near
    zero when the figure stays upright."""
    run = suite["runs"][1]
    selected = [r.selected_theta for r in run["full"]]
    corr = circular_correlation(selected, compensating_angles(run["frames"]))

    upright = generate_sequence(upright_walk(), seed=1)
    model = SyntheticEstimatorModel(rng_seed=1)
    results = run_sequence(upright, SyntheticBackend(model, BODY_25),
                           PipelineConfig())
    near_zero = np.mean([
        circular_distance(r.selected_theta, 0.0) <= 30.0 for r in results
    ])
    ok = corr > 0.8 and near_zero >= 0.8
    line = verdict(6, "angle tracking", ok,
                   f"cartwheel circular corr {corr:.3f} (need 0.8), "
                   f"upright frames within 30 deg: {near_zero:.0%} (need 80%)")
    assert ok, line


def test_criterion_7_windowed_efficiency(suite):
    """A 30-degree window cuts estimator calls by 75% at <=20% mpjpe cost."""
    calls_full = calls_windowed = 0
    degradations = []
    for seed in SEEDS:
        run = suite["runs"][seed]
        calls_full += sum(r.estimator_calls for r in run["full"])
        calls_windowed += sum(r.estimator_calls for r in run["windowed"])
        full_mpjpe = evaluate(run["full"], run["gt"], run["raw"]).mpjpe_augmented
        win_mpjpe = evaluate(run["windowed"], run["gt"],
                             run["raw"]).mpjpe_augmented
        degradations.append((win_mpjpe - full_mpjpe) / full_mpjpe)
    reduction = 1.0 - calls_windowed / calls_full
    degradation = float(np.mean(degradations))
    ok = reduction >= 0.75 and degradation <= 0.20
    line = verdict(7, "windowed efficiency", ok,
                   f"calls {calls_windowed} vs {calls_full} "
                   f"({reduction:.1%} reduction, need 75%), "
                   f"mean mpjpe degradation {degradation:+.1%} (limit +20%)")
    assert ok, line


def test_criterion_8_deterministic_artifacts(tmp_path):
    """Identical artifact bytes regardless of the parallelism setting."""
    frames = generate_sequence(cartwheel(frames=20), seed=1)
    dirs = []
    for name, par in (("p1", 1), ("p4", 4)):
        out = tmp_path / name
        model = SyntheticEstimatorModel(rng_seed=1)
        run_sequence(frames, SyntheticBackend(model, BODY_25),
                     PipelineConfig(parallelism=par), output_dir=out)
        dirs.append(out)
    a, b = dirs
    files = ("poses.jsonl", "confidence.csv", "theta.csv")
    same = {f: (a / f).read_bytes() == (b / f).read_bytes() for f in files}
    ok = all(same.values())
    line = verdict(8, "deterministic artifacts", ok,
                   "parallelism 1 vs 4 byte-identical: "
                   + ", ".join(f"{f} {'yes' if v else 'NO'}"
                               for f, v in same.items()))
    assert ok, line


def test_criterion_9_bridge_fixtures():
    """Recorded adapter outputs parse as wire documents; the upright-person
    image must contain a detection."""
    if not BRIDGE_FIXTURES.is_dir():
        pytest.skip("bridge fixture outputs not generated yet")
    docs = sorted(BRIDGE_FIXTURES.glob("*.json"))
    parsed = {}
    for path in docs:
        parsed[path.name] = parse_wire_poses(path.read_text(), BODY_25)
    people_in_upright = len(parsed.get("astronaut.json", []))
    ok = len(docs) >= 3 and people_in_upright >= 1
    line = verdict(9, "external adapter bridge", ok,
                   f"{len(docs)} fixture documents parsed (need 3), "
                   f"upright image has {people_in_upright} person(s) (need 1)")
    assert ok, line
