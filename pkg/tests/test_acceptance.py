"""Acceptance criteria, one printed PASS/FAIL/SKIP line each.

Criteria 3, 7 and 8 need the real datasets: point ``TENSORGCN_DATA`` at a
directory holding the SNAP/Konect files. Criterion 8 trains the full alpha
sweep for five seeds on every dataset (hours of CPU) and additionally needs
``TENSORGCN_RUN_REPRO=1``; ``TENSORGCN_REPRO_DATASETS`` restricts it to a
comma-separated subset.
"""
import os
import time

import numpy as np
import pytest

from tensorgcn import spectral as spc
from tensorgcn.cli import main
from tensorgcn.config import DATA_ENV, ExperimentConfig
from tensorgcn.data import DATASETS, find_dataset, load_graph
from tensorgcn.errors import DataError
from tensorgcn.experiment import prepare, run
from tensorgcn.model import Window, forward, init_params
from tensorgcn.tensor import (
    MixingMatrix,
    banded_m,
    frobenius,
    from_shared_slice,
    identity_tensor,
    m_product,
    m_transform,
    tensor_transpose,
    transform_slices,
)
from tensorgcn.verify import algebra_suite, dataset_bound, gradient_suite, polynomial_checks

from conftest import synthetic_bitcoin

TARGET_PLAIN = {"bitcoin_otc": 0.3529, "bitcoin_alpha": 0.2331, "reddit": 0.2028, "chess": 0.4708}
TARGET_SYMMETRIC = {"bitcoin_otc": 0.3103, "bitcoin_alpha": 0.2207, "reddit": 0.2071, "chess": 0.4713}
REPRO_TOL = 0.08
REPRO_SEEDS = range(5)


def emit(capsys, num, title, status, detail, elapsed):
    with capsys.disabled():
        print(f"\n[criterion {num}] {status:<4s} {title}: {detail} ({elapsed:.1f} s)")


def check(capsys, num, title, passed, detail, elapsed):
    emit(capsys, num, title, "PASS" if passed else "FAIL", detail, elapsed)
    assert passed, detail


def skip(capsys, num, title, reason):
    emit(capsys, num, title, "SKIP", reason, 0.0)
    pytest.skip(reason)


def data_root():
    return os.environ.get(DATA_ENV)


def available(kind):
    root = data_root()
    if not root:
        return None
    try:
        return find_dataset(kind, root)
    except DataError:
        return None


def test_c1_algebra_suite(capsys):
    start = time.perf_counter()
    results = algebra_suite(trials=100, seed=2024)
    elapsed = time.perf_counter() - start
    bad = [r.name for r in results if not r.passed]
    detail = ("all invariants hold over 100 random instances" if not bad else f"failed: {bad}") + \
        "; " + ", ".join(f"{r.name.split(' (')[0]}={r.observed:.1e}" for r in results[:6])
    check(capsys, 1, "tensor algebra invariants", not bad and elapsed < 30, detail, elapsed)


def test_c2_eigendecomposition(capsys):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    worst_rec = worst_orth = 0.0
    sizes = [(50, 10), (50, 1), (1, 10)] + [(int(rng.integers(2, 51)), int(rng.integers(1, 11)))
                                             for _ in range(27)]
    for k, (n, t) in enumerate(sizes):
        if k % 2:
            m = banded_m(t, int(rng.integers(1, t + 1)))
        else:
            m = MixingMatrix(np.eye(t) + 0.3 * rng.standard_normal((t, t)) / np.sqrt(t))
        x = rng.standard_normal((n, n, t))
        x = x + x.transpose(1, 0, 2)
        eig = spc.tensor_eig(x, m)
        worst_rec = max(worst_rec, frobenius(eig.reconstruct() - x) / frobenius(x))
        qqt = m_product(eig.q, tensor_transpose(eig.q, m), m)
        worst_orth = max(worst_orth, frobenius(qqt - identity_tensor(n, t, m)))
    elapsed = time.perf_counter() - start
    ok = worst_rec <= 1e-7 and worst_orth <= 1e-8 and elapsed < 60
    check(capsys, 2, "tensor eigendecomposition", ok,
          f"worst reconstruction {worst_rec:.2e} (tol 1e-7), worst orthogonality {worst_orth:.2e} "
          f"(tol 1e-8), {len(sizes)} tensors up to N=50, T=10", elapsed)


def test_c3_spectral_bound_on_datasets(capsys):
    title = "Laplacian spectrum in [0, 2] on Bitcoin Alpha/OTC"
    paths = {k: available(k) for k in ("bitcoin_alpha", "bitcoin_otc")}
    if not all(paths.values()):
        skip(capsys, 3, title, f"dataset files not found (set {DATA_ENV})")
    start = time.perf_counter()
    lines, ok = [], True
    for kind, path in paths.items():
        g = load_graph(kind, path)
        res = dataset_bound(kind, g, DATASETS[kind].split[0], bandwidth=20, max_nodes=2000)
        ok &= res.passed
        lines.append(f"{kind} {res.detail}")
    elapsed = time.perf_counter() - start
    check(capsys, 3, title, ok and elapsed < 20 * 60, "; ".join(lines), elapsed)


def test_c4_polynomial_approximation(capsys):
    start = time.perf_counter()
    results = polynomial_checks(seed=0, n=30, t=3)
    elapsed = time.perf_counter() - start
    ok = all(r.passed for r in results) and elapsed < 10
    check(capsys, 4, "tubal polynomial fits", ok, "; ".join(
        f"{r.name}: {r.detail or f'{r.observed:.1e}'}" for r in results), elapsed)


def test_c5_gradient_check(capsys):
    start = time.perf_counter()
    (res,) = gradient_suite(seeds=10, seed=11)
    elapsed = time.perf_counter() - start
    check(capsys, 5, "analytic gradients", res.passed and elapsed < 10,
          f"worst relative error {res.observed:.2e} (tol 1e-5) over 10 instances", elapsed)


def test_c6_forward_equivalence(capsys):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    for trial in range(20):
        n, t, f = int(rng.integers(2, 9)), int(rng.integers(1, 7)), 2
        m = banded_m(t, int(rng.integers(1, t + 1))) if trial % 2 else \
            MixingMatrix(np.eye(t) + 0.3 * rng.standard_normal((t, t)) / np.sqrt(t))
        adj = spc.AdjacencyTensor.from_raw([(rng.random((n, n)) < 0.4).astype(float) for _ in range(t)])
        a = adj.dense()
        x = rng.random((n, f, t))
        layers = [3] if trial < 10 else [4, 3]
        params = init_params(f, layers, 2, trial)
        # naive path: explicit M-products, activation through the transform
        h = x
        for k, w_hat in enumerate(params.layers):
            h = m_product(m_product(a, h, m), from_shared_slice(w_hat, t, m), m)
            if k < len(layers) - 1:
                h = m_transform(np.maximum(m_transform(h, m), 0), m, inverse=True)
        window = Window(transform_slices(adj.slices, m), m_transform(x, m))
        got = forward(window, params)
        expected = m_transform(h, m)
        worst = max(worst, frobenius(got - expected) / frobenius(expected))
    elapsed = time.perf_counter() - start
    check(capsys, 6, "transformed-domain forward equals M-product composition", worst <= 1e-9,
          f"worst relative difference {worst:.2e} (tol 1e-9), 1 and 2 layers", elapsed)


def test_c7_ingestion_statistics(capsys):
    title = "dataset statistics"
    paths = {k: available(k) for k in DATASETS}
    if not any(paths.values()):
        skip(capsys, 7, title, f"dataset files not found (set {DATA_ENV})")
    start = time.perf_counter()
    lines, ok = [], True
    for kind, path in paths.items():
        if path is None:
            lines.append(f"{kind} missing")
            ok = False
            continue
        g = load_graph(kind, path)
        nodes, edges, steps = DATASETS[kind].reference
        t_ok = abs(g.num_steps - steps) <= (2 if kind == "chess" else 0)
        n_ok = abs(g.num_nodes - nodes) <= 0.02 * nodes
        e_ok = abs(g.num_edges - edges) <= 0.02 * edges
        ok &= t_ok and n_ok and e_ok
        lines.append(f"{kind} N={g.num_nodes}/{nodes} E={g.num_edges}/{edges} T={g.num_steps}/{steps}")
    elapsed = time.perf_counter() - start
    check(capsys, 7, title, ok, "; ".join(lines), elapsed)


def test_c8_reproduction(capsys):
    title = "test metric reproduction (median of 5 seeds)"
    if not data_root():
        skip(capsys, 8, title, f"dataset files not found (set {DATA_ENV})")
    if os.environ.get("TENSORGCN_RUN_REPRO") != "1":
        skip(capsys, 8, title, "full sweeps take hours; set TENSORGCN_RUN_REPRO=1 to run")
    wanted = os.environ.get("TENSORGCN_REPRO_DATASETS")
    kinds = wanted.split(",") if wanted else list(DATASETS)
    start = time.perf_counter()
    lines, ok = [], True
    for kind in kinds:
        if available(kind) is None:
            lines.append(f"{kind} missing")
            ok = False
            continue
        for symmetric, targets in ((False, TARGET_PLAIN), (True, TARGET_SYMMETRIC)):
            base = ExperimentConfig(dataset=kind, data_path=data_root(), symmetric=symmetric)
            data = prepare(base)
            values = [run(base.replace(seed=s), data).test_metric for s in REPRO_SEEDS]
            med = float(np.median(values))
            hit = abs(med - targets[kind]) <= REPRO_TOL
            ok &= hit
            lines.append(f"{kind} sym={symmetric} median={med:.4f} target={targets[kind]} "
                         f"{'ok' if hit else 'MISS'} seeds={[round(v, 4) for v in values]}")
    elapsed = time.perf_counter() - start
    check(capsys, 8, title, ok, "; ".join(lines), elapsed)


def test_c9_determinism(tmp_path, capsys):
    data = synthetic_bitcoin(tmp_path / "soc-sign-bitcoinotc.csv", seed=5)
    args = ["train", "--dataset", "bitcoin_otc", "--data-path", str(data), "--split", "8", "2", "2",
            "--bandwidth", "3", "--edge-life", "2", "--iterations", "500", "--eval-interval", "50",
            "--seed", "4"]
    start = time.perf_counter()
    outs = []
    for k in range(2):
        assert main(args + ["--out", str(tmp_path / f"run{k}")]) == 0
        capsys.readouterr()
        outs.append(tmp_path / f"run{k}")
    elapsed = time.perf_counter() - start
    same_hist = (outs[0] / "history.csv").read_bytes() == (outs[1] / "history.csv").read_bytes()
    same_ckpt = (outs[0] / "checkpoint.json").read_bytes() == (outs[1] / "checkpoint.json").read_bytes()
    check(capsys, 9, "determinism", same_hist and same_ckpt,
          f"history identical={same_hist}, checkpoint and test metric identical={same_ckpt}", elapsed)
