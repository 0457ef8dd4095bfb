"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line so a full run reads as a checklist.
The five-image benchmark is executed once and shared by the dominance,
provenance, and determinism tests.
"""

import time

import numpy as np
import pytest

import lrrfuse as lf
from lrrfuse.cli import run_benchmark

import oracles


def announce(number, name, ok, detail=""):
    verdict = "PASS" if ok else "FAIL"
    suffix = " [%s]" % detail if detail else ""
    print("ACCEPTANCE %d (%s): %s%s" % (number, name, verdict, suffix))


def test_criterion_1_patching_roundtrip():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        height = int(rng.integers(9, 41))
        width = int(rng.integers(9, 41))
        img = rng.random((height, width))
        for window in (4, 8):
            for step in (1, 2, 4):
                pm = lf.extract_patches(img, window, step)
                out = lf.reconstruct_average(pm)
                geo = pm.geometry
                rmax = (geo.rows - 1) * step + window
                cmax = (geo.cols - 1) * step + window
                err = np.abs(out[:rmax, :cmax] - img[:rmax, :cmax]).max()
                worst = max(worst, float(err))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 5.0
    announce(1, "patching roundtrip", ok,
             "max error %.2e, %.2f s" % (worst, elapsed))
    assert worst <= 1e-12
    assert elapsed < 5.0


def test_criterion_2_proximal_operator_oracles():
    rng = np.random.default_rng(1002)
    start = time.perf_counter()
    worst_svt = 0.0
    for _ in range(100):
        rows = int(rng.integers(1, 21))
        cols = int(rng.integers(1, 21))
        mtx = rng.standard_normal((rows, cols))
        top = np.linalg.svd(mtx, compute_uv=False)[0]
        tau = float(rng.uniform(0.0, 1.2 * top))
        diff = np.abs(lf.svt(mtx, tau) - oracles.svt_direct(mtx, tau)).max()
        worst_svt = max(worst_svt, float(diff))
    worst_shrink = 0.0
    for _ in range(100):
        dim = int(rng.integers(1, 12))
        q = rng.standard_normal(dim) * float(rng.uniform(0.1, 5.0))
        tau = float(rng.uniform(0.0, 4.0))
        mine = lf.shrink_l21(q[:, None], tau)[:, 0]
        ref = oracles.l21_prox_column(q, tau)
        worst_shrink = max(worst_shrink, float(np.abs(mine - ref).max()))
    elapsed = time.perf_counter() - start
    ok = worst_svt <= 1e-10 and worst_shrink <= 1e-8 and elapsed < 10.0
    announce(2, "proximal operator oracles", ok,
             "svt %.2e, shrink %.2e, %.2f s" % (worst_svt, worst_shrink, elapsed))
    assert worst_svt <= 1e-10
    assert worst_shrink <= 1e-8
    assert elapsed < 10.0


def test_criterion_3_noiseless_low_rank_closed_form():
    rng = np.random.default_rng(1003)
    start = time.perf_counter()
    x = rng.standard_normal((20, 3)) @ rng.standard_normal((3, 30))
    solution = lf.lrr_solve(x, x, lf.LrrParams(lam=1e6))
    _, _, vt = np.linalg.svd(x, full_matrices=False)
    v = vt[:3].T
    gap = float(np.linalg.norm(solution.z - v @ v.T))
    elapsed = time.perf_counter() - start
    ok = (
        gap <= 1e-3
        and solution.feasibility_residual <= 1e-6
        and elapsed < 30.0
    )
    announce(3, "noiseless low-rank closed form", ok,
             "|Z - VV'| %.2e, feasibility %.2e, %.2f s"
             % (gap, solution.feasibility_residual, elapsed))
    assert gap <= 1e-3
    assert solution.feasibility_residual <= 1e-6
    assert elapsed < 30.0


def test_criterion_4_dictionary_recovery():
    rng = np.random.default_rng(1004)
    start = time.perf_counter()
    true = rng.standard_normal((16, 32))
    true /= np.sqrt((true * true).sum(axis=0))
    codes = np.zeros((32, 1000))
    for j in range(1000):
        support = rng.choice(32, size=3, replace=False)
        codes[support, j] = rng.standard_normal(3)
    data = true @ codes + 0.01 * rng.standard_normal((16, 1000))
    params = lf.KsvdParams(atoms=32, sparsity=3, iterations=50, seed=0)
    result = lf.ksvd_train(data, params)
    matched = oracles.match_atoms(true, result.atoms, threshold=0.95)
    monotone = bool(np.all(np.diff(result.errors) <= 1e-9))
    elapsed = time.perf_counter() - start
    ok = matched >= 26 and monotone and elapsed < 60.0
    announce(4, "dictionary recovery", ok,
             "%d/32 atoms matched, errors monotone %s, %.1f s"
             % (matched, monotone, elapsed))
    assert matched >= 26
    assert monotone
    assert elapsed < 60.0


def test_criterion_5_orientation_classification():
    def synthetic_patterns(n):
        r = np.arange(n)[:, None]
        c = np.arange(n)[None, :]
        ramps = [
            0.05 * (np.cos(np.radians(d)) * c + np.sin(np.radians(d)) * r)
            for d in (0, 15, 45, 60, 90, 105, 135, 160)
        ]
        return [
            np.zeros((n, n)),
            np.full((n, n), 0.5),
            np.ones((n, n)),
            np.tile(np.arange(n) % 2, (n, 1)).astype(np.float64),
            np.tile((np.arange(n) // 2) % 2, (n, 1)).astype(np.float64),
            np.tile((np.arange(n) % 2)[:, None], (1, n)).astype(np.float64),
            (r + c) % 2 * 1.0,
            (r + c + 1) % 2 * 1.0,
        ] + ramps

    cases = 0
    agreements = 0
    for n in (4, 8):
        for patch in synthetic_patterns(n):
            for bins in (4, 6, 9):
                for threshold in (0.3, 0.5):
                    mine = lf.classify_patch(
                        lf.orientation_histogram(patch.ravel(), n, bins), threshold
                    )
                    ref = oracles.hog_class(
                        oracles.hog_histogram(patch, bins), threshold
                    )
                    cases += 1
                    agreements += int(mine == ref)

    img = oracles.textured_image(1005, shape=(40, 40))
    pm = lf.extract_patches(img, 8, 2)
    parts = lf.partition_patches(pm, 6, 0.3)
    merged = np.concatenate(parts)
    disjoint = merged.size == np.unique(merged).size
    exhaustive = np.array_equal(np.sort(merged), np.arange(pm.geometry.count))

    ok = agreements == cases and disjoint and exhaustive
    announce(5, "orientation classification", ok,
             "%d/%d oracle agreement, partition %s"
             % (agreements, cases, "clean" if disjoint and exhaustive else "broken"))
    assert agreements == cases
    assert disjoint and exhaustive


CORPUS_MASKS = ("left", "top", "right", "bottom", "left")


def acceptance_config():
    return lf.FusionConfig(
        window=8,
        step=2,
        bins=6,
        hog_threshold=0.3,
        ksvd=lf.KsvdParams(atoms=64, sparsity=6, iterations=30, seed=0),
        lrr=lf.LrrParams(lam=100.0),
        tie_break="b",
    )


@pytest.fixture(scope="module")
def benchmark_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    corpus = root / "corpus"
    corpus.mkdir()
    for i, mask in enumerate(CORPUS_MASKS):
        lf.save_gray(oracles.textured_image(i), corpus / ("img%d.pgm" % i))
        (corpus / ("img%d.pgm.mask" % i)).write_text(mask + "\n", encoding="utf-8")
    out_dir = root / "run1"
    start = time.perf_counter()
    text, runs = run_benchmark(
        corpus, acceptance_config(), size=3, sigma=7.0, save_dir=out_dir
    )
    elapsed = time.perf_counter() - start
    (out_dir / "report.tsv").write_text(text, encoding="utf-8")
    return {
        "root": root,
        "corpus": corpus,
        "out_dir": out_dir,
        "text": text,
        "runs": runs,
        "elapsed": elapsed,
    }


def test_criterion_6_fusion_dominates_sources(benchmark_runs):
    corpus = benchmark_runs["corpus"]
    out_dir = benchmark_runs["out_dir"]
    elapsed = benchmark_runs["elapsed"]
    dominated = 0
    margins = []
    for i in range(5):
        original = lf.load_gray(corpus / ("img%d.pgm" % i))
        img_a = lf.load_gray(out_dir / ("img%d_a.pgm" % i))
        img_b = lf.load_gray(out_dir / ("img%d_b.pgm" % i))
        fused = lf.load_gray(out_dir / ("img%d_fused.pgm" % i))
        ag_gap = lf.average_gradient(fused) - max(
            lf.average_gradient(img_a), lf.average_gradient(img_b)
        )
        psnr_gap = lf.psnr(fused, original) - max(
            lf.psnr(img_a, original), lf.psnr(img_b, original)
        )
        ssim_gap = lf.ssim(fused, original) - max(
            lf.ssim(img_a, original), lf.ssim(img_b, original)
        )
        margins.append((ag_gap, psnr_gap, ssim_gap))
        if ag_gap > 0 and psnr_gap > 0 and ssim_gap > 0:
            dominated += 1
    min_ag = min(m[0] for m in margins)
    min_psnr = min(m[1] for m in margins)
    min_ssim = min(m[2] for m in margins)
    ok = dominated == 5 and elapsed < 600.0
    announce(6, "fusion dominates sources", ok,
             "5/5 runs %s; min gaps ag %.4f, psnr %.2f dB, ssim %.4f; %.0f s"
             % (dominated == 5, min_ag, min_psnr, min_ssim, elapsed))
    assert dominated == 5
    assert elapsed < 600.0


def test_criterion_7_provenance_accuracy(benchmark_runs):
    scores = []
    for name, report, mask in benchmark_runs["runs"]:
        score = lf.provenance_accuracy(report.from_a, mask, report.geometry)
        scores.append(score)
    ok = all(s >= 0.9 for s in scores)
    announce(7, "provenance accuracy", ok,
             "min %.4f over %d runs" % (min(scores), len(scores)))
    assert ok


def test_criterion_8_deterministic_rerun(benchmark_runs):
    corpus = benchmark_runs["corpus"]
    first_dir = benchmark_runs["out_dir"]
    second_dir = benchmark_runs["root"] / "run2"
    text, _ = run_benchmark(
        corpus, acceptance_config(), size=3, sigma=7.0, save_dir=second_dir
    )
    (second_dir / "report.tsv").write_text(text, encoding="utf-8")
    same_report = text == benchmark_runs["text"]
    mismatched = []
    for i in range(5):
        for kind in ("a", "b", "fused"):
            name = "img%d_%s.pgm" % (i, kind)
            if (first_dir / name).read_bytes() != (second_dir / name).read_bytes():
                mismatched.append(name)
    ok = same_report and not mismatched
    announce(8, "deterministic rerun", ok,
             "report identical %s, %d/15 image files differ"
             % (same_report, len(mismatched)))
    assert same_report
    assert mismatched == []
