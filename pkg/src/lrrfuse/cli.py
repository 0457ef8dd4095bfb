"""Command line interface.

Subcommands: ``blur-pair`` builds a synthetic defocus pair from one
sharp image, ``fuse`` runs the pipeline on two sources, ``bench``
evaluates a corpus of originals end to end, ``train-dict`` learns a
dictionary offline, ``eval`` scores an image against a reference.

Exit codes: 0 success (warnings allowed), 2 usage error, 3 I/O error,
4 internal numeric failure.

Configuration precedence is built-in defaults, then a ``--config`` file
of ``key = value`` lines, then explicit flags.  Manifests and reports
use stable key ordering so reruns diff cleanly; the ``time_*`` manifest
keys hold wall-clock readings and are the one part of the output that
is not reproducible.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .dictionary import KsvdParams, build_global_dictionary
from .hog import column_labels
from .image import (
    ImageFormatError,
    load_gray,
    make_focus_pair,
    mask_from_spec,
    save_gray,
)
from .lrr import LrrParams
from .fusion import FusionConfig, fuse_images, provenance_accuracy
from .matrixio import (
    FileFormatError,
    load_dictionary,
    save_dictionary,
    save_matrix,
)
from .metrics import average_gradient, psnr, ssim
from .patches import extract_patches

__all__ = ["main", "build_parser"]

IMAGE_SUFFIXES = (".png", ".pgm", ".pnm")

# key, type, default; order fixes manifest and config layout
CONFIG_FIELDS = (
    ("window", int, 8),
    ("step", int, 1),
    ("bins", int, 6),
    ("hog_threshold", float, 0.3),
    ("atoms", int, 128),
    ("sparsity", int, 6),
    ("ksvd_iters", int, 30),
    ("lambda", float, 100.0),
    ("tol", float, 1e-6),
    ("max_iters", int, 1000),
    ("seed", int, 0),
    ("tie_break", str, "b"),
)


class UsageError(ValueError):
    """Bad arguments or inputs the user can fix."""


def _fmt_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if np.isinf(value):
            return "+inf" if value > 0 else "-inf"
        return "%.10g" % value
    return str(value)


def _fmt_metric(value):
    return "%.4f" % value


def parse_config_file(path):
    """Read a flat ``key = value`` config file into a typed dict."""
    types = {name: typ for name, typ, _ in CONFIG_FIELDS}
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError("%s:%d: expected key = value" % (path, lineno))
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in types:
                raise UsageError("%s:%d: unknown config key %r" % (path, lineno, key))
            try:
                out[key] = types[key](value)
            except ValueError:
                raise UsageError(
                    "%s:%d: bad value %r for %s" % (path, lineno, value, key)
                )
    return out


def effective_config(args):
    """Merge defaults, the optional config file, and explicit flags.

    Returns the :class:`FusionConfig` plus the ordered (key, value)
    snapshot recorded in manifests.
    """
    values = {name: default for name, _, default in CONFIG_FIELDS}
    config_path = getattr(args, "config", None)
    if config_path:
        values.update(parse_config_file(config_path))
    flag_names = {
        "window": "window",
        "step": "step",
        "bins": "bins",
        "hog_threshold": "hog_threshold",
        "atoms": "atoms",
        "sparsity": "sparsity",
        "ksvd_iters": "ksvd_iters",
        "lambda": "lam",
        "tol": "tol",
        "max_iters": "max_iters",
        "seed": "seed",
        "tie_break": "tie_break",
    }
    for key, attr in flag_names.items():
        flag = getattr(args, attr, None)
        if flag is not None:
            values[key] = flag
    try:
        cfg = FusionConfig(
            window=values["window"],
            step=values["step"],
            bins=values["bins"],
            hog_threshold=values["hog_threshold"],
            ksvd=KsvdParams(
                atoms=values["atoms"],
                sparsity=values["sparsity"],
                iterations=values["ksvd_iters"],
                seed=values["seed"],
            ),
            lrr=LrrParams(
                lam=values["lambda"],
                tol=values["tol"],
                max_iter=values["max_iters"],
            ),
            tie_break=values["tie_break"],
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    snapshot = [(name, values[name]) for name, _, _ in CONFIG_FIELDS]
    return cfg, snapshot


def write_manifest(path, entries):
    """Write ordered (key, value) pairs as ``key = value`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries:
            fh.write("%s = %s\n" % (key, _fmt_value(value)))


def _corpus_images(directory):
    root = Path(directory)
    if not root.is_dir():
        raise UsageError("corpus directory %s does not exist" % directory)
    names = sorted(
        p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
    )
    if not names:
        raise UsageError("no images (%s) found in %s" % ("/".join(IMAGE_SUFFIXES), directory))
    return names


def _mask_spec_for(path, default_spec):
    sidecar = Path(str(path) + ".mask")
    if sidecar.exists():
        return sidecar.read_text(encoding="utf-8").strip()
    return default_spec


def _cmd_blur_pair(args):
    original = load_gray(args.original)
    try:
        mask = mask_from_spec(args.mask, original.shape)
    except ValueError as exc:
        raise UsageError(str(exc))
    a, b = make_focus_pair(original, mask, args.size, args.sigma)
    save_gray(a, args.out_a)
    save_gray(b, args.out_b)
    print("wrote %s and %s" % (args.out_a, args.out_b), file=sys.stderr)
    return 0


def _solver_entries(side, diag):
    prefix = "solver_%s_" % side
    return [
        (prefix + "iterations", diag.iterations),
        (prefix + "feasibility_residual", diag.feasibility_residual),
        (prefix + "split_residual", diag.split_residual),
        (prefix + "objective", diag.objective),
        (prefix + "converged", diag.converged),
    ]


def _cmd_fuse(args):
    start = time.perf_counter()
    a = load_gray(args.a)
    b = load_gray(args.b)
    if a.shape != b.shape:
        raise UsageError(
            "input sizes differ: %s is %dx%d, %s is %dx%d"
            % (args.a, a.shape[0], a.shape[1], args.b, b.shape[0], b.shape[1])
        )
    cfg, snapshot = effective_config(args)
    dictionary = None
    if args.dict:
        dictionary = load_dictionary(args.dict)
        if dictionary.dim != int(cfg.window) ** 2:
            raise UsageError(
                "dictionary dimension %d does not match window %d"
                % (dictionary.dim, cfg.window)
            )
    fused, report = fuse_images(
        a, b, cfg, dictionary=dictionary, keep_arrays=bool(args.dump_dir)
    )
    save_gray(fused, args.out)
    for message in report.warnings:
        print("warning: %s" % message, file=sys.stderr)

    if args.provenance_out:
        geo = report.geometry
        grid = report.from_a.reshape(geo.rows, geo.cols).astype(np.float64)
        save_gray(grid, args.provenance_out)

    if args.dump_dir:
        dump = Path(args.dump_dir)
        dump.mkdir(parents=True, exist_ok=True)
        arrays = report.arrays
        for name in ("va", "vb", "za", "zb", "ea", "eb", "zf"):
            save_matrix(dump / ("%s.flmat" % name), arrays[name])
        save_dictionary(dump / "dictionary.fldict", arrays["dictionary"])

    manifest_path = args.manifest or (str(args.out) + ".manifest.txt")
    geo = report.geometry
    entries = [
        ("command", "fuse"),
        ("input_a", args.a),
        ("input_b", args.b),
        ("output", str(args.out)),
    ]
    if args.reference:
        entries.append(("reference", args.reference))
    if args.dict:
        entries.append(("dictionary_file", args.dict))
    entries.extend(snapshot)
    entries.extend(
        [
            ("patch_rows", geo.rows),
            ("patch_cols", geo.cols),
            ("patch_count", geo.count),
            ("dictionary_atoms", report.dictionary_size),
        ]
    )
    entries.extend(
        ("class_count_%d" % j, int(c)) for j, c in enumerate(report.class_counts)
    )
    entries.extend(_solver_entries("a", report.solver_a))
    entries.extend(_solver_entries("b", report.solver_b))
    entries.append(("provenance_from_a", int(report.from_a.sum())))

    if args.reference:
        ref = load_gray(args.reference)
        if ref.shape != a.shape:
            raise UsageError("reference size does not match the inputs")
        for name, img in (("a", a), ("b", b), ("fused", fused)):
            entries.append(("ag_%s" % name, float(average_gradient(img))))
            entries.append(("psnr_%s" % name, float(psnr(img, ref))))
            entries.append(("ssim_%s" % name, float(ssim(img, ref))))

    entries.append(("warnings", len(report.warnings)))
    entries.extend(
        ("time_%s" % stage, "%.3f" % seconds)
        for stage, seconds in sorted(report.timings.items())
    )
    entries.append(("time_total", "%.3f" % (time.perf_counter() - start)))
    write_manifest(manifest_path, entries)
    print("wrote %s" % args.out, file=sys.stderr)
    return 0


BENCH_HEADER = (
    "image\tag_a\tag_b\tag_fused\tpsnr_a\tpsnr_b\tpsnr_fused"
    "\tssim_a\tssim_b\tssim_fused"
)


def run_benchmark(corpus_dir, cfg, size=3, sigma=7.0, mask_spec="left", save_dir=None):
    """Fuse every corpus original and score sources and fusion against it.

    For each image: build the complementary defocus pair, fuse it, and
    compute AG, PSNR, and SSIM of both sources and of the fused result
    against the original.  Returns the report text, one tab-separated
    row per image with 4-decimal fields, plus the per-image reports.
    """
    paths = _corpus_images(corpus_dir)
    out_dir = None
    if save_dir is not None:
        out_dir = Path(save_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    lines = [BENCH_HEADER]
    runs = []
    for path in paths:
        original = load_gray(path)
        try:
            mask = mask_from_spec(_mask_spec_for(path, mask_spec), original.shape)
        except ValueError as exc:
            raise UsageError(str(exc))
        img_a, img_b = make_focus_pair(original, mask, size, sigma)
        fused, report = fuse_images(img_a, img_b, cfg)
        row = [path.name]
        for metric in (average_gradient,):
            row.extend(
                _fmt_metric(metric(img)) for img in (img_a, img_b, fused)
            )
        for metric in (psnr, ssim):
            row.extend(
                _fmt_metric(metric(img, original)) for img in (img_a, img_b, fused)
            )
        lines.append("\t".join(row))
        if out_dir is not None:
            stem = path.stem
            save_gray(img_a, out_dir / ("%s_a%s" % (stem, path.suffix)))
            save_gray(img_b, out_dir / ("%s_b%s" % (stem, path.suffix)))
            save_gray(fused, out_dir / ("%s_fused%s" % (stem, path.suffix)))
        runs.append((path.name, report, mask))
    return "\n".join(lines) + "\n", runs


def _cmd_bench(args):
    cfg, _ = effective_config(args)
    text, runs = run_benchmark(
        args.corpus,
        cfg,
        size=args.size,
        sigma=args.sigma,
        mask_spec=args.mask,
        save_dir=args.save_dir,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    sys.stdout.write(text)
    for name, report, mask in runs:
        for message in report.warnings:
            print("warning: %s: %s" % (name, message), file=sys.stderr)
        share = provenance_accuracy(report.from_a, mask, report.geometry)
        print(
            "%s: provenance accuracy %.4f on interior patches" % (name, share),
            file=sys.stderr,
        )
    return 0


def _cmd_train_dict(args):
    cfg, _ = effective_config(args)
    paths = _corpus_images(args.corpus)
    columns = []
    for path in paths:
        img = load_gray(path)
        columns.append(extract_patches(img, cfg.window, cfg.step).data)
    pooled = np.hstack(columns)
    labels = column_labels(pooled, cfg.window, cfg.bins, cfg.hog_threshold)
    classes = [pooled[:, labels == j] for j in range(int(cfg.bins) + 1)]
    dictionary = build_global_dictionary(classes, cfg.ksvd)
    save_dictionary(args.out, dictionary)
    print(
        "trained %d atoms from %d patches across %d images"
        % (dictionary.size, pooled.shape[1], len(paths)),
        file=sys.stderr,
    )
    return 0


def _cmd_eval(args):
    img = load_gray(args.image)
    ref = load_gray(args.reference)
    if img.shape != ref.shape:
        raise UsageError("image and reference sizes differ")
    print("ag = %s" % _fmt_metric(average_gradient(img)))
    value = psnr(img, ref)
    print("psnr = %s" % ("+inf" if np.isinf(value) else _fmt_metric(value)))
    print("ssim = %s" % _fmt_metric(ssim(img, ref)))
    return 0


def _add_config_flags(parser):
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--window", type=int, help="patch side length")
    parser.add_argument("--step", type=int, help="window step in pixels")
    parser.add_argument("--bins", type=int, help="orientation bins")
    parser.add_argument(
        "--hog-threshold", type=float, dest="hog_threshold",
        help="dominant-orientation threshold",
    )
    parser.add_argument("--atoms", type=int, help="atoms per class sub-dictionary")
    parser.add_argument(
        "--ksvd-iters", type=int, dest="ksvd_iters", help="K-SVD sweeps"
    )
    parser.add_argument("--sparsity", type=int, help="OMP sparsity target")
    parser.add_argument(
        "--lambda", type=float, dest="lam", help="sparse-error weight"
    )
    parser.add_argument("--tol", type=float, help="solver stopping tolerance")
    parser.add_argument(
        "--max-iters", type=int, dest="max_iters", help="solver iteration cap"
    )
    parser.add_argument("--seed", type=int, help="RNG seed (default 0)")
    parser.add_argument(
        "--tie-break", dest="tie_break", choices=("a", "b"),
        help="source keeping equal-norm columns",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lrrfuse",
        description="Multi-focus image fusion with learned dictionaries "
        "and low-rank representation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("blur-pair", help="make a complementary defocus pair")
    p.add_argument("original", help="sharp source image")
    p.add_argument(
        "--mask", default="left",
        help="left|right|top|bottom|circle:cx,cy,r|mask image path",
    )
    p.add_argument("--size", type=int, default=3, help="blur kernel size (odd)")
    p.add_argument("--sigma", type=float, default=7.0, help="blur sigma")
    p.add_argument("--out-a", required=True, help="output path, sharp on the mask")
    p.add_argument("--out-b", required=True, help="output path, complement")
    p.set_defaults(func=_cmd_blur_pair)

    p = sub.add_parser("fuse", help="fuse two source images")
    p.add_argument("a", help="first source image")
    p.add_argument("b", help="second source image")
    p.add_argument("--out", required=True, help="fused image path")
    p.add_argument("--reference", help="all-in-focus reference for metrics")
    p.add_argument("--manifest", help="manifest path (default OUT.manifest.txt)")
    p.add_argument(
        "--provenance-out", dest="provenance_out",
        help="write the per-patch source map as an image",
    )
    p.add_argument("--dict", help="use a pretrained FLDICT1 dictionary")
    p.add_argument(
        "--dump-dir", dest="dump_dir", help="dump solver matrices for debugging"
    )
    _add_config_flags(p)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("bench", help="run the synthetic benchmark on a corpus")
    p.add_argument("corpus", help="directory of original images")
    p.add_argument("--out", required=True, help="report path")
    p.add_argument(
        "--mask", default="left",
        help="default mask spec; NAME.mask sidecar files override per image",
    )
    p.add_argument("--size", type=int, default=3, help="blur kernel size (odd)")
    p.add_argument("--sigma", type=float, default=7.0, help="blur sigma")
    p.add_argument(
        "--save-dir", dest="save_dir", help="also save the per-image pairs and fusions"
    )
    _add_config_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("train-dict", help="train a dictionary from a corpus")
    p.add_argument("corpus", help="directory of training images")
    p.add_argument("--out", required=True, help="FLDICT1 output path")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train_dict)

    p = sub.add_parser("eval", help="score an image against a reference")
    p.add_argument("image", help="image to score")
    p.add_argument("reference", help="reference image")
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except np.linalg.LinAlgError as exc:
        print("numeric error: %s" % exc, file=sys.stderr)
        return 4
    except (ImageFormatError, FileFormatError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except (ArithmeticError, RuntimeError) as exc:
        print("numeric error: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
