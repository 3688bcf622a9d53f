"""Command-line surface tying the package into reproducible runs.

Seven subcommands: audit (entropy change of fields under a mask), maskgen
(mask files with JSON sidecars), select (density-parameter grid search),
mimo (channel shutoff study), validate (theory check suites), correlate
(quality-vs-entropy fits) and ablate (window-parameter sweeps).

Every run resolves its parameters (flags override --preset, which overrides
a JSON --config file, which overrides built-in defaults), writes its outputs
atomically into --out, and emits exactly one manifest.json recording the
command, the fully resolved configuration, the seed, the tool version and
sha256 digests of every input file. Reruns with an identical manifest
produce byte-identical CSV/JSON; the scatter SVG differs only in one
timestamp comment, which --no-timestamp suppresses.

Exit codes: 0 success, 2 I/O failure, 3 parameter error, 4 validation-suite
failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .arr1 import ArrFormatError, read_arr1, write_arr1
from .masks import (
    AntennaMaskSpec,
    KSpaceMaskSpec,
    PatchMaskSpec,
    antenna_mask,
    apply_mask,
    kspace_mask,
    load_mask,
    patch_mask,
)
from .mimo import (
    ChannelConfig,
    add_noise,
    audit_channel,
    baseline_complete,
    gen_channel,
    nmse,
)
from .mri import MultiCoilKSpace, phantom
from .numerics import derive_seed, make_rng, ols_pearson
from .oracle import (
    check_folding_identity,
    check_jensen_mixture,
    check_product_convolution,
    concentration_experiment,
    wigner1d,
)
from .phase_space import HusimiParams, delta_s, multiscale_delta_s
from .selector import (
    ablation_summary,
    ablation_sweep,
    select_mask_params,
    win_rank_stability,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_IO = 2
EXIT_PARAMETER = 3
EXIT_VALIDATION = 4

PSNR_CAP_DB = 200.0

PRESETS = {
    "vision": {"multiscale": True, "weighting": "energy"},
    "mri": {"win": 32, "sigma": 16.0, "hop": 10, "weighting": "uniform",
            "multiscale": False},
    "mimo": {"win": 4, "sigma": 1.0, "hop": 1, "weighting": "energy",
             "multiscale": False},
}


class ValidationFailure(Exception):
    """A validate suite ran to completion and at least one check failed."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the parameter code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAMETER, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# deterministic serialization helpers

def _atomic_write_bytes(path, data):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_csv(path, header, rows):
    """CSV with LF line endings, '.' decimals and repr-exact floats."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_cell(v) for v in row])
    _atomic_write_bytes(path, buf.getvalue().encode("utf-8"))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, float) and not math.isfinite(v):
        if math.isnan(v):
            return "nan"
        return "inf" if v > 0 else "-inf"
    return v


def write_json(path, obj):
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"
    _atomic_write_bytes(path, text.encode("utf-8"))


def cap_db(value):
    """Clamp a decibel value for serialization; inf becomes the cap."""
    value = float(value)
    if math.isnan(value):
        return value
    return min(value, PSNR_CAP_DB)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command, config, seed, input_paths):
    manifest = {
        "command": command,
        "config": _jsonable(config),
        "seed": int(seed),
        "tool_version": __version__,
        "input_digests": {str(p): _sha256(p) for p in input_paths},
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)


def scatter_svg(path, xs, ys, x_label, y_label, fit=None, timestamp=True):
    """Minimal self-contained scatter plot with an optional fitted line."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    width, height, margin = 480, 360, 56

    def span(v):
        lo, hi = float(v.min()), float(v.max())
        pad = 0.05 * (hi - lo) if hi > lo else max(abs(hi), 1.0) * 0.05
        return lo - pad, hi + pad

    x0, x1 = span(xs)
    y0, y1 = span(ys)

    def px(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def py(y):
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    parts = []
    if timestamp:
        now = datetime.datetime.now(datetime.timezone.utc)
        parts.append(f"<!-- generated {now.isoformat(timespec='seconds')} -->")
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    ax = (f'M {margin} {margin} L {margin} {height - margin} '
          f'L {width - margin} {height - margin}')
    parts.append(f'<path d="{ax}" stroke="black" fill="none"/>')
    for v, anchor, x, y in (
        (x0, "start", margin, height - margin + 16),
        (x1, "end", width - margin, height - margin + 16),
    ):
        parts.append(
            f'<text x="{x}" y="{y}" font-size="10" text-anchor="{anchor}">'
            f"{v:.6g}</text>"
        )
    for v, y in ((y0, height - margin), (y1, margin + 4)):
        parts.append(
            f'<text x="{margin - 6}" y="{y}" font-size="10" '
            f'text-anchor="end">{v:.6g}</text>'
        )
    parts.append(
        f'<text x="{width / 2:.0f}" y="{height - 12}" font-size="11" '
        f'text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="14" y="{height / 2:.0f}" font-size="11" '
        f'text-anchor="middle" transform="rotate(-90 14 {height / 2:.0f})">'
        f"{y_label}</text>"
    )
    if fit is not None:
        ya, yb = fit.intercept + fit.slope * x0, fit.intercept + fit.slope * x1
        parts.append(
            f'<line x1="{px(x0):.2f}" y1="{py(ya):.2f}" x2="{px(x1):.2f}" '
            f'y2="{py(yb):.2f}" stroke="#888" stroke-dasharray="4 3"/>'
        )
    for x, y in zip(xs, ys):
        parts.append(
            f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" '
            f'fill="steelblue" fill-opacity="0.8"/>'
        )
    parts.append("</svg>")
    _atomic_write_bytes(path, ("\n".join(parts) + "\n").encode("utf-8"))


# ---------------------------------------------------------------------------
# flag plumbing

def _parse_list(value, cast):
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    parts = [p for p in str(value).replace(";", ",").split(",") if p.strip()]
    return [cast(p.strip()) for p in parts]


# Destinations whose command-line flag is spelled differently; config files
# may use either name.
_CONFIG_ALIASES = {"interval_k": "k", "interval_d": "d"}


def _resolve(args, defaults, preset_keys=()):
    """Merge flag values over preset values over config values over defaults."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ValueError("config file must hold a JSON object")
    preset = PRESETS.get(getattr(args, "preset", None) or "", {})
    resolved = {}
    for name, default in defaults.items():
        value = getattr(args, name, None)
        if value is None and name in preset_keys:
            value = preset.get(name)
        if value is None:
            value = config.get(name)
        if value is None and name in _CONFIG_ALIASES:
            value = config.get(_CONFIG_ALIASES[name])
        if value is None:
            value = default
        resolved[name] = value
    if getattr(args, "preset", None):
        resolved["preset"] = args.preset
    return resolved


def _resolve_seed(explicit):
    if explicit is not None:
        return int(explicit)
    env = os.environ.get("PHASEGATE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValueError(f"PHASEGATE_SEED must be an integer, got {env!r}") from exc
    return 0


def _add_common(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None,
                   help="base seed (default: PHASEGATE_SEED or 0)")
    p.add_argument("--config", default=None,
                   help="JSON file whose keys mirror the long flag names")


def _add_husimi(p, with_preset=True):
    if with_preset:
        p.add_argument("--preset", choices=sorted(PRESETS), default=None,
                       help="bind the per-modality window defaults")
    p.add_argument("--win", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--hop", type=int, default=None)
    p.add_argument("--weighting", choices=("uniform", "energy"), default=None)
    p.add_argument("--energy-floor", dest="energy_floor", type=float, default=None)


def _add_mask_flags(p, default_kind=None):
    p.add_argument("--kind", choices=("patch", "kspace", "antenna"),
                   default=default_kind, help="mask type to generate")
    p.add_argument("--family", default=None,
                   help="kspace family, or periodic/random geometry otherwise")
    p.add_argument("--k", dest="interval_k", type=int, default=None,
                   help="patch-lattice interval")
    p.add_argument("--d", dest="interval_d", type=int, default=None,
                   help="antenna shutoff interval")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--accel", type=float, default=None)
    p.add_argument("--acs", type=int, default=None)
    p.add_argument("--n-lines", dest="n_lines", type=int, default=None)
    p.add_argument("--grid-rows", dest="grid_rows", type=int, default=None)
    p.add_argument("--patch-rows", dest="patch_rows", type=int, default=None)
    p.add_argument("--patch-cols", dest="patch_cols", type=int, default=None)
    p.add_argument("--patch-px", dest="patch_px", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--n-rx", dest="n_rx", type=int, default=None)
    p.add_argument("--n-tx", dest="n_tx", type=int, default=None)
    p.add_argument("--axis", choices=("rx", "tx", "both"), default=None)
    p.add_argument("--off-budget", dest="off_budget", type=int, default=None)


_MASK_DEFAULTS = {
    "kind": "kspace",
    "family": None,
    "interval_k": 2,
    "interval_d": 2,
    "alpha": 0.0,
    "beta": 0.0,
    "accel": 4.0,
    "acs": 24,
    "n_lines": None,
    "grid_rows": None,
    "patch_rows": 16,
    "patch_cols": 16,
    "patch_px": 16,
    "budget": None,
    "n_rx": 16,
    "n_tx": 64,
    "axis": "tx",
    "off_budget": None,
}


def _build_mask(cfg, seed):
    kind = cfg["kind"]
    if kind == "patch":
        spec = PatchMaskSpec(
            patch_rows=cfg["patch_rows"], patch_cols=cfg["patch_cols"],
            patch_px=cfg["patch_px"], geometry=cfg["family"] or "periodic",
            interval_k=cfg["interval_k"], budget=cfg["budget"], seed=seed,
        )
        return patch_mask(spec)
    if kind == "kspace":
        if cfg["n_lines"] is None:
            raise ValueError("kspace masks need --n-lines")
        spec = KSpaceMaskSpec(
            n_lines=cfg["n_lines"], accel=cfg["accel"], acs=cfg["acs"],
            family=cfg["family"] or "parametric", alpha=cfg["alpha"],
            beta=cfg["beta"], seed=seed,
            rows=cfg["grid_rows"] or cfg["n_lines"],
        )
        return kspace_mask(spec)
    if kind == "antenna":
        spec = AntennaMaskSpec(
            n_rx=cfg["n_rx"], n_tx=cfg["n_tx"],
            geometry=cfg["family"] or "periodic",
            interval_d=cfg["interval_d"], off_budget=cfg["off_budget"],
            axis=cfg["axis"], seed=seed,
        )
        return antenna_mask(spec)
    raise ValueError(f"unknown mask kind {kind!r}")


def _load_field(path):
    a = read_arr1(path)
    if a.ndim != 2:
        raise ValueError(f"{path}: expected a 2D field, got shape {a.shape}")
    return a.astype(np.complex128)


def _load_calibration(cfg, seed):
    """Calibration k-space from a directory of ARR1 stacks or synthesized."""
    if cfg["calib"]:
        paths = sorted(
            os.path.join(cfg["calib"], name)
            for name in os.listdir(cfg["calib"])
            if name.endswith(".arr1")
        )
        if not paths:
            raise ValueError(f"no .arr1 files in {cfg['calib']}")
        stacks, ids = [], []
        for p in paths:
            a = read_arr1(p)
            if a.ndim != 3:
                raise ValueError(f"{p}: expected (coils, rows, cols), got {a.shape}")
            stacks.append(MultiCoilKSpace(a.astype(np.complex128)))
            ids.append(os.path.splitext(os.path.basename(p))[0])
        return stacks, ids, paths
    n = int(cfg["phantoms"])
    if n < 1:
        raise ValueError("need --calib DIR or --phantoms N >= 1")
    stacks = [
        phantom(cfg["rows"], cfg["cols"], coils=cfg["coils"],
                seed=derive_seed(seed, i))
        for i in range(n)
    ]
    ids = [f"phantom-{i}" for i in range(n)]
    return stacks, ids, []


def _add_calibration_flags(p):
    p.add_argument("--calib", default=None,
                   help="directory of ARR1 (coils, rows, cols) stacks")
    p.add_argument("--phantoms", type=int, default=None,
                   help="synthesize this many calibration phantoms instead")
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--coils", type=int, default=None)


_CALIB_DEFAULTS = {
    "calib": None, "phantoms": 0, "rows": 160, "cols": 160, "coils": 4,
}


# ---------------------------------------------------------------------------
# subcommands

def cmd_audit(args):
    defaults = {
        "inputs": None, "mask": None, "multiscale": False, "hop_ratio": 1.0,
        "win": 32, "sigma": 16.0, "hop": 10, "weighting": "uniform",
        "energy_floor": 1e-6,
    }
    defaults.update(_MASK_DEFAULTS)
    defaults["kind"] = None
    cfg = _resolve(args, defaults,
                   preset_keys=("win", "sigma", "hop", "weighting", "multiscale"))
    seed = _resolve_seed(args.seed)
    if not cfg["inputs"]:
        raise ValueError("audit needs at least one --inputs field file")
    os.makedirs(args.out, exist_ok=True)

    fields = [(os.path.splitext(os.path.basename(p))[0], _load_field(p))
              for p in cfg["inputs"]]
    input_paths = list(cfg["inputs"])
    mask = None
    if cfg["mask"]:
        mask = load_mask(cfg["mask"])
        input_paths.append(cfg["mask"])
    elif cfg["kind"]:
        if cfg["kind"] == "kspace" and cfg["n_lines"] is None:
            cfg["n_lines"] = fields[0][1].shape[1]
            cfg["grid_rows"] = fields[0][1].shape[0]
        mask = _build_mask(cfg, seed)

    params = HusimiParams(win=cfg["win"], sigma=cfg["sigma"], hop=cfg["hop"])
    rows = []
    for sample_id, field in fields:
        acquired = apply_mask(field, mask) if mask is not None else field
        if cfg["multiscale"]:
            rep = multiscale_delta_s(
                field, acquired, weighting=cfg["weighting"],
                energy_floor=cfg["energy_floor"], hop_ratio=cfg["hop_ratio"],
            )
            param_tag = "multiscale"
        else:
            rep = delta_s(field, acquired, params, weighting=cfg["weighting"],
                          energy_floor=cfg["energy_floor"])
            param_tag = f"win={cfg['win']};sigma={cfg['sigma']};hop={cfg['hop']}"
        rows.append((sample_id, rep.s_ref, rep.s_acq, rep.delta,
                     rep.abs_delta, param_tag, cfg["weighting"], seed))

    out_csv = os.path.join(args.out, "audit.csv")
    write_csv(out_csv,
              ("id", "s_ref", "s_acq", "delta_s", "abs_delta_s", "params",
               "weighting", "seed"),
              rows)
    write_manifest(args.out, "audit", cfg, seed, input_paths)
    print(f"wrote {out_csv}")
    return EXIT_OK


def cmd_maskgen(args):
    cfg = _resolve(args, dict(_MASK_DEFAULTS))
    seed = _resolve_seed(args.seed)
    if cfg["kind"] == "kspace" and cfg["n_lines"] is None:
        raise ValueError("kspace masks need --n-lines")
    os.makedirs(args.out, exist_ok=True)
    mask = _build_mask(cfg, seed)
    out_path = os.path.join(args.out, "mask.arr1")
    fd, tmp = tempfile.mkstemp(dir=args.out, prefix=".tmp-")
    os.close(fd)
    try:
        write_arr1(tmp, mask.kept.astype(np.uint8))
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    write_json(os.path.join(args.out, "mask.json"),
               {"kind": mask.kind, "spec": mask.meta})
    write_manifest(args.out, "maskgen", cfg, seed, [])
    print(f"wrote {out_path} ({mask.keep_count} of {mask.kept.size} kept)")
    return EXIT_OK


def cmd_select(args):
    defaults = {
        "accel": 4.0, "acs": 24,
        "alphas": "0,0.05,0.1,0.2,0.5,1.0",
        "betas": "0,0.5,1,2,3,4",
        "criterion": "min_abs_delta_s",
        "win": 32, "sigma": 16.0, "hop": 10, "weighting": "uniform",
        "energy_floor": 1e-6,
    }
    defaults.update(_CALIB_DEFAULTS)
    cfg = _resolve(args, defaults,
                   preset_keys=("win", "sigma", "hop", "weighting"))
    seed = _resolve_seed(args.seed)
    os.makedirs(args.out, exist_ok=True)
    stacks, ids, input_paths = _load_calibration(cfg, seed)
    alphas = _parse_list(cfg["alphas"], float)
    betas = _parse_list(cfg["betas"], float)
    result = select_mask_params(
        stacks, accel=cfg["accel"], acs=cfg["acs"], alphas=alphas,
        betas=betas, criterion=cfg["criterion"],
        husimi_params=HusimiParams(win=cfg["win"], sigma=cfg["sigma"],
                                   hop=cfg["hop"]),
        weighting=cfg["weighting"], energy_floor=cfg["energy_floor"],
        seed=seed, calibration_ids=ids,
    )
    is_db = cfg["criterion"] == "max_zero_filled_psnr"

    def ser(v):
        return cap_db(v) if is_db else float(v)

    out_json = os.path.join(args.out, "selection.json")
    write_json(out_json, {
        "criterion": result.criterion,
        "best_alpha": result.best_alpha,
        "best_beta": result.best_beta,
        "best_score": ser(result.best_score),
        "alphas": list(result.alphas),
        "betas": list(result.betas),
        "scores": [[ser(v) for v in row] for row in result.scores],
        "spreads": result.spreads,
        "calibration_ids": list(result.calibration_ids),
        "tie_break": "lexicographically smallest (alpha, beta)",
        "seed": seed,
    })
    score_rows = []
    for ia, alpha in enumerate(result.alphas):
        for ib, beta in enumerate(result.betas):
            score_rows.append((alpha, beta, ser(result.scores[ia, ib]),
                               float(result.spreads[ia, ib]), len(ids)))
    out_csv = os.path.join(args.out, "scores.csv")
    write_csv(out_csv, ("alpha", "beta", "mean_score", "spread", "n"),
              score_rows)
    write_manifest(args.out, "select", cfg, seed, input_paths)
    print(f"wrote {out_json} (best alpha={result.best_alpha} "
          f"beta={result.best_beta})")
    return EXIT_OK


def cmd_mimo(args):
    defaults = {
        "trials": 200, "n_rx": 16, "n_tx": 64, "n_clusters": 3,
        "paths_per_cluster": 10, "angular_spread": 7.5, "snr_db": 15.0,
        "geometries": "periodic,random", "d_list": "2,3,4,6,8",
        "axis": "tx", "rank": 4, "iters": 30,
        "win": 4, "sigma": 1.0, "hop": 1, "weighting": "energy",
        "energy_floor": 1e-6,
    }
    cfg = _resolve(args, defaults,
                   preset_keys=("win", "sigma", "hop", "weighting"))
    seed = _resolve_seed(args.seed)
    os.makedirs(args.out, exist_ok=True)
    geometries = _parse_list(cfg["geometries"], str)
    d_list = _parse_list(cfg["d_list"], int)
    params = HusimiParams(win=cfg["win"], sigma=cfg["sigma"], hop=cfg["hop"])
    rows = []
    for s in range(int(cfg["trials"])):
        config = ChannelConfig(
            n_rx=cfg["n_rx"], n_tx=cfg["n_tx"], n_clusters=cfg["n_clusters"],
            paths_per_cluster=cfg["paths_per_cluster"],
            angular_spread_deg=cfg["angular_spread"], snr_db=cfg["snr_db"],
            seed=derive_seed(seed, s, 0),
        )
        channel = gen_channel(config)
        noisy = add_noise(channel, seed=derive_seed(seed, s, 1))
        for geometry in geometries:
            for d in d_list:
                mask = antenna_mask(AntennaMaskSpec(
                    n_rx=cfg["n_rx"], n_tx=cfg["n_tx"], geometry=geometry,
                    interval_d=d, axis=cfg["axis"],
                    seed=derive_seed(seed, s, 2, d),
                ))
                rep = audit_channel(noisy, mask, params=params,
                                    weighting=cfg["weighting"],
                                    energy_floor=cfg["energy_floor"])
                estimate = baseline_complete(noisy.h * mask.kept, mask,
                                             rank=cfg["rank"],
                                             iters=cfg["iters"])
                rows.append((s, geometry, d, rep.s_ref, rep.s_acq, rep.delta,
                             rep.abs_delta, nmse(channel.h, estimate)))
    out_csv = os.path.join(args.out, "mimo.csv")
    write_csv(out_csv,
              ("seed", "geometry", "d", "s_ref", "s_acq", "delta_s",
               "abs_delta_s", "nmse"),
              rows)
    write_manifest(args.out, "mimo", cfg, seed, [])
    print(f"wrote {out_csv} ({len(rows)} rows)")
    return EXIT_OK


def _suite_wigner(seed):
    checks = []
    n = 5
    delta = np.zeros(n, dtype=np.complex128)
    delta[0] = 1.0
    w = wigner1d(delta)
    err = max(
        float(np.max(np.abs(w.values[0] - 1.0))),
        float(np.max(np.abs(w.values[1:]))),
    )
    checks.append(("wigner_delta", err, 1e-10))
    n = 7
    w = wigner1d(np.ones(n, dtype=np.complex128))
    target = np.zeros((n, n))
    target[:, 0] = n
    checks.append(("wigner_constant",
                   float(np.max(np.abs(w.values - target))), 1e-10))
    worst = 0.0
    for i, n in enumerate((5, 9, 15, 21, 31)):
        rng = make_rng(derive_seed(seed, 10, i))
        sig = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w = wigner1d(sig)
        x_marg = w.values.sum(axis=1) / n
        k_marg = w.values.sum(axis=0) / n
        spectrum = np.fft.fft(sig) / math.sqrt(n)
        worst = max(
            worst,
            float(np.max(np.abs(x_marg - np.abs(sig) ** 2))),
            float(np.max(np.abs(k_marg - np.abs(spectrum) ** 2))),
        )
    checks.append(("wigner_marginals", worst, 1e-8))
    n = 9
    rng = make_rng(derive_seed(seed, 11))
    sig = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    checks.append(("prodconv_identity_mask",
                   check_product_convolution(np.ones(n), sig), 1e-12))
    delta = np.zeros(n, dtype=np.complex128)
    delta[0] = 1.0
    mask = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    checks.append(("prodconv_delta_signal",
                   check_product_convolution(mask, delta), 1e-10))
    worst = 0.0
    for i in range(100):
        rng = make_rng(derive_seed(seed, 12, i))
        n = int(rng.choice([5, 9, 15, 21, 27, 31]))
        mask = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        sig = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        worst = max(worst, check_product_convolution(mask, sig))
    checks.append(("prodconv_seeded_pairs", worst, 1e-8))
    return checks


def _suite_folding(seed):
    checks = []
    n = 8
    rng = make_rng(derive_seed(seed, 20))
    sig = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    checks.append(("folding_q1_identity", check_folding_identity(sig, 1), 1e-12))
    tone = np.exp(2j * np.pi * 3 * np.arange(8) / 8)
    comb = (np.arange(8) % 2 == 0).astype(np.float64)
    spectrum = np.abs(np.fft.fft(tone * comb) / math.sqrt(8)) ** 2
    spectrum /= spectrum.sum()
    target = np.zeros(8)
    target[3] = target[7] = 0.5
    checks.append(("folding_tone_split_mass",
                   float(np.max(np.abs(spectrum - target))), 1e-12))
    worst = 0.0
    for q in (2, 4, 8):
        for i in range(25):
            rng = make_rng(derive_seed(seed, 21, q, i))
            sig = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            worst = max(worst, check_folding_identity(sig, q))
    checks.append(("folding_q248_n64", worst, 1e-10))
    n = 16
    rng = make_rng(derive_seed(seed, 22))
    sig = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    checks.append(("folding_q_equals_n", check_folding_identity(sig, n), 1e-10))
    return checks


def _suite_jensen(seed):
    checks = []
    r = np.full(8, 1.0 / 8)
    lhs, rhs = check_jensen_mixture([r, r], (0.5, 0.5))
    checks.append(("jensen_equality_identical", abs(lhs - rhs), 1e-12))
    a = np.zeros(4)
    a[0] = 1.0
    b = np.zeros(4)
    b[1] = 1.0
    lhs, rhs = check_jensen_mixture([a, b], (0.5, 0.5))
    err = max(abs(lhs - math.log(2.0)), abs(rhs))
    checks.append(("jensen_disjoint_masses", err, 1e-12))
    worst = -math.inf
    for i in range(100):
        rng = make_rng(derive_seed(seed, 30, i))
        m, length = int(rng.integers(2, 6)), int(rng.integers(2, 17))
        comps = rng.random((m, length)) + 1e-12
        comps /= comps.sum(axis=1, keepdims=True)
        weights = rng.random(m)
        weights /= weights.sum()
        lhs, rhs = check_jensen_mixture(list(comps), weights)
        worst = max(worst, rhs - lhs)
    checks.append(("jensen_seeded_mixtures", worst, 1e-12))
    return checks


def _suite_concentration(seed, cfg):
    ns = tuple(_parse_list(cfg["ns"], int))
    curve = concentration_experiment(
        ns=ns, keep_prob=cfg["keep_prob"], trials=int(cfg["trials"]),
        seed=seed,
    )
    lo, hi = -0.65, -0.35
    err = 0.0 if lo <= curve.slope <= hi else min(
        abs(curve.slope - lo), abs(curve.slope - hi)
    )
    return [("concentration_slope", err, 0.0, curve)], curve


def cmd_validate(args):
    defaults = {
        "suite": "all", "trials": 64, "keep_prob": 0.5,
        "ns": "64,256,1024,4096",
    }
    cfg = _resolve(args, defaults)
    seed = _resolve_seed(args.seed)
    os.makedirs(args.out, exist_ok=True)
    suites = ("wigner", "folding", "jensen", "concentration") \
        if cfg["suite"] == "all" else (cfg["suite"],)
    report = {"suites": list(suites), "checks": []}
    all_passed = True
    curve = None
    for suite in suites:
        if suite == "wigner":
            checks = _suite_wigner(seed)
        elif suite == "folding":
            checks = _suite_folding(seed)
        elif suite == "jensen":
            checks = _suite_jensen(seed)
        elif suite == "concentration":
            checks, curve = _suite_concentration(seed, cfg)
            checks = [(name, err, bound) for name, err, bound, _ in checks]
        else:
            raise ValueError(f"unknown suite {suite!r}")
        for name, err, bound in checks:
            passed = err <= bound
            all_passed &= passed
            report["checks"].append({
                "name": name, "passed": passed,
                "error": float(err), "bound": float(bound),
            })
            print(f"{'PASS' if passed else 'FAIL'} {name} "
                  f"(error {err:.3e}, bound {bound:.3e})")
    if curve is not None:
        report["concentration"] = {
            "ns": list(curve.ns),
            "l1_means": [float(v) for v in curve.l1_means],
            "slope": float(curve.slope),
        }
        write_csv(os.path.join(args.out, "concentration.csv"),
                  ("n_windows", "mean_l1"),
                  list(zip(curve.ns, curve.l1_means)))
    report["passed"] = all_passed
    write_json(os.path.join(args.out, "report.json"), report)
    write_manifest(args.out, "validate", cfg, seed, [])
    if not all_passed:
        raise ValidationFailure("one or more validation checks failed")
    return EXIT_OK


def cmd_correlate(args):
    defaults = {"csv": None, "x_col": None, "y_col": None, "no_timestamp": False}
    cfg = _resolve(args, defaults)
    seed = _resolve_seed(args.seed)
    if not cfg["csv"] or not cfg["x_col"] or not cfg["y_col"]:
        raise ValueError("correlate needs --csv, --x-col and --y-col")
    os.makedirs(args.out, exist_ok=True)
    xs, ys = [], []
    with open(cfg["csv"], "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or cfg["x_col"] not in reader.fieldnames \
                or cfg["y_col"] not in reader.fieldnames:
            raise ValueError(
                f"columns {cfg['x_col']!r}/{cfg['y_col']!r} not found in "
                f"{cfg['csv']} (has {reader.fieldnames})"
            )
        for row in reader:
            xs.append(float(row[cfg["x_col"]]))
            ys.append(float(row[cfg["y_col"]]))
    fit = ols_pearson(xs, ys)
    out_json = os.path.join(args.out, "fit.json")
    write_json(out_json, fit.to_dict())
    scatter_svg(os.path.join(args.out, "scatter.svg"), xs, ys,
                cfg["x_col"], cfg["y_col"], fit=fit,
                timestamp=not cfg["no_timestamp"])
    write_manifest(args.out, "correlate", cfg, seed, [cfg["csv"]])
    print(f"wrote {out_json} (r={fit.pearson_r:+.4f}, n={fit.n})")
    return EXIT_OK


def cmd_ablate(args):
    defaults = {
        "wins": "12,24,48,96", "sigma_ratios": "0.5,1,2",
        "hop_ratios": "0.25,0.5,1",
        "families": "periodic,random,poisson_gap",
        "accel": 4.0, "acs": 24, "weighting": "uniform", "energy_floor": 1e-6,
    }
    defaults.update(_CALIB_DEFAULTS)
    cfg = _resolve(args, defaults)
    seed = _resolve_seed(args.seed)
    os.makedirs(args.out, exist_ok=True)
    stacks, _, input_paths = _load_calibration(cfg, seed)
    rows = ablation_sweep(
        stacks,
        wins=_parse_list(cfg["wins"], int),
        sigma_ratios=_parse_list(cfg["sigma_ratios"], float),
        hop_ratios=_parse_list(cfg["hop_ratios"], float),
        families=tuple(_parse_list(cfg["families"], str)),
        accel=cfg["accel"], acs=cfg["acs"], weighting=cfg["weighting"],
        energy_floor=cfg["energy_floor"], seed=seed,
    )
    sweep_cols = ("win", "sigma", "hop", "sigma_ratio", "hop_ratio", "family",
                  "accel", "sample", "skipped", "delta_s", "abs_delta_s")
    write_csv(os.path.join(args.out, "sweep.csv"), sweep_cols,
              [tuple(r[c] for c in sweep_cols) for r in rows])
    cells = ablation_summary(rows)
    cell_cols = ("win", "sigma", "hop", "sigma_ratio", "hop_ratio", "family",
                 "accel", "n", "skipped", "mean_abs_delta_s", "q25", "median",
                 "q75")
    write_csv(os.path.join(args.out, "cells.csv"), cell_cols,
              [tuple(c[k] for k in cell_cols) for c in cells])
    stability = win_rank_stability(rows)
    write_csv(os.path.join(args.out, "stability.csv"),
              ("win_a", "win_b", "spearman_r", "n_cells"),
              [(s["win_a"], s["win_b"], s["spearman_r"], s["n_cells"])
               for s in stability])
    write_manifest(args.out, "ablate", cfg, seed, input_paths)
    print(f"wrote {os.path.join(args.out, 'sweep.csv')} ({len(rows)} rows)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point

def _build_parser():
    parser = _Parser(prog="phasegate",
                     description="Band-entropy audits of acquisition masks.")
    parser.add_argument("--version", action="version",
                        version=f"phasegate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", parents=[], help="entropy change of fields",
                       description="Audit ARR1 fields against a mask.")
    _add_common(p)
    p.add_argument("--inputs", nargs="+", default=None,
                   help="ARR1 field files (2D f64 or c128)")
    p.add_argument("--mask", default=None, help="ARR1 mask file")
    p.add_argument("--multiscale", action="store_true", default=None)
    p.add_argument("--hop-ratio", dest="hop_ratio", type=float, default=None)
    _add_husimi(p)
    _add_mask_flags(p, default_kind=None)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("maskgen", help="generate a mask file")
    _add_common(p)
    _add_mask_flags(p, default_kind=None)
    p.set_defaults(func=cmd_maskgen)

    p = sub.add_parser("select", help="grid-search density parameters")
    _add_common(p)
    _add_calibration_flags(p)
    p.add_argument("--accel", type=float, default=None)
    p.add_argument("--acs", type=int, default=None)
    p.add_argument("--alphas", default=None)
    p.add_argument("--betas", default=None)
    p.add_argument("--criterion",
                   choices=("min_abs_delta_s", "min_kspace_l2",
                            "max_zero_filled_psnr"),
                   default=None)
    _add_husimi(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("mimo", help="channel shutoff study")
    _add_common(p)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--n-rx", dest="n_rx", type=int, default=None)
    p.add_argument("--n-tx", dest="n_tx", type=int, default=None)
    p.add_argument("--n-clusters", dest="n_clusters", type=int, default=None)
    p.add_argument("--paths-per-cluster", dest="paths_per_cluster", type=int,
                   default=None)
    p.add_argument("--angular-spread", dest="angular_spread", type=float,
                   default=None)
    p.add_argument("--snr-db", dest="snr_db", type=float, default=None)
    p.add_argument("--geometries", default=None)
    p.add_argument("--d-list", dest="d_list", default=None)
    p.add_argument("--axis", choices=("rx", "tx", "both"), default=None)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    _add_husimi(p)
    p.set_defaults(func=cmd_mimo)

    p = sub.add_parser("validate", help="theory check suites")
    _add_common(p)
    p.add_argument("--suite",
                   choices=("wigner", "folding", "jensen", "concentration",
                            "all"),
                   default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--keep-prob", dest="keep_prob", type=float, default=None)
    p.add_argument("--ns", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("correlate", help="fit quality against entropy change")
    _add_common(p)
    p.add_argument("--csv", default=None, help="input CSV with headers")
    p.add_argument("--x-col", dest="x_col", default=None)
    p.add_argument("--y-col", dest="y_col", default=None)
    p.add_argument("--no-timestamp", dest="no_timestamp", action="store_true",
                   default=None)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("ablate", help="window-parameter sweep")
    _add_common(p)
    _add_calibration_flags(p)
    p.add_argument("--wins", default=None)
    p.add_argument("--sigma-ratios", dest="sigma_ratios", default=None)
    p.add_argument("--hop-ratios", dest="hop_ratios", default=None)
    p.add_argument("--families", default=None)
    p.add_argument("--accel", type=float, default=None)
    p.add_argument("--acs", type=int, default=None)
    p.add_argument("--weighting", choices=("uniform", "energy"), default=None)
    p.add_argument("--energy-floor", dest="energy_floor", type=float,
                   default=None)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ArrFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())
