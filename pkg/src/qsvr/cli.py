"""Command-line interface: ``qsvr {synth,kernel,loocv,fit,predict,heatmap}``.

Exit codes: 0 success, 1 runtime or convergence failure, 2 input/usage error.
Every output file gets a ``<output>.manifest.json`` next to it.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConvergenceError, IngestionError
from .evaluation import loocv
from .feature_map import Covariate
from .inception import (
    Scenario,
    inverse_logit,
    read_covariate_rows,
    read_dataset,
    sample_weights,
    synth_dataset,
    write_dataset,
)
from .kernels import (
    METHODS,
    KernelMatrix,
    KernelSpec,
    covariate_digest,
    kernel_matrix,
    kernel_vector,
    psd_diagnostics,
    read_kernel_csv,
)
from .svr import SvrConfig, SvrModel, kkt_report, solve_dual

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out, command: str, inputs, seed=None, kernel_spec=None, svr_config=None, extra=None):
    doc = {
        "command": command,
        "inputs": {str(p): _file_digest(p) for p in inputs},
        "outputs": {str(out): _file_digest(out)},
        "kernel_spec": kernel_spec.to_dict() if kernel_spec else None,
        "svr_config": svr_config.to_dict() if svr_config else None,
        "seed": seed,
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        doc.update(extra)
    Path(str(out) + ".manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _kernel_spec(args) -> KernelSpec:
    return KernelSpec(
        method=args.method,
        shots=args.shots,
        seed=args.seed,
        gamma=args.gamma,
        coef0=args.coef0,
        degree=args.degree,
        lenient_gender=args.lenient_gender,
        clip_negative_eigenvalues=args.clip_psd,
    )


def _svr_config(args) -> SvrConfig:
    return SvrConfig(
        epsilon=args.epsilon,
        C=args.C,
        tolerance=args.tolerance,
        max_iterations=args.max_iterations,
    )


def _load_kernel_file(path, data) -> KernelMatrix:
    km = KernelMatrix.from_csv(path)
    if km.n != len(data):
        raise UsageError(f"{path}: {km.n}x{km.n} kernel for {len(data)} groups")
    if km.data_hash and km.data_hash != covariate_digest(data.covariates()):
        raise UsageError(f"{path}: kernel was computed on different covariates (data_hash mismatch)")
    return km


# --- commands ---------------------------------------------------------------


def cmd_synth(args) -> int:
    scenario = Scenario(
        intercept=args.intercept,
        age_slope=args.age_slope,
        male_shift=args.male_shift,
        fixed_probability=args.probability,
        age_min=args.age_min,
        age_max=args.age_max,
        peak_age=args.peak_age,
        peak_width=args.peak_width,
        exposure_min=args.exposure_min,
        exposure_max=args.exposure_max,
    )
    data = synth_dataset(args.n, args.seed, scenario)
    write_dataset(data, args.out)
    write_manifest(args.out, "synth", [], seed=args.seed,
                   extra={"scenario": scenario.__dict__, "n": args.n})
    print(f"wrote {len(data)} groups to {args.out}")
    return EXIT_OK


def cmd_kernel(args) -> int:
    data = read_dataset(args.data)
    spec = _kernel_spec(args)
    km = kernel_matrix(data.covariates(), spec, threads=args.threads)
    km.to_csv(args.out)
    diag = psd_diagnostics(km)
    write_manifest(args.out, "kernel", [args.data], seed=args.seed, kernel_spec=km.spec)
    print(f"wrote {km.n}x{km.n} {spec.method} kernel to {args.out}")
    print(f"min_eigenvalue={diag.min_eigenvalue:.6g} symmetry_defect={diag.symmetry_defect:.3g}")
    return EXIT_OK


def cmd_loocv(args) -> int:
    data = read_dataset(args.data)
    config = _svr_config(args)
    inputs = [args.data]
    if args.kernel_file:
        km = _load_kernel_file(args.kernel_file, data)
        inputs.append(args.kernel_file)
    else:
        km = kernel_matrix(data.covariates(), _kernel_spec(args), threads=args.threads)
    result = loocv(data, config=config, kernel=km, threads=args.threads)
    out = Path(args.out)
    result.write_csv(out)
    json_path = out.with_suffix(".json")
    json_path.write_text(result.to_json())
    write_manifest(out, "loocv", inputs, seed=km.spec.seed, kernel_spec=km.spec, svr_config=config,
                   extra={"json": str(json_path)})
    if result.r2_defined:
        print(f"weighted_r2={result.weighted_r2:.6f} ({km.spec.method}, n={len(data)})")
    else:
        print(f"weighted_r2=undefined ({result.r2_note})")
    return EXIT_OK


def cmd_fit(args) -> int:
    data = read_dataset(args.data)
    config = _svr_config(args)
    X = data.covariates()
    km = kernel_matrix(X, _kernel_spec(args), threads=args.threads)
    y = data.targets()
    model = solve_dual(km, y, sample_weights(data), config, training_inputs=X)
    Path(args.out).write_text(model.to_json())
    rep = kkt_report(model, km, y)
    write_manifest(args.out, "fit", [args.data], seed=args.seed, kernel_spec=km.spec, svr_config=config)
    print(f"fitted {len(data)} groups: {rep.n_support} support vectors "
          f"({rep.n_bounded} at bound), max KKT violation {rep.max_violation:.3g}")
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        model = SvrModel.from_json(Path(args.model).read_text())
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"{args.model}: {exc}") from exc
    rows = read_covariate_rows(args.data)
    X = [Covariate(g, age / 100.0) for _, g, age in rows]
    n_train = len(model.training_inputs)
    same_data = covariate_digest(X) == model.data_hash
    if not same_data:
        print(f"warning: {args.data} differs from the model's training covariates", file=sys.stderr)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group_id", "gender", "age_years", "predicted_logit", "predicted_rate"])
        for k, ((gid, g, age), x) in enumerate(zip(rows, X)):
            # training rows reuse their own seeds so shot kernels match the fit
            row = k if same_data else n_train + k
            kv = kernel_vector(x, model.training_inputs, model.kernel_spec, row=row)
            f = float(kv @ model.alpha + model.beta)
            w.writerow([gid, "FM"[g], repr(float(age)), format(f, ".17g"),
                        format(inverse_logit(f), ".17g")])
    write_manifest(args.out, "predict", [args.model, args.data],
                   kernel_spec=model.kernel_spec, svr_config=model.config)
    print(f"wrote {len(rows)} predictions to {args.out}")
    return EXIT_OK


def render_pgm(values: np.ndarray, scale: int) -> bytes:
    levels = np.rint(255 * np.clip(values, 0.0, 1.0)).astype(np.uint8)
    img = np.kron(levels, np.ones((scale, scale), dtype=np.uint8))
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode() + img.tobytes()


def render_svg(values: np.ndarray, scale: int) -> bytes:
    n = values.shape[0]
    levels = np.rint(255 * np.clip(values, 0.0, 1.0)).astype(int)
    size = n * scale
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}" shape-rendering="crispEdges">'
    ]
    for i in range(n):
        for j in range(n):
            v = levels[i, j]
            parts.append(f'<rect x="{j * scale}" y="{i * scale}" width="{scale}" '
                         f'height="{scale}" fill="rgb({v},{v},{v})"/>')
    parts.append("</svg>\n")
    return "\n".join(parts).encode()


def cmd_heatmap(args) -> int:
    try:
        values = read_kernel_csv(args.kernel)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    render = render_svg if str(args.out).endswith(".svg") else render_pgm
    Path(args.out).write_bytes(render(values, args.scale))
    write_manifest(args.out, "heatmap", [args.kernel])
    print(f"wrote {values.shape[0]}x{values.shape[0]} heatmap to {args.out}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _add_kernel_flags(p):
    p.add_argument("--method", choices=[m for m in METHODS if m != "precomputed"], default="statevector")
    p.add_argument("--shots", type=int, default=8192, help="shots per kernel entry (shots method)")
    p.add_argument("--seed", type=int, default=0, help="master seed for all sampling")
    p.add_argument("--gamma", type=float, default=None,
                   help="polynomial/rbf/sigmoid scale; default 1/(d*var(X))")
    p.add_argument("--coef0", type=float, default=0.0)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--lenient-gender", action="store_true",
                   help="accept non-binary gender values in quantum feature maps")
    p.add_argument("--clip-psd", action="store_true", help="clip negative kernel eigenvalues to zero")


def _add_svr_flags(p):
    p.add_argument("--epsilon", type=float, default=0.05, help="tube half-width in logit units")
    p.add_argument("--C", type=float, default=1.0, help="base box bound; C_i = C * w_i")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iterations", type=int, default=100_000)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="qsvr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--config", default=None, help="JSON file of flag defaults")
        p.add_argument("--threads", type=int, default=1, help="worker cap; output is independent of it")
        subs[name] = p
        return p

    p = add("synth", cmd_synth, "generate a synthetic cohort CSV")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--n", type=int, default=81)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--intercept", type=float, default=-5.0)
    p.add_argument("--age-slope", type=float, default=3.0)
    p.add_argument("--male-shift", type=float, default=0.5)
    p.add_argument("--probability", type=float, default=None, help="fix p for every group")
    p.add_argument("--age-min", type=float, default=20.0)
    p.add_argument("--age-max", type=float, default=60.0)
    p.add_argument("--peak-age", type=float, default=40.0)
    p.add_argument("--peak-width", type=float, default=12.0)
    p.add_argument("--exposure-min", type=int, default=10_000)
    p.add_argument("--exposure-max", type=int, default=100_000)

    p = add("kernel", cmd_kernel, "compute a kernel matrix CSV")
    p.add_argument("data")
    p.add_argument("-o", "--out", required=True)
    _add_kernel_flags(p)

    p = add("loocv", cmd_loocv, "leave-one-out evaluation with weighted R^2")
    p.add_argument("data")
    p.add_argument("-o", "--out", required=True, help="per-group results CSV")
    p.add_argument("--kernel-file", default=None, help="reuse a precomputed kernel CSV")
    _add_kernel_flags(p)
    _add_svr_flags(p)

    p = add("fit", cmd_fit, "fit a model on all groups")
    p.add_argument("data")
    p.add_argument("-o", "--out", required=True, help="model JSON")
    _add_kernel_flags(p)
    _add_svr_flags(p)

    p = add("predict", cmd_predict, "predict inception rates from a fitted model")
    p.add_argument("model")
    p.add_argument("data", help="CSV with group_id,gender,age_years columns")
    p.add_argument("-o", "--out", required=True)

    p = add("heatmap", cmd_heatmap, "render a kernel CSV as a grayscale image (.pgm or .svg)")
    p.add_argument("kernel")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--scale", type=int, default=8, help="pixels per matrix entry")

    return parser, subs


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"--config: {exc}")
        p = subs[args.command]
        known = {a.dest for a in p._actions}
        unknown = sorted(k for k in cfg if k.replace("-", "_") not in known)
        if unknown:
            parser.error(f"--config: unknown key(s) {', '.join(unknown)}")
        p.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, IngestionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
