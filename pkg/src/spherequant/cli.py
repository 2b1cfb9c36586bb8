"""Batch experiment runner.

One subcommand per headline experiment; every run writes plot-ready CSV
files, a ``summary.json`` and a ``manifest.json`` into the output
directory.  The manifest records the full parameter set, the gate
thresholds verbatim, SHA-256 digests of the emitted files and wall-clock
timestamps; CSV bodies are reproducible byte for byte from the manifest
parameters.

Exit codes: 0 success, 2 invalid arguments, 3 a gated check failed.
Errors are also emitted as JSON on stderr.

Parallelism across independent (k, sample) tasks is controlled by the
environment variable ``SPHEREQUANT_WORKERS`` (default: available cores);
results are merged by index, so they do not depend on the worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .asymptotics import loglog_slope
from .cp1 import (
    GeometryConfig,
    OMEGA_R,
    ROUND_FS,
    bergman_density,
    curvature_density,
    fs_pullback_grid,
    h0_dimension,
    potential_convergence,
    standard_rho_grid,
    volume_density,
)
from .model_kernel import (
    ModelKernelParams,
    diag_constant_convention_ratio,
    model_diag_constant,
    model_kernel_closed,
    model_kernel_series,
)
from .random_zeros import (
    FULL_BASIS,
    PAPER_LITERAL,
    EnsembleSpec,
    RootConvergenceError,
    angular_uniformity,
    find_roots,
    ks_statistic,
    limit_radial_cdf,
    radial_cdf_empirical,
    sample_polynomial,
    truncation_radius,
)
from .toeplitz import composition_defect, operator_norm, preset_symbols, szego_target, szego_trace

_PHI_PRESETS = {
    "sq": lambda s: s ** 2,
    "cube": lambda s: s ** 3,
}


@dataclass
class Gate:
    name: str
    threshold: str
    value: float
    passed: bool


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else _fmt(c) for c in row) + "\n")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _worker_count() -> int:
    env = os.environ.get("SPHEREQUANT_WORKERS", "")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """Order-preserving map over independent tasks; worker-count independent."""
    items = list(items)
    workers = _worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
        chunk = max(1, len(items) // (workers * 4))
        return list(ex.map(fn, items, chunksize=chunk))


def _parse_k_grid(text: str, require_geometric: bool) -> list[int]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3 or parts[2] != "geometric":
            raise ValueError(f"k-grid range must be start:stop:geometric, got {text!r}")
        start, stop = int(parts[0]), int(parts[1])
        if start < 1 or stop < start:
            raise ValueError(f"bad k-grid range {text!r}")
        ks = []
        k = start
        while k <= stop:
            ks.append(k)
            k *= 2
    else:
        ks = [int(p) for p in text.split(",") if p]
    if len(ks) < 1 or any(k < 1 for k in ks):
        raise ValueError(f"bad k-grid {text!r}")
    if require_geometric and len(ks) >= 2:
        ratio = ks[1] / ks[0]
        for a, b in zip(ks, ks[1:]):
            if b / a != ratio:
                raise ValueError(f"k-grid must be geometric, got {ks}")
    return ks


def _volume(text: str) -> str:
    return {"omega": OMEGA_R, "round": ROUND_FS}[text]


def _check_r(r: int) -> int:
    if r < 2 or r > 8 or r % 2 != 0:
        raise ValueError(f"r must be an even integer in 2..8, got {r}")
    return r


# ---------------------------------------------------------------------------
# subcommands


def run_bergman_expansion(args, out):
    r = _check_r(args.r)
    ks = _parse_k_grid(args.k_grid, require_geometric=True)
    cfg = GeometryConfig(r=r, volume_form=_volume(args.volume))
    rows = []
    dens0, dens1 = [], []
    for k in ks:
        d0 = bergman_density(cfg, k, 0.0)
        d1 = bergman_density(cfg, k, 1.0)
        dens0.append(d0)
        dens1.append(d1)
        rows.append([k, "z=0", d0, math.log(d0)])
        rows.append([k, "z=1", d1, math.log(d1)])
    _write_csv(os.path.join(out, "bergman_expansion.csv"),
               ["k", "z_label", "density", "log_density"], rows)

    fit0 = loglog_slope(ks, dens0)
    fit1 = loglog_slope(ks, dens1)
    gates = [
        Gate("exponent_at_origin", f"|slope - {2 / r}| <= 0.05", fit0.slope,
             abs(fit0.slope - 2.0 / r) <= 0.05),
        Gate("exponent_on_positive_locus", "|slope - 1| <= 0.02", fit1.slope,
             abs(fit1.slope - 1.0) <= 0.02),
    ]
    # leading-constant comparison against the flat model at the pole; the
    # jet magnitude 2 pi^(r/2) expresses the curvature in coordinates in
    # which the volume measure is locally Lebesgue
    model_c0 = model_diag_constant(ModelKernelParams(r=r, R0=2.0 * math.pi ** (r / 2.0)))
    emp_c0 = dens0[-1] / ks[-1] ** (2.0 / r)
    summary = {
        "slope_origin": fit0.slope,
        "slope_positive_locus": fit1.slope,
        "max_fit_residual": max(fit0.max_residual, fit1.max_residual),
        "model_constant": model_c0,
        "empirical_constant_origin": emp_c0,
        "model_constant_ratio": emp_c0 / model_c0,
        "positive_locus_constant": curvature_density(r, 1.0) / volume_density(cfg, 1.0),
        "empirical_constant_positive_locus": dens1[-1] / ks[-1],
    }
    if r == 2:
        summary["c1_fit"] = ks[-1] * (dens1[-1] / ks[-1] - 1.0)
    return ["bergman_expansion.csv"], summary, gates


def run_fs_convergence(args, out):
    r = _check_r(args.r)
    ks = _parse_k_grid(args.k_grid, require_geometric=False)
    cfg = GeometryConfig(r=r, volume_form=_volume(args.volume))
    grid = standard_rho_grid()
    grid = grid[grid > 0.0]
    rows = []
    sups, pots = [], []
    for k in ks:
        fs = fs_pullback_grid(cfg, k, grid)
        curv = np.array([curvature_density(r, rho) for rho in grid])
        sup = float(np.max(np.abs(fs - curv)))
        pot = potential_convergence(cfg, k)
        sups.append(sup)
        pots.append(pot)
        rows.append([k, sup, pot])
    _write_csv(os.path.join(out, "fs_convergence.csv"),
               ["k", "sup_error", "potential_sup"], rows)

    summary = {"sup_errors": dict(zip(map(str, ks), sups)),
               "potential_sups": dict(zip(map(str, ks), pots))}
    gates = []
    kmax = ks[-1]
    if r == 2:
        gates.append(Gate("flat_case_exact", "sup_error <= 1e-8", sups[-1], sups[-1] <= 1e-8))
    else:
        fit = loglog_slope(ks, sups)
        summary["fitted_slope"] = fit.slope
        gates.append(Gate("sup_error_decreasing", "strictly decreasing over k grid",
                          float(np.max(np.diff(sups))), bool(np.all(np.diff(sups) < 0))))
        gates.append(Gate("convergence_rate", "fitted slope <= -0.30", fit.slope,
                          fit.slope <= -0.30))
    bound = 3.0 * math.log(kmax) / kmax
    gates.append(Gate("potential_rate", f"sup |ln density|/k <= 3 ln(k)/k at k={kmax}",
                      pots[-1], pots[-1] <= bound))
    return ["fs_convergence.csv"], summary, gates


def run_toeplitz(args, out):
    r = _check_r(args.r)
    ks = _parse_k_grid(args.k_grid, require_geometric=False)
    cfg = GeometryConfig(r=r, volume_form=_volume(args.volume))
    presets = preset_symbols()
    names = [s for s in args.symbol.split(",") if s]
    for name in names:
        if name not in presets:
            raise ValueError(f"unknown symbol preset {name!r}")
    gates = []
    summary = {}

    norm_rows = []
    defects = {}
    for name in names:
        f = presets[name]
        for k in ks:
            norm = operator_norm(cfg, k, f)
            defect = abs(norm - f.sup_norm_hint)
            defects.setdefault(name, []).append(defect)
            norm_rows.append([k, name, norm, f.sup_norm_hint, defect])
            gates.append(Gate(f"contraction_{name}_k{k}", "norm <= sup|f| + 1e-9",
                              norm, norm <= f.sup_norm_hint + 1e-9))
    for name in names:
        d = defects[name]
        gates.append(Gate(f"norm_defect_decreases_{name}",
                          f"defect at k={ks[-1]} < defect at k={ks[0]}",
                          d[-1], d[-1] < d[0]))
    if "peak0" in names and r >= 4:
        gates.append(Gate("degenerate_peak_norm", f"defect <= 0.05 at k={ks[-1]}",
                          defects["peak0"][-1], defects["peak0"][-1] <= 0.05))
    _write_csv(os.path.join(out, "toeplitz_norms.csv"),
               ["k", "symbol", "norm", "sup_f", "defect"], norm_rows)

    f, g = presets["cauchy"], presets["bump"]
    comp_rows = []
    comp = []
    for k in ks:
        c = composition_defect(cfg, k, f, g)
        comp.append(c)
        comp_rows.append([k, "cauchy", "bump", c])
    _write_csv(os.path.join(out, "toeplitz_composition.csv"),
               ["k", "f", "g", "defect"], comp_rows)
    fit = loglog_slope(ks, comp)
    summary["composition_slope"] = fit.slope
    gates.append(Gate("composition_rate", f"slope <= {-1.0 / r + 0.1}", fit.slope,
                      fit.slope <= -1.0 / r + 0.1))

    tr_one = szego_trace(cfg, ks[0], presets["one"], lambda s: s)
    exact = r / 2.0 + 1.0 / ks[0]
    gates.append(Gate("trace_identity", "(1/k) tr T_1 = r/2 + 1/k", tr_one,
                      abs(tr_one - exact) <= 1e-12 * exact))
    # pairs chosen for regular error decay across r and both volume forms;
    # cauchy-type weights hit an error sign-crossing at the poles under the
    # degenerate measure, which makes a halving gate meaningless there
    szego_rows = []
    for fname, phname in (("bump", "cube"), ("equator", "sq")):
        fs = presets[fname]
        phi = _PHI_PRESETS[phname]
        target = szego_target(r, fs, phi)
        errs = []
        for k in ks:
            tr = szego_trace(cfg, k, fs, phi)
            errs.append(abs(tr - target))
            szego_rows.append([k, fname, phname, tr, target, errs[-1]])
        gates.append(Gate(f"szego_{fname}_{phname}",
                          f"error at k={ks[-1]} <= half error at k={ks[0]}",
                          errs[-1], errs[-1] <= 0.5 * errs[0]))
    _write_csv(os.path.join(out, "toeplitz_szego.csv"),
               ["k", "f", "phi", "trace", "target", "error"], szego_rows)
    summary["norm_defects"] = {n: defects[n] for n in names}
    return ["toeplitz_norms.csv", "toeplitz_composition.csv", "toeplitz_szego.csv"], summary, gates


def _root_task(payload):
    mode, k, r, seed, samples, index = payload
    spec = EnsembleSpec(mode=mode, k=k, r=r, seed=seed, samples=samples)
    coeffs = sample_polynomial(spec, index)
    try:
        return index, find_roots(coeffs), ""
    except RootConvergenceError as exc:
        return index, None, str(exc)


def run_random_zeros(args, out):
    r = _check_r(args.r)
    mode = {"full": FULL_BASIS, "paper-literal": PAPER_LITERAL}[args.mode]
    spec = EnsembleSpec(mode=mode, k=args.k, r=r, seed=args.seed, samples=args.samples)
    payloads = [(mode, args.k, r, args.seed, args.samples, i) for i in range(args.samples)]
    results = parallel_map(_root_task, payloads)

    rows = []
    samples = []
    failures = []
    for index, rs, err in results:
        if rs is None:
            failures.append({"index": index, "error": err})
            continue
        samples.append(rs)
        rows.append([index, rs.roots.size, rs.count_at_infinity, rs.residual])
    _write_csv(os.path.join(out, "random_zeros_samples.csv"),
               ["index", "finite_roots", "roots_at_infinity", "max_residual"], rows)

    outputs = ["random_zeros_samples.csv"]
    if args.emit_roots:
        path = os.path.join(out, "roots.txt")
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            for rs in samples:
                for z in rs.roots:
                    fh.write(f"{z.real:.17e},{z.imag:.17e}\n")
        outputs.append("roots.txt")

    mods = np.abs(np.concatenate([s.roots for s in samples]))
    ks_radial = ks_statistic(samples, limit_radial_cdf(r))
    ks_ang = angular_uniformity(samples)
    median = float(np.median(mods))
    summary = {
        "pooled_roots": int(mods.size),
        "excluded_samples": failures,
        "ks_radial": ks_radial,
        "ks_angular": ks_ang,
        "median_modulus": median,
        "radial_cdf_at_1": radial_cdf_empirical(samples, 1.0),
    }
    gates = []
    if mode == FULL_BASIS:
        gates.append(Gate("radial_law", "KS <= 0.02 against t^r/(1+t^r)",
                          ks_radial, ks_radial <= 0.02))
        gates.append(Gate("angular_uniformity", "KS <= 0.02 against uniform angle",
                          ks_ang, ks_ang <= 0.02))
        if r == 2:
            gates.append(Gate("su2_median", "median modulus within 1 +- 0.02",
                              median, abs(median - 1.0) <= 0.02))
    else:
        # reported, not gated: how the literal ensemble concentrates
        rc = truncation_radius(r)
        summary["predicted_truncation_radius"] = rc
        summary["modulus_quantiles"] = {
            q: float(np.quantile(mods, float(q))) for q in ("0.5", "0.9", "0.99")
        }
        summary["max_modulus"] = float(mods.max())
    return outputs, summary, gates


def run_model_kernel(args, out):
    rng = np.random.Generator(np.random.Philox(key=np.array([args.seed, 1], dtype=np.uint64)))
    rows = []
    summary = {}
    gates = []
    worst = 0.0
    for r in (2, 4, 6):
        p = ModelKernelParams(r=r, R0=args.R0)
        diag = model_diag_constant(p)
        ratio = diag_constant_convention_ratio(p)
        summary[f"diag_constant_r{r}"] = diag
        summary[f"convention_ratio_r{r}"] = ratio
        gates.append(Gate(f"convention_ratio_r{r}",
                          f"|ratio - 2^(-2/{r})| <= 1e-6", ratio,
                          abs(ratio - 2.0 ** (-2.0 / r)) <= 1e-6))
        scale = model_diag_constant(p)
        for _ in range(30):
            z = complex(*(rng.uniform(-2.0, 2.0, 2)))
            w = complex(*(rng.uniform(-2.0, 2.0, 2)))
            s = model_kernel_series(p, z, w, terms=800)
            c = model_kernel_closed(p, z, w)
            gap = abs(s - c) / scale
            worst = max(worst, gap)
            rows.append([r, z.real, z.imag, w.real, w.imag,
                         s.real, s.imag, c.real, c.imag, gap])
    _write_csv(os.path.join(out, "model_kernel.csv"),
               ["r", "z_re", "z_im", "w_re", "w_im",
                "series_re", "series_im", "closed_re", "closed_im", "rel_gap"], rows)
    gates.append(Gate("series_vs_closed", "max relative gap <= 1e-9", worst, worst <= 1e-9))
    p2 = ModelKernelParams(r=2, R0=args.R0)
    diag2 = model_diag_constant(p2)
    target = args.R0 / (2.0 * math.pi)
    gates.append(Gate("gaussian_diagonal", "diag constant = R0/(2 pi) to 1e-9",
                      diag2, abs(diag2 - target) <= 1e-9 * target))
    summary["max_series_closed_gap"] = worst
    return ["model_kernel.csv"], summary, gates


# ---------------------------------------------------------------------------
# driver


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spherequant",
                                 description="experiment runner for sphere quantization checks")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, k_default):
        p.add_argument("--r", type=int, default=4, help="even vanishing-order parameter, 2..8")
        p.add_argument("--k-grid", default=k_default,
                       help="comma list of tensor powers or start:stop:geometric")
        p.add_argument("--volume", choices=("omega", "round"), default="round")
        p.add_argument("--seed", type=int, default=20240801)
        p.add_argument("--out-dir", default=".")

    p = sub.add_parser("bergman-expansion", help="density growth exponents on the diagonal")
    common(p, "16:2048:geometric")

    p = sub.add_parser("fs-convergence", help="pulled-back projective form vs curvature")
    common(p, "64,128,256,512,1024")

    p = sub.add_parser("toeplitz", help="operator norms, composition defects, spectral traces")
    common(p, "64,128,256,512")
    p.add_argument("--symbol", default="cauchy,bump,peak0,equator",
                   help="comma list of preset symbol names")
    p.set_defaults(volume="omega")

    p = sub.add_parser("random-zeros", help="empirical zero distributions of random polynomials")
    common(p, "64")
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--mode", choices=("full", "paper-literal"), default="full")
    p.add_argument("--emit-roots", action="store_true")
    p.set_defaults(volume="omega")

    p = sub.add_parser("model-kernel", help="flat model kernel: series vs closed form")
    common(p, "1")
    p.add_argument("--R0", type=float, default=1.0)

    return ap


_RUNNERS = {
    "bergman-expansion": run_bergman_expansion,
    "fs-convergence": run_fs_convergence,
    "toeplitz": run_toeplitz,
    "random-zeros": run_random_zeros,
    "model-kernel": run_model_kernel,
}


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.monotonic()
    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    try:
        outputs, summary, gates = _RUNNERS[args.command](args, out)
    except ValueError as exc:
        json.dump({"error": str(exc), "command": args.command}, sys.stderr)
        sys.stderr.write("\n")
        return 2

    finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
    manifest = {
        "tool_version": __version__,
        "subcommand": args.command,
        "parameters": {k: v for k, v in sorted(vars(args).items()) if k != "command"},
        "workers": _worker_count(),
        "started_at": started,
        "finished_at": finished,
        "elapsed_seconds": time.monotonic() - t0,
        "outputs": {name: _sha256(os.path.join(out, name)) for name in outputs},
        "gates": [asdict(g) for g in gates],
    }
    with open(os.path.join(out, "summary.json"), "w", encoding="ascii") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2, default=float)
        fh.write("\n")
    with open(os.path.join(out, "manifest.json"), "w", encoding="ascii") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2, default=float)
        fh.write("\n")

    for g in gates:
        print(f"[{'PASS' if g.passed else 'FAIL'}] {g.name}: value={g.value:.6g} ({g.threshold})")
    if not all(g.passed for g in gates):
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
