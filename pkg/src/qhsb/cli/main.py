"""``qhsb`` command-line entry point.

Subcommands: verify, spectrum, perturb, pulse, quench, periodic, evolve, fig1.
Each reads a config file (or the built-in ``fig1`` preset) and writes
deterministic CSV files into ``--out``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..dyson import assemble_h0, assemble_h_closed, assemble_Htilde, dyson_residual
from ..evolution import initial_dressed_state, propagate
from ..operators import HilbertSpec
from ..perturbation import PerturbationContext, first_order, second_order, w2_shift
from ..spectra import (
    closed_form_levels,
    diagonalize_full,
    guarded_eigvals,
    parity_defect,
    q_commutator_defect,
    q_selection_defect,
)
from ..trajectories import BOUNDED, check_hermiticity_conditions, classify_boundedness
from ..transitions import (
    Protocol,
    amplitude_integral,
    bd_coefficients,
    delta_pulse_amplitude,
    delta_pulse_jump,
    gap,
    sideband_amplitude,
    suppression_times,
)
from .config import PRESETS, ConfigError, ScenarioConfig, load_config, parse_config
from .output import write_csv, write_svg

VERIFY_TOLERANCES = {
    "hermiticity_conditions": 1e-12,
    "boundedness": 0.5,
    "dyson_equation": 1e-8,
    "dyson_hermiticity": 1e-8,
    "h_closed_hermiticity": 1e-10,
    "isospectrality": 1e-7,
    "spectrum_reality": 1e-9,
    "closed_form_spectrum": 1e-9,
    "q_commutator": 1e-12,
    "parity": 1e-12,
    "q_selection": 1e-15,
    "bd_identity": 1e-12,
    "first_order_zero": 1e-12,
}


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _grid(cfg: ScenarioConfig, section: str) -> np.ndarray:
    n = cfg.integer(section, "t_points")
    if n < 1:
        raise ConfigError(f"[{section}] t_points must be positive")
    return np.linspace(cfg.number(section, "t_start"), cfg.number(section, "t_stop"), n)


def _check_sectors(cfg: ScenarioConfig, spec: HilbertSpec, sectors, section: str):
    limit = spec.n_valid - 4
    bad = [n for n in sectors if n < 0 or n >= limit]
    if bad:
        raise ConfigError(f"[{section}] sectors {bad} must satisfy 0 <= n < cutoff - guard_band - 4 = {limit}")


def _nearest_dev(ref, vals, relative: bool):
    """Largest distance from each ``ref`` value to its nearest neighbour in ``vals``."""
    ref = np.asarray(ref)
    vals = np.asarray(vals)
    d = np.min(np.abs(ref[:, None] - vals[None, :]), axis=1)
    if relative:
        d = d / np.maximum(np.abs(ref), 1.0)
    return float(np.max(d))


# verify -----------------------------------------------------------------------


def _verify_point(params, spec, t, n_max):
    """All per-time residuals as ``{clause: value}`` (errors recorded as strings)."""
    out = {}

    def run(name, fn):
        try:
            out[name] = float(fn())
        except Exception as exc:  # noqa: BLE001 - recorded in the report
            out[name] = f"error: {exc}"

    run("hermiticity_conditions", lambda: max(check_hermiticity_conditions(params, t).residuals.values()))
    dres = {}

    def dyson():
        dres["v"] = dyson_residual(params, t, spec)
        return dres["v"][0]

    run("dyson_equation", dyson)
    run("dyson_hermiticity", lambda: dres["v"][1])
    hc = assemble_h_closed(params, t, spec)
    from ..operators import hermiticity_defect

    run("h_closed_hermiticity", lambda: hermiticity_defect(hc, spec))
    Ht = assemble_Htilde(params, t, spec)
    wt = {}

    def reality():
        wt["v"] = guarded_eigvals(Ht, spec)
        low = wt["v"][: 2 * n_max + 1]
        return np.max(np.abs(low.imag))

    run("spectrum_reality", reality)

    def iso():
        ref = np.sort(guarded_eigvals(hc, spec).real)[: 2 * n_max + 1]
        return _nearest_dev(ref, wt["v"].real, relative=False)

    run("isospectrality", iso)
    eff = params.effective(t)

    def closed():
        levels = [lv.energy for lv in closed_form_levels(eff, n_max)]
        num = [e for e, _ in diagonalize_full(assemble_h0(eff, spec), spec)]
        return _nearest_dev(levels, num, relative=True)

    run("closed_form_spectrum", closed)
    run("q_commutator", lambda: q_commutator_defect(assemble_h0(eff, spec), spec))
    run("parity", lambda: parity_defect(hc, spec))
    run("q_selection", lambda: q_selection_defect(hc, spec))

    def bd():
        worst = 0.0
        for n in range(n_max + 1):
            B, D = bd_coefficients(n, eff)
            worst = max(worst, abs(D - float(gap(n, eff)) * B / 2))
        return worst

    run("bd_identity", bd)

    def fo():
        ctx = PerturbationContext.from_params(params, t)
        return max(abs(first_order(n, s, ctx, spec)) for n in range(n_max + 1) for s in (1, -1))

    run("first_order_zero", fo)
    return out


def cmd_verify(cfg: ScenarioConfig, spec: HilbertSpec, out_dir: str | None, threads: int) -> int:
    params = cfg.parameter_set()
    rng = np.random.default_rng(cfg.integer("verify", "seed"))
    times = np.sort(rng.uniform(cfg.number("verify", "t_start"), cfg.number("verify", "t_stop"), cfg.integer("verify", "t_points")))
    n_max = cfg.integer("verify", "n_max")
    _check_sectors(cfg, spec, [n_max], "verify")
    label = classify_boundedness(params)
    clauses = [
        {
            "name": "boundedness",
            "value": label,
            "tolerance": BOUNDED,
            "passed": label == BOUNDED or params.expert,
        }
    ]
    if clauses[0]["passed"]:
        points = _pmap(lambda t: _verify_point(params, spec, t, n_max), times, threads)
        for name, tol in VERIFY_TOLERANCES.items():
            if name == "boundedness":
                continue
            vals = [p[name] for p in points]
            errors = [v for v in vals if isinstance(v, str)]
            worst = max((v for v in vals if not isinstance(v, str)), default=float("nan"))
            entry = {"name": name, "max_residual": worst, "tolerance": tol, "passed": not errors and worst < tol}
            if errors:
                entry["error"] = errors[0]
            clauses.append(entry)
    failed = [c["name"] for c in clauses if not c["passed"]]
    report = {
        "passed": not failed,
        "failed_clauses": failed,
        "clauses": clauses,
        "times": [float(t) for t in times],
        "config": cfg.render(),
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "verify.json"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
    return 0 if not failed else 1


# spectrum / perturb ---------------------------------------------------------------


def spectrum_rows(params, spec, times, n_max, threads):
    def one(t):
        eff = params.effective(t)
        levels = closed_form_levels(eff, n_max)
        rows = [(t, i, lv.n, lv.branch, lv.energy, lv.theta) for i, lv in enumerate(levels)]
        w = guarded_eigvals(assemble_Htilde(params, t, spec), spec)
        low = w[: 2 * n_max + 1]
        num = [e for e, _ in diagonalize_full(assemble_h0(eff, spec), spec)]
        check = (t, float(np.max(np.abs(low.imag))), _nearest_dev([lv.energy for lv in levels], num, True))
        return rows, check

    res = _pmap(one, times, threads)
    return [r for rows, _ in res for r in rows], [c for _, c in res]


def cmd_spectrum(cfg, spec, out_dir, threads, params=None, prefix="spectrum"):
    params = params or cfg.parameter_set()
    times = _grid(cfg, "spectrum")
    n_max = cfg.integer("spectrum", "n_max")
    _check_sectors(cfg, spec, [n_max], "spectrum")
    rows, checks = spectrum_rows(params, spec, times, n_max, threads)
    header = cfg.render()
    path = write_csv(
        os.path.join(out_dir, f"{prefix}.csv"),
        ["t", "level_index", "n", "branch", "energy", "theta_n"],
        rows,
        header,
        "instantaneous closed-form levels",
    )
    write_csv(
        os.path.join(out_dir, f"{prefix}_check.csv"),
        ["t", "max_imag_Htilde", "max_rel_dev_closed_vs_numeric"],
        checks,
        header,
        "numerical oracle for the closed-form levels",
    )
    if cfg.boolean("output", "svg"):
        series = {}
        for t, _, n, br, e, _ in rows:
            series.setdefault(f"{n}{br}", ([], []))
            series[f"{n}{br}"][0].append(t)
            series[f"{n}{br}"][1].append(e)
        write_svg(os.path.join(out_dir, f"{prefix}.svg"), series, "t", "energy")
    return path


def perturb_rows(params, spec, times, sectors, include_vac, threads):
    def one(t):
        ctx = PerturbationContext.from_params(params, t)
        rows = []
        for n in sectors:
            for sg in (1, -1):
                gated = second_order(n, sg, ctx, include_vacuum_channel=False)
                full = second_order(n, sg, ctx, include_vacuum_channel=True)
                ch = full.channels
                rows.append(
                    (
                        t, n, "+" if sg > 0 else "-", ctx.energy(n, sg), gated.second_order, full.second_order,
                        w2_shift(n, sg, ctx),
                        ch.get((n + 2, 1)), ch.get((n + 2, -1)), ch.get((n - 2, 1)), ch.get((n - 2, -1)),
                        ch.get((-1, 0)),
                    )
                )
        if include_vac:
            full = second_order(-1, 0, ctx, include_vacuum_channel=True)
            rows.append(
                (t, -1, "vac", ctx.energy(-1, 0), None, full.second_order, w2_shift(-1, 0, ctx),
                 full.channels.get((1, 1)), full.channels.get((1, -1)), None, None, None)
            )
        return rows

    return [r for rows in _pmap(one, times, threads) for r in rows]


PERTURB_COLUMNS = [
    "t", "n", "branch", "E0", "dE2", "dE2_with_vacuum", "w2_shift",
    "ch_up_plus", "ch_up_minus", "ch_down_plus", "ch_down_minus", "ch_vacuum",
]


def cmd_perturb(cfg, spec, out_dir, threads, params=None, prefix="perturb"):
    params = params or cfg.parameter_set()
    times = _grid(cfg, "perturb")
    sectors = cfg.int_list("perturb", "sectors")
    _check_sectors(cfg, spec, sectors, "perturb")
    rows = perturb_rows(params, spec, times, sectors, cfg.boolean("perturb", "include_vacuum_level"), threads)
    path = write_csv(os.path.join(out_dir, f"{prefix}.csv"), PERTURB_COLUMNS, rows, cfg.render(), "second-order level shifts")
    if cfg.boolean("output", "svg"):
        series = {}
        for r in rows:
            key = f"{r[1]}{r[2]}"
            series.setdefault(key, ([], []))
            series[key][0].append(r[0])
            series[key][1].append(r[5] if r[5] is not None else float("nan"))
        write_svg(os.path.join(out_dir, f"{prefix}.svg"), series, "t", "dE2")
    return path


# transitions -----------------------------------------------------------------------


def _opt(cfg, sec, key):
    return cfg.number(sec, key) if cfg.has(sec, key) else None


def pulse_protocol(cfg: ScenarioConfig, t2: float | None = None) -> Protocol:
    s = "pulse"
    return Protocol(
        "delta_pulse",
        T=cfg.number(s, "T"),
        kappa0=cfg.number(s, "kappa0"),
        tau_ramp=_opt(cfg, s, "tau_ramp"),
        A_b=cfg.number(s, "A_b"),
        alpha=cfg.complex_number(s, "alpha"),
        delta_a=cfg.number(s, "delta_a"),
        delta_b=cfg.number(s, "delta_b"),
        t1=cfg.number(s, "t1"),
        t2=cfg.number(s, "t2") if t2 is None else t2,
    )


def cmd_pulse(cfg, spec, out_dir, threads):
    s = "pulse"
    n = cfg.integer(s, "n")
    _check_sectors(cfg, spec, [n], s)
    base = pulse_protocol(cfg)
    t1, T = base.t1, base.T
    lo = _opt(cfg, s, "t2_start") or t1 + 0.05 * (T - t1)
    hi = _opt(cfg, s, "t2_stop") or T - 0.05 * (T - t1)
    t2s = {float(x): None for x in np.linspace(lo, hi, cfg.integer(s, "t2_points"))}
    for k in range(1, cfg.integer(s, "k_max") + 1):
        tk = suppression_times(n, t1, k, base.delta_b, base)
        if lo <= tk <= hi:
            t2s[tk] = k
    integral = cfg.boolean(s, "integral")

    def one(t2):
        pr = base.with_(t2=t2)
        I = delta_pulse_amplitude(n, pr)
        scale = pr.kappa0 * abs(delta_pulse_jump(n, pr))
        row = [n, t1, t2, t2s[t2], pr.kappa0, pr.delta_a, pr.delta_b, I.real, I.imag, abs(I) ** 2, abs(I) < 1e-10 * scale]
        if integral:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                r = amplitude_integral(n, None, pr)
            row += [r.I_value.real, r.I_value.imag, r.probability]
        return row

    rows = _pmap(one, sorted(t2s), threads)
    cols = ["n", "t1", "t2", "k", "kappa0", "delta_a", "delta_b", "re_I", "im_I", "probability", "suppressed"]
    if integral:
        cols += ["re_I_numeric", "im_I_numeric", "probability_numeric"]
    path = write_csv(os.path.join(out_dir, "pulse.csv"), cols, rows, cfg.render(), "delta-pulse amplitude sweep over t2")
    if cfg.boolean("output", "svg"):
        write_svg(os.path.join(out_dir, "pulse.svg"), {"P": ([r[2] for r in rows], [r[9] for r in rows])}, "t2", "probability")
    return path


def cmd_quench(cfg, spec, out_dir, threads):
    s = "quench"
    n = cfg.integer(s, "n")
    _check_sectors(cfg, spec, [n], s)
    pr = Protocol(
        "quench", T=cfg.number(s, "T"), kappa0=cfg.number(s, "kappa0"), tau_ramp=_opt(cfg, s, "tau_ramp"),
        A_b=cfg.number(s, "A_b"), alpha=cfg.complex_number(s, "alpha"), delta_a=cfg.number(s, "delta"),
    )
    r = amplitude_integral(n, None, pr)
    row = [n, pr.T, pr.kappa0, pr.delta_a, r.I_value.real, r.I_value.imag, r.probability,
           r.I_by_parts.real, r.I_by_parts.imag, abs(r.I_value) < 1e-9]
    cols = ["n", "T", "kappa0", "delta", "re_I", "im_I", "probability", "re_I_by_parts", "im_I_by_parts", "suppressed"]
    return write_csv(os.path.join(out_dir, "quench.csv"), cols, [row], cfg.render(), "closed boundary quench")


def cmd_periodic(cfg, spec, out_dir, threads):
    s = "periodic"
    n = cfg.integer(s, "n")
    _check_sectors(cfg, spec, [n], s)
    if cfg.has(s, "nu_start") and cfg.has(s, "nu_stop"):
        nus = np.linspace(cfg.number(s, "nu_start"), cfg.number(s, "nu_stop"), cfg.integer(s, "nu_points"))
    else:
        nus = np.array([cfg.number(s, "nu")])
    integral = cfg.boolean(s, "integral")

    def one(nu):
        pr = Protocol(
            "periodic", kappa0=cfg.number(s, "kappa0"), A_b=cfg.number(s, "A_b"), alpha=cfg.complex_number(s, "alpha"),
            omega_drive=cfg.number(s, "omega_drive"), delta0=cfg.number(s, "delta0"), epsilon=cfg.number(s, "epsilon"),
            nu=float(nu), n_cycles=cfg.integer(s, "n_cycles"),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            I, reports = sideband_amplitude(n, pr)
        g = float(gap(n, pr.plateau_effective(pr.delta0)))
        row = [n, pr.kappa0, pr.omega_drive, float(nu), pr.epsilon, pr.delta0, pr.n_cycles, pr.T, g,
               I.real, I.imag, abs(I) ** 2, reports[0].detuning, reports[1].detuning, reports[0].fourier_width,
               any(r.matched for r in reports)]
        if integral:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                r = amplitude_integral(n, None, pr)
            row += [r.I_value.real, r.I_value.imag, r.probability]
        return row

    rows = _pmap(one, nus, threads)
    cols = ["n", "kappa0", "omega_drive", "nu", "epsilon", "delta0", "n_cycles", "T", "gap", "re_I", "im_I",
            "probability", "detuning_sum", "detuning_diff", "fourier_width", "resonant"]
    if integral:
        cols += ["re_I_numeric", "im_I_numeric", "probability_numeric"]
    path = write_csv(os.path.join(out_dir, "periodic.csv"), cols, rows, cfg.render(), "sideband amplitude")
    if cfg.boolean("output", "svg"):
        write_svg(os.path.join(out_dir, "periodic.svg"), {"P": (list(nus), [r[11] for r in rows])}, "nu", "probability")
    return path


def cmd_evolve(cfg, spec, out_dir, threads):
    s = "evolve"
    n = cfg.integer(s, "n")
    sigma = 1 if cfg.get(s, "sigma").strip() in ("+", "1", "+1") else -1
    sectors = cfg.int_list(s, "sectors")
    _check_sectors(cfg, spec, sectors + [n], s)
    source = cfg.get(s, "source").strip()
    prediction = None
    if source == "pulse":
        pr = pulse_protocol(cfg)
        params = pr.parameters()
        grid = np.linspace(0.0, pr.T, cfg.integer(s, "t_points"))
        prediction = abs(delta_pulse_amplitude(n, pr)) ** 2
    elif source == "parameters":
        params = cfg.parameter_set()
        grid = _grid(cfg, s)
    else:
        raise ConfigError("[evolve] source must be 'pulse' or 'parameters'")
    psi0 = initial_dressed_state(params, spec, n, sigma, float(grid[0]))
    res = propagate(params, psi0, grid, spec, method=cfg.get(s, "method").strip())
    cols = ["t", "norm", "vacuum", "leakage"]
    for m in sectors:
        cols += [f"p_{m}_plus", f"p_{m}_minus"]
    if prediction is not None:
        cols.append(f"p_{n + 2}_plus_first_order")
    rows = []
    for k, t in enumerate(grid):
        r = [t, res.norms[k], res.vacuum[k], res.leakage[k]]
        for m in sectors:
            r += [res.p_plus[k, m], res.p_minus[k, m]]
        if prediction is not None:
            r.append(prediction)
        rows.append(r)
    path = write_csv(os.path.join(out_dir, "evolve.csv"), cols, rows, cfg.render(), "dressed-basis populations")
    if cfg.boolean("output", "svg"):
        series = {f"p_{m}_plus": (grid, res.p_plus[:, m]) for m in sectors}
        write_svg(os.path.join(out_dir, "evolve.svg"), series, "t", "population")
    return path


def cmd_fig1(cfg, spec, out_dir, threads):
    cmd_spectrum(cfg, spec, out_dir, threads, prefix="fig1_levels")
    return cmd_perturb(cfg, spec, out_dir, threads, prefix="fig1_corrections")


COMMANDS = {
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "perturb": cmd_perturb,
    "pulse": cmd_pulse,
    "quench": cmd_quench,
    "periodic": cmd_periodic,
    "evolve": cmd_evolve,
    "fig1": cmd_fig1,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qhsb", description="Quasi-Hermitian spin-boson scenarios.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="scenario config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario instead of --config")
    p.add_argument("--out", default=None, help="output directory (default: [output] dir)")
    p.add_argument("--cutoff", type=int, default=None, help="override [hilbert] cutoff")
    p.add_argument("--threads", type=int, default=1, help="worker threads for time grids and sweeps")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config and args.preset:
            raise ConfigError("use either --config or --preset, not both")
        if args.config:
            cfg = load_config(args.config)
        elif args.preset or args.command == "fig1":
            cfg = parse_config(PRESETS[args.preset or "fig1"], source=f"preset:{args.preset or 'fig1'}")
        else:
            raise ConfigError("a --config file or --preset is required")
        if args.cutoff is not None:
            cfg.override("hilbert", "cutoff", args.cutoff)
        spec = cfg.hilbert_spec()
        out_dir = args.out or cfg.get("output", "dir")
        if args.command == "verify":
            return cmd_verify(cfg, spec, args.out, max(1, args.threads))
        os.makedirs(out_dir, exist_ok=True)
        path = COMMANDS[args.command](cfg, spec, out_dir, max(1, args.threads))
        print(path)
        return 0
    except ConfigError as exc:
        print(f"qhsb: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
