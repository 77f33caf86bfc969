"""Command-line front end.

    afcs list-presets
    afcs design   [--preset NAME | --config FILE]
    afcs run      NAME|custom [--config FILE] [--seed S] [--samples M] [--out DIR] [--format csv,svg]
    afcs appendix-a [--config FILE] [--samples M] ...

Exit status: 0 on success (warnings included), 2 for configuration errors,
3 for numerical failures at run time.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import simulation, svgplot, theory
from .config import Config, ConfigError, load_config
from .errors import DegenerateConfigurationError, DomainError
from .model import SystemParams, compute_controls, derive_params
from .overmod import recovery_probability_prethreshold
from .presets import ExperimentPreset, preset_catalog, threshold_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
FORMATS = ("csv", "svg")
DEFAULT_TRIALS = 10_000


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def fmt(v):
    """Locale-free cell text; floats keep 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.16e}"


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# --------------------------------------------------------------------------
# configuration -> parameters
# --------------------------------------------------------------------------

def _params_from(base: SystemParams, overrides: dict, n_star=None) -> SystemParams:
    kw = dict(overrides)
    if n_star is not None:
        F = kw.get("F", base.F)
        kw.setdefault("F", F)
        kw["F0"] = n_star * F
        kw["n_cycles"] = n_star
    try:
        p = replace(base, **kw)
        if n_star is not None:
            p = threshold_config(p, n_star)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return p


def _custom_base(cfg: Config) -> SystemParams:
    kw = cfg.params_overrides()
    n_star = cfg.get("n_star")
    if n_star is not None:
        F = kw.get("F")
        if F is None:
            raise ConfigError("n_star needs the source bandwidth F", path=cfg.path)
        kw["F0"] = n_star * F
        kw["n_cycles"] = n_star
    elif "n_cycles" not in kw and "F" not in kw:
        raise ConfigError("give n_cycles or F", path=cfg.path)
    try:
        p = SystemParams(**kw)
        if n_star is not None:
            p = threshold_config(p, n_star)
    except DomainError as exc:
        raise ConfigError(str(exc), path=cfg.path) from None
    return p


def _custom_preset(cfg: Config, base_preset: ExperimentPreset = None):
    mode = cfg.get("mode", base_preset.mode if base_preset else "optimal")
    if mode not in simulation.MODES:
        raise ConfigError(f"mode must be one of {', '.join(simulation.MODES)}", path=cfg.path)
    if base_preset is not None:
        base = _params_from(base_preset.base, cfg.params_overrides())
        name, outputs, extra = base_preset.name, base_preset.outputs, base_preset.extra
        key, values, configure = base_preset.sweep_key, base_preset.sweep_values, base_preset.configure
    else:
        base = _custom_base(cfg)
        name, outputs, extra = "custom", ("mse", "rate"), {}
        key, values, configure = "x0", (base.x0,), None
        if cfg.get("n_star") is not None:
            key, values, configure = "n_star", (cfg.get("n_star"),), threshold_config
    if cfg.sweep is not None and cfg.sweep[0] != "k_force":
        key, values = cfg.sweep
        if key == "n_star":
            configure = threshold_config
        elif key == "alpha":
            key, values = "mu", tuple(math.erfc(a / math.sqrt(2.0)) for a in values)
            configure = None
        elif key not in {f for f in SystemParams.__dataclass_fields__}:
            raise ConfigError(f"cannot sweep {key!r}", path=cfg.path)
        else:
            configure = None
    try:
        preset = ExperimentPreset(name, "configured run", base, key, tuple(values), mode=mode,
                                  outputs=outputs, configure=configure, extra=extra)
        configs = preset.configurations()
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc), path=cfg.path) from None
    return preset, configs


def _resolve(name, config_path):
    catalog = preset_catalog()
    cfg = load_config(config_path) if config_path else None
    if name == "custom":
        if cfg is None:
            raise ConfigError("custom runs need --config")
        return _custom_preset(cfg)
    if name not in catalog:
        raise ConfigError(f"unknown preset {name!r} (try list-presets)")
    if cfg is None:
        preset = catalog[name]
        return preset, preset.configurations()
    return _custom_preset(cfg, catalog[name])


# --------------------------------------------------------------------------
# design
# --------------------------------------------------------------------------

def design_sheet(p: SystemParams, delta_t_proc: float = 0.0):
    dp = derive_params(p)
    est = theory.threshold_cycles(p, dp)
    lines = []
    add = lines.append
    add(f"alpha              {dp.alpha:.6f}")
    add(f"A                  {dp.A:.6g}")
    add(f"sigma_xi^2         {dp.sigma_xi_sq:.6g}")
    add(f"Q^2                {dp.Q_sq:.6g}")
    add(f"C [bit/s]          {dp.C:.6g}")
    add(f"C/F0               {dp.C / p.F0:.6g}")
    add(f"n* analytic        {est.analytic:.6g}")
    add(f"n* crossing        {est.crossing if est.crossing is not None else 'never'}")
    add(f"n* interpolated    {est.crossing_real:.6g}")
    n = p.n_cycles
    upto = est.crossing if est.crossing is not None else n
    upto = max(1, min(upto, 60))
    curve = theory.mse_curve(p, dp, max(n, upto))
    add("schedule")
    add("  k     M_k                   P_{k-1}")
    for k in range(1, upto + 1):
        M, _ = compute_controls(0.0, curve.values[k - 1], p, dp)
        add(f"  {k:<5d} {M:<21.12g} {curve.values[k - 1]:.12g}")
    if p.sigma_v_sq > 0:
        s_out = theory.output_snr_identities(p, dp).sigma_out_sq
    else:
        s_out = curve.values[n]
    add(f"sigma_out^2        {s_out:.6g}")
    add(f"P_n (n={n})        {curve.values[n]:.6g}")
    add(f"E_bit [J/bit]      {theory.energy_per_bit(n, p, dp):.6g}")
    add(f"E_bit/N_xi         {theory.energy_per_bit(n, p, dp) / p.N_xi:.6g}")
    r, feasible = theory.max_distance(p.F0, delta_t_proc)
    add(f"r_max [m]          {r:.6g}" + ("" if feasible else "  (infeasible)"))
    return "\n".join(lines) + "\n", feasible


def cmd_design(args):
    cfg = load_config(args.config) if args.config else None
    if args.preset:
        preset, configs = _resolve(args.preset, args.config)
        idx = args.index
        if not 0 <= idx < len(configs):
            raise ConfigError(f"--index must lie in 0..{len(configs) - 1}")
        p = configs[idx][1]
    elif cfg is not None:
        if cfg.sweep is not None:
            raise ConfigError("design takes a single configuration, not a sweep", path=cfg.path)
        p = _custom_base(cfg)
    else:
        raise ConfigError("design needs --preset or --config")
    dt = float(cfg.get("delta_t_proc", 0.0)) if cfg else 0.0
    if dt < 0:
        raise ConfigError("delta_t_proc must be non-negative", path=cfg.path)
    text, feasible = design_sheet(p, dt)
    sys.stdout.write(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "design.txt"), "w", encoding="utf-8") as fh:
            fh.write(text)
    if not feasible:
        _warn("processing delay exceeds the cycle budget; no feasible distance")
    return EXIT_OK


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def _mse_tables(preset, configs, args, empirical=True):
    key = preset.sweep_key
    theory_rows, emp_rows, plot = [], [], []
    fixed = preset.mode == "fixed-depth"
    for value, p in configs:
        dp = derive_params(p)
        n = p.n_cycles
        if fixed:
            vals = theory.fixed_depth_curve(p, dp, n)
            for k in range(1, n + 1):
                theory_rows.append((value, k, vals[k], theory.baseline_cs_mse(k, p, dp)))
        else:
            curve = theory.mse_curve(p, dp, n)
            vals = curve.values
            est = theory.threshold_cycles(p, dp)
            for k in range(1, n + 1):
                hyp = theory.hyperbolic_mse(k, est.analytic, p.sigma_v_sq) if k > est.analytic else math.nan
                theory_rows.append((value, k, vals[k], theory.exponential_mse(k, p.sigma0_sq, dp.Q_sq),
                                    hyp, curve.regimes[k - 1]))
        res = None
        if empirical:
            res = simulation.run_batch(p, args.samples, args.seed, preset.mode, args.threads, dp)
            for k in range(1, n + 1):
                emp_rows.append((value, k, vals[k], res.P_hat[k - 1], res.P_stderr[k - 1]))
        plot.append((value, p, dp, vals, res))
    if fixed:
        th_head = (key, "k", "P_theory", "P_hyperbolic")
    else:
        th_head = (key, "k", "P_theory", "P_exponential", "P_hyperbolic", "regime")
    emp_head = (key, "k", "P_theory", "P_empirical", "P_stderr")
    return (th_head, theory_rows), (emp_head, emp_rows), plot


def _mse_chart(preset, plot):
    ch = svgplot.Chart(f"{preset.name}: MSE vs cycle", "cycle k", "P_k", log_y=True)
    for i, (value, p, dp, vals, res) in enumerate(plot):
        ks = list(range(1, len(vals)))
        ch.add(f"{preset.sweep_key}={value:g}", ks, vals[1:], color_index=i)
        if res is not None:
            ch.add("empirical", ks, list(res.P_hat), dashed=True, color_index=i)
        if preset.mode != "fixed-depth":
            est = theory.threshold_cycles(p, dp)
            if est.crossing is not None and est.crossing < len(vals):
                ch.points.append((est.crossing, vals[est.crossing], i))
    return ch


def _rate_tables(preset, plot, args):
    key = preset.sweep_key
    th, emp = [], []
    for value, p, dp, vals, res in plot:
        n = p.n_cycles
        for row in theory.rate_curve(p, dp, n):
            th.append((value, row.n, row.P_n, row.R_n, row.R_n / p.F0, row.R_piecewise, dp.C))
        if res is not None:
            for k in range(1, n + 1):
                se = simulation.empirical_rate_stderr(k, res.n_samples, p.F0)
                emp.append((value, k, res.P_hat[k - 1], res.R_hat[k - 1], res.R_hat[k - 1] / p.F0, se))
    return ((key, "n", "P_theory", "R_theory", "R_over_F0", "R_piecewise", "C"), th), \
           ((key, "n", "P_empirical", "R_empirical", "R_empirical_over_F0", "R_stderr"), emp)


def _rate_chart(preset, plot):
    ch = svgplot.Chart(f"{preset.name}: bit-rate vs cycles", "cycles n", "R_n / F0")
    for i, (value, p, dp, vals, res) in enumerate(plot):
        rows = theory.rate_curve(p, dp, p.n_cycles)
        ch.add(f"{preset.sweep_key}={value:g}", [r.n for r in rows], [r.R_n / p.F0 for r in rows], color_index=i)
        if res is not None:
            ch.add("empirical", [r.n for r in rows], list(res.R_hat / p.F0), dashed=True, color_index=i)
        est = theory.threshold_cycles(p, dp)
        if est.crossing is not None and est.crossing <= len(rows):
            ch.points.append((est.crossing, rows[est.crossing - 1].R_n / p.F0, i))
    return ch


def _efficiency_tables(preset, configs, args, empirical=True):
    th, emp, pts = [], [], []
    for value, p in configs:
        dp = derive_params(p)
        n = p.n_cycles
        row = theory.output_rate(n, p, dp)
        e_bit = theory.energy_per_bit(n, p, dp) / p.N_xi
        eff = row.R_n / p.F0
        th.append((value, dp.Q_sq, p.F0, dp.C / p.F0, eff, e_bit, 10 * math.log10(e_bit),
                   10 * math.log10(theory.shannon_boundary(eff))))
        if empirical:
            res = simulation.run_batch(p, args.samples, args.seed, preset.mode, args.threads, dp)
            P_hat = float(res.P_hat[-1])
            I_hat = 0.5 * math.log2(p.sigma0_sq / P_hat)
            r_hat = res.R_hat[-1] / p.F0
            se = simulation.empirical_rate_stderr(n, res.n_samples, 1.0)
            e_hat = dp.W_sign * n / (2.0 * p.F0 * I_hat) / p.N_xi
            bound = theory.shannon_boundary(r_hat)
            emp.append((value, P_hat, r_hat, se, e_hat, 10 * math.log10(e_hat), 10 * math.log10(bound),
                        r_hat <= dp.C / p.F0 + se))
            pts.append((10 * math.log10(e_hat), r_hat))
    th_head = (preset.sweep_key, "Q_sq", "F0", "C_over_F0", "R_over_F0", "Ebit_over_N", "Ebit_over_N_dB",
               "boundary_Ebit_over_N_dB")
    emp_head = (preset.sweep_key, "P_empirical", "R_empirical_over_F0", "R_stderr_over_F0", "Ebit_over_N",
                "Ebit_over_N_dB", "boundary_Ebit_over_N_dB", "within_boundary")
    return (th_head, th), (emp_head, emp), pts


def _efficiency_chart(th_rows, pts):
    ch = svgplot.Chart("fig5: spectral efficiency vs energy per bit", "E_bit/N [dB]", "R/F0 [bit/s/Hz]")
    effs = np.linspace(0.02, max(r[3] for r in th_rows) * 1.1, 80)
    ch.add("boundary", [10 * math.log10(theory.shannon_boundary(e)) for e in effs], list(effs))
    ch.add("theory", [r[6] for r in th_rows], [r[4] for r in th_rows], dashed=True, color_index=1)
    for x, y in pts:
        ch.points.append((x, y, 2))
    return ch


def _rho_table(configs, preset):
    rows = []
    ref = preset.extra.get("reference_rho", ())
    for i, (value, p) in enumerate(configs):
        dp = derive_params(p)
        q_cs = theory.cs_snr_baseband(dp.W_sign, p.N_xi, p.F)
        ref_v = ref[i] if i < len(ref) and len(ref) == len(configs) else math.nan
        rows.append((value, q_cs, theory.bitrate_gain(value, q_cs), theory.bitrate_gain_oracle(p, dp), ref_v))
    return ("n_star", "Q_cs_sq", "rho_formula", "rho_oracle", "rho_reference"), rows


def cmd_run(args):
    preset, configs = _resolve(args.name, args.config)
    formats = _formats(args.format)
    os.makedirs(args.out, exist_ok=True)
    name = preset.name
    written = []

    def out(suffix):
        path = os.path.join(args.out, f"{name}_{suffix}")
        written.append(path)
        return path

    if "rho" in preset.outputs:
        head, rows = _rho_table(configs, preset)
        if "csv" in formats:
            write_csv(out("theory.csv"), head, rows)
        if "svg" in formats:
            ch = svgplot.Chart("bit-rate gain", "n*", "rho")
            ch.add("formula", [r[0] for r in rows], [r[2] for r in rows])
            ch.add("oracle", [r[0] for r in rows], [r[3] for r in rows], dashed=True, color_index=1)
            for r in rows:
                ch.points.append((r[0], r[4], 2))
            svgplot.save(ch, out("rho.svg"))
        for r in rows:
            print(f"n*={r[0]}  rho={r[2]:.4f}  oracle={r[3]:.4f}")
    elif "efficiency" in preset.outputs:
        (th_head, th), (emp_head, emp), pts = _efficiency_tables(preset, configs, args)
        if "csv" in formats:
            write_csv(out("theory.csv"), th_head, th)
            write_csv(out("empirical.csv"), emp_head, emp)
        if "svg" in formats:
            svgplot.save(_efficiency_chart(th, pts), out("efficiency.svg"))
    else:
        (th_head, th), (emp_head, emp), plot = _mse_tables(preset, configs, args)
        if "rate" in preset.outputs:
            (th_head, th), (emp_head, emp) = _rate_tables(preset, plot, args)
        if "csv" in formats:
            write_csv(out("theory.csv"), th_head, th)
            write_csv(out("empirical.csv"), emp_head, emp)
        if "svg" in formats:
            svgplot.save(_mse_chart(preset, plot), out("mse.svg"))
            if "rate" in preset.outputs:
                svgplot.save(_rate_chart(preset, plot), out("rate.svg"))
    for path in written:
        print(path)
    return EXIT_OK


# --------------------------------------------------------------------------
# appendix-a
# --------------------------------------------------------------------------

def cmd_appendix_a(args):
    catalog = preset_catalog()
    base_preset = catalog["appendixA"]
    cfg = load_config(args.config) if args.config else None
    k_list = base_preset.extra["k_force"]
    if cfg is None:
        p = base_preset.configurations()[0][1]
    else:
        if cfg.sweep is not None and cfg.sweep[0] != "k_force":
            raise ConfigError("appendix-a sweeps only k_force", path=cfg.path)
        if cfg.sweep is not None:
            k_list = tuple(cfg.sweep[1])
        elif cfg.get("k_force") is not None:
            k_list = (cfg.get("k_force"),)
        p = _params_from(base_preset.configurations()[0][1], cfg.params_overrides())
    trials = args.samples if args.samples is not None else DEFAULT_TRIALS
    if cfg is not None and cfg.get("trials") is not None and args.samples is None:
        trials = cfg.get("trials")
    for k in k_list:
        if not 1 <= k <= p.n_cycles:
            raise ConfigError(f"k_force={k} outside 1..{p.n_cycles}")
    dp = derive_params(p)
    rows = []
    for k in k_list:
        r = simulation.forced_corruption_experiment(p, k, trials, args.seed, threads=args.threads, dp=dp)
        rows.append((k, r.regime, r.p_restore_theory, r.p_restore_exact, r.restoration_frequency,
                     r.abnormal_rate_naive, r.abnormal_rate_reject,
                     r.mean_sq_error_naive / r.P_final_theory, r.mean_sq_error_reject / r.P_final_theory))
    head = ("k_force", "regime", "p_restore_theory", "p_restore_exact", "p_restore_empirical",
            "abnormal_rate_naive", "abnormal_rate_reject", "mse_naive_over_P", "mse_reject_over_P")
    os.makedirs(args.out, exist_ok=True)
    formats = _formats(args.format)
    if "csv" in formats:
        path = os.path.join(args.out, "appendixA_overmod.csv")
        write_csv(path, head, rows)
        print(path)
    if "svg" in formats:
        ch = svgplot.Chart("restoration after forced saturation", "k_force", "probability")
        ch.add("theory", [r[0] for r in rows], [r[2] for r in rows])
        ch.add("empirical", [r[0] for r in rows], [r[4] for r in rows], dashed=True, color_index=1)
        path = os.path.join(args.out, "appendixA_overmod.svg")
        svgplot.save(ch, path)
        print(path)
    pre = recovery_probability_prethreshold(dp.alpha, dp.Q_sq)
    print(f"alpha={dp.alpha:.4f}  Q^2={dp.Q_sq:.4g}  pre-threshold restoration ~ {pre[0]:.3e}")
    return EXIT_OK


def cmd_list(args):
    for name, preset in preset_catalog().items():
        vals = ", ".join(f"{v:g}" for v in preset.sweep_values)
        print(f"{name:10s} {preset.description}  [{preset.sweep_key}: {vals}]")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _formats(text):
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in items if s not in FORMATS]
    if bad or not items:
        raise ConfigError(f"unknown output format {', '.join(bad) or text!r}")
    return items


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="afcs", description="Adaptive feedback link: theory curves and Monte Carlo")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, samples_default):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--seed", type=_seed, default=simulation.DEFAULT_SEED)
        sp.add_argument("--samples", type=_positive_int, default=samples_default)
        sp.add_argument("--out", default="out")
        sp.add_argument("--format", default="csv", help="comma list of csv, svg")
        sp.add_argument("--threads", type=_positive_int, default=1)

    sp = sub.add_parser("list-presets", help="show the named experiments")
    sp.set_defaults(func=cmd_list)

    sp = sub.add_parser("design", help="print a design sheet for one configuration")
    sp.add_argument("--config")
    sp.add_argument("--preset")
    sp.add_argument("--index", type=int, default=0, help="which sweep value of the preset")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("run", help="theory and Monte Carlo tables for a preset")
    sp.add_argument("name", help="preset name or 'custom'")
    common(sp, simulation.DEFAULT_SAMPLES)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("appendix-a", help="forced over-modulation experiments")
    common(sp, None)
    sp.set_defaults(func=cmd_appendix_a)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, DegenerateConfigurationError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
