"""Command-line experiment runner.

    zetaflow SUBCOMMAND --config PATH_OR_NAME [--out DIR] [--seed N] [--workers N] [--quiet]

Exit codes: 0 success, 2 config/schema error, 3 computation refused,
4 budget exceeded.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from . import __version__
from .config import (ExperimentConfig, IntervalModel, SymbolicModel, build_interval,
                     build_symbolic, load_config)
from .errors import BudgetExceeded, ConfigError, RefusedError
from .io import OutputDir, RunManifest

SUBCOMMANDS = ("pressure", "gibbs", "normalize", "orbits", "zeta-scan", "residue", "equidist",
               "window", "perron", "psi-ell", "dolgopyat-probe", "telescope", "validate")


class Context:
    def __init__(self, cfg: ExperimentConfig, out: OutputDir, seed, workers: int, quiet: bool):
        self.cfg = cfg
        self.out = out
        self.seed = seed
        self.workers = workers
        self.quiet = quiet
        self.tolerances: dict = {}
        self._built = None

    def say(self, msg: str):
        if not self.quiet:
            print(msg)

    @property
    def symbolic(self) -> bool:
        return isinstance(self.cfg.model, SymbolicModel)

    def system(self):
        if self._built is None:
            if self.symbolic:
                self._built = build_symbolic(self.cfg.model)
            else:
                self._built = build_interval(self.cfg.model)
        return self._built

    def need_symbolic(self, sub: str):
        if not self.symbolic:
            raise ConfigError(f"{sub} needs a symbolic model (model.kind: symbolic)")

    def need_interval(self, sub: str):
        if self.symbolic:
            raise ConfigError(f"{sub} needs an interval model (model.kind: interval)")

    def observable(self, sub: str):
        system, K = self.system()
        if K is None:
            raise ConfigError(f"{sub} needs model.observable")
        return system, K

    def block(self, name: str):
        blk = getattr(self.cfg.run, name)
        if blk is None:
            raise ConfigError(f"run.{name} is required for this subcommand")
        return blk


# ---------------------------------------------------------------------------
# subcommands


def cmd_pressure(ctx: Context):
    if ctx.symbolic:
        from .thermo import pressure
        system, _ = ctx.system()
        P = pressure(system.base, system.psi)
    else:
        system, _ = ctx.system()
        P = system.pressure(0.0)
    ctx.tolerances["pressure"] = {"eigen_tol": 1e-14}
    ctx.out.json("pressure.json", {"pressure": P})
    ctx.say(f"P(psi) = {P:.17g}")


def cmd_gibbs(ctx: Context):
    ctx.need_symbolic("gibbs")
    from .symbolic import admissible_words, encode_word
    from .thermo import rpf
    system, _ = ctx.system()
    phi = system.psi - system.r * system.c
    g = rpf(system.base, phi)
    n = ctx.cfg.run.gibbs.word_length
    N = system.base.alphabet_size
    words = admissible_words(system.base, n)
    ctx.out.csv("gibbs.csv", ("word", "measure"),
                [(encode_word(w, N), g.cylinder_measure(w)) for w in words])
    data = g.to_dict()
    data["potential"] = "psi - c r"
    data["c"] = system.c
    ctx.out.json("gibbs.json", data)
    ctx.tolerances["gibbs"] = {"eigen_tol": 1e-14}
    ctx.say(f"eigenvalue = {g.eigenvalue:.17g}, residuals {g.residual_right:.2e} "
            f"{g.residual_left:.2e} {g.residual_stationary:.2e}")


def cmd_normalize(ctx: Context):
    system, _ = ctx.system()
    if ctx.symbolic:
        data = system.normalization.to_dict()
        data["lattice"] = system.lattice_flag
        data["lattice_span"] = system.lattice.span
    else:
        lat = system.lattice()
        data = {"c": system.c, "pressure_residual": system.pressure(system.c),
                "lattice": lat.lattice, "lattice_span": lat.span}
    ctx.out.json("normalize.json", data)
    ctx.tolerances["normalize"] = {"bisection_width": 1e-13}
    ctx.say(f"c = {data['c']:.17g}")


def cmd_orbits(ctx: Context):
    ctx.need_symbolic("orbits")
    from .symbolic import encode_word, enumerate_by_length, enumerate_prime_orbits
    system, K = ctx.system()
    blk = ctx.block("orbits")
    k = system.to_k(K) if K is not None else system.r
    if blk.p_max is not None:
        table = enumerate_prime_orbits(system.base, (system.psi, system.r, k), blk.p_max,
                                       workers=ctx.workers, max_orbits=blk.max_orbits)
    else:
        table = enumerate_by_length(system.base, system.r, blk.length_budget, psi=system.psi,
                                    workers=ctx.workers, max_orbits=blk.max_orbits)
    kv = table.birkhoff(k)
    N = system.base.alphabet_size
    rows = ((encode_word(table.word(i), N), int(p), table.ell[i], table.psi[i], kv[i])
            for i, p in enumerate(table.periods))
    ctx.out.csv("orbits.csv", ("word", "period", "ell", "psi", "k"), rows)
    ctx.out.json("orbits.json", {"count": len(table)})
    ctx.say(f"{len(table)} prime orbits")


def cmd_zeta_scan(ctx: Context):
    ctx.need_symbolic("zeta-scan")
    from .zeta import count_zeros, growth_scan, zero_scan
    system, K = ctx.system()
    blk = ctx.cfg.run.zeta_scan
    scan = zero_scan(system, blk.sigma, blk.t, blk.grid_steps)
    header = ("sigma", "t", "value_re", "value_im", "modulus", "flag")
    ctx.out.csv("zeta_scan.csv", header, scan.rows())
    ctx.out.csv("zeta_crossings.csv", ("sigma", "t"), scan.crossing_points())
    summary = {"crossings": len(scan.crossings), "coarse": scan.coarse,
               "confined_to_origin": scan.confined_to_origin(),
               "lattice": system.lattice_flag}
    if blk.count_zeros:
        summary["zeros_in_rectangle"] = count_zeros(system, blk.sigma[0], blk.sigma[1], blk.t[1])
    if blk.growth is not None:
        k = system.to_k(K) if K is not None else system.r
        g = growth_scan(system, k, blk.growth.sigma, blk.growth.t)
        ctx.out.csv("growth_scan.csv", header, g.rows())
        summary["alpha_hat"] = g.alpha
        summary["growth_fit_residual"] = g.fit_residual
    ctx.out.json("zeta_scan.json", summary)
    ctx.tolerances["zeta-scan"] = {"pole_condition": 1e12}
    ctx.say(f"{len(scan.crossings)} crossing cells, coarse={scan.coarse}")


def cmd_residue(ctx: Context):
    ctx.need_symbolic("residue")
    from .zeta import residue_detail
    system, K = ctx.system()
    k = system.to_k(K) if K is not None else system.r
    det = residue_detail(system, k)
    expected = float(np.real(system.flow_average(k))) / system.c
    ctx.out.json("residue.json", {"residue": det.value, "expected": expected,
                                  "difference": abs(det.value - expected),
                                  "samples": list(det.samples)})
    ctx.tolerances["residue"] = {"eps": [1e-3, 5e-4, 2.5e-4]}
    ctx.say(f"residue = {det.value:.17g} (expected {expected:.17g})")


def _counting_table(ctx, system, L, max_instances):
    from .counting import enumerate_by_budget
    return enumerate_by_budget(system, L, max_instances=max_instances, workers=ctx.workers)


def cmd_equidist(ctx: Context):
    ctx.need_symbolic("equidist")
    from .counting import error_curve, fit_rate
    system, K = ctx.observable("equidist")
    blk = ctx.block("equidist")
    T = blk.T.array()
    table = _counting_table(ctx, system, float(T[-1]), blk.max_instances)
    curve = error_curve(system, K, T, blk.mode, table)
    ctx.out.csv("equidist.csv", ("T", "value", "reference", "abs_error", "mode"), curve.rows())
    fit = fit_rate(curve, blk.model)
    data = fit.to_dict()
    data["instances"] = len(table)
    data["lattice"] = system.lattice_flag
    ctx.out.json("rate_fit.json", data)
    ctx.tolerances["equidist"] = {"budget_slack": 1e-12}
    ctx.say(f"delta_hat = {fit.delta_hat:.6g}, residual = {fit.residual:.3g}, "
            f"{len(table)} instances")


def cmd_window(ctx: Context):
    ctx.need_symbolic("window")
    from .counting import error_curve, fit_rate
    system, K = ctx.observable("window")
    blk = ctx.block("window")
    T = blk.T.array()
    table = _counting_table(ctx, system, float(T[-1]), blk.max_instances)
    curve = error_curve(system, K, T, blk.mode, table, window=blk.eps)
    ctx.out.csv("window.csv", ("T", "value", "reference", "abs_error", "mode"), curve.rows())
    data = {"eps": blk.eps, "instances": len(table)}
    try:
        data["fit"] = fit_rate(curve, "exponential").to_dict()
    except RefusedError as exc:
        data["fit"] = str(exc)
    ctx.out.json("window.json", data)
    ctx.say(f"window errors from {curve.abs_error[0]:.3g} to {curve.abs_error[-1]:.3g}")


def _direct_phi(ctx, system, K, Ts, ell):
    from .counting import enumerate_by_budget, phi
    L = math.log(max(Ts)) / system.c
    try:
        table = enumerate_by_budget(system, L, max_instances=2_000_000, workers=ctx.workers)
    except BudgetExceeded:
        return [None] * len(Ts)
    return [phi(system, K, T, ell, "with_repetitions", table) / math.factorial(ell) for T in Ts]


def cmd_perron(ctx: Context):
    ctx.need_symbolic("perron")
    from .contour import ContourConfig, perron_phi1, shifted_contour_phi1
    from .zeta import zero_scan
    system, K = ctx.observable("perron")
    blk = ctx.block("perron")
    results = []
    for T in blk.T:
        if blk.shifted:
            if blk.sigma_left is None:
                raise ConfigError("run.perron.sigma_left is required when shifted")
            d = blk.d if blk.d is not None else 1.0 + 1.0 / math.log(T)
            scan = zero_scan(system, (blk.sigma_left, min(d, 1.5)), (0.0, blk.R), blk.scan_steps)
            results.append(shifted_contour_phi1(system, K, T, blk.sigma_left, blk.R, scan, blk.d))
        else:
            results.append(perron_phi1(system, K, T, ContourConfig(d=blk.d, R=blk.R)))
    direct = _direct_phi(ctx, system, K, blk.T, 1)
    header = ("T", "value", "main_term", "remainder", "quad_error", "truncation_error", "direct")
    ctx.out.csv("perron.csv", header,
                [(r.T, r.value, r.main_term, r.remainder, r.quad_error, r.truncation_error, dv)
                 for r, dv in zip(results, direct)])
    ctx.out.json("perron.json", [r.to_dict() for r in results])
    ctx.tolerances["perron"] = {"rtol": 1e-8}
    for r, dv in zip(results, direct):
        ctx.say(f"T = {r.T:.6g}: Phi_1 = {r.value:.12g} (direct {dv})")


def cmd_psi_ell(ctx: Context):
    ctx.need_symbolic("psi-ell")
    from .contour import ContourConfig, psi_ell_contour
    from .zeta import zero_scan
    system, K = ctx.observable("psi-ell")
    blk = ctx.block("psi_ell")
    cfg = ContourConfig(d=blk.d, R=blk.R, ell=blk.ell, sigma_left=blk.sigma_left,
                        eps_exp=blk.eps_exp, rho_reg=blk.rho_reg, shifted=blk.shifted)
    results = [psi_ell_contour(system, K, T, blk.ell, cfg) for T in blk.T]
    direct = _direct_phi(ctx, system, K, blk.T, blk.ell)
    header = ("T", "value", "main_term", "remainder", "quad_error", "truncation_error", "direct")
    ctx.out.csv("psi_ell.csv", header,
                [(r.T, r.value, r.main_term, r.remainder, r.quad_error, r.truncation_error, dv)
                 for r, dv in zip(results, direct)])
    ctx.out.json("psi_ell.json", [r.to_dict() for r in results])
    ctx.tolerances["psi-ell"] = {"rtol": cfg.rtol}
    for r, dv in zip(results, direct):
        ctx.say(f"T = {r.T:.6g}: psi_{blk.ell} = {r.value:.12g} (direct {dv})")


def cmd_dolgopyat(ctx: Context):
    ctx.need_interval("dolgopyat-probe")
    from .interval import dolgopyat_probe
    if ctx.seed is None:
        raise ConfigError("dolgopyat-probe is randomized: set run.seed or pass --seed")
    system, _ = ctx.system()
    blk = ctx.cfg.run.dolgopyat_probe
    res = dolgopyat_probe(system, blk.sigma, blk.t, blk.n_max, blk.trials, ctx.seed)
    ctx.out.csv("dolgopyat.csv", ("n", "norm_estimate"), res.rows())
    ctx.out.json("dolgopyat.json", res.to_dict())
    ctx.tolerances["dolgopyat-probe"] = {"interpolation_residual": 1e-10}
    warn = " (lattice roof: decay not expected)" if res.lattice_warning else ""
    ctx.say(f"rho_hat = {res.rho_hat:.6g}, residual = {res.fit_residual:.3g}{warn}")


def cmd_telescope(ctx: Context):
    ctx.need_interval("telescope")
    from .interval import telescope
    system, k = ctx.system()
    blk = ctx.cfg.run.telescope
    res = telescope(system, blk.n, complex(*blk.s), k, blk.rule)
    ctx.out.csv("telescope.csv", ("n", "residual", "Z_re", "Z_im"), res.rows())
    ctx.out.json("telescope.json", {"slope": res.slope, "rule": res.rule, "s": list(blk.s)})
    ctx.say(f"log-slope = {res.slope}")


def validate_config(cfg: ExperimentConfig) -> dict:
    """Itemized model checks plus enumeration cost estimates."""
    issues: list[dict] = []
    estimates: dict = {}

    def issue(path, msg):
        issues.append({"path": path, "message": msg})

    model = cfg.model
    if isinstance(model, SymbolicModel):
        from .symbolic import CylinderFunction, Subshift, count_periodic_points, verify_mixing
        from .thermo import pressure
        try:
            rep = verify_mixing(model.transition)
            if not rep.irreducible:
                issue("model.transition", "transition matrix is reducible")
            elif rep.period != 1:
                issue("model.transition", f"transition matrix has period {rep.period}")
        except ConfigError as exc:
            issue("model.transition", str(exc))
            return {"ok": False, "issues": issues, "estimates": estimates}
        shift = Subshift(model.transition, require_mixing=False)
        fns = {}
        for name in ("r", "psi"):
            tab = getattr(model, name)
            if tab is None:
                continue
            try:
                fns[name] = CylinderFunction.from_values(shift, tab.depth, tab.values,
                                                         positive=(name == "r"))
            except ConfigError as exc:
                issue(f"model.{name}", str(exc))
        for j, term in enumerate(model.observable):
            try:
                CylinderFunction.from_values(shift, term.depth, term.values)
            except ConfigError as exc:
                issue(f"model.observable[{j}]", str(exc))
        if not issues:
            psi = fns.get("psi", CylinderFunction.constant(shift, 0.0))
            P = pressure(shift, psi)
            if not P > 0:
                issue("model.psi", f"P(psi) = {P:.6g} must be positive")
            r_min = fns["r"].r_min
            budgets = {}
            run = cfg.run
            if run.equidist is not None:
                budgets["equidist"] = float(run.equidist.T.array()[-1])
            if run.window is not None:
                budgets["window"] = float(run.window.T.array()[-1])
            if run.orbits is not None and run.orbits.length_budget is not None:
                budgets["orbits"] = run.orbits.length_budget
            for name, L in budgets.items():
                n_max = int(math.floor(L / r_min * (1 + 1e-12)))
                estimates[name] = {"length_budget": L, "max_period": n_max,
                                   "periodic_points": sum(count_periodic_points(shift, n)
                                                          for n in range(1, n_max + 1))}
            if run.orbits is not None and run.orbits.p_max is not None:
                estimates["orbits"] = {"max_period": run.orbits.p_max,
                                       "periodic_points": sum(count_periodic_points(shift, n)
                                                              for n in range(1, run.orbits.p_max + 1))}
    else:
        from .interval import PiecewisePolynomial, SmoothRoof, build_map
        try:
            fmap = build_map(model.map.model_dump())
        except ConfigError as exc:
            issue("model.map", str(exc))
            return {"ok": False, "issues": issues, "estimates": estimates}
        if model.map.incidence is not None and \
                np.asarray(model.map.incidence).tolist() != fmap.incidence.tolist():
            issue("model.map.incidence", "does not match the branch images")
        try:
            SmoothRoof(fmap, model.roof)
        except ConfigError as exc:
            issue("model.roof", str(exc))
        for name in ("psi", "observable"):
            val = getattr(model, name)
            if val is not None:
                try:
                    PiecewisePolynomial(fmap, val)
                except ConfigError as exc:
                    issue(f"model.{name}", str(exc))
        if not issues:
            try:
                build_interval(model)
            except ConfigError as exc:
                issue("model.psi", str(exc))
        n_max = max(cfg.run.telescope.n)
        from .symbolic import count_periodic_points
        estimates["telescope"] = {"max_period": n_max,
                                  "periodic_points": count_periodic_points(fmap.shift, n_max)}
    return {"ok": not issues, "issues": issues, "estimates": estimates}


def cmd_validate(ctx: Context):
    report = validate_config(ctx.cfg)
    ctx.out.json("validate.json", report)
    for it in report["issues"]:
        print(f"{it['path']}: {it['message']}", file=sys.stderr)
    if not report["ok"]:
        raise ConfigError(f"{len(report['issues'])} validation failure(s)")
    ctx.say(f"valid; estimates {report['estimates']}")


COMMANDS = {
    "pressure": cmd_pressure, "gibbs": cmd_gibbs, "normalize": cmd_normalize,
    "orbits": cmd_orbits, "zeta-scan": cmd_zeta_scan, "residue": cmd_residue,
    "equidist": cmd_equidist, "window": cmd_window, "perron": cmd_perron,
    "psi-ell": cmd_psi_ell, "dolgopyat-probe": cmd_dolgopyat, "telescope": cmd_telescope,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zetaflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="YAML path or bundled config name")
    p.add_argument("--out", default=None, help="output directory (default: output.dir)")
    p.add_argument("--seed", type=int, default=None, help="override run.seed")
    p.add_argument("--workers", type=int, default=None, help="override run.workers")
    p.add_argument("--quiet", action="store_true")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.run.seed = args.seed
        workers = args.workers if args.workers is not None else cfg.run.workers
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
        out = OutputDir(args.out or cfg.output.dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    ctx = Context(cfg, out, cfg.run.seed, workers, args.quiet)
    status, code = "ok", 0
    try:
        COMMANDS[args.subcommand](ctx)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        status, code = f"config error: {exc}", 2
    except RefusedError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        status, code = f"refused: {exc}", 3
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        status, code = f"budget exceeded: {exc}", 4
    manifest = RunManifest(args.subcommand, cfg.config_hash(), wall_time=time.perf_counter() - start,
                           tolerances=ctx.tolerances, seed=ctx.seed, workers=workers, status=status)
    out.manifest(manifest)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
