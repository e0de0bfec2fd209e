"""Experiment driver: quasimode scans, confinement runs, bifurcation
comparisons, growth experiments, and multiplier audits.

Configuration comes from an optional JSON file plus command-line flag
overrides (flags win).  Every output artifact embeds the resolved
configuration, so any CSV can be regenerated from its own header.  Exit
codes: 0 all checks pass, 1 configuration/validation error, 2 check
failure, 3 numerical-convergence failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, evolve, multiplier, quasimode as qmod
from .geometry import WarpGeometry
from .spectral import Grid, fd_derivative

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field '{field_name}': {message}")
        self.field_name = field_name


class CheckFailure(RuntimeError):
    pass


class ConvergenceFailure(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    m: int = 1
    x0: float = -1.0
    x0_plus: float | None = None
    x0_minus: float | None = None
    l_list: list[int] = field(default_factory=lambda: [20, 30, 40])
    n_interval: int | None = None
    h_per_sigma: float = 0.05
    h_per_sigma_evolve: float = 0.2
    x_max: float = 24.0
    R: float = 1.0
    T_max: float = 200.0
    k: int = 1
    A: float = 10.0
    delta: float | None = None
    dt: float | None = None
    causal: str = "audited"
    seed: int = 20260809
    out_dir: str = "out"

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "ExperimentConfig":
        data = {}
        if path is not None:
            with open(path) as fh:
                data = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field in config file")
        data.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**{k: v for k, v in data.items() if k in known})
        cfg.basic_validate()
        return cfg

    def basic_validate(self) -> None:
        if self.m < 1:
            raise ConfigError("m", "warp exponent must be >= 1")
        if self.T_max <= 0:
            raise ConfigError("T_max", "horizon must be positive")
        if self.R <= self.x0 and self.x0 < 0:
            raise ConfigError("R", "truncation radius must exceed the boundary")
        if self.k < 0:
            raise ConfigError("k", "regularity order must be nonnegative")
        if self.causal not in ("strict", "audited"):
            raise ConfigError("causal", "must be 'strict' or 'audited'")
        if len(self.l_list) != len(set(self.l_list)):
            raise ConfigError("l_list", "duplicate angular degrees")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def echo(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


class OutputCollector:
    """Single writer for all artifacts of one command run."""

    def __init__(self, out_dir: str, config: ExperimentConfig, command: str):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.command = command
        self.files: list[str] = []
        self.passes: dict[str, bool] = {}
        self.t0 = time.perf_counter()

    def write_csv(self, name: str, columns: list[str], rows: list[list]) -> Path:
        path = self.dir / name
        with open(path, "w") as fh:
            fh.write(f"# schema_version={SCHEMA_VERSION}\n")
            fh.write(f"# command={self.command}\n")
            fh.write(f"# config={self.config.echo()}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        self.files.append(name)
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.dir / name
        payload = {"schema_version": SCHEMA_VERSION, "config": self.config.as_dict(),
                   **payload}
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1, default=_json_default)
            fh.write("\n")
        self.files.append(name)
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        self.files.append(name)
        return path

    def record(self, check: str, ok: bool) -> None:
        self.passes[check] = bool(ok)

    def finish(self) -> Path:
        for name in self.files:
            p = self.dir / name
            if not p.exists() or p.stat().st_size == 0:
                raise CheckFailure(f"output file {name} is missing or empty")
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "command": self.command,
            "config": self.config.as_dict(),
            "wall_clock_s": time.perf_counter() - self.t0,
            "files": sorted(self.files),
            "passes": self.passes,
            "all_pass": all(self.passes.values()) if self.passes else True,
        }
        path = self.dir / "manifest.json"
        with open(path, "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1, default=_json_default)
            fh.write("\n")
        return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if o == math.inf:
        return "inf"
    raise TypeError(f"not JSON serializable: {type(o)}")


# -- subcommands -----------------------------------------------------------------


def _interval_grid(cfg: ExperimentConfig, geom: WarpGeometry, l: int,
                   h_per_sigma: float) -> Grid:
    if cfg.n_interval is not None:
        return Grid.interval(geom.params.x0, cfg.n_interval)
    sigma = math.sqrt(l * (l + 1))
    return Grid.for_sigma(geom.params.x0, 0.0, sigma, h_per_sigma)


def cmd_quasimode(cfg: ExperimentConfig) -> OutputCollector:
    if cfg.x0 >= 0:
        raise ConfigError("x0", "quasimode construction requires the trapped side (x0 < 0)")
    if not cfg.l_list:
        raise ConfigError("l_list", "need at least one angular degree")
    out = OutputCollector(cfg.out_dir, cfg, "quasimode")
    geom = WarpGeometry.of(cfg.m, cfg.x0)
    qms = []
    for l in sorted(cfg.l_list):
        grid = _interval_grid(cfg, geom, l, cfg.h_per_sigma)
        qms.append(qmod.build_quasimode(geom, l, grid_interval=grid))
    out.write_csv("quasimodes.csv", qmod.QUASIMODE_CSV_COLUMNS,
                  qmod.quasimode_csv_rows(qms))
    fits = {}
    fit_ok = True
    for quantity in ("residual_h0", "residual_h1", "residual_h2", "agmon"):
        for abscissa in ("sigma", "tau"):
            try:
                f = qmod.fit_exponential_rate(qms, quantity, abscissa)
                fits[f"{quantity}_vs_{abscissa}"] = {
                    "slope": f.slope, "intercept": f.intercept,
                    "r_squared": f.r_squared, "n_excluded": f.n_excluded,
                }
            except qmod.FitError as exc:
                fits[f"{quantity}_vs_{abscissa}"] = {"error": str(exc)}
                fit_ok = False
    out.record("decay_fits_negative", fit_ok)
    out.write_json("decay_fits.json", {"fits": fits})
    rows = [[q.l, q.sigma, q.tau,
             math.log10(max(q.residual_hk[0], 1e-300)),
             math.log10(max(q.residual_hk[1], 1e-300)),
             math.log10(max(q.residual_hk[2], 1e-300)),
             math.log10(max(q.agmon_ratio, 1e-300))] for q in qms]
    out.write_csv("decay_curves.dat",
                  ["l", "sigma", "tau", "log10_r0", "log10_r1", "log10_r2", "log10_tail"],
                  rows)
    out.write_text("decay_curves.gp", _GNUPLOT_SCRIPT)
    out.finish()
    if not all(out.passes.values()):
        raise CheckFailure(f"decay fits failed: {out.passes}")
    return out


_GNUPLOT_SCRIPT = """\
set terminal pngcairo size 960,640
set output 'decay_curves.png'
set datafile separator ','
set key left bottom
set xlabel 'angular frequency sigma'
set ylabel 'log10 of residual / tail ratio'
plot 'decay_curves.dat' using 2:5 with linespoints title 'residual H0', \\
     'decay_curves.dat' using 2:8 with linespoints title 'tail ratio'
"""


def cmd_confinement(cfg: ExperimentConfig) -> OutputCollector:
    if cfg.x0 >= 0:
        raise ConfigError("x0", "confinement runs require the trapped side (x0 < 0)")
    if not cfg.l_list:
        raise ConfigError("l_list", "need at least one angular degree")
    out = OutputCollector(cfg.out_dir, cfg, "confinement")
    geom = WarpGeometry.of(cfg.m, cfg.x0)
    summary = {}
    reports = []
    for l in sorted(cfg.l_list):
        grid = _interval_grid(cfg, geom, l, cfg.h_per_sigma_evolve)
        qm = qmod.build_quasimode(geom, l, grid_interval=grid)
        rep = evolve.run_confinement(geom, qm, cfg.T_max, cfg.R, x_max=cfg.x_max,
                                     dt=cfg.dt, causal=cfg.causal, le1=True)
        reports.append(rep)
        out.write_csv(f"evolution_l{l}.csv", evolve.EVOLUTION_CSV_COLUMNS, rep.csv_rows())
        summary[str(l)] = {
            "tau": rep.tau,
            "t_confinement": rep.t_confinement,
            "min_ratio_E_R": float(rep.ratio_E_R.min()),
            "f_norm": rep.f_norm,
            "half_bound_ok": rep.half_bound_ok,
            "wall_ok": rep.wall_ok,
            "wall_buffer_max": rep.wall_buffer_max,
            "energy_drift": rep.energy_drift,
        }
        out.record(f"gap_bound_l{l}",
                   bool(np.all(rep.duhamel_gap
                               <= rep.times * rep.f_norm + 1e-9 * rep.data_h_norm)))
        out.record(f"half_bound_l{l}", rep.half_bound_ok)
        if cfg.causal == "audited":
            out.record(f"wall_audit_l{l}", rep.wall_ok)
    ls = sorted(cfg.l_list)
    if len(ls) >= 2:
        out.record("t_confinement_nondecreasing", all(
            reports[i].t_confinement <= reports[i + 1].t_confinement
            or math.isinf(reports[i].t_confinement)
            for i in range(len(reports) - 1)))
    out.write_json("confinement_summary.json", {
        "per_l": summary,
        "horizon_note": (
            "Horizons of order exp(c*tau) are not directly runnable.  The "
            "run certifies instead that (a) the measured deviation from the "
            "pure phase rotation stays below t * |F| at every sample and "
            "(b) |F| itself drops exponentially with the angular frequency; "
            "together these imply near-energy retention up to times of order "
            "|data| / |F|, which grows exponentially along the family."
        ),
    })
    out.finish()
    if not all(out.passes.values()):
        raise CheckFailure(f"confinement checks failed: {out.passes}")
    return out


def cmd_le1_growth(cfg: ExperimentConfig) -> OutputCollector:
    if cfg.x0 >= 0:
        raise ConfigError("x0", "growth runs require the trapped side (x0 < 0)")
    if not cfg.l_list:
        raise ConfigError("l_list", "need at least one angular degree")
    out = OutputCollector(cfg.out_dir, cfg, "le1-growth")
    geom = WarpGeometry.of(cfg.m, cfg.x0)
    qms = []
    for l in sorted(cfg.l_list):
        grid = _interval_grid(cfg, geom, l, cfg.h_per_sigma_evolve)
        qms.append(qmod.build_quasimode(geom, l, grid_interval=grid))
    res = evolve.le1_growth(geom, qms, cfg.k, cfg.A, budget=cfg.T_max, R=cfg.R,
                            x_max=cfg.x_max, causal=cfg.causal)
    rows = [[qms[j].l, res.taus[j], res.T_list[j], res.dbk_norms[j], res.ratios[j]]
            for j in range(len(qms))]
    out.write_csv("le1_growth.csv", ["l", "tau", "T", "dbk_norm", "ratio"], rows)
    out.write_json("le1_growth_summary.json", {
        "k": res.k, "A": res.A, "j_star": res.j_star, "T_star": res.T_star,
        "reason": res.reason, "ratios": res.ratios,
    })
    out.record("no_false_success", res.j_star is None or res.ratios[res.j_star] > res.A)
    out.finish()
    return out


def _bump_field(geom: WarpGeometry, grid: Grid, l: int, center: float,
                width: float) -> evolve.WaveField:
    x = grid.nodes()
    s = (x - center) / width
    w0 = np.zeros_like(x)
    inside = np.abs(s) < 1
    w0[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    w0 /= math.sqrt(grid.h * float(np.sum(w0**2)))
    w1 = -fd_derivative(grid, w0, 1)
    return evolve.wave_field(geom, grid, [(l, 1, w0.astype(complex), w1.astype(complex))])


def cmd_bifurcation(cfg: ExperimentConfig) -> OutputCollector:
    if cfg.x0_plus is None or cfg.x0_plus <= 0:
        raise ConfigError("x0_plus", "bifurcation needs a positive-side boundary x0_plus > 0")
    if cfg.x0_minus is None or cfg.x0_minus >= 0:
        raise ConfigError("x0_minus", "bifurcation needs a trapped-side boundary x0_minus < 0")
    if cfg.R <= cfg.x0_plus + 2.0:
        raise ConfigError("R", "bifurcation needs R >= x0_plus + 2 so the matched "
                               "bump data fits inside [x0, R)")
    out = OutputCollector(cfg.out_dir, cfg, "bifurcation")
    l_qm = max(cfg.l_list) if cfg.l_list else 40
    T = cfg.T_max

    # matched bump runs on both sides; decay claims need a causally exact wall
    curves = {}
    for tag, x0 in (("plus", cfg.x0_plus), ("minus", cfg.x0_minus)):
        center = x0 + 1.5
        width = 0.5
        support_max = center + width
        if T > cfg.x_max - support_max:
            raise ConfigError("T_max", "horizon exceeds the causality budget "
                                       f"x_max - support = {cfg.x_max - support_max:g}")
        geom = WarpGeometry.of(cfg.m, x0)
        grid = Grid(x0, cfg.x_max, max(int((cfg.x_max - x0) / 0.04), 400))
        fld = _bump_field(geom, grid, 1, center, width)
        times, er, _ = evolve.er_history(fld, T, cfg.R, dt=cfg.dt)
        curves[f"bump_{tag}"] = (times, er / er[0])
        out.write_csv(f"er_bump_{tag}.csv", ["t", "ratio_E_R"],
                      [[t, r] for t, r in zip(times, er / er[0])])

    # trapped-side quasimode run (audited wall on its own compact domain)
    geom_m = WarpGeometry.of(cfg.m, cfg.x0_minus)
    grid_i = _interval_grid(cfg, geom_m, l_qm, cfg.h_per_sigma_evolve)
    qm = qmod.build_quasimode(geom_m, l_qm, grid_interval=grid_i)
    x_max_qm = min(cfg.x_max, cfg.x0_minus + 25.0)
    rep = evolve.run_confinement(geom_m, qm, T, cfg.R, x_max=x_max_qm,
                                 dt=cfg.dt, causal="audited")
    out.write_csv("er_quasimode_minus.csv", ["t", "ratio_E_R"],
                  [[t, r] for t, r in zip(rep.times, rep.ratio_E_R)])

    plus_final = float(curves["bump_plus"][1][-1])
    qm_final = float(rep.ratio_E_R.min())
    out.record("plus_side_decays", plus_final < 0.5)
    out.record("minus_side_confines", qm_final > 0.9)
    out.write_json("bifurcation_summary.json", {
        "split": {
            "plus_bump_final_ratio": plus_final,
            "minus_bump_final_ratio": float(curves["bump_minus"][1][-1]),
            "minus_quasimode_min_ratio": qm_final,
            "qualitative": "decay on x0>0, confinement of the trapped-side "
                           "quasimode on x0<0",
        },
        "l_quasimode": l_qm,
    })
    out.finish()
    if not all(out.passes.values()):
        raise CheckFailure(f"bifurcation split not observed: {out.passes}")
    return out


def cmd_multiplier_audit(cfg: ExperimentConfig) -> OutputCollector:
    if cfg.x0 <= 0:
        raise ConfigError("x0", "the multiplier audit applies to the x0 > 0 side")
    out = OutputCollector(cfg.out_dir, cfg, "multiplier-audit")
    geom = WarpGeometry.of(cfg.m, cfg.x0)
    delta = cfg.delta
    if delta is None:
        delta = 0.5 * multiplier.find_admissible_delta(geom)
    pair = multiplier.MultiplierPair.delta_family(geom, delta)
    rows = []

    scan = multiplier.coefficient_scan(geom, pair)
    ok_scan = scan.all_positive and scan.route_agreement < 1e-8
    out.record("coefficient_positivity", ok_scan)
    rows.append(["coefficient_scan", f"m={cfg.m};delta={delta!r}",
                 min(scan.min_margins.values()), 0.0, scan.route_agreement,
                 "", ok_scan])

    corpus = multiplier.make_corpus(geom)
    for sol in corpus:
        conv = multiplier.ibp_richardson(geom, pair, sol, T=2.0, x_max=12.0)
        ok = 1.8 <= conv["order"] <= 2.2 and conv["report_h"].boundary_term >= 0
        out.record(f"ibp_{sol.name}", ok)
        rows.append([f"ibp_{sol.name}", f"l={sol.l}", conv["report_h"].lhs,
                     conv["report_h"].rhs, conv["gap_h"], conv["order"], ok])
        if not ok:
            raise ConvergenceFailure(
                f"identity gap order {conv['order']:.2f} out of range for {sol.name}")

    grid = Grid(cfg.x0, cfg.x0 + 10.0, 2000)
    corpus_h = multiplier.hardy_random_corpus(geom, grid, seed=cfg.seed)
    worst = max(r.ratio for r in corpus_h)
    ok_h = worst <= HARDY_FROZEN_BOUND
    out.record("hardy_bound", ok_h)
    rows.append(["hardy_corpus", f"seed={cfg.seed}", worst, HARDY_FROZEN_BOUND,
                 HARDY_FROZEN_BOUND - worst, "", ok_h])

    for R in (4.0, 8.0, 16.0):
        ext = multiplier.MultiplierPair.exterior_family(geom, R, rho=R)
        xs = np.geomspace(max(cfg.x0, 1e-2), 1e3, 301)
        cext = ext.coefficients(xs)
        rows.append([f"exterior_R{int(R)}", f"rho={R!r}",
                     float(np.min(cext["xx"])), float(np.min(cext["tt"])),
                     0.0, "", True])

    out.write_csv("multiplier_checks.csv",
                  ["check", "params", "lhs", "rhs", "gap", "order", "passed"], rows)
    out.write_json("multiplier_summary.json", {
        "delta": delta,
        "hardy_worst": worst,
        "hardy_bound": HARDY_FROZEN_BOUND,
        "min_margins": scan.min_margins,
    })
    out.finish()
    if not all(out.passes.values()):
        raise CheckFailure(f"multiplier audit failed: {out.passes}")
    return out


# Frozen regression bound for the Hardy ratio sweep: measured maximum 0.1066
# over the seeded corpus, plus 25% headroom.  The integration-by-parts proof
# caps the ratio at 4 for any admissible function; the frozen value sits far
# below that.
HARDY_FROZEN_BOUND = 0.134


# -- entry point -------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out", dest="out_dir", default=None, help="output directory")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--x0", type=float, default=None)
    p.add_argument("--x0-plus", dest="x0_plus", type=float, default=None)
    p.add_argument("--x0-minus", dest="x0_minus", type=float, default=None)
    p.add_argument("--l", dest="l_list", type=int, nargs="*", default=None)
    p.add_argument("--n", dest="n_interval", type=int, default=None)
    p.add_argument("--x-max", dest="x_max", type=float, default=None)
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--T", dest="T_max", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--causal", choices=("strict", "audited"), default=None)


_COMMANDS = {
    "quasimode": cmd_quasimode,
    "confinement": cmd_confinement,
    "le1-growth": cmd_le1_growth,
    "bifurcation": cmd_bifurcation,
    "multiplier-audit": cmd_multiplier_audit,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="warptrap",
        description="wave experiments on a warped-product surface with a wall",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        _add_common(sub.add_parser(name))
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = ExperimentConfig.load(args.config, overrides)
        out = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceFailure as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 3
    except CheckFailure as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(out.files)} files + manifest.json to {out.dir}")
    for name, ok in out.passes.items():
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
