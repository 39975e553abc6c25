"""Command-line front end.

    barrier-scatter <subcommand> --config config.json [--out outdir]

Subcommands: trajectory, trapped, series, amplitude, cross-section,
verify-asymptotics, quasimode. All numeric output is written with 17
significant digits; files are written atomically into the output
directory together with a run_report.json.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .amplitude import (leading_regular_coefficient,
                        leading_singular_coefficient, sigma_E)
from .crosssec import total_cross_section
from .manifolds import trapped_trajectory
from .oracles import asymptotic_sweep, quasimode_norms
from .potential import PotentialModel, barrier_spectrum
from .scatter import (action_regular, angular_density,
                      find_regular_trajectories, maslov_index)
from .series import (classify_case, eikonal_taylor, ghat_j_coeffs,
                     m1_coefficient, m2_coefficient, phi1_taylor)

FMT = "%.17g"

_KNOWN_KEYS = {
    "potential", "omega", "theta", "energy", "energy_offset_z", "h_grid",
    "truncation", "J", "search", "asymptotics", "quasimode", "launch_radius",
    "z_extent", "grid", "include_regular",
}
_POTENTIAL_KEYS = {"kind", "n", "E0", "Q", "q", "cubic", "derivs"}


def _fail(msg: str):
    raise SystemExit(f"config error: {msg}")


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        _fail(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        _fail(f"config is not valid JSON: {e}")
    unknown = set(cfg) - _KNOWN_KEYS
    if unknown:
        _fail(f"unknown top-level keys: {sorted(unknown)}; "
              f"known keys: {sorted(_KNOWN_KEYS)}")
    if "potential" not in cfg:
        _fail("missing required key 'potential'")
    pot = cfg["potential"]
    unknown = set(pot) - _POTENTIAL_KEYS
    if unknown:
        _fail(f"unknown potential keys: {sorted(unknown)}; "
              f"known keys: {sorted(_POTENTIAL_KEYS)}")
    for key in ("kind", "n"):
        if key not in pot:
            _fail(f"potential.{key} is required")
    return cfg


def build_model(cfg: dict) -> PotentialModel:
    pot = cfg["potential"]
    kwargs = {"kind": pot["kind"], "n": int(pot["n"])}
    if "E0" in pot:
        kwargs["E0"] = float(pot["E0"])
    if "Q" in pot:
        kwargs["Q"] = np.asarray(pot["Q"], dtype=float)
    if "q" in pot:
        q = pot["q"]
        kwargs["q"] = np.asarray(q, dtype=float) if isinstance(q, list) else float(q)
    if "cubic" in pot:
        kwargs["cubic"] = {tuple(int(s) for s in key.split(",")): float(v)
                           for key, v in pot["cubic"].items()}
    if "derivs" in pot:
        kwargs["derivs"] = {tuple(int(s) for s in key.split(",")): float(v)
                            for key, v in pot["derivs"].items()}
    try:
        return PotentialModel(**kwargs)
    except ValueError as e:
        _fail(f"potential: {e}")


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _g(x) -> str:
    return FMT % float(x)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_json(path: Path, payload) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, default=_json_default) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_g(v) if isinstance(v, (float, int, np.floating))
                              else str(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _energy(cfg: dict, spec) -> float:
    if "energy" in cfg:
        return float(cfg["energy"])
    z = float(cfg.get("energy_offset_z", 0.0))
    if z != 0.0:
        h_ref = min(cfg.get("h_grid", [1e-2]))
        return spec.E0 + z * h_ref
    return spec.E0


# ----------------------------------------------------------------------
def task_trajectory(cfg: dict, out: Path) -> dict:
    model = build_model(cfg)
    spec = barrier_spectrum(model)
    if "omega" not in cfg or "theta" not in cfg:
        _fail("trajectory task needs 'omega' and 'theta'")
    omega = np.asarray(cfg["omega"], dtype=float)
    theta = np.asarray(cfg["theta"], dtype=float)
    E = _energy(cfg, spec)
    hits = find_regular_trajectories(model, omega, theta, E,
                                     z_extent=float(cfg.get("z_extent", 6.0)),
                                     grid=int(cfg.get("grid", 61)))
    rows = []
    for sd in hits:
        S = action_regular(model, omega, sd.z, E)
        nu = maslov_index(model, omega, sd.z, E)
        sh = angular_density(model, omega, sd.z, E)
        rows.append(list(sd.z) + list(sd.theta) + [E, S, nu, sh])
    n = model.n
    header = ([f"z{i}" for i in range(n - 1)]
              + [f"theta{i}" for i in range(n)]
              + ["E", "S_inf", "nu_inf", "sigma_hat"])
    _write_csv(out / "trajectory.csv", header, rows)
    return {"count": len(rows), "outputs": ["trajectory.csv"]}


def _trapped_pair(cfg: dict, model, spec):
    omega = np.asarray(cfg["omega"], dtype=float)
    theta = np.asarray(cfg["theta"], dtype=float)
    search = cfg.get("search", {})
    kw = {"J": int(cfg.get("J", 3)),
          "extent": float(search.get("extent", 0.8)),
          "grid": int(search.get("grid", 33))}
    minus = trapped_trajectory(model, spec, omega, "incoming", **kw)
    plus = trapped_trajectory(model, spec, theta, "outgoing", **kw)
    return minus, plus


def _trapped_payload(t) -> dict:
    return {
        "side": t.side,
        "direction": t.direction.tolist(),
        "z_star": t.z_star.tolist(),
        "E": t.E,
        "g_coeffs": {f"{j},{m}": v.tolist() for (j, m), v in t.g_coeffs.items()},
        "action": t.action,
        "maslov_determinant": t.D,
        "maslov_index": t.nu,
        "ll": t.ll,
    }


def task_trapped(cfg: dict, out: Path) -> dict:
    model = build_model(cfg)
    spec = barrier_spectrum(model)
    if "omega" not in cfg or "theta" not in cfg:
        _fail("trapped task needs 'omega' and 'theta'")
    minus, plus = _trapped_pair(cfg, model, spec)
    payload = {
        "spectrum": {"lambdas": list(spec.lambdas), "E0": spec.E0,
                     "mu_seq": list(spec.mu_seq), "jhat": spec.jhat},
        "incoming": _trapped_payload(minus),
        "outgoing": _trapped_payload(plus),
    }
    _write_json(out / "trapped.json", payload)
    return {"outputs": ["trapped.json"]}


def task_series(cfg: dict, out: Path) -> dict:
    model = build_model(cfg)
    spec = barrier_spectrum(model)
    N = int(cfg.get("truncation", 6))
    phi = eikonal_taylor(model, spec, N)
    payload = {
        "truncation": N,
        "phi_plus": {",".join(map(str, a)): c for a, c in sorted(phi.coeffs.items())},
    }
    if "omega" in cfg and "theta" in cfg:
        minus, plus = _trapped_pair(cfg, model, spec)
        g1m = minus.g_coeffs[(1, 0)]
        g1p = plus.g_coeffs[(1, 0)]
        p1 = phi1_taylor(model, spec, g1m, N=N, phi=eikonal_taylor(model, spec, N + 1))
        m2 = m2_coefficient(model, spec, g1m, g1p)
        _, gh0m = ghat_j_coeffs(model, spec, g1m)
        _, gh0p = ghat_j_coeffs(model, spec, g1p)
        m1 = m1_coefficient(model, spec, g1m, g1p,
                            np.nan_to_num(gh0m), np.nan_to_num(gh0p))
        payload["phi_1"] = {",".join(map(str, a)): c
                            for a, c in sorted(p1.coeffs.items())}
        payload["m2"] = m2
        payload["m1"] = m1
    _write_json(out / "series.json", payload)
    return {"outputs": ["series.json"]}


def task_amplitude(cfg: dict, out: Path) -> dict:
    model = build_model(cfg)
    spec = barrier_spectrum(model)
    if "omega" not in cfg or "theta" not in cfg:
        _fail("amplitude task needs 'omega' and 'theta'")
    minus, plus = _trapped_pair(cfg, model, spec)
    g1m = minus.g_coeffs[(1, 0)]
    g1p = plus.g_coeffs[(1, 0)]
    m2 = m2_coefficient(model, spec, g1m, g1p)
    _, gh0m = ghat_j_coeffs(model, spec, g1m)
    _, gh0p = ghat_j_coeffs(model, spec, g1p)
    m1 = m1_coefficient(model, spec, g1m, g1p,
                        np.nan_to_num(gh0m), np.nan_to_num(gh0p))
    g_minus = {j: minus.g_coeffs[(j, 0)] for j in range(1, spec.jhat)}
    g_plus = {j: plus.g_coeffs[(j, 0)] for j in range(1, spec.jhat)}
    coupling = classify_case(spec, g_minus, g_plus, m2=m2, m1=m1)
    z = float(cfg.get("energy_offset_z", 0.0))
    sig = sigma_E(spec, z)
    E = spec.E0  # leading coefficients are evaluated at the critical energy
    sing = leading_singular_coefficient(coupling, spec, sig, E, minus, plus)
    terms = [sing]
    term_meta = [{"kind": sing.kind, "action": sing.action,
                  "coefficient": {"re": sing.coefficient.real,
                                  "im": sing.coefficient.imag},
                  "h_exponent": {"re": complex(sing.h_exponent).real,
                                 "im": complex(sing.h_exponent).imag},
                  "log_power": {"re": complex(sing.log_power).real,
                                "im": complex(sing.log_power).imag},
                  "convention": sing.convention}]
    omega = np.asarray(cfg["omega"], dtype=float)
    theta = np.asarray(cfg["theta"], dtype=float)
    if model.n >= 2 and bool(cfg.get("include_regular", False)):
        for sd in find_regular_trajectories(model, omega, theta, E):
            S = action_regular(model, omega, sd.z, E)
            nu = maslov_index(model, omega, sd.z, E)
            sh = angular_density(model, omega, sd.z, E)
            reg = leading_regular_coefficient(sh, nu, S)
            terms.append(reg)
            term_meta.append({"kind": reg.kind, "action": reg.action,
                              "coefficient": {"re": reg.coefficient.real,
                                              "im": reg.coefficient.imag}})
    payload = {"case": coupling.case, "k": coupling.k,
               "inner_products": list(coupling.inner_products),
               "m2": m2, "m1": m1, "sigma_E": {"re": sig.value.real,
                                               "im": sig.value.imag},
               "terms": term_meta}
    _write_json(out / "amplitude.json", payload)
    h_grid = cfg.get("h_grid", [10.0 ** (-k / 2.0) for k in range(2, 9)])
    rows = []
    for h in h_grid:
        total = sum(t.value_at(h) for t in terms)
        rows.append([h, total.real, total.imag, abs(total)])
    _write_csv(out / "amplitude.csv", ["h", "re", "im", "abs"], rows)
    return {"case": coupling.case,
            "outputs": ["amplitude.json", "amplitude.csv"]}


def task_cross_section(cfg: dict, out: Path) -> dict:
    model = build_model(cfg)
    spec = barrier_spectrum(model)
    if "omega" not in cfg:
        _fail("cross-section task needs 'omega'")
    omega = np.asarray(cfg["omega"], dtype=float)
    E = _energy(cfg, spec)
    h_grid = cfg.get("h_grid", [10.0 ** (-k / 2.0) for k in range(2, 9)])
    rows = []
    for h in h_grid:
        res = total_cross_section(model, omega, E, float(h))
        rows.append([res.h, res.value, res.truncation_radius])
    _write_csv(out / "cross_section.csv", ["h", "sigma", "truncation_radius"], rows)
    return {"outputs": ["cross_section.csv"]}


def task_verify_asymptotics(cfg: dict, out: Path) -> dict:
    spec_cfg = cfg.get("asymptotics", {})
    alphas = spec_cfg.get("alphas", [0.5, 1.0, 1.5])
    betas = spec_cfg.get("betas", [0, 1])
    lam_grid = spec_cfg.get("lam_grid", [1e3, 1e4, 1e5])
    rows = []
    all_ok = True
    for a in alphas:
        for b in betas:
            chk = asymptotic_sweep(complex(a), complex(b), lam_grid)
            for lam, num, pred, rel in zip(chk.lam_grid, chk.numeric,
                                           chk.predicted, chk.rel_errors):
                rows.append([a, b, lam, num.real, num.imag,
                             pred.real, pred.imag, rel])
            all_ok = all_ok and chk.rel_errors[-1] < 0.05
    _write_csv(out / "asymptotics.csv",
               ["alpha", "beta", "lambda", "numeric_re", "numeric_im",
                "predicted_re", "predicted_im", "rel_error"], rows)
    return {"all_small": all_ok, "outputs": ["asymptotics.csv"]}


def task_quasimode(cfg: dict, out: Path) -> dict:
    qcfg = cfg.get("quasimode", {})
    lambdas = qcfg.get("lambdas", [1.0])
    h_grid = qcfg.get("h_grid", list(np.logspace(-4, -2, 9)))
    rows = []
    for h in h_grid:
        r = quasimode_norms(lambdas, float(h))
        rows.append([r.h, r.norm_u, r.norm_resid, r.ratio, r.bound_const])
    _write_csv(out / "quasimode.csv",
               ["h", "norm_u", "norm_residual", "ratio", "bound_const"], rows)
    return {"outputs": ["quasimode.csv"]}


TASKS = {
    "trajectory": task_trajectory,
    "trapped": task_trapped,
    "series": task_series,
    "amplitude": task_amplitude,
    "cross-section": task_cross_section,
    "verify-asymptotics": task_verify_asymptotics,
    "quasimode": task_quasimode,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="barrier-scatter",
        description="semiclassical barrier-top scattering toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in TASKS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
    args = parser.parse_args(argv)
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {"version": __version__, "command": args.command,
              "config": cfg}
    try:
        result = TASKS[args.command](cfg, out)
        report["status"] = "ok"
        report.update(result)
        code = 0
    except SystemExit:
        raise
    except Exception as e:  # report the failure, then signal it
        report["status"] = "failed"
        report["reason"] = f"{type(e).__name__}: {e}"
        code = 1
    _write_json(out / "run_report.json", report)
    print(json.dumps({"status": report["status"],
                      **{k: v for k, v in report.items()
                         if k in ("reason", "outputs", "case", "count")}}))
    return code


if __name__ == "__main__":
    sys.exit(main())
