"""
Named experiments. Each one turns a validated config into a ``Report`` of
pass/fail checks, refinement tables and CSV series.

A config file names the experiment and overrides what it needs; everything
else comes from ``PRESETS``.
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .core import GridFunction, make_grid, make_params
from .errors import ConfigError, FracHSError
from .extension import (
    bessel_k,
    bessel_k_array,
    bessel_k_large,
    bessel_k_small,
    extend,
    extension_energy,
    extension_pde_residual,
    graded_t_nodes,
    perturbed_competitor,
    richardson_energy,
)
from .geometry import (
    correction_integrals,
    curvature_functionals,
    profile_from_config,
    trial_quotient_sweep,
)
from .halfspace import (
    KernelPoint,
    decay_certificate,
    green_kernel,
    green_kernel_array,
    gradient_bound_margin,
    halfspace_minimizer,
    kelvin,
    kelvin_mapping_defect,
    kernel_bound_margin,
    kernel_normalizations,
    level_bound_constants,
    ls_residual,
    poisson_constant,
    poisson_mass,
    riesz_potential_constant,
    source_exponent,
)
from .infrastructure.config import EL_MAX_ITER, EXPERIMENTS, PRESETS
from .infrastructure.logger import RunLogger
from .reports import Report, write_report
from .spectral import (
    dirichlet_laplacian,
    eigenpairs,
    max_principle_margin,
    random_bumps,
    riesz_form,
    spectral_form,
)
from .variational import nonattainment_diagnostic, pohozaev_refinement, quotient_of

log = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ("experiment", "params", "settings", "tolerances", "seed", "out")


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict
    settings: dict
    tolerances: dict
    seed: int = 0
    out: str = "results"
    threads: int = 1
    source: str = field(default="<preset>")

    def fracparams(self, **overrides):
        values = dict(self.params, **overrides)
        return make_params(values["n"], values["s"], values["sigma"], min_dim=1)


def _merge(name, section, given):
    preset = PRESETS[name][section]
    if not isinstance(given, dict):
        raise ConfigError(f"'{section}' must be an object")
    unknown = sorted(set(given) - set(preset))
    if unknown:
        raise ConfigError(f"unknown {section} key(s) for {name}: {', '.join(unknown)}")
    return {**preset, **given}


def build_config(document, source="<dict>"):
    """Validate a parsed config document against the presets."""
    if not isinstance(document, dict):
        raise ConfigError("the config must be a JSON object")
    unknown = sorted(set(document) - set(TOP_LEVEL_KEYS))
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    name = document.get("experiment")
    if name not in PRESETS:
        raise ConfigError(f"unknown experiment {name!r}; valid experiments: {', '.join(EXPERIMENTS)}")
    cfg = ExperimentConfig(
        experiment=name,
        params=_merge(name, "params", document.get("params", {})),
        settings=_merge(name, "settings", document.get("settings", {})),
        tolerances=_merge(name, "tolerances", document.get("tolerances", {})),
        seed=document.get("seed", 0),
        out=document.get("out", "results"),
        source=source,
    )
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int):
        raise ConfigError(f"'seed' must be an integer, got {cfg.seed!r}")
    for key, value in cfg.tolerances.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ConfigError(f"tolerance '{key}' must be a positive number, got {value!r}")
    try:
        cfg.fracparams()
    except FracHSError as e:
        raise ConfigError(f"bad 'params': {e}") from e
    return cfg


def load_config(path):
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e.msg}", line=e.lineno, column=e.colno) from e
    return build_config(document, source=path)


def with_overrides(cfg, out=None, seed=None, threads=None):
    changes = {}
    if out is not None:
        changes["out"] = out
    if seed is not None:
        changes["seed"] = int(seed)
    if threads is not None:
        if threads < 1:
            raise ConfigError(f"--threads must be positive, got {threads}")
        changes["threads"] = int(threads)
    return replace(cfg, **changes)


def _report(cfg, p=None):
    params = dict(cfg.params) if p is None else p.as_dict()
    return Report(experiment=cfg.experiment, seed=cfg.seed, params=params, settings=dict(cfg.settings))


def _max_relative_change(values):
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(values - values[-1])) / abs(values[-1]))


def run_norm_identity(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    report = _report(cfg)
    grid = make_grid(st["bounds"], st["nodes"])
    with runlog.timeit("eigen-decomposition"):
        dec = eigenpairs(dirichlet_laplacian(grid))
    modes = int(st["modes"])
    coefficients = rng.normal(size=modes)
    u = GridFunction(grid, dec.phis[:, :modes] @ coefficients)
    rows = []
    for s in st["s_values"]:
        p = cfg.fracparams(n=max(2, cfg.params["n"]), s=s, sigma=0.5 * s)
        with runlog.timeit(f"extension energy s={s}"):
            t_nodes = graded_t_nodes(dec.lambdas[0], dec.lambdas[-1], s, t_ratio=st["t_ratio"])
            w = extend(dec, u, p, t_nodes)
            energy, error = richardson_energy(w)
            competitor = extension_energy(perturbed_competitor(w, dec, rng))
        form = spectral_form(dec, u, s)
        relative = abs(p.c_s * energy - form) / form
        rows.append({
            "s": s, "form": form, "c_s_energy": p.c_s * energy, "relative": relative,
            "energy_error": error, "competitor_energy": competitor,
            "pde_residual": extension_pde_residual(w), "t_nodes": w.t_nodes.size,
        })
        report.check(f"norm identity s={s}", relative <= tol["relative"], relative, tol["relative"])
        report.check(f"competitor energy exceeds s={s}", competitor > energy, competitor, energy)
    report.add_table("identity", rows)
    report.add_series("identity", {k: [r[k] for r in rows] for k in ("s", "form", "c_s_energy", "relative")})
    return report


def run_form_inequality(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    p = cfg.fracparams()
    report = _report(cfg, p)
    grid = make_grid(st["bounds"], st["nodes"])
    with runlog.timeit("eigen-decomposition"):
        dec = eigenpairs(dirichlet_laplacian(grid))
    bumps = random_bumps(grid, int(st["count"]), rng)
    spectral, riesz, norms, margins, torus_drift = [], [], [], [], []
    with runlog.timeit(f"{len(bumps)} forms"):
        for u in bumps:
            spectral.append(spectral_form(dec, u, p.s))
            riesz.append(riesz_form(u, p.s, torus_factor=st["torus_factor"]))
            norms.append(u.norm())
            margins.append(max_principle_margin(dec, abs(u), p.s) / max(np.max(np.abs(u.values)), 1e-300))
            sweep = [riesz_form(u, p.s, torus_factor=int(k)) for k in st["torus_sweep"]]
            torus_drift.append(_max_relative_change(sweep))
    spectral, riesz, norms = map(np.array, (spectral, riesz, norms))
    gap = spectral - riesz
    report.check("spectral >= riesz", bool(np.all(gap >= -tol["slack"])), float(np.min(gap)), -tol["slack"])
    large = norms >= tol["min_norm"]
    report.check(
        "strict gap for non-negligible norm",
        bool(np.all(gap[large] > 0.0)),
        float(np.min(gap[large])) if np.any(large) else None,
        0.0,
        f"{int(np.count_nonzero(large))} of {len(bumps)} functions",
    )
    report.check("maximum principle", min(margins) >= -1e-12, min(margins), -1e-12)
    report.add_series("forms", {
        "norm": norms, "spectral": spectral, "riesz": riesz, "gap": gap, "torus_drift": torus_drift,
    })
    return report


def run_bessel(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    report = _report(cfg)
    taus = np.geomspace(st["tau_min"], st["tau_max"], int(st["points"]))
    with runlog.timeit("closed form"):
        k_half = bessel_k_array(0.5, taus)
        exact = np.sqrt(np.pi / (2.0 * taus)) * np.exp(-taus)
        error = np.abs(k_half - exact) / exact
    report.check("K_1/2 closed form", float(np.max(error)) <= tol["closed_form"], float(np.max(error)),
                 tol["closed_form"])
    rows = []
    for nu in st["nu_values"]:
        small = bessel_k(nu, st["tau_small"]) / float(bessel_k_small(nu, st["tau_small"], terms=2))
        leading = bessel_k(nu, st["tau_small"]) / float(bessel_k_small(nu, st["tau_small"]))
        large = bessel_k(nu, st["tau_large"]) / float(bessel_k_large(nu, st["tau_large"]))
        rows.append({"nu": nu, "small_ratio": small, "leading_ratio": leading, "large_ratio": large})
        report.check(f"small-argument law nu={nu}", abs(small - 1.0) <= tol["asymptotic"], small, tol["asymptotic"])
        report.check(f"large-argument law nu={nu}", abs(large - 1.0) <= tol["asymptotic"], large, tol["asymptotic"])
    report.add_table("asymptotics", rows)
    series = {"tau": taus, "k_half": k_half, "relative_error": error}
    for nu in st["nu_values"]:
        series[f"k_{nu}"] = bessel_k_array(nu, taus)
    report.add_series("bessel", series)
    return report


def _random_kernel_points(rng, n, count, z_range=(0.0, 2.0)):
    points = []
    while len(points) < count:
        y = np.append(rng.uniform(-2.0, 2.0, n - 1), rng.uniform(0.05, 3.0))
        xi = np.append(rng.uniform(-2.0, 2.0, n - 1), rng.uniform(0.05, 3.0))
        z = rng.uniform(*z_range)
        if np.sum((y - xi) ** 2) + z * z > 1e-6:
            points.append(KernelPoint(y=y, xi=xi, z=z))
    return points


def run_green_kernels(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    p = cfg.fracparams()
    report = _report(cfg, p)
    with runlog.timeit("normalizations"):
        c_tilde, c_hat = kernel_normalizations(p, int(st["samples"]))
    report.add_table("normalizations", [{
        "c_tilde": c_tilde, "c_tilde_closed": riesz_potential_constant(p),
        "c_hat": c_hat, "c_hat_closed": poisson_constant(p),
    }])
    masses = [poisson_mass(p, t, c_hat) for t in (0.5, 2.0)]
    report.check("Poisson mass independent of t", abs(masses[0] - masses[1]) < 1e-8,
                 abs(masses[0] - masses[1]), 1e-8)
    report.check("Poisson mass equals one", abs(masses[0] - 1.0) < 1e-8, masses[0], 1e-8)

    points = _random_kernel_points(rng, p.n, 1000)
    asym = 0.0
    for pt in points:
        a = green_kernel("trace", KernelPoint(pt.y, pt.xi), p, c_tilde)
        b = green_kernel("trace", KernelPoint(pt.xi, pt.y), p, c_tilde)
        asym = max(asym, abs(a - b) / max(abs(a), 1e-300))
    report.check("trace kernel symmetry", asym <= tol["symmetry"], asym, tol["symmetry"])

    xi = np.append(np.zeros(p.n - 1), 1.0)
    X = np.column_stack([
        rng.uniform(-1.5, 1.5, (50, p.n - 1)), rng.uniform(1.6, 2.5, 50), rng.uniform(0.5, 1.5, 50)
    ])

    def kernel(Y):
        return green_kernel_array("source", Y, xi, p, c_tilde)

    residuals = []
    with runlog.timeit("stencil residuals"):
        for h in st["steps"]:
            residuals.append(float(np.max(np.abs(ls_residual(kernel, X, h, p.s)))))
    orders = np.log2(np.array(residuals[:-1]) / np.array(residuals[1:]))
    report.check("stencil residual order", float(np.min(orders)) >= tol["min_order"], float(np.min(orders)),
                 tol["min_order"])
    report.add_series("stencil", {"h": st["steps"], "residual": residuals})

    a = source_exponent(p)
    rows = []
    for b in st["b_values"]:
        worst = 0.0
        for pt in points:
            value, shape = kernel_bound_margin(pt, b, p, c_tilde)
            worst = max(worst, value / shape)
        bound = c_tilde * (4.0 * a) ** b
        rows.append({"b": b, "max_ratio": worst, "bound": bound})
        report.check(f"kernel bound b={b}", worst <= bound * (1.0 + 1e-9), worst, bound)
    gradient = []
    for pt in _random_kernel_points(rng, p.n, 1000, z_range=(0.05, 2.0)):
        value, shape = gradient_bound_margin(pt, p, c_tilde)
        gradient.append(value / shape)
    bound = c_tilde * max(8.0 * a * (a + 1.0), 4.0 * a)
    rows.append({"b": "gradient", "max_ratio": float(np.max(gradient)), "bound": bound})
    report.check("gradient bound", float(np.max(gradient)) <= bound * (1.0 + 1e-9), float(np.max(gradient)), bound)
    report.add_table("margins", rows)
    return report


def _harmonic_profiles(p):
    return {
        "one": lambda X: np.ones(X.shape[0]),
        "linear": lambda X: X[:, 0],
        "z_power": lambda X: X[:, -1] ** (2.0 * p.s),
    }


def run_kelvin(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    p = cfg.fracparams()
    report = _report(cfg, p)
    count = int(st["samples"])
    center = np.append(np.full(p.n, 0.3), 0.7)

    def gaussian(X):
        return np.exp(-np.sum((X - center) ** 2, axis=1))

    X = rng.normal(size=(count, p.n + 1))
    X[:, -1] = np.abs(X[:, -1]) + 1e-3
    twice = kelvin(kelvin(gaussian, p), p)(X)
    involution = float(np.max(np.abs(twice - gaussian(X)) / np.maximum(np.abs(gaussian(X)), 1e-300)))
    report.check("Kelvin involution", involution <= tol["involution"], involution, tol["involution"])

    directions = rng.normal(size=(50, p.n + 1))
    directions[:, -1] = np.abs(directions[:, -1]) + 0.5
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    points = directions * rng.uniform(0.8, 1.25, 50)[:, None]
    points = points[points[:, -1] >= 0.4]

    rows = []
    profiles = dict(_harmonic_profiles(p), gaussian=gaussian)
    with runlog.timeit("mapping defects"):
        for name, w in profiles.items():
            defects = []
            for h in st["steps"]:
                lhs, rhs = kelvin_mapping_defect(w, points, h, p)
                defects.append(float(np.max(np.abs(lhs - rhs))))
                fd_error = float(np.max(np.abs(lhs))) if name != "gaussian" else float("nan")
                rows.append({"profile": name, "h": h, "defect": defects[-1], "harmonic_residual": fd_error})
            if defects[-1] > 1e-10:
                order = float(np.log2(defects[0] / defects[-1]) / np.log2(st["steps"][0] / st["steps"][-1]))
                report.check(f"mapping defect order ({name})", order >= tol["min_order"], order, tol["min_order"])
            else:
                report.check(f"mapping defect ({name})", True, defects[-1], 1e-10, "exact for this profile")
    report.add_table("mapping", rows)
    return report


def _nonincreasing(history):
    history = np.asarray(history)
    return bool(np.all(np.diff(history) <= 1e-12 * np.abs(history[:-1])))


def run_halfspace_minimizer(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    p = cfg.fracparams()
    report = _report(cfg, p)
    R, res = float(st["radius"]), int(st["resolution"])
    with runlog.timeit(f"minimizer R={R}"):
        m = halfspace_minimizer(p, R, res, tol=tol["tol"], max_iter=int(st["max_iter"]))
    with runlog.timeit(f"minimizer R={2 * R}"):
        m2 = halfspace_minimizer(p, 2.0 * R, 2 * res, tol=tol["tol"], max_iter=int(st["max_iter"]))
    report.check("quotient history nonincreasing", _nonincreasing(m.history), len(m.history), None)
    report.check("final iterate positive", float(np.min(m.values.values)) > 0.0, float(np.min(m.values.values)), 0.0)
    report.check("EL residual", m.el_residual < 10.0 * tol["tol"], m.el_residual, 10.0 * tol["tol"])

    with runlog.timeit("decay certificates"):
        cert = decay_certificate(m, m2)
        levels = level_bound_constants(m)
    finite = all(np.isfinite([cert.phi_constant, cert.energy_constant, cert.edge_slope, cert.rough_constant]))
    report.check("decay constants finite", finite, [cert.phi_constant, cert.energy_constant], None)
    for key, change in cert.stability.items():
        report.check(f"{key} constant stable under R -> 2R", change < tol["stability"], change, tol["stability"])

    dec = m.decomposition
    tau, y = m.grid.nodes[:, 0], m.grid.nodes[:, 1]
    competitors = []
    for _ in range(20):
        c = rng.uniform(0.2, 4.0, 2)
        width = rng.uniform(0.5, 3.0)
        values = y * np.exp(-((tau - c[0]) ** 2 + (y - c[1]) ** 2) / width**2)
        competitors.append(quotient_of(dec, GridFunction(m.grid, values), p))
    report.check("minimizer beats random competitors", m.quotient <= min(competitors) * (1.0 + 1e-12),
                 m.quotient, min(competitors))

    report.add_table("minimizer", [{
        "R": R, "resolution": res, "quotient": m.quotient, "quotient_2R": m2.quotient,
        "iterations": m.iterations, "projections": m.positivity_projections, "el_residual": m.el_residual,
        "phi_constant": cert.phi_constant, "energy_constant": cert.energy_constant,
        "edge_slope": cert.edge_slope, "rough_constant": cert.rough_constant,
    }])
    report.add_table("level_bounds", levels)
    report.add_series("history", {"iteration": list(range(len(m.history))), "quotient": m.history})
    t_axis, y_axis = m.grid.axes
    values = m.values.reshaped()
    report.add_series("profile_y", {"y_n": y_axis, "phi": values[0]})
    report.add_series("profile_tau", {"tau": t_axis, "phi": values[:, 0]})
    return report


def run_nonattainment(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    p = cfg.fracparams()
    report = _report(cfg, p)
    with runlog.timeit(f"{st['levels']} refinement levels"):
        diag = nonattainment_diagnostic(
            st["bounds"], p, int(st["levels"]), base_nodes=int(st["nodes"][0]),
            tol=tol["tol"], max_iter=EL_MAX_ITER, processes=cfg.threads,
        )
    radii = np.array(diag.median_mass_radius)
    quotients = np.array(diag.quotient_per_refinement)
    report.check("median mass radius strictly decreasing", bool(np.all(np.diff(radii) < 0.0)), radii.tolist(), None)
    gaps = (quotients[:-1] - quotients[1:]) / quotients[:-1]
    report.check("quotient gap does not settle", bool(np.all(gaps > tol["min_gap"])), gaps.tolist(), tol["min_gap"])
    riesz = np.array([level.riesz_quotient for level in diag.levels])
    report.check("quotient above the Riesz quotient", bool(np.all(quotients >= riesz)),
                 (quotients - riesz).tolist(), 0.0)
    report.add_table("levels", [{
        "nodes": level.nodes, "h": level.h, "quotient": level.quotient, "riesz_quotient": level.riesz_quotient,
        "median_mass_radius": level.profile.median_radius, "iterations": level.iterations,
        "projections": level.projections, "el_residual": level.el_residual,
    } for level in diag.levels])
    report.add_series("concentration", {
        "radius": diag.radii, "mass_inside": diag.mass_at_origin, "mass_outside": diag.mass_at_infinity,
    })
    return report


def run_pohozaev(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    p = cfg.fracparams()
    report = _report(cfg, p)
    with runlog.timeit("ledgers"):
        ref = pohozaev_refinement(
            p, st["bounds"], int(st["nodes"][0]), int(st["levels"]), st["eps"], t_ratio=st["t_ratio"],
            state=st["state"], eps_schedule=st["eps_schedule"], tol=tol["tol"], processes=cfg.threads,
        )
    report.check("observed order", min(ref.orders) >= tol["min_order"], list(ref.orders), tol["min_order"])
    terms = [ledger.boundary_term for ledger in ref.ledgers]
    report.check("boundary term nonnegative", min(terms) >= 0.0, terms, 0.0)
    imbalances = [ledger.imbalance for ledger in ref.ledgers]
    report.check("imbalance decreasing", bool(np.all(np.diff(imbalances) < 0.0)), imbalances, None)
    if st["state"] == "minimizer":
        residuals = [ledger.el_residual for ledger in ref.ledgers]
        report.check("states solve the Euler-Lagrange equation", max(residuals) < 10.0 * tol["tol"],
                     max(residuals), 10.0 * tol["tol"])
    rows = []
    for ledger, ratio in zip(ref.ledgers, ref.t_ratios):
        row = {"h": ledger.h, "eps": ledger.eps, "t_ratio": ratio, "imbalance": ledger.imbalance,
               "relative_imbalance": ledger.relative_imbalance, "boundary_term": ledger.boundary_term,
               "truncated_flux": ledger.truncated_flux, "final_residual": ledger.final_residual,
               "el_residual": ledger.el_residual}
        row.update({f"B{i + 1}": b for i, b in enumerate(ledger.b_terms)})
        rows.append(row)
    report.add_table("ledgers", rows)
    report.add_series("imbalance", {"h": [r["h"] for r in rows], "imbalance": [r["imbalance"] for r in rows]})
    return report


def run_curvature(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    p = cfg.fracparams()
    report = _report(cfg, p)
    taus = np.geomspace(st["tau_min"], st["tau_max"], int(st["points"]))
    rows = []
    for spec in st["profiles"]:
        bp = profile_from_config(spec)
        cr = curvature_functionals(bp, taus, p, alpha_tol=tol["alpha"])
        kind = spec.get("kind")
        rows.append({"profile": bp.name, "alpha_hat": cr.alpha_hat, "concave": cr.concave, "rv_ok": cr.rv_ok,
                     "cond_ok": cr.cond_ok, "f1_ok": cr.f1_ok, "cauchy_schwarz": cr.cauchy_schwarz_margin})
        report.check(f"Cauchy-Schwarz ({bp.name})", cr.cauchy_schwarz_margin >= -1e-12 * np.max(cr.f2),
                     cr.cauchy_schwarz_margin, 0.0)
        report.check(f"condition implies f1 shape ({bp.name})", (not cr.cond_ok) or cr.f1_ok, cr.f1_ok, None)
        if kind == "convex":
            report.check(f"convex control fails concavity ({bp.name})", not cr.concave, cr.concave, False)
            continue
        if kind == "power":
            alpha = spec.get("alpha")
            report.check(f"alpha fit ({bp.name})", abs(cr.alpha_hat - alpha) <= tol["alpha"], cr.alpha_hat, alpha)
            report.check(f"admissible ({bp.name})", cr.admissible, cr.admissible, True)
            if alpha == 2.0 and spec.get("c", -1.0) == -1.0 and p.n == 3:
                closed = [-(taus**2), taus**4, 4.0 * taus**2, 2.0 * taus]
                err = max(float(np.max(np.abs(a - b) / np.abs(b))) for a, b in zip((cr.f, cr.f1, cr.f2, cr.f3), closed))
                report.check("paraboloid closed forms", err <= tol["closed_form"], err, tol["closed_form"])
        report.add_series(f"averages_{len(rows)}", {"tau": taus, "f": cr.f, "f1": cr.f1, "f2": cr.f2, "f3": cr.f3})
    report.add_table("profiles", rows)
    return report


def run_corrections(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    p = cfg.fracparams()
    report = _report(cfg, p)
    rows = []
    for res in st["resolutions"]:
        with runlog.timeit(f"minimizer N={res}"):
            m = halfspace_minimizer(p, st["radius"], int(res), tol=tol["tol"])
            ci = correction_integrals(m, p, st["alpha"])
        rows.append({"resolution": res, "c1": ci.c1, "c2": ci.c2, "c1_error": ci.c1_error,
                     "c2_error": ci.c2_error, "tail_slope": ci.tail_slope, "scale": ci.scale})
    fine = rows[-1]
    for key in ("c1", "c2"):
        values = [r[key] for r in rows]
        report.check(f"{key} positive and finite", all(np.isfinite(values)) and min(values) > 0.0, values, 0.0)
        if len(values) > 1:
            change = _max_relative_change(values)
            report.check(f"{key} stable under refinement", change <= tol["stability"], change, tol["stability"])
    report.check("c1 tail slope below -1", fine["tail_slope"] < -1.0, fine["tail_slope"], -1.0)
    report.add_table("corrections", rows)
    return report


def run_trial_sweep(cfg, rng, runlog):
    st, tol = cfg.settings, cfg.tolerances
    p = cfg.fracparams()
    report = _report(cfg, p)
    bp = profile_from_config(st["profile"])
    taus = np.geomspace(1e-3, 0.5 * st["delta"], 12)
    cr = curvature_functionals(bp, taus, p)
    report.check("profile admissible", cr.admissible, cr.alpha_hat, None)
    with runlog.timeit("half-space minimizer"):
        m = halfspace_minimizer(p, st["radius"], int(st["resolution"]), tol=tol["tol"])
    with runlog.timeit("trial sweep"):
        sweep = trial_quotient_sweep(m, bp, p, st["eps_list"], st["delta"], st["resolutions"],
                                     processes=cfg.threads)
    for res, slope in sweep.slopes.items():
        report.check(f"first-order correction negative N={res}", slope < 0.0, slope, 0.0)
    report.check("sign stable across resolutions", sweep.sign_stable, list(sweep.slopes.values()), None)
    corrections = [r.correction for r in sweep.rows]
    report.check("curved quotient below the mirrored one", max(corrections) < 0.0, max(corrections), 0.0)
    report.add_table("slopes", [
        {"resolution": res, "slope": sweep.slopes[res], "flat_slope": sweep.flat_slopes[res]}
        for res in sweep.slopes
    ])
    report.add_series("sweep", {
        "resolution": [r.resolution for r in sweep.rows], "eps": [r.eps for r in sweep.rows],
        "quotient": [r.quotient for r in sweep.rows],
        "mirrored_quotient": [r.mirrored_quotient for r in sweep.rows],
        "flat_quotient": [r.flat_quotient for r in sweep.rows],
        "reference": [r.reference for r in sweep.rows], "correction": corrections,
        "flat_correction": [r.flat_correction for r in sweep.rows],
        "leading_order": [r.leading_order for r in sweep.rows],
        "scaled_excess": [r.scaled_excess for r in sweep.rows],
    })
    return report


RUNNERS = {
    "norm-identity": run_norm_identity,
    "form-inequality": run_form_inequality,
    "bessel": run_bessel,
    "green-kernels": run_green_kernels,
    "kelvin": run_kelvin,
    "halfspace-minimizer": run_halfspace_minimizer,
    "nonattainment": run_nonattainment,
    "pohozaev": run_pohozaev,
    "curvature": run_curvature,
    "corrections": run_corrections,
    "trial-sweep": run_trial_sweep,
}


def set_threads(threads):
    import numba

    numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def run_experiment(cfg, quiet=True):
    """Run ``cfg`` and write its report files; returns ``(report, paths)``.

    Numerical failures propagate; the run log records the outcome either way.
    """
    if cfg.experiment not in RUNNERS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; valid experiments: {', '.join(RUNNERS)}")
    set_threads(cfg.threads)
    os.makedirs(cfg.out, exist_ok=True)
    runlog = RunLogger(cfg.experiment, preset=os.path.basename(cfg.source), logdir=cfg.out, quiet=quiet)
    rng = np.random.default_rng(cfg.seed)
    try:
        report = RUNNERS[cfg.experiment](cfg, rng, runlog)
    except Exception:
        runlog.close("error")
        raise
    paths = write_report(report, cfg.out)
    runlog.close("pass" if report.passed else "fail")
    log.info("%s: %s (%d checks)", cfg.experiment, "pass" if report.passed else "fail", len(report.checks))
    return report, paths
