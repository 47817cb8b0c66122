"""Check suites run by the CLI.

Each check returns a :class:`CheckResult` holding the measured value, the
threshold taken from the scenario's tolerance block and the verdict. Checks
compare either ``value <= tol`` (defects) or ``value >= tol`` (contrasts and
ratios). A check that does not apply to a scenario, for example the
Omega-attributed excess when ``Omega^2 = 0``, is reported with
``applicable = False`` and counts as passed.

Probe fields are drawn from ``numpy.random.default_rng(seed)`` so reruns with
the same seed reproduce every number bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import oracle
from .convergence import associativity_defect, leibniz_defect, scaling_row
from .currents import (
    J_combined, J_current, K_current, R_current, VariationSpec, amt, conservation_report, divergence, emt,
    emt_simplified, noether_bookkeeping, parity_map, simplified_gap, vacuum_of,
)
from .geometry import build_vielbein, identity_vielbein
from .grid import ScalarField, field_norm, integrate
from .model import (
    Configuration, action_value, e_mixed_residual, e_phi_residual, e_phic_residual,
)
from .scenario import Scenario, TwistBlock, build_twist

SUITE_NAMES = ("verify", "residuals", "currents", "conserve", "converge")


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float | None
    passed: bool
    compare: str = "max"  # "max": value <= tol, "min": value >= tol
    applicable: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "value": _clean(self.value), "tol": _clean(self.tol), "compare": self.compare,
                "passed": self.passed, "applicable": self.applicable, "details": _clean(self.details)}


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def _check(name: str, value: float, tol: float, compare: str = "max", **details) -> CheckResult:
    value = float(value)
    ok = value <= tol if compare == "max" else value >= tol
    return CheckResult(name, value, tol, bool(ok and np.isfinite(value)), compare, True, details)


def _not_applicable(name: str, reason: str) -> CheckResult:
    return CheckResult(name, float("nan"), None, True, "max", False, {"reason": reason})


# Scales below this are rounding noise of quantities that vanish identically
# (a vacuum scenario); the defect is then reported in absolute terms.
ROUNDING_SCALE = 1e-10


def _rel(num: float, scale: float) -> float:
    return num / scale if scale > ROUNDING_SCALE else num


@dataclass
class SuiteResult:
    name: str
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


class SuiteContext:
    """Scenario, seeded probes and lazily built configurations shared by the checks."""

    def __init__(self, scenario: Scenario, seed: int = 0):
        self.scenario = scenario
        self.seed = seed
        self.tol = scenario.tolerances
        self._cfg: Configuration | None = None
        self._probes: list[ScalarField] | None = None

    @property
    def grid(self):
        return self.scenario.grid

    @property
    def cfg(self) -> Configuration:
        if self._cfg is None:
            self._cfg = self.scenario.configuration()
        return self._cfg

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    @property
    def probes(self) -> list[ScalarField]:
        if self._probes is None:
            count = max(self.scenario.config.suites.random_fields, 3)
            self._probes = probe_fields(self.grid, count, self.rng(1))
        return self._probes

    def trivial(self, **star_changes) -> Configuration:
        """The scenario on the identity frame, optionally with a modified star config."""
        cfg = self.cfg
        v = identity_vielbein(self.grid, self.scenario.stencil)
        sc = cfg.star_cfg.with_(vielbein=v, **star_changes)
        return Configuration(cfg.phi, v, cfg.params, sc, cfg.xt_mode)


def probe_fields(grid, count: int, rng: np.random.Generator) -> list[ScalarField]:
    """Real Gaussian-damped fields with a gentle plane-wave modulation."""
    d = grid.dim
    xs = [grid.coordinate(mu) for mu in range(d)]
    out = []
    for _ in range(count):
        center = rng.uniform(-1.0, 1.0, d)
        width = rng.uniform(1.3, 1.8)
        amp = rng.uniform(0.5, 1.5)
        wave = rng.uniform(-0.8, 0.8, d)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        depth = rng.uniform(0.0, 0.3)
        r2 = sum((xs[mu] - center[mu]) ** 2 for mu in range(d))
        arg = sum(wave[mu] * xs[mu] for mu in range(d)) + phase
        out.append(ScalarField(grid, amp * np.exp(-r2 / (2.0 * width ** 2)) * (1.0 + depth * np.sin(arg))))
    return out


# verify --------------------------------------------------------------------

def check_unit_law(ctx: SuiteContext) -> CheckResult:
    c = ctx.cfg.calc
    one = ctx.grid.constant(1.0)
    worst = 0.0
    for f in ctx.probes[: ctx.scenario.config.suites.random_fields]:
        scale = max(field_norm(f), 1e-300)
        worst = max(worst, field_norm(c.star(f, one) - f) / scale, field_norm(c.star(one, f) - f) / scale)
    return _check("unit_law", worst, ctx.tol.unit_law, fields=ctx.scenario.config.suites.random_fields)


def check_coordinate_commutator(ctx: SuiteContext) -> CheckResult:
    triv = ctx.trivial()
    c = triv.calc
    s = triv.star_cfg.effective_scale
    theta = triv.star_cfg.theta.entries
    worst = 0.0
    for mu in range(ctx.grid.dim):
        for nu in range(mu + 1, ctx.grid.dim):
            comm = c.comm(ctx.grid.x(mu), ctx.grid.x(nu))
            worst = max(worst, field_norm(comm - ctx.grid.constant(1j * s * theta[mu, nu])))
    return _check("coordinate_commutator", worst, ctx.tol.coordinate_commutator)


def check_operator_identities(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.cfg
    if cfg.star_cfg.N < 1:
        return _not_applicable("operator_identities", "truncation order 0 keeps a leading operator term the product lacks")
    c = cfg.calc
    f, g = ctx.probes[0], ctx.probes[1]
    fg = f * g
    scale = max(field_norm(c.star(f, g)), field_norm(fg), 1e-300)
    tT, tS, tR = c.total_X_jet("T", f, g), c.total_X_jet("S", f, g), c.total_X_jet("R", f, g)
    defects = {
        "product": field_norm(c.star(f, g) - fg - tT) / scale,
        "commutator": field_norm(c.comm(f, g) - 2.0 * tS) / scale,
        "anticommutator": field_norm(c.anti(f, g) - 2.0 * fg - 2.0 * tR) / scale,
        "t_minus_t": field_norm(tT - c.total_X_jet("T", g, f) - 2.0 * tS) / scale,
        "s_antisymmetry": field_norm(tS + c.total_X_jet("S", g, f)) / scale,
    }
    stencil = field_norm(c.star(f, g) - fg - c.total_X(c.T, f, g)) / scale
    return _check("operator_identities", max(defects.values()), ctx.tol.operator_identities,
                  defects=defects, stencil_on_product=stencil)


def check_reality(ctx: SuiteContext) -> CheckResult:
    c = ctx.cfg.calc
    worst = 0.0
    ps = ctx.probes
    for k in range(min(5, len(ps) - 1)):
        f, g = ps[k], ps[k + 1]
        scale = max(field_norm(f * g), 1e-300)
        worst = max(worst, field_norm(ScalarField(ctx.grid, c.anti(f, g).imag)) / scale,
                    field_norm(ScalarField(ctx.grid, c.comm(f, g).real)) / scale)
    return _check("reality", worst, ctx.tol.reality)


PREPARED_TWIST = TwistBlock(family="sinusoidal", amplitude=0.1, wavenumber=1.0, damping=2.0)


def _prepared_twist(ctx: SuiteContext):
    """Fixed damped sinusoidal twist whose determinant genuinely varies."""
    return build_vielbein(build_twist(PREPARED_TWIST, ctx.grid), ctx.scenario.stencil)


def _trace_defects(star_cfg, f, g) -> tuple[float, float]:
    c = star_cfg.calc
    e = star_cfg.vielbein.det
    fg = c.star(f, g)
    weighted = abs(integrate(e * fg) - integrate(e * f * g)) / max(abs(integrate(e * f * g)), 1e-300)
    unweighted = abs(integrate(fg) - integrate(f * g)) / max(abs(integrate(f * g)), 1e-300)
    return weighted, unweighted


def check_trace_weighted(ctx: SuiteContext) -> CheckResult:
    w, u = _trace_defects(ctx.cfg.star_cfg, ctx.probes[0], ctx.probes[1])
    return _check("trace_weighted", w, ctx.tol.trace_weighted, unweighted=u)


def check_trace_contrast(ctx: SuiteContext) -> CheckResult:
    v = _prepared_twist(ctx)
    sc = ctx.cfg.star_cfg.with_(vielbein=v)
    if sc.effective_scale == 0:
        return _not_applicable("trace_contrast", "commutative mode has no trace defect")
    w, u = _trace_defects(sc, ctx.probes[0], ctx.probes[1])
    return _check("trace_contrast", u / max(w, 1e-300), ctx.tol.trace_contrast, "min", weighted=w, unweighted=u)


def check_xtilde_identities(ctx: SuiteContext) -> CheckResult:
    triv = ctx.trivial()
    c = triv.calc
    s = triv.star_cfg.effective_scale
    phi = ctx.probes[0]
    worst = 0.0
    for mu, xt in enumerate(c.xtilde):
        scale = max(field_norm(xt * phi), 1e-300)
        dphi = triv.d(phi, mu)
        worst = max(worst,
                    field_norm(c.star(xt, phi) - xt * phi - (1j * s) * dphi) / scale,
                    field_norm(c.star(phi, xt) - xt * phi + (1j * s) * dphi) / scale,
                    field_norm(c.anti(xt, phi) - 2.0 * xt * phi) / scale)
    return _check("xtilde_identities", worst, ctx.tol.xtilde_identities)


def check_parity(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.cfg
    a = action_value(cfg)
    b = action_value(parity_map(cfg))
    return _check("parity_action", _rel(abs(b - a), abs(a)), ctx.tol.parity, action=a.real)


def check_oracle(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.cfg
    sc = cfg.star_cfg
    grid = ctx.grid
    npts = ctx.scenario.config.suites.oracle_points
    rng = ctx.rng(2)
    lo, hi = grid.margin, grid.n - grid.margin
    pts = [tuple(int(i) for i in rng.integers(lo, hi, grid.dim)) for _ in range(npts)]
    sel = tuple(np.array(p) for p in zip(*pts))
    f, g = ctx.probes[0], ctx.probes[1]
    main = sc.calc.star(f, g).values[sel]
    ref = oracle.star_direct(sc.theta.entries, [p.values for p in cfg.vielbein.phi_a], f.values, g.values,
                             grid, sc.N, pts, theta_scale=sc.effective_scale)
    agree = float(np.max(np.abs(main - ref.values)) / max(np.max(np.abs(ref.values)), 1e-300))
    # polynomial fixtures on the identity frame, closed forms at the effective Theta
    v = identity_vielbein(grid, ctx.scenario.stencil)
    psc = sc.with_(vielbein=v)
    theta_eff = sc.theta.entries * psc.effective_scale
    xs = [grid.coordinate(mu) for mu in range(grid.dim)]
    mid = [grid.n // 2 + k for k in (-3, 0, 5)]
    ipts = [tuple([m] * grid.dim) for m in mid]
    isel = tuple(np.array(mid) for _ in range(grid.dim))
    fixture = 0.0
    names = []
    if psc.effective_scale != 0:
        for fx in oracle.poly_star_table(theta_eff):
            if psc.N < fx.min_order:
                continue
            fa = ScalarField(grid, fx.f(xs) + 0j)
            ga = ScalarField(grid, fx.g(xs) + 0j)
            want = fx.closed_form(xs)
            scale = max(float(np.max(np.abs(want[grid.interior]))), 1e-300)
            got = psc.calc.star(fa, ga).values
            dref = oracle.star_direct(sc.theta.entries, xs, fa.values, ga.values, grid, psc.N, ipts,
                                      theta_scale=psc.effective_scale)
            fixture = max(fixture, float(np.max(np.abs(got - want)[grid.interior])) / scale,
                          float(np.max(np.abs(dref.values - want[isel]))) / scale)
            names.append(fx.name)
    ok = agree <= ctx.tol.oracle and fixture <= ctx.tol.poly_fixture
    res = _check("oracle_agreement", agree, ctx.tol.oracle, points=npts, fixture_defect=fixture,
                 fixture_tol=ctx.tol.poly_fixture, fixtures=names)
    res.passed = bool(ok)
    return res


# residuals -----------------------------------------------------------------

def check_vacuum(ctx: SuiteContext) -> CheckResult:
    vac = vacuum_of(ctx.cfg)
    e_phi = field_norm(e_phi_residual(vac))
    e_phic = max(field_norm(e_phic_residual(vac, c)) for c in range(ctx.grid.dim))
    return _check("vacuum_residuals", max(e_phi, e_phic), ctx.tol.vacuum, e_phi=e_phi, e_phic=e_phic)


def _commutative_cfg(ctx: SuiteContext) -> Configuration:
    cfg = ctx.trivial(commutative=True, theta_scale=0.0)
    return cfg.with_(params=cfg.params.with_(omega_sq=0.0))


def _rel_interior(main: np.ndarray, ref: np.ndarray, grid, lead: int = 0) -> float:
    sl = (slice(None),) * lead + grid.interior
    scale = max(float(np.max(np.abs(ref[sl]))), float(np.max(np.abs(main[sl]))))
    return _rel(float(np.max(np.abs(main - ref)[sl])), scale)


def check_commutative_residual(ctx: SuiteContext) -> CheckResult:
    cfg = _commutative_cfg(ctx)
    p = cfg.params
    ref = oracle.commutative_residual(cfg.phi.values, p.mass_sq, p.lam, 0.0, ctx.grid).values
    val = _rel_interior(e_phi_residual(cfg).values, ref, ctx.grid)
    return _check("commutative_residual", val, ctx.tol.commutative)


def _random_twisted(ctx: SuiteContext, rng: np.random.Generator) -> Configuration:
    block = TwistBlock(family="sinusoidal", amplitude=float(rng.uniform(0.02, 0.12)),
                       wavenumber=float(rng.uniform(0.5, 1.2)), damping=2.0)
    v = build_vielbein(build_twist(block, ctx.grid), ctx.scenario.stencil)
    phi = probe_fields(ctx.grid, 1, rng)[0] * float(rng.uniform(0.3, 0.8))
    cfg = ctx.cfg
    return Configuration(phi, v, cfg.params, cfg.star_cfg.with_(vielbein=v), cfg.xt_mode)


def check_decomposition(ctx: SuiteContext) -> CheckResult:
    rng = ctx.rng(3)
    worst = 0.0
    n = ctx.scenario.config.suites.random_configs
    for _ in range(n):
        cfg = _random_twisted(ctx, rng)
        e_phi = e_phi_residual(cfg)
        for c in range(ctx.grid.dim):
            mixed = e_mixed_residual(cfg, c)
            carried = cfg.calc.X(c, cfg.phi) * e_phi
            direct = e_phic_residual(cfg, c)
            scale = max(field_norm(mixed), field_norm(carried), field_norm(direct), 1e-300)
            worst = max(worst, field_norm(mixed + carried + direct) / scale)
    return _check("decomposition", worst, ctx.tol.decomposition, configs=n)


# currents ------------------------------------------------------------------

def check_commutative_tensors(ctx: SuiteContext) -> CheckResult:
    cfg = _commutative_cfg(ctx)
    p = cfg.params
    phia = [q.values for q in cfg.vielbein.phi_a]
    theta = cfg.star_cfg.theta.entries
    t_ref = oracle.canonical_emt(cfg.phi.values, phia, p.mass_sq, p.lam, 0.0, ctx.grid, theta).values
    m_ref = oracle.canonical_amt(cfg.phi.values, phia, p.mass_sq, p.lam, 0.0, ctx.grid, theta).values
    e_def = _rel_interior(emt(cfg).stacked(), t_ref, ctx.grid, lead=2)
    a_def = _rel_interior(amt(cfg).stacked(), m_ref, ctx.grid, lead=3)
    return _check("commutative_tensors", max(e_def, a_def), ctx.tol.commutative, emt=e_def, amt=a_def)


def check_simplified(ctx: SuiteContext) -> CheckResult:
    gaps = {}
    for which in ("emt", "amt", "dc"):
        r = simplified_gap(ctx.cfg, which)
        gaps[which] = _rel(r["gap"], r["scale"]) if r["scale"] > 1e-300 else r["gap"]
    return _check("simplified_forms", max(gaps.values()), ctx.tol.simplified, gaps=gaps)


def check_amt_antisymmetry(ctx: SuiteContext) -> CheckResult:
    m = amt(ctx.cfg)
    return _check("amt_antisymmetry", _rel(m.antisymmetry_defect(), m.norm()), ctx.tol.antisymmetry)


def check_emt_assembly(ctx: SuiteContext) -> CheckResult:
    """Simplified EMT against the Noether currents of a translation, assembled term by term."""
    cfg = ctx.cfg
    d = ctx.grid.dim
    t = emt_simplified(cfg)
    inv = cfg.star_cfg.theta.inverse
    worst = 0.0
    for nu in range(d):
        dphi = -1.0 * cfg.dphi[nu]
        dphic = [-1.0 * cfg.dphia[k][nu] for k in range(d)]
        dxt = [ctx.grid.constant(-2.0 * inv[mu, nu]) for mu in range(d)]
        k_cur = K_current(cfg, dphi, ctx.scenario.b_mode)
        j_cur = J_combined(cfg, dphic, ctx.scenario.b_mode)
        r_cur = R_current(cfg, dxt)
        for s in range(d):
            total = k_cur[(s,)] + j_cur[(s,)] + r_cur[(s,)]
            if s == nu:
                total = total + cfg.density
            worst = max(worst, field_norm(total - t[(s, nu)]))
    return _check("emt_assembly", _rel(worst, t.norm()), ctx.tol.assembly)


def check_j_routes(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.cfg
    dphic = ctx.probes[2:2 + ctx.grid.dim] if len(ctx.probes) >= 2 + ctx.grid.dim else ctx.probes[: ctx.grid.dim]
    a = divergence(J_current(cfg, dphic, "combined", ctx.scenario.b_mode))[()]
    b = divergence(J_current(cfg, dphic, "pieces"))[()]
    val = _rel(field_norm(a - b), max(field_norm(a), field_norm(b)))
    return _check("j_routes", val, ctx.tol.j_routes, omega_sq=cfg.params.omega_sq)


# conserve ------------------------------------------------------------------

def check_bookkeeping(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.cfg
    d = ctx.grid.dim
    eps = ctx.tol.bookkeeping_eps
    specs = [VariationSpec("translation", (nu,), eps) for nu in range(d)]
    specs += [VariationSpec("rotation", (nu, rho), eps) for nu in range(d) for rho in range(nu + 1, d)]
    specs.append(VariationSpec("parity", eps=eps))
    results = {}
    for spec in specs:
        r = noether_bookkeeping(cfg, spec)
        results[f"{spec.kind}{''.join(map(str, spec.direction)) if spec.kind != 'parity' else ''}"] = r.to_dict()
    worst = max(r["defect"] for r in results.values())
    return _check("noether_bookkeeping", worst, ctx.tol.bookkeeping, variations=results)


def _excess(ctx: SuiteContext, kind: str) -> CheckResult:
    cfg = ctx.cfg
    name = f"nonconservation_{kind}"
    if cfg.params.omega_sq == 0:
        return _not_applicable(name, "Omega^2 = 0: no harmonic term to break conservation")
    if not np.any(cfg.phi.values):
        return _not_applicable(name, "phi = 0: the harmonic term vanishes with the field")
    on = conservation_report(cfg).currents[kind]
    off = conservation_report(cfg.with_(params=cfg.params.with_(omega_sq=0.0))).currents[kind]
    total_on = sum(on.compensated.values())
    total_off = sum(off.compensated.values())
    ratio = _rel(total_on, total_off) if total_off > 0 else float("inf")
    harmonic = on.breakdown["harmonic"]["compensated"]
    attributed = harmonic >= 0.5 * (total_on - total_off)
    res = _check(name, ratio, ctx.tol.nonconservation_ratio, "min", divergence_omega=total_on,
                 divergence_floor=total_off, harmonic=harmonic, attributed=bool(attributed),
                 breakdown={k: v["compensated"] for k, v in on.breakdown.items()})
    res.passed = bool(res.passed and attributed)
    return res


def check_nonconservation_emt(ctx: SuiteContext) -> CheckResult:
    return _excess(ctx, "emt")


def check_nonconservation_amt(ctx: SuiteContext) -> CheckResult:
    return _excess(ctx, "amt")


# converge ------------------------------------------------------------------

def convergence_fields(ctx: SuiteContext) -> list[ScalarField]:
    """The scenario field and two copies shifted by one unit of length along the first two axes.

    Deriving the probes from the scenario field makes a vacuum scenario give
    exact rows; the shifts keep the three fields distinct so no order of the
    associativity defect cancels by symmetry.
    """
    phi = ctx.cfg.phi
    k = max(1, int(round(1.0 / ctx.grid.spacing)))
    return [phi, ScalarField(ctx.grid, np.roll(phi.values, k, axis=0)),
            ScalarField(ctx.grid, np.roll(phi.values, -k, axis=1))]


def convergence_checks(ctx: SuiteContext) -> list[CheckResult]:
    suites = ctx.scenario.config.suites
    scales = list(suites.scales)
    f, g, h = convergence_fields(ctx)
    base = ctx.cfg.star_cfg
    ref = max(field_norm(f), 1e-300) * max(field_norm(g), 1e-300) * max(field_norm(h), 1.0)
    out = []
    for n in suites.orders:
        cfg = base.with_(N=n)
        lref = max(field_norm(cfg.calc.X(0, f)), 1e-300) * max(field_norm(g), 1e-300)
        rows = {
            "associativity": scaling_row("associativity", cfg, lambda c: associativity_defect(c, f, g, h), ref,
                                         scales, ctx.tol.exact_floor),
            "leibniz": scaling_row("leibniz", cfg, lambda c: leibniz_defect(c, f, g), lref, scales, ctx.tol.exact_floor),
        }
        for name, row in rows.items():
            label = f"{name}_N{n}"
            if row.exact:
                out.append(CheckResult(label, 0.0, ctx.tol.slope_window, True, "max", True, {"row": row.to_dict(), "exact": True}))
            elif row.slope is None:
                out.append(CheckResult(label, float("nan"), None, True, "max", False,
                                       {"row": row.to_dict(), "reason": "single scale: table only"}))
            else:
                out.append(_check(label, abs(row.slope - (n + 1)), ctx.tol.slope_window, slope=row.slope,
                                  expected=n + 1, row=row.to_dict()))
    return out


CHECKS: dict[str, list[tuple[str, Callable[[SuiteContext], CheckResult]]]] = {
    "verify": [
        ("unit_law", check_unit_law),
        ("coordinate_commutator", check_coordinate_commutator),
        ("operator_identities", check_operator_identities),
        ("reality", check_reality),
        ("trace_weighted", check_trace_weighted),
        ("trace_contrast", check_trace_contrast),
        ("xtilde_identities", check_xtilde_identities),
        ("parity_action", check_parity),
        ("oracle_agreement", check_oracle),
    ],
    "residuals": [
        ("vacuum_residuals", check_vacuum),
        ("commutative_residual", check_commutative_residual),
        ("decomposition", check_decomposition),
    ],
    "currents": [
        ("commutative_tensors", check_commutative_tensors),
        ("simplified_forms", check_simplified),
        ("amt_antisymmetry", check_amt_antisymmetry),
        ("emt_assembly", check_emt_assembly),
        ("j_routes", check_j_routes),
    ],
    "conserve": [
        ("noether_bookkeeping", check_bookkeeping),
        ("nonconservation_emt", check_nonconservation_emt),
        ("nonconservation_amt", check_nonconservation_amt),
    ],
}


def selected(ctx: SuiteContext, name: str) -> bool:
    s = ctx.scenario.config.suites
    if name in s.skip:
        return False
    return s.checks is None or name in s.checks


def run_suite(name: str, ctx: SuiteContext) -> SuiteResult:
    if name == "converge":
        checks = [c for c in convergence_checks(ctx) if selected(ctx, "convergence")]
        return SuiteResult(name, checks)
    if name not in CHECKS:
        raise ValueError(f"unknown suite {name!r}")
    return SuiteResult(name, [fn(ctx) for key, fn in CHECKS[name] if selected(ctx, key)])


def all_check_names() -> list[str]:
    return [k for suite in CHECKS.values() for k, _ in suite] + ["convergence"]


def conservation_summary(ctx: SuiteContext) -> dict:
    """Full per-piece divergence report for the scenario (JSON-safe)."""
    return _clean(conservation_report(ctx.cfg).to_dict())
