"""Per-mode global systems H_n C_n = D_n and their preconditioned solves.

For M shells under full coupling the mode-n system has 6M unknowns
(4M for n = 0, where the B coefficients drop out): the exterior Hankel
coefficient, two or four elastic coefficients per shell, two fluid
coefficients per interlayer and one for the core.  The innermost boundary
condition removes trailing rows and columns:

    SHBC  last five rows/columns for n > 0 (three for n = 0)
    SSBC  last row/column
    ESBC  the three rows at the absent inner radius and the columns of the
          second-kind elastic coefficients and the core coefficient

Rows and columns are laid out directly in reduced form; the layout tuple
maps matrix columns to coefficient identities.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from . import specfun
from .incident import IncidentField, PlaneWave, point_source_coeffs
from .media import BoundaryCondition, ScattererModel, frequency_bound, wave_speeds

_I_POW = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)  # i**n cyclic


class SingularSystem(RuntimeError):
    """Modal matrix is singular (eigenfrequency hit)."""

    def __init__(self, n: int, omega: float, detail: str = ""):
        self.n = n
        self.omega = omega
        super().__init__(f"singular modal system at n={n}, omega={omega}"
                         + (f": {detail}" if detail else ""))


class ModelMismatch(ValueError):
    """Model layout inconsistent with the requested assembly."""


class OverflowTripped(RuntimeError):
    """A required second-kind Bessel value exceeded the overflow guard."""

    def __init__(self, n: int):
        self.n = n
        super().__init__(f"overflow guard tripped at mode {n}")


# ---------------------------------------------------------------------------
# Radial S/T functions
# ---------------------------------------------------------------------------

class SRow(NamedTuple):
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    s4: np.ndarray
    s5: np.ndarray
    s6: np.ndarray
    s7: np.ndarray
    s8: np.ndarray
    s9: np.ndarray


class TRow(NamedTuple):
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    t4: np.ndarray
    t5: np.ndarray
    t6: np.ndarray
    t7: np.ndarray
    t8: np.ndarray
    t9: np.ndarray


def s_functions(n: int, z, zn, znp1, beta) -> SRow:
    """S_{1..9,n} from Z_n, Z_{n+1} at argument z; beta = (b/a)^2 / 2."""
    zz = z * z
    s1 = n * zn - z * znp1
    s2 = zn
    s3 = (n * n - n - zz) * zn + 2.0 * z * znp1
    s4 = (n - 1) * zn - z * znp1
    s5 = (n * n - n - beta * zz) * zn + 2.0 * z * znp1
    s6 = (n - beta * zz + zz) * zn - z * znp1
    s7 = s4
    s8 = (n**3 - 3 * n * n + 2 * n - n * beta * zz + 2.0 * zz) * zn \
        + (-n * n - n - 6 + beta * zz) * z * znp1
    s9 = (n * n - 3 * n + 2 - zz) * zn + 4.0 * z * znp1
    return SRow(s1, s2, s3, s4, s5, s6, s7, s8, s9)


def t_functions(n: int, z, zn, znp1) -> TRow:
    """T_{1..9,n} from Z_n, Z_{n+1} at argument z."""
    zz = z * z
    nn1 = n * (n + 1)
    t1 = -nn1 * zn
    t2 = -(n + 1) * zn + z * znp1
    t3 = -nn1 * ((n - 1) * zn - z * znp1)
    t4 = (zz - n * n + 1) * zn - z * znp1
    t5 = t3
    t6 = -nn1 * zn
    t7 = -(n * n - 1 - 0.5 * zz) * zn - z * znp1
    t8 = nn1 * ((-n * n + 3 * n - 2 + zz) * zn - 4.0 * z * znp1)
    t9 = (-n**3 + 2 * n * n + n - 2 + (0.5 * n - 1.0) * zz) * zn \
        + (n * n + n + 2 - 0.5 * zz) * z * znp1
    return TRow(t1, t2, t3, t4, t5, t6, t7, t8, t9)


@dataclass
class RadialST:
    """All S/T radial factors of one mode at one (xi, eta) pair and kind."""

    n: int
    xi: float
    eta: float
    kind: int
    s: SRow
    t: TRow

    def __getattr__(self, name):
        if name.startswith("s") and name[1:].isdigit():
            return getattr(self.s, name)
        if name.startswith("t") and name[1:].isdigit():
            return getattr(self.t, name)
        raise AttributeError(name)


def radial_st(n: int, xi: float, eta: float, kind: int,
              half_b_over_a_sq: float) -> RadialST:
    """Evaluate S_{j,n}(xi) and T_{j,n}(eta) for one mode and kind.

    kind 1 uses spherical Bessel functions of the first kind, kind 2 of the
    second kind (PoleError propagates for kind 2 at zero argument).
    """
    if kind not in (1, 2):
        raise ValueError("kind must be 1 or 2")
    bkind = specfun.KIND_FIRST if kind == 1 else specfun.KIND_SECOND
    bx = specfun.radial_basis(xi, bkind, n)
    be = specfun.radial_basis(eta, bkind, n)
    s = s_functions(n, xi, bx.values[n], bx.values[n + 1], half_b_over_a_sq)
    t = t_functions(n, eta, be.values[n], be.values[n + 1])
    return RadialST(n=n, xi=xi, eta=eta, kind=kind, s=s, t=t)


# ---------------------------------------------------------------------------
# Growing Bessel tables over a fixed argument vector
# ---------------------------------------------------------------------------

class BesselTable:
    """j_n/y_n rows over a fixed argument vector, grown geometrically.

    ``y_mask`` marks the arguments whose second-kind values are actually
    consumed; only they feed the overflow guard.
    """

    def __init__(self, args: np.ndarray, y_mask: np.ndarray):
        self.args = np.asarray(args, dtype=float)
        self.y_mask = np.asarray(y_mask, dtype=bool)
        self._cap = 0
        self._j = None
        self._y = None
        self.overflow_order: int | None = None

    def ensure(self, n_max: int) -> None:
        rows = n_max + 2
        if rows <= self._cap:
            return
        cap = max(rows, 2 * self._cap, 32)
        self._j = specfun._jn_table(self.args, cap - 1)
        if self.y_mask.any():
            self._y = np.full((cap, self.args.size), -np.inf)
            pos = self.args > 0.0
            self._y[:, pos] = specfun._yn_table(self.args[pos], cap - 1)
            self.overflow_order = specfun._first_overflow_order(
                self._y[:, self.y_mask])
        self._cap = cap

    def j(self, n: int) -> np.ndarray:
        self.ensure(n)
        return self._j[n]

    def y(self, n: int) -> np.ndarray:
        self.ensure(n)
        return self._y[n]

    def usable(self, n: int) -> bool:
        """True while mode n's values (orders n, n+1) stay under the guard."""
        self.ensure(n)
        return self.overflow_order is None or n + 1 < self.overflow_order


# ---------------------------------------------------------------------------
# Modal system assembly
# ---------------------------------------------------------------------------

ColumnLabel = tuple[str, int, int]   # (symbol, domain index, kind)


@dataclass
class ModalSystem:
    n: int
    omega: float
    h: np.ndarray
    d: np.ndarray
    layout: tuple[ColumnLabel, ...]
    scale: np.ndarray | None = None   # preconditioner diagonal (column max)

    @property
    def size(self) -> int:
        return self.h.shape[0]


@dataclass
class ModalSolution:
    n: int
    omega: float
    coefficients: dict[ColumnLabel, complex] = field(default_factory=dict)
    condition_estimate: float = np.nan
    resonance_suspect: bool = False
    overflow_flag: bool = False
    error: str | None = None

    def coeff(self, symbol: str, m: int, i: int) -> complex:
        return self.coefficients.get((symbol, m, i), 0.0 + 0.0j)

    def shell_ab(self, m: int):
        """(A^(1), A^(2), B^(1), B^(2)) of shell m; absent entries are 0."""
        return (self.coeff("A", m, 1), self.coeff("A", m, 2),
                self.coeff("B", m, 1), self.coeff("B", m, 2))

    def fluid_c(self, m: int):
        """(C^(1), C^(2)) of fluid domain m; absent entries are 0."""
        return self.coeff("C", m, 1), self.coeff("C", m, 2)


def layout_columns(model: ScattererModel, n: int) -> tuple[ColumnLabel, ...]:
    """Column-to-coefficient map of the reduced mode-n system."""
    bc = model.condition
    m_count = model.n_shells
    cols: list[ColumnLabel] = [("C", 1, 1)]
    for m in range(1, m_count + 1):
        innermost = m == m_count
        if innermost and bc is BoundaryCondition.SHBC:
            break
        kinds = (1,) if innermost and bc is BoundaryCondition.ESBC else (1, 2)
        cols += [("A", m, i) for i in kinds]
        if n > 0:
            cols += [("B", m, i) for i in kinds]
        if not innermost:
            cols += [("C", m + 1, 1), ("C", m + 1, 2)]
    if bc is BoundaryCondition.NNBC:
        cols.append(("C", m_count + 1, 1))
    return tuple(cols)


class _ShellData(NamedTuple):
    radius0: float
    radius1: float | None
    a: float
    b: float
    beta: float
    shear: float
    rho: float


class FrequencyContext:
    """Shared per-(model, omega) state for assembling every mode."""

    def __init__(self, model: ScattererModel, omega: float):
        if omega <= 0.0:
            raise ValueError("omega must be positive")
        self.model = model
        self.omega = omega
        bc = model.condition
        m_count = model.n_shells

        self.shells: list[_ShellData] = []
        for shell in model.shells:
            c1, c2 = wave_speeds(shell.material)
            mat = shell.material
            beta = 2.0 / 3.0 + mat.bulk_modulus / (2.0 * mat.shear_modulus)
            self.shells.append(_ShellData(
                radius0=shell.outer_radius, radius1=shell.inner_radius,
                a=omega / c1, b=omega / c2, beta=beta,
                shear=mat.shear_modulus, rho=mat.density))

        # Pack every radial argument into one vector; mark which ones feed
        # second-kind evaluations (they drive the overflow guard).
        args: list[float] = []
        y_need: list[bool] = []

        def add(value: float, with_y: bool) -> int:
            args.append(value)
            y_need.append(with_y)
            return len(args) - 1

        self.k_fluid: dict[int, float] = {}
        self.rho_fluid: dict[int, float] = {}
        for mf in model.fluid_indices():
            fl = model.fluid(mf)
            self.k_fluid[mf] = fl.wavenumber(omega)
            self.rho_fluid[mf] = fl.density

        self.shell_args: list[dict[str, int]] = []
        for m, sd in enumerate(self.shells, start=1):
            if m == m_count and bc is BoundaryCondition.SHBC:
                self.shell_args.append({})
                continue
            want_y = not (m == m_count and bc is BoundaryCondition.ESBC)
            entry = {"xi0": add(sd.a * sd.radius0, want_y),
                     "eta0": add(sd.b * sd.radius0, want_y)}
            if sd.radius1 is not None:
                entry["xi1"] = add(sd.a * sd.radius1, want_y)
                entry["eta1"] = add(sd.b * sd.radius1, want_y)
            self.shell_args.append(entry)

        self.fluid_args: dict[tuple[int, float], int] = {}
        k1 = self.k_fluid[1]
        r01 = model.outer_radius
        self.fluid_args[(1, r01)] = add(k1 * r01, True)
        for mf in range(2, m_count + 1):
            km = self.k_fluid[mf]
            r_out = self.shells[mf - 2].radius1
            r_in = self.shells[mf - 1].radius0
            self.fluid_args[(mf, r_out)] = add(km * r_out, True)
            self.fluid_args[(mf, r_in)] = add(km * r_in, True)
        if bc is BoundaryCondition.NNBC:
            mf = m_count + 1
            r_in = self.shells[-1].radius1
            self.fluid_args[(mf, r_in)] = add(self.k_fluid[mf] * r_in, False)

        self.table = BesselTable(np.array(args), np.array(y_need))
        self.layout_cache: dict[bool, tuple[ColumnLabel, ...]] = {}

    # -- helpers -----------------------------------------------------------

    def columns(self, n: int) -> tuple[ColumnLabel, ...]:
        key = n > 0
        if key not in self.layout_cache:
            self.layout_cache[key] = layout_columns(self.model, n)
        return self.layout_cache[key]

    def usable(self, n: int) -> bool:
        return self.table.usable(n)

    def _z_pair(self, idx: int, kind: int, n: int):
        tab = self.table
        if kind == 1:
            return tab.j(n)[idx], tab.j(n + 1)[idx]
        return tab.y(n)[idx], tab.y(n + 1)[idx]

    def _fluid_kinds(self, mf: int) -> tuple[int, ...]:
        if mf == 1 or mf == self.model.n_shells + 1:
            return (1,)
        return (1, 2)

    def _fluid_z(self, mf: int, radius: float, kind: int, n: int):
        """(Z_n, Z_{n+1}) at k_mf * radius; Hankel for the exterior."""
        idx = self.fluid_args[(mf, radius)]
        if mf == 1:
            jn, jn1 = self._z_pair(idx, 1, n)
            yn, yn1 = self._z_pair(idx, 2, n)
            return jn + 1j * yn, jn1 + 1j * yn1
        return self._z_pair(idx, kind, n)

    def assemble_mode(self, n: int, f1: complex, f2: complex) -> ModalSystem:
        model = self.model
        bc = model.condition
        m_count = model.n_shells
        omega2 = self.omega * self.omega
        cols = self.columns(n)
        idx = {lab: j for j, lab in enumerate(cols)}
        size = len(cols)
        h = np.zeros((size, size), dtype=complex)
        d = np.zeros(size, dtype=complex)

        if not self.usable(n):
            raise OverflowTripped(n)

        # Cache S/T rows per (shell, surface, kind) for this mode.
        def st_rows(m: int, surface: int, kind: int):
            sd = self.shells[m - 1]
            tags = ("xi0", "eta0") if surface == 0 else ("xi1", "eta1")
            ixi = self.shell_args[m - 1][tags[0]]
            ieta = self.shell_args[m - 1][tags[1]]
            xi = self.table.args[ixi]
            eta = self.table.args[ieta]
            zx = self._z_pair(ixi, kind, n)
            ze = self._z_pair(ieta, kind, n)
            s = s_functions(n, xi, zx[0], zx[1], sd.beta)
            t = t_functions(n, eta, ze[0], ze[1])
            return s, t

        def shell_kinds(m: int) -> tuple[int, ...]:
            if m == m_count and bc is BoundaryCondition.ESBC:
                return (1,)
            return (1, 2)

        def put_shell(row: int, m: int, surface: int, s_j: int):
            """Shell m's S/T entries of row ``row`` (s_j = 1, 5 or 7)."""
            for kind in shell_kinds(m):
                s, t = st_rows(m, surface, kind)
                h[row, idx[("A", m, kind)]] = s[s_j - 1]
                if n > 0:
                    h[row, idx[("B", m, kind)]] = t[s_j - 1]

        def put_fluid_disp(row: int, mf: int, radius: float):
            rho = self.rho_fluid[mf]
            zeta = self.k_fluid[mf] * radius
            for kind in self._fluid_kinds(mf):
                zn, znp1 = self._fluid_z(mf, radius, kind, n)
                h[row, idx[("C", mf, kind)]] = \
                    -(n * zn - zeta * znp1) / (rho * omega2)

        def put_fluid_pres(row: int, mf: int, radius: float, shear: float):
            for kind in self._fluid_kinds(mf):
                zn, _ = self._fluid_z(mf, radius, kind, n)
                h[row, idx[("C", mf, kind)]] = radius * radius / (2.0 * shear) * zn

        row = 0
        for m in range(1, m_count + 1):
            sd = self.shells[m - 1]
            innermost = m == m_count
            if innermost and bc is BoundaryCondition.SHBC:
                # Single Neumann condition on fluid m at the rigid surface.
                put_fluid_disp(row, m, sd.radius0)
                if m == 1:
                    d[row] = model.outer_radius * f2 / (self.rho_fluid[1] * omega2)
                row += 1
                break

            # displacement coupling at R_{0,m}
            put_fluid_disp(row, m, sd.radius0)
            put_shell(row, m, 0, 1)
            if m == 1:
                d[row] = model.outer_radius * f2 / (self.rho_fluid[1] * omega2)
            row += 1
            # pressure coupling at R_{0,m}
            put_shell(row, m, 0, 5)
            put_fluid_pres(row, m, sd.radius0, sd.shear)
            if m == 1:
                d[row] = -model.outer_radius**2 * f1 / (2.0 * sd.shear)
            row += 1
            # traction-free at R_{0,m}
            if n > 0:
                put_shell(row, m, 0, 7)
                row += 1

            if innermost and bc is BoundaryCondition.ESBC:
                continue

            # traction-free at R_{1,m}
            if n > 0:
                put_shell(row, m, 1, 7)
                row += 1
            # pressure coupling at R_{1,m}
            put_shell(row, m, 1, 5)
            if not (innermost and bc is BoundaryCondition.SSBC):
                put_fluid_pres(row, m + 1, sd.radius1, sd.shear)
            row += 1
            # displacement coupling at R_{1,m}
            if not (innermost and bc is BoundaryCondition.SSBC):
                put_shell(row, m, 1, 1)
                put_fluid_disp(row, m + 1, sd.radius1)
                row += 1

        if row != size:
            raise ModelMismatch(f"assembled {row} rows for {size} columns")
        return ModalSystem(n=n, omega=self.omega, h=h, d=d, layout=cols)


def assemble(model: ScattererModel, omega: float, n: int,
             f1: complex, f2: complex) -> ModalSystem:
    """Build the mode-n global system for forcing coefficients (f1, f2)."""
    return FrequencyContext(model, omega).assemble_mode(n, f1, f2)


# ---------------------------------------------------------------------------
# Preconditioned solve
# ---------------------------------------------------------------------------

_RESONANCE_COND = 1.0 / np.finfo(float).eps


def precondition_solve(system: ModalSystem) -> ModalSolution:
    """Solve H C = D through the column-max diagonal preconditioner.

    Solves (H P^-1)(P C) = D by dense LU with partial pivoting and records
    the 1-norm condition estimate of the scaled matrix.

    Raises:
        SingularSystem: if a column vanishes or the LU solve fails.
    """
    h, dvec = system.h, system.d
    scale = np.max(np.abs(h), axis=0)
    if not np.all(np.isfinite(scale)) or np.any(scale == 0.0):
        raise SingularSystem(system.n, system.omega, "degenerate column scale")
    ht = h / scale
    try:
        cond = np.abs(np.linalg.cond(ht, 1))
        ct = np.linalg.solve(ht, dvec)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(system.n, system.omega, str(exc)) from exc
    if not np.all(np.isfinite(ct)):
        raise SingularSystem(system.n, system.omega, "non-finite solution")
    coeffs = dict(zip(system.layout, ct / scale))
    system.scale = scale
    return ModalSolution(n=system.n, omega=system.omega, coefficients=coeffs,
                         condition_estimate=float(cond),
                         resonance_suspect=bool(cond > _RESONANCE_COND))


# ---------------------------------------------------------------------------
# Modal sweep
# ---------------------------------------------------------------------------

def modal_sweep(model: ScattererModel, incident: IncidentField, omega: float,
                n_max: int | None = None,
                allow_beyond_bound: bool = False) -> Iterator[ModalSolution]:
    """Yield modal solutions for n = 0, 1, 2, ... on demand.

    Stops producing when the overflow guard trips; the last yielded item
    carries ``overflow_flag``.  Per-mode solve failures are yielded as
    solutions with the ``error`` field set so sweeps can continue.
    """
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    bound = frequency_bound(model)
    if omega > 2.0 * np.pi * bound and not allow_beyond_bound:
        warnings.warn(
            f"omega={omega:.6g} exceeds the reliable frequency bound "
            f"(f_max={bound:.6g} Hz); results may terminate prematurely",
            stacklevel=2)

    ctx = FrequencyContext(model, omega)
    forcing = _ForcingProvider(model, incident, ctx)
    n = 0
    while n_max is None or n <= n_max:
        if not ctx.usable(n):
            yield ModalSolution(n=n, omega=omega, overflow_flag=True,
                                error="overflow guard tripped")
            return
        f1, f2 = forcing(n)
        system = ctx.assemble_mode(n, f1, f2)
        try:
            yield precondition_solve(system)
        except SingularSystem as exc:
            yield ModalSolution(n=n, omega=omega, error=str(exc))
        n += 1


class _ForcingProvider:
    """Per-mode incident forcing (F^(1), F^(2)) with shared Bessel tables."""

    def __init__(self, model: ScattererModel, incident: IncidentField,
                 ctx: FrequencyContext):
        self.incident = incident
        self.ctx = ctx
        self.r01 = model.outer_radius
        self.k1 = ctx.k_fluid[1]
        self.p_inc = incident.amplitude_at(ctx.omega)
        self.idx01 = ctx.fluid_args[(1, self.r01)]
        self._cache: dict[int, tuple[complex, complex]] = {}

    def __call__(self, n: int) -> tuple[complex, complex]:
        if n in self._cache:
            return self._cache[n]
        if isinstance(self.incident, PlaneWave):
            jn, jnp1 = self.ctx._z_pair(self.idx01, 1, n)
            zeta = self.k1 * self.r01
            djn = n / zeta * jn - jnp1
            phase = self.p_inc * (2 * n + 1) * _I_POW[n % 4]
            out = (phase * jn, phase * self.k1 * djn)
        else:
            out = point_source_coeffs(n, self.k1, self.r01,
                                      self.incident.source_radius, self.p_inc)
        self._cache[n] = out
        return out
