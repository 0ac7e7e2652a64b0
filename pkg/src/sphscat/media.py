"""Materials, layered scatterer models, derived wave quantities and presets.

A scatterer is an unbounded exterior fluid enclosing M solid shells with
fluid layers implicitly filling the gaps between consecutive shells.  The
innermost boundary carries one of four conditions:

    NNBC  full acoustic-structure coupling, innermost fluid present
    SHBC  rigid (sound-hard) innermost surface, no innermost fluid
    SSBC  pressure-release (sound-soft) inside of the innermost shell
    ESBC  innermost shell is solid all the way to the origin

All quantities are SI.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

__all__ = [
    "BoundaryCondition", "FluidMaterial", "SolidMaterial", "SolidShell",
    "ScattererModel", "ModelError", "InvalidSpeeds", "wave_speeds",
    "elastic_from_speeds", "frequency_bound", "preset", "preset_names",
    "model_to_json", "model_from_json",
]


class ModelError(ValueError):
    """Inconsistent scatterer description."""


class InvalidSpeeds(ValueError):
    """Wave-speed pair outside the range of valid elastic constants."""


class BoundaryCondition(str, enum.Enum):
    NNBC = "NNBC"
    SHBC = "SHBC"
    SSBC = "SSBC"
    ESBC = "ESBC"


@dataclass(frozen=True)
class FluidMaterial:
    """Ideal compressible fluid: density (kg/m^3) and sound speed (m/s)."""

    density: float
    sound_speed: float

    def __post_init__(self):
        if self.density <= 0.0 or self.sound_speed <= 0.0:
            raise ModelError("fluid density and sound speed must be positive")

    def wavenumber(self, omega: float) -> float:
        return omega / self.sound_speed


@dataclass(frozen=True)
class SolidMaterial:
    """Isotropic linear-elastic solid given by density, E and nu."""

    density: float
    youngs_modulus: float
    poisson_ratio: float

    def __post_init__(self):
        if self.density <= 0.0 or self.youngs_modulus <= 0.0:
            raise ModelError("solid density and Young's modulus must be positive")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise ModelError("Poisson's ratio must lie in (-1, 0.5)")

    @property
    def bulk_modulus(self) -> float:
        return self.youngs_modulus / (3.0 * (1.0 - 2.0 * self.poisson_ratio))

    @property
    def shear_modulus(self) -> float:
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))


def wave_speeds(mat: SolidMaterial) -> tuple[float, float]:
    """Longitudinal and transverse wave speeds (c_1, c_2) of a solid.

    c_1 = sqrt((3K + 4G) / (3 rho)), c_2 = sqrt(G / rho).
    """
    k, g = mat.bulk_modulus, mat.shear_modulus
    c1 = math.sqrt((3.0 * k + 4.0 * g) / (3.0 * mat.density))
    c2 = math.sqrt(g / mat.density)
    return c1, c2


def elastic_from_speeds(c1: float, c2: float, density: float) -> SolidMaterial:
    """Recover (E, nu) from the wave-speed pair.

    E = rho c2^2 (3 c1^2 - 4 c2^2) / (c1^2 - c2^2),
    nu = (c1^2 - 2 c2^2) / (2 (c1^2 - c2^2)).

    Raises:
        InvalidSpeeds: unless c1 > (2/sqrt(3)) c2 > 0.
    """
    if not (c2 > 0.0 and c1 > 2.0 / math.sqrt(3.0) * c2):
        raise InvalidSpeeds(
            f"require c1 > 2/sqrt(3) * c2 > 0, got c1={c1}, c2={c2}")
    d = c1 * c1 - c2 * c2
    e = density * c2 * c2 * (3.0 * c1 * c1 - 4.0 * c2 * c2) / d
    nu = 0.5 * (c1 * c1 - 2.0 * c2 * c2) / d
    return SolidMaterial(density=density, youngs_modulus=e, poisson_ratio=nu)


@dataclass(frozen=True)
class SolidShell:
    """One solid shell; inner_radius None means solid down to the origin."""

    outer_radius: float
    inner_radius: float | None
    material: SolidMaterial

    def __post_init__(self):
        if self.outer_radius <= 0.0:
            raise ModelError("outer radius must be positive")
        if self.inner_radius is not None:
            if not 0.0 < self.inner_radius < self.outer_radius:
                raise ModelError("need 0 < inner radius < outer radius")


@dataclass(frozen=True)
class ScattererModel:
    """Full layer stack plus the innermost boundary condition.

    ``interlayers[i]`` is the fluid between shells i+1 and i+2 (outward-in
    numbering); its extent is implied by the adjacent shell radii.  ``core``
    is the innermost fluid and is present exactly for NNBC.
    """

    exterior: FluidMaterial
    shells: tuple[SolidShell, ...]
    interlayers: tuple[FluidMaterial, ...] = ()
    core: FluidMaterial | None = None
    condition: BoundaryCondition = BoundaryCondition.NNBC
    description: str = ""

    def __post_init__(self):
        bc = BoundaryCondition(self.condition)
        object.__setattr__(self, "condition", bc)
        object.__setattr__(self, "shells", tuple(self.shells))
        object.__setattr__(self, "interlayers", tuple(self.interlayers))
        if not self.shells:
            raise ModelError("at least one solid shell is required")
        if len(self.interlayers) != len(self.shells) - 1:
            raise ModelError("need exactly one interlayer fluid per shell gap")
        if bc is BoundaryCondition.NNBC:
            if self.core is None:
                raise ModelError("NNBC requires an innermost fluid")
        elif self.core is not None:
            raise ModelError(f"{bc.value} forbids an innermost fluid")
        for i, shell in enumerate(self.shells):
            last = i == len(self.shells) - 1
            if shell.inner_radius is None and not (
                    last and bc is BoundaryCondition.ESBC):
                raise ModelError("only the innermost shell under ESBC may "
                                 "extend to the origin")
            if last and bc is BoundaryCondition.ESBC and shell.inner_radius is not None:
                raise ModelError("ESBC requires the innermost shell to reach "
                                 "the origin (inner_radius=None)")
        radii = []
        for shell in self.shells:
            radii.append(shell.outer_radius)
            if shell.inner_radius is not None:
                radii.append(shell.inner_radius)
        # Strictly decreasing outward-in; a zero-thickness implicit fluid
        # (touching shells) is not representable by the global matrix here.
        for a, b in zip(radii, radii[1:]):
            if not a > b:
                raise ModelError(f"radii must strictly decrease outward-in, "
                                 f"got {a} before {b}")

    # -- convenience accessors -------------------------------------------

    @property
    def n_shells(self) -> int:
        return len(self.shells)

    @property
    def outer_radius(self) -> float:
        return self.shells[0].outer_radius

    def fluid(self, m: int) -> FluidMaterial:
        """Fluid domain m: 1 = exterior, 2..M between shells, M+1 = core."""
        if m == 1:
            return self.exterior
        if 2 <= m <= self.n_shells:
            return self.interlayers[m - 2]
        if m == self.n_shells + 1 and self.core is not None:
            return self.core
        raise IndexError(f"no fluid domain {m}")

    def fluid_indices(self) -> list[int]:
        idx = [1] + list(range(2, self.n_shells + 1))
        if self.core is not None:
            idx.append(self.n_shells + 1)
        return idx

    def canonical_dict(self) -> dict:
        layers: list[dict] = [_fluid_dict(self.exterior)]
        for i, shell in enumerate(self.shells):
            layers.append(_shell_dict(shell))
            if i < len(self.interlayers):
                layers.append(_fluid_dict(self.interlayers[i]))
        if self.core is not None:
            layers.append(_fluid_dict(self.core))
        return {
            "layers": layers,
            "innermost_condition": self.condition.value,
            "description": self.description,
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def frequency_bound(model: ScattererModel) -> float:
    """Empirical largest reliable frequency (Hz) in double precision.

    The bound is 100 / C with C = (R_{0,1}/c_{f,1})^{3/2} / sqrt(Y) and Y
    the smallest argument scale fed to the Bessel functions of the second
    kind.  For ESBC the inner-radius term of the innermost shell does not
    exist and is omitted.
    """
    y = math.inf
    for m, shell in enumerate(model.shells, start=1):
        c1, c2 = wave_speeds(shell.material)
        if shell.inner_radius is not None:
            y = min(y, shell.inner_radius / max(c1, c2))
        y = min(y, shell.outer_radius / model.fluid(m).sound_speed)
    c = (model.outer_radius / model.exterior.sound_speed) ** 1.5 / math.sqrt(y)
    return 100.0 / c


# ---------------------------------------------------------------------------
# JSON model files
# ---------------------------------------------------------------------------

_FLUID_FIELDS = {"type", "density", "sound_speed"}
_SOLID_FIELDS = {"type", "outer_radius", "inner_radius", "density",
                 "youngs_modulus", "poisson_ratio",
                 "longitudinal_speed", "transverse_speed"}
_TOP_FIELDS = {"layers", "innermost_condition", "description"}


def _fluid_dict(f: FluidMaterial) -> dict:
    return {"type": "fluid", "density": f.density, "sound_speed": f.sound_speed}


def _shell_dict(s: SolidShell) -> dict:
    return {
        "type": "solid",
        "outer_radius": s.outer_radius,
        "inner_radius": s.inner_radius,
        "density": s.material.density,
        "youngs_modulus": s.material.youngs_modulus,
        "poisson_ratio": s.material.poisson_ratio,
    }


def _parse_fluid(d: dict) -> FluidMaterial:
    unknown = set(d) - _FLUID_FIELDS
    if unknown:
        raise ModelError(f"unknown fluid fields: {sorted(unknown)}")
    return FluidMaterial(density=float(d["density"]),
                         sound_speed=float(d["sound_speed"]))


def _parse_solid(d: dict) -> SolidShell:
    unknown = set(d) - _SOLID_FIELDS
    if unknown:
        raise ModelError(f"unknown solid fields: {sorted(unknown)}")
    by_moduli = "youngs_modulus" in d or "poisson_ratio" in d
    by_speeds = "longitudinal_speed" in d or "transverse_speed" in d
    if by_moduli and by_speeds:
        raise ModelError("give either (youngs_modulus, poisson_ratio) or "
                         "(longitudinal_speed, transverse_speed), not both")
    if not by_moduli and not by_speeds:
        raise ModelError("solid layer needs elastic moduli or wave speeds")
    if by_speeds:
        mat = elastic_from_speeds(float(d["longitudinal_speed"]),
                                  float(d["transverse_speed"]),
                                  float(d["density"]))
    else:
        mat = SolidMaterial(density=float(d["density"]),
                            youngs_modulus=float(d["youngs_modulus"]),
                            poisson_ratio=float(d["poisson_ratio"]))
    inner = d.get("inner_radius")
    return SolidShell(outer_radius=float(d["outer_radius"]),
                      inner_radius=None if inner is None else float(inner),
                      material=mat)


def model_from_json(text: str) -> ScattererModel:
    """Parse a model document; unknown fields are rejected."""
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    unknown = set(doc) - _TOP_FIELDS
    if unknown:
        raise ModelError(f"unknown model fields: {sorted(unknown)}")
    try:
        bc = BoundaryCondition(doc["innermost_condition"])
    except (KeyError, ValueError) as exc:
        raise ModelError(f"bad innermost_condition: {exc}") from exc
    layers = doc.get("layers")
    if not isinstance(layers, list) or not layers:
        raise ModelError("layers must be a non-empty list")

    parsed = []
    for entry in layers:
        kind = entry.get("type")
        if kind == "fluid":
            parsed.append(_parse_fluid(entry))
        elif kind == "solid":
            parsed.append(_parse_solid(entry))
        else:
            raise ModelError(f"layer type must be 'fluid' or 'solid', got {kind!r}")
    if not isinstance(parsed[0], FluidMaterial):
        raise ModelError("the first layer must be the unbounded exterior fluid")

    exterior = parsed[0]
    shells: list[SolidShell] = []
    interlayers: list[FluidMaterial] = []
    core: FluidMaterial | None = None
    expect_solid = True
    for entry in parsed[1:]:
        if isinstance(entry, SolidShell):
            if not expect_solid:
                raise ModelError("layers must alternate fluid/solid")
            shells.append(entry)
            expect_solid = False
        else:
            if expect_solid:
                raise ModelError("layers must alternate fluid/solid")
            interlayers.append(entry)
            expect_solid = True
    if interlayers and len(interlayers) == len(shells):
        # trailing fluid after the last shell is the core
        core = interlayers.pop()
    return ScattererModel(exterior=exterior, shells=tuple(shells),
                          interlayers=tuple(interlayers), core=core,
                          condition=bc, description=doc.get("description", ""))


def model_to_json(model: ScattererModel, indent: int | None = 2) -> str:
    return json.dumps(model.canonical_dict(), indent=indent)


# ---------------------------------------------------------------------------
# Benchmark presets
# ---------------------------------------------------------------------------

WATER = FluidMaterial(density=1000.0, sound_speed=1500.0)
AIR = FluidMaterial(density=1.2, sound_speed=340.0)
STEEL = SolidMaterial(density=7850.0, youngs_modulus=2.10e11, poisson_ratio=0.3)

# Shell radii (outer, inner) of the S-family benchmark shells.
_S_RADII = {"s1": (1.0, 0.95), "s3": (3.0, 2.98), "s5": (5.0, 4.992)}
_S_FILL = {"s1": AIR, "s3": AIR, "s5": WATER}


def _apply_bc(exterior, shells, interlayers, core, bc, description):
    bc = BoundaryCondition(bc)
    shells = list(shells)
    if bc is not BoundaryCondition.NNBC:
        core = None
    if bc is BoundaryCondition.ESBC:
        last = shells[-1]
        shells[-1] = SolidShell(outer_radius=last.outer_radius,
                                inner_radius=None, material=last.material)
    return ScattererModel(exterior=exterior, shells=tuple(shells),
                          interlayers=tuple(interlayers), core=core,
                          condition=bc, description=description)


def _s_family(names: tuple[str, ...], bc) -> ScattererModel:
    shells = [SolidShell(*_S_RADII[n], material=STEEL) for n in names]
    interlayers = [_S_FILL[n] for n in names[:-1]]
    core = _S_FILL[names[-1]]
    label = "".join(n[1] for n in names)
    return _apply_bc(WATER, shells, interlayers, core, bc,
                     f"S{label} benchmark")


def chang(bc="SSBC") -> ScattererModel:
    """Single steel-like shell in water, sound-soft by default."""
    solid = SolidMaterial(density=7800.0, youngs_modulus=2.0e11,
                          poisson_ratio=0.3)
    fluid = FluidMaterial(density=1000.0, sound_speed=1460.0)
    shell = SolidShell(outer_radius=1.005, inner_radius=0.995, material=solid)
    return _apply_bc(fluid, [shell], [], fluid, bc, "Chang benchmark")


def ihlenburg(bc="SSBC") -> ScattererModel:
    solid = SolidMaterial(density=7669.0, youngs_modulus=2.07e11,
                          poisson_ratio=0.3)
    fluid = FluidMaterial(density=1000.0, sound_speed=1524.0)
    shell = SolidShell(outer_radius=5.075, inner_radius=4.925, material=solid)
    return _apply_bc(fluid, [shell], [], fluid, bc, "Ihlenburg benchmark")


def fender(bc="NNBC") -> ScattererModel:
    """Air-filled aluminium-like shell in water (speeds-given material)."""
    solid = elastic_from_speeds(6412.0, 3043.0, 2700.0)
    water = FluidMaterial(density=1026.0, sound_speed=1500.0)
    air = FluidMaterial(density=1.21, sound_speed=343.0)
    shell = SolidShell(outer_radius=1.0, inner_radius=0.95, material=solid)
    return _apply_bc(water, [shell], [], air, bc, "Fender benchmark")


def s1(bc="NNBC") -> ScattererModel:
    return _s_family(("s1",), bc)


def s3(bc="NNBC") -> ScattererModel:
    return _s_family(("s3",), bc)


def s5(bc="NNBC") -> ScattererModel:
    return _s_family(("s5",), bc)


def s13(bc="NNBC") -> ScattererModel:
    return _s_family(("s3", "s1"), bc)


def s15(bc="NNBC") -> ScattererModel:
    return _s_family(("s5", "s1"), bc)


def s35(bc="NNBC") -> ScattererModel:
    return _s_family(("s5", "s3"), bc)


def s135(bc="NNBC") -> ScattererModel:
    return _s_family(("s5", "s3", "s1"), bc)


_PRESETS = {
    "chang": chang, "ihlenburg": ihlenburg, "fender": fender,
    "s1": s1, "s3": s3, "s5": s5, "s13": s13, "s15": s15, "s35": s35,
    "s135": s135,
}

# Plane-wave travel direction along the symmetry axis used by each source
# paper: +x3 everywhere except Fender, which sends the wave along -x3.
PRESET_WAVE_SIGN = {name: +1.0 for name in _PRESETS}
PRESET_WAVE_SIGN["fender"] = -1.0


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str, bc: str | None = None) -> ScattererModel:
    """Build a named benchmark model, optionally overriding its condition."""
    try:
        builder = _PRESETS[name.lower()]
    except KeyError:
        raise ModelError(f"unknown preset {name!r}; "
                         f"choose from {preset_names()}") from None
    return builder(bc) if bc is not None else builder()
