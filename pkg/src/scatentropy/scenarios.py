"""Scenario configuration: file format, state/T-matrix builders, built-in library.

Scenario files are TOML documents. Top level:

    name = "pure-product-2x2"
    dA = 2
    dB = 2
    mode = "sweep"            # check | predict | sweep | demon | probe

    [state]                   # one of the kinds below
    kind = "product"          # product | diagonal | pure | thermal | explicit

    [t]
    kind = "structured"       # structured | random | kron_a | random_blocked

    [grid]                    # optional
    lambdas = [1e-2, 3e-3, ...]

    [tolerances]              # optional
    kernel_tol = 1e-12
    degen_tol = 1e-9
    commutator_tol = 1e-10

State kinds: product {a_weights, b_weights}, diagonal {weights: dA rows of dB
entries}, pure {amplitudes: [m, mt, re, im] rows}, thermal {a_energies, beta,
b_index, b_energies}, explicit {entries: [row, col, re, im] rows}.

T kinds: structured {elements: [m, mt, mp, mtp, re, im] rows}, random {seed},
kron_a {entries: [row, col, re, im] rows of the A-side Hermitian}, and
random_blocked {seed, a_blocks} for families supported on A-index blocks.
An optional h2_elements key ([row, col, re, im] rows) sets the free
Hermitian part of T2. Hermiticity closure is applied to structured, kron_a
and h2 entries automatically.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, ScatentropyError
from .linalg import kron
from .oracle import DEFAULT_GRID
from .qstate import DEFAULT_DEGEN_TOL, DEFAULT_KERNEL_TOL, BipartiteState
from .smatrix import flat_index, random_blocked_hermitian, random_hermitian, structured_t1

MODES = ("check", "predict", "sweep", "demon", "probe")
WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ProductStateSpec:
    a_weights: tuple[float, ...]
    b_weights: tuple[float, ...]


@dataclass(frozen=True)
class DiagonalStateSpec:
    weights: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class PureStateSpec:
    amplitudes: tuple[tuple[int, int, complex], ...]


@dataclass(frozen=True)
class ThermalStateSpec:
    a_energies: tuple[float, ...]
    beta: float
    b_index: int
    b_energies: tuple[float, ...]


@dataclass(frozen=True)
class ExplicitStateSpec:
    entries: tuple[tuple[int, int, complex], ...]


@dataclass(frozen=True)
class StructuredTSpec:
    elements: tuple[tuple[int, int, int, int, complex], ...]


@dataclass(frozen=True)
class RandomTSpec:
    seed: int


@dataclass(frozen=True)
class KronATSpec:
    entries: tuple[tuple[int, int, complex], ...]


@dataclass(frozen=True)
class RandomBlockedTSpec:
    seed: int
    a_blocks: tuple[tuple[int, ...], ...]


StateSpec = ProductStateSpec | DiagonalStateSpec | PureStateSpec | ThermalStateSpec | ExplicitStateSpec
TSpec = StructuredTSpec | RandomTSpec | KronATSpec | RandomBlockedTSpec


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    d_a: int
    d_b: int
    state: StateSpec
    t: TSpec
    mode: str = "sweep"
    lambdas: tuple[float, ...] = DEFAULT_GRID
    # Smallest coupling the scenario drives adversarially (demon objective);
    # kept above the sweep grid's tail so the perturbative ordering governs
    # the sign while staying clear of eigensolver noise.
    demon_lambda: float = 1e-3
    kernel_tol: float = DEFAULT_KERNEL_TOL
    degen_tol: float = DEFAULT_DEGEN_TOL
    commutator_tol: float = 1e-10
    h2_elements: tuple[tuple[int, int, complex], ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.d_a * self.d_b


def _hermitian_from_entries(dim: int, entries, fieldname: str) -> np.ndarray:
    """Dense Hermitian matrix from [row, col, value] triples with conjugate closure."""
    m = np.zeros((dim, dim), dtype=complex)
    seen: dict[tuple[int, int], complex] = {}

    def put(i, j, v):
        if (i, j) in seen and not np.isclose(seen[(i, j)], v, rtol=1e-12, atol=1e-15):
            raise ConfigError(f"{fieldname}: entry ({i},{j}) assigned twice inconsistently")
        seen[(i, j)] = v
        m[i, j] = v

    for row, col, value in entries:
        if not (0 <= row < dim and 0 <= col < dim):
            raise ConfigError(f"{fieldname}: index ({row},{col}) outside range({dim})")
        value = complex(value)
        if row == col and abs(value.imag) > 1e-15 * max(abs(value), 1.0):
            raise ConfigError(f"{fieldname}: diagonal entry ({row},{row}) must be real")
        put(row, col, value)
        if row != col:
            put(col, row, np.conj(value))
    return m


def build_state(cfg: ScenarioConfig) -> BipartiteState:
    """Materialize the configured incoming density matrix."""
    d_a, d_b, dim = cfg.d_a, cfg.d_b, cfg.dim
    spec = cfg.state
    try:
        if isinstance(spec, ProductStateSpec):
            for name, w, d in (("a_weights", spec.a_weights, d_a), ("b_weights", spec.b_weights, d_b)):
                if len(w) != d:
                    raise ConfigError(f"state.{name} must have {d} entries")
                if any(x < -WEIGHT_SUM_TOL for x in w):
                    raise ConfigError(f"state.{name} has a negative weight")
                if abs(sum(w) - 1.0) > WEIGHT_SUM_TOL:
                    raise ConfigError(f"state.{name} must sum to 1 within 1e-12 (got {sum(w)!r})")
            rho = kron(np.diag(np.asarray(spec.a_weights, dtype=complex)),
                       np.diag(np.asarray(spec.b_weights, dtype=complex)))
        elif isinstance(spec, DiagonalStateSpec):
            rows = spec.weights
            if len(rows) != d_a or any(len(r) != d_b for r in rows):
                raise ConfigError(f"state.weights must be {d_a} rows of {d_b} entries")
            flat = np.asarray([x for r in rows for x in r], dtype=float)
            if np.any(flat < -WEIGHT_SUM_TOL):
                raise ConfigError("state.weights has a negative entry")
            if abs(flat.sum() - 1.0) > WEIGHT_SUM_TOL:
                raise ConfigError(f"state.weights must sum to 1 within 1e-12 (got {flat.sum()!r})")
            rho = np.diag(flat.astype(complex))
        elif isinstance(spec, PureStateSpec):
            vec = np.zeros(dim, dtype=complex)
            seen_amp = set()
            for m, mt, value in spec.amplitudes:
                if not (0 <= m < d_a and 0 <= mt < d_b):
                    raise ConfigError(f"state.amplitudes: index ({m},{mt}) out of range")
                if (m, mt) in seen_amp:
                    raise ConfigError(f"state.amplitudes: index ({m},{mt}) listed twice")
                seen_amp.add((m, mt))
                vec[flat_index(m, mt, d_b)] = complex(value)
            norm = float(np.vdot(vec, vec).real)
            if abs(norm - 1.0) > WEIGHT_SUM_TOL:
                raise ConfigError(f"state.amplitudes must have unit norm within 1e-12 (got {norm!r})")
            rho = np.outer(vec, vec.conj())
        elif isinstance(spec, ThermalStateSpec):
            if len(spec.a_energies) != d_a:
                raise ConfigError(f"state.a_energies must have {d_a} entries")
            if len(spec.b_energies) != d_b:
                raise ConfigError(f"state.b_energies must have {d_b} entries")
            if not 0 <= spec.b_index < d_b:
                raise ConfigError(f"state.b_index {spec.b_index} outside range({d_b})")
            w = np.exp(-spec.beta * np.asarray(spec.a_energies, dtype=float))
            w /= w.sum()
            b_proj = np.zeros((d_b, d_b), dtype=complex)
            b_proj[spec.b_index, spec.b_index] = 1.0
            rho = kron(np.diag(w.astype(complex)), b_proj)
        elif isinstance(spec, ExplicitStateSpec):
            rho = np.zeros((dim, dim), dtype=complex)
            seen_entry = set()
            for row, col, value in spec.entries:
                if not (0 <= row < dim and 0 <= col < dim):
                    raise ConfigError(f"state.entries: index ({row},{col}) outside range({dim})")
                if (row, col) in seen_entry:
                    raise ConfigError(f"state.entries: index ({row},{col}) listed twice")
                seen_entry.add((row, col))
                rho[row, col] = complex(value)
        else:
            raise ConfigError(f"unknown state spec {type(spec).__name__}")
        return BipartiteState(rho=rho, d_a=d_a, d_b=d_b)
    except ConfigError:
        raise
    except ScatentropyError as exc:
        raise ConfigError(f"state does not define a valid density matrix: {exc}") from exc


def build_t1(cfg: ScenarioConfig) -> np.ndarray:
    """Materialize the configured first-order T-matrix."""
    spec = cfg.t
    try:
        if isinstance(spec, StructuredTSpec):
            return structured_t1(cfg.d_a, cfg.d_b, spec.elements)
        if isinstance(spec, RandomTSpec):
            return random_hermitian(cfg.dim, spec.seed)
        if isinstance(spec, KronATSpec):
            h_a = _hermitian_from_entries(cfg.d_a, spec.entries, "t.entries")
            return kron(h_a, np.eye(cfg.d_b, dtype=complex))
        if isinstance(spec, RandomBlockedTSpec):
            return random_blocked_hermitian(cfg.d_a, cfg.d_b, spec.a_blocks, spec.seed)
    except ConfigError:
        raise
    except ScatentropyError as exc:
        raise ConfigError(f"t: {exc}") from exc
    raise ConfigError(f"unknown t spec {type(spec).__name__}")


def build_h2(cfg: ScenarioConfig) -> np.ndarray | None:
    """Free Hermitian part of T2, or None when unset."""
    if not cfg.h2_elements:
        return None
    return _hermitian_from_entries(cfg.dim, cfg.h2_elements, "t.h2_elements")


def t_sampler(cfg: ScenarioConfig, seed: int):
    """Per-sample T1 family used by the guarantee probe.

    Random kinds resample their own family with derived seeds; deterministic
    kinds fall back to the full Gaussian ensemble. Sample k uses seed+k.
    """
    spec = cfg.t
    if isinstance(spec, RandomBlockedTSpec):
        return lambda k: random_blocked_hermitian(cfg.d_a, cfg.d_b, spec.a_blocks, seed + k)
    return lambda k: random_hermitian(cfg.dim, seed + k)


# ---------------------------------------------------------------- parsing

def _req(table: dict, key: str, kind, ctx: str):
    if key not in table:
        raise ConfigError(f"{ctx}: missing required key '{key}'")
    value = table[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{ctx}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _complex_rows(rows, width: int, ctx: str):
    """Rows of `width` indices followed by re, im."""
    out = []
    for k, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != width + 2:
            raise ConfigError(f"{ctx}[{k}]: expected {width + 2} numbers, got {row!r}")
        idx = []
        for v in row[:width]:
            if not isinstance(v, int):
                raise ConfigError(f"{ctx}[{k}]: index {v!r} is not an integer")
            idx.append(v)
        re, im = row[width], row[width + 1]
        if not all(isinstance(v, (int, float)) for v in (re, im)):
            raise ConfigError(f"{ctx}[{k}]: re/im must be numbers")
        out.append((*idx, complex(float(re), float(im))))
    return tuple(out)


def _parse_state(table: dict) -> StateSpec:
    kind = _req(table, "kind", str, "state")
    if kind == "product":
        return ProductStateSpec(
            a_weights=tuple(float(x) for x in _req(table, "a_weights", list, "state")),
            b_weights=tuple(float(x) for x in _req(table, "b_weights", list, "state")),
        )
    if kind == "diagonal":
        rows = _req(table, "weights", list, "state")
        return DiagonalStateSpec(weights=tuple(tuple(float(x) for x in r) for r in rows))
    if kind == "pure":
        return PureStateSpec(amplitudes=_complex_rows(_req(table, "amplitudes", list, "state"), 2, "state.amplitudes"))
    if kind == "thermal":
        return ThermalStateSpec(
            a_energies=tuple(float(x) for x in _req(table, "a_energies", list, "state")),
            beta=_req(table, "beta", float, "state"),
            b_index=_req(table, "b_index", int, "state"),
            b_energies=tuple(float(x) for x in _req(table, "b_energies", list, "state")),
        )
    if kind == "explicit":
        return ExplicitStateSpec(entries=_complex_rows(_req(table, "entries", list, "state"), 2, "state.entries"))
    raise ConfigError(f"state.kind: unknown kind '{kind}'")


def _parse_t(table: dict) -> TSpec:
    kind = _req(table, "kind", str, "t")
    if kind == "structured":
        return StructuredTSpec(elements=_complex_rows(_req(table, "elements", list, "t"), 4, "t.elements"))
    if kind == "random":
        return RandomTSpec(seed=_req(table, "seed", int, "t"))
    if kind == "kron_a":
        return KronATSpec(entries=_complex_rows(_req(table, "entries", list, "t"), 2, "t.entries"))
    if kind == "random_blocked":
        blocks = _req(table, "a_blocks", list, "t")
        return RandomBlockedTSpec(
            seed=_req(table, "seed", int, "t"),
            a_blocks=tuple(tuple(int(i) for i in blk) for blk in blocks),
        )
    raise ConfigError(f"t.kind: unknown kind '{kind}'")


def parse_scenario_dict(doc: dict, source: str = "<dict>") -> ScenarioConfig:
    """Validate a parsed TOML document into a ScenarioConfig."""
    try:
        name = _req(doc, "name", str, source)
        d_a = _req(doc, "dA", int, source)
        d_b = _req(doc, "dB", int, source)
        if d_a < 1 or d_b < 1:
            raise ConfigError(f"{source}: dA and dB must be positive")
        mode = doc.get("mode", "sweep")
        if mode not in MODES:
            raise ConfigError(f"{source}.mode: '{mode}' is not one of {MODES}")
        state = _parse_state(_req(doc, "state", dict, source))
        t_spec = _parse_t(_req(doc, "t", dict, source))
        grid = doc.get("grid", {})
        lambdas = tuple(float(x) for x in grid.get("lambdas", DEFAULT_GRID))
        demon_lambda = float(grid.get("demon_lambda", 1e-3))
        tols = doc.get("tolerances", {})
        h2_rows = doc.get("t", {}).get("h2_elements")
        h2 = _complex_rows(h2_rows, 2, "t.h2_elements") if h2_rows else ()
        return ScenarioConfig(
            name=name,
            d_a=d_a,
            d_b=d_b,
            state=state,
            t=t_spec,
            mode=mode,
            lambdas=lambdas,
            demon_lambda=demon_lambda,
            kernel_tol=float(tols.get("kernel_tol", DEFAULT_KERNEL_TOL)),
            degen_tol=float(tols.get("degen_tol", DEFAULT_DEGEN_TOL)),
            commutator_tol=float(tols.get("commutator_tol", 1e-10)),
            h2_elements=h2,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_scenario_file(path) -> ScenarioConfig:
    """Parse a TOML scenario file."""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            doc = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from exc
    return parse_scenario_dict(doc, source=str(path))


# ------------------------------------------------------- built-in library

def _fullrank(x: float, y: float) -> ScenarioConfig:
    tag = f"fullrank-x{int(round(100 * x)):03d}-y{int(round(100 * y)):03d}"
    return ScenarioConfig(
        name=tag,
        d_a=2,
        d_b=2,
        state=ProductStateSpec(a_weights=(x, 1.0 - x), b_weights=(y, 1.0 - y)),
        # Exchange coupling |1,2~> <-> |2,1~>: the energy-conserving choice
        # whose closed form is |t|^2 ln(x/(1-x)) (x - y).
        t=StructuredTSpec(elements=((0, 1, 1, 0, complex(1.0)),)),
        mode="sweep",
    )


def builtin_library() -> tuple[ScenarioConfig, ...]:
    """The built-in scenario library, one entry per worked example."""
    root2 = float(np.sqrt(0.8))
    root_small = float(np.sqrt(0.2))
    scenarios = [
        ScenarioConfig(
            name="pure-product-2x2",
            d_a=2,
            d_b=2,
            state=PureStateSpec(amplitudes=((0, 0, complex(1.0)),)),
            t=StructuredTSpec(elements=((0, 0, 1, 1, complex(1.0)),)),
            mode="sweep",
        ),
    ]
    scenarios += [_fullrank(x, y) for x in (0.75, 0.6) for y in (0.0, 0.5, 1.0)]
    scenarios += [
        ScenarioConfig(
            name="thermal-ground",
            d_a=3,
            d_b=3,
            state=ThermalStateSpec(
                a_energies=(0.0, 1.0, 2.0), beta=1.0, b_index=0, b_energies=(0.0, 1.0, 2.0)
            ),
            t=StructuredTSpec(
                elements=(
                    (1, 0, 0, 1, complex(0.7)),
                    (2, 0, 0, 2, complex(0.7)),
                    (2, 0, 1, 1, complex(0.7)),
                )
            ),
            mode="sweep",
        ),
        ScenarioConfig(
            name="thermal-inverted",
            d_a=3,
            d_b=3,
            state=ThermalStateSpec(
                a_energies=(0.0, 1.0, 2.0), beta=1.0, b_index=2, b_energies=(0.0, 1.0, 2.0)
            ),
            t=StructuredTSpec(
                elements=(
                    (0, 2, 1, 1, complex(0.7)),
                    (0, 2, 2, 0, complex(0.7)),
                    (1, 2, 2, 1, complex(0.7)),
                )
            ),
            mode="sweep",
        ),
        ScenarioConfig(
            name="bell-counterexample",
            d_a=2,
            d_b=2,
            state=PureStateSpec(
                amplitudes=((0, 0, complex(root2)), (1, 1, complex(root_small)))
            ),
            t=StructuredTSpec(elements=((0, 0, 1, 1, 1j),)),
            mode="sweep",
        ),
        ScenarioConfig(
            name="unitary-on-a",
            d_a=2,
            d_b=2,
            state=PureStateSpec(amplitudes=((0, 0, complex(1.0)),)),
            t=KronATSpec(
                entries=((0, 0, complex(0.4)), (1, 1, complex(-0.2)), (0, 1, complex(0.8, 0.3)))
            ),
            mode="sweep",
        ),
        ScenarioConfig(
            name="superselection-protected",
            d_a=2,
            d_b=2,
            state=PureStateSpec(amplitudes=((0, 0, complex(1.0)),)),
            t=RandomBlockedTSpec(seed=7, a_blocks=((0,), (1,))),
            mode="probe",
        ),
        ScenarioConfig(
            name="guarantee-diag-3x3",
            d_a=3,
            d_b=3,
            state=DiagonalStateSpec(
                weights=(
                    (0.22, 0.13, 0.10),
                    (0.20, 0.18, 0.17),
                    (0.0, 0.0, 0.0),
                )
            ),
            t=RandomTSpec(seed=11),
            mode="probe",
        ),
    ]
    return tuple(scenarios)


def builtin(name: str) -> ScenarioConfig:
    """Look up one built-in scenario by name."""
    for cfg in builtin_library():
        if cfg.name == name:
            return cfg
    raise ConfigError(f"no built-in scenario named '{name}'")
