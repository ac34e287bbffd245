"""Line-based ``key = value`` run configuration."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError, InvalidInputError
from .expr import ExprSpec

SYSTEMS = ("flat-s3", "s2-curve", "vacuum")
MESH_FORMATS = ("obj", "csv", "both", "none")
CURVES = ("great-circle", "small-circle")

DEFAULT_TOLERANCES = {
    "per_degree": 5e-4,
    "sampled_family": 2e-3,
    "mc": 2e-3,
    "holonomy": 1e-5,
    "orthogonality": 1e-8,
    "gauss_curvature": 1e-3,
    "gauss_ratio": 1e-3,
    "metric_scaling": 1e-12,
    "twist": 1e-12,
    "reality": 1e-12,
    "vp_membership": 1e-10,
    "closed_form": 1e-10,
}

_INT_KEYS = ("nx", "ny", "reorth_every")
_FLOAT_KEYS = ("x0", "y0", "hx", "hy", "latitude", "frame_rotation")
_EXPR_VARS = {"phi1": {"x"}, "phi2": {"y"}, "phi": {"x", "y"}}
_STR_KEYS = ("system", "phi1", "phi2", "phi", "seeds", "output_dir", "report", "mesh_format", "curve")


def _number(text: str) -> float:
    return float(Fraction(text)) if "/" in text else float(text)


def _imag_coeff(text: str) -> float:
    if text in ("", "+"):
        return 1.0
    if text == "-":
        return -1.0
    return _number(text)


def parse_lambda(text: str) -> complex:
    """Parse ``a``, ``bi``, ``a+bi``, ``a-i`` or fractions like ``1/2``."""
    t = text.strip().replace(" ", "").lower()
    try:
        if not t.endswith("i"):
            return complex(_number(t), 0.0)
        body = t[:-1]
        split = max((k for k, ch in enumerate(body)
                     if ch in "+-" and k > 0 and body[k - 1] != "e"), default=None)
        if split is None:
            return complex(0.0, _imag_coeff(body))
        return complex(_number(body[:split]), _imag_coeff(body[split:]))
    except (ValueError, ZeroDivisionError):
        raise InvalidInputError(f"malformed lambda {text!r}") from None


def format_lambda(lam: complex) -> str:
    lam = complex(lam)
    if lam.imag == 0:
        return repr(lam.real)
    if lam.real == 0:
        return f"{lam.imag!r}i"
    sign = "+" if lam.imag >= 0 else "-"
    return f"{lam.real!r}{sign}{abs(lam.imag)!r}i"


@dataclass
class RunConfig:
    system: str
    nx: int = 65
    ny: int = 65
    x0: float = 0.0
    y0: float = 0.0
    hx: float = 1 / 64
    hy: float = 1 / 64
    phi1: ExprSpec | None = None
    phi2: ExprSpec | None = None
    phi: ExprSpec | None = None
    lambdas: list = field(default_factory=lambda: [1.0])
    seeds: Path | None = None
    output_dir: Path = Path("loopgeom-out")
    report: str = "report.json"
    mesh_format: str = "obj"
    curve: str = "great-circle"
    latitude: float = 1.0
    frame_rotation: float = 0.0
    reorth_every: int = 32
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def echo(self) -> dict:
        """JSON-friendly view (paths relative, as written)."""
        return {
            "system": self.system,
            "grid": {"nx": self.nx, "ny": self.ny, "x0": self.x0, "y0": self.y0,
                     "hx": self.hx, "hy": self.hy},
            "phi1": self.phi1.text if self.phi1 else None,
            "phi2": self.phi2.text if self.phi2 else None,
            "phi": self.phi.text if self.phi else None,
            "lambdas": [format_lambda(v) for v in self.lambdas],
            "curve": self.curve if self.system == "s2-curve" else None,
            "tolerances": dict(sorted(self.tolerances.items())),
        }


def parse_config(text: str, base_dir=None) -> RunConfig:
    """Parse and validate; collects every problem into one :class:`ConfigError`."""
    errors = []
    values: dict = {}
    lambdas = []
    tolerances = dict(DEFAULT_TOLERANCES)
    base = Path(base_dir) if base_dir is not None else None

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append((ln, f"expected 'key = value', got {raw.strip()!r}"))
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key == "lambda":
                lam = parse_lambda(val)
                if lam == 0:
                    raise InvalidInputError("lambda must be nonzero")
                lambdas.append(lam)
            elif key.startswith("tol."):
                name = key[4:]
                if name not in DEFAULT_TOLERANCES:
                    raise InvalidInputError(f"unknown tolerance {name!r}")
                tol = float(val)
                if not tol > 0:
                    raise InvalidInputError("tolerances must be positive")
                tolerances[name] = tol
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = _number(val)
            elif key in _EXPR_VARS:
                spec = ExprSpec.parse(val, max_vars=2)
                extra = spec.variables - _EXPR_VARS[key]
                if extra:
                    raise InvalidInputError(
                        f"{key} may only use {sorted(_EXPR_VARS[key])}, got {sorted(extra)}")
                values[key] = spec
            elif key in _STR_KEYS:
                values[key] = val
            else:
                raise InvalidInputError(f"unknown key {key!r}")
            if key in values and key in _INT_KEYS + _FLOAT_KEYS + _STR_KEYS \
                    and values.get("_seen_" + key):
                raise InvalidInputError(f"duplicate key {key!r}")
            values["_seen_" + key] = True
            values["_line_" + key] = ln
        except (InvalidInputError, ValueError, ZeroDivisionError) as exc:
            errors.append((ln, str(exc)))

    def line_of(key):
        return values.get("_line_" + key, 0)

    system = values.get("system")
    if system is None:
        errors.append((0, "missing required key 'system'"))
    elif system not in SYSTEMS:
        errors.append((line_of("system"), f"unknown system {system!r}; expected one of {SYSTEMS}"))
    for key in ("nx", "ny"):
        if key in values and values[key] < (1 if key == "ny" else 2):
            errors.append((line_of(key), f"{key} must be positive (>= 2 nodes)"))
    for key in ("hx", "hy"):
        if key in values and not values[key] > 0:
            errors.append((line_of(key), f"{key} must be positive"))
    if values.get("mesh_format", "obj") not in MESH_FORMATS:
        errors.append((line_of("mesh_format"), f"mesh_format must be one of {MESH_FORMATS}"))
    if values.get("curve", "great-circle") not in CURVES:
        errors.append((line_of("curve"), f"curve must be one of {CURVES}"))
    if system == "flat-s3":
        if "phi" in values:
            if "phi1" in values or "phi2" in values:
                errors.append((line_of("phi"), "give either phi or phi1/phi2, not both"))
        else:
            for key in ("phi1", "phi2"):
                if key not in values:
                    errors.append((0, f"flat-s3 needs {key} (or phi)"))
    if system == "vacuum" and "seeds" not in values:
        errors.append((0, "vacuum needs a seeds file"))
    if "reorth_every" in values and values["reorth_every"] < 0:
        errors.append((line_of("reorth_every"), "reorth_every must be >= 0"))
    if errors:
        raise ConfigError(errors)

    kwargs = {k: v for k, v in values.items() if not k.startswith("_")}
    if system == "s2-curve":
        kwargs.setdefault("ny", 1)
    for key in ("seeds", "output_dir"):
        if key in kwargs:
            p = Path(kwargs[key])
            kwargs[key] = p if (base is None or p.is_absolute()) else base / p
    if "output_dir" not in kwargs and base is not None:
        kwargs["output_dir"] = base / "loopgeom-out"
    return RunConfig(lambdas=lambdas or [1.0], tolerances=tolerances, **kwargs)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
