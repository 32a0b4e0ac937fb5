"""YAML run configuration, validated against ``config_schema.json``."""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from importlib import resources

import jsonschema
import yaml

from .dirichlet_neumann import DnMethod
from .dynamics import IntegratorConfig
from .functionals import PhysicalParams
from .rotating import ContinuationConfig

__all__ = ["ConfigError", "RunConfig", "load_schema", "parse_config", "serialize_config"]


class ConfigError(ValueError):
    """Invalid configuration; ``diagnostics`` holds ``{line, field, message}`` records."""

    def __init__(self, diagnostics: list[dict]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(_format(d) for d in diagnostics))


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot, such as ``1e-3``."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _format(d):
    where = f"line {d['line']}: " if d.get("line") else ""
    return f"{where}{d['field']}: {d['message']}"


def load_schema() -> dict:
    return json.loads(resources.files("capdrop").joinpath("config_schema.json").read_text())


@dataclass(frozen=True)
class RunConfig:
    sigma0: float
    alpha0: float = 0.0
    N: int = 64
    seed: int = 0
    out: str = "capdrop-out"
    sweep: list = field(default_factory=list)
    dn: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    resonances: dict = field(default_factory=dict)
    branch: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    selftest: dict = field(default_factory=dict)

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(self.sigma0, self.alpha0)

    def param_sets(self) -> list[PhysicalParams]:
        """The base parameters, or the sweep items when a sweep is configured."""
        if not self.sweep:
            return [self.params]
        return [PhysicalParams(item["sigma0"], item.get("alpha0", 0.0)) for item in self.sweep]

    @property
    def dn_method(self) -> DnMethod:
        return DnMethod(kind=self.dn["kind"], order=self.dn["order"], smallness=self.dn["smallness"])

    @property
    def integrator(self) -> IntegratorConfig:
        s = self.simulate
        return IntegratorConfig(scheme=s["scheme"], dt=s["dt"], T=s["T"], monitor_every=s["monitor_every"])

    @property
    def continuation(self) -> ContinuationConfig:
        b = self.branch
        return ContinuationConfig(ell=b["ell"], kappa=b["kappa"], N=self.N, parametrization=b["parametrization"],
                                  targets=tuple(b["targets"]), branch=b["frequency"], tol=b["tol"],
                                  max_iter=b["max_iter"], full_fd=b["full_fd"])

    def to_dict(self) -> dict:
        return asdict(self)

    def sha256(self) -> str:
        """Digest of the resolved configuration, excluding where outputs are written."""
        data = self.to_dict()
        data.pop("out")
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def replace(self, **changes) -> "RunConfig":
        data = self.to_dict()
        data.update(changes)
        return RunConfig(**data)


def _fill_defaults(schema: dict, data):
    if schema.get("type") == "object" and isinstance(data, dict):
        for key, sub in schema.get("properties", {}).items():
            if key not in data and "default" in sub:
                data[key] = copy.deepcopy(sub["default"])
            if key in data:
                _fill_defaults(sub, data[key])
    elif schema.get("type") == "array" and isinstance(data, list) and "items" in schema:
        for item in data:
            _fill_defaults(schema["items"], item)
    return data


def _node_line(root, path) -> int | None:
    """1-based line of the YAML node at ``path`` (deepest existing ancestor)."""
    node, line = root, (root.start_mark.line + 1 if root is not None else None)
    for key in path:
        if isinstance(node, yaml.MappingNode):
            match = next(((k, v) for k, v in node.value if k.value == key), None)
            if match is None:
                break
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def _offending_key_line(root, error) -> tuple[str, int | None]:
    path = list(error.absolute_path)
    if error.validator == "additionalProperties":
        # point at the first unknown key rather than its parent
        parent = root
        for key in path:
            parent = next((v for k, v in parent.value if k.value == key), None) if isinstance(parent, yaml.MappingNode) \
                else parent.value[key]
        allowed = set(error.schema.get("properties", {}))
        if isinstance(parent, yaml.MappingNode):
            for k, _ in parent.value:
                if k.value not in allowed:
                    return ".".join(map(str, path + [k.value])), k.start_mark.line + 1
    return ".".join(map(str, path)) or "<root>", _node_line(root, path)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML document; missing fields take their schema defaults."""
    try:
        root = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError([{"line": mark.line + 1 if mark else None, "field": "<document>",
                            "message": str(getattr(exc, "problem", exc))}]) from exc
    if data is None:
        data = {}
    schema = load_schema()
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        diags = []
        for err in errors:
            name, line = _offending_key_line(root, err)
            diags.append({"line": line, "field": name, "message": err.message})
        raise ConfigError(diags)
    data = _fill_defaults(schema, data)
    for key in ("sigma0", "alpha0"):
        data[key] = float(data[key])
    for item in data["sweep"]:
        item["sigma0"], item["alpha0"] = float(item["sigma0"]), float(item["alpha0"])
    return RunConfig(**data)


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
