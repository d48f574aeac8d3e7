import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from tokenize import TokenError
from typing import Dict, List, Optional, Tuple

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from ..lorentz_core import UNBOUNDED, DiagonalMetric
from .exceptions import MetricConfigError

logger = logging.getLogger(__name__)

X1, X2, X3 = sp.symbols("x1 x2 x3", real=True)
VARIABLES = (X1, X2, X3)
COMPONENTS = ("g11", "g22", "g33")
ALLOWED_FUNCTIONS = {sp.sin, sp.cos, sp.exp}

# decimal literals with a fraction or exponent; integers stay exact
_FLOAT_LITERAL = re.compile(r"(?<![A-Za-z_0-9.])(\d+\.\d*|\.\d+|\d+(?=[eE]))([eE][+-]?\d+)?")


def format_literal(value: float) -> str:
    """
    | Decimal text of a binary64 value with 17 significant digits, which parses back to the same value.
    """
    return f"{value:.17g}"


@dataclass
class ParsedExpression:
    """
    | Expression with its float literals lifted into constant symbols k0, k1, ... bound to exact binary64 values.
    """
    expr: sp.Expr
    constants: Dict[sp.Symbol, float] = field(default_factory=dict)

    def text(self) -> str:
        """
        | Canonical text with literals written by format_literal.
        """
        replacements = {k: sp.Symbol(format_literal(v)) for k, v in self.constants.items()}
        return str(self.expr.xreplace(replacements)).replace("**", "^")

    def compile(self, expr: Optional[sp.Expr] = None):
        expr = self.expr if expr is None else expr
        symbols = list(self.constants)
        values = [self.constants[k] for k in symbols]
        f = sp.lambdify([*VARIABLES, *symbols], expr, modules="math")

        def evaluate(x: np.ndarray) -> float:
            return float(f(float(x[0]), float(x[1]), float(x[2]), *values))

        return evaluate


def parse_expression(text: str, name: str = "expression") -> ParsedExpression:
    """
    | Parse an arithmetic expression over x1, x2, x3 with + - * / ^, parentheses, sin, cos, sqrt, exp and pi.

    :param text: expression text.
    :param name: name used in error messages.
    :return: ParsedExpression.
    """
    if not isinstance(text, str):
        raise MetricConfigError(f"{name} must be a string expression, got {type(text).__name__}")

    constants: Dict[sp.Symbol, float] = {}

    def lift(match: re.Match) -> str:
        symbol = sp.Symbol(f"k{len(constants)}", real=True)
        constants[symbol] = float(match.group(0))
        return symbol.name

    lifted = _FLOAT_LITERAL.sub(lift, text)
    namespace = {"x1": X1, "x2": X2, "x3": X3, "sin": sp.sin, "cos": sp.cos, "sqrt": sp.sqrt, "exp": sp.exp,
                 "pi": sp.pi}
    namespace.update({k.name: k for k in constants})
    try:
        expr = parse_expr(
            lifted,
            local_dict=namespace,
            global_dict={"__builtins__": {}, "Integer": sp.Integer, "Symbol": sp.Symbol, "Float": sp.Float,
                         "Rational": sp.Rational},
            transformations=standard_transformations + (convert_xor,),
        )
    except (SyntaxError, TypeError, AttributeError, NameError, sp.SympifyError, TokenError) as e:
        raise MetricConfigError(f"Cannot parse {name} '{text}': {e}")

    if not isinstance(expr, sp.Expr):
        raise MetricConfigError(f"{name} '{text}' is not an arithmetic expression")
    unknown = expr.free_symbols - set(VARIABLES) - set(constants)
    if unknown:
        raise MetricConfigError(f"{name} '{text}' uses unknown names {sorted(str(s) for s in unknown)}")
    for call in expr.atoms(sp.Function):
        if call.func not in ALLOWED_FUNCTIONS:
            raise MetricConfigError(f"{name} '{text}' uses unsupported function {call.func}")

    return ParsedExpression(expr, constants)


@dataclass
class MetricConfig:
    """
    | Parsed metric config file: three component expressions, optional partials, domain and separability.
    """
    metric_id: str
    components: Dict[str, ParsedExpression]
    partials: object = "symbolic"
    separable: Optional[bool] = None
    domain: Optional[List[Tuple[float, float]]] = None

    def is_separable(self) -> bool:
        """
        | Symbolic test: spatial components free of x3, time component free of x1 and x2.
        """
        g11, g22, g33 = (self.components[c].expr for c in COMPONENTS)
        return X3 not in g11.free_symbols and X3 not in g22.free_symbols and not ({X1, X2} & g33.free_symbols)

    def to_text(self) -> str:
        """
        | Canonical JSON text; float literals carry 17 significant digits.
        """
        doc = {"id": self.metric_id, "components": {c: self.components[c].text() for c in COMPONENTS}}
        if self.separable is not None:
            doc["separable"] = self.separable
        if self.domain is not None:
            doc["domain"] = [[lo, hi] for lo, hi in self.domain]
        if isinstance(self.partials, str):
            doc["partials"] = self.partials
        else:
            doc["partials"] = {k: v.text() for k, v in self.partials.items()}
        return json.dumps(doc, indent=2, sort_keys=True)


def _partial_key(i: int, j: int) -> str:
    return f"dg{i}{i}_dx{j}"


def parse_metric_config(doc: dict, source: str = "<config>") -> MetricConfig:
    """
    | Validate a metric config document.

    :param doc: decoded JSON object.
    :param source: file name used in messages.
    :return: MetricConfig.
    """
    if not isinstance(doc, dict):
        raise MetricConfigError(f"{source}: top level must be an object")
    comps = doc.get("components")
    if not isinstance(comps, dict):
        raise MetricConfigError(f"{source}: missing 'components' object")
    missing = [c for c in COMPONENTS if c not in comps]
    if missing:
        raise MetricConfigError(f"{source}: missing components {missing}")
    components = {c: parse_expression(comps[c], f"{source}:{c}") for c in COMPONENTS}

    partials = doc.get("partials", "symbolic")
    if isinstance(partials, dict):
        allowed = {_partial_key(i, j) for i in (1, 2, 3) for j in (1, 2, 3)}
        extra = set(partials) - allowed
        if extra:
            raise MetricConfigError(f"{source}: unknown partial keys {sorted(extra)}")
        partials = {k: parse_expression(v, f"{source}:{k}") for k, v in partials.items()}
    elif partials not in ("symbolic", "fd"):
        raise MetricConfigError(f"{source}: 'partials' must be 'symbolic', 'fd' or an object, got {partials!r}")

    domain = doc.get("domain")
    if domain is not None:
        try:
            domain = [(float(lo), float(hi)) for lo, hi in domain]
        except (TypeError, ValueError):
            raise MetricConfigError(f"{source}: 'domain' must be three [lo, hi] pairs")
        if len(domain) != 3:
            raise MetricConfigError(f"{source}: 'domain' must be three [lo, hi] pairs")

    separable = doc.get("separable")
    if separable is not None and not isinstance(separable, bool):
        raise MetricConfigError(f"{source}: 'separable' must be a boolean")

    return MetricConfig(
        metric_id=str(doc.get("id", source)),
        components=components,
        partials=partials,
        separable=separable,
        domain=domain,
    )


def build_metric(config: MetricConfig) -> DiagonalMetric:
    """
    | DiagonalMetric from a parsed config. Partials come from symbolic differentiation, from the config, or from
    central differences.
    """
    g = [config.components[c].compile() for c in COMPONENTS]

    partials = None
    if config.partials != "fd":
        table = [[None] * 3 for _ in range(3)]
        for i in range(3):
            parsed = config.components[COMPONENTS[i]]
            for j in range(3):
                given = config.partials.get(_partial_key(i + 1, j + 1)) if isinstance(config.partials, dict) else None
                derived = sp.diff(parsed.expr, VARIABLES[j])
                table[i][j] = given.compile() if given is not None else parsed.compile(derived)

        def partials(x: np.ndarray) -> np.ndarray:
            return np.array([[table[i][j](x) for j in range(3)] for i in range(3)])

    separable = config.is_separable() if config.separable is None else config.separable
    domain = tuple(config.domain) if config.domain is not None else UNBOUNDED
    logger.info(f"Built metric '{config.metric_id}' (separable={separable})")
    return DiagonalMetric(g[0], g[1], g[2], partials=partials, separable=separable, domain=domain,
                          metric_id=config.metric_id)


def load_metric_config(path) -> MetricConfig:
    """
    | Read and parse a JSON metric config file.

    :param path: file path.
    :return: MetricConfig.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise MetricConfigError(f"{path}: invalid JSON ({e})")
    return parse_metric_config(doc, str(path))


def load_metric(path) -> DiagonalMetric:
    """
    | DiagonalMetric described by a JSON metric config file.
    """
    return build_metric(load_metric_config(path))
