"""Mamdani fuzzy controller mapping the four motion labels to (delta, phi).

Each linguistic variable is a Ruspini partition of triangular terms with
evenly spaced peaks and saturating shoulders at the universe edges.  Rules
fire with min activation, consequents are clipped and max-aggregated, and the
crisp output is the centroid of the aggregated envelope.

The envelope is piecewise linear, so the default centroid is computed exactly
by integrating between its breakpoints; ``method="discrete"`` uses a
midpoint-rule sample grid instead.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

logger = logging.getLogger(__name__)

SIGNED_TERMS = ("NB", "NM", "ZO", "PM", "PB")
FORCE_TERMS = ("ZO", "PS", "PM", "PB")


class LinguisticVariable:
    """Named real universe covered by triangular terms.

    Parameters
    ----------
    name : str
    lo, hi : float
        Universe bounds.
    labels : sequence of str
        Term names in increasing order of their peaks.
    peaks : sequence of float, optional
        Peak abscissae; evenly spaced over [lo, hi] when omitted.
    """

    def __init__(self, name: str, lo: float, hi: float, labels: Sequence[str],
                 peaks: Sequence[float] | None = None):
        if not lo < hi:
            raise ValueError(f"{name}: universe must satisfy lo < hi")
        self.name = name
        self.lo = float(lo)
        self.hi = float(hi)
        self.labels = tuple(labels)
        if peaks is None:
            peaks = np.linspace(lo, hi, len(self.labels))
        self.peaks = np.asarray(peaks, dtype=float)
        if len(self.peaks) != len(self.labels) or len(self.labels) < 2:
            raise ValueError(f"{name}: need one peak per label and at least two labels")
        if np.any(np.diff(self.peaks) <= 0):
            raise ValueError(f"{name}: term peaks must be strictly increasing")
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    def __repr__(self):
        return f"LinguisticVariable({self.name!r}, [{self.lo}, {self.hi}], {self.labels})"

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValueError(f"{label!r} is not a term of {self.name}") from None

    def peak(self, label: str) -> float:
        return float(self.peaks[self.index(label)])

    def clamp(self, x: float) -> float:
        if x < self.lo or x > self.hi:
            logger.debug("clamping %s input %r into [%s, %s]", self.name, x, self.lo, self.hi)
            return min(max(x, self.lo), self.hi)
        return x

    def fuzzify(self, x: float) -> np.ndarray:
        """Membership of ``x`` in every term; at most two adjacent entries are nonzero."""
        x = self.clamp(float(x))
        mu = np.zeros(len(self.labels))
        p = self.peaks
        if x <= p[0]:
            mu[0] = 1.0
        elif x >= p[-1]:
            mu[-1] = 1.0
        else:
            k = int(np.searchsorted(p, x, side="right")) - 1
            w = (p[k + 1] - x) / (p[k + 1] - p[k])
            mu[k] = w
            mu[k + 1] = 1.0 - w
        return mu

    def term(self, label: str, xs: np.ndarray) -> np.ndarray:
        """Vectorized membership curve of one term."""
        return self._term(self.index(label), np.asarray(xs, dtype=float))

    def _term(self, k: int, xs: np.ndarray) -> np.ndarray:
        p = self.peaks
        left = p[k - 1] if k > 0 else None
        right = p[k + 1] if k < len(p) - 1 else None
        out = np.ones_like(xs)
        if left is not None:
            out = np.where(xs < p[k], np.clip((xs - left) / (p[k] - left), 0, 1), out)
        if right is not None:
            out = np.where(xs > p[k], np.clip((right - xs) / (right - p[k]), 0, 1), out)
        return out


@dataclass(frozen=True)
class RuleTable:
    """Consequent label for every (row term, column term) antecedent pair."""

    name: str
    row_terms: tuple[str, ...]
    col_terms: tuple[str, ...]
    consequents: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.consequents) != len(self.row_terms):
            raise ValueError(f"{self.name}: expected {len(self.row_terms)} rows")
        for row in self.consequents:
            if len(row) != len(self.col_terms):
                raise ValueError(f"{self.name}: expected {len(self.col_terms)} columns")

    def lookup(self, row: str, col: str) -> str:
        return self.consequents[self.row_terms.index(row)][self.col_terms.index(col)]


# Steering table over (moment, moment change); gait table over (force, force change).
DELTA_TABLE = RuleTable(
    "delta",
    SIGNED_TERMS,
    SIGNED_TERMS,
    (
        ("NB", "NB", "NM", "ZO", "ZO"),
        ("NB", "NM", "ZO", "PM", "PB"),
        ("NM", "ZO", "ZO", "ZO", "PM"),
        ("ZO", "PM", "ZO", "PM", "PB"),
        ("ZO", "PM", "PM", "PB", "PB"),
    ),
)

PHI_TABLE = RuleTable(
    "phi",
    FORCE_TERMS,
    SIGNED_TERMS,
    (
        ("ZO", "ZO", "ZO", "PS", "PM"),
        ("ZO", "ZO", "PS", "PM", "PM"),
        ("ZO", "PS", "PM", "PM", "PB"),
        ("PS", "PM", "PM", "PB", "PB"),
    ),
)


def default_variables() -> dict[str, LinguisticVariable]:
    return {
        "moment": LinguisticVariable("moment", -0.2, 0.2, SIGNED_TERMS),
        "moment_change": LinguisticVariable("moment_change", -3.0, 3.0, SIGNED_TERMS),
        "force": LinguisticVariable("force", 0.0, 1.0, FORCE_TERMS),
        "force_change": LinguisticVariable("force_change", -3.0, 3.0, SIGNED_TERMS),
        "delta": LinguisticVariable("delta", -50.0, 50.0, SIGNED_TERMS),
        "phi": LinguisticVariable("phi", 0.0, 1.0, FORCE_TERMS),
    }


@dataclass(frozen=True)
class FuzzyLabelSet:
    moment: str = "ZO"
    moment_change: str = "ZO"
    force: str = "ZO"
    force_change: str = "ZO"

    def __post_init__(self):
        for name, allowed in (("moment", SIGNED_TERMS), ("moment_change", SIGNED_TERMS),
                              ("force", FORCE_TERMS), ("force_change", SIGNED_TERMS)):
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} label {getattr(self, name)!r} not in {allowed}")

    def as_dict(self) -> dict[str, str]:
        return {"moment": self.moment, "moment_change": self.moment_change,
                "force": self.force, "force_change": self.force_change}

    @classmethod
    def from_mapping(cls, d: Mapping) -> "FuzzyLabelSet":
        return cls(**{k: str(d[k]) for k in ("moment", "moment_change", "force", "force_change")})


@dataclass(frozen=True)
class FuzzyInput:
    m: float
    m_dot: float
    f: float
    f_dot: float


@dataclass(frozen=True)
class ControlPair:
    delta: float
    phi: float


# --------------------------------------------------------------------------
# Inference
# --------------------------------------------------------------------------


def rule_strengths(table: RuleTable, row_var: LinguisticVariable, col_var: LinguisticVariable,
                   out_var: LinguisticVariable, x_row: float, x_col: float) -> np.ndarray:
    """Max-aggregated min activation for each output term."""
    mu_r = row_var.fuzzify(x_row)
    mu_c = col_var.fuzzify(x_col)
    strength = np.zeros(len(out_var.labels))
    for i, rlab in enumerate(table.row_terms):
        if mu_r[row_var.index(rlab)] == 0.0:
            continue
        for j, clab in enumerate(table.col_terms):
            w = min(mu_r[row_var.index(rlab)], mu_c[col_var.index(clab)])
            if w > 0.0:
                k = out_var.index(table.consequents[i][j])
                strength[k] = max(strength[k], w)
    return strength


def envelope(out_var: LinguisticVariable, strength: np.ndarray, xs: np.ndarray) -> np.ndarray:
    agg = np.zeros_like(xs, dtype=float)
    for k, s in enumerate(strength):
        if s > 0:
            agg = np.maximum(agg, np.minimum(s, out_var._term(k, xs)))
    return agg


def _exact_centroid(out_var: LinguisticVariable, strength: np.ndarray) -> float:
    p = out_var.peaks
    pts = [out_var.lo, out_var.hi, *p]
    pts += list((p[:-1] + p[1:]) / 2.0)
    for s in set(float(v) for v in strength if 0 < v < 1):
        # where each rising/falling edge reaches the clip level s
        pts += list(p[:-1] + s * np.diff(p))
        pts += list(p[1:] - s * np.diff(p))
    xs = np.unique(np.clip(pts, out_var.lo, out_var.hi))
    f = envelope(out_var, strength, xs)
    a, b = xs[:-1], xs[1:]
    fa, fb = f[:-1], f[1:]
    area = ((fa + fb) / 2.0 * (b - a)).sum()
    moment = ((b - a) / 6.0 * (a * (2 * fa + fb) + b * (fa + 2 * fb))).sum()
    if area <= 0:
        raise RuntimeError("aggregated output membership is empty")
    return float(moment / area)


def _discrete_centroid(out_var: LinguisticVariable, strength: np.ndarray, n_samples: int) -> float:
    h = (out_var.hi - out_var.lo) / n_samples
    xs = out_var.lo + (np.arange(n_samples) + 0.5) * h
    agg = envelope(out_var, strength, xs)
    total = agg.sum()
    if total <= 0:
        raise RuntimeError("aggregated output membership is empty")
    return float((agg * xs).sum() / total)


def infer_and_defuzzify(table: RuleTable, row_var: LinguisticVariable, col_var: LinguisticVariable,
                        out_var: LinguisticVariable, x_row: float, x_col: float,
                        method: str = "exact", n_samples: int = 1001) -> float:
    strength = rule_strengths(table, row_var, col_var, out_var, x_row, x_col)
    if method == "exact":
        return _exact_centroid(out_var, strength)
    if method == "discrete":
        return _discrete_centroid(out_var, strength, n_samples)
    raise ValueError(f"unknown defuzzification method {method!r}")


def labels_to_crisp(labels: FuzzyLabelSet, variables: Mapping[str, LinguisticVariable] | None = None) -> FuzzyInput:
    v = variables or default_variables()
    return FuzzyInput(
        v["moment"].peak(labels.moment),
        v["moment_change"].peak(labels.moment_change),
        v["force"].peak(labels.force),
        v["force_change"].peak(labels.force_change),
    )


class FuzzyController(BaseEstimator):
    """Two-table fuzzy controller with an estimator interface.

    ``fit`` validates the rule tables against the variables and freezes the
    engine; ``predict`` maps crisp antecedents ``(m, m_dot, f, f_dot)`` row-wise
    to ``(delta, phi)``.

    Parameters
    ----------
    delta_table, phi_table : RuleTable, optional
        Defaults reproduce the published rule tables.
    method : {"exact", "discrete"}
        Centroid integration scheme.
    n_samples : int
        Sample count for ``method="discrete"``.
    variables : mapping of str to LinguisticVariable, optional
        Overrides for the default variables, keyed by name.
    """

    def __init__(self, delta_table=None, phi_table=None, method="exact", n_samples=1001, variables=None):
        self.variables = variables
        self.delta_table = delta_table
        self.phi_table = phi_table
        self.method = method
        self.n_samples = n_samples

    def fit(self, X=None, y=None):
        self.variables_ = {**default_variables(), **dict(self.variables or {})}
        self.delta_table_ = self.delta_table or DELTA_TABLE
        self.phi_table_ = self.phi_table or PHI_TABLE
        if self.method not in ("exact", "discrete"):
            raise ValueError(f"unknown defuzzification method {self.method!r}")
        for table, row, col, out in ((self.delta_table_, "moment", "moment_change", "delta"),
                                     (self.phi_table_, "force", "force_change", "phi")):
            v = self.variables_
            if set(table.row_terms) != set(v[row].labels) or set(table.col_terms) != set(v[col].labels):
                raise ValueError(f"table {table.name} does not cover the {row}/{col} terms")
            for r in table.consequents:
                for lab in r:
                    v[out].index(lab)
        return self

    def _pair(self, m, m_dot, f, f_dot) -> tuple[float, float]:
        v = self.variables_
        delta = infer_and_defuzzify(self.delta_table_, v["moment"], v["moment_change"], v["delta"],
                                    m, m_dot, self.method, self.n_samples)
        phi = infer_and_defuzzify(self.phi_table_, v["force"], v["force_change"], v["phi"],
                                  f, f_dot, self.method, self.n_samples)
        return delta, phi

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "variables_")
        X = check_array(X, ensure_min_features=4)
        if X.shape[1] != 4:
            raise ValueError(f"expected 4 columns (m, m_dot, f, f_dot), got {X.shape[1]}")
        return np.array([self._pair(*row) for row in X])

    def evaluate(self, labels: FuzzyLabelSet) -> ControlPair:
        check_is_fitted(self, "variables_")
        x = labels_to_crisp(labels, self.variables_)
        return ControlPair(*self._pair(x.m, x.m_dot, x.f, x.f_dot))


_DEFAULT = None


def evaluate(labels: FuzzyLabelSet) -> ControlPair:
    """Label set to control pair with the default controller."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = FuzzyController().fit()
    return _DEFAULT.evaluate(labels)


# --------------------------------------------------------------------------
# Rule-table text format
# --------------------------------------------------------------------------
#
#   table delta
#   rows NB NM ZO PM PB
#   cols NB NM ZO PM PB
#   NB: NB NB NM ZO ZO
#   ...
#   end
#
# Blank lines and '#' comments are ignored.


def format_rule_tables(tables: Sequence[RuleTable] = (DELTA_TABLE, PHI_TABLE)) -> str:
    lines = []
    for t in tables:
        lines.append(f"table {t.name}")
        lines.append("rows " + " ".join(t.row_terms))
        lines.append("cols " + " ".join(t.col_terms))
        for r, row in zip(t.row_terms, t.consequents):
            lines.append(f"{r}: " + " ".join(row))
        lines.append("end")
        lines.append("")
    return "\n".join(lines)


def parse_rule_tables(text: str) -> dict[str, RuleTable]:
    tables: dict[str, RuleTable] = {}
    name = rows = cols = None
    body: list[tuple[str, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("var "):
            continue
        if line.startswith("table "):
            name, rows, cols, body = line.split()[1], None, None, []
        elif line.startswith("rows "):
            rows = tuple(line.split()[1:])
        elif line.startswith("cols "):
            cols = tuple(line.split()[1:])
        elif line == "end":
            if name is None or rows is None or cols is None:
                raise ValueError(f"line {lineno}: incomplete table header")
            tables[name] = RuleTable(name, rows, cols, tuple(body))
            name = None
        else:
            m = re.match(r"^(\w+):\s*(.*)$", line)
            if not m or name is None or rows is None:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}")
            if m.group(1) != rows[len(body)]:
                raise ValueError(f"line {lineno}: expected row {rows[len(body)]}, got {m.group(1)}")
            body.append(tuple(m.group(2).split()))
    if name is not None:
        raise ValueError("unterminated table block")
    return tables


def format_variables(variables: Mapping[str, LinguisticVariable] | None = None) -> str:
    """One ``var NAME LO HI LABEL... [peaks P...]`` line per variable."""
    lines = []
    for v in (variables or default_variables()).values():
        line = f"var {v.name} {v.lo!r} {v.hi!r} " + " ".join(v.labels)
        even = np.linspace(v.lo, v.hi, len(v.labels))
        if not np.allclose(v.peaks, even, rtol=0, atol=1e-12):
            line += " peaks " + " ".join(f"{p!r}" for p in v.peaks.tolist())
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_variables(text: str) -> dict[str, LinguisticVariable]:
    """Read the ``var`` lines of a fuzzy spec; other lines are ignored."""
    out: dict[str, LinguisticVariable] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        words = raw.split("#", 1)[0].split()
        if not words or words[0] != "var":
            continue
        if len(words) < 6:
            raise ValueError(f"line {lineno}: var needs a name, two bounds and at least two labels")
        name, rest = words[1], words[4:]
        try:
            lo, hi = float(words[2]), float(words[3])
            peaks = None
            if "peaks" in rest:
                k = rest.index("peaks")
                rest, peaks = rest[:k], [float(p) for p in rest[k + 1:]]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        out[name] = LinguisticVariable(name, lo, hi, rest, peaks)
    return out
