"""OLS, first-stage, and just-identified 2SLS on demeaned columns.

All regressions are single-regressor with no intercept (the data are
demeaned), so every estimator reduces to ratios of cross moments. Standard
errors are heteroskedasticity-robust HC1 sandwiches whose degrees-of-freedom
correction counts the absorbed player intercepts, by equivalence with the
explicit dummy-variable regression.

Every moment is reduced with ``np.sum``, whose pairwise tree over a given
array is fixed, so identical inputs give bit-identical results regardless of
worker counts upstream.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    InsufficientDof,
    WeakInstrumentWarning,
    WeakOrZeroFirstStage,
    ZeroMeanOutcome,
    ZeroVariance,
)
from .instruments import AttritionReport
from .panel import PanelSummary
from .transform import DemeanedPanel

F_RELEVANCE_THRESHOLD = 10.0


@dataclass(frozen=True)
class EstimationResult:
    beta_hat: float
    se: float
    n_obs: int
    method: str  # "ols" | "2sls"
    multiple_of_mean: float | None = None


@dataclass(frozen=True)
class FirstStageResult:
    gamma_hat: float
    se: float
    f_stat: float
    n_obs: int
    relevant: bool


def _as_column(values) -> np.ndarray:
    col = np.ascontiguousarray(values, dtype=np.float64)
    if col.ndim != 1:
        raise ValueError("expected a 1-D column")
    return col


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.size != b.size:
        raise ValueError("columns differ in length")
    if a.size < 2:
        raise ValueError("need at least 2 observations")


def _sandwich_se(
    score: np.ndarray, bread: float, residuals: np.ndarray, dof_absorbed: int
) -> float:
    n = score.size
    if n <= dof_absorbed + 1:
        raise InsufficientDof(
            f"n={n} too small for {dof_absorbed} absorbed effects plus slope"
        )
    factor = n / (n - dof_absorbed - 1)
    weighted = score * residuals
    meat = float(np.sum(weighted * weighted))
    return float(np.sqrt(factor * meat) / abs(bread))


def robust_se(x, residuals, dof_absorbed: int = 0) -> float:
    """HC1 sandwich standard error for a no-intercept single regressor.

    se^2 = [n / (n - dof_absorbed - 1)] * sum(x_i^2 e_i^2) / (sum x_i^2)^2
    where ``dof_absorbed`` counts the player intercepts absorbed upstream.
    """
    x = _as_column(x)
    e = _as_column(residuals)
    if x.size != e.size:
        raise ValueError("columns differ in length")
    bread = float(np.sum(x * x))
    if bread == 0.0:
        raise ZeroVariance("design column is identically zero")
    return _sandwich_se(x, bread, e, dof_absorbed)


def _multiple(beta: float, mean_y: float | None) -> float | None:
    if mean_y is None or mean_y <= 0:
        return None
    return beta / mean_y


def ols_fit(y_t, x_t, dof_absorbed: int = 0, mean_y: float | None = None) -> EstimationResult:
    """No-intercept OLS of demeaned y on demeaned x with robust SE."""
    y = _as_column(y_t)
    x = _as_column(x_t)
    _check_pair(y, x)
    sxx = float(np.sum(x * x))
    if sxx == 0.0:
        raise ZeroVariance("regressor has no variation")
    beta = float(np.sum(x * y)) / sxx
    residuals = y - beta * x
    se = _sandwich_se(x, sxx, residuals, dof_absorbed)
    return EstimationResult(
        beta_hat=beta,
        se=se,
        n_obs=y.size,
        method="ols",
        multiple_of_mean=_multiple(beta, mean_y),
    )


def first_stage(x_t, z_t, dof_absorbed: int = 0) -> FirstStageResult:
    """Regress the demeaned regressor on the demeaned instrument.

    The F statistic is the squared t ratio of the single instrument; the
    relevance flag applies the rule-of-thumb threshold F > 10.
    """
    x = _as_column(x_t)
    z = _as_column(z_t)
    _check_pair(x, z)
    szz = float(np.sum(z * z))
    if szz == 0.0:
        raise ZeroVariance("instrument has no variation")
    gamma = float(np.sum(z * x)) / szz
    residuals = x - gamma * z
    se = _sandwich_se(z, szz, residuals, dof_absorbed)
    if se == 0.0:
        f_stat = float("inf") if gamma != 0.0 else 0.0
    else:
        f_stat = (gamma / se) ** 2
    return FirstStageResult(
        gamma_hat=gamma,
        se=se,
        f_stat=f_stat,
        n_obs=x.size,
        relevant=f_stat > F_RELEVANCE_THRESHOLD,
    )


def tsls_fit(
    y_t, x_t, z_t, dof_absorbed: int = 0, mean_y: float | None = None
) -> EstimationResult:
    """Just-identified IV estimate: ratio of instrument cross moments.

    beta = sum(z y) / sum(z x), algebraically the two-pass 2SLS slope.
    Residuals use the actual regressor, and the sandwich scores are the
    instrument column. Warns (never errors) on a weak first stage.
    """
    y = _as_column(y_t)
    x = _as_column(x_t)
    z = _as_column(z_t)
    _check_pair(y, x)
    _check_pair(y, z)
    szx = float(np.sum(z * x))
    if szx == 0.0:
        raise WeakOrZeroFirstStage("instrument-regressor cross moment is zero")
    stage = first_stage(x, z, dof_absorbed)
    if stage.f_stat <= F_RELEVANCE_THRESHOLD:
        warnings.warn(
            f"first-stage F = {stage.f_stat:.2f} <= {F_RELEVANCE_THRESHOLD:g}",
            WeakInstrumentWarning,
            stacklevel=2,
        )
    beta = float(np.sum(z * y)) / szx
    residuals = y - beta * x
    se = _sandwich_se(z, szx, residuals, dof_absorbed)
    return EstimationResult(
        beta_hat=beta,
        se=se,
        n_obs=y.size,
        method="2sls",
        multiple_of_mean=_multiple(beta, mean_y),
    )


def fit_panel(
    demeaned: DemeanedPanel, estimator: str = "both"
) -> tuple[EstimationResult | None, FirstStageResult | None, EstimationResult | None]:
    """Run the selected estimators on a demeaned panel.

    Absorbed degrees of freedom equal the number of players in the sample;
    the multiple-of-mean denominator is the sample's raw outcome mean.
    """
    if estimator not in ("ols", "2sls", "both"):
        raise ValueError(f"unknown estimator {estimator!r}")
    dof = demeaned.n_players
    mean_y = demeaned.mean_y
    ols = stage = tsls = None
    if estimator in ("ols", "both"):
        ols = ols_fit(demeaned.y_t, demeaned.x_t, dof_absorbed=dof, mean_y=mean_y)
    if estimator in ("2sls", "both"):
        stage = first_stage(demeaned.x_t, demeaned.z_t, dof_absorbed=dof)
        tsls = tsls_fit(
            demeaned.y_t, demeaned.x_t, demeaned.z_t, dof_absorbed=dof, mean_y=mean_y
        )
    return ols, stage, tsls


# -- reporting ---------------------------------------------------------------


def format_multiple(value: float) -> str:
    return f"{value:.1f}"


@dataclass(frozen=True)
class Report:
    """Estimates plus the derived effect-size metrics, ready to serialize."""

    mean_y: float
    n_rows: int
    n_players: int
    team_size: int | None
    ols: EstimationResult | None
    first_stage: FirstStageResult | None
    tsls: EstimationResult | None
    panel: PanelSummary | None = None
    attrition: AttritionReport | None = None

    def _per_teammate(self, result: EstimationResult | None) -> float | None:
        if result is None or self.team_size is None:
            return None
        return result.beta_hat / (self.team_size - 1)

    def to_dict(self) -> dict:
        def estimate_block(result: EstimationResult | None) -> dict | None:
            if result is None:
                return None
            return {
                "estimate": result.beta_hat,
                "standard_error": result.se,
                "n_obs": result.n_obs,
                "multiple_of_mean": result.multiple_of_mean,
                "per_teammate_effect": self._per_teammate(result),
            }

        stage = None
        if self.first_stage is not None:
            stage = {
                "estimate": self.first_stage.gamma_hat,
                "standard_error": self.first_stage.se,
                "f_stat": self.first_stage.f_stat,
                "n_obs": self.first_stage.n_obs,
                "relevant": self.first_stage.relevant,
            }
        return {
            "estimation_sample": {
                "n_rows": self.n_rows,
                "n_players": self.n_players,
                "mean_y": self.mean_y,
                "team_size": self.team_size,
            },
            "panel": None if self.panel is None else json.loads(self.panel.to_json()),
            "attrition": None if self.attrition is None else self.attrition.to_dict(),
            "ols": estimate_block(self.ols),
            "first_stage": stage,
            "tsls": estimate_block(self.tsls),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_text(self) -> str:
        """Aligned table: estimates over columns, one metric per row."""
        columns = []
        if self.ols is not None:
            columns.append(("OLS", self.ols))
        if self.tsls is not None:
            columns.append(("2SLS", self.tsls))

        label_w = 34
        col_w = 12
        lines = []

        def row(label: str, cells: list[str]) -> str:
            return label.ljust(label_w) + "".join(c.rjust(col_w) for c in cells)

        if columns:
            lines.append(row("", [name for name, _ in columns]))
            lines.append(row("Estimate", [f"{r.beta_hat:.4f}" for _, r in columns]))
            lines.append(row("Standard Error", [f"({r.se:.4f})" for _, r in columns]))
            lines.append(
                row(
                    "Multiple of Average Probability",
                    [
                        "" if r.multiple_of_mean is None
                        else format_multiple(r.multiple_of_mean)
                        for _, r in columns
                    ],
                )
            )
            if self.team_size is not None:
                lines.append(
                    row(
                        "Per-Teammate Effect",
                        [f"{self._per_teammate(r):.4f}" for _, r in columns],
                    )
                )
            lines.append(row("Number of Observations", [str(r.n_obs) for _, r in columns]))
        if self.first_stage is not None:
            fs = self.first_stage
            lines.append("")
            lines.append("First Stage")
            lines.append(row("Estimate", [f"{fs.gamma_hat:.4f}"]))
            lines.append(row("Standard Error", [f"({fs.se:.4f})"]))
            lines.append(row("F Statistic", [f"{fs.f_stat:.1f}"]))
            lines.append(row("Number of Observations", [str(fs.n_obs)]))
        return "\n".join(lines) + "\n"


def report(
    *,
    mean_y: float,
    n_rows: int,
    n_players: int,
    ols: EstimationResult | None = None,
    stage: FirstStageResult | None = None,
    tsls: EstimationResult | None = None,
    team_size: int | None = None,
    panel: PanelSummary | None = None,
    attrition: AttritionReport | None = None,
) -> Report:
    """Assemble the report record; fills in any missing multiple-of-mean.

    Raises
    ------
    ZeroMeanOutcome
        The multiple-of-mean metric needs a positive outcome mean.
    """
    if mean_y <= 0:
        raise ZeroMeanOutcome(f"outcome mean {mean_y!r} is not positive")

    def with_multiple(result: EstimationResult | None) -> EstimationResult | None:
        if result is None or result.multiple_of_mean is not None:
            return result
        return EstimationResult(
            beta_hat=result.beta_hat,
            se=result.se,
            n_obs=result.n_obs,
            method=result.method,
            multiple_of_mean=result.beta_hat / mean_y,
        )

    return Report(
        mean_y=mean_y,
        n_rows=n_rows,
        n_players=n_players,
        team_size=team_size,
        ols=with_multiple(ols),
        first_stage=stage,
        tsls=with_multiple(tsls),
        panel=panel,
        attrition=attrition,
    )
