"""Within-player demeaning.

Subtracting each player's own mean from y, x, and z absorbs the player
intercepts without estimating them; regressions on the demeaned columns then
run with no intercept. Requires at least two rows per player, which the
eligibility filter guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingletonPlayer
from .instruments import EligiblePanel
from .panel import Panel


@dataclass
class DemeanedPanel:
    """Demeaned estimation columns plus the means they were built from.

    ``player_mean_*`` arrays are indexed by the source panel's dense player
    id and hold NaN for players outside the estimation sample. ``mean_y`` is
    the eligible sample's raw outcome mean (the denominator of the
    multiple-of-mean metric).
    """

    panel: Panel
    player: np.ndarray
    match: np.ndarray
    y_t: np.ndarray
    x_t: np.ndarray
    z_t: np.ndarray
    player_mean_y: np.ndarray
    player_mean_x: np.ndarray
    player_mean_z: np.ndarray
    mean_y: float

    @property
    def n_rows(self) -> int:
        return self.y_t.size

    @property
    def n_players(self) -> int:
        return int(np.sum(~np.isnan(self.player_mean_y)))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("player_id,match_id,y_demeaned,x_demeaned,z_demeaned\n")
            for i in range(self.n_rows):
                fh.write(
                    "%s,%s,%r,%r,%r\n"
                    % (
                        self.panel.players[self.player[i]],
                        self.panel.matches[self.match[i]],
                        float(self.y_t[i]),
                        float(self.x_t[i]),
                        float(self.z_t[i]),
                    )
                )


def demean(eligible: EligiblePanel) -> DemeanedPanel:
    """Replace y, x, z by their deviations from the player's own means.

    Raises
    ------
    SingletonPlayer
        If any player holds a single row; the eligibility filter upstream
        should have removed them, so this signals a pipeline bug.
    """
    n_players = eligible.panel.n_players
    counts = np.bincount(eligible.player, minlength=n_players)
    if np.any(counts == 1):
        bad = int(np.nonzero(counts == 1)[0][0])
        raise SingletonPlayer(
            f"player {eligible.panel.players[bad]!r} has a single row"
        )

    def column_means(values: np.ndarray) -> np.ndarray:
        sums = np.bincount(eligible.player, weights=values, minlength=n_players)
        with np.errstate(invalid="ignore"):
            means = sums / counts
        means[counts == 0] = np.nan
        return means

    mean_y = column_means(eligible.y)
    mean_x = column_means(eligible.x)
    mean_z = column_means(eligible.z)

    return DemeanedPanel(
        panel=eligible.panel,
        player=eligible.player,
        match=eligible.match,
        y_t=eligible.y - mean_y[eligible.player],
        x_t=eligible.x - mean_x[eligible.player],
        z_t=eligible.z - mean_z[eligible.player],
        player_mean_y=mean_y,
        player_mean_x=mean_x,
        player_mean_z=mean_z,
        mean_y=eligible.mean_y,
    )
