"""Leave-one-out instruments and sample eligibility.

For a focal player j and a teammate k, the instrument building block is k's
average outcome across the matches k played *without* j on their team; k and
j meeting on opposing teams does not disqualify a match. A row's instrument
is the mean of that quantity over all the row's teammates, and the row is
eligible only when it is computable for every teammate.

Eligibility additionally requires every player in the final sample to retain
at least two rows, so the within-player demeaning step downstream is always
well defined. Removal is iterated to a fixed point and every drop is counted
in an attrition report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyAfterFiltering, IncompleteTeam, UnknownPlayer
from .panel import Panel


@dataclass(frozen=True)
class AttritionReport:
    """Row drops per eligibility restriction."""

    n_input_rows: int
    dropped_incomplete_team: int
    dropped_instrument_undefined: int
    dropped_too_few_matches: int
    n_rows: int

    def to_dict(self) -> dict:
        return {
            "n_input_rows": self.n_input_rows,
            "dropped_incomplete_team": self.dropped_incomplete_team,
            "dropped_instrument_undefined": self.dropped_instrument_undefined,
            "dropped_too_few_matches": self.dropped_too_few_matches,
            "n_rows": self.n_rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class EligiblePanel:
    """Estimation-ready rows with regressor x and instrument z attached.

    ``player`` and ``match`` hold the source panel's dense ids; ``x`` is the
    share of teammates with the outcome and ``z`` the teammates' mean
    leave-one-out frequency. Every player present has at least two rows.
    """

    panel: Panel
    player: np.ndarray
    match: np.ndarray
    y: np.ndarray
    x: np.ndarray
    z: np.ndarray
    attrition: AttritionReport

    @property
    def n_rows(self) -> int:
        return self.y.size

    @property
    def n_players(self) -> int:
        return int(np.unique(self.player).size)

    @property
    def mean_y(self) -> float:
        return float(np.sum(self.y) / self.y.size)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("player_id,match_id,y,x,z\n")
            for i in range(self.n_rows):
                fh.write(
                    "%s,%s,%r,%r,%r\n"
                    % (
                        self.panel.players[self.player[i]],
                        self.panel.matches[self.match[i]],
                        float(self.y[i]),
                        float(self.x[i]),
                        float(self.z[i]),
                    )
                )


# -- single-pair operations (readable reference path) -----------------------


def _player_team_by_match(panel: Panel, j: int) -> dict[int, int]:
    rows = np.nonzero(panel.obs_player == j)[0]
    return {int(panel.obs_match[i]): int(panel.obs_team[i]) for i in rows}


def loo_frequency(panel: Panel, teammate_id: str, focal_id: str) -> float | None:
    """Teammate's mean outcome over their matches without the focal player.

    Returns None when the teammate has no such match. A match where both
    appear on different teams still counts; only sharing a team excludes it.
    """
    for pid in (teammate_id, focal_id):
        if pid not in panel.player_index:
            raise UnknownPlayer(f"player {pid!r} not in panel")
    k = panel.player_index[teammate_id]
    j = panel.player_index[focal_id]

    focal_teams = _player_team_by_match(panel, j)
    rows = np.nonzero(panel.obs_player == k)[0]
    total = 0.0
    count = 0
    for i in rows:
        m = int(panel.obs_match[i])
        if focal_teams.get(m) == int(panel.obs_team[i]):
            continue
        total += float(panel.obs_y[i])
        count += 1
    return total / count if count else None


def team_instrument(panel: Panel, focal_id: str, match_id: str) -> float | None:
    """Mean leave-one-out frequency over the focal row's teammates.

    None when the frequency is undefined for any teammate (the row is then
    ineligible). The focal player's team must be complete.
    """
    if focal_id not in panel.player_index:
        raise UnknownPlayer(f"player {focal_id!r} not in panel")
    if match_id not in panel.match_index:
        raise UnknownPlayer(f"match {match_id!r} not in panel")
    j = panel.player_index[focal_id]
    m = panel.match_index[match_id]
    row = np.nonzero((panel.obs_player == j) & (panel.obs_match == m))[0]
    if row.size == 0:
        raise ValueError(f"player {focal_id!r} has no row in match {match_id!r}")
    t = int(panel.obs_team[row[0]])
    if not panel.team_complete[t]:
        raise IncompleteTeam(
            f"team {panel.team_ids[t]!r} in match {match_id!r} is incomplete"
        )
    mates = panel.obs_player[(panel.obs_team == t) & (panel.obs_player != j)]
    values = []
    for k in mates:
        v = loo_frequency(panel, panel.players[int(k)], focal_id)
        if v is None:
            return None
        values.append(v)
    return float(np.sum(np.asarray(values)) / len(values))


# -- vectorized eligibility pipeline ----------------------------------------


def _ordered_pair_triples(panel: Panel):
    """(focal row, mate player, mate y, from-complete-team) over all teams.

    Triples from every team of size >= 2 feed the pair statistics; the
    complete-team subset is what instrument aggregation per row uses.
    """
    order = np.argsort(panel.obs_team, kind="stable")
    sizes = panel.team_size
    complete = panel.team_complete

    trip_row: list[np.ndarray] = []
    trip_mate: list[np.ndarray] = []
    trip_mate_y: list[np.ndarray] = []
    trip_complete: list[np.ndarray] = []

    # group teams of equal actual size into (n_teams, s) row matrices
    team_of_sorted = panel.obs_team[order]
    start_of_team = np.searchsorted(team_of_sorted, np.arange(panel.n_teams))
    for s in np.unique(sizes):
        if s < 2:
            continue
        teams_s = np.nonzero(sizes == s)[0]
        if teams_s.size == 0:
            continue
        mat = order[start_of_team[teams_s][:, None] + np.arange(s)[None, :]]
        comp = complete[teams_s]
        for a in range(s):
            for b in range(s):
                if a == b:
                    continue
                focal_rows = mat[:, a]
                mate_rows = mat[:, b]
                trip_row.append(focal_rows)
                trip_mate.append(panel.obs_player[mate_rows])
                trip_mate_y.append(panel.obs_y[mate_rows])
                trip_complete.append(comp)

    if not trip_row:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, np.empty(0), np.empty(0, dtype=bool)
    return (
        np.concatenate(trip_row),
        np.concatenate(trip_mate),
        np.concatenate(trip_mate_y),
        np.concatenate(trip_complete),
    )


def _row_instruments(panel: Panel) -> np.ndarray:
    """Instrument z per observation; NaN where undefined or team incomplete."""
    n = panel.n_obs
    z = np.full(n, np.nan)
    if n == 0:
        return z

    total_matches = np.bincount(panel.obs_player, minlength=panel.n_players)
    total_y = np.bincount(
        panel.obs_player, weights=panel.obs_y, minlength=panel.n_players
    )

    row, mate, mate_y, from_complete = _ordered_pair_triples(panel)
    if row.size == 0:
        return z

    focal = panel.obs_player[row]
    key = focal * np.int64(panel.n_players) + mate
    uniq, inv = np.unique(key, return_inverse=True)
    shared_count = np.bincount(inv, minlength=uniq.size)
    shared_y = np.bincount(inv, weights=mate_y, minlength=uniq.size)

    loo_den = total_matches[uniq % panel.n_players] - shared_count
    loo_num = total_y[uniq % panel.n_players] - shared_y
    with np.errstate(invalid="ignore", divide="ignore"):
        pair_loo = np.where(loo_den > 0, loo_num / np.maximum(loo_den, 1), np.nan)

    # mean of the teammates' leave-one-out values per row; NaN propagates,
    # so one undefined teammate marks the whole row undefined
    row_c = row[from_complete]
    loo_c = pair_loo[inv[from_complete]]
    z_sum = np.zeros(n)
    z_cnt = np.zeros(n, dtype=np.int64)
    np.add.at(z_sum, row_c, loo_c)
    np.add.at(z_cnt, row_c, 1)
    has = z_cnt > 0
    z[has] = z_sum[has] / z_cnt[has]
    return z


def _row_regressors(panel: Panel) -> np.ndarray:
    """Share of teammates with the outcome; NaN for incomplete teams."""
    x = np.full(panel.n_obs, np.nan)
    if panel.n_obs == 0:
        return x
    team_sum = np.bincount(
        panel.obs_team, weights=panel.obs_y, minlength=panel.n_teams
    )
    complete_obs = panel.team_complete[panel.obs_team]
    t = panel.obs_team[complete_obs]
    denom = panel.team_size[t] - 1
    x[complete_obs] = (team_sum[t] - panel.obs_y[complete_obs]) / denom
    return x


def build_eligible_panel(panel: Panel) -> EligiblePanel:
    """Apply both eligibility restrictions and attach x and z columns.

    Keeps rows in complete teams whose instrument is defined, then removes
    players with fewer than two surviving rows, iterating to a fixed point.
    x and z are computed on the raw panel before any removal, so a dropped
    player still contributes to teammates' leave-one-out frequencies.

    Raises
    ------
    EmptyAfterFiltering
        When no row survives; the data are too sparse to estimate.
    """
    if panel.n_obs == 0:
        raise EmptyAfterFiltering("panel has no observations")

    x = _row_regressors(panel)
    z = _row_instruments(panel)

    complete_obs = panel.team_complete[panel.obs_team]
    defined = ~np.isnan(z)
    mask = complete_obs & defined

    n_input = panel.n_obs
    dropped_incomplete = int(np.sum(~complete_obs))
    dropped_undefined = int(np.sum(complete_obs & ~defined))

    # fixed point of the at-least-two-rows-per-player restriction
    dropped_few = 0
    while True:
        counts = np.bincount(panel.obs_player[mask], minlength=panel.n_players)
        thin = counts == 1
        if not np.any(thin):
            break
        drop = mask & thin[panel.obs_player]
        dropped_few += int(np.sum(drop))
        mask &= ~drop

    if not np.any(mask):
        raise EmptyAfterFiltering(
            "eligibility restrictions removed every observation"
        )

    order = np.lexsort((panel.obs_team, panel.obs_match))
    keep = order[mask[order]]
    attrition = AttritionReport(
        n_input_rows=n_input,
        dropped_incomplete_team=dropped_incomplete,
        dropped_instrument_undefined=dropped_undefined,
        dropped_too_few_matches=dropped_few,
        n_rows=keep.size,
    )
    return EligiblePanel(
        panel=panel,
        player=panel.obs_player[keep].copy(),
        match=panel.obs_match[keep].copy(),
        y=panel.obs_y[keep].copy(),
        x=x[keep],
        z=z[keep],
        attrition=attrition,
    )
