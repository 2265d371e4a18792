"""Player-match panel: ingestion, indexing, and team structure.

One observation is one player in one match, linked to a team within that
match. The panel maps opaque string ids to dense integer ids once at
ingestion and keeps flat numpy arrays for everything downstream; a built
panel is treated as immutable.

The outcome column is binary (the ``toxic`` label) for real telemetry. The
simulator can instead emit a real-valued latent outcome in a ``y_latent``
column; the panel carries either through the same arrays and remembers which
kind it holds.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._parallel import chunked, ordered_map
from .errors import (
    DuplicateObservation,
    MalformedRecord,
    MissingPartyMetadata,
    TeamSizeMismatch,
)

MODES = ("duos", "trios", "quads")
TEAM_SIZE = {"duos": 2, "trios": 3, "quads": 4}
MODE_OF_SIZE = {2: "duos", 3: "trios", 4: "quads"}

CSV_FIELDS = ("match_id", "mode", "team_id", "player_id", "toxic", "party_id")


@dataclass(frozen=True)
class MatchRecord:
    """One player's appearance in one match.

    ``y`` is the outcome: 0/1 for binary panels, a real latent value for
    simulator output in latent mode. ``party_id`` is set only when the player
    queued into this match as part of a premade party.
    """

    match_id: str
    mode: str
    team_id: str
    player_id: str
    y: float
    party_id: str | None = None


@dataclass(frozen=True)
class PanelSummary:
    n_matches: int
    n_players: int
    n_observations: int
    mean_y: float | None

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_matches": self.n_matches,
                "n_players": self.n_players,
                "n_observations": self.n_observations,
                "mean_y": self.mean_y,
            },
            sort_keys=True,
        )


class Panel:
    """Indexed player-match panel with team structure.

    Attributes
    ----------
    players, matches : list of str
        Dense id -> original id. The reverse maps are ``player_index`` and
        ``match_index``.
    obs_match, obs_player, obs_team : int64 arrays
        Dense match / player / team id per observation, in ingestion order.
    obs_y : float64 array
        Outcome per observation.
    obs_party : int64 array
        Dense party id per observation, -1 when the player queued alone.
    team_match, team_size : int64 arrays
        Per dense team id: owning match and member count.
    match_team_size : int64 array
        Nominal team size (2/3/4) implied by each match's mode.
    binary_outcome : bool
        True when ``obs_y`` holds 0/1 toxicity labels.
    """

    def __init__(self) -> None:
        self.players: list[str] = []
        self.matches: list[str] = []
        self.parties: list[str] = []
        self.team_ids: list[str] = []
        self.player_index: dict[str, int] = {}
        self.match_index: dict[str, int] = {}
        self.obs_match = np.empty(0, dtype=np.int64)
        self.obs_player = np.empty(0, dtype=np.int64)
        self.obs_team = np.empty(0, dtype=np.int64)
        self.obs_y = np.empty(0, dtype=np.float64)
        self.obs_party = np.empty(0, dtype=np.int64)
        self.team_match = np.empty(0, dtype=np.int64)
        self.team_size = np.empty(0, dtype=np.int64)
        self.match_team_size = np.empty(0, dtype=np.int64)
        self.binary_outcome = True

    # -- basic shape --------------------------------------------------------

    @property
    def n_obs(self) -> int:
        return self.obs_y.size

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def n_matches(self) -> int:
        return len(self.matches)

    @property
    def n_teams(self) -> int:
        return self.team_match.size

    def mode_of_match(self, match_idx: int) -> str:
        return MODE_OF_SIZE[int(self.match_team_size[match_idx])]

    @property
    def team_complete(self) -> np.ndarray:
        """Boolean per team: member count equals the mode's team size."""
        return self.team_size == self.match_team_size[self.team_match]

    def has_party_metadata(self) -> bool:
        return bool(np.any(self.obs_party >= 0))

    # -- export -------------------------------------------------------------

    def _records_at(self, indices: np.ndarray) -> list[MatchRecord]:
        out = []
        for i in indices:
            party = self.obs_party[i]
            out.append(
                MatchRecord(
                    match_id=self.matches[self.obs_match[i]],
                    mode=self.mode_of_match(self.obs_match[i]),
                    team_id=self.team_ids[self.obs_team[i]],
                    player_id=self.players[self.obs_player[i]],
                    y=float(self.obs_y[i]),
                    party_id=self.parties[party] if party >= 0 else None,
                )
            )
        return out

    def _canonical_order(self) -> np.ndarray:
        return np.lexsort((np.arange(self.n_obs), self.obs_team, self.obs_match))

    def to_records(self) -> list[MatchRecord]:
        """Canonical record stream: match order, then team, then arrival."""
        return self._records_at(self._canonical_order())

    def subpanel(self, obs_mask: np.ndarray) -> "Panel":
        """Rebuild a panel from a subset of observations (re-densified)."""
        order = self._canonical_order()
        records = self._records_at(order[obs_mask[order]])
        return build_panel(records, binary=self.binary_outcome)


def build_panel(records: Iterable[MatchRecord], binary: bool = True) -> Panel:
    """Ingest a record stream into an indexed panel.

    Validates as it goes: a player may appear at most once per match, a
    match's records must agree on mode, and no team may exceed its mode's
    size. Undersized (incomplete) teams are kept and flagged; eligibility
    filtering drops them later so ingestion never silently loses data.

    Raises
    ------
    DuplicateObservation, TeamSizeMismatch, MalformedRecord
    """
    p = Panel()
    p.binary_outcome = binary

    team_index: dict[tuple[int, str], int] = {}
    party_index: dict[str, int] = {}
    seen: set[tuple[int, int]] = set()

    obs_match: list[int] = []
    obs_player: list[int] = []
    obs_team: list[int] = []
    obs_y: list[float] = []
    obs_party: list[int] = []
    team_match: list[int] = []
    team_count: list[int] = []
    match_size: list[int] = []

    for rec in records:
        if rec.mode not in TEAM_SIZE:
            raise MalformedRecord(f"unknown mode {rec.mode!r} in match {rec.match_id!r}")
        if binary and rec.y not in (0, 1):
            raise MalformedRecord(
                f"toxic label must be 0 or 1, got {rec.y!r} "
                f"(match {rec.match_id!r}, player {rec.player_id!r})"
            )
        size = TEAM_SIZE[rec.mode]

        m = p.match_index.get(rec.match_id)
        if m is None:
            m = len(p.matches)
            p.match_index[rec.match_id] = m
            p.matches.append(rec.match_id)
            match_size.append(size)
        elif match_size[m] != size:
            raise MalformedRecord(
                f"match {rec.match_id!r} carries conflicting modes"
            )

        j = p.player_index.get(rec.player_id)
        if j is None:
            j = len(p.players)
            p.player_index[rec.player_id] = j
            p.players.append(rec.player_id)

        if (m, j) in seen:
            raise DuplicateObservation(
                f"player {rec.player_id!r} appears twice in match {rec.match_id!r}"
            )
        seen.add((m, j))

        t = team_index.get((m, rec.team_id))
        if t is None:
            t = len(team_match)
            team_index[(m, rec.team_id)] = t
            p.team_ids.append(rec.team_id)
            team_match.append(m)
            team_count.append(0)
        if team_count[t] >= size:
            raise TeamSizeMismatch(
                f"team {rec.team_id!r} in match {rec.match_id!r} exceeds "
                f"{rec.mode} size {size}"
            )
        team_count[t] += 1

        if rec.party_id is None:
            g = -1
        else:
            g = party_index.get(rec.party_id)
            if g is None:
                g = len(p.parties)
                party_index[rec.party_id] = g
                p.parties.append(rec.party_id)

        obs_match.append(m)
        obs_player.append(j)
        obs_team.append(t)
        obs_y.append(float(rec.y))
        obs_party.append(g)

    p.obs_match = np.asarray(obs_match, dtype=np.int64)
    p.obs_player = np.asarray(obs_player, dtype=np.int64)
    p.obs_team = np.asarray(obs_team, dtype=np.int64)
    p.obs_y = np.asarray(obs_y, dtype=np.float64)
    p.obs_party = np.asarray(obs_party, dtype=np.int64)
    p.team_match = np.asarray(team_match, dtype=np.int64)
    p.team_size = np.asarray(team_count, dtype=np.int64)
    p.match_team_size = np.asarray(match_size, dtype=np.int64)
    return p


def panel_summary(panel: Panel) -> PanelSummary:
    """Counts plus mean outcome; mean is None for an empty panel."""
    n = panel.n_obs
    mean_y = float(np.sum(panel.obs_y) / n) if n else None
    return PanelSummary(
        n_matches=panel.n_matches,
        n_players=panel.n_players,
        n_observations=n,
        mean_y=mean_y,
    )


def filter_mode(panel: Panel, mode: str) -> Panel:
    """Sub-panel holding only matches of the given mode."""
    if mode not in TEAM_SIZE:
        raise ValueError(f"unknown mode {mode!r}")
    keep = panel.match_team_size[panel.obs_match] == TEAM_SIZE[mode]
    return panel.subpanel(keep)


def filter_algorithmic_pairs(panel: Panel) -> Panel:
    """Sub-panel of duo teams whose members did not queue together.

    A duo is algorithmic iff its two members do not share a non-null
    party id; solo queuers (absent party) and members of two distinct
    parties both qualify. Non-duo matches and incomplete duos are dropped.

    Raises
    ------
    MissingPartyMetadata
        If no record in the panel carried a party id, the premade/algorithmic
        distinction cannot be made at all.
    """
    if not panel.has_party_metadata():
        raise MissingPartyMetadata(
            "no record carries a party id; cannot identify premade pairs"
        )
    is_duo_obs = panel.match_team_size[panel.obs_match] == 2

    # a duo is premade iff both members report the same non-null party:
    # equivalently min == max >= 0 over the team's party ids
    min_party = np.full(panel.n_teams, np.iinfo(np.int64).max)
    max_party = np.full(panel.n_teams, np.iinfo(np.int64).min)
    np.minimum.at(min_party, panel.obs_team, panel.obs_party)
    np.maximum.at(max_party, panel.obs_team, panel.obs_party)
    premade = (min_party == max_party) & (min_party >= 0)

    keep_team = panel.team_complete & ~premade
    keep = is_duo_obs & keep_team[panel.obs_team]
    return panel.subpanel(keep)


# -- file formats -----------------------------------------------------------


def _parse_csv_rows(args: tuple[list[str], int, bool]) -> list[MatchRecord]:
    lines, first_lineno, binary = args
    out = []
    for offset, row in enumerate(csv.reader(lines)):
        if not row:
            continue
        if len(row) != 6:
            raise MalformedRecord(
                f"line {first_lineno + offset}: expected 6 fields, got {len(row)}"
            )
        match_id, mode, team_id, player_id, y_text, party = row
        try:
            y = float(y_text)
        except ValueError as exc:
            raise MalformedRecord(
                f"line {first_lineno + offset}: bad outcome {y_text!r}"
            ) from exc
        out.append(
            MatchRecord(
                match_id=match_id,
                mode=mode,
                team_id=team_id,
                player_id=player_id,
                y=y,
                party_id=party or None,
            )
        )
    return out


def _parse_jsonl_rows(args: tuple[list[str], int, bool]) -> list[MatchRecord]:
    lines, first_lineno, binary = args
    y_key = "toxic" if binary else "y_latent"
    out = []
    for offset, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            y = float(obj[y_key])
            rec = MatchRecord(
                match_id=str(obj["match_id"]),
                mode=str(obj["mode"]),
                team_id=str(obj["team_id"]),
                player_id=str(obj["player_id"]),
                y=y,
                party_id=(str(obj["party_id"]) if obj.get("party_id") else None),
            )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise MalformedRecord(
                f"line {first_lineno + offset}: {exc}"
            ) from exc
        out.append(rec)
    return out


def read_records(path: str | os.PathLike, workers: int = 1) -> tuple[list[MatchRecord], bool]:
    """Read a CSV or JSONL record file.

    Format is chosen by extension (.jsonl vs anything else = CSV). Returns
    the records plus whether the outcome column was binary ``toxic`` or the
    simulator's latent ``y_latent``. Parsing is sharded across workers;
    shards are reassembled in file order so the result never depends on the
    worker count.
    """
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()

    if path.endswith(".jsonl"):
        binary = True
        for line in lines:
            if line.strip():
                binary = "y_latent" not in json.loads(line)
                break
        parse, data, first = _parse_jsonl_rows, lines, 1
    else:
        if not lines:
            return [], True
        header = next(csv.reader([lines[0]]))
        if header[:4] != list(CSV_FIELDS[:4]) or header[5] != "party_id" or \
                header[4] not in ("toxic", "y_latent"):
            raise MalformedRecord(f"unexpected CSV header {header!r}")
        binary = header[4] == "toxic"
        parse, data, first = _parse_csv_rows, lines[1:], 2

    chunks = chunked(data, 20000)
    args = []
    lineno = first
    for chunk in chunks:
        args.append((list(chunk), lineno, binary))
        lineno += len(chunk)
    parsed = ordered_map(parse, args, workers=workers)
    records = [rec for chunk in parsed for rec in chunk]
    return records, binary


def _format_y(y: float, binary: bool) -> str:
    return str(int(y)) if binary else repr(y)


def write_records(
    path: str | os.PathLike,
    records: Sequence[MatchRecord],
    binary: bool = True,
) -> None:
    """Write records as CSV or JSONL (by extension), UTF-8, deterministic."""
    path = os.fspath(path)
    y_key = "toxic" if binary else "y_latent"
    if path.endswith(".jsonl"):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                obj = {
                    "match_id": rec.match_id,
                    "mode": rec.mode,
                    "team_id": rec.team_id,
                    "player_id": rec.player_id,
                    y_key: (int(rec.y) if binary else rec.y),
                    "party_id": rec.party_id,
                }
                fh.write(json.dumps(obj, sort_keys=True) + "\n")
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS[:4] + (y_key, "party_id"))
        for rec in records:
            writer.writerow(
                (
                    rec.match_id,
                    rec.mode,
                    rec.team_id,
                    rec.player_id,
                    _format_y(rec.y, binary),
                    rec.party_id or "",
                )
            )
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
