"""Synthetic match panels from a simultaneous peer-outcome model.

Each player j carries a fixed effect alpha_j. Within a team of size m the
latent outcomes solve the linear system

    y_i = a_i + beta * mean(y_k, k != i),    a_i = alpha_j(i) + eps_i,

where eps stacks an idiosyncratic draw and a team-level common shock. The
common shock makes teammate errors positively correlated, and premade
parties with homophilous fixed effects make teammate alphas correlated;
both are confounds a naive regression of y on teammate outcomes absorbs
into its slope.

Randomness is organized as keyed counter-mode streams: a handful of setup
streams (mode sequence, party assignment, fixed effects) plus two streams
per match (composition, outcome draws). Generation is therefore
parallelizable by match and byte-identical for any worker count.
"""

from __future__ import annotations

import dataclasses
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from ._parallel import chunked, ordered_map
from ._streams import (
    PHASE_COMPOSE,
    PHASE_OUTCOME,
    SETUP_ALPHAS,
    SETUP_MODES,
    SETUP_PARTIES,
    match_stream,
    setup_stream,
)
from .errors import ConfigError, InfeasibleConfig, SingularSystem
from .panel import MODES, TEAM_SIZE, MatchRecord

OUTCOME_MODES = ("binary", "linear_latent")

_PARTY_TRIES = 8  # rejection attempts before falling back to solo fill
_CHUNK_MATCHES = 1024


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _is_real(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_count(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class SimConfig:
    """Generator parameters.

    Magnitude defaults put the binary outcome mean near 0.25%, a rare-event
    scale; they are otherwise arbitrary. ``teams_per_match`` is capped by
    the population, so a 2-player duos config yields one-team matches.
    """

    n_players: int = 1000
    matches_per_player: float = 20.0
    mode_weights: dict[str, float] = field(default_factory=lambda: {"duos": 1.0})
    beta_true: float = 0.3
    alpha_mean: float = 0.002
    alpha_sd: float = 0.0008
    idio_sd: float = 0.0008
    common_shock_sd: float = 0.0003
    party_share: float = 0.0
    homophily: float = 0.0
    outcome: str = "binary"
    seed: int = 0
    teams_per_match: int = 2

    def __post_init__(self) -> None:
        _require(_is_count(self.n_players) and self.n_players >= 1, "n_players must be a positive integer")
        _require(
            _is_real(self.matches_per_player) and self.matches_per_player >= 0,
            "matches_per_player must be a nonnegative real",
        )
        _require(isinstance(self.mode_weights, dict) and self.mode_weights, "mode_weights must be a nonempty mapping")
        for mode, weight in self.mode_weights.items():
            _require(mode in MODES, f"unknown mode in mode_weights: {mode!r}")
            _require(_is_real(weight) and weight >= 0, f"weight for {mode} must be a nonnegative real")
        _require(sum(self.mode_weights.values()) > 0, "mode_weights must have positive total weight")
        _require(_is_real(self.beta_true), "beta_true must be a finite real")
        if abs(self.beta_true) >= 1:
            raise SingularSystem(f"beta_true = {self.beta_true!r} leaves the system non-invertible; need |beta| < 1")
        _require(_is_real(self.alpha_mean), "alpha_mean must be a finite real")
        for name in ("alpha_sd", "idio_sd", "common_shock_sd"):
            value = getattr(self, name)
            _require(_is_real(value) and value >= 0, f"{name} must be a nonnegative real")
        for name in ("party_share", "homophily"):
            value = getattr(self, name)
            _require(_is_real(value) and 0 <= value <= 1, f"{name} must lie in [0, 1]")
        _require(self.outcome in OUTCOME_MODES, f"outcome must be one of {OUTCOME_MODES}")
        _require(_is_count(self.seed) and 0 <= self.seed < 2**64, "seed must be an unsigned 64-bit integer")
        _require(_is_count(self.teams_per_match) and self.teams_per_match >= 1, "teams_per_match must be a positive integer")

    @classmethod
    def from_dict(cls, data: Mapping) -> SimConfig:
        if not isinstance(data, Mapping):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**dict(data))

    @classmethod
    def from_json(cls, text: str) -> SimConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class TeamRoster:
    """One team's slots; ``party`` marks the first two players as premade."""

    players: tuple[int, ...]
    party: int | None = None


@dataclass(frozen=True)
class MatchRoster:
    index: int
    mode: str
    teams: tuple[TeamRoster, ...]


@dataclass(frozen=True)
class GroundTruth:
    """Everything the generator knew, aligned with the emitted record rows."""

    beta_true: float
    alpha: np.ndarray
    row_match: np.ndarray
    row_player: np.ndarray
    row_team: np.ndarray
    row_eps: np.ndarray
    row_latent: np.ndarray

    def to_json(self) -> str:
        payload = {
            "beta_true": self.beta_true,
            "alpha": {f"p{j}": float(a) for j, a in enumerate(self.alpha)},
            "rows": {
                "match_id": [f"m{i}" for i in self.row_match.tolist()],
                "player_id": [f"p{j}" for j in self.row_player.tolist()],
                "team_id": [f"t{k}" for k in self.row_team.tolist()],
                "eps": self.row_eps.tolist(),
                "latent": self.row_latent.tolist(),
            },
        }
        return json.dumps(payload, sort_keys=True)


# -- population setup --------------------------------------------------------


def party_table(config: SimConfig) -> np.ndarray:
    """Disjoint premade pairs, shape (n_parties, 2) of player indices.

    A ``party_share`` fraction of the population is paired off, matching
    the target share of premade teams when parties and singles queue at
    the same per-player rate.
    """
    n_parties = int(config.party_share * config.n_players) // 2
    if n_parties == 0:
        return np.empty((0, 2), dtype=np.int64)
    perm = setup_stream(config.seed, SETUP_PARTIES).permutation(config.n_players)
    return perm[: 2 * n_parties].reshape(n_parties, 2).astype(np.int64)


def player_alphas(config: SimConfig) -> np.ndarray:
    """Fixed effects; within a party the pair is correlated at ``homophily``."""
    rng = setup_stream(config.seed, SETUP_ALPHAS)
    zeta = rng.standard_normal(config.n_players)
    alpha = config.alpha_mean + config.alpha_sd * zeta
    parties = party_table(config)
    if parties.shape[0] and config.homophily > 0:
        rho = config.homophily
        first, second = parties[:, 0], parties[:, 1]
        mixed = rho * zeta[first] + math.sqrt(1 - rho * rho) * zeta[second]
        alpha[second] = config.alpha_mean + config.alpha_sd * mixed
    return alpha


# -- scheduling --------------------------------------------------------------


def _teams_in_match(config: SimConfig, size: int) -> int:
    return min(config.teams_per_match, config.n_players // size)


def _mode_sequence(config: SimConfig) -> list[str]:
    target = config.n_players * config.matches_per_player
    if target <= 0:
        return []
    names = [mode for mode in MODES if config.mode_weights.get(mode, 0) > 0]
    largest = max(TEAM_SIZE[mode] for mode in names)
    if config.n_players < largest:
        raise InfeasibleConfig(
            f"{config.n_players} players cannot fill one {largest}-player team"
        )
    slots_per_match = np.array(
        [_teams_in_match(config, TEAM_SIZE[mode]) * TEAM_SIZE[mode] for mode in names],
        dtype=np.int64,
    )
    weights = np.array([config.mode_weights[mode] for mode in names], dtype=np.float64)
    # one oversized draw, then cut at the target slot count
    most_needed = int(math.ceil(target / int(slots_per_match.min())))
    rng = setup_stream(config.seed, SETUP_MODES)
    draws = rng.choice(len(names), size=most_needed, p=weights / weights.sum())
    filled = np.cumsum(slots_per_match[draws])
    n_matches = int(np.searchsorted(filled, target, side="left")) + 1
    return [names[k] for k in draws[:n_matches]]


def _fill_slots(rng, need: int, taken: set[int], n_players: int) -> list[int]:
    # small populations: shuffle the explicit complement; large: rejection
    if n_players <= 64 or n_players - len(taken) <= 4 * need:
        pool = np.array([p for p in range(n_players) if p not in taken], dtype=np.int64)
        order = rng.permutation(pool.size)[:need]
        return [int(pool[k]) for k in order]
    picked: list[int] = []
    while len(picked) < need:
        for candidate in rng.integers(0, n_players, size=2 * need + 8):
            player = int(candidate)
            if player in taken:
                continue
            taken.add(player)
            picked.append(player)
            if len(picked) == need:
                break
    return picked


def simulate_schedule(config: SimConfig) -> list[MatchRoster]:
    """Compose match rosters: party seeding plus uniform solo fill.

    Each team first tries to seat a premade party with probability
    ``party_share`` (rejecting parties with a member already in the match),
    then fills remaining slots uniformly without replacement within the
    match. Composition draws come from each match's own stream.
    """
    modes = _mode_sequence(config)
    parties = party_table(config)
    n_parties = parties.shape[0]
    matches: list[MatchRoster] = []
    for index, mode in enumerate(modes):
        size = TEAM_SIZE[mode]
        rng = match_stream(config.seed, index, PHASE_COMPOSE)
        in_match: set[int] = set()
        teams: list[TeamRoster] = []
        for _ in range(_teams_in_match(config, size)):
            members: list[int] = []
            party: int | None = None
            if n_parties and config.party_share > 0 and size >= 2:
                if rng.random() < config.party_share:
                    for _attempt in range(_PARTY_TRIES):
                        b = int(rng.integers(n_parties))
                        pa, pb = int(parties[b, 0]), int(parties[b, 1])
                        if pa not in in_match and pb not in in_match:
                            party = b
                            members = [pa, pb]
                            break
            need = size - len(members)
            if need:
                members.extend(_fill_slots(rng, need, in_match | set(members), config.n_players))
            in_match.update(members)
            teams.append(TeamRoster(tuple(members), party))
        matches.append(MatchRoster(index, mode, tuple(teams)))
    return matches


# -- outcomes ----------------------------------------------------------------


def solve_team_equilibrium(inputs, beta: float) -> np.ndarray:
    """Solve y = a + beta * peer_mean(y) exactly for one team.

    The peer-mean matrix has the ones vector with eigenvalue 1 and every
    mean-zero vector with eigenvalue -1/(m-1), so the solution splits into
    a scaled mean plus scaled deviations.
    """
    a = np.ascontiguousarray(inputs, dtype=np.float64)
    if a.ndim != 1 or a.size < 2:
        raise ValueError("need a 1-D vector of at least 2 team inputs")
    if not math.isfinite(beta) or abs(beta) >= 1:
        raise SingularSystem(f"beta = {beta!r} leaves the system non-invertible; need |beta| < 1")
    mean = float(np.sum(a)) / a.size
    return mean / (1.0 - beta) + (a - mean) / (1.0 + beta / (a.size - 1))


def _solve_rows(a: np.ndarray, team_start: np.ndarray, team_sizes: np.ndarray, beta: float) -> np.ndarray:
    latent = np.empty_like(a)
    for size in np.unique(team_sizes):
        m = int(size)
        rows = team_start[team_sizes == size][:, None] + np.arange(m)[None, :]
        block = a[rows]
        mean = block.mean(axis=1, keepdims=True)
        latent[rows] = mean / (1.0 - beta) + (block - mean) / (1.0 + beta / (m - 1))
    return latent


def _draw_chunk(config: SimConfig, matches: list[MatchRoster]) -> tuple[np.ndarray, np.ndarray]:
    binary = config.outcome == "binary"
    eps_parts: list[np.ndarray] = []
    unif_parts: list[np.ndarray] = []
    for roster in matches:
        m = TEAM_SIZE[roster.mode]
        n_teams = len(roster.teams)
        rng = match_stream(config.seed, roster.index, PHASE_OUTCOME)
        z = rng.standard_normal(n_teams * (m + 1)).reshape(n_teams, m + 1)
        eps = config.common_shock_sd * z[:, :1] + config.idio_sd * z[:, 1:]
        eps_parts.append(eps.ravel())
        if binary:
            unif_parts.append(rng.random(n_teams * m))
    empty = np.empty(0, dtype=np.float64)
    return (
        np.concatenate(eps_parts) if eps_parts else empty,
        np.concatenate(unif_parts) if unif_parts else empty,
    )


def _flatten(schedule: list[MatchRoster]):
    row_match: list[int] = []
    row_player: list[int] = []
    row_team: list[int] = []
    team_start: list[int] = []
    team_sizes: list[int] = []
    k = 0
    r = 0
    for roster in schedule:
        for team in roster.teams:
            team_start.append(r)
            team_sizes.append(len(team.players))
            for player in team.players:
                row_match.append(roster.index)
                row_player.append(player)
                row_team.append(k)
                r += 1
            k += 1
    return (
        np.asarray(row_match, dtype=np.int64),
        np.asarray(row_player, dtype=np.int64),
        np.asarray(row_team, dtype=np.int64),
        np.asarray(team_start, dtype=np.int64),
        np.asarray(team_sizes, dtype=np.int64),
    )


def generate_panel(config: SimConfig, workers: int = 1) -> tuple[list[MatchRecord], GroundTruth]:
    """Simulate a full panel; returns records plus the generating truth.

    Binary mode clips the latent outcome to [0, 1] and draws a Bernoulli;
    linear_latent emits the latent value itself so the linear model holds
    exactly. Outcome draws are independent per match, so the work is
    chunked across threads and reassembled in schedule order.
    """
    schedule = simulate_schedule(config)
    alpha = player_alphas(config)
    draws = ordered_map(
        lambda chunk: _draw_chunk(config, chunk),
        list(chunked(schedule, _CHUNK_MATCHES)),
        workers,
    )
    empty = np.empty(0, dtype=np.float64)
    eps = np.concatenate([d[0] for d in draws]) if draws else empty
    unif = np.concatenate([d[1] for d in draws]) if draws else empty

    row_match, row_player, row_team, team_start, team_sizes = _flatten(schedule)
    a = alpha[row_player] + eps if row_player.size else empty
    latent = _solve_rows(a, team_start, team_sizes, config.beta_true)
    if config.outcome == "binary":
        y = (unif < np.clip(latent, 0.0, 1.0)).astype(np.float64)
    else:
        y = latent

    records: list[MatchRecord] = []
    r = 0
    k = 0
    for roster in schedule:
        match_id = f"m{roster.index}"
        for team in roster.teams:
            team_id = f"t{k}"
            k += 1
            party_id = None if team.party is None else f"g{team.party}"
            for slot, player in enumerate(team.players):
                records.append(
                    MatchRecord(
                        match_id=match_id,
                        mode=roster.mode,
                        team_id=team_id,
                        player_id=f"p{player}",
                        y=float(y[r]),
                        party_id=party_id if slot < 2 else None,
                    )
                )
                r += 1

    truth = GroundTruth(
        beta_true=config.beta_true,
        alpha=alpha,
        row_match=row_match,
        row_player=row_player,
        row_team=row_team,
        row_eps=eps,
        row_latent=latent,
    )
    return records, truth
