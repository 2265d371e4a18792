"""Shared fixture builders and brute-force oracles.

Oracles here deliberately avoid the library's vectorized code paths: they
loop over records with dicts and use math.fsum, so agreement with the
package is evidence the fast implementations are right, not a tautology.
"""

from __future__ import annotations

import math
import random
from collections import Counter

import numpy as np

from peerfx.panel import MODES, TEAM_SIZE, MatchRecord


def make_records(
    seed: int,
    *,
    n_players: int = 12,
    n_matches: int = 10,
    modes: tuple[str, ...] = MODES,
    binary: bool = True,
    teams_per_match: int = 2,
    incomplete_rate: float = 0.0,
    party_rate: float = 0.0,
) -> list[MatchRecord]:
    """Random small panel, stdlib RNG only (independent of package streams)."""
    rnd = random.Random(seed)
    records: list[MatchRecord] = []
    for i in range(n_matches):
        mode = rnd.choice(list(modes))
        size = TEAM_SIZE[mode]
        n_teams = min(teams_per_match, n_players // size)
        if n_teams == 0:
            continue
        pool = rnd.sample(range(n_players), n_teams * size)
        for t in range(n_teams):
            members = pool[t * size : (t + 1) * size]
            if incomplete_rate and size > 1 and rnd.random() < incomplete_rate:
                members = members[: rnd.randrange(1, size)]
            party = f"g{i}.{t}" if party_rate and len(members) >= 2 and rnd.random() < party_rate else None
            for slot, player in enumerate(members):
                y = float(rnd.random() < 0.4) if binary else rnd.gauss(0.3, 1.0)
                records.append(
                    MatchRecord(
                        match_id=f"m{i}",
                        mode=mode,
                        team_id=f"t{i}.{t}",
                        player_id=f"p{player}",
                        y=y,
                        party_id=party if (party is not None and slot < 2) else None,
                    )
                )
    return records


# -- counting oracles --------------------------------------------------------


def oracle_summary(records):
    n = len(records)
    mean = math.fsum(r.y for r in records) / n if n else None
    return (
        len({r.match_id for r in records}),
        len({r.player_id for r in records}),
        n,
        mean,
    )


def _team_of(records):
    return {(r.match_id, r.player_id): r.team_id for r in records}


def oracle_is_complete(records, match_id, team_id):
    rows = [r for r in records if r.match_id == match_id and r.team_id == team_id]
    return len(rows) == TEAM_SIZE[rows[0].mode]


def oracle_loo(records, teammate, focal):
    """Mean of teammate's y over matches where focal is not on their team."""
    team = _team_of(records)
    values = []
    for r in records:
        if r.player_id != teammate:
            continue
        focal_team = team.get((r.match_id, focal))
        if focal_team is not None and focal_team == r.team_id:
            continue
        values.append(r.y)
    if not values:
        return None
    return math.fsum(values) / len(values)


def oracle_team_instrument(records, focal, match_id):
    team = _team_of(records)
    team_id = team[(match_id, focal)]
    mates = [
        r.player_id
        for r in records
        if r.match_id == match_id and r.team_id == team_id and r.player_id != focal
    ]
    values = [oracle_loo(records, k, focal) for k in mates]
    if any(v is None for v in values):
        return None
    return math.fsum(values) / len(values)


def oracle_teammate_share(records, focal, match_id):
    team = _team_of(records)
    team_id = team[(match_id, focal)]
    mates = [
        r.y
        for r in records
        if r.match_id == match_id and r.team_id == team_id and r.player_id != focal
    ]
    return math.fsum(mates) / len(mates)


def oracle_eligible(records):
    """Re-derive the eligible sample: complete teams, defined instrument,
    then iterate the two-matches-per-player rule to a fixed point.

    Returns ({(player_id, match_id): (y, x, z)}, attrition 5-tuple).
    """
    complete = [
        r for r in records if oracle_is_complete(records, r.match_id, r.team_id)
    ]
    dropped_incomplete = len(records) - len(complete)

    kept = []
    dropped_undefined = 0
    for r in complete:
        z = oracle_team_instrument(records, r.player_id, r.match_id)
        if z is None:
            dropped_undefined += 1
        else:
            kept.append((r, z))

    dropped_few = 0
    while True:
        counts = Counter(r.player_id for r, _ in kept)
        lonely = {p for p, c in counts.items() if c < 2}
        if not lonely:
            break
        survivors = [(r, z) for r, z in kept if r.player_id not in lonely]
        dropped_few += len(kept) - len(survivors)
        kept = survivors

    rows = {
        (r.player_id, r.match_id): (
            r.y,
            oracle_teammate_share(records, r.player_id, r.match_id),
            z,
        )
        for r, z in kept
    }
    attrition = (len(records), dropped_incomplete, dropped_undefined, dropped_few, len(rows))
    return rows, attrition


def oracle_algorithmic_rows(records):
    """Rows on complete duo teams whose two members share no party id."""
    keep = []
    for r in records:
        if TEAM_SIZE[r.mode] != 2:
            continue
        mates = [q for q in records if q.match_id == r.match_id and q.team_id == r.team_id]
        if len(mates) != 2:
            continue
        a, b = mates
        if a.party_id is not None and a.party_id == b.party_id:
            continue
        keep.append(r)
    return keep


# -- regression oracles ------------------------------------------------------


def oracle_means_by_player(player_ids, values):
    sums: dict = {}
    counts: dict = {}
    for p, v in zip(player_ids, values):
        sums.setdefault(p, []).append(v)
    return {p: math.fsum(vs) / len(vs) for p, vs in sums.items()}


def oracle_slope(y, x):
    sxx = math.fsum(xi * xi for xi in x)
    sxy = math.fsum(xi * yi for xi, yi in zip(x, y))
    return sxy / sxx


def oracle_iv_slope(y, x, z):
    szy = math.fsum(zi * yi for zi, yi in zip(z, y))
    szx = math.fsum(zi * xi for zi, xi in zip(z, x))
    return szy / szx


def oracle_hc1_se(x, residuals, dof_absorbed=0):
    n = len(x)
    bread = math.fsum(xi * xi for xi in x)
    meat = math.fsum((xi * ei) ** 2 for xi, ei in zip(x, residuals))
    factor = n / (n - dof_absorbed - 1)
    return math.sqrt(factor * meat) / abs(bread)


def oracle_equilibrium(inputs, beta):
    """Dense linear solve of (I - beta * W) y = a with explicit peer matrix."""
    a = np.asarray(inputs, dtype=np.float64)
    m = a.size
    peer = (np.ones((m, m)) - np.eye(m)) / (m - 1)
    return np.linalg.solve(np.eye(m) - beta * peer, a)


def oracle_duo_closed_form(a1, a2, beta):
    return (
        (a1 + beta * a2) / (1 - beta * beta),
        (a2 + beta * a1) / (1 - beta * beta),
    )
